//! Deterministic random streams for reproducible sweeps.
//!
//! Seed→stream mapping, fixed for the life of the output formats:
//! stream `k` of user seed `s` is an xorshift64* generator whose initial
//! state is the `(k+1)`-th output of a SplitMix64 sequence started at `s`
//! (zero states are replaced by the SplitMix64 increment constant).
//! Stream 0 is the default; callers that need several independent streams
//! from one seed (dataset generation vs. weight init vs. batch shuffling)
//! pass distinct `k`.
//!
//! Uniform doubles take the top 53 bits of a draw; normal variates come from
//! Box–Muller on consecutive uniforms, second variate cached. Everything is
//! integer arithmetic plus libm calls, so runs with the same seed are
//! bit-identical on a given platform.

const SPLITMIX_INC: u64 = 0x9E3779B97F4A7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_INC);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// xorshift64* stream with a cached Box–Muller variate.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
    cached_normal: Option<f64>,
}

impl Rng {
    /// Stream 0 of `seed`.
    pub fn from_seed(seed: u64) -> Self {
        Self::from_stream(seed, 0)
    }

    /// Stream `stream` of `seed`; see the module docs for the mapping.
    pub fn from_stream(seed: u64, stream: u64) -> Self {
        let mut s = seed;
        let mut state = 0;
        for _ in 0..=stream {
            state = splitmix64(&mut s);
        }
        if state == 0 {
            state = SPLITMIX_INC;
        }
        Rng {
            state,
            cached_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }

    /// Uniform in [0, 1), 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [-1, 1).
    pub fn uniform_symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    /// Standard normal via Box–Muller; consumes two uniforms per pair.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        // 1-u1 ∈ (0,1] keeps the log finite.
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Unbiased draw from 0..n via rejection sampling.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0) is empty");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}
