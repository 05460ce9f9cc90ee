//! Full-batch GD and mini-batch SGD on the half-mean-squared loss, with
//! interpolation stopping, divergence detection, and reproducible step-size
//! sweeps. RNG streams per seed: 1 drives parameter init, 2 drives batch
//! sampling; stream 0 belongs to dataset synthesis.

use crate::dataset::Dataset;
use crate::linalg::LinalgError;
use crate::network::{grad_loss, grad_loss_batch, loss, ShallowParams};
use crate::rng::Rng;
use crate::stability::{evaluate, ReportOptions, StabilityReport};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub eta: f64,
    /// Mini-batch size; 0 selects full-batch GD.
    pub batch: usize,
    pub max_steps: usize,
    pub stop_loss: f64,
    /// Consecutive epochs the full-dataset loss must stay at or below
    /// stop_loss before stopping. A GD epoch is one step.
    pub stop_patience_epochs: usize,
    pub diverge_loss: f64,
    pub seed: u64,
    pub init_scale: f64,
}

impl TrainConfig {
    pub fn gd(eta: f64, max_steps: usize, seed: u64) -> Self {
        TrainConfig {
            eta,
            batch: 0,
            max_steps,
            stop_loss: 1e-8,
            stop_patience_epochs: 1,
            diverge_loss: 1e6,
            seed,
            init_scale: 1.0,
        }
    }

    pub fn sgd(eta: f64, batch: usize, max_steps: usize, seed: u64) -> Self {
        TrainConfig {
            batch,
            stop_patience_epochs: 2000,
            ..TrainConfig::gd(eta, max_steps, seed)
        }
    }

    fn validate(&self, n: usize) {
        assert!(self.eta > 0.0, "step size must be positive");
        assert!(self.batch <= n, "batch exceeds dataset size");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    Converged,
    Diverged,
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct TrainResult<P = ShallowParams> {
    pub params: P,
    pub status: TrainStatus,
    /// Number of parameter updates performed.
    pub steps: usize,
    pub final_loss: f64,
    /// (step, full-dataset loss) samples, decimated to at most ~1000 entries.
    pub loss_trace: Vec<(usize, f64)>,
}

/// He-style baseline init: every weight and bias draws from the stream in
/// flat-layout order with std √(2/fan_in) (fan_in d for the hidden layer,
/// k for the output weights), then multiplies by `scale`; the output bias
/// stays 0. Scaling is the last operation, so the scale-s draw is exactly
/// s times the scale-1 draw.
pub fn init_shallow(d: usize, k: usize, scale: f64, seed: u64) -> ShallowParams {
    assert!(scale > 0.0, "init scale must be positive");
    let mut rng = Rng::from_stream(seed, 1);
    let std1 = (2.0 / d as f64).sqrt();
    let mut p = ShallowParams::zeros(d, k);
    for i in 0..k {
        for l in 0..d {
            p.w1[i][l] = scale * (std1 * rng.standard_normal());
        }
    }
    for i in 0..k {
        p.b1[i] = scale * (std1 * rng.standard_normal());
    }
    if k > 0 {
        let std2 = (2.0 / k as f64).sqrt();
        for i in 0..k {
            p.w2[i] = scale * (std2 * rng.standard_normal());
        }
    }
    p
}

fn trace_stride(max_steps: usize) -> usize {
    (max_steps / 1000).max(1)
}

/// Full-batch gradient descent. The loss is evaluated before each update;
/// stopping, divergence, and the trace all read that evaluation.
pub fn train_gd(p0: &ShallowParams, ds: &Dataset, cfg: &TrainConfig) -> TrainResult {
    cfg.validate(ds.n);
    assert_eq!(cfg.batch, 0, "train_gd is full-batch; use train_sgd");
    let stride = trace_stride(cfg.max_steps);
    let mut p = p0.clone();
    let mut trace = Vec::new();
    let mut hits = 0usize;
    let mut step = 0usize;
    loop {
        let l = loss(&p, ds);
        if step % stride == 0 || step == cfg.max_steps {
            if trace.last().map(|&(s, _)| s) != Some(step) {
                trace.push((step, l));
            }
        }
        if !l.is_finite() || l > cfg.diverge_loss {
            return finish(p, TrainStatus::Diverged, step, l, trace);
        }
        if l <= cfg.stop_loss {
            hits += 1;
            if hits >= cfg.stop_patience_epochs {
                return finish(p, TrainStatus::Converged, step, l, trace);
            }
        } else {
            hits = 0;
        }
        if step == cfg.max_steps {
            return finish(p, TrainStatus::MaxSteps, step, l, trace);
        }
        let g = grad_loss(&p, ds);
        let mut flat = p.to_flat();
        for (x, gi) in flat.iter_mut().zip(&g) {
            *x -= cfg.eta * gi;
        }
        p = ShallowParams::from_flat(p.d, p.k, &flat);
        step += 1;
    }
}

fn finish(
    p: ShallowParams,
    status: TrainStatus,
    steps: usize,
    final_loss: f64,
    mut trace: Vec<(usize, f64)>,
) -> TrainResult {
    if trace.last().map(|&(s, _)| s) != Some(steps) {
        trace.push((steps, final_loss));
    }
    TrainResult {
        params: p,
        status,
        steps,
        final_loss,
        loss_trace: trace,
    }
}

/// Mini-batch SGD. Each step samples `batch` indices uniformly without
/// replacement (independent across steps, stream 2 of the seed); the batch
/// is processed in ascending index order so batch = n reproduces train_gd
/// bitwise. Full-dataset loss is checked at epoch boundaries (every
/// ⌈n/batch⌉ steps) for the stop rule, divergence, and the trace.
pub fn train_sgd(p0: &ShallowParams, ds: &Dataset, cfg: &TrainConfig) -> TrainResult {
    cfg.validate(ds.n);
    assert!(cfg.batch >= 1, "train_sgd needs batch >= 1; use train_gd");
    let n = ds.n;
    let b = cfg.batch;
    let steps_per_epoch = n.div_ceil(b);
    let stride = trace_stride(cfg.max_steps);
    let mut rng = Rng::from_stream(cfg.seed, 2);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut p = p0.clone();
    let mut trace = Vec::new();
    let mut hits = 0usize;
    let mut step = 0usize;
    let mut next_trace = 0usize;
    loop {
        let l = loss(&p, ds);
        if step >= next_trace || step == cfg.max_steps {
            if trace.last().map(|&(s, _)| s) != Some(step) {
                trace.push((step, l));
            }
            next_trace = step - step % stride + stride;
        }
        if !l.is_finite() || l > cfg.diverge_loss {
            return finish(p, TrainStatus::Diverged, step, l, trace);
        }
        if l <= cfg.stop_loss {
            hits += 1;
            if hits >= cfg.stop_patience_epochs {
                return finish(p, TrainStatus::Converged, step, l, trace);
            }
        } else {
            hits = 0;
        }
        if step == cfg.max_steps {
            return finish(p, TrainStatus::MaxSteps, step, l, trace);
        }
        for _ in 0..steps_per_epoch {
            if step == cfg.max_steps {
                break;
            }
            for t in 0..b {
                let j = t + rng.below(n - t);
                idx.swap(t, j);
            }
            let mut batch: Vec<usize> = idx[..b].to_vec();
            batch.sort_unstable();
            let g = grad_loss_batch(&p, ds, &batch);
            let mut flat = p.to_flat();
            for (x, gi) in flat.iter_mut().zip(&g) {
                *x -= cfg.eta * gi;
            }
            p = ShallowParams::from_flat(p.d, p.k, &flat);
            step += 1;
            if flat_has_non_finite(&flat) {
                let l = loss(&p, ds);
                return finish(p, TrainStatus::Diverged, step, l, trace);
            }
        }
    }
}

fn flat_has_non_finite(flat: &[f64]) -> bool {
    flat.iter().any(|x| !x.is_finite())
}

/// Dispatches on cfg.batch: 0 runs GD, otherwise SGD.
pub fn train(p0: &ShallowParams, ds: &Dataset, cfg: &TrainConfig) -> TrainResult {
    if cfg.batch == 0 {
        train_gd(p0, ds, cfg)
    } else {
        train_sgd(p0, ds, cfg)
    }
}

#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub eta: f64,
    pub seed: u64,
    pub result: TrainResult,
    pub report: StabilityReport,
}

/// Trains one fresh width-k network per (eta, seed) cell and evaluates its
/// stability report. Cells run in parallel; the output order is eta-major
/// then seed, matching the input grids, and every cell is individually
/// reproducible from (eta, seed, template).
pub fn sweep(
    ds: &Dataset,
    width: usize,
    etas: &[f64],
    seeds: &[u64],
    template: &TrainConfig,
    report_opts: &ReportOptions,
) -> Result<Vec<SweepRecord>, LinalgError> {
    let cells: Vec<(f64, u64)> = etas
        .iter()
        .flat_map(|&eta| seeds.iter().map(move |&seed| (eta, seed)))
        .collect();
    cells
        .into_par_iter()
        .map(|(eta, seed)| {
            let cfg = TrainConfig {
                eta,
                seed,
                ..template.clone()
            };
            let p0 = init_shallow(ds.d, width, cfg.init_scale, seed);
            let result = train(&p0, ds, &cfg);
            let report = evaluate(&result.params, ds, eta, report_opts)?;
            Ok(SweepRecord {
                eta,
                seed,
                result,
                report,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_gaussian_regression;
    use crate::network::forward_shallow;

    fn constant_target_ds(c: f64) -> Dataset {
        Dataset::new(vec![vec![0.5], vec![-1.0], vec![2.0]], vec![c, c, c])
    }

    #[test]
    fn init_layout_and_output_bias() {
        let p = init_shallow(20, 40, 1.0, 7);
        assert_eq!(p.param_count(), 881);
        assert_eq!(p.b2, 0.0);
        assert!(p.w1.iter().flatten().all(|x| x.is_finite() && *x != 0.0));
    }

    #[test]
    fn init_scale_is_exactly_linear() {
        let p1 = init_shallow(6, 9, 1.0, 123);
        let p10 = init_shallow(6, 9, 10.0, 123);
        let f1 = p1.to_flat();
        let f10 = p10.to_flat();
        for (a, b) in f1.iter().zip(&f10) {
            assert_eq!(*b, 10.0 * *a, "scale-10 draw must be exactly 10x");
        }
    }

    #[test]
    fn init_empirical_std_matches_fan_in() {
        // 500 neurons x 20 inputs = 1e4 W1 draws.
        let (d, k) = (20, 500);
        let scale = 1.5;
        let p = init_shallow(d, k, scale, 99);
        let entries: Vec<f64> = p.w1.iter().flatten().copied().collect();
        let mean = entries.iter().sum::<f64>() / entries.len() as f64;
        let var = entries.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / entries.len() as f64;
        let target = (2.0 / d as f64).sqrt() * scale;
        assert!(
            (var.sqrt() - target).abs() < 0.05 * target,
            "std {} vs {target}",
            var.sqrt()
        );
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_shallow(5, 8, 2.0, 42).to_flat();
        let b = init_shallow(5, 8, 2.0, 42).to_flat();
        assert_eq!(a, b);
        let c = init_shallow(5, 8, 2.0, 43).to_flat();
        assert_ne!(a, c);
    }

    #[test]
    fn bias_only_gd_matches_scalar_recursion() {
        // k=0 on constant targets: loss = (b2-c)^2/2, so b_{t+1} = (1-eta)b_t + eta*c.
        let c = 1.25;
        let ds = constant_target_ds(c);
        let eta = 0.3;
        let mut cfg = TrainConfig::gd(eta, 25, 0);
        cfg.stop_loss = 0.0; // run the full budget
        let res = train_gd(&ShallowParams::zeros(1, 0), &ds, &cfg);
        let mut b = 0.0;
        for _ in 0..25 {
            b = (1.0 - eta) * b + eta * c;
        }
        assert_eq!(res.status, TrainStatus::MaxSteps);
        assert_eq!(res.steps, 25);
        assert!((res.params.b2 - b).abs() < 1e-12, "{} vs {b}", res.params.b2);
    }

    #[test]
    fn bias_only_gd_converges_below_two() {
        let ds = constant_target_ds(1.0);
        for eta in [0.5, 1.0, 1.9, 1.999] {
            let cfg = TrainConfig::gd(eta, 20_000, 0);
            let res = train_gd(&ShallowParams::zeros(1, 0), &ds, &cfg);
            assert_eq!(res.status, TrainStatus::Converged, "eta={eta}");
            assert!(res.final_loss <= cfg.stop_loss);
        }
    }

    #[test]
    fn bias_only_gd_diverges_above_two() {
        let ds = constant_target_ds(1.0);
        for eta in [2.1, 3.0] {
            let cfg = TrainConfig::gd(eta, 20_000, 0);
            let res = train_gd(&ShallowParams::zeros(1, 0), &ds, &cfg);
            assert_eq!(res.status, TrainStatus::Diverged, "eta={eta}");
        }
    }

    #[test]
    fn restart_from_minimum_stays_put() {
        let ds = constant_target_ds(0.75);
        let mut p = ShallowParams::zeros(1, 0);
        p.b2 = 0.75;
        let cfg = TrainConfig::gd(0.5, 100, 0);
        let res = train_gd(&p, &ds, &cfg);
        assert_eq!(res.status, TrainStatus::Converged);
        assert_eq!(res.steps, 0, "minimum is a fixed point");
        assert_eq!(res.params.b2, 0.75);
    }

    #[test]
    fn full_batch_sgd_reproduces_gd_bitwise() {
        let ds = gen_gaussian_regression(16, 3, 11);
        let p0 = init_shallow(3, 6, 1.0, 5);
        let mut gd_cfg = TrainConfig::gd(0.05, 40, 5);
        gd_cfg.stop_loss = 0.0;
        let mut sgd_cfg = TrainConfig::sgd(0.05, 16, 40, 5);
        sgd_cfg.stop_loss = 0.0;
        let a = train_gd(&p0, &ds, &gd_cfg);
        let b = train_sgd(&p0, &ds, &sgd_cfg);
        assert_eq!(a.params.to_flat(), b.params.to_flat());
        assert_eq!(a.final_loss, b.final_loss);
    }

    #[test]
    fn sgd_is_deterministic_in_seed() {
        let ds = gen_gaussian_regression(12, 2, 3);
        let p0 = init_shallow(2, 4, 1.0, 9);
        let cfg = TrainConfig::sgd(0.02, 4, 200, 9);
        let a = train_sgd(&p0, &ds, &cfg);
        let b = train_sgd(&p0, &ds, &cfg);
        assert_eq!(a.params.to_flat(), b.params.to_flat());
        assert_eq!(a.loss_trace, b.loss_trace);
        let other = TrainConfig { seed: 10, ..cfg };
        let c = train_sgd(&p0, &ds, &other);
        assert_ne!(a.params.to_flat(), c.params.to_flat());
    }

    #[test]
    fn sgd_interpolating_start_converges_after_patience() {
        let p = init_shallow(2, 5, 1.0, 17);
        let xs = vec![vec![0.4, -0.3], vec![1.2, 0.8], vec![-0.9, 0.1]];
        let ys: Vec<f64> = xs.iter().map(|x| forward_shallow(&p, x)).collect();
        let ds = Dataset::new(xs, ys);
        let mut cfg = TrainConfig::sgd(0.1, 2, 10_000, 17);
        cfg.stop_patience_epochs = 3;
        let res = train_sgd(&p, &ds, &cfg);
        assert_eq!(res.status, TrainStatus::Converged);
        assert!(res.final_loss <= cfg.stop_loss);
        // Every per-sample gradient is zero, so the params never move.
        assert_eq!(res.params.to_flat(), p.to_flat());
    }

    #[test]
    fn trace_starts_at_zero_and_ends_at_exit() {
        let ds = constant_target_ds(1.0);
        let cfg = TrainConfig::gd(0.5, 5000, 0);
        let res = train_gd(&ShallowParams::zeros(1, 0), &ds, &cfg);
        assert_eq!(res.loss_trace.first().map(|&(s, _)| s), Some(0));
        assert_eq!(res.loss_trace.last().map(|&(s, _)| s), Some(res.steps));
        assert!(res.loss_trace.len() <= 1002);
    }

    #[test]
    fn empty_seed_grid_gives_empty_sweep() {
        let ds = gen_gaussian_regression(8, 2, 1);
        let out = sweep(
            &ds,
            4,
            &[0.01, 0.1],
            &[],
            &TrainConfig::gd(0.01, 10, 0),
            &ReportOptions::default(),
        )
        .unwrap();
        assert!(out.is_empty());
    }
}
