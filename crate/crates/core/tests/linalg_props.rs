//! Property tests for the dense linear algebra layer: Rayleigh dominance,
//! scaling linearity, covariance PSD-ness, and agreement with an independent
//! cyclic-Jacobi decomposition written before the library implementation.

use proptest::prelude::*;
use relustab::linalg::{covariance, dot, top_eigenpair, DenseMatrix};
use relustab::rng::Rng;

/// Independent full decomposition oracle (cyclic Jacobi, returns eigenvalues).
fn oracle_eigenvalues(n: usize, a_in: &[f64]) -> Vec<f64> {
    let mut a = a_in.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() < 1e-300 {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

fn symmetric_matrix(max_dim: usize) -> impl Strategy<Value = DenseMatrix> {
    (2..=max_dim).prop_flat_map(|n| {
        prop::collection::vec(-10.0f64..10.0, n * (n + 1) / 2).prop_map(move |upper| {
            let mut m = DenseMatrix::zeros(n, n);
            let mut it = upper.into_iter();
            for i in 0..n {
                for j in i..n {
                    let e = it.next().unwrap();
                    m.set(i, j, e);
                    m.set(j, i, e);
                }
            }
            m
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn top_eigenvalue_matches_oracle(m in symmetric_matrix(8)) {
        let r = top_eigenpair(&m, 1e-10, 10_000).unwrap();
        let oracle = oracle_eigenvalues(m.rows, &m.entries)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let scale = m.frobenius_norm().max(1.0);
        prop_assert!(
            (r.value - oracle).abs() <= 1e-9 * scale,
            "top eigenvalue {} vs oracle {}", r.value, oracle
        );
    }

    #[test]
    fn rayleigh_dominance(m in symmetric_matrix(8), seed in any::<u64>()) {
        let r = top_eigenpair(&m, 1e-10, 10_000).unwrap();
        let tol = 1e-9 * m.frobenius_norm().max(1.0);
        let mut rng = Rng::from_seed(seed);
        let n = m.rows;
        for _ in 0..1000 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
            let nv = dot(&v, &v).sqrt();
            if nv < 1e-12 {
                continue;
            }
            for x in v.iter_mut() { *x /= nv; }
            let q = dot(&v, &m.matvec(&v));
            prop_assert!(q <= r.value + tol, "Rayleigh quotient {q} beats reported top {}", r.value);
        }
    }

    #[test]
    fn scaling_linearity(m in symmetric_matrix(6), c in 0.01f64..100.0) {
        let r1 = top_eigenpair(&m, 1e-12, 10_000).unwrap();
        let scaled = DenseMatrix::from_entries(
            m.rows, m.cols, m.entries.iter().map(|x| c * x).collect());
        let r2 = top_eigenpair(&scaled, 1e-12, 10_000).unwrap();
        let denom = (c * r1.value).abs().max(1e-12 * c * m.frobenius_norm().max(1.0));
        prop_assert!(
            (r2.value - c * r1.value).abs() / denom <= 1e-6,
            "λ(cM) = {} vs c·λ(M) = {}", r2.value, c * r1.value
        );
    }

    #[test]
    fn covariance_is_psd(
        pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 1..20),
        seed in any::<u64>(),
    ) {
        let cov = covariance(&pts);
        let mut rng = Rng::from_seed(seed);
        for _ in 0..200 {
            let mut v: Vec<f64> = (0..4).map(|_| rng.standard_normal()).collect();
            let nv = dot(&v, &v).sqrt();
            if nv < 1e-12 {
                continue;
            }
            for x in v.iter_mut() { *x /= nv; }
            let q = dot(&v, &cov.matvec(&v));
            prop_assert!(q >= -1e-12, "covariance Rayleigh quotient {q} < -1e-12");
        }
    }
}
