//! Depth-separation demonstration: an exact two-hidden-layer implementation
//! of the pyramid max(1 - sum|x_i|, 0), gradient-descent stability of that
//! implementation, and the growth of one-hidden-layer stability norms as fits
//! of the pyramid tighten.

use crate::dataset::Dataset;
use crate::linalg::LinalgError;
use crate::network::{
    forward_shallow, forward_two_layer, grad_loss_two_layer, loss_two_layer, neuron_atoms,
    sharpness_two_layer, ShallowParams, TwoLayerParams,
};
use crate::rng::Rng;
use crate::stability::stability_norm;
use crate::training::{init_shallow, train_gd, TrainConfig, TrainStatus};

/// max(1 - sum_i |x_i|, 0). The sum accumulates in index order, matching the
/// constructed network's arithmetic bit for bit.
pub fn pyramid_value(x: &[f64]) -> f64 {
    assert!(!x.is_empty());
    (1.0 - x.iter().map(|t| t.abs()).sum::<f64>()).max(0.0)
}

/// Exact two-hidden-layer implementation of [`pyramid_value`]: layer 1 holds
/// the 2d units relu(x_i) and relu(-x_i) with zero bias (interleaved per
/// coordinate so the layer-2 sum visits |x_i| in index order), layer 2 one
/// unit with all weights -1 and bias 1, output weight 1 and bias 0.
pub fn build_two_layer_pyramid(d: usize) -> TwoLayerParams {
    assert!(d >= 1);
    let mut w1 = Vec::with_capacity(2 * d);
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; d];
            row[i] = sign;
            w1.push(row);
        }
    }
    TwoLayerParams {
        d,
        k1: 2 * d,
        k2: 1,
        w1,
        b1: vec![0.0; 2 * d],
        w2: vec![vec![-1.0; 2 * d]],
        b2: vec![1.0],
        w3: vec![1.0],
        b3: 0.0,
    }
}

/// Samples `n` points uniformly from [-1.5, 1.5]^d labeled by the pyramid,
/// rejecting draws within `1e-4` of a knot (a coordinate hyperplane or the
/// pyramid's base edge). The sampled cube strictly contains the pyramid's
/// support, so the support lies in the interior of the data hull.
pub fn sample_pyramid_dataset(d: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = Rng::from_stream(seed, 0);
    let mut xs = Vec::with_capacity(n);
    while xs.len() < n {
        let x: Vec<f64> = (0..d).map(|_| rng.uniform_symmetric() * 1.5).collect();
        let l1: f64 = x.iter().map(|t| t.abs()).sum();
        if x.iter().any(|t| t.abs() < 1e-4) || (l1 - 1.0).abs() < 1e-4 {
            continue;
        }
        xs.push(x);
    }
    let ys = xs.iter().map(|x| pyramid_value(x)).collect();
    Dataset::new(xs, ys)
}

/// Outcome of one perturb-and-redescend run around the exact pyramid net.
#[derive(Debug, Clone)]
pub struct PyramidDemoReport {
    pub d: usize,
    pub n_train: usize,
    pub perturb: f64,
    pub seed: u64,
    /// Sharpness of the exact implementation on the sampled data.
    pub lambda_max: f64,
    /// Step size actually used: eta_factor / lambda_max.
    pub eta: f64,
    pub status: TrainStatus,
    pub steps: usize,
    pub final_loss: f64,
    /// Function-space RMSE against the pyramid on 2048 fresh probe points.
    pub probe_rmse: f64,
}

/// Builds the exact net, computes its sharpness on a sampled pyramid dataset,
/// perturbs every parameter by Gaussian noise of scale `perturb`, and runs
/// full-batch GD at eta = eta_factor / lambda_max. `eta_factor` 1.0 is the
/// stable regime; 2.5 demonstrates the unstable side. With perturb = 0 the
/// exact net is a fixed point and nothing moves.
pub fn pyramid_stability_demo(
    d: usize,
    n_train: usize,
    perturb: f64,
    seed: u64,
    eta_factor: f64,
) -> Result<PyramidDemoReport, LinalgError> {
    assert!(d >= 1 && n_train > 0 && perturb >= 0.0 && eta_factor > 0.0);
    let ds = sample_pyramid_dataset(d, n_train, seed);
    let star = build_two_layer_pyramid(d);
    let lambda_max = sharpness_two_layer(&star, &ds)?;
    let eta = eta_factor / lambda_max;

    let mut flat = star.to_flat();
    let mut noise = Rng::from_stream(seed, 1);
    for w in flat.iter_mut() {
        *w += perturb * noise.standard_normal();
    }
    let mut p = TwoLayerParams::from_flat(d, 2 * d, 1, &flat);

    let max_steps = 300_000;
    let stop_loss = 1e-8;
    let all: Vec<usize> = (0..ds.n).collect();
    let mut status = TrainStatus::MaxSteps;
    let mut steps = 0;
    let mut final_loss = loss_two_layer(&p, &ds);
    for step in 0..max_steps {
        let l = loss_two_layer(&p, &ds);
        final_loss = l;
        steps = step;
        if l <= stop_loss {
            status = TrainStatus::Converged;
            break;
        }
        if !l.is_finite() || l > 1e6 {
            status = TrainStatus::Diverged;
            break;
        }
        let g = grad_loss_two_layer(&p, &ds, &all);
        let mut flat = p.to_flat();
        for (w, gi) in flat.iter_mut().zip(&g) {
            *w -= eta * gi;
        }
        p = TwoLayerParams::from_flat(d, 2 * d, 1, &flat);
    }

    let mut probe = Rng::from_stream(seed, 3);
    let m = 2048;
    let mut sq = 0.0;
    for _ in 0..m {
        let x: Vec<f64> = (0..d).map(|_| probe.uniform_symmetric() * 1.2).collect();
        let r = forward_two_layer(&p, &x) - pyramid_value(&x);
        sq += r * r;
    }
    Ok(PyramidDemoReport {
        d,
        n_train,
        perturb,
        seed,
        lambda_max,
        eta,
        status,
        steps,
        final_loss,
        probe_rmse: (sq / m as f64).sqrt(),
    })
}

/// One row of the depth-separation table: one-hidden-layer width, best fit
/// RMSE over restarts, and the stability norm of that fit.
#[derive(Debug, Clone, Copy)]
pub struct TrendRow {
    pub k: usize,
    pub fit_rmse: f64,
    pub s_theta: f64,
}

/// Jittered grid_n x grid_n sampling of the plane pyramid on [-1.5, 1.5]^2.
/// The jitter (a tenth of a cell) keeps points off the knots while the grid
/// hull still contains the support in its interior.
pub fn pyramid_grid_dataset(grid_n: usize, seed: u64) -> Dataset {
    assert!(grid_n >= 2);
    let mut rng = Rng::from_stream(seed, 0);
    let cell = 3.0 / (grid_n - 1) as f64;
    let mut xs = Vec::with_capacity(grid_n * grid_n);
    for i in 0..grid_n {
        for j in 0..grid_n {
            loop {
                let x = vec![
                    -1.5 + i as f64 * cell + 0.1 * cell * rng.uniform_symmetric(),
                    -1.5 + j as f64 * cell + 0.1 * cell * rng.uniform_symmetric(),
                ];
                let l1 = x[0].abs() + x[1].abs();
                if x.iter().all(|t| t.abs() > 1e-6) && (l1 - 1.0).abs() > 1e-6 {
                    xs.push(x);
                    break;
                }
            }
        }
    }
    let ys = xs.iter().map(|x| pyramid_value(x)).collect();
    Dataset::new(xs, ys)
}

/// Step-size ladder for the one-layer fits: retry smaller on divergence.
const FIT_ETAS: [f64; 3] = [0.08, 0.03, 0.01];

fn fit_one_layer(ds: &Dataset, k: usize, seed: u64, max_steps: usize) -> (ShallowParams, f64) {
    let p0 = init_shallow(2, k, 1.0, seed);
    let mut last = None;
    for eta in FIT_ETAS {
        let mut cfg = TrainConfig::gd(eta, max_steps, seed);
        cfg.stop_loss = 1e-12;
        let res = train_gd(&p0, ds, &cfg);
        let diverged = res.status == TrainStatus::Diverged;
        last = Some(res);
        if !diverged {
            break;
        }
    }
    let res = last.unwrap();
    let mut sq = 0.0;
    for j in 0..ds.n {
        let r = forward_shallow(&res.params, &ds.xs[j]) - ds.ys[j];
        sq += r * r;
    }
    (res.params, (sq / ds.n as f64).sqrt())
}

/// Fits one-hidden-layer nets of each width to a fixed jittered grid sampling
/// of the plane pyramid (`restarts` independent inits, best kept) and records
/// the fit RMSE next to the fit's stability norm. Deterministic in `seed`.
pub fn depth_separation_trend(
    widths: &[usize],
    grid_n: usize,
    seed: u64,
    restarts: usize,
    max_steps: usize,
) -> Vec<TrendRow> {
    assert!(widths.windows(2).all(|w| w[0] < w[1]), "widths must increase");
    assert!(restarts >= 1);
    let ds = pyramid_grid_dataset(grid_n, seed);
    let mut rows = Vec::with_capacity(widths.len());
    for &k in widths {
        let mut best: Option<(ShallowParams, f64)> = None;
        for r in 0..restarts {
            let seed_r = seed
                ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
                ^ (r as u64).wrapping_mul(0xd1b5_4a32_d192_ed03);
            let (p, rmse) = fit_one_layer(&ds, k, seed_r, max_steps);
            if best.as_ref().is_none_or(|(_, b)| rmse < *b) {
                best = Some((p, rmse));
            }
        }
        let (p, fit_rmse) = best.unwrap();
        let s_theta = stability_norm(&neuron_atoms(&p), &ds, false);
        rows.push(TrendRow { k, fit_rmse, s_theta });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pyramid_value_examples() {
        assert_eq!(pyramid_value(&[0.0, 0.0]), 1.0);
        assert_eq!(pyramid_value(&[0.5, 0.5]), 0.0);
        assert_eq!(pyramid_value(&[0.25, -0.25]), 0.5);
        assert_eq!(pyramid_value(&[2.0, 2.0]), 0.0);
    }

    #[test]
    fn built_net_matches_pyramid_exactly() {
        let mut rng = Rng::from_stream(21, 0);
        for d in [1usize, 2, 3, 5] {
            let p = build_two_layer_pyramid(d);
            assert_eq!(p.k1, 2 * d);
            for _ in 0..1000 {
                let x: Vec<f64> = (0..d).map(|_| rng.uniform_symmetric() * 2.0).collect();
                let diff = (forward_two_layer(&p, &x) - pyramid_value(&x)).abs();
                assert!(diff <= 1e-14, "d={} x={:?} diff={}", d, x, diff);
            }
        }
        let p2 = build_two_layer_pyramid(2);
        assert!((forward_two_layer(&p2, &[0.3, 0.1]) - 0.6).abs() < 1e-15);
        assert_eq!(forward_two_layer(&p2, &[2.0, 2.0]), 0.0);
    }

    #[test]
    fn built_net_interpolates_sampled_data() {
        let ds = sample_pyramid_dataset(2, 64, 7);
        let p = build_two_layer_pyramid(2);
        assert!(loss_two_layer(&p, &ds) <= 1e-16);
        let lam = sharpness_two_layer(&p, &ds).unwrap();
        assert!(lam.is_finite() && lam > 0.0);
        // eta = 1/lambda keeps the sharpness test of stability trivially true.
        assert!(lam <= 2.0 * lam * 1.05);
    }

    #[test]
    fn zero_perturbation_is_a_fixed_point() {
        let rep = pyramid_stability_demo(2, 64, 0.0, 3, 1.0).unwrap();
        assert_eq!(rep.status, TrainStatus::Converged);
        assert_eq!(rep.steps, 0);
        assert_eq!(rep.final_loss, 0.0);
        assert_eq!(rep.probe_rmse, 0.0);
    }

    #[test]
    fn small_perturbations_recover_at_stable_step_size() {
        let mut ok = 0;
        for seed in 0..10 {
            let rep = pyramid_stability_demo(2, 64, 1e-3, seed, 1.0).unwrap();
            if rep.status == TrainStatus::Converged && rep.probe_rmse <= 1e-3 {
                ok += 1;
            }
        }
        assert!(ok >= 8, "only {}/10 seeds recovered", ok);
    }

    #[test]
    fn oversized_step_size_fails_to_settle() {
        let mut failed = 0;
        for seed in 0..10 {
            let rep = pyramid_stability_demo(2, 64, 1e-3, seed, 2.5).unwrap();
            if !(rep.status == TrainStatus::Converged && rep.final_loss <= 1e-8) {
                failed += 1;
            }
        }
        assert!(failed >= 8, "only {}/10 seeds failed", failed);
    }

    #[test]
    fn trend_is_deterministic_and_small_widths_underfit() {
        let rows = depth_separation_trend(&[2, 4], 8, 5, 2, 20_000);
        let again = depth_separation_trend(&[2, 4], 8, 5, 2, 20_000);
        for (a, b) in rows.iter().zip(&again) {
            assert_eq!(a.k, b.k);
            assert_eq!(a.fit_rmse, b.fit_rmse);
            assert_eq!(a.s_theta, b.s_theta);
        }
        assert!(rows[0].fit_rmse > 0.04, "k=2 rmse {}", rows[0].fit_rmse);
    }
}
