//! End-to-end acceptance checks behind the `selftest` subcommand and the
//! `acceptance` test target. Each check returns Ok(detail) or Err(detail);
//! nothing here needs network access, and the MNIST check is skipped unless
//! IDX files are supplied.

use crate::report::{config_hash, RunRow};
use crate::runs::{self, median, spearman, InitScaleSpec, MnistSpec, SweepSpec};
use relustab::analytic::{
    gaussian_isotropic_g, line_integral, radial_rho, two_point_g, two_point_rho,
    two_point_singularities, LineOpts, QuadOpts,
};
use relustab::dataset::{gen_gaussian_regression, knot_clearance, Dataset};
use relustab::network::{
    hessian_at_minimum, loss, loss_two_layer, neuron_atoms, sharpness_two_layer, tangent_features,
    ShallowParams,
};
use relustab::pyramid::{
    build_two_layer_pyramid, depth_separation_trend, pyramid_grid_dataset, pyramid_stability_demo,
};
use relustab::rng::Rng;
use relustab::stability::{g_hat, g_tilde, g_weight, TOL_EOS};
use relustab::training::{init_shallow, train, TrainConfig, TrainStatus};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

pub type Check = Result<String, String>;

fn budget(t0: Instant, limit: Duration, what: &str) -> Result<f64, String> {
    let secs = t0.elapsed().as_secs_f64();
    if t0.elapsed() > limit {
        Err(format!("{what} took {secs:.1}s, budget {}s", limit.as_secs()))
    } else {
        Ok(secs)
    }
}

/// Exact-vs-finite-difference Hessian agreement on 20 small converged minima
/// whose knots clear every training point by more than 1e-4.
pub fn hessian_matches_finite_differences() -> Check {
    let t0 = Instant::now();
    let (d, n, k) = (3usize, 5usize, 4usize);
    let mut checked = 0u32;
    let mut attempts = 0u64;
    let mut max_dev: f64 = 0.0;
    while checked < 20 {
        attempts += 1;
        if attempts > 600 {
            return Err(format!(
                "only {checked}/20 usable minima after {attempts} attempts"
            ));
        }
        let ds = gen_gaussian_regression(n, d, 1000 + attempts);
        let mut cfg = TrainConfig::gd(0.02, 800_000, attempts);
        cfg.stop_loss = 1e-13;
        let p0 = init_shallow(d, k, 1.0, attempts);
        let res = train(&p0, &ds, &cfg);
        if res.status != TrainStatus::Converged {
            continue;
        }
        let atoms = neuron_atoms(&res.params);
        if knot_clearance(&ds, &atoms) <= 1e-4 {
            continue;
        }
        let exact = hessian_at_minimum(&tangent_features(&res.params, &ds));
        let theta = res.params.to_flat();
        let p = theta.len();
        let loss_at = |flat: &[f64]| loss(&ShallowParams::from_flat(d, k, flat), &ds);
        for i in 0..p {
            let hi = 1e-5 * (1.0 + theta[i].abs());
            for j in 0..=i {
                let hj = 1e-5 * (1.0 + theta[j].abs());
                let shifted = |si: f64, sj: f64| {
                    let mut t = theta.clone();
                    t[i] += si * hi;
                    t[j] += sj * hj;
                    loss_at(&t)
                };
                let fd = (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0)
                    + shifted(-1.0, -1.0))
                    / (4.0 * hi * hj);
                max_dev = max_dev.max((fd - exact.get(i, j)).abs());
            }
        }
        checked += 1;
    }
    let secs = budget(t0, Duration::from_secs(60), "hessian check")?;
    if max_dev <= 1e-4 {
        Ok(format!(
            "20 minima, max |H_exact - H_fd| = {max_dev:.3e} <= 1e-4 ({secs:.1}s)"
        ))
    } else {
        Err(format!("max entrywise deviation {max_dev:.3e} > 1e-4"))
    }
}

/// The desk synthetic sweep shared by the sweep-based checks, built once.
fn desk() -> &'static (SweepSpec, Vec<RunRow>, f64) {
    static DESK: OnceLock<(SweepSpec, Vec<RunRow>, f64)> = OnceLock::new();
    DESK.get_or_init(|| {
        let t0 = Instant::now();
        let spec = SweepSpec::default();
        let hash = config_hash("sweep", &serde_json::to_value(&spec).unwrap());
        let rows = runs::synthetic_sweep(&spec, &hash).expect("default sweep config is valid");
        (spec, rows, t0.elapsed().as_secs_f64())
    })
}

fn converged(rows: &[RunRow]) -> impl Iterator<Item = &RunRow> {
    rows.iter().filter(|r| r.status == "converged")
}

/// Sharpness lower bound 1 + 2 S_theta <= lambda_max on certified runs of the
/// desk sweep.
pub fn sweep_lower_bound_holds() -> Check {
    let (_, rows, secs) = desk();
    if *secs > 900.0 {
        return Err(format!("desk sweep took {secs:.0}s, budget 900s"));
    }
    let mut n_conv = 0;
    let mut n_cert = 0;
    let mut viol = 0;
    let mut worst_ratio: f64 = f64::NEG_INFINITY;
    for r in converged(rows) {
        n_conv += 1;
        let (lam, s) = match (r.lambda_max, r.s_theta) {
            (Some(l), Some(s)) => (l, s),
            _ => continue,
        };
        worst_ratio = worst_ratio.max((1.0 + 2.0 * s) / lam);
        if r.certified == Some(true) {
            n_cert += 1;
            if 1.0 + 2.0 * s > lam * (1.0 + 1e-6) {
                viol += 1;
            }
        }
    }
    if viol == 0 {
        Ok(format!(
            "0 violations on {n_cert} certified of {n_conv} converged rows; \
             max (1+2S)/lambda over all converged = {worst_ratio:.4} ({secs:.0}s sweep)"
        ))
    } else {
        Err(format!("{viol} violations among {n_cert} certified rows"))
    }
}

/// Every converged desk run satisfies both stability verdicts:
/// lambda_max <= (2/eta)(1+tol) and S_theta <= 1/eta - 1/2 + tol.
pub fn sweep_stability_verdicts_hold() -> Check {
    let (_, rows, _) = desk();
    let mut n_conv = 0;
    let mut bad = 0;
    for r in converged(rows) {
        n_conv += 1;
        if r.verdict_lemma1 != Some(true) || r.verdict_thm1 != Some(true) {
            bad += 1;
        }
    }
    if n_conv == 0 {
        Err("no converged runs in the desk sweep".into())
    } else if bad == 0 {
        Ok(format!("both verdicts hold on all {n_conv} converged rows"))
    } else {
        Err(format!("{bad} of {n_conv} converged rows fail a verdict"))
    }
}

fn per_eta_medians(rows: &[RunRow], field: impl Fn(&RunRow) -> Option<f64>) -> Vec<(f64, f64)> {
    let mut etas: Vec<f64> = rows.iter().map(|r| r.eta).collect();
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    etas.iter()
        .filter_map(|&eta| {
            let vals: Vec<f64> = converged(rows)
                .filter(|r| r.eta == eta)
                .filter_map(&field)
                .collect();
            median(vals).map(|m| (eta, m))
        })
        .collect()
}

/// Larger step sizes land at minima with smaller stability norm and knots
/// farther from the data (larger normalized bias), monotone in rank.
pub fn sweep_trends_hold() -> Check {
    let (_, rows, _) = desk();
    let s_med = per_eta_medians(rows, |r| r.s_theta);
    let b_med = per_eta_medians(rows, |r| r.mean_abs_bias_bar);
    if s_med.len() < 4 {
        return Err(format!(
            "only {} eta levels have converged runs; need at least 4 for a trend",
            s_med.len()
        ));
    }
    let etas: Vec<f64> = s_med.iter().map(|p| p.0).collect();
    let svals: Vec<f64> = s_med.iter().map(|p| p.1).collect();
    let bvals: Vec<f64> = b_med.iter().map(|p| p.1).collect();
    let rho_s = spearman(&etas, &svals);
    let rho_b = spearman(&etas, &bvals);
    let detail = format!(
        "spearman(eta, median S) = {rho_s:.3} (need <= -0.8), \
         spearman(eta, median |b_bar|) = {rho_b:.3} (need >= 0.5); \
         S medians {:?}",
        svals.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>()
    );
    if rho_s <= -0.8 && rho_b >= 0.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Flattest-implementation sharpness sits between the lower bound and the
/// as-trained sharpness, and below the closed-form upper bound.
pub fn sandwich_holds() -> Check {
    let (_, rows, _) = desk();
    let mut n_checked = 0;
    let mut n_cert = 0;
    let mut viol = 0;
    let mut soft_viol = 0;
    for r in converged(rows) {
        let (Some(lam), Some(s), Some(fl), Some(up)) =
            (r.lambda_max, r.s_theta, r.flattest_sharpness, r.upper_bound)
        else {
            continue;
        };
        n_checked += 1;
        let ok = 1.0 + 2.0 * s - 1e-6 <= fl && fl <= lam + 1e-6 && fl <= up;
        if !ok {
            soft_viol += 1;
        }
        if r.certified == Some(true) {
            n_cert += 1;
            if !ok {
                viol += 1;
            }
        }
    }
    if n_checked == 0 {
        return Err("no converged rows carry a flattest sharpness".into());
    }
    if viol == 0 && soft_viol == 0 {
        Ok(format!(
            "sandwich holds on all {n_checked} converged rows with flattest enabled \
             ({n_cert} certified)"
        ))
    } else if viol == 0 {
        Ok(format!(
            "sandwich holds on all {n_cert} certified rows; {soft_viol} of {n_checked} \
             uncertified rows violate (knots touch data there)"
        ))
    } else {
        Err(format!("{viol} certified rows violate the sandwich"))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn brute_g_tilde(xs: &[Vec<f64>], v: &[f64], b: f64) -> f64 {
    let act: Vec<&Vec<f64>> = xs.iter().filter(|x| dot(x, v) > b).collect();
    if act.is_empty() {
        return 0.0;
    }
    let (n, c) = (xs.len() as f64, act.len() as f64);
    let mean_excess = act.iter().map(|x| dot(x, v) - b).sum::<f64>() / c;
    let mut mean_x = vec![0.0; v.len()];
    for x in &act {
        for (l, xv) in x.iter().enumerate() {
            mean_x[l] += xv / c;
        }
    }
    (c / n) * (c / n) * mean_excess * (dot(&mean_x, &mean_x) + 1.0).sqrt()
}

fn brute_g(xs: &[Vec<f64>], v: &[f64], b: f64) -> f64 {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    brute_g_tilde(xs, v, b).min(brute_g_tilde(xs, &neg, -b))
}

fn brute_g_hat(xs: &[Vec<f64>], v: &[f64], b: f64) -> f64 {
    let act: Vec<&Vec<f64>> = xs.iter().filter(|x| dot(x, v) > b).collect();
    if act.is_empty() {
        return 0.0;
    }
    let (n, c) = (xs.len() as f64, act.len() as f64);
    let mean_sq_excess = act
        .iter()
        .map(|x| {
            let e = dot(x, v) - b;
            e * e
        })
        .sum::<f64>()
        / c;
    let mean_sq_norm = act.iter().map(|x| dot(x, x)).sum::<f64>() / c;
    (c / n) * mean_sq_excess.sqrt() * (1.0 + mean_sq_norm).sqrt()
}

fn unit_direction(rng: &mut Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Library weight functions against independent brute-force evaluations, and
/// the closed two-point form against the empirical g on {(1,0), (-1,0)}.
pub fn weight_oracles_agree() -> Check {
    let t0 = Instant::now();
    let mut rng = Rng::from_seed(606);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = 3 + rng.below(38);
        let d = 1 + rng.below(6);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.standard_normal()).collect())
            .collect();
        let ys = vec![0.0; n];
        let ds = Dataset::new(xs.clone(), ys);
        let v = unit_direction(&mut rng, d);
        let b = 1.5 * rng.standard_normal();
        let pairs = [
            (g_tilde(&ds, &v, b), brute_g_tilde(&xs, &v, b)),
            (g_weight(&ds, &v, b), brute_g(&xs, &v, b)),
            (g_hat(&ds, &v, b), brute_g_hat(&xs, &v, b)),
        ];
        for (lib, brute) in pairs {
            let lib = lib.map_err(|e| format!("library weight evaluation failed: {e}"))?;
            let dev = (lib - brute).abs() / brute.abs().max(1.0);
            worst = worst.max(dev);
        }
    }
    let two = Dataset::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![0.0, 0.0]);
    for _ in 0..100 {
        let v = unit_direction(&mut rng, 2);
        let b = 2.0 * rng.standard_normal();
        let emp = g_weight(&two, &v, b).map_err(|e| e.to_string())?;
        let closed = two_point_g([v[0], v[1]], b);
        worst = worst.max((emp - closed).abs());
    }
    let secs = budget(t0, Duration::from_secs(60), "weight oracles")?;
    if worst <= 1e-12 {
        Ok(format!(
            "200 brute-force triples + 100 two-point draws, max deviation {worst:.2e} ({secs:.1}s)"
        ))
    } else {
        Err(format!("max deviation {worst:.2e} > 1e-12"))
    }
}

/// Numeric line integrals of the closed-form two-point density reproduce the
/// two-point g, and the Gaussian radial density has the right shape and tails.
pub fn rho_matches_g() -> Check {
    let t0 = Instant::now();
    let field = |x: [f64; 2]| two_point_rho(x).unwrap_or(f64::NAN);
    let opts = LineOpts {
        quad: QuadOpts {
            tol: 1e-7,
            ..QuadOpts::default()
        },
        singular_points: two_point_singularities(),
        exclusion_tol: 1e-3,
        window: 1e-6,
    };
    let mut rng = Rng::from_stream(707, 0);
    let mut checked = 0;
    let mut worst_rel: f64 = 0.0;
    while checked < 50 {
        let th = rng.uniform() * 2.0 * std::f64::consts::PI;
        let v = [th.cos(), th.sin()];
        let b = (rng.uniform() - 0.5) * 1.6;
        let clear = two_point_singularities()
            .iter()
            .all(|p| (v[0] * p[0] + v[1] * p[1] - b).abs() >= 0.1);
        let want = two_point_g(v, b);
        if !clear || want < 0.02 {
            continue;
        }
        let got = line_integral(&field, v, b, 2000.0, &opts)
            .map_err(|e| format!("line integral failed: {e}"))?;
        worst_rel = worst_rel.max((got.value - want).abs() / want);
        checked += 1;
    }
    if worst_rel > 2e-2 {
        return Err(format!(
            "worst relative line-integral error {worst_rel:.3e} > 2e-2"
        ));
    }
    let quad = QuadOpts::default();
    let profile = |b: f64| gaussian_isotropic_g(b);
    let radii: Vec<f64> = (0..=30).map(|i| 1e-2 * 1e3_f64.powf(i as f64 / 30.0)).collect();
    let mut prev = f64::INFINITY;
    for &r in &radii {
        let rho = radial_rho(&profile, r, &quad).map_err(|e| e.to_string())?;
        if !(rho > 0.0) {
            return Err(format!("radial density not positive at r={r}: {rho}"));
        }
        if rho >= prev {
            return Err(format!("radial density not strictly decreasing at r={r}"));
        }
        prev = rho;
    }
    for &r in &[1e2, 1e3, 1e4] {
        let rho = radial_rho(&profile, r, &quad).map_err(|e| e.to_string())?;
        if !(rho * r).is_finite() || rho * r > 1.0 {
            return Err(format!("rho(r)*r unbounded at r={r}: {}", rho * r));
        }
    }
    for &r in &[1e-4, 1e-3, 1e-2] {
        let rho = radial_rho(&profile, r, &quad).map_err(|e| e.to_string())?;
        let ratio = rho / (1.0 / r).ln();
        if !(0.05..=0.5).contains(&ratio) {
            return Err(format!("rho(r)/log(1/r) = {ratio:.3} out of range at r={r}"));
        }
    }
    let secs = budget(t0, Duration::from_secs(120), "density consistency")?;
    Ok(format!(
        "50 clear lines, worst relative error {worst_rel:.3e}; radial density positive, \
         decreasing, with bounded tails ({secs:.1}s)"
    ))
}

/// The exact two-hidden-layer pyramid net interpolates, has finite sharpness,
/// and GD at eta = 1/lambda recovers small perturbations while 2.5/lambda
/// does not.
pub fn pyramid_stability_demo_behaves() -> Check {
    let t0 = Instant::now();
    let star = build_two_layer_pyramid(2);
    let grid = pyramid_grid_dataset(12, 0);
    let fit = loss_two_layer(&star, &grid);
    if fit > 1e-16 {
        return Err(format!("exact net training loss {fit:.3e} > 1e-16"));
    }
    let lam = sharpness_two_layer(&star, &grid).map_err(|e| e.to_string())?;
    if !lam.is_finite() || lam <= 0.0 {
        return Err(format!("two-layer sharpness not finite/positive: {lam}"));
    }
    let mut recovered = 0;
    let mut failed = 0;
    for seed in 0..10 {
        let rep = pyramid_stability_demo(2, 64, 1e-3, seed, 1.0).map_err(|e| e.to_string())?;
        if rep.status == TrainStatus::Converged && rep.final_loss <= 1e-8 {
            recovered += 1;
        }
        let rep = pyramid_stability_demo(2, 64, 1e-3, seed, 2.5).map_err(|e| e.to_string())?;
        if !(rep.status == TrainStatus::Converged && rep.final_loss <= 1e-8) {
            failed += 1;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    if recovered >= 8 && failed >= 8 {
        Ok(format!(
            "loss(exact net) = {fit:.1e}, lambda = {lam:.3}; eta=1/lambda recovered {recovered}/10, \
             eta=2.5/lambda failed {failed}/10 ({secs:.0}s)"
        ))
    } else {
        Err(format!(
            "recovered {recovered}/10 at eta=1/lambda (need >= 8), \
             failed {failed}/10 at eta=2.5/lambda (need >= 8)"
        ))
    }
}

/// One-hidden-layer fits of the pyramid: stability norm grows as fit error
/// shrinks, and accurate fits exceed the two-layer stability threshold.
pub fn depth_separation_trend_holds() -> Check {
    let t0 = Instant::now();
    let widths = [4usize, 8, 16, 32, 64];
    let rows = depth_separation_trend(&widths, 12, 17, 5, 120_000);
    let grid = pyramid_grid_dataset(12, 17);
    let star = build_two_layer_pyramid(2);
    let lam = sharpness_two_layer(&star, &grid).map_err(|e| e.to_string())?;
    let threshold = lam - 0.5;
    let neg_rmse: Vec<f64> = rows.iter().map(|r| -r.fit_rmse).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.s_theta).collect();
    let rho = spearman(&neg_rmse, &s);
    let mut below = Vec::new();
    for r in &rows {
        if r.fit_rmse <= 0.05 && r.s_theta <= threshold {
            below.push((r.k, r.fit_rmse, r.s_theta));
        }
    }
    let secs = budget(t0, Duration::from_secs(1200), "depth separation")?;
    if rho > 0.0 && below.is_empty() {
        Ok(format!(
            "spearman(-rmse, S) = {rho:.2} > 0; all accurate fits exceed threshold \
             {threshold:.3} ({secs:.0}s)"
        ))
    } else {
        Err(format!(
            "spearman {rho:.2}, fits at/below threshold {threshold:.3}: {below:?}"
        ))
    }
}

/// Reduced-scale MNIST SGD runs: stability verdicts plus validation accuracy
/// at the largest step size that still converged. Skips without IDX files.
pub fn mnist_runs_pass(images: Option<&Path>, labels: Option<&Path>) -> Check {
    let (Some(images), Some(labels)) = (images, labels) else {
        return Ok("SKIP (no MNIST files supplied)".into());
    };
    let spec = MnistSpec::new(images.to_path_buf(), labels.to_path_buf());
    let hash = config_hash("mnist", &serde_json::to_value(&spec).unwrap());
    let rows = runs::mnist_sweep(&spec, &hash).map_err(|e| e.to_string())?;
    let mut n_conv = 0;
    let mut bad_verdicts = 0;
    let mut lb_viol = 0;
    for r in converged(&rows) {
        n_conv += 1;
        if r.verdict_lemma1 != Some(true) || r.verdict_thm1 != Some(true) {
            bad_verdicts += 1;
        }
        if r.certified == Some(true) {
            if let (Some(lam), Some(s)) = (r.lambda_max, r.s_theta) {
                if 1.0 + 2.0 * s > lam * (1.0 + 1e-6) {
                    lb_viol += 1;
                }
            }
        }
    }
    if n_conv == 0 {
        return Err("no MNIST run converged".into());
    }
    let top_eta = converged(&rows)
        .map(|r| r.eta)
        .fold(f64::NEG_INFINITY, f64::max);
    let accs: Vec<f64> = converged(&rows)
        .filter(|r| r.eta == top_eta)
        .filter_map(|r| r.val_accuracy)
        .collect();
    let acc = median(accs).unwrap_or(0.0);
    if bad_verdicts == 0 && lb_viol == 0 && acc >= 0.95 {
        Ok(format!(
            "{n_conv} converged runs pass verdicts; median val acc {acc:.3} at eta={top_eta}"
        ))
    } else {
        Err(format!(
            "{bad_verdicts} verdict failures, {lb_viol} lower-bound violations, \
             val acc {acc:.3} at eta={top_eta} (need >= 0.95)"
        ))
    }
}

/// Small-init sharpness is flat in eta until it meets the 2/eta ceiling; the
/// crossover lies inside the default grid.
pub fn init_scale_phases_hold() -> Check {
    let t0 = Instant::now();
    let spec = InitScaleSpec {
        scales: vec![1.0, 10.0],
        ..InitScaleSpec::default()
    };
    let (rows, crossovers) = runs::init_scale_study(&spec).map_err(|e| e.to_string())?;
    let cross = crossovers
        .get("1")
        .copied()
        .flatten()
        .ok_or("no crossover detected for init scale 1 inside the eta grid")?;
    let small: Vec<_> = rows.iter().filter(|r| r.init_scale == 1.0).collect();
    let below: Vec<f64> = small
        .iter()
        .filter(|r| r.eta < cross)
        .filter_map(|r| r.lambda_median)
        .collect();
    if below.is_empty() {
        return Err(format!(
            "crossover at the smallest eta {cross}; no flat region to check"
        ));
    }
    let base = median(below.clone()).unwrap();
    for lam in &below {
        if (lam - base).abs() > 0.10 * base {
            return Err(format!(
                "below-crossover sharpness {lam:.3} deviates from {base:.3} by more than 10%"
            ));
        }
    }
    for r in &small {
        if r.eta >= cross {
            if let Some(lam) = r.lambda_median {
                if lam > (2.0 / r.eta) * (1.0 + TOL_EOS) {
                    return Err(format!(
                        "above-crossover sharpness {lam:.3} exceeds 2/eta ceiling at eta={}",
                        r.eta
                    ));
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok(format!(
        "scale-1 crossover at eta = {cross:.4}; flat level {base:.2} (+/-10%) below, \
         ceiling respected above ({secs:.0}s)"
    ))
}

pub struct NamedCheck {
    pub id: &'static str,
    pub run: fn() -> Check,
}

/// The MNIST check takes paths, so it is listed separately in `run_all`.
pub const CHECKS: [NamedCheck; 9] = [
    NamedCheck {
        id: "hessian-vs-finite-differences",
        run: hessian_matches_finite_differences,
    },
    NamedCheck {
        id: "sweep-lower-bound",
        run: sweep_lower_bound_holds,
    },
    NamedCheck {
        id: "sweep-stability-verdicts",
        run: sweep_stability_verdicts_hold,
    },
    NamedCheck {
        id: "sweep-trends",
        run: sweep_trends_hold,
    },
    NamedCheck {
        id: "sharpness-sandwich",
        run: sandwich_holds,
    },
    NamedCheck {
        id: "weight-function-oracles",
        run: weight_oracles_agree,
    },
    NamedCheck {
        id: "density-line-integrals",
        run: rho_matches_g,
    },
    NamedCheck {
        id: "pyramid-stability",
        run: pyramid_stability_demo_behaves,
    },
    NamedCheck {
        id: "depth-separation-trend",
        run: depth_separation_trend_holds,
    },
];

/// Runs every check, printing one PASS/FAIL line each; returns overall success.
pub fn run_all(images: Option<PathBuf>, labels: Option<PathBuf>) -> bool {
    let mut ok = true;
    let mut report = |id: &str, res: Check| match res {
        Ok(detail) => println!("PASS {id}: {detail}"),
        Err(detail) => {
            ok = false;
            println!("FAIL {id}: {detail}");
        }
    };
    for check in &CHECKS {
        report(check.id, (check.run)());
    }
    report("mnist-runs", mnist_runs_pass(images.as_deref(), labels.as_deref()));
    report("init-scale-phases", init_scale_phases_hold());
    ok
}
