//! Step-size stability quantities: the empirical weighting functions g̃, g, ĝ,
//! the parameter-space stability norm S_θ = Σ|a_i|·g(v̄_i, b̄_i), the sharpness
//! lower bound 1 + 2·S_θ, the flattest-implementation sharpness over
//! per-neuron rescalings, the surrogate sharpness upper bound, and the
//! certificates tying them to the step size: S_θ ≤ 1/η − 1/2 and λmax ≤ 2/η.

use crate::dataset::{dataset_stats, knot_clearance, Dataset, DatasetStats};
use crate::linalg::{jacobi_eigh, norm, DenseMatrix, LinalgError};
use crate::network::{
    merge_atoms, neuron_atoms, tangent_features, tangent_top_pair, NeuronAtom, ShallowParams,
    TangentFeatures,
};
use crate::rng::Rng;
use std::collections::HashMap;
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("direction norm {norm} is not 1 within 1e-9")]
    NonUnitDirection { norm: f64 },
}

fn check_unit(v: &[f64]) -> Result<(), StabilityError> {
    let n = norm(v);
    if (n - 1.0).abs() > 1e-9 {
        return Err(StabilityError::NonUnitDirection { norm: n });
    }
    Ok(())
}

/// g̃(v, b) from the empirical distribution: with the strict active set
/// C = {j : x_jᵀv > b},
/// (|C|/n)² · mean_C(x_jᵀv − b) · √(‖mean_C(x_j)‖² + 1), and 0 when C is empty.
pub fn g_tilde(ds: &Dataset, v: &[f64], b: f64) -> Result<f64, StabilityError> {
    check_unit(v)?;
    let proj: Vec<f64> = ds.xs.iter().map(|x| dot_slice(x, v)).collect();
    Ok(g_tilde_from_proj(ds, &proj, b))
}

fn dot_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn g_tilde_from_proj(ds: &Dataset, proj: &[f64], b: f64) -> f64 {
    let active: Vec<usize> = (0..ds.n).filter(|&j| proj[j] > b).collect();
    if active.is_empty() {
        return 0.0;
    }
    let m = active.len() as f64;
    let p = m / ds.n as f64;
    let mean_excess = active.iter().map(|&j| proj[j] - b).sum::<f64>() / m;
    let mut mean_x = vec![0.0; ds.d];
    for &j in &active {
        for l in 0..ds.d {
            mean_x[l] += ds.xs[j][l] / m;
        }
    }
    let mean_norm_sq: f64 = mean_x.iter().map(|x| x * x).sum();
    p * p * mean_excess * (mean_norm_sq + 1.0).sqrt()
}

/// g(v, b) = min(g̃(v, b), g̃(−v, −b)); the reflected active set is the strict
/// complement side x_jᵀv < b.
pub fn g_weight(ds: &Dataset, v: &[f64], b: f64) -> Result<f64, StabilityError> {
    check_unit(v)?;
    let proj: Vec<f64> = ds.xs.iter().map(|x| dot_slice(x, v)).collect();
    Ok(g_from_proj(ds, &proj, b))
}

fn g_from_proj(ds: &Dataset, proj: &[f64], b: f64) -> f64 {
    let fwd = g_tilde_from_proj(ds, proj, b);
    let neg: Vec<f64> = proj.iter().map(|t| -t).collect();
    let bwd = g_tilde_from_proj(ds, &neg, -b);
    fwd.min(bwd)
}

/// ĝ(v, b) = P(Xᵀv > b) · √E[(Xᵀv − b)² | active] · √(1 + E[‖X‖² | active]);
/// 0 on an empty active set.
pub fn g_hat(ds: &Dataset, v: &[f64], b: f64) -> Result<f64, StabilityError> {
    check_unit(v)?;
    let proj: Vec<f64> = ds.xs.iter().map(|x| dot_slice(x, v)).collect();
    Ok(g_hat_from_proj(ds, &proj, b))
}

fn g_hat_from_proj(ds: &Dataset, proj: &[f64], b: f64) -> f64 {
    let active: Vec<usize> = (0..ds.n).filter(|&j| proj[j] > b).collect();
    if active.is_empty() {
        return 0.0;
    }
    let m = active.len() as f64;
    let p = m / ds.n as f64;
    let mean_sq_excess = active
        .iter()
        .map(|&j| (proj[j] - b) * (proj[j] - b))
        .sum::<f64>()
        / m;
    let mean_sq_norm = active
        .iter()
        .map(|&j| ds.xs[j].iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        / m;
    p * mean_sq_excess.sqrt() * (1.0 + mean_sq_norm).sqrt()
}

/// Weight-function evaluator that caches per-direction projections, so many
/// queries along the same direction (merged vs. unmerged atoms, g and ĝ)
/// share one pass over the data. Concurrent use returns the same values as
/// sequential use; the cache is just memoization.
pub struct WeightEval<'a> {
    ds: &'a Dataset,
    cache: Mutex<HashMap<Vec<u64>, Vec<f64>>>,
}

impl<'a> WeightEval<'a> {
    pub fn new(ds: &'a Dataset) -> Self {
        WeightEval {
            ds,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn projections(&self, v: &[f64]) -> Vec<f64> {
        let key: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        let mut cache = self.cache.lock().unwrap();
        cache
            .entry(key)
            .or_insert_with(|| self.ds.xs.iter().map(|x| dot_slice(x, v)).collect())
            .clone()
    }

    pub fn g_tilde(&self, v: &[f64], b: f64) -> Result<f64, StabilityError> {
        check_unit(v)?;
        Ok(g_tilde_from_proj(self.ds, &self.projections(v), b))
    }

    pub fn g(&self, v: &[f64], b: f64) -> Result<f64, StabilityError> {
        check_unit(v)?;
        Ok(g_from_proj(self.ds, &self.projections(v), b))
    }

    pub fn g_hat(&self, v: &[f64], b: f64) -> Result<f64, StabilityError> {
        check_unit(v)?;
        Ok(g_hat_from_proj(self.ds, &self.projections(v), b))
    }
}

/// S_θ over the given atoms: Σ|a_i|·g(v̄_i, b̄_i). With `merged` the atoms are
/// first merged at the default tolerance, realizing the representation-free
/// stability norm; merged never exceeds unmerged.
pub fn stability_norm(atoms: &[NeuronAtom], ds: &Dataset, merged: bool) -> f64 {
    let eval = WeightEval::new(ds);
    let owned;
    let list = if merged {
        owned = merge_atoms(atoms, crate::network::DEFAULT_MERGE_TOL);
        &owned
    } else {
        atoms
    };
    list.iter()
        .map(|atom| {
            atom.a.abs()
                * eval
                    .g(&atom.v_bar, atom.b_bar)
                    .expect("normalized atoms carry unit directions")
        })
        .sum()
}

/// Bound-verdict tolerances: relative slack on the Thm-1 bound, edge-of-
/// stability slack on λmax ≤ 2/η, and the knot-clearance certification scale.
pub const TOL_REL: f64 = 1e-6;
pub const TOL_EOS: f64 = 0.05;

pub fn clearance_tol(ds: &Dataset) -> f64 {
    1e-6 * (1.0 + ds.max_input_norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdicts {
    pub thm1: bool,
    pub lemma1: bool,
    pub certified: bool,
}

/// Evaluates the two stability certificates at step size η:
/// thm1: S_θ ≤ 1/η − 1/2 + tol_rel·(1/η); lemma1: λmax ≤ (2/η)·(1+tol_eos).
/// `certified` requires the knots to clear every training point.
pub fn certify_thm1(
    s_theta: f64,
    lambda_max: f64,
    eta: f64,
    clearance: f64,
    clearance_tol: f64,
) -> Verdicts {
    let inv_eta = 1.0 / eta;
    Verdicts {
        thm1: s_theta <= inv_eta - 0.5 + TOL_REL * inv_eta,
        lemma1: lambda_max <= 2.0 * inv_eta * (1.0 + TOL_EOS),
        certified: clearance > clearance_tol,
    }
}

/// Minimum of ‖∇_x f‖ over all data points, `extra_probes` random near-field
/// points, and far-field probes where the activation pattern is determined by
/// the direction alone. An over-estimate of inf‖∇f‖, which only enlarges the
/// upper bound it feeds.
pub fn min_grad_norm_estimate(
    p: &ShallowParams,
    ds: &Dataset,
    extra_probes: usize,
    seed: u64,
) -> f64 {
    let grad_at = |x: &[f64]| -> f64 {
        let mut g = vec![0.0; p.d];
        for i in 0..p.k {
            let pre = dot_slice(&p.w1[i], x) + p.b1[i];
            if pre > 0.0 {
                for l in 0..p.d {
                    g[l] += p.w2[i] * p.w1[i][l];
                }
            }
        }
        norm(&g)
    };
    // Far-field pattern along u: as ‖x‖→∞ with x = R·u, neuron i is active
    // iff w1_iᵀu > 0, or w1_iᵀu = 0 with positive bias.
    let far_field = |u: &[f64]| -> f64 {
        let mut g = vec![0.0; p.d];
        for i in 0..p.k {
            let t = dot_slice(&p.w1[i], u);
            if t > 0.0 || (t == 0.0 && p.b1[i] > 0.0) {
                for l in 0..p.d {
                    g[l] += p.w2[i] * p.w1[i][l];
                }
            }
        }
        norm(&g)
    };
    let mut best = f64::INFINITY;
    for x in &ds.xs {
        best = best.min(grad_at(x));
    }
    let mut rng = Rng::from_seed(seed);
    let scale = 1.0 + ds.max_input_norm();
    for _ in 0..extra_probes {
        let x: Vec<f64> = (0..p.d).map(|_| scale * rng.standard_normal()).collect();
        best = best.min(grad_at(&x));
    }
    for l in 0..p.d {
        let mut u = vec![0.0; p.d];
        u[l] = 1.0;
        best = best.min(far_field(&u));
        u[l] = -1.0;
        best = best.min(far_field(&u));
    }
    for _ in 0..extra_probes.min(32) {
        let u: Vec<f64> = (0..p.d).map(|_| rng.standard_normal()).collect();
        if norm(&u) > 1e-12 {
            best = best.min(far_field(&u));
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// Surrogate sharpness upper bound:
/// 1 + 2·Σ|a_i|ĝ(v̄_i,b̄_i) + 4·(Σ|a_i| + min_grad_est)·√λmax(Σ_X)·√(1+E‖X‖²).
/// Σ|a_i| and Σ|a_i|ĝ are representation-level stand-ins for the function
/// norms; both can only enlarge the right-hand side.
pub fn sharpness_upper_bound(
    atoms: &[NeuronAtom],
    ds: &Dataset,
    stats: &DatasetStats,
    min_grad_est: f64,
) -> f64 {
    let eval = WeightEval::new(ds);
    let g_hat_norm: f64 = atoms
        .iter()
        .map(|atom| {
            atom.a.abs()
                * eval
                    .g_hat(&atom.v_bar, atom.b_bar)
                    .expect("normalized atoms carry unit directions")
        })
        .sum();
    let r_norm: f64 = atoms.iter().map(|a| a.a.abs()).sum();
    1.0 + 2.0 * g_hat_norm
        + 4.0 * (r_norm + min_grad_est) * stats.cov_top_eig.sqrt() * (1.0 + stats.mean_sq_norm).sqrt()
}

/// Sufficient stability condition at step size η:
/// Σ|a_i|ĝ + 2·(Σ|a_i| + min_grad_est)·√λmax(Σ_X)·√(1+E‖X‖²) < 1/η − 1/2.
/// True means some implementation of the function is GD-stable at η; the
/// strict comparison keeps η ≥ 2 false even for the zero network.
pub fn sufficient_stability_check(
    atoms: &[NeuronAtom],
    ds: &Dataset,
    stats: &DatasetStats,
    min_grad_est: f64,
    eta: f64,
) -> bool {
    let eval = WeightEval::new(ds);
    let g_hat_norm: f64 = atoms
        .iter()
        .map(|atom| {
            atom.a.abs()
                * eval
                    .g_hat(&atom.v_bar, atom.b_bar)
                    .expect("normalized atoms carry unit directions")
        })
        .sum();
    let r_norm: f64 = atoms.iter().map(|a| a.a.abs()).sum();
    let lhs = g_hat_norm
        + 2.0 * (r_norm + min_grad_est) * stats.cov_top_eig.sqrt()
            * (1.0 + stats.mean_sq_norm).sqrt();
    lhs < 1.0 / eta - 0.5
}

/// Per-neuron rescaling state reached by the flattest-sharpness search.
/// The rescaled network computes the same function (positive homogeneity).
#[derive(Debug, Clone)]
pub struct RebalanceState {
    pub log_c: Vec<f64>,
    pub current_lambda: f64,
    pub eigengap: f64,
    /// Top eigenvalue became (numerically) multiple during the search and the
    /// jittered subgradient fallback ran.
    pub collapsed: bool,
}

pub struct FlattestOpts {
    pub max_iters: usize,
    /// Stop when the best λ improves by less than this relative amount over
    /// `patience` iterations.
    pub rel_improvement: f64,
    pub patience: usize,
    pub gap_tol: f64,
    pub jitter_steps: usize,
    pub jitter_seed: u64,
}

impl Default for FlattestOpts {
    fn default() -> Self {
        FlattestOpts {
            max_iters: 400,
            rel_improvement: 1e-8,
            patience: 20,
            gap_tol: 1e-10,
            jitter_steps: 50,
            jitter_seed: 0,
        }
    }
}

/// Row-scale vector for the rescaling c: neuron i's W1/b1 rows scale by c_i,
/// its w2 row by 1/c_i, the b2 row by 1.
fn row_scales(tf: &TangentFeatures, log_c: &[f64]) -> Vec<f64> {
    let (d, k) = (tf.d, tf.k);
    let mut s = vec![1.0; tf.phi.rows];
    for i in 0..k {
        let c = log_c[i].exp();
        for l in 0..d {
            s[i * d + l] = c;
        }
        s[k * d + i] = c;
        s[k * d + k + i] = 1.0 / c;
    }
    s
}

/// Top two eigenvalues of H(c) = D Φ (D Φ)ᵀ / n and the top eigenvector,
/// computed through the n×n Gram matrix ΦᵀD²Φ/n.
fn rescaled_top_two(
    tf: &TangentFeatures,
    scales: &[f64],
) -> (f64, f64, Vec<f64>) {
    let n = tf.phi.cols;
    let rows = tf.phi.rows;
    let mut gram = DenseMatrix::zeros(n, n);
    for j1 in 0..n {
        for j2 in j1..n {
            let mut s = 0.0;
            for r in 0..rows {
                let a = tf.phi.get(r, j1);
                if a != 0.0 {
                    s += scales[r] * scales[r] * a * tf.phi.get(r, j2);
                }
            }
            let val = s / n as f64;
            gram.set(j1, j2, val);
            gram.set(j2, j1, val);
        }
    }
    let (values, vectors) = jacobi_eigh(&gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let lambda1 = values[order[0]].max(0.0);
    let lambda2 = if n > 1 { values[order[1]].max(0.0) } else { 0.0 };
    // u = (DΦ)q / ‖(DΦ)q‖ lifts the Gram eigenvector back to parameter space.
    let q: Vec<f64> = (0..n).map(|j| vectors.get(j, order[0])).collect();
    let mut u = vec![0.0; rows];
    for r in 0..rows {
        let mut s = 0.0;
        for j in 0..n {
            s += scales[r] * tf.phi.get(r, j) * q[j];
        }
        u[r] = s;
    }
    let nu = norm(&u);
    if nu > 0.0 {
        for x in u.iter_mut() {
            *x /= nu;
        }
    }
    (lambda1, lambda2, u)
}

/// dλ/dlog c_i = 2λ·(Σ_{r ∈ neuron i W1,b1 rows} u_r² − u_{w2_i row}²),
/// valid while the top eigenvalue is simple.
fn lambda_gradient(tf: &TangentFeatures, lambda: f64, u: &[f64]) -> Vec<f64> {
    let (d, k) = (tf.d, tf.k);
    let mut grad = vec![0.0; k];
    for i in 0..k {
        let mut s = 0.0;
        for l in 0..d {
            s += u[i * d + l] * u[i * d + l];
        }
        s += u[k * d + i] * u[k * d + i];
        s -= u[k * d + k + i] * u[k * d + k + i];
        grad[i] = 2.0 * lambda * s;
    }
    grad
}

/// Minimizes λmax(H(c)) over per-neuron rescalings c ∈ (0,∞)^k by descent on
/// log c with backtracking, using the eigenvector derivative. On (numerical)
/// top-eigenvalue multiplicity the search switches to jittered subgradient
/// steps and flags the state. Start point c = 1, so the result never exceeds
/// the unrescaled sharpness.
pub fn flattest_sharpness(
    p: &ShallowParams,
    ds: &Dataset,
    opts: &FlattestOpts,
) -> Result<(f64, RebalanceState), LinalgError> {
    let tf = tangent_features(p, ds);
    let k = p.k;
    let mut log_c = vec![0.0; k];
    let mut scales = row_scales(&tf, &log_c);
    let (mut lambda, mut lambda2, mut u) = rescaled_top_two(&tf, &scales);
    let mut best_lambda = lambda;
    let mut best_log_c = log_c.clone();
    let mut collapsed = false;
    if k == 0 {
        return Ok((
            lambda,
            RebalanceState {
                log_c,
                current_lambda: lambda,
                eigengap: lambda - lambda2,
                collapsed: false,
            },
        ));
    }

    let mut rng = Rng::from_seed(opts.jitter_seed);
    let mut stale = 0usize;
    let mut iter = 0usize;
    while iter < opts.max_iters {
        iter += 1;
        let gap = lambda - lambda2;
        let degenerate = gap < opts.gap_tol * lambda.max(1.0);
        let grad = if degenerate {
            // Subgradient with jitter: perturb the eigenvector inside the
            // near-degenerate top eigenspace and keep only improving steps.
            collapsed = true;
            let mut ju = u.clone();
            for x in ju.iter_mut() {
                *x += 1e-3 * rng.standard_normal();
            }
            let nu = norm(&ju);
            for x in ju.iter_mut() {
                *x /= nu;
            }
            lambda_gradient(&tf, lambda, &ju)
        } else {
            lambda_gradient(&tf, lambda, &u)
        };
        let gnorm = norm(&grad);
        if gnorm < 1e-14 * lambda.max(1.0) {
            break;
        }
        // Backtracking on log c.
        let mut t = 0.5 / gnorm.max(1.0);
        let mut improved = false;
        for _ in 0..30 {
            let trial: Vec<f64> = log_c
                .iter()
                .zip(&grad)
                .map(|(lc, g)| lc - t * g)
                .collect();
            let trial_scales = row_scales(&tf, &trial);
            let (l1, l2, tu) = rescaled_top_two(&tf, &trial_scales);
            if l1 < lambda - 1e-4 * t * gnorm * gnorm {
                log_c = trial;
                scales = trial_scales;
                lambda = l1;
                lambda2 = l2;
                u = tu;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        let budget = if degenerate {
            opts.jitter_steps
        } else {
            opts.patience
        };
        if improved && lambda < best_lambda * (1.0 - opts.rel_improvement) {
            best_lambda = lambda;
            best_log_c = log_c.clone();
            stale = 0;
        } else {
            if lambda < best_lambda {
                best_lambda = lambda;
                best_log_c = log_c.clone();
            }
            stale += 1;
            if stale >= budget {
                break;
            }
        }
        let _ = &scales;
    }

    let final_scales = row_scales(&tf, &best_log_c);
    let (l1, l2, _) = rescaled_top_two(&tf, &final_scales);
    Ok((
        l1,
        RebalanceState {
            log_c: best_log_c,
            current_lambda: l1,
            eigengap: l1 - l2,
            collapsed,
        },
    ))
}

/// How reports decide whether to run the flattest-sharpness search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlattestMode {
    On,
    Off,
    /// On for networks of at most 1000 parameters.
    Auto,
}

impl FlattestMode {
    pub fn enabled(self, param_count: usize) -> bool {
        match self {
            FlattestMode::On => true,
            FlattestMode::Off => false,
            FlattestMode::Auto => param_count <= 1000,
        }
    }
}

pub struct ReportOptions {
    pub flattest: FlattestMode,
    pub merge_tol: f64,
    pub extra_probes: usize,
    pub probe_seed: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            flattest: FlattestMode::Auto,
            merge_tol: crate::network::DEFAULT_MERGE_TOL,
            extra_probes: 64,
            probe_seed: 0,
        }
    }
}

/// Everything the certificates need for one (network, dataset, η) triple.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub eta: f64,
    pub lambda_max: f64,
    /// Unmerged parameter-space norm Σ|a_i|·g.
    pub s_theta: f64,
    /// Merged-atom norm ‖f‖_{R,g}; ≤ s_theta.
    pub stability_norm: f64,
    pub lower_bound: f64,
    /// Σ|a_i| (representation-level surrogate for ‖f‖_R).
    pub r_norm_repr: f64,
    /// Σ|a_i|·ĝ (surrogate for ‖f‖_{R,ĝ}).
    pub g_hat_norm: f64,
    pub min_grad_norm_est: f64,
    pub upper_bound: f64,
    pub flattest_sharpness: Option<f64>,
    pub two_over_eta: f64,
    pub knot_clearance: f64,
    pub mean_abs_bias_bar: f64,
    pub certified: bool,
    pub verdict_thm1: bool,
    pub verdict_lemma1: bool,
}

/// Assembles the full stability report for a trained network at step size η.
pub fn evaluate(
    p: &ShallowParams,
    ds: &Dataset,
    eta: f64,
    opts: &ReportOptions,
) -> Result<StabilityReport, LinalgError> {
    let tf = tangent_features(p, ds);
    let (lambda_max, _u) = tangent_top_pair(&tf)?;
    let atoms = neuron_atoms(p);
    let s_theta = stability_norm(&atoms, ds, false);
    let merged_norm = stability_norm(&atoms, ds, true);
    let clearance = knot_clearance(ds, &atoms);
    let stats = dataset_stats(ds);
    let min_grad = min_grad_norm_estimate(p, ds, opts.extra_probes, opts.probe_seed);
    let upper = sharpness_upper_bound(&atoms, ds, &stats, min_grad);
    let eval = WeightEval::new(ds);
    let g_hat_norm: f64 = atoms
        .iter()
        .map(|atom| {
            atom.a.abs()
                * eval
                    .g_hat(&atom.v_bar, atom.b_bar)
                    .expect("normalized atoms carry unit directions")
        })
        .sum();
    let r_norm_repr: f64 = atoms.iter().map(|a| a.a.abs()).sum();
    let mean_abs_bias_bar = if atoms.is_empty() {
        0.0
    } else {
        atoms.iter().map(|a| a.b_bar.abs()).sum::<f64>() / atoms.len() as f64
    };
    let flattest = if opts.flattest.enabled(p.param_count()) {
        Some(flattest_sharpness(p, ds, &FlattestOpts::default())?.0)
    } else {
        None
    };
    let verdicts = certify_thm1(s_theta, lambda_max, eta, clearance, clearance_tol(ds));
    Ok(StabilityReport {
        eta,
        lambda_max,
        s_theta,
        stability_norm: merged_norm,
        lower_bound: 1.0 + 2.0 * s_theta,
        r_norm_repr,
        g_hat_norm,
        min_grad_norm_est: min_grad,
        upper_bound: upper,
        flattest_sharpness: flattest,
        two_over_eta: 2.0 / eta,
        knot_clearance: clearance,
        mean_abs_bias_bar,
        certified: verdicts.certified,
        verdict_thm1: verdicts.thm1,
        verdict_lemma1: verdicts.lemma1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point_ds() -> Dataset {
        Dataset::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![0.0, 0.0])
    }

    #[test]
    fn g_tilde_two_point_at_zero() {
        let ds = two_point_ds();
        let v = vec![1.0, 0.0];
        // Active set {(1,0)}: (1/2)²·1·√2.
        let got = g_tilde(&ds, &v, 0.0).unwrap();
        assert!((got - 0.25 * 2.0_f64.sqrt()).abs() < 1e-15, "g̃ {got}");
    }

    #[test]
    fn g_tilde_empty_active_set_is_zero() {
        let ds = two_point_ds();
        assert_eq!(g_tilde(&ds, &[1.0, 0.0], 1.0).unwrap(), 0.0);
        assert_eq!(g_tilde(&ds, &[1.0, 0.0], 2.5).unwrap(), 0.0);
    }

    #[test]
    fn g_two_point_at_half() {
        let ds = two_point_ds();
        let got = g_weight(&ds, &[1.0, 0.0], 0.5).unwrap();
        assert!(
            (got - 2.0_f64.sqrt() / 8.0).abs() < 1e-15,
            "g {got} vs √2/8"
        );
    }

    #[test]
    fn g_reflection_symmetry() {
        let ds = two_point_ds();
        let v = [0.6, 0.8];
        let neg = [-0.6, -0.8];
        for b in [-0.7, -0.2, 0.0, 0.3, 0.9] {
            let a = g_weight(&ds, &v, b).unwrap();
            let c = g_weight(&ds, &neg, -b).unwrap();
            assert_eq!(a, c, "g(v,b) vs g(-v,-b) at b={b}");
        }
    }

    #[test]
    fn g_hat_two_point_at_zero() {
        let ds = two_point_ds();
        let got = g_hat(&ds, &[1.0, 0.0], 0.0).unwrap();
        assert!(
            (got - 2.0_f64.sqrt() / 2.0).abs() < 1e-15,
            "ĝ {got} vs √2/2"
        );
    }

    #[test]
    fn non_unit_direction_rejected() {
        let ds = two_point_ds();
        assert!(matches!(
            g_tilde(&ds, &[1.0, 1.0], 0.0),
            Err(StabilityError::NonUnitDirection { .. })
        ));
    }

    #[test]
    fn stability_norm_linearity_and_empty() {
        let ds = two_point_ds();
        let atom = NeuronAtom {
            a: 2.0,
            v_bar: vec![1.0, 0.0],
            b_bar: 0.5,
        };
        let g = g_weight(&ds, &[1.0, 0.0], 0.5).unwrap();
        let s = stability_norm(&[atom], &ds, false);
        assert!((s - 2.0 * g).abs() < 1e-15);
        assert_eq!(stability_norm(&[], &ds, false), 0.0);
    }

    #[test]
    fn cancelling_atoms_merge_to_zero_norm() {
        let ds = two_point_ds();
        let a1 = NeuronAtom {
            a: 1.0,
            v_bar: vec![1.0, 0.0],
            b_bar: 0.25,
        };
        let a2 = NeuronAtom {
            a: -1.0,
            v_bar: vec![1.0, 0.0],
            b_bar: 0.25,
        };
        let atoms = vec![a1, a2];
        assert_eq!(stability_norm(&atoms, &ds, true), 0.0);
        let g = g_weight(&ds, &[1.0, 0.0], 0.25).unwrap();
        let unmerged = stability_norm(&atoms, &ds, false);
        assert!((unmerged - 2.0 * g).abs() < 1e-15);
        assert!(unmerged > 0.0);
    }

    #[test]
    fn verdict_arithmetic() {
        let v = certify_thm1(9.4, 15.0, 0.1, 1.0, 1e-6);
        assert!(v.thm1, "9.4 ≤ 9.5");
        assert!(v.lemma1);
        let v = certify_thm1(9.6, 25.0, 0.1, 1.0, 1e-6);
        assert!(!v.thm1, "9.6 > 9.5");
        assert!(!v.lemma1, "25 > 21");
    }

    #[test]
    fn min_grad_zero_width_net() {
        let p = ShallowParams::zeros(2, 0);
        let ds = two_point_ds();
        assert_eq!(min_grad_norm_estimate(&p, &ds, 16, 0), 0.0);
    }

    #[test]
    fn min_grad_single_neuron_inactive_side() {
        let p = ShallowParams {
            d: 2,
            k: 1,
            w1: vec![vec![1.0, 0.0]],
            b1: vec![0.0],
            w2: vec![1.0],
            b2: 0.0,
        };
        let ds = two_point_ds();
        // The -e1 far-field probe sees no active neuron.
        assert_eq!(min_grad_norm_estimate(&p, &ds, 8, 3), 0.0);
    }

    #[test]
    fn upper_bound_bias_only_net() {
        let ds = two_point_ds();
        let stats = dataset_stats(&ds);
        let bound = sharpness_upper_bound(&[], &ds, &stats, 0.0);
        assert!((bound - 1.0).abs() < 1e-15, "bound {bound}");
    }

    #[test]
    fn sufficient_check_k0() {
        let ds = two_point_ds();
        let stats = dataset_stats(&ds);
        assert!(sufficient_stability_check(&[], &ds, &stats, 0.0, 1.9));
        assert!(!sufficient_stability_check(&[], &ds, &stats, 0.0, 2.0));
        assert!(!sufficient_stability_check(&[], &ds, &stats, 0.0, 2.5));
    }
}
