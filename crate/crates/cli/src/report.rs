//! Row schema and deterministic CSV/JSONL emission. Floats print at 17
//! significant digits; reruns with identical config produce identical bytes.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Fixed CSV column order for run rows.
pub const RUN_COLUMNS: [&str; 24] = [
    "run_id",
    "eta",
    "seed",
    "init_scale",
    "batch",
    "status",
    "steps",
    "final_loss",
    "knot_clearance",
    "certified",
    "lambda_max",
    "two_over_eta",
    "s_theta",
    "stability_norm_merged",
    "lower_bound",
    "r_norm_repr",
    "g_hat_norm",
    "min_grad_norm_est",
    "upper_bound",
    "flattest_sharpness",
    "mean_abs_bias_bar",
    "val_accuracy",
    "verdict_thm1",
    "verdict_lemma1",
];

/// One training run. Stability fields are None when the run never produced a
/// usable network (divergence, per-run evaluation failure); val_accuracy is
/// None outside classification runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunRow {
    pub run_id: String,
    pub eta: f64,
    pub seed: u64,
    pub init_scale: f64,
    pub batch: usize,
    pub status: String,
    pub steps: usize,
    pub final_loss: f64,
    pub knot_clearance: Option<f64>,
    pub certified: Option<bool>,
    pub lambda_max: Option<f64>,
    pub two_over_eta: f64,
    pub s_theta: Option<f64>,
    pub stability_norm_merged: Option<f64>,
    pub lower_bound: Option<f64>,
    pub r_norm_repr: Option<f64>,
    pub g_hat_norm: Option<f64>,
    pub min_grad_norm_est: Option<f64>,
    pub upper_bound: Option<f64>,
    pub flattest_sharpness: Option<f64>,
    pub mean_abs_bias_bar: Option<f64>,
    pub val_accuracy: Option<f64>,
    pub verdict_thm1: Option<bool>,
    pub verdict_lemma1: Option<bool>,
}

/// 17 significant digits, lowercase scientific; enough to round-trip f64.
pub fn fmt_float(x: f64) -> String {
    format!("{:.16e}", x)
}

fn fmt_opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn fmt_opt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

impl RunRow {
    fn csv_line(&self) -> String {
        let fields = [
            self.run_id.clone(),
            fmt_float(self.eta),
            self.seed.to_string(),
            fmt_float(self.init_scale),
            self.batch.to_string(),
            self.status.clone(),
            self.steps.to_string(),
            fmt_float(self.final_loss),
            fmt_opt_float(self.knot_clearance),
            fmt_opt_bool(self.certified),
            fmt_opt_float(self.lambda_max),
            fmt_float(self.two_over_eta),
            fmt_opt_float(self.s_theta),
            fmt_opt_float(self.stability_norm_merged),
            fmt_opt_float(self.lower_bound),
            fmt_opt_float(self.r_norm_repr),
            fmt_opt_float(self.g_hat_norm),
            fmt_opt_float(self.min_grad_norm_est),
            fmt_opt_float(self.upper_bound),
            fmt_opt_float(self.flattest_sharpness),
            fmt_opt_float(self.mean_abs_bias_bar),
            fmt_opt_float(self.val_accuracy),
            fmt_opt_bool(self.verdict_thm1),
            fmt_opt_bool(self.verdict_lemma1),
        ];
        fields.join(",")
    }
}

/// CSV with the fixed header; empty `rows` yields the header line only.
pub fn run_rows_csv(rows: &[RunRow]) -> String {
    let mut out = RUN_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// One JSON object per line, fields in declaration order.
pub fn rows_jsonl<T: Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(out, "{}", serde_json::to_string(r).expect("row serializes"));
    }
    out
}

/// Generic CSV emission for the auxiliary tables (init-scale, analytic,
/// pyramid demo): caller supplies header and per-row field lists.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// SHA-256 of the canonical (sorted-key) JSON encoding of the config.
pub fn config_hash(command: &str, config: &serde_json::Value) -> String {
    let canonical = serde_json::json!({ "command": command, "config": config });
    let mut h = Sha256::new();
    h.update(canonical.to_string().as_bytes());
    let digest = h.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{:02x}", b);
    }
    hex
}

/// Run manifest written next to each report file. Carries everything needed
/// to reproduce the rows; no timestamps, so reruns are byte-identical.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub tool: ToolInfo,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

pub fn tool_info() -> ToolInfo {
    ToolInfo {
        name: "relustab",
        version: env!("CARGO_PKG_VERSION"),
    }
}

/// Resolves a report path against RELUSTAB_OUT_DIR (output directory only;
/// all other configuration goes through flags or the config file).
pub fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os("RELUSTAB_OUT_DIR") {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes `body` to the resolved path and the manifest next to it as
/// `<stem>.manifest.json`. Parent directories are created as needed.
pub fn write_with_manifest(path: &Path, body: &str, manifest: &Manifest) -> io::Result<PathBuf> {
    let path = resolve_out(path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&path, body)?;
    let mut mpath = path.clone();
    let stem = mpath
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    mpath.set_file_name(format!("{stem}.manifest.json"));
    let mut pretty = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    pretty.push('\n');
    fs::write(&mpath, pretty)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_17_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(2.0), "2.0000000000000000e0");
        let x = std::f64::consts::PI * 1e-7;
        assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn empty_rows_yield_header_only() {
        let csv = run_rows_csv(&[]);
        assert_eq!(csv.lines().count(), 1);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 24);
    }

    #[test]
    fn config_hash_is_stable_and_order_insensitive() {
        let a = serde_json::json!({"n": 30, "d": 5});
        let b = serde_json::json!({"d": 5, "n": 30});
        assert_eq!(config_hash("sweep", &a), config_hash("sweep", &b));
        assert_ne!(
            config_hash("sweep", &a),
            config_hash("sweep", &serde_json::json!({"n": 31, "d": 5}))
        );
    }
}
