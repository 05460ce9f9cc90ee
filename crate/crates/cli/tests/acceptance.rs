//! Acceptance gate: every check prints one PASS/FAIL line and asserts.
//! The MNIST check reads RELUSTAB_MNIST_IMAGES / RELUSTAB_MNIST_LABELS and
//! skips when either is unset.

use relustab_cli::selftest;
use std::path::PathBuf;

fn gate(id: &str, res: selftest::Check) {
    match res {
        Ok(detail) => println!("acceptance {id}: PASS - {detail}"),
        Err(detail) => {
            println!("acceptance {id}: FAIL - {detail}");
            panic!("{id}: {detail}");
        }
    }
}

#[test]
fn check_01_hessian_vs_finite_differences() {
    gate("01 hessian-vs-finite-differences", selftest::hessian_matches_finite_differences());
}

#[test]
fn check_02_sweep_lower_bound() {
    gate("02 sweep-lower-bound", selftest::sweep_lower_bound_holds());
}

#[test]
fn check_03_sweep_stability_verdicts() {
    gate("03 sweep-stability-verdicts", selftest::sweep_stability_verdicts_hold());
}

#[test]
fn check_04_sweep_trends() {
    gate("04 sweep-trends", selftest::sweep_trends_hold());
}

#[test]
fn check_05_sharpness_sandwich() {
    gate("05 sharpness-sandwich", selftest::sandwich_holds());
}

#[test]
fn check_06_weight_function_oracles() {
    gate("06 weight-function-oracles", selftest::weight_oracles_agree());
}

#[test]
fn check_07_density_line_integrals() {
    gate("07 density-line-integrals", selftest::rho_matches_g());
}

#[test]
fn check_08_pyramid_stability() {
    gate("08 pyramid-stability", selftest::pyramid_stability_demo_behaves());
}

#[test]
fn check_09_depth_separation_trend() {
    gate("09 depth-separation-trend", selftest::depth_separation_trend_holds());
}

#[test]
fn check_10_mnist_runs() {
    let images = std::env::var_os("RELUSTAB_MNIST_IMAGES").map(PathBuf::from);
    let labels = std::env::var_os("RELUSTAB_MNIST_LABELS").map(PathBuf::from);
    gate(
        "10 mnist-runs",
        selftest::mnist_runs_pass(images.as_deref(), labels.as_deref()),
    );
}

#[test]
fn check_11_init_scale_phases() {
    gate("11 init-scale-phases", selftest::init_scale_phases_hold());
}
