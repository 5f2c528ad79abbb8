//! Acceptance battery: every self-verification check must pass. One test per
//! check; each prints its verdict line so the suite output doubles as the
//! acceptance report. Canonical experiments are cached inside the test
//! process, so related checks share their replay cost.

use std::path::Path;

use regionmap::verify::{run_check, CheckOutcome};

fn acceptance(id: usize) {
    let binary = Path::new(env!("CARGO_BIN_EXE_regionmap"));
    let CheckOutcome {
        name,
        passed,
        details,
        ..
    } = run_check(id, Some(binary));
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("criterion {id}: {verdict} — {name}: {details}");
    assert!(passed, "criterion {id} ({name}) failed: {details}");
}

#[test]
fn criterion_01_final_budget_hausdorff_split() {
    acceptance(1);
}

#[test]
fn criterion_02_hausdorff_trend_across_budgets() {
    acceptance(2);
}

#[test]
fn criterion_03_coverage_growth() {
    acceptance(3);
}

#[test]
fn criterion_04_minima_coverage_and_hausdorff_ranking() {
    acceptance(4);
}

#[test]
fn criterion_05_gradient_projection_penalty() {
    acceptance(5);
}

#[test]
fn criterion_06_reduced_cluster_count() {
    acceptance(6);
}

#[test]
fn criterion_07_benchmark_formula_cross_check() {
    acceptance(7);
}

#[test]
fn criterion_08_cma_stop_behaviour() {
    acceptance(8);
}

#[test]
fn criterion_09_nearest_better_clustering_reference() {
    acceptance(9);
}

#[test]
fn criterion_10_approximation_kernel_identities() {
    acceptance(10);
}

#[test]
fn criterion_11_metric_oracles() {
    acceptance(11);
}

#[test]
fn criterion_12_end_to_end_determinism() {
    acceptance(12);
}
