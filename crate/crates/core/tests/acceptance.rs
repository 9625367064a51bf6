//! Runs every acceptance criterion at its stated tolerance and prints one
//! pass/fail line per criterion.

use std::time::Instant;

use valagg_core::verify::{run_criterion, SuiteOptions, CRITERION_COUNT};

#[test]
fn acceptance_criteria() {
    let options = SuiteOptions::default();
    let mut failed = Vec::new();
    for id in 1..=CRITERION_COUNT {
        let start = Instant::now();
        let report = run_criterion(id, &options);
        println!("{} [{:.2?}]", report.summary_line(), start.elapsed());
        for check in report.checks.iter().filter(|c| !c.passed) {
            println!("{check}");
        }
        if !report.passed() {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
