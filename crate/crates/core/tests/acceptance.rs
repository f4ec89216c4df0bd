//! One PASS/FAIL line per acceptance criterion.
//!
//! Criteria listed in `KNOWN_RED` are reproduced faithfully and fail on
//! the physics as modelled; they are reported but do not fail the build.
//! Any other failure does. Built without the libtest harness so the
//! lines are printed on success too.

use std::collections::BTreeMap;

use qthermo::scenarios::run_checks;

const KNOWN_RED: &[u8] = &[4, 10, 11];

fn main() {
    let start = std::time::Instant::now();
    let outcomes = run_checks(None);
    let mut by_criterion: BTreeMap<u8, Vec<_>> = BTreeMap::new();
    for o in &outcomes {
        by_criterion.entry(o.criterion).or_default().push(o);
    }
    assert_eq!(by_criterion.len(), 12, "every criterion needs a check");
    let mut unexpected = Vec::new();
    for (criterion, checks) in &by_criterion {
        let passed = checks.iter().all(|c| c.passed);
        let detail: Vec<String> = checks.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        println!(
            "criterion {criterion:>2}: {} | {}",
            if passed { "PASS" } else { "FAIL" },
            detail.join(" | ")
        );
        if !passed {
            if !KNOWN_RED.contains(criterion) {
                unexpected.push(*criterion);
            } else if checks.iter().any(|c| c.detail.starts_with("error:")) {
                // A known red must fail on its numbers, not on a crash.
                unexpected.push(*criterion);
            }
        }
    }
    println!("acceptance suite finished in {:.1} s", start.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
