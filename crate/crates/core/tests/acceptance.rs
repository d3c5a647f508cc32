//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//!
//! Some checks cannot be met as stated (see the README); they are listed in
//! `KNOWN_FAILURES` and reported as FAIL without failing the build. Any other
//! failing check does fail it.

use std::process::ExitCode;

use stplab::verify::{compare_runs, run_all};

const SEED: u64 = 7;

/// (criterion, check name prefix)
const KNOWN_FAILURES: [(u8, &str); 3] = [
    (5, "min estimator success rate"),
    (8, "reduce_epsilon_once vs 1 + (eps^2/4) S.S"),
    (13, "min fraction of pairs in [0.7, 0.8]"),
];

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let (a, b) = (dir.path().join("first"), dir.path().join("second"));
    let first = run_all(SEED, &a).expect("first run");
    let mut results = first.criteria.clone();
    for c in &results {
        println!("{}", c.line());
    }
    let second = run_all(SEED, &b).expect("second run");
    let det = compare_runs(&a, &b, &first.files);
    println!("{}", det.line());
    let same_verdicts = first.criteria.iter().zip(&second.criteria).all(|(x, y)| x.checks == y.checks);
    results.push(det);

    let mut unexpected = Vec::new();
    for c in &results {
        for check in c.checks.iter().filter(|k| !k.passed) {
            if !KNOWN_FAILURES.iter().any(|&(id, name)| id == c.id && check.name.starts_with(name)) {
                unexpected.push(format!("criterion {}: {}", c.id, check.name));
            }
        }
    }
    if !same_verdicts {
        unexpected.push("the two runs reported different checks".into());
    }
    let passed = results.iter().filter(|c| c.passed).count();
    println!("{passed}/{} criteria pass", results.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        for u in &unexpected {
            eprintln!("unexpected failure: {u}");
        }
        ExitCode::FAILURE
    }
}
