//! Full acceptance battery at production settings. Prints one line per
//! criterion to stderr (visible without `--nocapture`).

use htype::suite::{run_acceptance, Status, SuiteOptions};
use std::io::Write;

/// Criteria that cannot pass with the shipped models; see the decisions ledger.
const KNOWN_UNATTAINABLE: [u32; 1] = [9];

#[test]
fn acceptance() {
    let results = run_acceptance(&SuiteOptions::default(), |r| {
        let _ = writeln!(std::io::stderr(), "{}", r.line());
    });
    assert_eq!(results.len(), 11);
    let mut bad = Vec::new();
    for r in &results {
        let expected = if KNOWN_UNATTAINABLE.contains(&r.id) { Status::KnownUnattainable } else { Status::Pass };
        if r.status != expected {
            let failed: Vec<String> = r.checks.iter().filter(|c| !c.pass).map(|c| format!("{} = {:e} (tol {:e})", c.name, c.value, c.tolerance)).collect();
            bad.push(format!("criterion {} is {:?}, expected {:?}: {}", r.id, r.status, expected, failed.join("; ")));
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}
