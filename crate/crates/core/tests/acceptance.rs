//! Acceptance suite: runs the full reproduction, writes its tree with a
//! manifest, regenerates it from that manifest and prints one line per
//! criterion. Runs without the libtest harness so the lines are never
//! captured.

use goldilocks::io::manifest::{write_tree, RunManifest};
use goldilocks::io::RunConfig;
use goldilocks::runner::{execute, Command, Invocation};
use goldilocks::suite::{verify_reproduction, Check};

/// Criteria the calibrated agent market misses at their stated tolerance.
/// They are still evaluated and printed as FAIL; the analysis is kept with
/// the README. A criterion listed here that starts passing fails the test
/// so that the list stays accurate.
const KNOWN_FAILURES: &[u8] = &[8, 10];

fn main() {
    let cfg = RunConfig::default();
    let inv = Invocation::new(Command::Reproduce);
    let run = execute(&inv, &cfg).expect("reproduce runs");
    let mut checks: Vec<Check> = serde_json::from_value(run.summary["checks"].clone()).expect("checks in summary");

    let dir = tempfile::tempdir().unwrap();
    let manifest = RunManifest::new(inv, &cfg, &run.files);
    write_tree(dir.path(), &run.files, &manifest).unwrap();
    checks.push(verify_reproduction(dir.path()).expect("manifest verification"));

    for c in &checks {
        println!("{}", c.line());
    }
    let failed: Vec<u8> = checks.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    println!("{} of {} criteria passed", checks.len() - failed.len(), checks.len());
    assert_eq!(checks.len(), 14);
    assert_eq!(failed, KNOWN_FAILURES, "failing criteria differ from the recorded list");
}
