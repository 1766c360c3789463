//! Acceptance suite: one line per criterion, tolerances and runtime budgets as specified.

use std::process::ExitCode;

use bosegas_core::verify::{find, VerifyOptions};

/// (criterion, check name, runtime budget in seconds).
const CRITERIA: [(u32, &str, f64); 11] = [
    (1, "free-fermion", 5.0),
    (2, "yang-yang", 30.0),
    (3, "excited-expansion", 60.0),
    (4, "decay-rate", 60.0),
    (5, "w-identity", 10.0),
    (6, "gamma-integral", 2.0),
    (7, "smooth-amplitude", 60.0),
    (8, "discrete-limit", 180.0),
    (9, "edge-asymptotics", 180.0),
    (10, "assembly", 120.0),
    (11, "grid-hygiene", 120.0),
];

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let mut failed = Vec::new();
    println!("acceptance criteria");
    for (id, name, budget) in CRITERIA {
        let check = find(name).expect("criterion is registered");
        let out = check.run(&opts);
        let in_time = out.seconds < budget;
        let ok = out.passed && in_time;
        let line = out.summary();
        println!(
            "criterion {id:>2}: {} | runtime {:.1} s < {budget} s{}",
            line.replacen(
                if out.passed { "[PASS]" } else { "[FAIL]" },
                if ok { "[PASS]" } else { "[FAIL]" },
                1
            ),
            out.seconds,
            if in_time { "" } else { " !" }
        );
        if !ok {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("all {} criteria pass", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
