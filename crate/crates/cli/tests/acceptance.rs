//! Acceptance suite: runs every gate criterion at its stated tolerance and
//! runtime budget, printing one pass/fail line per criterion
//! (`cargo test -p cdlab-cli --test acceptance -- --nocapture`).
//!
//! Criteria 1-9 call the battery directly; criterion 10 runs the `cdlab`
//! binary twice and compares the CSV artifacts byte for byte.

use cdlab_core::battery::{self, CheckOutcome};
use std::path::Path;
use std::process::Command;

const SEED: u64 = 42;

struct Criterion {
    budget_ms: f64,
    outcome: CheckOutcome,
}

fn report(c: &Criterion) -> bool {
    let within_budget = c.outcome.elapsed_ms <= c.budget_ms;
    let ok = c.outcome.passed && within_budget;
    let metrics: Vec<String> = c
        .outcome
        .metrics
        .iter()
        .map(|(k, v)| format!("{k}={v:.3e}"))
        .collect();
    println!(
        "criterion {:>2} ({}): {} [{:.0} ms / {:.0} ms] {}",
        c.outcome.index,
        c.outcome.name,
        if ok { "PASS" } else { "FAIL" },
        c.outcome.elapsed_ms,
        c.budget_ms,
        metrics.join(" ")
    );
    ok
}

fn run_binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cdlab"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("running cdlab binary")
}

fn read_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let e = e.unwrap();
            let name = e.file_name().to_string_lossy().to_string();
            if name.ends_with(".csv") {
                Some((name, std::fs::read(e.path()).unwrap()))
            } else {
                None
            }
        })
        .collect();
    files.sort();
    files
}

#[test]
fn acceptance_suite() {
    let workspace_config = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/default.toml")
        .canonicalize()
        .unwrap();

    let criteria = vec![
        Criterion {
            budget_ms: 10_000.0,
            outcome: battery::check_intertwining_battery(SEED).unwrap(),
        },
        Criterion {
            budget_ms: 1_000.0,
            outcome: battery::check_recursions(SEED).unwrap(),
        },
        Criterion {
            budget_ms: 30_000.0,
            outcome: battery::check_boundedness_dichotomy().unwrap(),
        },
        Criterion {
            budget_ms: 60_000.0,
            outcome: battery::check_sylvester_closed_box().unwrap(),
        },
        Criterion {
            budget_ms: 60_000.0,
            outcome: battery::check_similarity_reduction().unwrap(),
        },
        Criterion {
            budget_ms: 20_000.0,
            outcome: battery::check_curvature_and_sff().unwrap(),
        },
        Criterion {
            budget_ms: 30_000.0,
            outcome: battery::check_commutant().unwrap(),
        },
        Criterion {
            budget_ms: 1_000.0,
            outcome: battery::check_irreducibility_probe().unwrap(),
        },
        Criterion {
            budget_ms: 120_000.0,
            outcome: battery::check_power_bound_dichotomy().unwrap(),
        },
    ];
    let mut all_ok = true;
    for c in &criteria {
        all_ok &= report(c);
    }

    // criterion 10: the suite command is byte-reproducible
    let tmp = tempfile::tempdir().unwrap();
    let out1 = tmp.path().join("run1");
    let out2 = tmp.path().join("run2");
    let cfg = workspace_config.to_str().unwrap();
    for out in [&out1, &out2] {
        let res = run_binary(&[
            "suite",
            "--config",
            cfg,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "7",
        ]);
        assert!(
            res.status.success(),
            "suite run failed: {}",
            String::from_utf8_lossy(&res.stderr)
        );
    }
    let (a, b) = (read_csvs(&out1), read_csvs(&out2));
    let reproducible = !a.is_empty() && a == b;
    println!(
        "criterion 10 (reproducibility): {} [{} CSV file(s) compared]",
        if reproducible { "PASS" } else { "FAIL" },
        a.len()
    );
    all_ok &= reproducible;

    assert!(all_ok, "acceptance criteria failed; see the lines above");
}
