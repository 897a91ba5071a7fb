//! Acceptance suite: runs every built-in verification scenario at its pinned
//! tolerance, printing one pass/fail line per criterion and enforcing the
//! documented runtime budgets. Run with `--nocapture` to see the table.

use cosob::checks::{run_scenario, CheckContext};
use cosob::scenario::Scenario;
use std::time::Instant;

/// (scenario id, runtime budget in seconds; None = no stated budget)
const CRITERIA: [(&str, Option<f64>); 14] = [
    ("c01-sasaki-identity", Some(5.0)),
    ("c02-hessian-agreement", Some(5.0)),
    ("c03-geodesic-annihilation", Some(2.0)),
    ("c04-strict-inclusion", Some(10.0)),
    ("c05-chainrule-spiral", Some(10.0)),
    ("c06-chainrule-oscpower", Some(10.0)),
    ("c07-submultiplicativity", Some(1.0)),
    ("c08-degenerate-ktuple", Some(0.1)),
    ("c09-partition-counts", Some(0.1)),
    ("c10-helical-embedding", Some(2.0)),
    ("c11-kato", Some(10.0)),
    ("c12-hm-roundtrip", Some(2.0)),
    ("c13-gn-table", None),
    ("c14-determinism", None),
];

#[test]
fn acceptance_criteria_all_pass_within_budgets() {
    let ctx = CheckContext::default();
    let mut failures = Vec::new();
    for (id, budget) in CRITERIA {
        let scenario = cosob::builtin_scenario(id)
            .unwrap_or_else(|| panic!("missing builtin scenario {id}"));
        let start = Instant::now();
        let report = run_scenario(&scenario, &ctx)
            .unwrap_or_else(|e| panic!("scenario {id} errored: {e:#}"));
        let elapsed = start.elapsed().as_secs_f64();
        let passed = report.passed();
        let within = budget.map(|b| elapsed <= b).unwrap_or(true);
        println!(
            "{id:<28} {:<4} ({elapsed:.2}s{}){}",
            if passed { "PASS" } else { "FAIL" },
            budget
                .map(|b| format!(" / budget {b}s"))
                .unwrap_or_default(),
            if within { "" } else { "  OVER BUDGET" },
        );
        for o in &report.outcomes {
            println!(
                "    {:<28} value={} expected={} -> {}",
                o.check_id,
                o.value,
                o.expected,
                if o.verdict { "pass" } else { "FAIL" }
            );
        }
        if !passed {
            failures.push(format!("{id}: check failed"));
        }
        if !within {
            failures.push(format!("{id}: over runtime budget ({elapsed:.2}s)"));
        }
    }
    assert!(failures.is_empty(), "acceptance failures:\n{}", failures.join("\n"));
}

#[test]
fn injected_christoffel_sign_error_breaks_sasaki_identity() {
    let ctx = CheckContext { gamma_sign: -1.0, ..CheckContext::default() };
    let scenario = cosob::builtin_scenario("c01-sasaki-identity").unwrap();
    let report = run_scenario(&scenario, &ctx).unwrap();
    assert!(
        !report.passed(),
        "the Sasaki criterion must fail under the Christoffel sign fault"
    );
}

#[test]
fn every_criterion_maps_to_exactly_one_shipped_scenario_file() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut files: Vec<String> = std::fs::read_dir(&dir)
        .expect("scenarios directory")
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    files.sort();
    assert_eq!(files.len(), CRITERIA.len(), "one file per criterion");
    for ((id, _), file) in CRITERIA.iter().zip(&files) {
        let text = std::fs::read_to_string(dir.join(file)).unwrap();
        let s = Scenario::parse(&text).unwrap();
        assert_eq!(&s.id, id, "file {file} carries id {} (expected {id})", s.id);
    }
}
