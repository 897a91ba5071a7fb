//! Deterministic report rendering: JSON and CSV with fixed field order, no
//! timestamps, and runtime columns left empty unless timing was requested.

use crate::checks::{CheckOutcome, ScenarioReport};
use anyhow::{Context, Result};
use std::path::Path;

pub const CSV_HEADER: [&str; 11] = [
    "scenario_id",
    "check_id",
    "family",
    "params",
    "order",
    "exponent",
    "value",
    "classification",
    "expected",
    "verdict",
    "runtime_ms",
];

pub fn render_json(reports: &[ScenarioReport]) -> Result<String> {
    serde_json::to_string_pretty(reports).context("serializing report JSON")
}

pub fn render_csv(reports: &[ScenarioReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for rep in reports {
        for o in &rep.outcomes {
            w.write_record([
                rep.scenario_id.as_str(),
                o.check_id.as_str(),
                o.family.as_str(),
                o.params.as_str(),
                o.order.as_str(),
                o.exponent.as_str(),
                o.value.as_str(),
                o.classification.as_str(),
                o.expected.as_str(),
                if o.verdict { "pass" } else { "FAIL" },
                &o.runtime_ms.map(|t| t.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    let bytes = w.into_inner().context("flushing CSV writer")?;
    String::from_utf8(bytes).context("CSV is not UTF-8")
}

pub fn write_reports(reports: &[ScenarioReport], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    std::fs::write(out_dir.join("report.json"), render_json(reports)?)?;
    std::fs::write(out_dir.join("report.csv"), render_csv(reports)?)?;
    Ok(())
}

fn truncate(s: &str, width: usize) -> String {
    if s.len() <= width {
        s.to_string()
    } else {
        format!("{}...", &s[..width.saturating_sub(3)])
    }
}

pub fn print_table(reports: &[ScenarioReport]) {
    println!(
        "{:<28} {:<26} {:<30} {:<34} verdict",
        "scenario", "check", "value", "expected"
    );
    println!("{}", "-".repeat(130));
    for rep in reports {
        for o in &rep.outcomes {
            println!(
                "{:<28} {:<26} {:<30} {:<34} {}",
                truncate(&rep.scenario_id, 28),
                truncate(&o.check_id, 26),
                truncate(&o.value, 30),
                truncate(&o.expected, 34),
                if o.verdict { "PASS" } else { "FAIL" }
            );
        }
    }
    let total: usize = reports.iter().map(|r| r.outcomes.len()).sum();
    let passed: usize = reports
        .iter()
        .flat_map(|r| &r.outcomes)
        .filter(|o| o.verdict)
        .count();
    println!("{}", "-".repeat(130));
    println!("{passed}/{total} checks passed");
}

pub fn outcome_summary(outcomes: &[CheckOutcome]) -> String {
    let passed = outcomes.iter().filter(|o| o.verdict).count();
    format!("{passed}/{} checks passed", outcomes.len())
}
