//! Batch verification harness: scenario parsing, the check implementations,
//! deterministic report rendering, and the built-in acceptance suite.

pub mod checks;
pub mod report;
pub mod scenario;

use anyhow::Result;
use checks::{CheckContext, ScenarioReport};
use scenario::Scenario;

/// The acceptance suite: one scenario file per criterion, shipped in the repo
/// and embedded in the binary.
pub const BUILTIN_SCENARIOS: &[(&str, &str)] = &[
    ("c01-sasaki-identity", include_str!("../scenarios/c01_sasaki_identity.json")),
    ("c02-hessian-agreement", include_str!("../scenarios/c02_hessian_agreement.json")),
    ("c03-geodesic-annihilation", include_str!("../scenarios/c03_geodesic_annihilation.json")),
    ("c04-strict-inclusion", include_str!("../scenarios/c04_strict_inclusion.json")),
    ("c05-chainrule-spiral", include_str!("../scenarios/c05_chainrule_spiral.json")),
    ("c06-chainrule-oscpower", include_str!("../scenarios/c06_chainrule_oscpower.json")),
    ("c07-submultiplicativity", include_str!("../scenarios/c07_submultiplicativity.json")),
    ("c08-degenerate-ktuple", include_str!("../scenarios/c08_degenerate_ktuple.json")),
    ("c09-partition-counts", include_str!("../scenarios/c09_partition_counts.json")),
    ("c10-helical-embedding", include_str!("../scenarios/c10_helical_embedding.json")),
    ("c11-kato", include_str!("../scenarios/c11_kato.json")),
    ("c12-hm-roundtrip", include_str!("../scenarios/c12_hm_roundtrip.json")),
    ("c13-gn-table", include_str!("../scenarios/c13_gn_table.json")),
    ("c14-determinism", include_str!("../scenarios/c14_determinism.json")),
];

/// Parses a built-in scenario by id.
pub fn builtin_scenario(id: &str) -> Option<Scenario> {
    BUILTIN_SCENARIOS
        .iter()
        .find(|(sid, _)| *sid == id)
        .and_then(|(_, text)| Scenario::parse(text).ok())
}

/// Runs the full acceptance suite. Scenarios execute in parallel on the
/// worker pool; report order is fixed by the registry, so output bytes do not
/// depend on the thread count.
pub fn verify_suite(ctx: &CheckContext) -> Result<Vec<ScenarioReport>> {
    use rayon::prelude::*;
    BUILTIN_SCENARIOS
        .par_iter()
        .map(|(id, text)| {
            let scenario = Scenario::parse(text)
                .map_err(|e| anyhow::anyhow!("builtin scenario `{id}` invalid: {e}"))?;
            checks::run_scenario(&scenario, ctx)
        })
        .collect()
}
