//! Scenario file schema (versioned, fail-closed: unknown fields are
//! rejected).

use anyhow::{bail, Context, Result};
use cosob_core::energy::QuadratureSpec;
use cosob_core::gallery::ExampleFamily;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub id: String,
    #[serde(default)]
    pub description: String,
    /// Default report directory; a `--out` flag overrides it.
    #[serde(default)]
    pub out: Option<std::path::PathBuf>,
    pub checks: Vec<Check>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text).context("invalid scenario JSON")?;
        if s.schema != SCHEMA_VERSION {
            bail!("unsupported schema version {} (expected {SCHEMA_VERSION})", s.schema);
        }
        for c in &s.checks {
            c.validate()?;
        }
        Ok(s)
    }
}

/// Addressable example families.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub id: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub ell: Option<usize>,
}

impl FamilySpec {
    pub fn to_family(&self) -> Result<ExampleFamily> {
        let alpha = || self.alpha.context("family requires `alpha`");
        let m = || self.m.context("family requires `m`");
        let fam = match self.id.as_str() {
            "spiral" => ExampleFamily::Spiral { alpha: alpha()?, m: m()? },
            "radial_power" => ExampleFamily::RadialPower { alpha: alpha()?, m: m()? },
            "hedgehog" => ExampleFamily::Hedgehog { m: m()? },
            "mollified_spiral" => ExampleFamily::MollifiedSpiral {
                alpha: alpha()?,
                m: m()?,
                ell: self.ell.context("family requires `ell`")?,
            },
            "osc_power" => ExampleFamily::OscPower {
                alpha: alpha()?,
                beta: self.beta.context("family requires `beta`")?,
                m: m()?,
            },
            "geodesic_wind" => ExampleFamily::GeodesicWind {
                ell: self.ell.context("family requires `ell`")?,
            },
            "geodesic_radial" => ExampleFamily::GeodesicRadial { alpha: alpha()?, m: m()? },
            other => bail!("unknown family id `{other}`"),
        };
        Ok(fam)
    }

    pub fn params_string(&self) -> String {
        let mut parts = Vec::new();
        if let Some(a) = self.alpha {
            parts.push(format!("alpha={a}"));
        }
        if let Some(b) = self.beta {
            parts.push(format!("beta={b}"));
        }
        if let Some(m) = self.m {
            parts.push(format!("m={m}"));
        }
        if let Some(l) = self.ell {
            parts.push(format!("ell={l}"));
        }
        parts.join(";")
    }
}

/// Addressable manifold kinds.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    Euclidean { dim: usize },
    Circle { radius: f64 },
    Sphere { dim: usize, radius: f64 },
    Product { left: Box<ManifoldSpec>, right: Box<ManifoldSpec> },
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<cosob_core::Manifold> {
        use cosob_core::Manifold;
        let man = match self {
            ManifoldSpec::Euclidean { dim } => Manifold::euclidean(*dim),
            ManifoldSpec::Circle { radius } => Manifold::circle(*radius),
            ManifoldSpec::Sphere { dim, radius } => Manifold::sphere(*dim, *radius),
            ManifoldSpec::Product { left, right } => {
                return cosob_core::Manifold::product(left.build()?, right.build()?)
                    .map_err(|e| anyhow::anyhow!("{e}"))
            }
        };
        man.map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn name(&self) -> String {
        match self {
            ManifoldSpec::Euclidean { dim } => format!("euclidean({dim})"),
            ManifoldSpec::Circle { radius } => format!("circle({radius})"),
            ManifoldSpec::Sphere { dim, radius } => format!("sphere({dim},{radius})"),
            ManifoldSpec::Product { left, right } => {
                format!("product({},{})", left.name(), right.name())
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Finite,
    Divergent,
    Inconclusive,
    Value { value: f64, tol: f64 },
    RatioInfinite,
    RatioFinite,
}

/// One verification check. The specialized variants mirror the acceptance
/// criteria; `energy`, `oscillation` and `gn_ratio` are the generic
/// building blocks for ad-hoc scenarios.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    Energy {
        family: FamilySpec,
        order: usize,
        exponent: f64,
        quadrature: QuadratureSpec,
        expect: Expectation,
    },
    Oscillation {
        family: FamilySpec,
        quadrature: QuadratureSpec,
        expect: Expectation,
    },
    GnRatio {
        family: FamilySpec,
        k: usize,
        j: usize,
        p: f64,
        quadrature: QuadratureSpec,
        expect: Expectation,
    },
    Chainrule {
        family: FamilySpec,
        order: usize,
        quadrature: QuadratureSpec,
        #[serde(default)]
        window: Option<(f64, f64)>,
        expect: Expectation,
        /// Optional pointwise |Tu| closed-form check `alpha |x|^{-alpha-1}`
        /// at this tolerance on the analytic path.
        #[serde(default)]
        tangent_norm_tol: Option<f64>,
    },
    SasakiIdentity {
        samples: usize,
        seed: u64,
        tol_analytic: f64,
        tol_fd: f64,
    },
    HessianAgreement {
        samples: usize,
        seed: u64,
        tol: f64,
    },
    GeodesicAnnihilation {
        ell: usize,
        samples: usize,
        tol_hessian: f64,
        tol_energy: f64,
        angular_nodes: usize,
    },
    NormSubmultiplicative {
        pairs: usize,
        max_dim: usize,
        seed: u64,
        tol: f64,
    },
    DegenerateKtuple {
        samples: usize,
        dim: usize,
        seed: u64,
    },
    PartitionCounts {
        k_max: usize,
    },
    HelicalEmbedding {
        lambda: f64,
        gamma: f64,
        mu: f64,
        samples: usize,
        seed: u64,
        tol_isometry: f64,
        tol_split: f64,
        tol_constant: f64,
    },
    Kato {
        samples_order2: usize,
        samples_order3: usize,
        seed: u64,
        tol: f64,
    },
    HmRoundtrip {
        samples: usize,
        seed: u64,
        tol: f64,
    },
    GnTable {
        n_annuli: usize,
        radial_nodes: usize,
        angular_nodes: usize,
    },
    Determinism {
        threads: Vec<usize>,
        scenario_ids: Vec<String>,
    },
    /// Geometric invariants of a named manifold kind: SPD metric, symmetric
    /// Christoffel symbols, idempotent projector, pullback consistency.
    ManifoldInvariants {
        manifold: ManifoldSpec,
        samples: usize,
        seed: u64,
        tol: f64,
    },
}

impl Check {
    pub fn validate(&self) -> Result<()> {
        for (name, tol) in self.tolerances() {
            if tol.is_nan() || tol <= 0.0 {
                bail!("tolerance `{name}` must be positive, got {tol}");
            }
        }
        match self {
            Check::Energy { quadrature, .. }
            | Check::Oscillation { quadrature, .. }
            | Check::GnRatio { quadrature, .. }
            | Check::Chainrule { quadrature, .. } => {
                quadrature.validate().map_err(|e| anyhow::anyhow!("{e}"))
            }
            Check::Determinism { threads, .. } if threads.len() < 2 => {
                bail!("determinism check needs at least two thread counts")
            }
            _ => Ok(()),
        }
    }

    fn tolerances(&self) -> Vec<(&'static str, f64)> {
        match self {
            Check::SasakiIdentity { tol_analytic, tol_fd, .. } => {
                vec![("tol_analytic", *tol_analytic), ("tol_fd", *tol_fd)]
            }
            Check::HessianAgreement { tol, .. }
            | Check::NormSubmultiplicative { tol, .. }
            | Check::Kato { tol, .. }
            | Check::HmRoundtrip { tol, .. }
            | Check::ManifoldInvariants { tol, .. } => vec![("tol", *tol)],
            Check::GeodesicAnnihilation { tol_hessian, tol_energy, .. } => {
                vec![("tol_hessian", *tol_hessian), ("tol_energy", *tol_energy)]
            }
            Check::HelicalEmbedding { tol_isometry, tol_split, tol_constant, .. } => vec![
                ("tol_isometry", *tol_isometry),
                ("tol_split", *tol_split),
                ("tol_constant", *tol_constant),
            ],
            Check::Chainrule { tangent_norm_tol, .. } => tangent_norm_tol
                .map(|t| vec![("tangent_norm_tol", t)])
                .unwrap_or_default(),
            Check::Energy { expect, .. } | Check::Oscillation { expect, .. } => match expect {
                Expectation::Value { tol, .. } => vec![("expect.tol", *tol)],
                _ => vec![],
            },
            _ => vec![],
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Check::Energy { .. } => "energy",
            Check::Oscillation { .. } => "oscillation",
            Check::GnRatio { .. } => "gn_ratio",
            Check::Chainrule { .. } => "chainrule",
            Check::SasakiIdentity { .. } => "sasaki_identity",
            Check::HessianAgreement { .. } => "hessian_agreement",
            Check::GeodesicAnnihilation { .. } => "geodesic_annihilation",
            Check::NormSubmultiplicative { .. } => "norm_submultiplicative",
            Check::DegenerateKtuple { .. } => "degenerate_ktuple",
            Check::PartitionCounts { .. } => "partition_counts",
            Check::HelicalEmbedding { .. } => "helical_embedding",
            Check::Kato { .. } => "kato",
            Check::HmRoundtrip { .. } => "hm_roundtrip",
            Check::GnTable { .. } => "gn_table",
            Check::Determinism { .. } => "determinism",
            Check::ManifoldInvariants { .. } => "manifold_invariants",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "schema": 1, "id": "x", "checks": [],
            "surprise": true
        }"#;
        assert!(Scenario::parse(text).is_err());
    }

    #[test]
    fn wrong_schema_version_rejected() {
        let text = r#"{"schema": 2, "id": "x", "checks": []}"#;
        assert!(Scenario::parse(text).is_err());
    }

    #[test]
    fn invalid_quadrature_rejected() {
        let text = r#"{
            "schema": 1, "id": "x", "checks": [
                {"kind": "energy",
                 "family": {"id": "hedgehog", "m": 3},
                 "order": 1, "exponent": 2.0,
                 "quadrature": {"domain": {"kind": "ball", "radius": 1.0, "m": 3},
                                "n_annuli": 0, "radial_nodes": 4, "angular_nodes": 4},
                 "expect": "finite"}
            ]
        }"#;
        assert!(Scenario::parse(text).is_err());
    }

    #[test]
    fn nonpositive_tolerances_rejected() {
        let text = r#"{
            "schema": 1, "id": "x", "checks": [
                {"kind": "hm_roundtrip", "samples": 10, "seed": 1, "tol": -1e-7}
            ]
        }"#;
        assert!(Scenario::parse(text).is_err());
    }

    #[test]
    fn family_parsing() {
        let f = FamilySpec {
            id: "spiral".into(),
            alpha: Some(1.5),
            beta: None,
            m: Some(3),
            ell: None,
        };
        assert!(f.to_family().is_ok());
        let f = FamilySpec { id: "nope".into(), alpha: None, beta: None, m: None, ell: None };
        assert!(f.to_family().is_err());
    }
}
