//! Quadrature of Sobolev energies over balls, spheres, annuli and circles
//! with singularity-aware annular decomposition and a geometric-ratio
//! divergence classifier.
//!
//! Balls decompose into dyadic annuli shrinking toward the origin; each
//! annulus uses Gauss-Legendre nodes in radius crossed with a product rule on
//! the unit sphere (Gauss-Legendre in polar angles, trapezoid in azimuth).
//! Per-annulus sums and all reductions use fixed pairwise summation trees, so
//! results are bit-identical regardless of how many worker threads computed
//! the annuli.

use crate::error::{CoreError, Result};
use crate::jet::covariant_norm;
use crate::manifold::Manifold;
use crate::map::SmoothMap;
use crate::multinorm::{ktuple_norm_morphism, tangent_prolongation};
use crate::pairwise_sum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Margin of the geometric-ratio divergence test.
pub const RATIO_MARGIN: f64 = 0.05;
/// Number of innermost annuli entering the ratio estimate.
pub const RATIO_WINDOW: usize = 5;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainKind {
    Ball { radius: f64, m: usize },
    Sphere { k: usize, radius: f64 },
    Annulus { r_in: f64, r_out: f64, m: usize },
    Circle { radius: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub domain: DomainKind,
    pub n_annuli: usize,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.domain {
            DomainKind::Ball { radius, m } => radius > 0.0 && m >= 1,
            DomainKind::Sphere { k, radius } => radius > 0.0 && k >= 1,
            DomainKind::Annulus { r_in, r_out, .. } => r_out > r_in && r_in > 0.0,
            DomainKind::Circle { radius } => radius > 0.0,
        };
        if !ok {
            return Err(CoreError::Config("invalid quadrature domain".into()));
        }
        if self.n_annuli < 4 {
            return Err(CoreError::Config(format!(
                "n_annuli must be >= 4, got {}",
                self.n_annuli
            )));
        }
        if self.radial_nodes < 2 || self.angular_nodes < 2 {
            return Err(CoreError::Config("node counts must be >= 2".into()));
        }
        Ok(())
    }

    /// Checks that the quadrature domain matches the map's domain manifold.
    pub fn check_domain(&self, manifold: &Manifold) -> Result<()> {
        let ok = match (&self.domain, manifold) {
            (DomainKind::Ball { m, .. }, Manifold::Euclidean { dim }) => m == dim,
            (DomainKind::Annulus { m, .. }, Manifold::Euclidean { dim }) => m == dim,
            (DomainKind::Sphere { k, radius }, Manifold::Sphere { dim, radius: r }) => {
                k == dim && (radius - r).abs() < 1e-12
            }
            (DomainKind::Circle { radius }, Manifold::Circle { radius: r }) => {
                (radius - r).abs() < 1e-12
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(CoreError::Domain(
                "quadrature domain does not match the map's domain manifold".into(),
            ))
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Finite,
    Divergent,
    Inconclusive,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Finite => "finite",
            Classification::Divergent => "divergent",
            Classification::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Quadrature result with the annular profile toward the singular point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Total including a geometric tail extrapolation; `None` when divergent.
    pub value: Option<f64>,
    /// Per-annulus integrals, outermost first.
    pub annular_sums: Vec<f64>,
    /// Geometric mean of consecutive ratios over the innermost annuli.
    pub growth_ratio: Option<f64>,
    pub classification: Classification,
    pub est_error: f64,
}

impl EnergyReport {
    pub fn csv_value(&self) -> String {
        match self.value {
            Some(v) => format!("{v}"),
            None => "inf".to_string(),
        }
    }

    /// CSV row `value,classification,ratio,n_annuli,est_error`.
    pub fn csv_row(&self) -> String {
        let ratio = self
            .growth_ratio
            .map(|r| format!("{r}"))
            .unwrap_or_default();
        let est = if self.est_error.is_finite() {
            format!("{}", self.est_error)
        } else {
            "inf".to_string()
        };
        format!(
            "{},{},{},{},{}",
            self.csv_value(),
            self.classification,
            ratio,
            self.annular_sums.len(),
            est
        )
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // P_n(x) and P'_n(x)
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gauss_legendre_on(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    xs.iter()
        .zip(&ws)
        .map(|(&x, &w)| (mid + half * x, half * w))
        .collect()
}

/// Product-rule nodes on the unit sphere `S^k` in `R^{k+1}`; weights sum to
/// the sphere measure up to the polar-rule accuracy. Node sets are closed
/// under the antipodal map.
fn unit_sphere_nodes(k: usize, n_ang: usize) -> Vec<(Vec<f64>, f64)> {
    match k {
        0 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        1 => {
            let n = 2 * n_ang.max(2);
            (0..n)
                .map(|j| {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                    (vec![phi.cos(), phi.sin()], 2.0 * PI / n as f64)
                })
                .collect()
        }
        _ => {
            // S^k = { (sin t * w, cos t) : t in [0, pi], w in S^{k-1} },
            // measure sin^{k-1} t dt dS^{k-1}
            let inner = unit_sphere_nodes(k - 1, n_ang);
            let polar = gauss_legendre_on(0.0, PI, n_ang.max(4));
            let mut out = Vec::with_capacity(inner.len() * polar.len());
            for &(t, wt) in &polar {
                let (st, ct) = t.sin_cos();
                let weight_polar = wt * st.powi(k as i32 - 1);
                for (w, ww) in &inner {
                    let mut p: Vec<f64> = w.iter().map(|&c| c * st).collect();
                    p.push(ct);
                    out.push((p, weight_polar * ww));
                }
            }
            out
        }
    }
}

/// One radial shell with its quadrature nodes.
struct Shell {
    r_in: f64,
    r_out: f64,
}

fn shells(spec: &QuadratureSpec) -> Vec<Shell> {
    match spec.domain {
        DomainKind::Ball { radius, .. } => (0..spec.n_annuli)
            .map(|i| Shell {
                r_in: radius * 0.5_f64.powi(i as i32 + 1),
                r_out: radius * 0.5_f64.powi(i as i32),
            })
            .collect(),
        DomainKind::Annulus { r_in, r_out, .. } => {
            let q = (r_in / r_out).powf(1.0 / spec.n_annuli as f64);
            (0..spec.n_annuli)
                .map(|i| Shell {
                    r_in: r_out * q.powi(i as i32 + 1),
                    r_out: r_out * q.powi(i as i32),
                })
                .collect()
        }
        _ => vec![],
    }
}

/// Integration nodes `(ambient point, weight)` for a full (sub)domain.
fn shell_nodes(
    m: usize,
    shell: &Shell,
    radial_nodes: usize,
    sphere: &[(Vec<f64>, f64)],
) -> Vec<(Vec<f64>, f64)> {
    let radial = gauss_legendre_on(shell.r_in, shell.r_out, radial_nodes);
    let mut out = Vec::with_capacity(radial.len() * sphere.len());
    for &(r, wr) in &radial {
        let vol = wr * r.powi(m as i32 - 1);
        for (omega, wo) in sphere {
            let p: Vec<f64> = omega.iter().map(|&c| c * r).collect();
            out.push((p, vol * wo));
        }
    }
    out
}

fn surface_nodes(spec: &QuadratureSpec) -> Vec<(Vec<f64>, f64)> {
    match spec.domain {
        DomainKind::Sphere { k, radius } => unit_sphere_nodes(k, spec.angular_nodes)
            .into_iter()
            .map(|(p, w)| {
                (
                    p.iter().map(|&c| c * radius).collect(),
                    w * radius.powi(k as i32),
                )
            })
            .collect(),
        DomainKind::Circle { radius } => {
            let n = 2 * spec.angular_nodes.max(2);
            (0..n)
                .map(|j| {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                    (
                        vec![radius * phi.cos(), radius * phi.sin()],
                        2.0 * PI * radius / n as f64,
                    )
                })
                .collect()
        }
        _ => vec![],
    }
}

/// Evaluates integrals over every shell (annular domains) or the whole
/// surface (sphere/circle domains). Returns per-shell values, outermost
/// first, together with an indicator-mix flag per shell.
fn integrate_shells<F>(spec: &QuadratureSpec, integrand: F) -> Result<(Vec<f64>, Vec<bool>)>
where
    F: Fn(&[f64]) -> Result<(f64, bool)> + Sync,
{
    match spec.domain {
        DomainKind::Ball { m, .. } | DomainKind::Annulus { m, .. } => {
            let sphere = unit_sphere_nodes(m - 1, spec.angular_nodes);
            let shell_list = shells(spec);
            let results: Vec<Result<(f64, bool)>> = shell_list
                .par_iter()
                .map(|shell| {
                    let nodes = shell_nodes(m, shell, spec.radial_nodes, &sphere);
                    let mut vals = Vec::with_capacity(nodes.len());
                    let mut any_in = false;
                    let mut any_out = false;
                    for (p, w) in &nodes {
                        let (v, inside) = integrand(p)?;
                        if inside {
                            any_in = true;
                        } else {
                            any_out = true;
                        }
                        vals.push(v * w);
                    }
                    Ok((pairwise_sum(&vals), any_in && any_out))
                })
                .collect();
            let mut sums = Vec::with_capacity(results.len());
            let mut mixed = Vec::with_capacity(results.len());
            for r in results {
                let (s, mx) = r?;
                sums.push(s);
                mixed.push(mx);
            }
            Ok((sums, mixed))
        }
        DomainKind::Sphere { .. } | DomainKind::Circle { .. } => {
            let nodes = surface_nodes(spec);
            let mut vals = Vec::with_capacity(nodes.len());
            let mut any_in = false;
            let mut any_out = false;
            for (p, w) in &nodes {
                let (v, inside) = integrand(p)?;
                if inside {
                    any_in = true;
                } else {
                    any_out = true;
                }
                vals.push(v * w);
            }
            Ok((vec![pairwise_sum(&vals)], vec![any_in && any_out]))
        }
    }
}

fn coarse_spec(spec: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        domain: spec.domain.clone(),
        n_annuli: spec.n_annuli,
        radial_nodes: (spec.radial_nodes / 2).max(2),
        angular_nodes: (spec.angular_nodes / 2).max(2),
    }
}

/// Classifies an annular profile and assembles the report. `singular` marks
/// domains decomposed toward a singular point (balls): only those run the
/// geometric-ratio test.
fn classify(sums: Vec<f64>, singular: bool, mixed_extra: f64) -> EnergyReport {
    let n = sums.len();
    let max_sum = sums.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    if max_sum == 0.0 {
        return EnergyReport {
            value: Some(0.0),
            annular_sums: sums,
            growth_ratio: None,
            classification: Classification::Finite,
            est_error: 0.0,
        };
    }
    if !singular {
        let total = pairwise_sum(&sums);
        return EnergyReport {
            value: Some(total),
            annular_sums: sums,
            growth_ratio: None,
            classification: Classification::Finite,
            est_error: mixed_extra,
        };
    }
    if n < RATIO_WINDOW {
        return EnergyReport {
            value: None,
            annular_sums: sums,
            growth_ratio: None,
            classification: Classification::Inconclusive,
            est_error: f64::NAN,
        };
    }

    let window = &sums[n - RATIO_WINDOW..];
    let tail_max = window.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    if tail_max <= 1e-14 * max_sum {
        // innermost contributions vanished; treat the tail as zero
        let total = pairwise_sum(&sums);
        return EnergyReport {
            value: Some(total),
            annular_sums: sums,
            growth_ratio: None,
            classification: Classification::Finite,
            est_error: mixed_extra,
        };
    }
    if window.iter().any(|&v| v <= 0.0) {
        return EnergyReport {
            value: None,
            annular_sums: sums,
            growth_ratio: None,
            classification: Classification::Inconclusive,
            est_error: f64::NAN,
        };
    }
    let ratio = (window[RATIO_WINDOW - 1] / window[0]).powf(1.0 / (RATIO_WINDOW as f64 - 1.0));

    if ratio >= 1.0 + RATIO_MARGIN {
        EnergyReport {
            value: None,
            annular_sums: sums,
            growth_ratio: Some(ratio),
            classification: Classification::Divergent,
            est_error: f64::INFINITY,
        }
    } else if ratio <= 1.0 - RATIO_MARGIN {
        let partial = pairwise_sum(&sums);
        let tail = sums[n - 1] * ratio / (1.0 - ratio);
        let total = partial + tail;
        EnergyReport {
            value: Some(total),
            annular_sums: sums,
            growth_ratio: Some(ratio),
            classification: Classification::Finite,
            est_error: tail * ratio + mixed_extra,
        }
    } else {
        EnergyReport {
            value: None,
            annular_sums: sums,
            growth_ratio: Some(ratio),
            classification: Classification::Inconclusive,
            est_error: f64::NAN,
        }
    }
}

fn run_report<F>(spec: &QuadratureSpec, integrand: &F) -> Result<EnergyReport>
where
    F: Fn(&[f64]) -> Result<(f64, bool)> + Sync,
{
    spec.validate()?;
    let (sums, mixed) = integrate_shells(spec, integrand)?;
    if sums.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::Domain(
            "integrand undefined on part of the quadrature domain".into(),
        ));
    }
    // boundary-resolution error for sublevel windows: one annulus width
    let mixed_extra: f64 = sums
        .iter()
        .zip(&mixed)
        .filter(|(_, &mx)| mx)
        .map(|(s, _)| s.abs())
        .sum();
    let singular = matches!(spec.domain, DomainKind::Ball { .. });
    let mut report = classify(sums, singular, mixed_extra);
    if report.classification == Classification::Finite && report.value != Some(0.0) {
        // node-refinement error estimate from a coarser pass
        let coarse = coarse_spec(spec);
        if coarse != *spec {
            let (csums, _) = integrate_shells(&coarse, integrand)?;
            let delta = (pairwise_sum(&report.annular_sums) - pairwise_sum(&csums)).abs();
            report.est_error += delta;
        }
    }
    Ok(report)
}

/// `integral of |D^j_K u|^q` over the quadrature domain.
pub fn energy(u: &SmoothMap, j: usize, q: f64, spec: &QuadratureSpec) -> Result<EnergyReport> {
    if j > 4 {
        return Err(CoreError::UnsupportedOrder(j));
    }
    if q < 1.0 {
        return Err(CoreError::Config(format!("exponent q must be >= 1, got {q}")));
    }
    spec.check_domain(&u.domain)?;
    let integrand = |x: &[f64]| -> Result<(f64, bool)> {
        let norm = covariant_norm(u, x, j)?;
        Ok((norm.powf(q), true))
    };
    run_report(spec, &integrand)
}

/// Per-annulus profile `(r_in, r_out, integral)` of `|D^j_K u|^q`,
/// outermost first.
pub fn annular_profile(
    u: &SmoothMap,
    j: usize,
    q: f64,
    spec: &QuadratureSpec,
) -> Result<Vec<(f64, f64, f64)>> {
    let report = energy(u, j, q, spec)?;
    let bounds = shells(spec);
    Ok(bounds
        .iter()
        .zip(&report.annular_sums)
        .map(|(s, &v)| (s.r_in, s.r_out, v))
        .collect())
}

/// Essential oscillation: max geodesic distance between sampled values.
/// Deterministically subsamples the quadrature nodes to bound the pair count.
pub fn oscillation(u: &SmoothMap, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    spec.check_domain(&u.domain)?;
    let mut points: Vec<Vec<f64>> = Vec::new();
    match spec.domain {
        DomainKind::Ball { m, .. } | DomainKind::Annulus { m, .. } => {
            let sphere = unit_sphere_nodes(m - 1, spec.angular_nodes);
            for shell in shells(spec) {
                for (p, _) in shell_nodes(m, &shell, spec.radial_nodes, &sphere) {
                    points.push(p);
                }
            }
        }
        _ => {
            for (p, _) in surface_nodes(spec) {
                points.push(p);
            }
        }
    }
    let cap = 1500usize;
    let stride = points.len().div_ceil(cap).max(1);
    let sampled: Vec<&Vec<f64>> = points.iter().step_by(stride).collect();
    let values: Vec<Vec<f64>> = sampled
        .iter()
        .map(|p| u.target.project(&u.eval(p)))
        .collect::<Result<_>>()?;
    let mut best = 0.0_f64;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let d = u.target.distance(&values[i], &values[j])?;
            best = best.max(d);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum RatioOutcome {
    Finite(f64),
    Infinite,
    Inconclusive,
}

/// Interpolation-inequality ratio data: lhs energy `|D^j u|^{kp/j}` against
/// `osc^{(k-j)p/j} * integral |D^k u|^p`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GnRatioReport {
    pub k: usize,
    pub j: usize,
    pub p: f64,
    pub lhs: EnergyReport,
    pub rhs_energy: EnergyReport,
    pub osc: f64,
    pub rhs_value: Option<f64>,
    pub ratio: RatioOutcome,
}

pub fn gn_ratio(
    u: &SmoothMap,
    k: usize,
    j: usize,
    p: f64,
    spec: &QuadratureSpec,
) -> Result<GnRatioReport> {
    if !(1 <= j && j < k) {
        return Err(CoreError::Config(format!(
            "gn_ratio requires 1 <= j < k, got j={j}, k={k}"
        )));
    }
    let lhs = energy(u, j, k as f64 * p / j as f64, spec)?;
    let rhs_energy = energy(u, k, p, spec)?;
    let osc = oscillation(u, spec)?;
    let factor = osc.powf((k - j) as f64 / j as f64 * p);
    let rhs_value = rhs_energy.value.map(|v| factor * v);
    let ratio = match (lhs.classification, rhs_energy.classification) {
        (Classification::Divergent, Classification::Finite) => RatioOutcome::Infinite,
        (Classification::Finite, Classification::Finite) => {
            let lv = lhs.value.unwrap_or(0.0);
            let rv = rhs_value.unwrap_or(0.0);
            // a right-hand side below the quadrature noise floor counts as
            // zero (pointwise-annihilated top-order energies land here)
            if rv <= 1e-9 * (1.0 + lv.abs()) {
                if lv > 1e-9 {
                    RatioOutcome::Infinite
                } else {
                    RatioOutcome::Inconclusive
                }
            } else {
                RatioOutcome::Finite(lv / rv)
            }
        }
        (Classification::Finite, Classification::Divergent) => RatioOutcome::Finite(0.0),
        _ => RatioOutcome::Inconclusive,
    };
    Ok(GnRatioReport {
        k,
        j,
        p,
        lhs,
        rhs_energy,
        osc,
        rhs_value,
        ratio,
    })
}

/// Restriction of the integration to a sublevel set of the map's values.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum SublevelSet {
    /// No restriction (the compact set is the whole target).
    All,
    /// Scalar targets only: `u(x)` within the closed interval.
    ScalarInterval { lo: f64, hi: f64 },
}

/// Integral of the canonical k-tuple norm of the k-th tangent prolongation
/// over the domain intersected with `u^{-1}(L)`; indicator sampled pointwise,
/// mixed annuli contribute one annulus width of resolution to `est_error`.
pub fn chainrule_integral(
    u: &SmoothMap,
    k: usize,
    spec: &QuadratureSpec,
    sublevel: &SublevelSet,
) -> Result<EnergyReport> {
    if !(1..=3).contains(&k) {
        return Err(CoreError::UnsupportedOrder(k));
    }
    if matches!(sublevel, SublevelSet::ScalarInterval { .. }) && u.target.ambient_dim() != 1 {
        return Err(CoreError::Config(
            "scalar sublevel windows require a one-dimensional target".into(),
        ));
    }
    spec.check_domain(&u.domain)?;
    let integrand = |x: &[f64]| -> Result<(f64, bool)> {
        let inside = match sublevel {
            SublevelSet::All => true,
            SublevelSet::ScalarInterval { lo, hi } => {
                let v = u.eval(x)[0];
                *lo <= v && v <= *hi
            }
        };
        if !inside {
            return Ok((0.0, false));
        }
        let prol = tangent_prolongation(u, x, k)?;
        Ok((ktuple_norm_morphism(&prol)?, true))
    };
    run_report(spec, &integrand)
}

/// Exposes the unit-sphere measure of `S^k` (for tests and normalizations).
pub fn sphere_measure(k: usize) -> f64 {
    // |S^k| = 2 pi^{(k+1)/2} / Gamma((k+1)/2)
    let kh = (k as f64 + 1.0) / 2.0;
    2.0 * PI.powf(kh) / gamma(kh)
}

fn gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = G[0];
        let t = x + 7.5;
        for (i, &g) in G.iter().enumerate().skip(1) {
            a += g / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Weighted integration nodes of the full quadrature domain; used by callers
/// needing raw sampling (pointwise sweeps over the domain).
pub fn domain_nodes(spec: &QuadratureSpec) -> Result<Vec<(Vec<f64>, f64)>> {
    spec.validate()?;
    match spec.domain {
        DomainKind::Ball { m, .. } | DomainKind::Annulus { m, .. } => {
            let sphere = unit_sphere_nodes(m - 1, spec.angular_nodes);
            let mut out = Vec::new();
            for shell in shells(spec) {
                out.extend(shell_nodes(m, &shell, spec.radial_nodes, &sphere));
            }
            Ok(out)
        }
        _ => Ok(surface_nodes(spec)),
    }
}
