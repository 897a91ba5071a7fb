//! Implementations of the verification checks behind scenarios and the
//! acceptance suite, each producing table/CSV rows.

use crate::scenario::{Check, Expectation, FamilySpec, Scenario};
use anyhow::{anyhow, bail, Context, Result};
use cosob_core::embedding::{extrinsic_split, helical_embed, isometry_residual_fd, second_fundamental_form};
use cosob_core::energy::{
    chainrule_integral, energy, gn_ratio, oscillation, Classification, DomainKind, QuadratureSpec,
    RatioOutcome, SublevelSet,
};
use cosob_core::gallery::{make_example, ExampleFamily};
use cosob_core::jet::{
    covariant_hessian, covariant_hessian_ambient, covariant_norm, hm_renormalize, sasaki_norm_sq,
    sasaki_norm_sq_split, scalar_field_gradient_norm, tangent_norm,
};
use cosob_core::manifold::Manifold;
use cosob_core::map::SmoothMap;
use cosob_core::multinorm::{
    compose_double, double_norm_morphism, enumerate_partitions, ktuple_norm_vector, DoubleMorphism,
    KTupleVector,
};
use cosob_core::samples::{random_flat_map, random_sphere_map, without_jet};
use cosob_core::tensor::Tensor;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

/// Execution context: fault injection and timing flags.
#[derive(Clone, Debug)]
pub struct CheckContext {
    /// Scales the Christoffel symbols inside the Sasaki horizontal lift;
    /// `-1.0` is the mutation-test hook and must make the identity fail.
    pub gamma_sign: f64,
    /// Record wall-clock runtimes in report rows (off by default: timed rows
    /// are not byte-reproducible).
    pub timings: bool,
}

impl Default for CheckContext {
    fn default() -> Self {
        CheckContext { gamma_sign: 1.0, timings: false }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CheckOutcome {
    pub check_id: String,
    pub family: String,
    pub params: String,
    pub order: String,
    pub exponent: String,
    pub value: String,
    pub classification: String,
    pub expected: String,
    pub verdict: bool,
    pub runtime_ms: Option<u128>,
}

impl CheckOutcome {
    fn new(check_id: &str) -> Self {
        CheckOutcome {
            check_id: check_id.to_string(),
            family: String::new(),
            params: String::new(),
            order: String::new(),
            exponent: String::new(),
            value: String::new(),
            classification: String::new(),
            expected: String::new(),
            verdict: false,
            runtime_ms: None,
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ScenarioReport {
    pub scenario_id: String,
    pub outcomes: Vec<CheckOutcome>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.verdict)
    }
}

pub fn run_scenario(scenario: &Scenario, ctx: &CheckContext) -> Result<ScenarioReport> {
    let mut outcomes = Vec::new();
    for check in &scenario.checks {
        let start = Instant::now();
        let mut rows = run_check(check, ctx)
            .with_context(|| format!("check `{}` in scenario `{}`", check.id(), scenario.id))?;
        if ctx.timings {
            let ms = start.elapsed().as_millis();
            for r in &mut rows {
                r.runtime_ms = Some(ms);
            }
        }
        outcomes.extend(rows);
    }
    Ok(ScenarioReport { scenario_id: scenario.id.clone(), outcomes })
}

pub fn run_check(check: &Check, ctx: &CheckContext) -> Result<Vec<CheckOutcome>> {
    match check {
        Check::Energy { family, order, exponent, quadrature, expect } => {
            check_energy(family, *order, *exponent, quadrature, expect)
        }
        Check::Oscillation { family, quadrature, expect } => {
            check_oscillation(family, quadrature, expect)
        }
        Check::GnRatio { family, k, j, p, quadrature, expect } => {
            check_gn_ratio(family, *k, *j, *p, quadrature, expect)
        }
        Check::Chainrule { family, order, quadrature, window, expect, tangent_norm_tol } => {
            check_chainrule(family, *order, quadrature, window, expect, tangent_norm_tol)
        }
        Check::SasakiIdentity { samples, seed, tol_analytic, tol_fd } => {
            check_sasaki(*samples, *seed, *tol_analytic, *tol_fd, ctx.gamma_sign)
        }
        Check::HessianAgreement { samples, seed, tol } => check_hessian_agreement(*samples, *seed, *tol),
        Check::GeodesicAnnihilation { ell, samples, tol_hessian, tol_energy, angular_nodes } => {
            check_geodesic_annihilation(*ell, *samples, *tol_hessian, *tol_energy, *angular_nodes)
        }
        Check::NormSubmultiplicative { pairs, max_dim, seed, tol } => {
            check_submultiplicative(*pairs, *max_dim, *seed, *tol)
        }
        Check::DegenerateKtuple { samples, dim, seed } => check_degenerate(*samples, *dim, *seed),
        Check::PartitionCounts { k_max } => check_partitions(*k_max),
        Check::HelicalEmbedding {
            lambda,
            gamma,
            mu,
            samples,
            seed,
            tol_isometry,
            tol_split,
            tol_constant,
        } => check_helical(*lambda, *gamma, *mu, *samples, *seed, *tol_isometry, *tol_split, *tol_constant),
        Check::Kato { samples_order2, samples_order3, seed, tol } => {
            check_kato(*samples_order2, *samples_order3, *seed, *tol)
        }
        Check::HmRoundtrip { samples, seed, tol } => check_hm(*samples, *seed, *tol),
        Check::GnTable { n_annuli, radial_nodes, angular_nodes } => {
            check_gn_table(*n_annuli, *radial_nodes, *angular_nodes)
        }
        Check::Determinism { threads, scenario_ids } => check_determinism(threads, scenario_ids),
        Check::ManifoldInvariants { manifold, samples, seed, tol } => {
            check_manifold_invariants(manifold, *samples, *seed, *tol)
        }
    }
}

fn check_manifold_invariants(
    spec: &crate::scenario::ManifoldSpec,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<CheckOutcome>> {
    let man = spec.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_exact = 0.0_f64;
    let mut worst_pullback = 0.0_f64;
    for _ in 0..samples {
        let p = man.random_point(&mut rng);
        let c = man.chart_at(&p);
        let x = man.to_chart(c, &p);
        let g = man.chart_metric(c, &x);
        if g.matrix.clone().cholesky().is_none() {
            bail!("metric not positive definite on {}", spec.name());
        }
        worst_exact = worst_exact.max(man.christoffel(c, &x).max_lower_asymmetry());
        let proj = man.tangent_projector(&p);
        worst_exact = worst_exact.max((&proj * &proj - &proj).abs().max());
        // pullback of the ambient metric through the embedding (FD Jacobian)
        let b = man.ambient_dim();
        let f = |xx: &[f64]| man.embed(c, xx);
        let j = cosob_core::numdiff::jacobian(&f, &x, b, cosob_core::numdiff::default_step(1, 1.0))
            .map_err(|e| anyhow!("{e}"))?;
        let jtj = j.transpose() * &j;
        worst_pullback = worst_pullback.max((jtj - g.matrix).abs().max());
    }
    let mut exact = CheckOutcome::new("manifold_invariants");
    exact.family = spec.name();
    exact.params = format!("samples={samples}");
    exact.value = format!("{worst_exact}");
    exact.expected = format!("<= {tol}");
    exact.verdict = worst_exact <= tol;
    let mut pullback = CheckOutcome::new("manifold_pullback");
    pullback.family = spec.name();
    pullback.params = format!("samples={samples}");
    pullback.value = format!("{worst_pullback}");
    pullback.expected = "<= 1e-7".into();
    pullback.verdict = worst_pullback <= 1e-7;
    Ok(vec![exact, pullback])
}

fn expectation_string(e: &Expectation) -> String {
    match e {
        Expectation::Finite => "finite".into(),
        Expectation::Divergent => "divergent".into(),
        Expectation::Inconclusive => "inconclusive".into(),
        Expectation::Value { value, tol } => format!("{value}+-{tol}"),
        Expectation::RatioInfinite => "ratio=inf".into(),
        Expectation::RatioFinite => "ratio finite".into(),
    }
}

fn classification_matches(c: Classification, e: &Expectation) -> bool {
    matches!(
        (c, e),
        (Classification::Finite, Expectation::Finite)
            | (Classification::Divergent, Expectation::Divergent)
            | (Classification::Inconclusive, Expectation::Inconclusive)
    )
}

fn check_energy(
    spec: &FamilySpec,
    order: usize,
    exponent: f64,
    quad: &QuadratureSpec,
    expect: &Expectation,
) -> Result<Vec<CheckOutcome>> {
    let fam = spec.to_family()?;
    let u = make_example(&fam).map_err(|e| anyhow!("{e}"))?;
    let rep = energy(&u, order, exponent, quad).map_err(|e| anyhow!("{e}"))?;
    let mut out = CheckOutcome::new("energy");
    out.family = spec.id.clone();
    out.params = spec.params_string();
    out.order = order.to_string();
    out.exponent = format!("{exponent}");
    out.value = rep.csv_value();
    out.classification = rep.classification.to_string();
    out.expected = expectation_string(expect);
    out.verdict = match expect {
        Expectation::Value { value, tol } => rep
            .value
            .map(|v| (v - value).abs() <= *tol)
            .unwrap_or(false),
        e => classification_matches(rep.classification, e),
    };
    Ok(vec![out])
}

fn check_oscillation(
    spec: &FamilySpec,
    quad: &QuadratureSpec,
    expect: &Expectation,
) -> Result<Vec<CheckOutcome>> {
    let u = make_example(&spec.to_family()?).map_err(|e| anyhow!("{e}"))?;
    let osc = oscillation(&u, quad).map_err(|e| anyhow!("{e}"))?;
    let mut out = CheckOutcome::new("oscillation");
    out.family = spec.id.clone();
    out.params = spec.params_string();
    out.value = format!("{osc}");
    out.expected = expectation_string(expect);
    out.verdict = match expect {
        Expectation::Value { value, tol } => (osc - value).abs() <= *tol,
        _ => bail!("oscillation checks need a value expectation"),
    };
    Ok(vec![out])
}

fn ratio_string(r: &RatioOutcome) -> String {
    match r {
        RatioOutcome::Finite(v) => format!("{v}"),
        RatioOutcome::Infinite => "inf".into(),
        RatioOutcome::Inconclusive => "inconclusive".into(),
    }
}

fn check_gn_ratio(
    spec: &FamilySpec,
    k: usize,
    j: usize,
    p: f64,
    quad: &QuadratureSpec,
    expect: &Expectation,
) -> Result<Vec<CheckOutcome>> {
    let u = make_example(&spec.to_family()?).map_err(|e| anyhow!("{e}"))?;
    let rep = gn_ratio(&u, k, j, p, quad).map_err(|e| anyhow!("{e}"))?;
    let mut out = CheckOutcome::new("gn_ratio");
    out.family = spec.id.clone();
    out.params = format!("{};k={k};j={j};p={p}", spec.params_string());
    out.order = format!("{j}/{k}");
    out.exponent = format!("{p}");
    out.value = ratio_string(&rep.ratio);
    out.classification = format!(
        "lhs={};rhs={}",
        rep.lhs.classification, rep.rhs_energy.classification
    );
    out.expected = expectation_string(expect);
    out.verdict = match expect {
        Expectation::RatioInfinite => rep.ratio == RatioOutcome::Infinite,
        Expectation::RatioFinite => matches!(rep.ratio, RatioOutcome::Finite(_)),
        Expectation::Inconclusive => rep.ratio == RatioOutcome::Inconclusive,
        _ => bail!("gn_ratio checks need a ratio expectation"),
    };
    Ok(vec![out])
}

fn check_chainrule(
    spec: &FamilySpec,
    order: usize,
    quad: &QuadratureSpec,
    window: &Option<(f64, f64)>,
    expect: &Expectation,
    tangent_norm_tol: &Option<f64>,
) -> Result<Vec<CheckOutcome>> {
    let fam = spec.to_family()?;
    let u = make_example(&fam).map_err(|e| anyhow!("{e}"))?;
    let sublevel = match window {
        None => SublevelSet::All,
        Some((lo, hi)) => SublevelSet::ScalarInterval { lo: *lo, hi: *hi },
    };
    let rep = chainrule_integral(&u, order, quad, &sublevel).map_err(|e| anyhow!("{e}"))?;
    let mut rows = Vec::new();
    let mut out = CheckOutcome::new("chainrule");
    out.family = spec.id.clone();
    out.params = spec.params_string();
    out.order = order.to_string();
    out.value = rep.csv_value();
    out.classification = rep.classification.to_string();
    out.expected = expectation_string(expect);
    out.verdict = classification_matches(rep.classification, expect);
    rows.push(out);

    if let Some(tol) = tangent_norm_tol {
        // pointwise |Tu| against the closed form alpha |x|^{-alpha-1}
        let alpha = spec.alpha.context("tangent norm check needs alpha")?;
        let m = spec.m.context("tangent norm check needs m")?;
        let mut worst = 0.0_f64;
        for i in 0..50 {
            let r = 0.3 + 0.6 * (i as f64) / 49.0;
            let mut x = vec![0.0; m];
            x[0] = r * 0.8;
            x[1] = r * 0.6;
            let got = tangent_norm(&u, &x).map_err(|e| anyhow!("{e}"))?;
            let want = alpha * r.powf(-alpha - 1.0);
            worst = worst.max((got - want).abs() / want.abs());
        }
        let mut out = CheckOutcome::new("chainrule_tangent_norm");
        out.family = spec.id.clone();
        out.params = spec.params_string();
        out.order = "1".into();
        out.value = format!("{worst}");
        out.expected = format!("<= {tol}");
        out.verdict = worst <= *tol;
        rows.push(out);
    }
    Ok(rows)
}

struct MapSample {
    map: SmoothMap,
    point: Vec<f64>,
}

/// Half sphere-to-sphere maps, half flat polynomial maps; `strip_jets`
/// replaces analytic oracles with finite differences.
fn mixed_samples(seed: u64, count: usize, strip_jets: bool) -> Vec<MapSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s2: Arc<Manifold> = Arc::new(Manifold::sphere(2, 1.0).unwrap());
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let (map, point) = if i % 2 == 0 {
            let u = random_sphere_map(&mut rng, s2.clone(), s2.clone());
            let p = s2.random_point(&mut rng);
            (u, p)
        } else {
            let m = 2 + (i / 2) % 2;
            let u = random_flat_map(&mut rng, m, 2);
            let p: Vec<f64> = (0..m).map(|_| rng.random_range(-0.7..0.7)).collect();
            (u, p)
        };
        let map = if strip_jets { without_jet(&map) } else { map };
        out.push(MapSample { map, point });
    }
    out
}

fn check_sasaki(
    samples: usize,
    seed: u64,
    tol_analytic: f64,
    tol_fd: f64,
    gamma_sign: f64,
) -> Result<Vec<CheckOutcome>> {
    let mut rows = Vec::new();
    for (label, strip, tol) in [("analytic", false, tol_analytic), ("fd", true, tol_fd)] {
        let n = if strip { samples / 2 } else { samples };
        let mut worst = 0.0_f64;
        for s in mixed_samples(seed + strip as u64, n, strip) {
            let direct = sasaki_norm_sq(&s.map, &s.point).map_err(|e| anyhow!("{e}"))?;
            let split =
                sasaki_norm_sq_split(&s.map, &s.point, gamma_sign).map_err(|e| anyhow!("{e}"))?;
            worst = worst.max((direct - split).abs() / (1.0 + direct.abs()));
        }
        let mut out = CheckOutcome::new(&format!("sasaki_identity_{label}"));
        out.value = format!("{worst}");
        out.expected = format!("<= {tol}");
        out.verdict = worst <= tol;
        rows.push(out);
    }
    Ok(rows)
}

fn check_hessian_agreement(samples: usize, seed: u64, tol: f64) -> Result<Vec<CheckOutcome>> {
    let mut worst = 0.0_f64;
    for s in mixed_samples(seed, samples, true) {
        // the two routes difference different composites, so their truncation
        // errors do not cancel; Richardson keeps both under the tolerance
        let u = s.map.clone().with_richardson(true);
        let chart = covariant_hessian(&u, &s.point).map_err(|e| anyhow!("{e}"))?;
        let ambient = covariant_hessian_ambient(&u, &s.point).map_err(|e| anyhow!("{e}"))?;
        worst = worst.max(chart.components.sub(&ambient.components).max_abs());
    }
    let mut out = CheckOutcome::new("hessian_agreement");
    out.value = format!("{worst}");
    out.expected = format!("<= {tol}");
    out.verdict = worst <= tol;
    Ok(vec![out])
}

fn check_geodesic_annihilation(
    ell: usize,
    samples: usize,
    tol_hessian: f64,
    tol_energy: f64,
    angular_nodes: usize,
) -> Result<Vec<CheckOutcome>> {
    let u = make_example(&ExampleFamily::GeodesicWind { ell }).map_err(|e| anyhow!("{e}"))?;
    let mut worst = 0.0_f64;
    for i in 0..samples {
        let theta = 2.0 * PI * (i as f64 + 0.5) / samples as f64;
        let q = [theta.cos(), theta.sin()];
        worst = worst.max(covariant_norm(&u, &q, 2).map_err(|e| anyhow!("{e}"))?);
    }
    let mut rows = Vec::new();
    let mut out = CheckOutcome::new("wind_hessian_annihilation");
    out.family = "geodesic_wind".into();
    out.params = format!("ell={ell}");
    out.order = "2".into();
    out.value = format!("{worst}");
    out.expected = format!("<= {tol_hessian}");
    out.verdict = worst <= tol_hessian;
    rows.push(out);

    let spec = QuadratureSpec {
        domain: DomainKind::Circle { radius: 1.0 },
        n_annuli: 4,
        radial_nodes: 2,
        angular_nodes,
    };
    let rep = energy(&u, 1, 2.0, &spec).map_err(|e| anyhow!("{e}"))?;
    let want = 2.0 * PI * (ell * ell) as f64;
    let got = rep.value.unwrap_or(f64::NAN);
    let mut out = CheckOutcome::new("wind_tangent_energy");
    out.family = "geodesic_wind".into();
    out.params = format!("ell={ell}");
    out.order = "1".into();
    out.exponent = "2".into();
    out.value = format!("{got}");
    out.classification = rep.classification.to_string();
    out.expected = format!("{want}+-{tol_energy} (normalized {})", ell * ell);
    out.verdict = (got - want).abs() <= tol_energy;
    rows.push(out);
    Ok(rows)
}

fn check_submultiplicative(pairs: usize, max_dim: usize, seed: u64, tol: f64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rand_morph = |m: usize, n: usize, rng: &mut ChaCha8Rng| -> DoubleMorphism {
        DoubleMorphism {
            base_in: vec![0.0; m],
            base_out: vec![0.0; n],
            f1: DMatrix::from_fn(n, m, |_, _| rng.random_range(-2.0..2.0)),
            f2: DMatrix::from_fn(n, m, |_, _| rng.random_range(-2.0..2.0)),
            f12: DMatrix::from_fn(n, m, |_, _| rng.random_range(-2.0..2.0)),
            f12hat: Tensor::from_fn(&[m, m, n], |_| rng.random_range(-2.0..2.0)),
        }
    };
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let m = rng.random_range(1..=max_dim);
        let mid = rng.random_range(1..=max_dim);
        let n = rng.random_range(1..=max_dim);
        let f = rand_morph(m, mid, &mut rng);
        let h = rand_morph(mid, n, &mut rng);
        let g = compose_double(&h, &f).map_err(|e| anyhow!("{e}"))?;
        let slack = double_norm_morphism(&g)
            - double_norm_morphism(&h) * double_norm_morphism(&f);
        worst = worst.max(slack);
        if slack > tol {
            violations += 1;
        }
    }
    let mut out = CheckOutcome::new("norm_submultiplicative");
    out.params = format!("pairs={pairs};max_dim={max_dim}");
    out.value = format!("violations={violations};max_slack={worst}");
    out.expected = format!("0 violations at +{tol}");
    out.verdict = violations == 0;
    Ok(vec![out])
}

fn check_degenerate(samples: usize, dim: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut nonzero_inputs = 0usize;
    for _ in 0..samples {
        let e: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        if e.iter().map(|v| v * v).sum::<f64>() == 0.0 {
            continue;
        }
        nonzero_inputs += 1;
        let mut nu = KTupleVector::zeros(3, dim).map_err(|e| anyhow!("{e}"))?;
        nu.set_component(&[1, 2], e.clone());
        nu.set_component(&[2, 3], e.clone());
        nu.set_component(&[1, 3], e.clone());
        worst = worst.max(ktuple_norm_vector(&nu).map_err(|e| anyhow!("{e}"))?);
    }
    let mut out = CheckOutcome::new("degenerate_ktuple");
    out.params = format!("samples={nonzero_inputs};dim={dim}");
    out.value = format!("{worst}");
    out.expected = "exactly 0".into();
    out.verdict = worst == 0.0 && nonzero_inputs > 0;
    Ok(vec![out])
}

/// Bell numbers by the triangle recurrence: the independent count oracle.
fn bell_oracle(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 1..n {
        let mut next = vec![*row.last().unwrap()];
        for &v in &row {
            next.push(next.last().unwrap() + v);
        }
        row = next;
    }
    *row.last().unwrap()
}

fn check_partitions(k_max: usize) -> Result<Vec<CheckOutcome>> {
    let mut counts = Vec::new();
    let mut ok = true;
    for k in 1..=k_max {
        let total: usize = enumerate_partitions(k)
            .map_err(|e| anyhow!("{e}"))?
            .iter()
            .map(|g| g.len())
            .sum();
        ok &= total as u64 == bell_oracle(k);
        counts.push(total.to_string());
    }
    let mut out = CheckOutcome::new("partition_counts");
    out.params = format!("k=1..{k_max}");
    out.value = counts.join(",");
    out.expected = (1..=k_max).map(|k| bell_oracle(k).to_string()).collect::<Vec<_>>().join(",");
    out.verdict = ok;
    Ok(vec![out])
}

#[allow(clippy::too_many_arguments)]
fn check_helical(
    lambda: f64,
    gamma: f64,
    mu: f64,
    samples: usize,
    seed: u64,
    tol_isometry: f64,
    tol_split: f64,
    tol_constant: f64,
) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();

    let iota2 = helical_embed(2, lambda, gamma, mu).map_err(|e| anyhow!("{e}"))?;
    let mut worst_iso = 0.0_f64;
    for _ in 0..20 {
        let p: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
        worst_iso = worst_iso.max(isometry_residual_fd(&iota2, &p).map_err(|e| anyhow!("{e}"))?);
    }
    let mut out = CheckOutcome::new("helical_isometry");
    out.params = format!("lambda={lambda};gamma={gamma};mu={mu}");
    out.value = format!("{worst_iso}");
    out.expected = format!("<= {tol_isometry}");
    out.verdict = worst_iso <= tol_isometry;
    rows.push(out);

    // Pythagorean split on flat maps composed with the helical embedding,
    // analytic and finite-difference halves
    let mut worst_split = 0.0_f64;
    for i in 0..samples {
        let u = random_flat_map(&mut rng, 2, 2);
        let u = if i % 4 == 3 { without_jet(&u) } else { u };
        let p: Vec<f64> = (0..2).map(|_| rng.random_range(-0.7..0.7)).collect();
        let (lhs, rhs) = extrinsic_split(&u, &iota2, &p).map_err(|e| anyhow!("{e}"))?;
        worst_split = worst_split.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    let mut out = CheckOutcome::new("helical_split");
    out.params = format!("samples={samples}");
    out.value = format!("{worst_split}");
    out.expected = format!("<= {tol_split}");
    out.verdict = worst_split <= tol_split;
    rows.push(out);

    // nu = 1 lower-bound constant 1/(gamma mu^2)
    let iota1 = helical_embed(1, lambda, gamma, mu).map_err(|e| anyhow!("{e}"))?;
    let a = second_fundamental_form(&iota1, &[0.37], &[1.0], &[1.0]).map_err(|e| anyhow!("{e}"))?;
    let norm_a = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let got = 1.0 / norm_a;
    let want = 1.0 / (gamma * mu * mu);
    let mut out = CheckOutcome::new("helical_bound_constant");
    out.value = format!("{got}");
    out.expected = format!("{want}+-{tol_constant}");
    out.verdict = (got - want).abs() <= tol_constant;
    rows.push(out);
    Ok(rows)
}

fn kato_families() -> Vec<ExampleFamily> {
    vec![
        ExampleFamily::Spiral { alpha: 1.5, m: 3 },
        ExampleFamily::RadialPower { alpha: 2.0, m: 3 },
        ExampleFamily::Hedgehog { m: 3 },
        ExampleFamily::GeodesicRadial { alpha: 2.0, m: 3 },
        ExampleFamily::MollifiedSpiral { alpha: 1.0, m: 3, ell: 3 },
        ExampleFamily::OscPower { alpha: 1.0, beta: 1.2, m: 2 },
        ExampleFamily::GeodesicWind { ell: 3 },
    ]
}

fn sample_domain_point(fam: &ExampleFamily, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match fam {
        ExampleFamily::GeodesicWind { .. } => {
            let t = rng.random_range(-PI..PI);
            vec![t.cos(), t.sin()]
        }
        ExampleFamily::Spiral { m, .. }
        | ExampleFamily::RadialPower { m, .. }
        | ExampleFamily::Hedgehog { m }
        | ExampleFamily::MollifiedSpiral { m, .. }
        | ExampleFamily::OscPower { m, .. }
        | ExampleFamily::GeodesicRadial { m, .. } => loop {
            let v: Vec<f64> = (0..*m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            // stay away from both the singularity and the unit boundary
            if (0.25..0.9).contains(&r) {
                return v;
            }
        },
    }
}

fn check_kato(
    samples_order2: usize,
    samples_order3: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fams = kato_families();
    let maps: Vec<(ExampleFamily, SmoothMap)> = fams
        .iter()
        .map(|f| (f.clone(), make_example(f).unwrap()))
        .collect();

    let mut rows = Vec::new();
    for (order, samples) in [(2usize, samples_order2), (3usize, samples_order3)] {
        let mut violations = 0usize;
        let mut worst = f64::NEG_INFINITY;
        let mut count = 0usize;
        'outer: loop {
            for (fam, u) in &maps {
                if count >= samples {
                    break 'outer;
                }
                let x = sample_domain_point(fam, &mut rng);
                let grad = scalar_field_gradient_norm(u, &x, |p| covariant_norm(u, p, order - 1))
                    .map_err(|e| anyhow!("{e}"))?;
                let bound = covariant_norm(u, &x, order).map_err(|e| anyhow!("{e}"))?;
                let slack = grad - bound;
                worst = worst.max(slack);
                if slack > tol {
                    violations += 1;
                }
                count += 1;
            }
        }
        let mut out = CheckOutcome::new(&format!("kato_order{order}"));
        out.order = order.to_string();
        out.params = format!("samples={count}");
        out.value = format!("violations={violations};max_slack={worst}");
        out.expected = format!("0 violations at +{tol}");
        out.verdict = violations == 0;
        rows.push(out);
    }
    Ok(rows)
}

fn check_hm(samples: usize, seed: u64, tol: f64) -> Result<Vec<CheckOutcome>> {
    let mut worst = 0.0_f64;
    let analytic = mixed_samples(seed, samples * 3 / 4, false);
    let fd = mixed_samples(seed + 1, samples / 4, true);
    for s in analytic.into_iter().chain(fd) {
        let hess = covariant_hessian(&s.map, &s.point).map_err(|e| anyhow!("{e}"))?;
        let jet = hm_renormalize(&s.map, &s.point).map_err(|e| anyhow!("{e}"))?;
        if jet.renormalized_norm >= 1.0 {
            bail!("renormalized field escaped the unit ball");
        }
        let diff = jet.reconstructed.components.sub(&hess.components).max_abs();
        worst = worst.max(diff / (1.0 + hess.components.max_abs()));
    }
    let mut out = CheckOutcome::new("hm_roundtrip");
    out.params = format!("samples={samples}");
    out.value = format!("{worst}");
    out.expected = format!("<= {tol}");
    out.verdict = worst <= tol;
    Ok(vec![out])
}

fn check_gn_table(n_annuli: usize, radial_nodes: usize, angular_nodes: usize) -> Result<Vec<CheckOutcome>> {
    let mut rows = Vec::new();

    // row 1: geodesic wind, first- vs second-order energies on the circle
    let wind = FamilySpec {
        id: "geodesic_wind".into(),
        alpha: None,
        beta: None,
        m: None,
        ell: Some(3),
    };
    let circle_spec = QuadratureSpec {
        domain: DomainKind::Circle { radius: 1.0 },
        n_annuli: 4,
        radial_nodes: 2,
        angular_nodes,
    };
    rows.extend(check_gn_ratio(&wind, 2, 1, 1.0, &circle_spec, &Expectation::RatioInfinite)?);

    // row 2: the strict-inclusion radial family on the 5-ball
    let radial = FamilySpec {
        id: "geodesic_radial".into(),
        alpha: Some(2.0),
        beta: None,
        m: Some(5),
        ell: None,
    };
    let ball_spec = QuadratureSpec {
        domain: DomainKind::Ball { radius: 1.0, m: 5 },
        n_annuli,
        radial_nodes,
        angular_nodes,
    };
    rows.extend(check_gn_ratio(&radial, 2, 1, 1.0, &ball_spec, &Expectation::RatioInfinite)?);

    // row 3: a smooth flat map has a finite ratio
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let u = random_flat_map(&mut rng, 2, 2);
    let flat_spec = QuadratureSpec {
        domain: DomainKind::Ball { radius: 1.0, m: 2 },
        n_annuli: 8,
        radial_nodes: 4,
        angular_nodes: 8,
    };
    let rep = gn_ratio(&u, 2, 1, 1.0, &flat_spec).map_err(|e| anyhow!("{e}"))?;
    let mut out = CheckOutcome::new("gn_ratio");
    out.family = "smooth_flat_poly".into();
    out.params = "seed=2024;k=2;j=1;p=1".into();
    out.order = "1/2".into();
    out.exponent = "1".into();
    out.value = ratio_string(&rep.ratio);
    out.classification = format!(
        "lhs={};rhs={}",
        rep.lhs.classification, rep.rhs_energy.classification
    );
    out.expected = "ratio finite".into();
    out.verdict = matches!(rep.ratio, RatioOutcome::Finite(_));
    rows.push(out);
    Ok(rows)
}

fn check_determinism(threads: &[usize], scenario_ids: &[String]) -> Result<Vec<CheckOutcome>> {
    let scenarios: Vec<Scenario> = scenario_ids
        .iter()
        .map(|id| {
            crate::builtin_scenario(id)
                .ok_or_else(|| anyhow!("determinism check references unknown scenario `{id}`"))
        })
        .collect::<Result<_>>()?;

    let mut renders: Vec<(usize, String)> = Vec::new();
    for &t in threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .context("building thread pool")?;
        let reports: Vec<ScenarioReport> = pool.install(|| -> Result<_> {
            let ctx = CheckContext::default();
            scenarios
                .iter()
                .map(|s| {
                    // skip nested determinism checks to keep the run finite
                    let filtered = Scenario {
                        schema: s.schema,
                        id: s.id.clone(),
                        description: s.description.clone(),
                        out: None,
                        checks: s
                            .checks
                            .iter()
                            .filter(|c| !matches!(c, Check::Determinism { .. }))
                            .cloned()
                            .collect(),
                    };
                    run_scenario(&filtered, &ctx)
                })
                .collect()
        })?;
        let json = crate::report::render_json(&reports)?;
        let csv = crate::report::render_csv(&reports)?;
        renders.push((t, format!("{json}\n{csv}")));
    }
    let identical = renders.windows(2).all(|w| w[0].1 == w[1].1);
    let mut out = CheckOutcome::new("determinism");
    out.params = format!(
        "threads={:?};scenarios={}",
        threads,
        scenario_ids.join("+")
    );
    out.value = if identical { "byte-identical".into() } else { "MISMATCH".into() };
    out.expected = "byte-identical".into();
    out.verdict = identical;
    Ok(vec![out])
}
