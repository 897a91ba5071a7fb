//! Built-in map families with analytic derivative oracles, parameterized by
//! `(alpha, beta, m, ell)`.
//!
//! All radial families factor through a scalar profile `phi(|x|)` whose first
//! three derivatives are closed-form; multivariate partials are assembled from
//! the radial jet and, for curve-valued families, a one-dimensional chain rule
//! up to order three.

use crate::error::{CoreError, Result};
use crate::manifold::{ChartId, Manifold};
use crate::map::{ClosureJet, SmoothMap};
use crate::tensor::Tensor;
use std::f64::consts::PI;
use std::sync::Arc;

/// The example families.
#[derive(Clone, Debug, PartialEq)]
pub enum ExampleFamily {
    /// `x -> (cos |x|^-a, sin |x|^-a)` on `R^m \ {0}`, valued on the unit
    /// circle inside `R^2` (flat target, so the full second derivative is in
    /// play for chain-rule functionals).
    Spiral { alpha: f64, m: usize },
    /// Scalar radial power `x -> |x|^-a`.
    RadialPower { alpha: f64, m: usize },
    /// `x -> x/|x|` into the unit sphere `S^{m-1}`.
    Hedgehog { m: usize },
    /// `x -> (cos v, sin v)` into `S^1` with `v = (|x| + 1/(1+ell))^-a`;
    /// smooth mollification of the radial-power spiral.
    MollifiedSpiral { alpha: f64, m: usize, ell: usize },
    /// Scalar `x -> |x|^-a sin(|x|^b)`.
    OscPower { alpha: f64, beta: f64, m: usize },
    /// `S^1 -> S^2`, winding `ell` times around the equator (affinely
    /// reparametrized closed geodesic).
    GeodesicWind { ell: usize },
    /// `x -> gamma(|x|^-a)` with `gamma` the unit-speed equator of `S^2`
    /// traversed over all of `R` (bounded geodesic).
    GeodesicRadial { alpha: f64, m: usize },
}

impl ExampleFamily {
    pub fn id(&self) -> &'static str {
        match self {
            ExampleFamily::Spiral { .. } => "spiral",
            ExampleFamily::RadialPower { .. } => "radial_power",
            ExampleFamily::Hedgehog { .. } => "hedgehog",
            ExampleFamily::MollifiedSpiral { .. } => "mollified_spiral",
            ExampleFamily::OscPower { .. } => "osc_power",
            ExampleFamily::GeodesicWind { .. } => "geodesic_wind",
            ExampleFamily::GeodesicRadial { .. } => "geodesic_radial",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CoreError::Config(msg));
        match *self {
            ExampleFamily::Spiral { alpha, m } => {
                if alpha <= 0.0 {
                    return bad(format!("spiral requires alpha > 0, got {alpha}"));
                }
                if m < 2 {
                    return bad(format!("spiral requires m >= 2, got {m}"));
                }
            }
            ExampleFamily::RadialPower { alpha, m } => {
                if alpha <= 0.0 || m < 1 {
                    return bad(format!("radial_power requires alpha > 0, m >= 1, got alpha={alpha}, m={m}"));
                }
            }
            ExampleFamily::Hedgehog { m } => {
                if m < 2 {
                    return bad(format!("hedgehog requires m >= 2, got {m}"));
                }
            }
            ExampleFamily::MollifiedSpiral { alpha, m, .. } => {
                if alpha <= 0.0 || m < 3 {
                    return bad(format!(
                        "mollified_spiral requires alpha > 0, m >= 3, got alpha={alpha}, m={m}"
                    ));
                }
            }
            ExampleFamily::OscPower { alpha, beta, m } => {
                if !(beta > alpha && alpha > 0.0) {
                    return bad(format!(
                        "osc_power requires beta > alpha > 0, got alpha={alpha}, beta={beta}"
                    ));
                }
                if m < 1 {
                    return bad(format!("osc_power requires m >= 1, got {m}"));
                }
            }
            ExampleFamily::GeodesicWind { ell } => {
                if ell < 1 {
                    return bad("geodesic_wind requires ell >= 1".into());
                }
            }
            ExampleFamily::GeodesicRadial { alpha, m } => {
                if alpha <= 0.0 || m < 1 {
                    return bad(format!(
                        "geodesic_radial requires alpha > 0, m >= 1, got alpha={alpha}, m={m}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Radial profile with derivatives up to order three.
#[derive(Clone, Copy)]
struct RadialJet {
    v: f64,
    d1: f64,
    d2: f64,
    d3: f64,
}

fn power_jet(r: f64, e: f64) -> RadialJet {
    RadialJet {
        v: r.powf(e),
        d1: e * r.powf(e - 1.0),
        d2: e * (e - 1.0) * r.powf(e - 2.0),
        d3: e * (e - 1.0) * (e - 2.0) * r.powf(e - 3.0),
    }
}

fn shifted_power_jet(r: f64, c: f64, e: f64) -> RadialJet {
    let s = r + c;
    RadialJet {
        v: s.powf(e),
        d1: e * s.powf(e - 1.0),
        d2: e * (e - 1.0) * s.powf(e - 2.0),
        d3: e * (e - 1.0) * (e - 2.0) * s.powf(e - 3.0),
    }
}

/// `phi(r) = r^-alpha * sin(r^beta)` by the product/chain rules.
fn osc_power_jet(r: f64, alpha: f64, beta: f64) -> RadialJet {
    let a = power_jet(r, -alpha);
    let b = power_jet(r, beta);
    let (s, c) = b.v.sin_cos();
    RadialJet {
        v: a.v * s,
        d1: a.d1 * s + a.v * c * b.d1,
        d2: a.d2 * s + 2.0 * a.d1 * c * b.d1 + a.v * (-s * b.d1 * b.d1 + c * b.d2),
        d3: a.d3 * s + 3.0 * a.d2 * c * b.d1 + 3.0 * a.d1 * (-s * b.d1 * b.d1 + c * b.d2)
            + a.v * (-c * b.d1 * b.d1 * b.d1 - 3.0 * s * b.d1 * b.d2 + c * b.d3),
    }
}

/// Partials, to the requested order, of `x -> phi(|x|)`; dims `[m; order] ++ [1]`.
fn radial_partials(x: &[f64], jet: RadialJet, order: usize) -> Option<Tensor> {
    let m = x.len();
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return None;
    }
    let p: Vec<f64> = x.iter().map(|v| v / r).collect();
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    match order {
        1 => Some(Tensor::from_fn(&[m, 1], |idx| jet.d1 * p[idx[0]])),
        2 => {
            let b = jet.d1 / r;
            Some(Tensor::from_fn(&[m, m, 1], |idx| {
                let (i, j) = (idx[0], idx[1]);
                jet.d2 * p[i] * p[j] + b * (delta(i, j) - p[i] * p[j])
            }))
        }
        3 => {
            let b = jet.d1 / r;
            let c = (jet.d2 - b) / r;
            Some(Tensor::from_fn(&[m, m, m, 1], |idx| {
                let (i, j, k) = (idx[0], idx[1], idx[2]);
                jet.d3 * p[i] * p[j] * p[k]
                    + c * (p[i] * (delta(j, k) - p[j] * p[k])
                        + p[j] * (delta(i, k) - p[i] * p[k])
                        + p[k] * (delta(i, j) - p[i] * p[j]))
            }))
        }
        _ => None,
    }
}

/// One-dimensional chain rule to order three: partials of `gamma(phi(|x|))`
/// from the scalar radial partials and the curve derivatives at `phi(|x|)`.
fn curve_compose_partials(
    x: &[f64],
    jet: RadialJet,
    order: usize,
    curve: &dyn Fn(f64, usize) -> Vec<f64>,
    out_dim: usize,
) -> Option<Tensor> {
    let m = x.len();
    let f1 = radial_partials(x, jet, 1)?;
    let g1 = curve(jet.v, 1);
    match order {
        1 => Some(Tensor::from_fn(&[m, out_dim], |idx| {
            g1[idx[1]] * f1.get(&[idx[0], 0])
        })),
        2 => {
            let f2 = radial_partials(x, jet, 2)?;
            let g2 = curve(jet.v, 2);
            Some(Tensor::from_fn(&[m, m, out_dim], |idx| {
                let (i, j, a) = (idx[0], idx[1], idx[2]);
                g2[a] * f1.get(&[i, 0]) * f1.get(&[j, 0]) + g1[a] * f2.get(&[i, j, 0])
            }))
        }
        3 => {
            let f2 = radial_partials(x, jet, 2)?;
            let f3 = radial_partials(x, jet, 3)?;
            let g2 = curve(jet.v, 2);
            let g3 = curve(jet.v, 3);
            Some(Tensor::from_fn(&[m, m, m, out_dim], |idx| {
                let (i, j, k, a) = (idx[0], idx[1], idx[2], idx[3]);
                g3[a] * f1.get(&[i, 0]) * f1.get(&[j, 0]) * f1.get(&[k, 0])
                    + g2[a]
                        * (f2.get(&[i, j, 0]) * f1.get(&[k, 0])
                            + f2.get(&[i, k, 0]) * f1.get(&[j, 0])
                            + f2.get(&[j, k, 0]) * f1.get(&[i, 0]))
                    + g1[a] * f3.get(&[i, j, k, 0])
            }))
        }
        _ => None,
    }
}

fn circle_curve(t: f64, order: usize) -> Vec<f64> {
    let (s, c) = t.sin_cos();
    match order % 4 {
        0 => vec![c, s],
        1 => vec![-s, c],
        2 => vec![-c, -s],
        _ => vec![s, -c],
    }
}

fn equator_curve(t: f64, order: usize) -> Vec<f64> {
    let mut v = circle_curve(t, order);
    v.push(0.0);
    v
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Builds the family's smooth map with analytic jets.
pub fn make_example(family: &ExampleFamily) -> Result<SmoothMap> {
    family.validate()?;
    match *family {
        ExampleFamily::Spiral { alpha, m } => {
            let domain = Arc::new(Manifold::euclidean(m)?);
            let target = Arc::new(Manifold::euclidean(2)?);
            let value = move |x: &[f64]| {
                let t = norm(x).powf(-alpha);
                vec![t.cos(), t.sin()]
            };
            let jet = ClosureJet(move |_c: ChartId, x: &[f64], order: usize| {
                let r = norm(x);
                if r == 0.0 {
                    return None;
                }
                curve_compose_partials(x, power_jet(r, -alpha), order, &circle_curve, 2)
            });
            Ok(SmoothMap::new(domain, target, value).with_jet(Arc::new(jet)))
        }
        ExampleFamily::RadialPower { alpha, m } => {
            let domain = Arc::new(Manifold::euclidean(m)?);
            let target = Arc::new(Manifold::euclidean(1)?);
            let value = move |x: &[f64]| vec![norm(x).powf(-alpha)];
            let jet = ClosureJet(move |_c: ChartId, x: &[f64], order: usize| {
                let r = norm(x);
                if r == 0.0 {
                    return None;
                }
                radial_partials(x, power_jet(r, -alpha), order)
            });
            Ok(SmoothMap::new(domain, target, value).with_jet(Arc::new(jet)))
        }
        ExampleFamily::Hedgehog { m } => {
            let domain = Arc::new(Manifold::euclidean(m)?);
            let target = Arc::new(Manifold::sphere(m - 1, 1.0)?);
            let value = move |x: &[f64]| {
                let r = norm(x);
                x.iter().map(|v| v / r).collect()
            };
            let jet = ClosureJet(move |_c: ChartId, x: &[f64], order: usize| {
                hedgehog_partials(x, order)
            });
            Ok(SmoothMap::new(domain, target, value).with_jet(Arc::new(jet)))
        }
        ExampleFamily::MollifiedSpiral { alpha, m, ell } => {
            let domain = Arc::new(Manifold::euclidean(m)?);
            let target = Arc::new(Manifold::circle(1.0)?);
            let c = 1.0 / (1.0 + ell as f64);
            let value = move |x: &[f64]| {
                let t = (norm(x) + c).powf(-alpha);
                vec![t.cos(), t.sin()]
            };
            let jet = ClosureJet(move |_ch: ChartId, x: &[f64], order: usize| {
                let r = norm(x);
                if r == 0.0 {
                    return None;
                }
                curve_compose_partials(x, shifted_power_jet(r, c, -alpha), order, &circle_curve, 2)
            });
            Ok(SmoothMap::new(domain, target, value).with_jet(Arc::new(jet)))
        }
        ExampleFamily::OscPower { alpha, beta, m } => {
            let domain = Arc::new(Manifold::euclidean(m)?);
            let target = Arc::new(Manifold::euclidean(1)?);
            let value = move |x: &[f64]| {
                let r = norm(x);
                vec![r.powf(-alpha) * r.powf(beta).sin()]
            };
            let jet = ClosureJet(move |_c: ChartId, x: &[f64], order: usize| {
                let r = norm(x);
                if r == 0.0 {
                    return None;
                }
                radial_partials(x, osc_power_jet(r, alpha, beta), order)
            });
            Ok(SmoothMap::new(domain, target, value).with_jet(Arc::new(jet)))
        }
        ExampleFamily::GeodesicWind { ell } => {
            let domain = Arc::new(Manifold::circle(1.0)?);
            let target = Arc::new(Manifold::sphere(2, 1.0)?);
            let l = ell as f64;
            let value = move |q: &[f64]| {
                let theta = q[1].atan2(q[0]);
                equator_curve(l * theta, 0)
            };
            let jet = ClosureJet(move |chart: ChartId, x: &[f64], order: usize| {
                if order > 3 {
                    return None;
                }
                // chart coordinate t has global angle center + t
                let center = if chart == 0 { 0.0 } else { PI };
                let theta = center + x[0];
                let d = equator_curve(l * theta, order);
                let scale = l.powi(order as i32);
                let mut dims = vec![1usize; order];
                dims.push(3);
                Some(Tensor::from_data(
                    &dims,
                    d.iter().map(|v| v * scale).collect(),
                ))
            });
            Ok(SmoothMap::new(domain, target, value).with_jet(Arc::new(jet)))
        }
        ExampleFamily::GeodesicRadial { alpha, m } => {
            let domain = Arc::new(Manifold::euclidean(m)?);
            let target = Arc::new(Manifold::sphere(2, 1.0)?);
            let value = move |x: &[f64]| equator_curve(norm(x).powf(-alpha), 0);
            let jet = ClosureJet(move |_c: ChartId, x: &[f64], order: usize| {
                let r = norm(x);
                if r == 0.0 {
                    return None;
                }
                curve_compose_partials(x, power_jet(r, -alpha), order, &equator_curve, 3)
            });
            Ok(SmoothMap::new(domain, target, value).with_jet(Arc::new(jet)))
        }
    }
}

/// Partials of the hedgehog `x -> x/|x|` by the product rule on `x_a * |x|^-1`.
fn hedgehog_partials(x: &[f64], order: usize) -> Option<Tensor> {
    let m = x.len();
    let r = norm(x);
    if r == 0.0 || order > 3 {
        return None;
    }
    let jet = power_jet(r, -1.0);
    let phi1 = radial_partials(x, jet, 1)?;
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    match order {
        1 => Some(Tensor::from_fn(&[m, m], |idx| {
            let (i, a) = (idx[0], idx[1]);
            delta(a, i) * jet.v + x[a] * phi1.get(&[i, 0])
        })),
        2 => {
            let phi2 = radial_partials(x, jet, 2)?;
            Some(Tensor::from_fn(&[m, m, m], |idx| {
                let (i, j, a) = (idx[0], idx[1], idx[2]);
                delta(a, i) * phi1.get(&[j, 0])
                    + delta(a, j) * phi1.get(&[i, 0])
                    + x[a] * phi2.get(&[i, j, 0])
            }))
        }
        3 => {
            let phi2 = radial_partials(x, jet, 2)?;
            let phi3 = radial_partials(x, jet, 3)?;
            Some(Tensor::from_fn(&[m, m, m, m], |idx| {
                let (i, j, k, a) = (idx[0], idx[1], idx[2], idx[3]);
                delta(a, i) * phi2.get(&[j, k, 0])
                    + delta(a, j) * phi2.get(&[i, k, 0])
                    + delta(a, k) * phi2.get(&[i, j, 0])
                    + x[a] * phi3.get(&[i, j, k, 0])
            }))
        }
        _ => None,
    }
}

/// One inequality window of a family, evaluated on concrete parameters.
#[derive(Clone, Debug)]
pub struct WindowReport {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
    pub satisfied: bool,
    /// The window itself is empty (lower >= upper): the constraint cannot be
    /// met by any parameter value.
    pub empty: bool,
}

fn window(name: &str, lower: f64, upper: f64, value: f64) -> WindowReport {
    WindowReport {
        name: name.to_string(),
        lower,
        upper,
        value,
        satisfied: lower < value && value < upper,
        empty: lower >= upper,
    }
}

/// What the parameters are being validated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowPurpose {
    /// Membership of the map in its stated differentiability/Sobolev class.
    Membership,
    /// The regime where the family serves as a counterexample.
    Counterexample,
}

/// The family's parameter windows evaluated at exponent `p`, each tagged
/// satisfied/violated; empty windows are surfaced rather than reinterpreted.
pub fn validity_window(family: &ExampleFamily, p: f64, purpose: WindowPurpose) -> Vec<WindowReport> {
    match *family {
        ExampleFamily::Spiral { alpha, m } => {
            vec![window("dimension window alpha-1 < m < 2(alpha+1)", alpha - 1.0, 2.0 * (alpha + 1.0), m as f64)]
        }
        ExampleFamily::GeodesicRadial { alpha, m } => {
            vec![window(
                "strict inclusion window (2+alpha)p < m < 2p(alpha+1)",
                (2.0 + alpha) * p,
                2.0 * p * (alpha + 1.0),
                m as f64,
            )]
        }
        ExampleFamily::OscPower { alpha, beta, m } => {
            let lo = (alpha - m as f64 + 3.0) / 3.0;
            let hi = (3.0 * alpha - m as f64 + 3.0) / 3.0;
            let mut out = vec![
                window("alpha window 0 < alpha < m", 0.0, m as f64, alpha),
                window("beta window (alpha-m+3)/3 < beta < (3 alpha-m+3)/3", lo, hi, beta),
                window("ordering beta > alpha", alpha, f64::INFINITY, beta),
            ];
            // combined window: the stated bounds intersected with beta > alpha
            out.push(window(
                "combined beta window",
                lo.max(alpha),
                hi,
                beta,
            ));
            out
        }
        ExampleFamily::MollifiedSpiral { alpha, m, .. } => {
            vec![
                window(
                    "uniform integrability alpha < m-2",
                    0.0,
                    m as f64 - 2.0,
                    alpha,
                ),
                window(
                    "limit fails chain rule alpha > (m-2)/2",
                    (m as f64 - 2.0) / 2.0,
                    f64::INFINITY,
                    alpha,
                ),
            ]
        }
        ExampleFamily::Hedgehog { m } => {
            // windows in kp with the second-order case k = 2
            let kp = 2.0 * p;
            match purpose {
                WindowPurpose::Membership => {
                    vec![window("membership kp < m (k=2)", 0.0, m as f64, kp)]
                }
                WindowPurpose::Counterexample => vec![window(
                    "non-approximability kp >= m-1 (k=2)",
                    m as f64 - 1.0,
                    f64::INFINITY,
                    kp + f64::EPSILON,
                )],
            }
        }
        ExampleFamily::RadialPower { alpha, m } => {
            vec![window(
                "twice colocally weakly differentiable for all alpha; W^{2,1}_loc fails for alpha > m-2",
                m as f64 - 2.0,
                f64::INFINITY,
                alpha,
            )]
        }
        ExampleFamily::GeodesicWind { .. } => vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{covariant_norm, tangent_norm};
    use approx::assert_relative_eq;

    #[test]
    fn spiral_tangent_norm_matches_closed_form() {
        let u = make_example(&ExampleFamily::Spiral { alpha: 1.5, m: 3 }).unwrap();
        let x = [0.3, -0.2, 0.32835]; // |x| close to 0.5 but not special
        let r = norm(&x);
        let got = tangent_norm(&u, &x).unwrap();
        assert_relative_eq!(got, 1.5 * r.powf(-2.5), epsilon = 1e-12);

        // reference point with |x| = 0.5 exactly
        let x = [0.5, 0.0, 0.0];
        let got = tangent_norm(&u, &x).unwrap();
        assert_relative_eq!(got, 8.485281374238571, epsilon = 1e-10);
    }

    #[test]
    fn geodesic_wind_is_unit_speed_at_ell_1() {
        let u = make_example(&ExampleFamily::GeodesicWind { ell: 1 }).unwrap();
        for theta in [0.0, 0.7, 2.0, -2.4] {
            let q = [f64::cos(theta), f64::sin(theta)];
            assert_relative_eq!(tangent_norm(&u, &q).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn geodesic_wind_tangent_norm_is_ell() {
        let u = make_example(&ExampleFamily::GeodesicWind { ell: 3 }).unwrap();
        let q = [0.6, 0.8];
        assert_relative_eq!(tangent_norm(&u, &q).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn hedgehog_normalizes() {
        let u = make_example(&ExampleFamily::Hedgehog { m: 3 }).unwrap();
        let y = u.eval(&[0.0, 0.0, 2.0]);
        assert_relative_eq!(y[2], 1.0, epsilon = 1e-14);
        // |Tu| = sqrt(m-1)/r
        let got = tangent_norm(&u, &[0.0, 0.0, 2.0]).unwrap();
        assert_relative_eq!(got, 2.0_f64.sqrt() / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn wind_covariant_hessian_vanishes() {
        let u = make_example(&ExampleFamily::GeodesicWind { ell: 3 }).unwrap();
        for theta in [0.1, 1.2, 2.9, -1.0, -2.8] {
            let q = [f64::cos(theta), f64::sin(theta)];
            let h = covariant_norm(&u, &q, 2).unwrap();
            assert!(h < 1e-10, "covariant hessian {h} at theta={theta}");
        }
    }

    #[test]
    fn analytic_jets_agree_with_fd() {
        use crate::numdiff;
        let fams = [
            ExampleFamily::Spiral { alpha: 1.5, m: 3 },
            ExampleFamily::RadialPower { alpha: 2.0, m: 5 },
            ExampleFamily::Hedgehog { m: 3 },
            ExampleFamily::MollifiedSpiral { alpha: 1.0, m: 3, ell: 4 },
            ExampleFamily::OscPower { alpha: 1.0, beta: 1.2, m: 2 },
            ExampleFamily::GeodesicRadial { alpha: 2.0, m: 5 },
        ];
        for fam in fams {
            let u = make_example(&fam).unwrap();
            let m = u.domain.dim();
            let x: Vec<f64> = (0..m).map(|i| 0.4 + 0.07 * i as f64).collect();
            let b = u.target.ambient_dim();
            let f = |y: &[f64]| u.eval_chart(0, y);
            for order in 1..=2usize {
                let analytic = u.ambient_partials(0, &x, order).unwrap();
                let h = numdiff::default_step(order, 1.0);
                let fd = match order {
                    1 => numdiff::partials1(&f, &x, b, h).unwrap(),
                    _ => numdiff::partials2(&f, &x, b, h).unwrap(),
                };
                let diff = analytic.sub(&fd).max_abs();
                let tol = if order == 1 { 1e-7 } else { 1e-4 };
                assert!(diff < tol, "family {} order {order}: diff {diff}", fam.id());
            }
        }
    }

    #[test]
    fn third_order_jets_agree_with_fd_of_second() {
        // d3 oracle vs central difference of the d2 oracle
        let fams = [
            ExampleFamily::Spiral { alpha: 1.5, m: 2 },
            ExampleFamily::OscPower { alpha: 1.0, beta: 1.2, m: 2 },
            ExampleFamily::GeodesicRadial { alpha: 2.0, m: 3 },
            ExampleFamily::Hedgehog { m: 3 },
        ];
        for fam in fams {
            let u = make_example(&fam).unwrap();
            let m = u.domain.dim();
            let x: Vec<f64> = (0..m).map(|i| 0.5 + 0.06 * i as f64).collect();
            let d3 = u.ambient_partials(0, &x, 3).unwrap();
            let h = 1e-5;
            for k in 0..m {
                let mut xp = x.clone();
                xp[k] += h;
                let mut xm = x.clone();
                xm[k] -= h;
                let dp = u.ambient_partials(0, &xp, 2).unwrap();
                let dm = u.ambient_partials(0, &xm, 2).unwrap();
                let fd = dp.sub(&dm).scale(1.0 / (2.0 * h));
                let b = u.target.ambient_dim();
                for i in 0..m {
                    for j in 0..m {
                        for a in 0..b {
                            let want = fd.get(&[i, j, a]);
                            let got = d3.get(&[i, j, k, a]);
                            assert!(
                                (want - got).abs() < 1e-4 * (1.0 + want.abs()),
                                "family {} d3[{i},{j},{k},{a}]: {got} vs {want}",
                                fam.id()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn window_examples() {
        let w = validity_window(
            &ExampleFamily::Spiral { alpha: 1.5, m: 3 },
            1.0,
            WindowPurpose::Membership,
        );
        assert_relative_eq!(w[0].lower, 0.5);
        assert_relative_eq!(w[0].upper, 5.0);
        assert!(w[0].satisfied);

        let w = validity_window(
            &ExampleFamily::GeodesicRadial { alpha: 2.0, m: 5 },
            1.0,
            WindowPurpose::Counterexample,
        );
        assert_relative_eq!(w[0].lower, 4.0);
        assert_relative_eq!(w[0].upper, 6.0);
        assert!(w[0].satisfied);

        let w = validity_window(
            &ExampleFamily::OscPower { alpha: 1.0, beta: 1.2, m: 2 },
            1.0,
            WindowPurpose::Counterexample,
        );
        let beta_w = &w[1];
        assert_relative_eq!(beta_w.lower, 2.0 / 3.0);
        assert_relative_eq!(beta_w.upper, 4.0 / 3.0);
        assert!(beta_w.satisfied && w[2].satisfied && w[3].satisfied);

        // m = 3 with beta > alpha makes the combined window empty
        let fam3 = ExampleFamily::OscPower { alpha: 1.0, beta: 1.01, m: 3 };
        let w3 = validity_window(&fam3, 1.0, WindowPurpose::Counterexample);
        let combined = w3.iter().find(|w| w.name == "combined beta window").unwrap();
        assert!(combined.empty, "combined window should be empty for m=3");
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(make_example(&ExampleFamily::Spiral { alpha: -1.0, m: 3 }).is_err());
        assert!(make_example(&ExampleFamily::OscPower { alpha: 2.0, beta: 1.0, m: 2 }).is_err());
        assert!(make_example(&ExampleFamily::GeodesicWind { ell: 0 }).is_err());
    }

    #[test]
    fn osc_power_jet_consistency() {
        // check the product-rule jet against direct 1-d finite differences
        let (alpha, beta) = (1.0, 1.2);
        let r = 0.37;
        let j = osc_power_jet(r, alpha, beta);
        let f = |t: f64| t.powf(-alpha) * t.powf(beta).sin();
        let h = 1e-5;
        let d1 = (f(r + h) - f(r - h)) / (2.0 * h);
        let d2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
        assert_relative_eq!(j.v, f(r), epsilon = 1e-12);
        assert_relative_eq!(j.d1, d1, epsilon = 1e-6);
        assert_relative_eq!(j.d2, d2, epsilon = 1e-4);
    }
}
