//! Central finite differences for vector-valued functions of chart coordinates.
//!
//! Step sizes follow the usual truncation/rounding balance for central
//! differences: `eps^(1/3) * scale` for first derivatives and
//! `eps^(1/4) * scale` for second derivatives. Optional Richardson
//! extrapolation cancels the leading `h^2` truncation term.

use crate::error::{CoreError, Result};
use crate::tensor::Tensor;
use nalgebra::DMatrix;

/// Default step scale factor for a derivative of the given order.
pub fn default_step(order: usize, scale: f64) -> f64 {
    let eps = f64::EPSILON;
    match order {
        1 => eps.powf(1.0 / 3.0) * scale,
        _ => eps.powf(1.0 / 4.0) * scale,
    }
}

fn check_step(h: f64, x: &[f64]) -> Result<()> {
    let xmax = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    if h <= 0.0 || h < 1e3 * f64::EPSILON * xmax {
        return Err(CoreError::Numerical(format!(
            "finite-difference step {h:e} underflows relative to chart scale {xmax:e}"
        )));
    }
    Ok(())
}

fn shift(x: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[i] += h;
    y
}

fn shift2(x: &[f64], i: usize, hi: f64, j: usize, hj: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[i] += hi;
    y[j] += hj;
    y
}

/// First partials of `f` at `x`; dims `[m, out]`, entry `(i, a) = d_i f^a`.
pub fn partials1<F>(f: &F, x: &[f64], out_dim: usize, h: f64) -> Result<Tensor>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    check_step(h, x)?;
    let m = x.len();
    let mut t = Tensor::zeros(&[m, out_dim]);
    for i in 0..m {
        let fp = f(&shift(x, i, h));
        let fm = f(&shift(x, i, -h));
        for a in 0..out_dim {
            t.set(&[i, a], (fp[a] - fm[a]) / (2.0 * h));
        }
    }
    Ok(t)
}

/// Second partials of `f` at `x`; dims `[m, m, out]`, entry
/// `(i, j, a) = d_i d_j f^a` (symmetric in `i, j` by construction).
pub fn partials2<F>(f: &F, x: &[f64], out_dim: usize, h: f64) -> Result<Tensor>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    check_step(h, x)?;
    let m = x.len();
    let f0 = f(x);
    let mut t = Tensor::zeros(&[m, m, out_dim]);
    for i in 0..m {
        let fp = f(&shift(x, i, h));
        let fm = f(&shift(x, i, -h));
        for a in 0..out_dim {
            t.set(&[i, i, a], (fp[a] - 2.0 * f0[a] + fm[a]) / (h * h));
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let fpp = f(&shift2(x, i, h, j, h));
            let fpm = f(&shift2(x, i, h, j, -h));
            let fmp = f(&shift2(x, i, -h, j, h));
            let fmm = f(&shift2(x, i, -h, j, -h));
            for a in 0..out_dim {
                let v = (fpp[a] - fpm[a] - fmp[a] + fmm[a]) / (4.0 * h * h);
                t.set(&[i, j, a], v);
                t.set(&[j, i, a], v);
            }
        }
    }
    Ok(t)
}

/// Richardson-extrapolated variant of `partials1`/`partials2`:
/// `(4 D(h/2) - D(h)) / 3` cancels the `h^2` truncation term.
pub fn partials_richardson<F>(f: &F, x: &[f64], out_dim: usize, order: usize, h: f64) -> Result<Tensor>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let (full, half) = match order {
        1 => (partials1(f, x, out_dim, h)?, partials1(f, x, out_dim, h / 2.0)?),
        2 => (partials2(f, x, out_dim, h)?, partials2(f, x, out_dim, h / 2.0)?),
        o => return Err(CoreError::UnsupportedOrder(o)),
    };
    Ok(half.scale(4.0 / 3.0).sub(&full.scale(1.0 / 3.0)))
}

/// Jacobian of `f` as a matrix (`out` rows, `m` columns).
pub fn jacobian<F>(f: &F, x: &[f64], out_dim: usize, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let p = partials1(f, x, out_dim, h)?;
    let m = x.len();
    Ok(DMatrix::from_fn(out_dim, m, |a, i| p.get(&[i, a])))
}

/// Christoffel symbols of the Levi-Civita connection assembled from a metric
/// oracle by central differences:
/// `Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)`.
///
/// Independent of any stored closed-form symbols; used as an oracle for them.
pub fn christoffel_from_metric<G>(g: &G, x: &[f64], h: f64) -> Result<Tensor>
where
    G: Fn(&[f64]) -> DMatrix<f64> + ?Sized,
{
    check_step(h, x)?;
    let m = x.len();
    let g0 = g(x);
    let ginv = g0
        .clone()
        .try_inverse()
        .ok_or_else(|| CoreError::Numerical("metric not invertible".into()))?;

    // dg[i] = d_i g as a matrix
    let mut dg = Vec::with_capacity(m);
    for i in 0..m {
        let gp = g(&shift(x, i, h));
        let gm = g(&shift(x, i, -h));
        dg.push((gp - gm) / (2.0 * h));
    }

    let mut gamma = Tensor::zeros(&[m, m, m]);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let mut acc = 0.0;
                for l in 0..m {
                    acc += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma.set(&[i, j, k], 0.5 * acc);
            }
        }
    }
    Ok(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_partials_of_polynomial() {
        let f = |x: &[f64]| vec![x[0] * x[0] * x[1] + 3.0 * x[1]];
        let p = partials1(&f, &[1.0, 2.0], 1, default_step(1, 1.0)).unwrap();
        assert_relative_eq!(p.get(&[0, 0]), 4.0, epsilon = 1e-9);
        assert_relative_eq!(p.get(&[1, 0]), 4.0, epsilon = 1e-9);
    }

    #[test]
    fn second_partials_of_polynomial() {
        let f = |x: &[f64]| vec![x[0] * x[0] * x[1]];
        let p = partials2(&f, &[1.0, 2.0], 1, default_step(2, 1.0)).unwrap();
        assert_relative_eq!(p.get(&[0, 0, 0]), 4.0, epsilon = 1e-6);
        assert_relative_eq!(p.get(&[0, 1, 0]), 2.0, epsilon = 1e-6);
        assert_relative_eq!(p.get(&[1, 1, 0]), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn halving_step_quarters_error() {
        // Truncation-dominated regime: error of central differences is O(h^2).
        let f = |x: &[f64]| vec![(2.0 * x[0]).sin()];
        let exact = 2.0 * (2.0_f64).cos();
        let e1 = (partials1(&f, &[1.0], 1, 1e-2).unwrap().get(&[0, 0]) - exact).abs();
        let e2 = (partials1(&f, &[1.0], 1, 5e-3).unwrap().get(&[0, 0]) - exact).abs();
        let ratio = e1 / e2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio} not ~4");

        let exact2 = -4.0 * (2.0_f64).sin();
        let s1 = (partials2(&f, &[1.0], 1, 1e-2).unwrap().get(&[0, 0, 0]) - exact2).abs();
        let s2 = (partials2(&f, &[1.0], 1, 5e-3).unwrap().get(&[0, 0, 0]) - exact2).abs();
        let ratio2 = s1 / s2;
        assert!((3.0..5.0).contains(&ratio2), "ratio {ratio2} not ~4");
    }

    #[test]
    fn richardson_beats_plain_central() {
        let f = |x: &[f64]| vec![x[0].exp()];
        let exact = (1.0_f64).exp();
        let plain = (partials1(&f, &[1.0], 1, 1e-3).unwrap().get(&[0, 0]) - exact).abs();
        let rich = (partials_richardson(&f, &[1.0], 1, 1, 1e-3)
            .unwrap()
            .get(&[0, 0])
            - exact)
            .abs();
        assert!(rich < plain / 10.0, "richardson {rich} vs plain {plain}");
    }

    #[test]
    fn step_underflow_is_an_error() {
        let f = |x: &[f64]| vec![x[0]];
        assert!(partials1(&f, &[1.0], 1, 1e-15).is_err());
    }
}
