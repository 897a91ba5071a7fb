//! Isometric embeddings, second fundamental forms, and the Pythagorean split
//! of the extrinsic second derivative into intrinsic Hessian plus bending.
//!
//! The second fundamental form is realized by the Gauss formula: the normal
//! projection of the raw chart Hessian of the embedding composite. For the
//! helical embedding `t -> (lambda t_i, gamma cos(mu t_i), gamma sin(mu t_i))`
//! the form has a closed expression used as a test oracle.

use crate::error::{CoreError, Result};
use crate::jet::{covariant_hessian, tangent_map};
use crate::manifold::{ChartId, Manifold};
use crate::map::{chain_first, chain_second, ClosureJet, SmoothMap};
use crate::tensor::Tensor;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Parameters of the helical isometric embedding of `R^nu` into `R^{3 nu}`.
#[derive(Clone, Copy, Debug)]
pub struct HelicalParams {
    pub lambda: f64,
    pub gamma: f64,
    pub mu: f64,
}

/// An isometric embedding of a source manifold into Euclidean space, carried
/// as a smooth map with a flat target.
#[derive(Clone, Debug)]
pub struct IsometricEmbedding {
    pub source: Arc<Manifold>,
    pub ambient_dim: usize,
    pub map: SmoothMap,
    pub helical: Option<HelicalParams>,
}

impl IsometricEmbedding {
    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        self.map.eval(p)
    }
}

/// Helical embedding `iota_2` with `lambda^2 + gamma^2 mu^2 = 1`.
pub fn helical_embed(nu: usize, lambda: f64, gamma: f64, mu: f64) -> Result<IsometricEmbedding> {
    if nu < 1 {
        return Err(CoreError::Config("helical embedding needs nu >= 1".into()));
    }
    let constraint = lambda * lambda + gamma * gamma * mu * mu;
    if (constraint - 1.0).abs() > 1e-12 {
        return Err(CoreError::Config(format!(
            "isometry constraint violated: lambda^2 + gamma^2 mu^2 = {constraint}"
        )));
    }
    let source = Arc::new(Manifold::euclidean(nu)?);
    let target = Arc::new(Manifold::euclidean(3 * nu)?);
    let value = move |t: &[f64]| {
        let mut out = Vec::with_capacity(3 * t.len());
        for &ti in t {
            out.push(lambda * ti);
            out.push(gamma * (mu * ti).cos());
            out.push(gamma * (mu * ti).sin());
        }
        out
    };
    let jet = ClosureJet(move |_c: ChartId, t: &[f64], order: usize| {
        let nu = t.len();
        if order > 3 {
            return None;
        }
        let mut dims = vec![nu; order];
        dims.push(3 * nu);
        let mut out = Tensor::zeros(&dims);
        for (i, &ti) in t.iter().enumerate() {
            let (s, c) = (mu * ti).sin_cos();
            // derivatives of (lambda t, gamma cos(mu t), gamma sin(mu t))
            let comp: [f64; 3] = match order {
                1 => [lambda, -gamma * mu * s, gamma * mu * c],
                2 => [0.0, -gamma * mu * mu * c, -gamma * mu * mu * s],
                _ => [0.0, gamma * mu * mu * mu * s, -gamma * mu * mu * mu * c],
            };
            let mut idx = vec![i; order];
            idx.push(0);
            for (off, &v) in comp.iter().enumerate() {
                idx[order] = 3 * i + off;
                out.set(&idx, v);
            }
        }
        Some(out)
    });
    let map = SmoothMap::new(source.clone(), target, value).with_jet(Arc::new(jet));
    Ok(IsometricEmbedding {
        source,
        ambient_dim: 3 * nu,
        map,
        helical: Some(HelicalParams { lambda, gamma, mu }),
    })
}

/// The standard inclusion of a built-in manifold into its ambient space.
pub fn inclusion_embedding(source: Arc<Manifold>) -> Result<IsometricEmbedding> {
    let ambient_dim = source.ambient_dim();
    let target = Arc::new(Manifold::euclidean(ambient_dim)?);
    let src = source.clone();
    let jet = ClosureJet(move |chart: ChartId, x: &[f64], order: usize| match order {
        1 => Some(src.embed_d1(chart, x)),
        2 => Some(src.embed_d2(chart, x)),
        _ => None,
    });
    let map = SmoothMap::new(source.clone(), target, |p: &[f64]| p.to_vec()).with_jet(Arc::new(jet));
    Ok(IsometricEmbedding {
        source,
        ambient_dim,
        map,
        helical: None,
    })
}

/// Composite embedding `outer . inner` (for example sphere inclusion followed
/// by the helical embedding).
pub fn compose_embeddings(
    outer: &IsometricEmbedding,
    inner: &IsometricEmbedding,
) -> Result<IsometricEmbedding> {
    if outer.source.ambient_dim() != inner.ambient_dim {
        return Err(CoreError::DimensionMismatch(
            "outer embedding source does not match inner ambient space".into(),
        ));
    }
    let map = compose_into_flat(&inner.map, &outer.map)?;
    Ok(IsometricEmbedding {
        source: inner.source.clone(),
        ambient_dim: outer.ambient_dim,
        map,
        helical: outer.helical,
    })
}

/// Maximum deviation of `J^T J` from the identity, with `J` the
/// finite-difference Jacobian of the embedding at `p` (chart coordinates of
/// the source): the isometry residual.
pub fn isometry_residual_fd(iota: &IsometricEmbedding, p: &[f64]) -> Result<f64> {
    let src = &iota.source;
    let cm = src.chart_at(p);
    let xc = src.to_chart(cm, p);
    let m = src.dim();
    let b = iota.ambient_dim;
    let h = crate::numdiff::default_step(1, 1.0);
    let f = |x: &[f64]| iota.map.eval(&src.embed(cm, x));
    let j = crate::numdiff::jacobian(&f, &xc, b, h)?;
    let jtj = j.transpose() * &j;
    let g = src.chart_metric(cm, &xc).matrix;
    let mut worst = 0.0_f64;
    for i in 0..m {
        for k in 0..m {
            worst = worst.max((jtj[(i, k)] - g[(i, k)]).abs());
        }
    }
    Ok(worst)
}

fn pinv_tangent(src: &Manifold, cm: ChartId, xc: &[f64], v_ambient: &[f64]) -> Result<Vec<f64>> {
    // chart components of a tangent vector: g^{-1} J^T v
    let e1 = src.embed_d1(cm, xc);
    let m = src.dim();
    let b = src.ambient_dim();
    let g_inv = src.chart_metric(cm, xc).inverse()?;
    let mut jtv = vec![0.0; m];
    for (i, item) in jtv.iter_mut().enumerate() {
        for a in 0..b {
            *item += e1.get(&[i, a]) * v_ambient[a];
        }
    }
    Ok((0..m)
        .map(|i| (0..m).map(|l| g_inv[(i, l)] * jtv[l]).sum())
        .collect())
}

/// Second fundamental form `A[v1, v2]`: the normal component of the raw chart
/// Hessian of the embedding, evaluated on tangent vectors given in the
/// source's ambient coordinates. Output lives in the embedding's ambient
/// space, orthogonal to the embedded tangent plane.
pub fn second_fundamental_form(
    iota: &IsometricEmbedding,
    p: &[f64],
    v1: &[f64],
    v2: &[f64],
) -> Result<Vec<f64>> {
    let src = &iota.source;
    src.check_on_manifold(p)?;
    let cm = src.chart_at(p);
    let xc = src.to_chart(cm, p);
    let b = iota.ambient_dim;
    let m = src.dim();

    let w1 = iota.map.ambient_partials(cm, &xc, 1)?;
    let w2 = iota.map.ambient_partials(cm, &xc, 2)?;

    let v1c = pinv_tangent(src, cm, &xc, v1)?;
    let v2c = pinv_tangent(src, cm, &xc, v2)?;

    // raw Hessian along the two tangent directions
    let mut h = vec![0.0; b];
    for (a, item) in h.iter_mut().enumerate() {
        for i in 0..m {
            for jj in 0..m {
                *item += w2.get(&[i, jj, a]) * v1c[i] * v2c[jj];
            }
        }
    }

    // project out the tangent plane of the embedded image: columns of J
    let jmat = DMatrix::from_fn(b, m, |a, i| w1.get(&[i, a]));
    let jtj = jmat.transpose() * &jmat;
    let jtj_inv = jtj
        .try_inverse()
        .ok_or_else(|| CoreError::Numerical("embedding Jacobian is rank-deficient".into()))?;
    let hv = DMatrix::from_column_slice(b, 1, &h);
    let tangent_part = &jmat * (jtj_inv * (jmat.transpose() * &hv));
    Ok((0..b).map(|a| h[a] - tangent_part[(a, 0)]).collect())
}

/// Composes a map `u: M -> N` with an embedding of `N` into flat space,
/// producing `iota . u : M -> R^V` with analytic jets when both factors have
/// them.
pub fn compose_with_embedding(u: &SmoothMap, iota: &IsometricEmbedding) -> Result<SmoothMap> {
    if !std::ptr::eq(u.target.as_ref() as *const Manifold, iota.source.as_ref() as *const Manifold)
        && u.target.ambient_dim() != iota.source.ambient_dim()
    {
        return Err(CoreError::DimensionMismatch(
            "embedding source does not match map target".into(),
        ));
    }
    compose_into_flat(u, &iota.map)
}

/// `outer . u` where `outer` has a flat target; jets chain through the chart
/// representation of `u` up to order 2.
fn compose_into_flat(u: &SmoothMap, outer: &SmoothMap) -> Result<SmoothMap> {
    let target = outer.target.clone();
    if !target.chart_is_trivial() {
        return Err(CoreError::Config("composition target must be flat".into()));
    }
    let u_inner = u.clone();
    let outer_val = outer.clone();
    let value = move |x: &[f64]| outer_val.eval(&u_inner.eval(x));

    let u_jet = u.clone();
    let outer_jet = outer.clone();
    let jet = ClosureJet(move |chart: ChartId, x: &[f64], order: usize| {
        if order > 2 {
            return None;
        }
        let y = u_jet.eval_chart(chart, x);
        if y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let cn = u_jet.target.chart_at(&y);
        let yc = u_jet.target.to_chart(cn, &y);
        let p1 = u_jet.chart_partials(chart, cn, x, 1).ok()?;
        let o1 = outer_jet.ambient_partials(cn, &yc, 1).ok()?;
        if order == 1 {
            return Some(chain_first(&p1, &o1));
        }
        let p2 = u_jet.chart_partials(chart, cn, x, 2).ok()?;
        let o2 = outer_jet.ambient_partials(cn, &yc, 2).ok()?;
        Some(chain_second(&p1, &p2, &o1, &o2))
    });
    Ok(SmoothMap::new(u.domain.clone(), target, value)
        .with_jet(Arc::new(jet))
        .with_fd_scale(u.fd_scale()))
}

/// Both sides of the extrinsic/intrinsic split at a point:
/// `lhs = |D^2_K(iota . u)|^2` and
/// `rhs = |D^2_K u|^2 + sum |A[Tu e_i, Tu e_j]|^2` over an orthonormal frame.
pub fn extrinsic_split(
    u: &SmoothMap,
    iota: &IsometricEmbedding,
    x_ambient: &[f64],
) -> Result<(f64, f64)> {
    let composed = compose_with_embedding(u, iota)?;
    let cm = u.domain.chart_at(x_ambient);
    let xc = u.domain.to_chart(cm, x_ambient);
    let g_m = u.domain.chart_metric(cm, &xc);
    let flat = crate::manifold::MetricTensor::identity(iota.ambient_dim);
    let lhs_t = covariant_hessian(&composed, x_ambient)?;
    let lhs = lhs_t.norm(&g_m, &flat)?;

    let g_n = crate::manifold::MetricTensor::identity(u.target.ambient_dim());
    let hess = covariant_hessian(u, x_ambient)?;
    let intrinsic = hess.norm(&g_m, &g_n)?;

    let bending = bending_norm_sq(u, iota, x_ambient)?;
    Ok((lhs * lhs, intrinsic * intrinsic + bending))
}

/// `sum_{a,b} |A[Tu e_a, Tu e_b]|^2` over a g_M-orthonormal frame.
fn bending_norm_sq(u: &SmoothMap, iota: &IsometricEmbedding, x_ambient: &[f64]) -> Result<f64> {
    let cm = u.domain.chart_at(x_ambient);
    let xc = u.domain.to_chart(cm, x_ambient);
    let g_m = u.domain.chart_metric(cm, &xc);
    let frame = g_m.orthonormal_frame()?;
    let m = u.domain.dim();
    let tu = tangent_map(u, x_ambient)?;
    let y = u.eval_chart(cm, &xc);
    let b_t = u.target.ambient_dim();

    // tangent images of the frame vectors, in target ambient coordinates
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(m);
    for a in 0..m {
        let mut v = vec![0.0; b_t];
        for i in 0..m {
            for c in 0..b_t {
                v[c] += tu.components.get(&[i, c]) * frame[(i, a)];
            }
        }
        images.push(v);
    }

    let mut acc = 0.0;
    for vi in &images {
        for vj in &images {
            let a = second_fundamental_form(iota, &y, vi, vj)?;
            acc += a.iter().map(|v| v * v).sum::<f64>();
        }
    }
    Ok(acc)
}
