//! Covariant jet calculus for maps between Riemannian manifolds.
//!
//! The covariant Hessian is realized two independent ways and cross-checked:
//! in charts, as raw second partials corrected by the Christoffel symbols of
//! both connections; in ambient space, as the tangential projection of the
//! domain-covariant Hessian of the embedded composite (Gauss formula). Orders
//! three and four are built by the recursion "covariant derivative of the
//! order-(k-1) field", differentiating the field with a one-step central
//! difference while correcting with the connection terms.

use crate::error::{CoreError, Result};
use crate::manifold::{ChartId, Manifold, MetricTensor};
use crate::map::SmoothMap;
use crate::multinorm::DoubleMorphism;
use crate::numdiff;
use crate::tensor::Tensor;
use nalgebra::DMatrix;

/// A k-linear map on chart tangent directions with values tangent to the
/// target (ambient coordinates unless stated otherwise).
#[derive(Clone, Debug)]
pub struct CovariantTensor {
    pub order: usize,
    /// Ambient coordinates of the domain base point.
    pub base: Vec<f64>,
    /// Dims `[m; order] ++ [value_dim]`.
    pub components: Tensor,
    pub value_dim: usize,
}

impl CovariantTensor {
    pub fn norm(&self, g_m: &MetricTensor, g_n: &MetricTensor) -> Result<f64> {
        tensor_norm(&self.components, self.order, g_m, g_n)
    }

    pub fn max_pair_asymmetry(&self) -> f64 {
        if self.order < 2 {
            return 0.0;
        }
        let m = self.components.dims()[0];
        let lead = self.order - 2;
        let mut worst = 0.0_f64;
        let mut idx = vec![0usize; self.order + 1];
        // check symmetry of the last two input slots over all leading indices
        let leading: usize = self.components.dims()[..lead].iter().product();
        for l in 0..leading {
            let mut rem = l;
            for k in (0..lead).rev() {
                idx[k] = rem % m;
                rem /= m;
            }
            for i in 0..m {
                for j in 0..m {
                    for a in 0..self.value_dim {
                        idx[lead] = i;
                        idx[lead + 1] = j;
                        idx[self.order] = a;
                        let v1 = self.components.get(&idx);
                        idx[lead] = j;
                        idx[lead + 1] = i;
                        let v2 = self.components.get(&idx);
                        worst = worst.max((v1 - v2).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Hilbert-Schmidt norm of a k-linear chart tensor with metric `g_m` on each
/// input slot and `g_n` on the value slot: the sum of squared values over a
/// `g_m`-orthonormal input frame, measured in `g_n`.
pub fn tensor_norm(
    components: &Tensor,
    order: usize,
    g_m: &MetricTensor,
    g_n: &MetricTensor,
) -> Result<f64> {
    let frame = g_m.orthonormal_frame()?;
    let mut t = components.clone();
    for axis in 0..order {
        t = t.contract_axis(axis, &frame);
    }
    let chol = g_n
        .matrix
        .clone()
        .cholesky()
        .ok_or_else(|| CoreError::Numerical("value metric is not positive definite".into()))?;
    let l: DMatrix<f64> = chol.l();
    t = t.contract_axis(order, &l);
    Ok(t.frobenius())
}

struct ChartContext {
    cm: ChartId,
    cn: ChartId,
    xc: Vec<f64>,
    y: Vec<f64>,
    yc: Vec<f64>,
}

fn context(u: &SmoothMap, x_ambient: &[f64]) -> Result<ChartContext> {
    u.domain.check_on_manifold(x_ambient)?;
    let cm = u.domain.chart_at(x_ambient);
    let xc = u.domain.to_chart(cm, x_ambient);
    let y = u.eval_chart(cm, &xc);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::Domain("map value is not finite at this point".into()));
    }
    let cn = u.target.chart_at(&y);
    let yc = u.target.to_chart(cn, &y);
    Ok(ChartContext { cm, cn, xc, y, yc })
}

/// Tangent map at `x` as an order-1 covariant tensor with values tangent to
/// the target in ambient coordinates.
pub fn tangent_map(u: &SmoothMap, x_ambient: &[f64]) -> Result<CovariantTensor> {
    let ctx = context(u, x_ambient)?;
    let w1 = u.ambient_partials(ctx.cm, &ctx.xc, 1)?;
    let p = u.target.tangent_projector(&ctx.y);
    let m = u.domain.dim();
    let b = u.target.ambient_dim();
    let proj = Tensor::from_fn(&[m, b], |idx| {
        let (i, a) = (idx[0], idx[1]);
        (0..b).map(|c| p[(a, c)] * w1.get(&[i, c])).sum()
    });
    Ok(CovariantTensor {
        order: 1,
        base: x_ambient.to_vec(),
        components: proj,
        value_dim: b,
    })
}

/// Residual `|(I - P) W1|` of the unprojected derivative against the target
/// tangent space; diagnostic for oracle consistency.
pub fn tangency_residual(u: &SmoothMap, x_ambient: &[f64]) -> Result<f64> {
    let ctx = context(u, x_ambient)?;
    let w1 = u.ambient_partials(ctx.cm, &ctx.xc, 1)?;
    let p = u.target.tangent_projector(&ctx.y);
    let m = u.domain.dim();
    let b = u.target.ambient_dim();
    let mut worst = 0.0_f64;
    for i in 0..m {
        for a in 0..b {
            let mut acc = w1.get(&[i, a]);
            for c in 0..b {
                acc -= p[(a, c)] * w1.get(&[i, c]);
            }
            worst = worst.max(acc.abs());
        }
    }
    Ok(worst)
}

/// `|Tu|` with the domain chart metric and the ambient metric on values.
pub fn tangent_norm(u: &SmoothMap, x_ambient: &[f64]) -> Result<f64> {
    covariant_norm(u, x_ambient, 1)
}

/// Chart components of the covariant Hessian:
/// `H^c_ij = d_ij u^c - Gamma_M^l_ij d_l u^c + Gamma_N^c_ab d_i u^a d_j u^b`.
fn hessian_chart_components(u: &SmoothMap, ctx: &ChartContext) -> Result<Tensor> {
    let p1 = u.chart_partials(ctx.cm, ctx.cn, &ctx.xc, 1)?;
    let p2 = u.chart_partials(ctx.cm, ctx.cn, &ctx.xc, 2)?;
    let gamma_m = u.domain.christoffel(ctx.cm, &ctx.xc);
    let gamma_n = u.target.christoffel(ctx.cn, &ctx.yc);
    let m = u.domain.dim();
    let n = u.target.dim();
    Ok(Tensor::from_fn(&[m, m, n], |idx| {
        let (i, j, c) = (idx[0], idx[1], idx[2]);
        let mut acc = p2.get(&[i, j, c]);
        for l in 0..m {
            acc -= gamma_m.get(i, j, l) * p1.get(&[l, c]);
        }
        for a in 0..n {
            for b in 0..n {
                acc += gamma_n.get(a, b, c) * p1.get(&[i, a]) * p1.get(&[j, b]);
            }
        }
        acc
    }))
}

/// Pushes the last (chart-valued) axis to ambient coordinates through the
/// differential of the target chart embedding.
fn push_values_to_ambient(target: &Manifold, cn: ChartId, yc: &[f64], t: &Tensor) -> Tensor {
    let e1 = target.embed_d1(cn, yc);
    let n = target.dim();
    let b = target.ambient_dim();
    let basis = DMatrix::from_fn(n, b, |c, a| e1.get(&[c, a]));
    t.contract_axis(t.rank() - 1, &basis)
}

/// Covariant Hessian via the chart-Christoffel realization, with values
/// pushed to ambient coordinates.
pub fn covariant_hessian(u: &SmoothMap, x_ambient: &[f64]) -> Result<CovariantTensor> {
    let ctx = context(u, x_ambient)?;
    let h = hessian_chart_components(u, &ctx)?;
    let amb = push_values_to_ambient(&u.target, ctx.cn, &ctx.yc, &h);
    Ok(CovariantTensor {
        order: 2,
        base: x_ambient.to_vec(),
        components: amb,
        value_dim: u.target.ambient_dim(),
    })
}

/// Covariant Hessian via the ambient realization: domain-covariant Hessian of
/// the embedded composite, tangentially projected onto the target (Gauss
/// formula).
pub fn covariant_hessian_ambient(u: &SmoothMap, x_ambient: &[f64]) -> Result<CovariantTensor> {
    let ctx = context(u, x_ambient)?;
    let w1 = u.ambient_partials(ctx.cm, &ctx.xc, 1)?;
    let w2 = u.ambient_partials(ctx.cm, &ctx.xc, 2)?;
    let gamma_m = u.domain.christoffel(ctx.cm, &ctx.xc);
    let p = u.target.tangent_projector(&ctx.y);
    let m = u.domain.dim();
    let b = u.target.ambient_dim();
    let comps = Tensor::from_fn(&[m, m, b], |idx| {
        let (i, j, a) = (idx[0], idx[1], idx[2]);
        let mut acc = 0.0;
        for c in 0..b {
            let mut raw = w2.get(&[i, j, c]);
            for l in 0..m {
                raw -= gamma_m.get(i, j, l) * w1.get(&[l, c]);
            }
            acc += p[(a, c)] * raw;
        }
        acc
    });
    Ok(CovariantTensor {
        order: 2,
        base: x_ambient.to_vec(),
        components: comps,
        value_dim: b,
    })
}

/// Chart components of the order-k covariant derivative field at a chart
/// point, with charts held fixed (needed so the recursion can difference the
/// field without chart switches inside the stencil).
fn covariant_field_chart(
    u: &SmoothMap,
    cm: ChartId,
    cn: ChartId,
    xc: &[f64],
    k: usize,
) -> Result<Tensor> {
    match k {
        1 => u.chart_partials(cm, cn, xc, 1),
        2 => {
            let y = u.eval_chart(cm, xc);
            let yc = u.target.to_chart(cn, &y);
            let ctx = ChartContext {
                cm,
                cn,
                xc: xc.to_vec(),
                y,
                yc,
            };
            hessian_chart_components(u, &ctx)
        }
        3 | 4 => {
            let m = u.domain.dim();
            let n = u.target.dim();
            let h = numdiff::default_step(1, u.fd_scale());
            let base = covariant_field_chart(u, cm, cn, xc, k - 1)?;
            let p1 = u.chart_partials(cm, cn, xc, 1)?;
            let gamma_m = u.domain.christoffel(cm, xc);
            let y = u.eval_chart(cm, xc);
            let yc = u.target.to_chart(cn, &y);
            let gamma_n = u.target.christoffel(cn, &yc);

            // raw directional derivatives of the field
            let mut deriv = Vec::with_capacity(m);
            for i0 in 0..m {
                let mut xp = xc.to_vec();
                xp[i0] += h;
                let mut xm = xc.to_vec();
                xm[i0] -= h;
                let fp = covariant_field_chart(u, cm, cn, &xp, k - 1)?;
                let fm = covariant_field_chart(u, cm, cn, &xm, k - 1)?;
                deriv.push(fp.sub(&fm).scale(1.0 / (2.0 * h)));
            }

            let mut dims = vec![m; k];
            dims.push(n);
            let mut out = Tensor::zeros(&dims);
            let mut idx = vec![0usize; k + 1];
            let total: usize = dims.iter().product();
            let mut lin = 0usize;
            while lin < total {
                // unravel lin into idx
                let mut rem = lin;
                for kk in (0..=k).rev() {
                    idx[kk] = rem % dims[kk];
                    rem /= dims[kk];
                }
                let i0 = idx[0];
                let rest = &idx[1..k];
                let c = idx[k];

                let mut key: Vec<usize> = rest.to_vec();
                key.push(c);
                let mut acc = deriv[i0].get(&key);

                // -Gamma_M correction on each existing input slot
                for (r, &ir) in rest.iter().enumerate() {
                    for l in 0..m {
                        let gm = gamma_m.get(i0, ir, l);
                        if gm != 0.0 {
                            let mut key2: Vec<usize> = rest.to_vec();
                            key2[r] = l;
                            key2.push(c);
                            acc -= gm * base.get(&key2);
                        }
                    }
                }
                // +Gamma_N correction on the value slot
                for a in 0..n {
                    let du = p1.get(&[i0, a]);
                    if du != 0.0 {
                        for bb in 0..n {
                            let gn = gamma_n.get(a, bb, c);
                            if gn != 0.0 {
                                let mut key2: Vec<usize> = rest.to_vec();
                                key2.push(bb);
                                acc += gn * du * base.get(&key2);
                            }
                        }
                    }
                }
                out.data_mut()[lin] = acc;
                lin += 1;
            }
            Ok(out)
        }
        o => Err(CoreError::UnsupportedOrder(o)),
    }
}

/// Order-k covariant derivative (`2 <= k <= 4`), values in ambient coordinates.
pub fn higher_covariant(u: &SmoothMap, x_ambient: &[f64], k: usize) -> Result<CovariantTensor> {
    if !(2..=4).contains(&k) {
        return Err(CoreError::UnsupportedOrder(k));
    }
    let ctx = context(u, x_ambient)?;
    let field = covariant_field_chart(u, ctx.cm, ctx.cn, &ctx.xc, k)?;
    let amb = push_values_to_ambient(&u.target, ctx.cn, &ctx.yc, &field);
    Ok(CovariantTensor {
        order: k,
        base: x_ambient.to_vec(),
        components: amb,
        value_dim: u.target.ambient_dim(),
    })
}

/// `|D^k_K u|` with the chart metric on inputs and the ambient Euclidean
/// metric on values (equal to `g_N` on tangent vectors for isometric
/// embeddings).
pub fn covariant_norm(u: &SmoothMap, x_ambient: &[f64], k: usize) -> Result<f64> {
    let t = match k {
        1 => tangent_map(u, x_ambient)?,
        _ => higher_covariant(u, x_ambient, k)?,
    };
    let cm = u.domain.chart_at(x_ambient);
    let xc = u.domain.to_chart(cm, x_ambient);
    let g_m = u.domain.chart_metric(cm, &xc);
    let g_n = MetricTensor::identity(u.target.ambient_dim());
    t.norm(&g_m, &g_n)
}

/// `|Tu|^2 + |D_K(Tu)|^2` via the all-ambient route (projected first
/// derivative and Gauss-projected Hessian).
pub fn sasaki_norm_sq(u: &SmoothMap, x_ambient: &[f64]) -> Result<f64> {
    let cm = u.domain.chart_at(x_ambient);
    let xc = u.domain.to_chart(cm, x_ambient);
    let g_m = u.domain.chart_metric(cm, &xc);
    let g_n = MetricTensor::identity(u.target.ambient_dim());
    let t1 = tangent_map(u, x_ambient)?.norm(&g_m, &g_n)?;
    let t2 = covariant_hessian_ambient(u, x_ambient)?.norm(&g_m, &g_n)?;
    Ok(t1 * t1 + t2 * t2)
}

/// Sasaki-metric squared norm of the second tangent map, computed by
/// splitting the raw derivative of the `Tu` field into horizontal and
/// vertical parts in chart coordinates.
///
/// For each direction `e_j`, the velocity of the field `Tu` is split as
/// `raw = Hor(base velocity) + Vert(K(raw))`; the Sasaki norm adds the target
/// base velocity measured in `g_N` and the connector `K(raw)` measured in
/// `g*_M (x) g_N`. `gamma_sign` scales the Christoffel symbols inside the
/// horizontal lift; anything but `1.0` is a deliberate fault injection for
/// mutation tests.
pub fn sasaki_norm_sq_split(u: &SmoothMap, x_ambient: &[f64], gamma_sign: f64) -> Result<f64> {
    let ctx = context(u, x_ambient)?;
    let p1 = u.chart_partials(ctx.cm, ctx.cn, &ctx.xc, 1)?;
    let p2 = u.chart_partials(ctx.cm, ctx.cn, &ctx.xc, 2)?;
    let gamma_m = u.domain.christoffel(ctx.cm, &ctx.xc);
    let gamma_n = u.target.christoffel(ctx.cn, &ctx.yc);
    let g_m = u.domain.chart_metric(ctx.cm, &ctx.xc);
    let g_n = u.target.chart_metric(ctx.cn, &ctx.yc);
    let m = u.domain.dim();
    let n = u.target.dim();

    // vertical part per direction j: raw field derivative minus horizontal lift
    let vertical = Tensor::from_fn(&[m, m, n], |idx| {
        let (j, i, c) = (idx[0], idx[1], idx[2]);
        let raw = p2.get(&[j, i, c]);
        let mut hor = 0.0;
        for l in 0..m {
            hor += gamma_m.get(j, i, l) * p1.get(&[l, c]);
        }
        for a in 0..n {
            for b in 0..n {
                hor -= gamma_n.get(a, b, c) * p1.get(&[j, a]) * p1.get(&[i, b]);
            }
        }
        raw - gamma_sign * hor
    });

    let base_part = tensor_norm(&p1, 1, &g_m, &g_n)?;
    let vert_part = tensor_norm(&vertical, 2, &g_m, &g_n)?;
    Ok(base_part * base_part + vert_part * vert_part)
}

/// Result of the renormalization round trip.
#[derive(Clone, Debug)]
pub struct RenormalizedJet {
    /// Chart components of `f(Tu) = Tu / sqrt(1 + |Tu|^2)`, dims `[m, n]`.
    pub renormalized: Tensor,
    /// `|f(Tu)|` (always < 1).
    pub renormalized_norm: f64,
    /// Covariant Hessian reconstructed from the covariant derivative of the
    /// renormalized field, values in ambient coordinates.
    pub reconstructed: CovariantTensor,
}

struct FieldMetrics {
    g_m_inv: DMatrix<f64>,
    g_n: DMatrix<f64>,
}

fn field_metrics(u: &SmoothMap, cm: ChartId, cn: ChartId, xc: &[f64]) -> Result<FieldMetrics> {
    let g_m_inv = u.domain.chart_metric(cm, xc).inverse()?;
    let y = u.eval_chart(cm, xc);
    let yc = u.target.to_chart(cn, &y);
    let g_n = u.target.chart_metric(cn, &yc).matrix;
    Ok(FieldMetrics { g_m_inv, g_n })
}

fn xi_inner(gm_inv: &DMatrix<f64>, g_n: &DMatrix<f64>, a: &Tensor, b: &Tensor) -> f64 {
    let m = a.dims()[0];
    let n = a.dims()[1];
    let mut acc = 0.0;
    for i in 0..m {
        for l in 0..m {
            for c in 0..n {
                for d in 0..n {
                    acc += gm_inv[(i, l)] * g_n[(c, d)] * a.get(&[i, c]) * b.get(&[l, d]);
                }
            }
        }
    }
    acc
}

/// The renormalized field `f(Tu) = Tu / sqrt(1 + |Tu|^2)` at a chart point,
/// in chart components with fixed charts.
pub fn renormalized_field(u: &SmoothMap, cm: ChartId, cn: ChartId, xc: &[f64]) -> Result<Tensor> {
    let xi = u.chart_partials(cm, cn, xc, 1)?;
    let fm = field_metrics(u, cm, cn, xc)?;
    let rho = (1.0 + xi_inner(&fm.g_m_inv, &fm.g_n, &xi, &xi)).sqrt();
    Ok(xi.scale(1.0 / rho))
}

/// Renormalization round trip: push `Tu` through `xi -> xi / sqrt(1 + |xi|^2)`,
/// take the covariant derivative of the renormalized field, and undo the
/// renormalization to reconstruct the covariant Hessian.
///
/// Because `rho^2 - |Tu|^2 = 1`, the resolvent inverts in closed form:
/// `(id - Tu (x) Tu / rho^2)^{-1} = id + Tu (x) Tu`.
pub fn hm_renormalize(u: &SmoothMap, x_ambient: &[f64]) -> Result<RenormalizedJet> {
    let ctx = context(u, x_ambient)?;
    let m = u.domain.dim();
    let n = u.target.dim();
    let xi = u.chart_partials(ctx.cm, ctx.cn, &ctx.xc, 1)?;
    let fm = field_metrics(u, ctx.cm, ctx.cn, &ctx.xc)?;
    let xi_sq = xi_inner(&fm.g_m_inv, &fm.g_n, &xi, &xi);
    let rho = (1.0 + xi_sq).sqrt();
    let renorm = xi.scale(1.0 / rho);

    // Raw partials of the renormalized field, dims [m(j), m(i), n], by the
    // product rule on the map's jet and the metric derivatives. Differencing
    // the field pointwise instead would stack two finite-difference passes;
    // `renormalized_field` exists for validating this algebra in tests.
    let raw = renormalized_field_partials_exact(u, &ctx, &xi, rho)?;

    // covariant correction of the field derivative
    let gamma_m = u.domain.christoffel(ctx.cm, &ctx.xc);
    let gamma_n = u.target.christoffel(ctx.cn, &ctx.yc);
    let p1 = &xi;
    let comp = renorm.clone();
    let w = Tensor::from_fn(&[m, m, n], |idx| {
        let (j, i, c) = (idx[0], idx[1], idx[2]);
        let mut acc = raw.get(&[j, i, c]);
        for l in 0..m {
            acc -= gamma_m.get(j, i, l) * comp.get(&[l, c]);
        }
        for a in 0..n {
            for b in 0..n {
                acc += gamma_n.get(a, b, c) * p1.get(&[j, a]) * comp.get(&[i, b]);
            }
        }
        acc
    });

    // reconstruction: D_K(Tu)[j] = rho (W_j + Tu <Tu, W_j>_g)
    let mut recon = Tensor::zeros(&[m, m, n]);
    for j in 0..m {
        let wj = Tensor::from_fn(&[m, n], |idx| w.get(&[j, idx[0], idx[1]]));
        let inner = xi_inner(&fm.g_m_inv, &fm.g_n, &xi, &wj);
        for i in 0..m {
            for c in 0..n {
                recon.set(
                    &[j, i, c],
                    rho * (wj.get(&[i, c]) + xi.get(&[i, c]) * inner),
                );
            }
        }
    }
    let amb = push_values_to_ambient(&u.target, ctx.cn, &ctx.yc, &recon);
    Ok(RenormalizedJet {
        renormalized: renorm,
        renormalized_norm: (xi_sq / (1.0 + xi_sq)).sqrt(),
        reconstructed: CovariantTensor {
            order: 2,
            base: x_ambient.to_vec(),
            components: amb,
            value_dim: u.target.ambient_dim(),
        },
    })
}

/// Exact raw partials of `xi / rho(xi)` from second partials and the metric
/// derivatives expressed through Christoffel symbols.
fn renormalized_field_partials_exact(
    u: &SmoothMap,
    ctx: &ChartContext,
    xi: &Tensor,
    rho: f64,
) -> Result<Tensor> {
    let m = u.domain.dim();
    let n = u.target.dim();
    let p2 = u.chart_partials(ctx.cm, ctx.cn, &ctx.xc, 2)?;
    let fm = field_metrics(u, ctx.cm, ctx.cn, &ctx.xc)?;
    let dg_m = u.domain.metric_partials(ctx.cm, &ctx.xc);
    let dg_n_chart = u.target.metric_partials(ctx.cn, &ctx.yc);
    let p1 = u.chart_partials(ctx.cm, ctx.cn, &ctx.xc, 1)?;

    let mut out = Tensor::zeros(&[m, m, n]);
    for j in 0..m {
        // d_j of |xi|^2: metric variation terms plus the field variation
        let mut d_xi_sq = 0.0;
        // d_j g_M^{-1} = -g^{-1} (d_j g) g^{-1}
        let mut dg_inv = DMatrix::zeros(m, m);
        for i in 0..m {
            for l in 0..m {
                let mut acc = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        acc -= fm.g_m_inv[(i, a)] * dg_m.get(&[j, a, b]) * fm.g_m_inv[(b, l)];
                    }
                }
                dg_inv[(i, l)] = acc;
            }
        }
        for i in 0..m {
            for l in 0..m {
                for c in 0..n {
                    for d in 0..n {
                        let xic = xi.get(&[i, c]);
                        let xld = xi.get(&[l, d]);
                        d_xi_sq += dg_inv[(i, l)] * fm.g_n[(c, d)] * xic * xld;
                        // d_j g_N(chart) through the base motion d_j y^a = P1[j, a]
                        let mut dgn = 0.0;
                        for a in 0..n {
                            dgn += dg_n_chart.get(&[a, c, d]) * p1.get(&[j, a]);
                        }
                        d_xi_sq += fm.g_m_inv[(i, l)] * dgn * xic * xld;
                        d_xi_sq += 2.0
                            * fm.g_m_inv[(i, l)]
                            * fm.g_n[(c, d)]
                            * p2.get(&[j, i, c])
                            * xld;
                    }
                }
            }
        }
        let d_rho = d_xi_sq / (2.0 * rho);
        for i in 0..m {
            for c in 0..n {
                out.set(
                    &[j, i, c],
                    p2.get(&[j, i, c]) / rho - xi.get(&[i, c]) * d_rho / (rho * rho),
                );
            }
        }
    }
    Ok(out)
}

/// Second tangent map as a double-vector-bundle morphism in chart components:
/// `(f1, f2, f12) = Du` and `f12hat = D^2 u` (raw chart partials, no
/// connection terms).
pub fn second_tangent(u: &SmoothMap, x_ambient: &[f64]) -> Result<DoubleMorphism> {
    let ctx = context(u, x_ambient)?;
    let p1 = u.chart_partials(ctx.cm, ctx.cn, &ctx.xc, 1)?;
    let p2 = u.chart_partials(ctx.cm, ctx.cn, &ctx.xc, 2)?;
    let m = u.domain.dim();
    let n = u.target.dim();
    let f1 = DMatrix::from_fn(n, m, |c, i| p1.get(&[i, c]));
    Ok(DoubleMorphism {
        base_in: x_ambient.to_vec(),
        base_out: ctx.y.clone(),
        f1: f1.clone(),
        f2: f1.clone(),
        f12: f1,
        f12hat: Tensor::from_fn(&[m, m, n], |idx| p2.get(idx)),
    })
}

/// FD gradient norm `|T phi|_{g*}` of an invariant scalar field `phi` built
/// from the map (used by the Kato-type inequality checks).
pub fn scalar_field_gradient_norm<F>(u: &SmoothMap, x_ambient: &[f64], field: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let cm = u.domain.chart_at(x_ambient);
    let xc = u.domain.to_chart(cm, x_ambient);
    let h = numdiff::default_step(1, u.fd_scale());
    let m = u.domain.dim();
    let mut df = vec![0.0; m];
    for i in 0..m {
        let mut xp = xc.clone();
        xp[i] += h;
        let mut xm = xc.clone();
        xm[i] -= h;
        let fp = field(&u.domain.embed(cm, &xp))?;
        let fm = field(&u.domain.embed(cm, &xm))?;
        df[i] = (fp - fm) / (2.0 * h);
    }
    let g_inv = u.domain.chart_metric(cm, &xc).inverse()?;
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            acc += df[i] * g_inv[(i, j)] * df[j];
        }
    }
    Ok(acc.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn scalar_square_map() -> SmoothMap {
        let e1 = Arc::new(Manifold::euclidean(1).unwrap());
        SmoothMap::new(e1.clone(), e1, |x: &[f64]| vec![x[0] * x[0]])
    }

    #[test]
    fn identity_tangent_map_is_identity() {
        let id = SmoothMap::identity(2).unwrap();
        let t = tangent_map(&id, &[0.3, 0.4]).unwrap();
        assert_relative_eq!(t.components.get(&[0, 0]), 1.0, epsilon = 1e-12);
        assert_relative_eq!(t.components.get(&[1, 1]), 1.0, epsilon = 1e-12);
        assert_relative_eq!(t.components.get(&[0, 1]), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_map_has_zero_tangent() {
        let e2 = Arc::new(Manifold::euclidean(2).unwrap());
        let c = SmoothMap::constant(e2.clone(), e2, vec![1.0, -1.0]);
        let t = tangent_map(&c, &[0.2, 0.2]).unwrap();
        assert_eq!(t.components.max_abs(), 0.0);
    }

    #[test]
    fn second_tangent_of_square_at_one() {
        let u = scalar_square_map();
        let d = second_tangent(&u, &[1.0]).unwrap();
        assert_relative_eq!(d.f1[(0, 0)], 2.0, epsilon = 1e-9);
        assert_relative_eq!(d.f2[(0, 0)], 2.0, epsilon = 1e-9);
        assert_relative_eq!(d.f12[(0, 0)], 2.0, epsilon = 1e-9);
        assert_relative_eq!(d.f12hat.get(&[0, 0, 0]), 2.0, epsilon = 1e-6);
    }

    #[test]
    fn hessian_of_square_on_flat_chart() {
        let u = scalar_square_map();
        let h = covariant_hessian(&u, &[1.0]).unwrap();
        assert_relative_eq!(h.components.get(&[0, 0, 0]), 2.0, epsilon = 1e-6);
        let ha = covariant_hessian_ambient(&u, &[1.0]).unwrap();
        assert_relative_eq!(ha.components.get(&[0, 0, 0]), 2.0, epsilon = 1e-6);
    }

    #[test]
    fn identity_hessian_vanishes() {
        let id = SmoothMap::identity(3).unwrap();
        let h = covariant_hessian(&id, &[0.1, 0.2, 0.3]).unwrap();
        assert!(h.components.max_abs() < 1e-12);
    }

    #[test]
    fn sasaki_of_identity_is_dimension() {
        let id = SmoothMap::identity(3).unwrap();
        let s = sasaki_norm_sq(&id, &[0.5, -0.2, 0.0]).unwrap();
        assert_relative_eq!(s, 3.0, epsilon = 1e-9);
        let ss = sasaki_norm_sq_split(&id, &[0.5, -0.2, 0.0], 1.0).unwrap();
        assert_relative_eq!(ss, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn sasaki_of_constant_is_zero() {
        let e2 = Arc::new(Manifold::euclidean(2).unwrap());
        let c = SmoothMap::constant(e2.clone(), e2, vec![4.0, 2.0]);
        assert_relative_eq!(sasaki_norm_sq(&c, &[0.0, 0.1]).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn unsupported_order_is_an_error() {
        let u = scalar_square_map();
        assert!(matches!(
            higher_covariant(&u, &[1.0], 5),
            Err(CoreError::UnsupportedOrder(5))
        ));
    }

    #[test]
    fn tensor_norm_of_identity_bilinear_form() {
        // identity bilinear form on R^2 valued in R: sum |delta_ij|^2 = 2
        let t = Tensor::from_fn(&[2, 2, 1], |idx| if idx[0] == idx[1] { 1.0 } else { 0.0 });
        let g2 = MetricTensor::identity(2);
        let g1 = MetricTensor::identity(1);
        assert_relative_eq!(
            tensor_norm(&t, 2, &g2, &g1).unwrap(),
            2.0_f64.sqrt(),
            epsilon = 1e-12
        );
        let z = Tensor::zeros(&[2, 2, 1]);
        assert_eq!(tensor_norm(&z, 2, &g2, &g1).unwrap(), 0.0);
    }

    #[test]
    fn renormalized_field_product_rule_matches_sampled_difference() {
        use crate::samples::random_sphere_map;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s2 = Arc::new(Manifold::sphere(2, 1.0).unwrap());
        let u = random_sphere_map(&mut rng, s2.clone(), s2.clone());
        let p = s2.random_point(&mut rng);
        let ctx = context(&u, &p).unwrap();
        let xi = u.chart_partials(ctx.cm, ctx.cn, &ctx.xc, 1).unwrap();
        let fm = field_metrics(&u, ctx.cm, ctx.cn, &ctx.xc).unwrap();
        let rho = (1.0 + xi_inner(&fm.g_m_inv, &fm.g_n, &xi, &xi)).sqrt();
        let exact = renormalized_field_partials_exact(&u, &ctx, &xi, rho).unwrap();
        let h = 1e-5;
        for j in 0..2 {
            let mut xp = ctx.xc.clone();
            xp[j] += h;
            let mut xm = ctx.xc.clone();
            xm[j] -= h;
            let fp = renormalized_field(&u, ctx.cm, ctx.cn, &xp).unwrap();
            let fm_ = renormalized_field(&u, ctx.cm, ctx.cn, &xm).unwrap();
            let fd = fp.sub(&fm_).scale(1.0 / (2.0 * h));
            for i in 0..2 {
                for c in 0..2 {
                    let want = fd.get(&[i, c]);
                    let got = exact.get(&[j, i, c]);
                    assert!(
                        (want - got).abs() < 1e-6 * (1.0 + want.abs()),
                        "field derivative [{j},{i},{c}]: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn hm_round_trip_at_critical_point() {
        // u(x) = x^2 at x = 0: Tu = 0, so the reconstruction equals D_K(Tu).
        let u = scalar_square_map();
        let jet = hm_renormalize(&u, &[0.0]).unwrap();
        assert!(jet.renormalized_norm < 1e-9);
        assert_relative_eq!(
            jet.reconstructed.components.get(&[0, 0, 0]),
            2.0,
            epsilon = 1e-5
        );
    }
}
