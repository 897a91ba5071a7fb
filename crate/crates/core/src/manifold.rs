//! Riemannian manifolds given by an ambient isometric embedding plus chart
//! data: metric, Christoffel symbols of the Levi-Civita connection, tangent
//! projection and geodesic distance.
//!
//! Built-in kinds: Euclidean space (identity chart), circles (two angle
//! charts), spheres (two stereographic charts, one per pole) and binary
//! products. Chart selection always picks the chart whose center is nearest
//! the evaluation point, so finite-difference stencils never straddle a chart
//! boundary.

use crate::error::{CoreError, Result};
use crate::tensor::Tensor;
use nalgebra::DMatrix;
use rand::Rng;
use std::f64::consts::PI;
use std::sync::Arc;

pub type ChartId = usize;

/// Symmetric positive definite metric matrix at a chart point.
#[derive(Clone, Debug)]
pub struct MetricTensor {
    pub matrix: DMatrix<f64>,
}

impl MetricTensor {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        MetricTensor { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        MetricTensor {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Columns form a g-orthonormal frame: with g = L L^T (Cholesky),
    /// the columns of L^{-T} satisfy e_a^T g e_b = delta_ab.
    pub fn orthonormal_frame(&self) -> Result<DMatrix<f64>> {
        let chol = self
            .matrix
            .clone()
            .cholesky()
            .ok_or_else(|| CoreError::Numerical("metric is not positive definite".into()))?;
        let l: DMatrix<f64> = chol.l();
        let inv = l
            .try_inverse()
            .ok_or_else(|| CoreError::Numerical("metric Cholesky factor not invertible".into()))?;
        Ok(inv.transpose())
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        self.matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| CoreError::Numerical("metric is not invertible".into()))
    }
}

/// Christoffel symbols `Gamma^k_ij`, stored with dims `[m, m, m]` and index
/// order `(i, j, k)`; symmetric in the two lower indices.
#[derive(Clone, Debug)]
pub struct ChristoffelSymbols {
    pub gamma: Tensor,
}

impl ChristoffelSymbols {
    pub fn zeros(dim: usize) -> Self {
        ChristoffelSymbols {
            gamma: Tensor::zeros(&[dim, dim, dim]),
        }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma.get(&[i, j, k])
    }

    pub fn max_lower_asymmetry(&self) -> f64 {
        let m = self.gamma.dims()[0];
        let mut worst = 0.0_f64;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    worst = worst.max((self.get(i, j, k) - self.get(j, i, k)).abs());
                }
            }
        }
        worst
    }
}

/// A Riemannian manifold descriptor. Immutable after construction; all
/// operations are pure, so descriptors are freely shared across threads.
#[derive(Clone, Debug)]
pub enum Manifold {
    Euclidean {
        dim: usize,
    },
    Circle {
        radius: f64,
    },
    Sphere {
        dim: usize,
        radius: f64,
    },
    Product {
        left: Arc<Manifold>,
        right: Arc<Manifold>,
    },
}

impl Manifold {
    pub fn euclidean(dim: usize) -> Result<Manifold> {
        if dim < 1 {
            return Err(CoreError::Config("euclidean dimension must be >= 1".into()));
        }
        Ok(Manifold::Euclidean { dim })
    }

    pub fn circle(radius: f64) -> Result<Manifold> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(CoreError::Config("circle radius must be positive".into()));
        }
        Ok(Manifold::Circle { radius })
    }

    pub fn sphere(dim: usize, radius: f64) -> Result<Manifold> {
        if dim < 1 {
            return Err(CoreError::Config("sphere dimension must be >= 1".into()));
        }
        if radius.is_nan() || radius <= 0.0 {
            return Err(CoreError::Config("sphere radius must be positive".into()));
        }
        Ok(Manifold::Sphere { dim, radius })
    }

    pub fn product(left: Manifold, right: Manifold) -> Result<Manifold> {
        Ok(Manifold::Product {
            left: Arc::new(left),
            right: Arc::new(right),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Manifold::Euclidean { dim } => *dim,
            Manifold::Circle { .. } => 1,
            Manifold::Sphere { dim, .. } => *dim,
            Manifold::Product { left, right } => left.dim() + right.dim(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Euclidean { dim } => *dim,
            Manifold::Circle { .. } => 2,
            Manifold::Sphere { dim, .. } => dim + 1,
            Manifold::Product { left, right } => left.ambient_dim() + right.ambient_dim(),
        }
    }

    /// True when the single chart is the identity on ambient space.
    pub fn chart_is_trivial(&self) -> bool {
        match self {
            Manifold::Euclidean { .. } => true,
            Manifold::Product { left, right } => left.chart_is_trivial() && right.chart_is_trivial(),
            _ => false,
        }
    }

    pub fn num_charts(&self) -> usize {
        match self {
            Manifold::Euclidean { .. } => 1,
            Manifold::Circle { .. } | Manifold::Sphere { .. } => 2,
            Manifold::Product { left, right } => left.num_charts() * right.num_charts(),
        }
    }

    /// Chart whose center is nearest the given on-manifold point.
    pub fn chart_at(&self, ambient: &[f64]) -> ChartId {
        match self {
            Manifold::Euclidean { .. } => 0,
            Manifold::Circle { .. } => {
                // chart 0 centered at angle 0, chart 1 at angle pi
                if ambient[0] >= 0.0 {
                    0
                } else {
                    1
                }
            }
            Manifold::Sphere { dim, .. } => {
                // chart 0 centered at the north pole, chart 1 at the south pole
                if ambient[*dim] >= 0.0 {
                    0
                } else {
                    1
                }
            }
            Manifold::Product { left, right } => {
                let (la, ra) = ambient.split_at(left.ambient_dim());
                left.chart_at(la) * right.num_charts() + right.chart_at(ra)
            }
        }
    }

    /// Chart coordinates of an on-manifold ambient point.
    pub fn to_chart(&self, chart: ChartId, ambient: &[f64]) -> Vec<f64> {
        match self {
            Manifold::Euclidean { .. } => ambient.to_vec(),
            Manifold::Circle { .. } => {
                let theta = ambient[1].atan2(ambient[0]);
                let center = if chart == 0 { 0.0 } else { PI };
                vec![wrap_angle(theta - center)]
            }
            Manifold::Sphere { dim, radius } => {
                let n = *dim;
                let denom = if chart == 0 {
                    radius + ambient[n]
                } else {
                    radius - ambient[n]
                };
                ambient[..n].iter().map(|&q| q / denom).collect()
            }
            Manifold::Product { left, right } => {
                let (la, ra) = ambient.split_at(left.ambient_dim());
                let (lc, rc) = (chart / right.num_charts(), chart % right.num_charts());
                let mut out = left.to_chart(lc, la);
                out.extend(right.to_chart(rc, ra));
                out
            }
        }
    }

    /// Ambient point of a chart point (the embedding map of this chart).
    pub fn embed(&self, chart: ChartId, x: &[f64]) -> Vec<f64> {
        match self {
            Manifold::Euclidean { .. } => x.to_vec(),
            Manifold::Circle { radius } => {
                let center = if chart == 0 { 0.0 } else { PI };
                let t = center + x[0];
                vec![radius * t.cos(), radius * t.sin()]
            }
            Manifold::Sphere { radius, .. } => {
                let s = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
                let mut q: Vec<f64> = x.iter().map(|&v| 2.0 * radius * v / s).collect();
                let last = radius * (2.0 / s - 1.0);
                q.push(if chart == 0 { last } else { -last });
                q
            }
            Manifold::Product { left, right } => {
                let (lx, rx) = x.split_at(left.dim());
                let (lc, rc) = (chart / right.num_charts(), chart % right.num_charts());
                let mut out = left.embed(lc, lx);
                out.extend(right.embed(rc, rx));
                out
            }
        }
    }

    /// First partials of the chart embedding; dims `[m, B]`,
    /// entry `(i, A) = d embed^A / d x^i`.
    pub fn embed_d1(&self, chart: ChartId, x: &[f64]) -> Tensor {
        let m = self.dim();
        let b = self.ambient_dim();
        match self {
            Manifold::Euclidean { .. } => Tensor::from_fn(&[m, b], |idx| {
                if idx[0] == idx[1] {
                    1.0
                } else {
                    0.0
                }
            }),
            Manifold::Circle { radius } => {
                let center = if chart == 0 { 0.0 } else { PI };
                let t = center + x[0];
                Tensor::from_data(&[1, 2], vec![-radius * t.sin(), radius * t.cos()])
            }
            Manifold::Sphere { dim, radius } => {
                let n = *dim;
                let s = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
                let sign = if chart == 0 { 1.0 } else { -1.0 };
                Tensor::from_fn(&[m, b], |idx| {
                    let (j, a) = (idx[0], idx[1]);
                    if a < n {
                        let delta = if a == j { 1.0 } else { 0.0 };
                        2.0 * radius * (delta / s - 2.0 * x[a] * x[j] / (s * s))
                    } else {
                        sign * (-4.0 * radius * x[j] / (s * s))
                    }
                })
            }
            Manifold::Product { left, right } => {
                let (lx, rx) = x.split_at(left.dim());
                let (lc, rc) = (chart / right.num_charts(), chart % right.num_charts());
                let lt = left.embed_d1(lc, lx);
                let rt = right.embed_d1(rc, rx);
                let (ml, bl) = (left.dim(), left.ambient_dim());
                Tensor::from_fn(&[m, b], |idx| {
                    let (i, a) = (idx[0], idx[1]);
                    match (i < ml, a < bl) {
                        (true, true) => lt.get(&[i, a]),
                        (false, false) => rt.get(&[i - ml, a - bl]),
                        _ => 0.0,
                    }
                })
            }
        }
    }

    /// Second partials of the chart embedding; dims `[m, m, B]`.
    pub fn embed_d2(&self, chart: ChartId, x: &[f64]) -> Tensor {
        let m = self.dim();
        let b = self.ambient_dim();
        match self {
            Manifold::Euclidean { .. } => Tensor::zeros(&[m, m, b]),
            Manifold::Circle { radius } => {
                let center = if chart == 0 { 0.0 } else { PI };
                let t = center + x[0];
                Tensor::from_data(&[1, 1, 2], vec![-radius * t.cos(), -radius * t.sin()])
            }
            Manifold::Sphere { dim, radius } => {
                let n = *dim;
                let s = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
                let sign = if chart == 0 { 1.0 } else { -1.0 };
                Tensor::from_fn(&[m, m, b], |idx| {
                    let (j, k, a) = (idx[0], idx[1], idx[2]);
                    if a < n {
                        let d_aj = if a == j { 1.0 } else { 0.0 };
                        let d_ak = if a == k { 1.0 } else { 0.0 };
                        let d_jk = if j == k { 1.0 } else { 0.0 };
                        2.0 * radius
                            * (-2.0 * (d_aj * x[k] + d_ak * x[j] + d_jk * x[a]) / (s * s)
                                + 8.0 * x[a] * x[j] * x[k] / (s * s * s))
                    } else {
                        let d_jk = if j == k { 1.0 } else { 0.0 };
                        sign * (-4.0 * radius) * (d_jk / (s * s) - 4.0 * x[j] * x[k] / (s * s * s))
                    }
                })
            }
            Manifold::Product { left, right } => {
                let (lx, rx) = x.split_at(left.dim());
                let (lc, rc) = (chart / right.num_charts(), chart % right.num_charts());
                let lt = left.embed_d2(lc, lx);
                let rt = right.embed_d2(rc, rx);
                let (ml, bl) = (left.dim(), left.ambient_dim());
                Tensor::from_fn(&[m, m, b], |idx| {
                    let (i, j, a) = (idx[0], idx[1], idx[2]);
                    match (i < ml, j < ml, a < bl) {
                        (true, true, true) => lt.get(&[i, j, a]),
                        (false, false, false) => rt.get(&[i - ml, j - ml, a - bl]),
                        _ => 0.0,
                    }
                })
            }
        }
    }

    /// First partials of the chart map extended to an ambient neighborhood;
    /// dims `[B, m]`, entry `(A, i) = d chart^i / d q^A`.
    pub fn chart_d1(&self, chart: ChartId, ambient: &[f64]) -> Tensor {
        let m = self.dim();
        let b = self.ambient_dim();
        match self {
            Manifold::Euclidean { .. } => Tensor::from_fn(&[b, m], |idx| {
                if idx[0] == idx[1] {
                    1.0
                } else {
                    0.0
                }
            }),
            Manifold::Circle { .. } => {
                let (qx, qy) = (ambient[0], ambient[1]);
                let rho2 = qx * qx + qy * qy;
                Tensor::from_data(&[2, 1], vec![-qy / rho2, qx / rho2])
            }
            Manifold::Sphere { dim, radius } => {
                let n = *dim;
                let sign = if chart == 0 { 1.0 } else { -1.0 };
                let denom = radius + sign * ambient[n];
                Tensor::from_fn(&[b, m], |idx| {
                    let (a, i) = (idx[0], idx[1]);
                    if a < n {
                        if a == i {
                            1.0 / denom
                        } else {
                            0.0
                        }
                    } else {
                        -sign * ambient[i] / (denom * denom)
                    }
                })
            }
            Manifold::Product { left, right } => {
                let (la, ra) = ambient.split_at(left.ambient_dim());
                let (lc, rc) = (chart / right.num_charts(), chart % right.num_charts());
                let lt = left.chart_d1(lc, la);
                let rt = right.chart_d1(rc, ra);
                let (ml, bl) = (left.dim(), left.ambient_dim());
                Tensor::from_fn(&[b, m], |idx| {
                    let (a, i) = (idx[0], idx[1]);
                    match (a < bl, i < ml) {
                        (true, true) => lt.get(&[a, i]),
                        (false, false) => rt.get(&[a - bl, i - ml]),
                        _ => 0.0,
                    }
                })
            }
        }
    }

    /// Second partials of the extended chart map; dims `[B, B, m]`.
    pub fn chart_d2(&self, chart: ChartId, ambient: &[f64]) -> Tensor {
        let m = self.dim();
        let b = self.ambient_dim();
        match self {
            Manifold::Euclidean { .. } => Tensor::zeros(&[b, b, m]),
            Manifold::Circle { .. } => {
                let (qx, qy) = (ambient[0], ambient[1]);
                let rho2 = qx * qx + qy * qy;
                let rho4 = rho2 * rho2;
                let mut t = Tensor::zeros(&[2, 2, 1]);
                // theta = atan2(qy, qx): d theta = (-qy, qx)/rho2
                t.set(&[0, 0, 0], 2.0 * qx * qy / rho4);
                t.set(&[0, 1, 0], (qy * qy - qx * qx) / rho4);
                t.set(&[1, 0, 0], (qy * qy - qx * qx) / rho4);
                t.set(&[1, 1, 0], -2.0 * qx * qy / rho4);
                t
            }
            Manifold::Sphere { dim, radius } => {
                let n = *dim;
                let sign = if chart == 0 { 1.0 } else { -1.0 };
                let denom = radius + sign * ambient[n];
                Tensor::from_fn(&[b, b, m], |idx| {
                    let (a1, a2, i) = (idx[0], idx[1], idx[2]);
                    match (a1 < n, a2 < n) {
                        (true, true) => 0.0,
                        (true, false) => {
                            if a1 == i {
                                -sign / (denom * denom)
                            } else {
                                0.0
                            }
                        }
                        (false, true) => {
                            if a2 == i {
                                -sign / (denom * denom)
                            } else {
                                0.0
                            }
                        }
                        (false, false) => 2.0 * ambient[i] / (denom * denom * denom),
                    }
                })
            }
            Manifold::Product { left, right } => {
                let (la, ra) = ambient.split_at(left.ambient_dim());
                let (lc, rc) = (chart / right.num_charts(), chart % right.num_charts());
                let lt = left.chart_d2(lc, la);
                let rt = right.chart_d2(rc, ra);
                let (ml, bl) = (left.dim(), left.ambient_dim());
                Tensor::from_fn(&[b, b, m], |idx| {
                    let (a1, a2, i) = (idx[0], idx[1], idx[2]);
                    match (a1 < bl, a2 < bl, i < ml) {
                        (true, true, true) => lt.get(&[a1, a2, i]),
                        (false, false, false) => rt.get(&[a1 - bl, a2 - bl, i - ml]),
                        _ => 0.0,
                    }
                })
            }
        }
    }

    /// Metric in chart coordinates (pullback of the ambient Euclidean metric).
    pub fn chart_metric(&self, chart: ChartId, x: &[f64]) -> MetricTensor {
        let m = self.dim();
        match self {
            Manifold::Euclidean { .. } => MetricTensor::identity(m),
            Manifold::Circle { radius } => {
                MetricTensor::new(DMatrix::from_element(1, 1, radius * radius))
            }
            Manifold::Sphere { radius, .. } => {
                let s = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
                let factor = 4.0 * radius * radius / (s * s);
                MetricTensor::new(DMatrix::identity(m, m) * factor)
            }
            Manifold::Product { left, right } => {
                let (lx, rx) = x.split_at(left.dim());
                let (lc, rc) = (chart / right.num_charts(), chart % right.num_charts());
                let lg = left.chart_metric(lc, lx);
                let rg = right.chart_metric(rc, rx);
                let ml = left.dim();
                MetricTensor::new(DMatrix::from_fn(m, m, |i, j| match (i < ml, j < ml) {
                    (true, true) => lg.matrix[(i, j)],
                    (false, false) => rg.matrix[(i - ml, j - ml)],
                    _ => 0.0,
                }))
            }
        }
    }

    /// Christoffel symbols of the Levi-Civita connection in chart coordinates.
    pub fn christoffel(&self, chart: ChartId, x: &[f64]) -> ChristoffelSymbols {
        let m = self.dim();
        match self {
            Manifold::Euclidean { .. } | Manifold::Circle { .. } => ChristoffelSymbols::zeros(m),
            Manifold::Sphere { .. } => {
                // conformal metric g = phi^2 delta with phi = 2R/(1+|x|^2):
                // Gamma^k_ij = -2 (d_ik x_j + d_jk x_i - d_ij x_k)/(1+|x|^2)
                let s = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
                let gamma = Tensor::from_fn(&[m, m, m], |idx| {
                    let (i, j, k) = (idx[0], idx[1], idx[2]);
                    let d_ik = if i == k { 1.0 } else { 0.0 };
                    let d_jk = if j == k { 1.0 } else { 0.0 };
                    let d_ij = if i == j { 1.0 } else { 0.0 };
                    -2.0 * (d_ik * x[j] + d_jk * x[i] - d_ij * x[k]) / s
                });
                ChristoffelSymbols { gamma }
            }
            Manifold::Product { left, right } => {
                let (lx, rx) = x.split_at(left.dim());
                let (lc, rc) = (chart / right.num_charts(), chart % right.num_charts());
                let lg = left.christoffel(lc, lx);
                let rg = right.christoffel(rc, rx);
                let ml = left.dim();
                let gamma = Tensor::from_fn(&[m, m, m], |idx| {
                    let (i, j, k) = (idx[0], idx[1], idx[2]);
                    match (i < ml, j < ml, k < ml) {
                        (true, true, true) => lg.get(i, j, k),
                        (false, false, false) => rg.get(i - ml, j - ml, k - ml),
                        _ => 0.0,
                    }
                });
                ChristoffelSymbols { gamma }
            }
        }
    }

    /// Partials of the chart metric, `(k, i, j) = d_k g_ij`, assembled exactly
    /// from the Christoffel symbols of the metric connection:
    /// `d_k g_ij = g_lj Gamma^l_ki + g_il Gamma^l_kj`.
    pub fn metric_partials(&self, chart: ChartId, x: &[f64]) -> Tensor {
        let m = self.dim();
        let g = self.chart_metric(chart, x).matrix;
        let gamma = self.christoffel(chart, x);
        Tensor::from_fn(&[m, m, m], |idx| {
            let (k, i, j) = (idx[0], idx[1], idx[2]);
            let mut acc = 0.0;
            for l in 0..m {
                acc += g[(l, j)] * gamma.get(k, i, l) + g[(i, l)] * gamma.get(k, j, l);
            }
            acc
        })
    }

    /// Orthogonal projector onto the tangent space at an on-manifold point,
    /// as a matrix acting on ambient vectors.
    pub fn tangent_projector(&self, ambient: &[f64]) -> DMatrix<f64> {
        let b = self.ambient_dim();
        match self {
            Manifold::Euclidean { .. } => DMatrix::identity(b, b),
            Manifold::Circle { .. } | Manifold::Sphere { .. } => {
                let norm = ambient.iter().map(|v| v * v).sum::<f64>().sqrt();
                DMatrix::from_fn(b, b, |i, j| {
                    let d = if i == j { 1.0 } else { 0.0 };
                    d - ambient[i] * ambient[j] / (norm * norm)
                })
            }
            Manifold::Product { left, right } => {
                let (la, ra) = ambient.split_at(left.ambient_dim());
                let lp = left.tangent_projector(la);
                let rp = right.tangent_projector(ra);
                let bl = left.ambient_dim();
                DMatrix::from_fn(b, b, |i, j| match (i < bl, j < bl) {
                    (true, true) => lp[(i, j)],
                    (false, false) => rp[(i - bl, j - bl)],
                    _ => 0.0,
                })
            }
        }
    }

    /// Distance of an ambient point from the manifold's defining constraint.
    pub fn constraint_residual(&self, ambient: &[f64]) -> f64 {
        match self {
            Manifold::Euclidean { .. } => 0.0,
            Manifold::Circle { radius } | Manifold::Sphere { radius, .. } => {
                let norm = ambient.iter().map(|v| v * v).sum::<f64>().sqrt();
                (norm - radius).abs()
            }
            Manifold::Product { left, right } => {
                let (la, ra) = ambient.split_at(left.ambient_dim());
                left.constraint_residual(la).hypot(right.constraint_residual(ra))
            }
        }
    }

    /// Nearest-point retraction onto the manifold.
    pub fn project(&self, ambient: &[f64]) -> Result<Vec<f64>> {
        match self {
            Manifold::Euclidean { .. } => Ok(ambient.to_vec()),
            Manifold::Circle { radius } | Manifold::Sphere { radius, .. } => {
                let norm = ambient.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm < 1e-8 * radius {
                    return Err(CoreError::Domain(
                        "point too close to the center: outside the retraction's injectivity neighborhood"
                            .into(),
                    ));
                }
                Ok(ambient.iter().map(|&q| q * radius / norm).collect())
            }
            Manifold::Product { left, right } => {
                let (la, ra) = ambient.split_at(left.ambient_dim());
                let mut out = left.project(la)?;
                out.extend(right.project(ra)?);
                Ok(out)
            }
        }
    }

    /// Geodesic distance between two on-manifold points.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        if self.constraint_residual(p) > 1e-8 || self.constraint_residual(q) > 1e-8 {
            return Err(CoreError::Domain(
                "distance arguments must lie on the manifold".into(),
            ));
        }
        Ok(self.distance_unchecked(p, q))
    }

    fn distance_unchecked(&self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Manifold::Euclidean { .. } => p
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Manifold::Circle { radius } => {
                let tp = p[1].atan2(p[0]);
                let tq = q[1].atan2(q[0]);
                radius * wrap_angle(tp - tq).abs()
            }
            Manifold::Sphere { radius, .. } => {
                // half-chord formulation: well-conditioned at both ends,
                // unlike acos of the inner product
                let dot = p.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
                let chord = |u: &[f64], v: &[f64], sign: f64| -> f64 {
                    u.iter()
                        .zip(v)
                        .map(|(a, b)| (a + sign * b) * (a + sign * b))
                        .sum::<f64>()
                        .sqrt()
                };
                if dot >= 0.0 {
                    let half = (chord(p, q, -1.0) / (2.0 * radius)).clamp(0.0, 1.0);
                    2.0 * radius * half.asin()
                } else {
                    let half = (chord(p, q, 1.0) / (2.0 * radius)).clamp(0.0, 1.0);
                    radius * (PI - 2.0 * half.asin())
                }
            }
            Manifold::Product { left, right } => {
                let (lp, rp) = p.split_at(left.ambient_dim());
                let (lq, rq) = q.split_at(left.ambient_dim());
                left.distance_unchecked(lp, lq)
                    .hypot(right.distance_unchecked(rp, rq))
            }
        }
    }

    /// Rough diameter bound used by oscillation checks.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            Manifold::Euclidean { .. } => None,
            Manifold::Circle { radius } => Some(PI * radius),
            Manifold::Sphere { radius, .. } => Some(PI * radius),
            Manifold::Product { left, right } => match (left.diameter(), right.diameter()) {
                (Some(a), Some(b)) => Some(a.hypot(b)),
                _ => None,
            },
        }
    }

    /// Random on-manifold point: uniform on circles/spheres, uniform in the
    /// unit ball for Euclidean factors.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Manifold::Euclidean { dim } => loop {
                let v: Vec<f64> = (0..*dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                    return v;
                }
            },
            Manifold::Circle { radius } => {
                let t = rng.random_range(-PI..PI);
                vec![radius * t.cos(), radius * t.sin()]
            }
            Manifold::Sphere { dim, radius } => loop {
                let v: Vec<f64> = (0..=*dim)
                    .map(|_| {
                        // Box-Muller pair, keep one
                        let u1: f64 = rng.random_range(1e-12..1.0);
                        let u2: f64 = rng.random_range(0.0..(2.0 * PI));
                        (-2.0 * u1.ln()).sqrt() * u2.cos()
                    })
                    .collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    return v.iter().map(|&x| x * radius / norm).collect();
                }
            },
            Manifold::Product { left, right } => {
                let mut out = left.random_point(rng);
                out.extend(right.random_point(rng));
                out
            }
        }
    }

    /// Checks that an ambient point lies on the manifold within tolerance.
    pub fn check_on_manifold(&self, ambient: &[f64]) -> Result<()> {
        let scale = match self {
            Manifold::Circle { radius } | Manifold::Sphere { radius, .. } => *radius,
            _ => 1.0,
        };
        if self.constraint_residual(ambient) > 1e-6 * scale.max(1.0) {
            return Err(CoreError::Domain(format!(
                "point off the manifold: residual {:e}",
                self.constraint_residual(ambient)
            )));
        }
        Ok(())
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(t: f64) -> f64 {
    let mut w = t % (2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    } else if w <= -PI {
        w += 2.0 * PI;
    }
    w
}
