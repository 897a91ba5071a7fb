//! Maps between manifolds with value and derivative oracles.
//!
//! A `SmoothMap` carries a value oracle in ambient coordinates and an optional
//! analytic jet oracle giving the partial derivatives of the chart-to-ambient
//! composite `x -> u(embed(x))`. Everything downstream asks for partials of
//! either the ambient-valued composite or the target-chart composite; analytic
//! data is used when available and central finite differences fill the gaps.
//! Finite-difference samples of the target value are retracted onto the target
//! manifold before differencing.

use crate::error::{CoreError, Result};
use crate::manifold::{ChartId, Manifold};
use crate::numdiff;
use crate::tensor::Tensor;
use std::sync::Arc;

type ValueFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Analytic partial derivatives of the composite `x -> u(embed(chart, x))`.
pub trait AmbientJet: Send + Sync {
    /// Partials of the given order with dims `[m; order] ++ [ambient_target]`,
    /// or `None` when this order is not available analytically.
    fn partials(&self, chart: ChartId, x: &[f64], order: usize) -> Option<Tensor>;
}

/// Jet oracle backed by a closure.
pub struct ClosureJet<F>(pub F);

impl<F> AmbientJet for ClosureJet<F>
where
    F: Fn(ChartId, &[f64], usize) -> Option<Tensor> + Send + Sync,
{
    fn partials(&self, chart: ChartId, x: &[f64], order: usize) -> Option<Tensor> {
        (self.0)(chart, x, order)
    }
}

#[derive(Clone)]
pub struct SmoothMap {
    pub domain: Arc<Manifold>,
    pub target: Arc<Manifold>,
    value: Arc<ValueFn>,
    jet: Option<Arc<dyn AmbientJet>>,
    fd_scale: f64,
    richardson: bool,
}

impl std::fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothMap")
            .field("domain_dim", &self.domain.dim())
            .field("target_dim", &self.target.dim())
            .field("analytic", &self.jet.is_some())
            .field("fd_scale", &self.fd_scale)
            .finish()
    }
}

impl SmoothMap {
    pub fn new(
        domain: Arc<Manifold>,
        target: Arc<Manifold>,
        value: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        SmoothMap {
            domain,
            target,
            value: Arc::new(value),
            jet: None,
            fd_scale: 1.0,
            richardson: false,
        }
    }

    pub fn with_jet(mut self, jet: Arc<dyn AmbientJet>) -> Self {
        self.jet = Some(jet);
        self
    }

    /// Chart-units length scale multiplying the default finite-difference steps.
    pub fn with_fd_scale(mut self, scale: f64) -> Self {
        self.fd_scale = scale;
        self
    }

    pub fn with_richardson(mut self, on: bool) -> Self {
        self.richardson = on;
        self
    }

    pub fn fd_scale(&self) -> f64 {
        self.fd_scale
    }

    pub fn has_analytic_jet(&self) -> bool {
        self.jet.is_some()
    }

    /// Value at an ambient domain point.
    pub fn eval(&self, x_ambient: &[f64]) -> Vec<f64> {
        (self.value)(x_ambient)
    }

    /// Value at a chart point, retracted onto the target manifold.
    pub fn eval_chart(&self, chart: ChartId, x: &[f64]) -> Vec<f64> {
        let raw = (self.value)(&self.domain.embed(chart, x));
        match self.target.project(&raw) {
            Ok(p) => p,
            Err(_) => vec![f64::NAN; self.target.ambient_dim()],
        }
    }

    fn analytic(&self, chart: ChartId, x: &[f64], order: usize) -> Option<Tensor> {
        self.jet.as_ref().and_then(|j| j.partials(chart, x, order))
    }

    /// Largest order served analytically at this point (0 when none).
    pub fn analytic_order(&self, chart: ChartId, x: &[f64]) -> usize {
        let mut k = 0;
        while k < 4 && self.analytic(chart, x, k + 1).is_some() {
            k += 1;
        }
        k
    }

    /// Partials of the ambient-valued composite `x -> u(embed(x))`;
    /// dims `[m; order] ++ [ambient_target]`.
    pub fn ambient_partials(&self, chart: ChartId, x: &[f64], order: usize) -> Result<Tensor> {
        if let Some(t) = self.analytic(chart, x, order) {
            return Ok(t);
        }
        let b = self.target.ambient_dim();
        let f = |y: &[f64]| self.eval_chart(chart, y);
        let h = numdiff::default_step(order, self.fd_scale);
        match (order, self.richardson) {
            (1, false) => numdiff::partials1(&f, x, b, h),
            (2, false) => numdiff::partials2(&f, x, b, h),
            (o @ (1 | 2), true) => numdiff::partials_richardson(&f, x, b, o, h * 16.0),
            (o, _) => Err(CoreError::UnsupportedOrder(o)),
        }
    }

    /// Partials of the target-chart composite `x -> chart_n(u(embed(x)))`;
    /// dims `[m; order] ++ [n]`.
    ///
    /// With analytic ambient jets the chart representation is obtained by the
    /// chain rule through the target chart map (orders 1 and 2); for flat
    /// targets the chart is the identity and any analytic order passes through.
    pub fn chart_partials(
        &self,
        chart_m: ChartId,
        chart_n: ChartId,
        x: &[f64],
        order: usize,
    ) -> Result<Tensor> {
        if self.target.chart_is_trivial() {
            return self.ambient_partials(chart_m, x, order);
        }
        if order <= 2 && self.analytic(chart_m, x, order).is_some() {
            let y = self.eval_chart(chart_m, x);
            let c1 = self.target.chart_d1(chart_n, &y);
            let w1 = self.ambient_partials(chart_m, x, 1)?;
            if order == 1 {
                return Ok(chain_first(&w1, &c1));
            }
            let c2 = self.target.chart_d2(chart_n, &y);
            let w2 = self.ambient_partials(chart_m, x, 2)?;
            return Ok(chain_second(&w1, &w2, &c1, &c2));
        }
        let n = self.target.dim();
        let f = |xx: &[f64]| {
            let y = self.eval_chart(chart_m, xx);
            self.target.to_chart(chart_n, &y)
        };
        let h = numdiff::default_step(order, self.fd_scale);
        match (order, self.richardson) {
            (1, false) => numdiff::partials1(&f, x, n, h),
            (2, false) => numdiff::partials2(&f, x, n, h),
            (o @ (1 | 2), true) => numdiff::partials_richardson(&f, x, n, o, h * 16.0),
            (o, _) => Err(CoreError::UnsupportedOrder(o)),
        }
    }

    /// Compares the analytic first-derivative oracle against central finite
    /// differences of the value oracle. Ties between the oracles go to the
    /// analytic one, but a mismatch beyond 100x the expected FD error is a
    /// diagnostics failure rather than something to proceed through silently.
    pub fn check_jet_consistency(&self, chart: ChartId, x: &[f64]) -> Result<()> {
        let Some(analytic) = self.analytic(chart, x, 1) else {
            return Ok(());
        };
        let b = self.target.ambient_dim();
        let f = |y: &[f64]| self.eval_chart(chart, y);
        let h = numdiff::default_step(1, self.fd_scale);
        let fd = numdiff::partials1(&f, x, b, h)?;
        let scale = 1.0 + analytic.max_abs();
        // central differences carry O(h^2) truncation plus eps/h rounding
        let expected = (h * h + f64::EPSILON / h) * scale;
        let diff = analytic.sub(&fd).max_abs();
        if diff > 100.0 * expected {
            return Err(CoreError::Numerical(format!(
                "analytic jet disagrees with finite differences: diff {diff:e}, expected O({expected:e})"
            )));
        }
        Ok(())
    }

    /// Constant map.
    pub fn constant(domain: Arc<Manifold>, target: Arc<Manifold>, value: Vec<f64>) -> Self {
        let b = target.ambient_dim();
        assert_eq!(value.len(), b);
        let dims_cache = domain.dim();
        let val = value.clone();
        SmoothMap::new(domain, target.clone(), move |_| val.clone()).with_jet(Arc::new(
            ClosureJet(move |_c: ChartId, x: &[f64], order: usize| {
                let m = x.len();
                debug_assert_eq!(m, dims_cache);
                let mut dims = vec![m; order];
                dims.push(b);
                Some(Tensor::zeros(&dims))
            }),
        ))
    }

    /// Identity map on a Euclidean space.
    pub fn identity(dim: usize) -> Result<Self> {
        let e = Arc::new(Manifold::euclidean(dim)?);
        Ok(
            SmoothMap::new(e.clone(), e, |x: &[f64]| x.to_vec()).with_jet(Arc::new(ClosureJet(
                move |_c: ChartId, x: &[f64], order: usize| {
                    let m = x.len();
                    let mut dims = vec![m; order];
                    dims.push(m);
                    let mut t = Tensor::zeros(&dims);
                    if order == 1 {
                        for i in 0..m {
                            t.set(&[i, i], 1.0);
                        }
                    }
                    Some(t)
                },
            ))),
        )
    }
}

/// First-order chain rule through an outer map: `out[i, a] = sum_A o1[A, a] w1[i, A]`.
pub fn chain_first(w1: &Tensor, o1: &Tensor) -> Tensor {
    let m = w1.dims()[0];
    let b = w1.dims()[1];
    let n = o1.dims()[1];
    Tensor::from_fn(&[m, n], |idx| {
        let (i, a) = (idx[0], idx[1]);
        let mut acc = 0.0;
        for big_a in 0..b {
            acc += o1.get(&[big_a, a]) * w1.get(&[i, big_a]);
        }
        acc
    })
}

/// Second-order chain rule through an outer map:
/// `out[i, j, a] = sum o2[A, B, a] w1[i, A] w1[j, B] + sum o1[A, a] w2[i, j, A]`.
pub fn chain_second(w1: &Tensor, w2: &Tensor, o1: &Tensor, o2: &Tensor) -> Tensor {
    let m = w1.dims()[0];
    let b = w1.dims()[1];
    let n = o1.dims()[1];
    Tensor::from_fn(&[m, m, n], |idx| {
        let (i, j, a) = (idx[0], idx[1], idx[2]);
        let mut acc = 0.0;
        for aa in 0..b {
            for bb in 0..b {
                acc += o2.get(&[aa, bb, a]) * w1.get(&[i, aa]) * w1.get(&[j, bb]);
            }
            acc += o1.get(&[aa, a]) * w2.get(&[i, j, aa]);
        }
        acc
    })
}
