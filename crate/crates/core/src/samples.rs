//! Random map generators with exact derivative oracles, used by property
//! tests and the verification harness.

use crate::manifold::{ChartId, Manifold};
use crate::map::{chain_first, chain_second, ClosureJet, SmoothMap};
use crate::tensor::Tensor;
use rand::Rng;
use std::sync::Arc;

/// Polynomial map `R^m -> R^n` of degree <= 3 with symmetric coefficient
/// tensors; all derivative orders are exact.
#[derive(Clone, Debug)]
pub struct PolyMap {
    pub m: usize,
    pub n: usize,
    pub constant: Vec<f64>,
    pub linear: Tensor,    // [m, n]
    pub quadratic: Tensor, // [m, m, n], symmetric in the inputs
    pub cubic: Tensor,     // [m, m, m, n], symmetric in the inputs
}

impl PolyMap {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, degree: usize, scale: f64) -> Self {
        let mut p = PolyMap {
            m,
            n,
            constant: (0..n).map(|_| rng.random_range(-scale..scale)).collect(),
            linear: Tensor::zeros(&[m, n]),
            quadratic: Tensor::zeros(&[m, m, n]),
            cubic: Tensor::zeros(&[m, m, m, n]),
        };
        for i in 0..m {
            for a in 0..n {
                p.linear.set(&[i, a], rng.random_range(-scale..scale));
            }
        }
        if degree >= 2 {
            for i in 0..m {
                for j in i..m {
                    for a in 0..n {
                        let v = rng.random_range(-scale..scale);
                        p.quadratic.set(&[i, j, a], v);
                        p.quadratic.set(&[j, i, a], v);
                    }
                }
            }
        }
        if degree >= 3 {
            for i in 0..m {
                for j in i..m {
                    for k in j..m {
                        for a in 0..n {
                            let v = rng.random_range(-scale..scale);
                            for perm in [[i, j, k], [i, k, j], [j, i, k], [j, k, i], [k, i, j], [k, j, i]]
                            {
                                p.cubic.set(&[perm[0], perm[1], perm[2], a], v);
                            }
                        }
                    }
                }
            }
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut out = self.constant.clone();
        for a in 0..n {
            for i in 0..m {
                out[a] += self.linear.get(&[i, a]) * x[i];
                for j in 0..m {
                    out[a] += self.quadratic.get(&[i, j, a]) * x[i] * x[j];
                    for k in 0..m {
                        out[a] += self.cubic.get(&[i, j, k, a]) * x[i] * x[j] * x[k];
                    }
                }
            }
        }
        out
    }

    pub fn partials(&self, x: &[f64], order: usize) -> Option<Tensor> {
        let (m, n) = (self.m, self.n);
        match order {
            1 => Some(Tensor::from_fn(&[m, n], |idx| {
                let (i, a) = (idx[0], idx[1]);
                let mut acc = self.linear.get(&[i, a]);
                for j in 0..m {
                    acc += 2.0 * self.quadratic.get(&[i, j, a]) * x[j];
                    for k in 0..m {
                        acc += 3.0 * self.cubic.get(&[i, j, k, a]) * x[j] * x[k];
                    }
                }
                acc
            })),
            2 => Some(Tensor::from_fn(&[m, m, n], |idx| {
                let (i, j, a) = (idx[0], idx[1], idx[2]);
                let mut acc = 2.0 * self.quadratic.get(&[i, j, a]);
                for k in 0..m {
                    acc += 6.0 * self.cubic.get(&[i, j, k, a]) * x[k];
                }
                acc
            })),
            3 => Some(Tensor::from_fn(&[m, m, m, n], |idx| {
                6.0 * self.cubic.get(&[idx[0], idx[1], idx[2], idx[3]])
            })),
            o if o >= 4 => {
                let mut dims = vec![m; o];
                dims.push(n);
                Some(Tensor::zeros(&dims))
            }
            _ => None,
        }
    }

    pub fn into_map(self) -> SmoothMap {
        let domain = Arc::new(Manifold::euclidean(self.m).unwrap());
        let target = Arc::new(Manifold::euclidean(self.n).unwrap());
        let val = self.clone();
        let jet = self;
        SmoothMap::new(domain, target, move |x: &[f64]| val.eval(x)).with_jet(Arc::new(
            ClosureJet(move |_c: ChartId, x: &[f64], order: usize| jet.partials(x, order)),
        ))
    }
}

/// Random polynomial self-map of Euclidean space with exact jets.
pub fn random_flat_map<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> SmoothMap {
    PolyMap::random(rng, m, n, 3, 0.6).into_map()
}

/// Partials of the radial normalization `y -> R y / |y|` up to order 2.
fn normalize_partials(y: &[f64], radius: f64, order: usize) -> Tensor {
    let b = y.len();
    let rho = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    match order {
        1 => Tensor::from_fn(&[b, b], |idx| {
            let (i, a) = (idx[0], idx[1]);
            radius * (delta(a, i) / rho - y[a] * y[i] / (rho * rho * rho))
        }),
        2 => Tensor::from_fn(&[b, b, b], |idx| {
            let (i, j, a) = (idx[0], idx[1], idx[2]);
            let r3 = rho * rho * rho;
            let r5 = r3 * rho * rho;
            radius
                * (-(delta(a, i) * y[j] + delta(a, j) * y[i] + delta(i, j) * y[a]) / r3
                    + 3.0 * y[a] * y[i] * y[j] / r5)
        }),
        _ => panic!("normalize_partials supports orders 1 and 2"),
    }
}

/// Random smooth map between spheres: `q -> normalize(A q + eps Q[q, q] + b)`
/// with `A` near the identity, built with exact order-1/2 jets through the
/// chain rule (embedding jet, polynomial jet, normalization jet).
pub fn random_sphere_map<R: Rng + ?Sized>(
    rng: &mut R,
    source: Arc<Manifold>,
    target: Arc<Manifold>,
) -> SmoothMap {
    let bs = source.ambient_dim();
    let bt = target.ambient_dim();
    let radius = match target.as_ref() {
        Manifold::Sphere { radius, .. } | Manifold::Circle { radius } => *radius,
        _ => panic!("random_sphere_map needs a sphere or circle target"),
    };

    let mut poly = PolyMap::random(rng, bs, bt, 2, 0.25);
    // keep the polynomial away from the origin on the source sphere
    for a in 0..bt.min(bs) {
        let v = poly.linear.get(&[a, a]);
        poly.linear.set(&[a, a], v + 1.0);
    }
    poly.constant.iter_mut().for_each(|c| *c *= 0.2);

    let value_poly = poly.clone();
    let value = move |q: &[f64]| {
        let y = value_poly.eval(q);
        let rho = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter().map(|v| v * radius / rho).collect()
    };

    let jet_poly = poly;
    let jet_src = source.clone();
    let jet = ClosureJet(move |chart: ChartId, x: &[f64], order: usize| {
        if order > 2 {
            return None;
        }
        // chain: chart -> ambient source -> poly -> normalize
        let q = jet_src.embed(chart, x);
        let e1 = jet_src.embed_d1(chart, x);
        let y = jet_poly.eval(&q);
        let p1 = jet_poly.partials(&q, 1)?;
        let inner1 = chain_first(&e1, &p1); // [m, bt]
        let n1 = normalize_partials(&y, radius, 1);
        if order == 1 {
            return Some(chain_first(&inner1, &n1));
        }
        let e2 = jet_src.embed_d2(chart, x);
        let p2 = jet_poly.partials(&q, 2)?;
        let inner2 = chain_second(&e1, &e2, &p1, &p2);
        let n2 = normalize_partials(&y, radius, 2);
        Some(chain_second(&inner1, &inner2, &n1, &n2))
    });
    SmoothMap::new(source, target, value).with_jet(Arc::new(jet))
}

/// Strips a map's analytic jets so everything runs through finite differences.
pub fn without_jet(u: &SmoothMap) -> SmoothMap {
    let v = u.clone();
    SmoothMap::new(u.domain.clone(), u.target.clone(), move |x: &[f64]| v.eval(x))
        .with_fd_scale(u.fd_scale())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numdiff;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poly_jets_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = PolyMap::random(&mut rng, 3, 2, 3, 0.5);
        let x = [0.2, -0.3, 0.4];
        let f = |y: &[f64]| p.eval(y);
        let d1 = numdiff::partials1(&f, &x, 2, numdiff::default_step(1, 1.0)).unwrap();
        let a1 = p.partials(&x, 1).unwrap();
        assert!(a1.sub(&d1).max_abs() < 1e-8);
        let d2 = numdiff::partials2(&f, &x, 2, numdiff::default_step(2, 1.0)).unwrap();
        let a2 = p.partials(&x, 2).unwrap();
        assert!(a2.sub(&d2).max_abs() < 1e-5);
    }

    #[test]
    fn sphere_map_lands_on_sphere_and_jets_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s2: Arc<Manifold> = Arc::new(Manifold::sphere(2, 1.0).unwrap());
        let u = random_sphere_map(&mut rng, s2.clone(), s2.clone());
        for _ in 0..20 {
            let q = s2.random_point(&mut rng);
            let y = u.eval(&q);
            let rho: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((rho - 1.0).abs() < 1e-12);
        }
        let q = s2.random_point(&mut rng);
        let c = s2.chart_at(&q);
        let x = s2.to_chart(c, &q);
        let a1 = u.ambient_partials(c, &x, 1).unwrap();
        let nofd = without_jet(&u);
        let f1 = nofd.ambient_partials(c, &x, 1).unwrap();
        assert!(a1.sub(&f1).max_abs() < 1e-7, "d1 mismatch {}", a1.sub(&f1).max_abs());
        let a2 = u.ambient_partials(c, &x, 2).unwrap();
        let f2 = nofd.ambient_partials(c, &x, 2).unwrap();
        assert!(a2.sub(&f2).max_abs() < 1e-4, "d2 mismatch {}", a2.sub(&f2).max_abs());
    }
}
