//! Canonical double and k-tuple norms on iterated tangent bundles and their
//! morphism spaces.
//!
//! Component norms are Frobenius norms throughout, which makes the canonical
//! morphism norm submultiplicative with constant 1 under composition. The
//! k-tuple vector norm sums, over all set partitions of `{1..k}`, the product
//! of component norms over blocks; it is *not* definite (a nonzero vector with
//! zero singleton components evaluates to zero).

use crate::error::{CoreError, Result};
use crate::map::SmoothMap;
use crate::tensor::Tensor;
use nalgebra::DMatrix;

pub const MAX_TUPLE_ORDER: usize = 5;

/// A partition of a finite set of positive integers into disjoint nonempty
/// blocks; blocks are sorted by least element and elements within a block are
/// ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    fn canonicalize(mut blocks: Vec<Vec<usize>>) -> Partition {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        Partition { blocks }
    }
}

/// All partitions of the (sorted, distinct) elements, in canonical order:
/// the enumeration follows restricted growth strings in lexicographic order,
/// which lists blocks by least element deterministically.
pub fn partitions_of_set(elems: &[usize]) -> Vec<Partition> {
    let n = elems.len();
    if n == 0 {
        return vec![];
    }
    let mut out = Vec::new();
    // restricted growth strings: rgs[0] = 0, rgs[i] <= 1 + max(rgs[..i])
    let mut rgs = vec![0usize; n];
    loop {
        let nblocks = rgs.iter().copied().max().unwrap() + 1;
        let mut blocks = vec![Vec::new(); nblocks];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(elems[i]);
        }
        out.push(Partition { blocks });

        // next RGS in lexicographic order
        let mut i = n;
        loop {
            if i == 1 {
                return out;
            }
            i -= 1;
            let maxprev = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= maxprev {
                rgs[i] += 1;
                for v in rgs[i + 1..].iter_mut() {
                    *v = 0;
                }
                break;
            }
        }
    }
}

/// Partitions of `{1..k}` grouped by length; `k` must lie in `1..=5`.
pub fn enumerate_partitions(k: usize) -> Result<Vec<Vec<Partition>>> {
    if !(1..=MAX_TUPLE_ORDER).contains(&k) {
        return Err(CoreError::Config(format!(
            "partition order {k} outside supported range 1..=5"
        )));
    }
    let elems: Vec<usize> = (1..=k).collect();
    let mut by_len = vec![Vec::new(); k];
    for p in partitions_of_set(&elems) {
        by_len[p.len() - 1].push(p);
    }
    Ok(by_len)
}

/// A point of `T^2 M` in flat coordinates: `nu = (x, e1, e2, e12)`.
#[derive(Clone, Debug)]
pub struct DoubleVector {
    pub base: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub e12: Vec<f64>,
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Canonical double seminorm `|e1||e2| + |e12|`.
pub fn double_norm_vector(nu: &DoubleVector) -> f64 {
    euclid(&nu.e1) * euclid(&nu.e2) + euclid(&nu.e12)
}

/// A double-vector-bundle morphism in flat coordinates, acting as
/// `nu = (x, e1, e2, e12) -> (y, f1 e1, f2 e2, f12 e12 + f12hat[e1, e2])`.
#[derive(Clone, Debug)]
pub struct DoubleMorphism {
    pub base_in: Vec<f64>,
    pub base_out: Vec<f64>,
    pub f1: DMatrix<f64>,
    pub f2: DMatrix<f64>,
    pub f12: DMatrix<f64>,
    /// Bilinear part, dims `[m, m, n]`.
    pub f12hat: Tensor,
}

impl DoubleMorphism {
    pub fn identity(dim: usize) -> Self {
        DoubleMorphism {
            base_in: vec![0.0; dim],
            base_out: vec![0.0; dim],
            f1: DMatrix::identity(dim, dim),
            f2: DMatrix::identity(dim, dim),
            f12: DMatrix::identity(dim, dim),
            f12hat: Tensor::zeros(&[dim, dim, dim]),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.f1.ncols(), self.f1.nrows())
    }

    pub fn apply(&self, nu: &DoubleVector) -> DoubleVector {
        let (m, n) = self.dims();
        assert_eq!(nu.e1.len(), m);
        let mv = |mat: &DMatrix<f64>, v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|r| (0..m).map(|c| mat[(r, c)] * v[c]).sum())
                .collect()
        };
        let mut e12 = mv(&self.f12, &nu.e12);
        for (a, item) in e12.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    acc += self.f12hat.get(&[i, j, a]) * nu.e1[i] * nu.e2[j];
                }
            }
            *item += acc;
        }
        DoubleVector {
            base: self.base_out.clone(),
            e1: mv(&self.f1, &nu.e1),
            e2: mv(&self.f2, &nu.e2),
            e12,
        }
    }

    /// Flat JSON array of all components in canonical order
    /// `(f1, f2, f12, f12hat)`, row-major.
    pub fn to_flat_json(&self) -> serde_json::Value {
        let mut flat: Vec<f64> = Vec::new();
        for mat in [&self.f1, &self.f2, &self.f12] {
            for r in 0..mat.nrows() {
                for c in 0..mat.ncols() {
                    flat.push(mat[(r, c)]);
                }
            }
        }
        flat.extend_from_slice(self.f12hat.data());
        serde_json::json!(flat)
    }
}

fn frob(mat: &DMatrix<f64>) -> f64 {
    mat.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Canonical double norm `|f1||f2| + |f12| + |f12hat|` (Frobenius components).
pub fn double_norm_morphism(f: &DoubleMorphism) -> f64 {
    frob(&f.f1) * frob(&f.f2) + frob(&f.f12) + f.f12hat.frobenius()
}

/// Composition of double morphisms:
/// `(h1 f1, h2 f2, h12 f12, h12 . f12hat + h12hat . (f1 x f2))`.
pub fn compose_double(h: &DoubleMorphism, f: &DoubleMorphism) -> Result<DoubleMorphism> {
    let (fm, fn_) = f.dims();
    let (hm, hn) = h.dims();
    if fn_ != hm {
        return Err(CoreError::DimensionMismatch(format!(
            "inner morphism produces dim {fn_}, outer expects {hm}"
        )));
    }
    let g12hat = Tensor::from_fn(&[fm, fm, hn], |idx| {
        let (i, j, a) = (idx[0], idx[1], idx[2]);
        let mut acc = 0.0;
        // h12 applied to f12hat
        for c in 0..hm {
            acc += h.f12[(a, c)] * f.f12hat.get(&[i, j, c]);
        }
        // h12hat applied to (f1 e1, f2 e2)
        for p in 0..hm {
            for q in 0..hm {
                acc += h.f12hat.get(&[p, q, a]) * f.f1[(p, i)] * f.f2[(q, j)];
            }
        }
        acc
    });
    Ok(DoubleMorphism {
        base_in: f.base_in.clone(),
        base_out: h.base_out.clone(),
        f1: &h.f1 * &f.f1,
        f2: &h.f2 * &f.f2,
        f12: &h.f12 * &f.f12,
        f12hat: g12hat,
    })
}

/// A point of `T^k M` in flat coordinates: one vector `e_lambda` per nonempty
/// subset `lambda` of `{1..k}`, indexed by bitmask (bit `i` = element `i+1`).
#[derive(Clone, Debug)]
pub struct KTupleVector {
    pub k: usize,
    pub dim: usize,
    pub base: Vec<f64>,
    /// `components[mask - 1]` is `e_lambda` for subset bitmask `mask`.
    pub components: Vec<Vec<f64>>,
}

impl KTupleVector {
    pub fn zeros(k: usize, dim: usize) -> Result<Self> {
        if !(1..=MAX_TUPLE_ORDER).contains(&k) {
            return Err(CoreError::Config(format!(
                "tuple order {k} outside supported range 1..=5"
            )));
        }
        Ok(KTupleVector {
            k,
            dim,
            base: vec![0.0; dim],
            components: vec![vec![0.0; dim]; (1 << k) - 1],
        })
    }

    pub fn component(&self, subset: &[usize]) -> &[f64] {
        &self.components[subset_mask(subset) - 1]
    }

    pub fn set_component(&mut self, subset: &[usize], v: Vec<f64>) {
        assert_eq!(v.len(), self.dim);
        self.components[subset_mask(subset) - 1] = v;
    }
}

fn subset_mask(subset: &[usize]) -> usize {
    subset.iter().fold(0usize, |m, &e| m | (1 << (e - 1)))
}

/// Canonical k-tuple seminorm: sum over set partitions of `{1..k}` of the
/// product of `|e_block|` over blocks. Reduces to the double norm at `k = 2`;
/// vanishes on vectors whose singleton components are all zero.
pub fn ktuple_norm_vector(nu: &KTupleVector) -> Result<f64> {
    let parts = enumerate_partitions(nu.k)?;
    let mut total = 0.0;
    for group in &parts {
        for p in group {
            let mut prod = 1.0;
            for block in &p.blocks {
                prod *= euclid(nu.component(block));
            }
            total += prod;
        }
    }
    Ok(total)
}

/// A k-tuple morphism: for each nonempty subset `Lambda` of `{1..k}` and each
/// partition `lambda` of `Lambda` into `j` blocks, a `j`-linear component
/// `f_lambda` with dims `[m; j] ++ [n]` (input slot `i` consumes the block
/// with the `i`-th smallest leader).
#[derive(Clone, Debug)]
pub struct KTupleMorphism {
    pub k: usize,
    pub dim_in: usize,
    pub dim_out: usize,
    pub base_in: Vec<f64>,
    pub base_out: Vec<f64>,
    /// `components[mask - 1][p]` pairs the canonical `p`-th partition of the
    /// subset with bitmask `mask` with its multilinear component.
    pub components: Vec<Vec<(Partition, Tensor)>>,
}

impl KTupleMorphism {
    pub fn zeros(k: usize, dim_in: usize, dim_out: usize) -> Result<Self> {
        if !(1..=MAX_TUPLE_ORDER).contains(&k) {
            return Err(CoreError::Config(format!(
                "tuple order {k} outside supported range 1..=5"
            )));
        }
        let mut components = Vec::with_capacity((1 << k) - 1);
        for mask in 1..(1usize << k) {
            let elems: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
            let inner = partitions_of_set(&elems)
                .into_iter()
                .map(|p| {
                    let mut dims = vec![dim_in; p.len()];
                    dims.push(dim_out);
                    let t = Tensor::zeros(&dims);
                    (p, t)
                })
                .collect();
            components.push(inner);
        }
        Ok(KTupleMorphism {
            k,
            dim_in,
            dim_out,
            base_in: vec![0.0; dim_in],
            base_out: vec![0.0; dim_out],
            components,
        })
    }

    /// Component for a given partition of a subset (blocks in any order).
    pub fn component(&self, blocks: &[Vec<usize>]) -> Option<&Tensor> {
        let want = Partition::canonicalize(blocks.to_vec());
        let mask = subset_mask(&want.blocks.iter().flatten().copied().collect::<Vec<_>>());
        self.components[mask - 1]
            .iter()
            .find(|(p, _)| *p == want)
            .map(|(_, t)| t)
    }

    pub fn set_component(&mut self, blocks: &[Vec<usize>], t: Tensor) {
        let want = Partition::canonicalize(blocks.to_vec());
        let mask = subset_mask(&want.blocks.iter().flatten().copied().collect::<Vec<_>>());
        for (p, slot) in self.components[mask - 1].iter_mut() {
            if *p == want {
                assert_eq!(slot.dims(), t.dims(), "component dims mismatch");
                *slot = t;
                return;
            }
        }
        panic!("partition not found for subset");
    }

    /// Flat JSON array of all components: subsets by ascending bitmask,
    /// partitions in canonical order, tensor entries row-major.
    pub fn to_flat_json(&self) -> serde_json::Value {
        let mut flat: Vec<f64> = Vec::new();
        for inner in &self.components {
            for (_, t) in inner {
                flat.extend_from_slice(t.data());
            }
        }
        serde_json::json!(flat)
    }
}

/// Canonical k-tuple morphism norm: the double partition sum
/// `sum_{P} sum_{groupings G of P's blocks} prod_{g in G} |f_g|`,
/// where each group `g` of blocks is itself a partition of its union and
/// `f_g` is the corresponding component.
pub fn ktuple_norm_morphism(f: &KTupleMorphism) -> Result<f64> {
    let parts = enumerate_partitions(f.k)?;
    let mut total = 0.0;
    for group in &parts {
        for p in group {
            // group the blocks of p in every possible way
            let block_ids: Vec<usize> = (0..p.len()).collect();
            for grouping in partitions_of_set(&block_ids_shifted(&block_ids)) {
                let mut prod = 1.0;
                for g in &grouping.blocks {
                    let blocks: Vec<Vec<usize>> =
                        g.iter().map(|&bid| p.blocks[bid - 1].clone()).collect();
                    let t = f
                        .component(&blocks)
                        .ok_or_else(|| CoreError::Config("missing morphism component".into()))?;
                    prod *= t.frobenius();
                }
                total += prod;
            }
        }
    }
    Ok(total)
}

fn block_ids_shifted(ids: &[usize]) -> Vec<usize> {
    ids.iter().map(|&i| i + 1).collect()
}

/// The k-th tangent prolongation of a smooth map in chart coordinates: the
/// component for every partition of every subset into `j` blocks is the raw
/// order-`j` chart derivative (`k <= 3`).
pub fn tangent_prolongation(u: &SmoothMap, x_ambient: &[f64], k: usize) -> Result<KTupleMorphism> {
    if !(1..=3).contains(&k) {
        return Err(CoreError::UnsupportedOrder(k));
    }
    u.domain.check_on_manifold(x_ambient)?;
    let cm = u.domain.chart_at(x_ambient);
    let xc = u.domain.to_chart(cm, x_ambient);
    let y = u.eval_chart(cm, &xc);
    let cn = u.target.chart_at(&y);
    let m = u.domain.dim();
    let n = u.target.dim();

    let mut derivs: Vec<Tensor> = Vec::with_capacity(k);
    for order in 1..=k {
        derivs.push(u.chart_partials(cm, cn, &xc, order)?);
    }

    let mut out = KTupleMorphism::zeros(k, m, n)?;
    out.base_in = x_ambient.to_vec();
    out.base_out = y;
    for mask in 1..(1usize << k) {
        let elems: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
        for p in partitions_of_set(&elems) {
            let j = p.len();
            out.set_component(&p.blocks, derivs[j - 1].clone());
        }
    }
    Ok(out)
}
