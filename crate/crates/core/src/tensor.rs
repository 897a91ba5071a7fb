//! Dense row-major multiway arrays for derivative data.
//!
//! Derivative arrays here are small (dimensions at most ~6, orders at most 4),
//! so a flat `Vec<f64>` with explicit strides beats pulling in a full tensor
//! library. Matrices that need factorizations go through `nalgebra`.

use nalgebra::DMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        Tensor {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_data(dims: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(
            dims.iter().product::<usize>(),
            data.len(),
            "tensor data length does not match dims"
        );
        Tensor {
            dims: dims.to_vec(),
            data,
        }
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Tensor::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for lin in 0..t.data.len() {
            t.unravel(lin, &mut idx);
            t.data[lin] = f(&idx);
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        for (i, &d) in idx.iter().zip(&self.dims) {
            debug_assert!(*i < d);
            off = off * d + i;
        }
        off
    }

    fn unravel(&self, mut lin: usize, idx: &mut [usize]) {
        for k in (0..self.dims.len()).rev() {
            idx[k] = lin % self.dims[k];
            lin /= self.dims[k];
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn add_assign(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] += v;
    }

    pub fn scale(&self, s: f64) -> Tensor {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.dims, other.dims);
        Tensor {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.dims, other.dims);
        Tensor {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Frobenius (Hilbert-Schmidt) norm of all entries.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Replaces axis `axis` (length d) by contraction with the columns of
    /// `basis` (d x d'): out[..., a, ...] = sum_i self[..., i, ...] * basis[i, a].
    pub fn contract_axis(&self, axis: usize, basis: &DMatrix<f64>) -> Tensor {
        let d = self.dims[axis];
        assert_eq!(basis.nrows(), d);
        let dp = basis.ncols();
        let mut new_dims = self.dims.clone();
        new_dims[axis] = dp;
        let mut out = Tensor::zeros(&new_dims);

        let inner: usize = self.dims[axis + 1..].iter().product();
        let outer: usize = self.dims[..axis].iter().product();
        for o in 0..outer {
            for a in 0..dp {
                for inn in 0..inner {
                    let mut acc = 0.0;
                    for i in 0..d {
                        acc += self.data[(o * d + i) * inner + inn] * basis[(i, a)];
                    }
                    out.data[(o * dp + a) * inner + inn] = acc;
                }
            }
        }
        out
    }

    /// Interprets the tensor as a matrix collapsing all axes before `split`
    /// into rows and the rest into columns.
    pub fn as_matrix(&self, split: usize) -> DMatrix<f64> {
        let rows: usize = self.dims[..split].iter().product();
        let cols: usize = self.dims[split..].iter().product();
        DMatrix::from_row_iterator(rows, cols, self.data.iter().cloned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn indexing_round_trip() {
        let t = Tensor::from_fn(&[2, 3, 4], |idx| (idx[0] * 100 + idx[1] * 10 + idx[2]) as f64);
        assert_eq!(t.get(&[1, 2, 3]), 123.0);
        assert_eq!(t.get(&[0, 0, 0]), 0.0);
        assert_eq!(t.get(&[1, 0, 2]), 102.0);
    }

    #[test]
    fn contract_axis_identity_is_noop() {
        let t = Tensor::from_fn(&[3, 2], |idx| (idx[0] + 2 * idx[1]) as f64);
        let id = DMatrix::identity(3, 3);
        let out = t.contract_axis(0, &id);
        assert_eq!(out, t);
    }

    #[test]
    fn contract_axis_matches_manual_sum() {
        let t = Tensor::from_fn(&[2, 2], |idx| (1 + idx[0] * 2 + idx[1]) as f64);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let out = t.contract_axis(1, &b);
        // out[i, a] = sum_j t[i, j] b[j, a]
        assert_relative_eq!(out.get(&[0, 0]), 1.0 * 1.0 + 2.0 * 3.0);
        assert_relative_eq!(out.get(&[1, 1]), 3.0 * 2.0 + 4.0 * 4.0);
    }
}
