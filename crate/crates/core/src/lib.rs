//! Numerical calculus for maps between Riemannian manifolds.
//!
//! The crate computes tangent maps, second-tangent double morphisms, covariant
//! Hessians and higher covariant derivatives of maps `u: M -> N`, together with
//! the pointwise tensor norms, canonical double / k-tuple norms on iterated
//! tangent bundles, singularity-aware Sobolev energy quadrature and the
//! extrinsic/intrinsic split through isometric embeddings.
//!
//! Manifolds are described by an ambient isometric embedding plus chart data
//! (metric, Christoffel symbols, projections, geodesic distance). Maps carry a
//! value oracle in ambient coordinates and optional analytic derivative
//! oracles; a central finite-difference fallback covers everything else.

// index loops mirror the tensor formulas; iterator adaptors obscure them
#![allow(clippy::needless_range_loop)]

pub mod embedding;
pub mod energy;
pub mod error;
pub mod gallery;
pub mod jet;
pub mod manifold;
pub mod map;
pub mod multinorm;
pub mod numdiff;
pub mod samples;
pub mod tensor;

pub use embedding::IsometricEmbedding;
pub use energy::{Classification, EnergyReport, QuadratureSpec};
pub use error::CoreError;
pub use gallery::ExampleFamily;
pub use jet::CovariantTensor;
pub use manifold::{ChartId, Manifold};
pub use map::SmoothMap;
pub use multinorm::{DoubleMorphism, DoubleVector, KTupleMorphism, KTupleVector};
pub use tensor::Tensor;

/// Deterministic pairwise summation over a slice.
///
/// The reduction tree depends only on the slice length, so sums are
/// bit-reproducible no matter how the inputs were produced (including by a
/// parallel map that preserves index order).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::pairwise_sum;

    #[test]
    fn pairwise_sum_matches_naive_on_small_inputs() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(pairwise_sum(&xs), 15.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[7.5]), 7.5);
    }
}
