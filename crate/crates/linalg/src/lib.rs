//! Scalar-generic linear algebra used by the couple-stress solver.
//!
//! Everything here is written against [`Scalar`], which is implemented for
//! `f32` and `f64`. The pieces are deliberately small: a row-major dense
//! matrix with Cholesky, a CSR sparse matrix with a triplet builder, banded
//! LU/Cholesky factorizations behind a reverse Cuthill-McKee ordering,
//! preconditioned conjugate gradients and a shift-invert subspace iteration
//! for symmetric generalized eigenproblems.

pub mod banded;
pub mod dense;
pub mod eigen;
pub mod error;
pub mod iterative;
pub mod ordering;
pub mod scalar;
pub mod sparse;

pub use banded::{BandedCholesky, BandedLu};
pub use dense::{DenseCholesky, DenseMatrix};
pub use eigen::{
    generalized_symmetric_eigen, symmetric_eigen, subspace_iteration, EigenPairs, SubspaceOptions,
};
pub use error::LinalgError;
pub use iterative::{pcg, CgOutcome, LinearOperator};
pub use ordering::{reverse_cuthill_mckee, Permutation};
pub use scalar::Scalar;
pub use sparse::{CsrMatrix, TripletBuilder};

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Euclidean dot product.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// `y += alpha * x`
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
