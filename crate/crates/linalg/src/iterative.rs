use crate::{
    BandedCholesky, BandedLu, CsrMatrix, DenseCholesky, DenseMatrix, LinalgError, Result, Scalar,
};

/// A square linear map applied to vectors.
pub trait LinearOperator<T: Scalar> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

impl<T: Scalar> LinearOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.mul_vec_into(x, y)
    }
}

impl<T: Scalar> LinearOperator<T> for DenseMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.mul_vec_into(x, y)
    }
}

// Factorizations act as their inverse, which is how they are used as preconditioners.
macro_rules! inverse_operator {
    ($ty:ident) => {
        impl<T: Scalar> LinearOperator<T> for $ty<T> {
            fn dim(&self) -> usize {
                $ty::dim(self)
            }
            fn apply(&self, x: &[T], y: &mut [T]) {
                y.copy_from_slice(x);
                self.solve_in_place(y);
            }
        }
    };
}

inverse_operator!(BandedLu);
inverse_operator!(BandedCholesky);
inverse_operator!(DenseCholesky);

#[derive(Debug, Clone)]
pub struct CgOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    /// Final `‖r‖ / ‖b‖`.
    pub relative_residual: T,
}

/// Preconditioned conjugate gradients for a symmetric positive definite `op`.
///
/// `precond` applies an approximation of `op⁻¹`. Iterates from `x0` until the
/// relative residual drops below `tol`.
pub fn pcg<T: Scalar>(
    op: &dyn LinearOperator<T>,
    precond: &dyn LinearOperator<T>,
    b: &[T],
    x0: Option<&[T]>,
    tol: T,
    max_iter: usize,
) -> Result<CgOutcome<T>> {
    let n = op.dim();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let mut x = x0.map_or_else(|| vec![T::zero(); n], <[T]>::to_vec);
    let b_norm = crate::norm2(b);
    if b_norm == T::zero() {
        return Ok(CgOutcome {
            x: vec![T::zero(); n],
            iterations: 0,
            relative_residual: T::zero(),
        });
    }
    let mut ax = vec![T::zero(); n];
    op.apply(&x, &mut ax);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &a)| bi - a).collect();
    let mut z = vec![T::zero(); n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = crate::dot(&r, &z);
    let mut q = vec![T::zero(); n];
    let mut rel = crate::norm2(&r) / b_norm;
    for it in 0..max_iter {
        if rel <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                relative_residual: rel,
            });
        }
        op.apply(&p, &mut q);
        let alpha = rz / crate::dot(&p, &q);
        crate::axpy(alpha, &p, &mut x);
        crate::axpy(-alpha, &q, &mut r);
        precond.apply(&r, &mut z);
        let rz_new = crate::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        rel = crate::norm2(&r) / b_norm;
    }
    if rel <= tol {
        return Ok(CgOutcome {
            x,
            iterations: max_iter,
            relative_residual: rel,
        });
    }
    Err(LinalgError::NoConvergence {
        method: "pcg",
        iterations: max_iter,
        residual: rel.to_f64_lossy(),
    })
}
