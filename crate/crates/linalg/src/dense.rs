use std::ops::{Index, IndexMut};

use crate::{LinalgError, Result, Scalar};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(LinalgError::DimensionMismatch {
                expected: nrows * ncols,
                found: data.len(),
            });
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[T]) {
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = crate::dot(self.row(i), x);
        }
    }

    /// `y = Aᵀ x`
    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            crate::axpy(xi, self.row(i), &mut y);
        }
        y
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.ncols, rhs.nrows);
        let mut out = Self::zeros(self.nrows, rhs.ncols);
        for i in 0..self.nrows {
            let out_row = &mut out.data[i * rhs.ncols..(i + 1) * rhs.ncols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != T::zero() {
                    crate::axpy(a, rhs.row(k), out_row);
                }
            }
        }
        out
    }

    /// `Aᵀ A`, symmetric by construction.
    pub fn gram(&self) -> Self {
        let n = self.ncols;
        let mut out = Self::zeros(n, n);
        for k in 0..self.nrows {
            let r = self.row(k);
            for i in 0..n {
                let a = r[i];
                if a == T::zero() {
                    continue;
                }
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for j in i..n {
                    out_row[j] += a * r[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out.data[i * n + j] = out.data[j * n + i];
            }
        }
        out
    }

    pub fn scale(&mut self, alpha: T) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: T, other: &Self) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        crate::axpy(alpha, &other.data, &mut self.data);
    }

    pub fn max_abs(&self) -> T {
        crate::norm_inf(&self.data)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        assert!(self.is_square());
        let mut m = T::zero();
        for i in 0..self.nrows {
            for j in 0..i {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    /// Replaces the matrix with `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        let half = T::lit(0.5);
        for i in 0..self.nrows {
            for j in 0..i {
                let v = half * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.ncols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.ncols + j]
    }
}

/// Dense Cholesky factor `A = L Lᵀ`, `L` stored row-major in the lower triangle.
#[derive(Debug, Clone)]
pub struct DenseCholesky<T> {
    l: DenseMatrix<T>,
}

impl<T: Scalar> DenseCholesky<T> {
    /// Factors a symmetric positive definite matrix. Only the lower triangle is read.
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        let mut l = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let (li, lj) = if i == j {
                    (l.row(i), l.row(i))
                } else {
                    (l.row(i), l.row(j))
                };
                let s = a[(i, j)] - crate::dot(&li[..j], &lj[..j]);
                if i == j {
                    if !(s > T::zero()) {
                        return Err(LinalgError::NotPositiveDefinite {
                            pivot: i,
                            value: s.to_f64_lossy(),
                        });
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor(&self) -> &DenseMatrix<T> {
        &self.l
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [T]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        for i in 0..n {
            let row = self.l.row(i);
            let s = b[i] - crate::dot(&row[..i], &b[..i]);
            b[i] = s / row[i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn solve_upper_in_place(&self, y: &mut [T]) {
        let n = self.dim();
        assert_eq!(y.len(), n);
        for i in (0..n).rev() {
            let row = self.l.row(i);
            let xi = y[i] / row[i];
            y[i] = xi;
            crate::axpy(-xi, &row[..i], &mut y[..i]);
        }
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        self.solve_lower_in_place(b);
        self.solve_upper_in_place(b);
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix<T>) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let x = self.solve(&b.column(j));
            out.set_column(j, &x);
        }
        out
    }

    /// `L⁻¹ B`, the half-solve used to form congruences `Bᵀ A⁻¹ B = (L⁻¹B)ᵀ(L⁻¹B)`.
    pub fn half_solve_matrix(&self, b: &DenseMatrix<T>) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let mut x = b.column(j);
            self.solve_lower_in_place(&mut x);
            out.set_column(j, &x);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd(n: usize) -> DenseMatrix<f64> {
        let b = DenseMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let mut a = b.gram();
        for i in 0..n {
            a[(i, i)] += 1.0;
        }
        a
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = spd(6);
        let x_true: Vec<f64> = (0..6).map(|i| i as f64 - 1.5).collect();
        let b = a.mul_vec(&x_true);
        let chol = DenseCholesky::new(&a).unwrap();
        let x = chol.solve(&b);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert_relative_eq!(xi, ti, epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = DenseMatrix::<f64>::identity(3);
        a[(1, 1)] = -1.0;
        assert!(matches!(
            DenseCholesky::new(&a),
            Err(LinalgError::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn gram_matches_transpose_product() {
        let b = DenseMatrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 0.5));
        let g = b.gram();
        let g2 = b.transpose().matmul(&b);
        assert!(g.max_abs_diff(&g2) < 1e-14);
        assert_eq!(g.asymmetry(), 0.0);
    }

    #[test]
    fn half_solve_congruence() {
        let a = spd(5);
        let b = DenseMatrix::from_fn(5, 2, |i, j| (i + 2 * j) as f64);
        let chol = DenseCholesky::new(&a).unwrap();
        let w = chol.half_solve_matrix(&b);
        let lhs = w.gram();
        let rhs = b.transpose().matmul(&chol.solve_matrix(&b));
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }
}
