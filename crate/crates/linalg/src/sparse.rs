use crate::{DenseMatrix, Scalar};

/// Accumulates `(row, col, value)` entries; duplicates are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, capacity: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: T) {
        assert!(row < self.nrows && col < self.ncols, "entry out of bounds");
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix<T> {
        // stable sort keeps the summation order of duplicates deterministic
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, T::one());
        }
        b.build()
    }

    pub fn from_dense(a: &DenseMatrix<T>) -> Self {
        let mut b = TripletBuilder::new(a.nrows(), a.ncols());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != T::zero() {
                    b.push(i, j, a[(i, j)]);
                }
            }
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols
                .iter()
                .zip(vals)
                .fold(T::zero(), |acc, (&j, &v)| acc + v * x[j]);
        }
    }

    /// `y = Aᵀ x`
    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for (i, j, v) in self.triplets() {
            b.push(j, i, v);
        }
        b.build()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    /// Extracts `A[rows, cols]`; the output is indexed by position in the given lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut b = TripletBuilder::new(rows.len(), cols.len());
        for (ri, &r) in rows.iter().enumerate() {
            let (cs, vs) = self.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                let k = col_map[c];
                if k != usize::MAX {
                    b.push(ri, k, v);
                }
            }
        }
        b.build()
    }

    /// `alpha * self + beta * other` on the union pattern.
    pub fn linear_combination(&self, alpha: T, other: &Self, beta: T) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for (i, j, v) in self.triplets() {
            b.push(i, j, alpha * v);
        }
        for (i, j, v) in other.triplets() {
            b.push(i, j, beta * v);
        }
        b.build()
    }

    /// `self * dense`, sparse times dense.
    pub fn mul_dense(&self, d: &DenseMatrix<T>) -> DenseMatrix<T> {
        assert_eq!(self.ncols, d.nrows());
        let mut out = DenseMatrix::zeros(self.nrows, d.ncols());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let out_row = out.row_mut(i);
            for (&k, &v) in cols.iter().zip(vals) {
                crate::axpy(v, d.row(k), out_row);
            }
        }
        out
    }

    /// Largest `|a_ij - a_ji|` over stored entries of both triangles.
    pub fn asymmetry(&self) -> T {
        assert_eq!(self.nrows, self.ncols);
        self.triplets()
            .fold(T::zero(), |m, (i, j, v)| m.max((v - self.get(j, i)).abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let d = self.linear_combination(T::one(), other, -T::one());
        crate::norm_inf(d.values())
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[T]) -> T {
        crate::dot(x, &self.mul_vec(x))
    }

    /// Lower and upper bandwidth under the identity ordering.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut lo = 0;
        let mut up = 0;
        for (i, j, _) in self.triplets() {
            if i > j {
                lo = lo.max(i - j);
            } else {
                up = up.max(j - i);
            }
        }
        (lo, up)
    }

    /// Symmetric permutation `P A Pᵀ` where `new_of_old[i]` is the new index of row/col `i`.
    pub fn permute_symmetric(&self, new_of_old: &[usize]) -> Self {
        assert_eq!(self.nrows, self.ncols);
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            b.push(new_of_old[i], new_of_old[j], v);
        }
        b.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2, 3);
        b.push(1, 2, 1.0);
        b.push(0, 0, 2.0);
        b.push(1, 2, 0.5);
        let a = b.build();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(1, 2), 1.5);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn transpose_and_products_agree_with_dense() {
        let mut b = TripletBuilder::new(3, 4);
        for (i, j, v) in [(0, 1, 1.0), (1, 0, -2.0), (2, 3, 4.0), (2, 1, 0.5)] {
            b.push(i, j, v);
        }
        let a = b.build();
        let d = a.to_dense();
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(a.mul_vec(&x), d.mul_vec(&x));
        let y = [1.0, -1.0, 2.0];
        assert_eq!(a.tr_mul_vec(&y), d.tr_mul_vec(&y));
        assert_eq!(a.transpose().to_dense(), d.transpose());
    }

    #[test]
    fn submatrix_picks_rows_and_cols() {
        let a = CsrMatrix::from_dense(&DenseMatrix::from_fn(4, 4, |i, j| (10 * i + j) as f64));
        let s = a.submatrix(&[3, 1], &[0, 2]);
        assert_eq!(s.to_dense().as_slice(), &[30.0, 32.0, 10.0, 12.0]);
    }
}
