//! Direct factorizations of sparse matrices in band storage.
//!
//! The matrix is first reordered with reverse Cuthill-McKee so that its
//! nonzeros sit in a narrow band, then factored densely inside that band.
//! For the structured meshes this solver targets, the band is a few element
//! layers wide and the cost is `O(n b²)`.

use crate::{reverse_cuthill_mckee, CsrMatrix, LinalgError, Permutation, Result, Scalar};

fn pivot_tolerance<T: Scalar>(a: &CsrMatrix<T>) -> T {
    let scale = crate::norm_inf(a.values());
    T::epsilon() * T::from_usize_lossy(a.nrows().max(1)) * scale
}

/// LU factorization with partial pivoting of a general (possibly indefinite) banded matrix.
///
/// Storage follows the LAPACK `gbtrf` layout: column-major with `2 kl + ku + 1`
/// rows so that row interchanges have room for fill.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    kv: usize,
    ldab: usize,
    ab: Vec<T>,
    ipiv: Vec<usize>,
    perm: Permutation,
}

impl<T: Scalar> BandedLu<T> {
    /// Factors `a` after a reverse Cuthill-McKee reordering.
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::with_permutation(a, perm)
    }

    pub fn with_permutation(a: &CsrMatrix<T>, perm: Permutation) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(LinalgError::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        let pa = a.permute_symmetric(&perm.new_of_old);
        let (kl, ku) = pa.bandwidths();
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![T::zero(); ldab * n];
        for (i, j, v) in pa.triplets() {
            ab[kv + i - j + j * ldab] = v;
        }
        let mut lu = Self {
            n,
            kl,
            kv,
            ldab,
            ab,
            ipiv: vec![0; n],
            perm,
        };
        lu.factor(pivot_tolerance(a))?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        self.kv + r - c + c * self.ldab
    }

    fn factor(&mut self, tol: T) -> Result<()> {
        let n = self.n;
        let mut ju = 0usize;
        let mut null_modes = 0;
        let mut first_pivot = usize::MAX;
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let base = self.idx(j, j);
            let mut jp = 0;
            let mut best = self.ab[base].abs();
            for i in 1..=km {
                let v = self.ab[base + i].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            self.ipiv[j] = j + jp;
            if best <= tol {
                null_modes += 1;
                first_pivot = first_pivot.min(self.perm.old_of_new[j]);
                continue;
            }
            ju = ju.max((j + self.kv - self.kl + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.idx(j, c);
                    let b = self.idx(j + jp, c);
                    self.ab.swap(a, b);
                }
            }
            let inv = T::one() / self.ab[base];
            for i in 1..=km {
                self.ab[base + i] *= inv;
            }
            for c in j + 1..=ju {
                let pivot_row = self.ab[self.idx(j, c)];
                if pivot_row == T::zero() {
                    continue;
                }
                let col_start = self.idx(j + 1, c);
                let (lower, upper) = self.ab.split_at_mut(col_start);
                let l = &lower[base + 1..base + 1 + km];
                for (dst, &li) in upper[..km].iter_mut().zip(l) {
                    *dst -= li * pivot_row;
                }
            }
        }
        if null_modes > 0 {
            return Err(LinalgError::Singular {
                null_modes,
                first_pivot,
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `(lower, upper)` bandwidth of the reordered matrix.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.kv - self.kl)
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let mut x = self.perm.apply(b);
        let n = self.n;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            let xj = x[j];
            if xj != T::zero() {
                let base = self.idx(j, j);
                for i in 1..=km {
                    x[j + i] -= self.ab[base + i] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let xj = x[j] / self.ab[self.idx(j, j)];
            x[j] = xj;
            if xj != T::zero() {
                let top = j.saturating_sub(self.kv);
                for r in top..j {
                    x[r] -= self.ab[self.idx(r, j)] * xj;
                }
            }
        }
        b.copy_from_slice(&self.perm.apply_inverse(&x));
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Cholesky factorization `A = L Lᵀ` of a symmetric positive definite banded matrix.
#[derive(Debug, Clone)]
pub struct BandedCholesky<T> {
    n: usize,
    k: usize,
    /// Row `i` holds `L[i, i-k..=i]` (entries left of column 0 stay zero).
    l: Vec<T>,
    perm: Permutation,
}

impl<T: Scalar> BandedCholesky<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::with_permutation(a, perm)
    }

    pub fn with_permutation(a: &CsrMatrix<T>, perm: Permutation) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(LinalgError::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        let pa = a.permute_symmetric(&perm.new_of_old);
        let k = pa.bandwidths().0;
        let w = k + 1;
        let mut l = vec![T::zero(); n * w];
        for (i, j, v) in pa.triplets() {
            if j <= i {
                l[i * w + (j + k - i)] = v;
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(k);
            for j in j0..=i {
                // L[i, p] for p in [max(i,j)-k .. j) lives in both rows
                let p0 = j0.max(j.saturating_sub(k));
                let mut s = l[i * w + (j + k - i)];
                let ri = i * w + (p0 + k - i);
                let rj = j * w + (p0 + k - j);
                let len = j - p0;
                s -= crate::dot(&l[ri..ri + len], &l[rj..rj + len]);
                if i == j {
                    if !(s > T::zero()) {
                        return Err(LinalgError::NotPositiveDefinite {
                            pivot: perm.old_of_new[i],
                            value: s.to_f64_lossy(),
                        });
                    }
                    l[i * w + k] = s.sqrt();
                } else {
                    l[i * w + (j + k - i)] = s / l[j * w + k];
                }
            }
        }
        Ok(Self { n, k, l, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.k
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let (n, k, w) = (self.n, self.k, self.k + 1);
        let mut x = self.perm.apply(b);
        for i in 0..n {
            let j0 = i.saturating_sub(k);
            let row = &self.l[i * w + (j0 + k - i)..i * w + k];
            let s = x[i] - crate::dot(row, &x[j0..i]);
            x[i] = s / self.l[i * w + k];
        }
        for i in (0..n).rev() {
            let xi = x[i] / self.l[i * w + k];
            x[i] = xi;
            let j0 = i.saturating_sub(k);
            let row = &self.l[i * w + (j0 + k - i)..i * w + k];
            crate::axpy(-xi, row, &mut x[j0..i]);
        }
        b.copy_from_slice(&self.perm.apply_inverse(&x));
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
