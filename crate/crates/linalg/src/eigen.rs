use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{DenseCholesky, DenseMatrix, LinalgError, LinearOperator, Result, Scalar};

/// Eigenvalues in ascending order with matching eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenPairs<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

impl<T: Scalar> EigenPairs<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn sort_ascending(&mut self) {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].partial_cmp(&self.values[b]).unwrap());
        self.values = idx.iter().map(|&i| self.values[i]).collect();
        self.vectors = idx.iter().map(|&i| self.vectors[i].clone()).collect();
    }

    /// Flips each vector so its largest-magnitude entry is positive.
    fn fix_signs(&mut self) {
        for v in &mut self.vectors {
            let pivot = v
                .iter()
                .copied()
                .fold(T::zero(), |m, x| if x.abs() > m.abs() { x } else { m });
            if pivot < T::zero() {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
}

/// All eigenpairs of a dense symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigen<T: Scalar>(a: &DenseMatrix<T>) -> Result<EigenPairs<T>> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let mut m = a.clone();
    m.symmetrize();
    let mut v = DenseMatrix::<T>::identity(n);
    let scale = m.max_abs().max(T::min_positive_value());
    let tol = T::epsilon() * scale;
    let max_sweeps = 100;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * T::lit(1e-3) {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            method: "jacobi",
            iterations: max_sweeps,
            residual: f64::NAN,
        });
    }
    let mut pairs = EigenPairs {
        values: (0..n).map(|i| m[(i, i)]).collect(),
        vectors: (0..n).map(|j| v.column(j)).collect(),
    };
    pairs.sort_ascending();
    pairs.fix_signs();
    Ok(pairs)
}

/// All eigenpairs of the dense pencil `K φ = λ M φ` with `M` symmetric positive definite.
///
/// Vectors are `M`-orthonormal.
pub fn generalized_symmetric_eigen<T: Scalar>(
    k: &DenseMatrix<T>,
    m: &DenseMatrix<T>,
) -> Result<EigenPairs<T>> {
    let chol = DenseCholesky::new(m)?;
    let n = k.nrows();
    // C = L⁻¹ K L⁻ᵀ
    let w = chol.half_solve_matrix(k);
    let mut c = chol.half_solve_matrix(&w.transpose());
    c.symmetrize();
    let mut pairs = symmetric_eigen(&c)?;
    for v in &mut pairs.vectors {
        chol.solve_upper_in_place(v);
    }
    debug_assert_eq!(pairs.vectors.first().map_or(n, Vec::len), n);
    pairs.fix_signs();
    Ok(pairs)
}

#[derive(Debug, Clone, Copy)]
pub struct SubspaceOptions {
    /// Relative eigenvector residual `‖λ K⁻¹Mφ − φ‖ / ‖φ‖` to reach on every wanted pair.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SubspaceOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 1000,
            seed: 0x5eed,
        }
    }
}

/// Lowest `count` eigenpairs of `K φ = λ M φ` by shift-invert subspace iteration at shift zero.
///
/// `stiffness_inverse` applies `K⁻¹` (a factorization of `K`), `mass` applies `M`.
/// Returned vectors are `M`-orthonormal, eigenvalues ascending.
pub fn subspace_iteration<T: Scalar>(
    stiffness_inverse: &dyn LinearOperator<T>,
    mass: &dyn LinearOperator<T>,
    count: usize,
    opts: SubspaceOptions,
) -> Result<EigenPairs<T>> {
    let n = stiffness_inverse.dim();
    if mass.dim() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: mass.dim(),
        });
    }
    let count = count.min(n);
    let q = n.min((2 * count).max(count + 8));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<T>> = (0..q)
        .map(|j| {
            (0..n)
                .map(|_| {
                    if j == 0 {
                        T::one()
                    } else {
                        T::lit(rng.gen_range(-1.0..1.0))
                    }
                })
                .collect()
        })
        .collect();
    let tol = T::lit(opts.tolerance);
    let mut values = vec![T::zero(); q];
    let mut residual = T::infinity();
    let mut y = vec![vec![T::zero(); n]; q];
    let mut xbar = vec![vec![T::zero(); n]; q];
    let mut mxbar = vec![T::zero(); n];
    for it in 0..opts.max_iterations {
        for j in 0..q {
            mass.apply(&x[j], &mut y[j]);
            stiffness_inverse.apply(&y[j], &mut xbar[j]);
        }
        if it > 0 {
            residual = (0..count)
                .map(|j| {
                    let num = xbar[j]
                        .iter()
                        .zip(&x[j])
                        .fold(T::zero(), |acc, (&a, &b)| {
                            let d = values[j] * a - b;
                            acc + d * d
                        })
                        .sqrt();
                    num / crate::norm2(&x[j])
                })
                .fold(T::zero(), T::max);
            if residual <= tol {
                let mut pairs = EigenPairs {
                    values: values[..count].to_vec(),
                    vectors: x[..count].to_vec(),
                };
                pairs.fix_signs();
                return Ok(pairs);
            }
        }
        let mut kr = DenseMatrix::zeros(q, q);
        let mut mr = DenseMatrix::zeros(q, q);
        for a in 0..q {
            mass.apply(&xbar[a], &mut mxbar);
            for b in 0..q {
                kr[(a, b)] = crate::dot(&xbar[a], &y[b]);
                mr[(a, b)] = crate::dot(&xbar[b], &mxbar);
            }
        }
        kr.symmetrize();
        mr.symmetrize();
        let ritz = generalized_symmetric_eigen(&kr, &mr)?;
        for (j, coeffs) in ritz.vectors.iter().enumerate() {
            let xj = &mut x[j];
            xj.iter_mut().for_each(|v| *v = T::zero());
            for (a, &c) in coeffs.iter().enumerate() {
                crate::axpy(c, &xbar[a], xj);
            }
        }
        values.copy_from_slice(&ritz.values);
    }
    Err(LinalgError::NoConvergence {
        method: "subspace iteration",
        iterations: opts.max_iterations,
        residual: residual.to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{BandedCholesky, CsrMatrix, TripletBuilder};

    fn spring_chain(n: usize) -> (CsrMatrix<f64>, CsrMatrix<f64>) {
        let mut k = TripletBuilder::new(n, n);
        let mut m = TripletBuilder::new(n, n);
        for i in 0..n {
            k.push(i, i, 2.0);
            if i + 1 < n {
                k.push(i, i + 1, -1.0);
                k.push(i + 1, i, -1.0);
            }
            m.push(i, i, 1.0 + 0.1 * (i % 3) as f64);
        }
        (k.build(), m.build())
    }

    #[test]
    fn jacobi_matches_closed_form_chain() {
        // eigenvalues of tridiag(-1, 2, -1): 2 - 2cos(kπ/(n+1))
        let n = 9;
        let (k, _) = spring_chain(n);
        let pairs = symmetric_eigen(&k.to_dense()).unwrap();
        for (i, &lam) in pairs.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((i + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((lam - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn subspace_matches_dense_generalized() {
        let n = 60;
        let (k, m) = spring_chain(n);
        let dense = generalized_symmetric_eigen(&k.to_dense(), &m.to_dense()).unwrap();
        let kinv = BandedCholesky::new(&k).unwrap();
        let pairs = subspace_iteration(&kinv, &m, 6, SubspaceOptions::default()).unwrap();
        for i in 0..6 {
            assert!((pairs.values[i] - dense.values[i]).abs() < 1e-12 * dense.values[i].max(1.0));
            let mv = m.mul_vec(&pairs.vectors[i]);
            let norm = crate::dot(&pairs.vectors[i], &mv);
            assert!((norm - 1.0).abs() < 1e-10);
            let align = crate::dot(&dense.vectors[i], &mv).abs();
            assert!((align - 1.0).abs() < 1e-8);
        }
    }
}
