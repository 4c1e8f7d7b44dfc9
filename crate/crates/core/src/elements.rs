//! Shape functions, Gauss quadrature and the per-element matrices of the
//! mixed couple-stress formulation.
//!
//! Displacements use biquadratic (Q2) Lagrange functions, rotations bilinear
//! (Q1) functions on the corners, and the multiplier is constant (Q0) per
//! element. Local displacement DOFs are interleaved: `(ux0, uy0, ux1, uy1, …)`.

use ccst_linalg::{DenseMatrix, Scalar};

use crate::mesh::LOCAL_NODE_OFFSETS;
use crate::{CoreError, Material, Result};

pub const Q2_NODES: usize = 9;
pub const Q1_NODES: usize = 4;
pub const U_DOFS: usize = 2 * Q2_NODES;

/// Default volume rule: 3×3 Gauss-Legendre.
pub const VOLUME_RULE: usize = 3;
/// Default edge rule: 3-point Gauss-Legendre.
pub const EDGE_RULE: usize = 3;

/// Gauss-Legendre points and weights on `[-1, 1]` for 1 to 5 points.
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let (p, w): (Vec<f64>, Vec<f64>) = match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = (1.0f64 / 3.0).sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt();
            let a = ((3.0 - 2.0 * s) / 7.0).sqrt();
            let b = ((3.0 + 2.0 * s) / 7.0).sqrt();
            let wa = (18.0 + 30.0f64.sqrt()) / 36.0;
            let wb = (18.0 - 30.0f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let r = 2.0 * (10.0f64 / 7.0).sqrt();
            let a = (5.0 - r).sqrt() / 3.0;
            let b = (5.0 + r).sqrt() / 3.0;
            let wa = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70.0f64.sqrt()) / 900.0;
            (
                vec![-b, -a, 0.0, a, b],
                vec![wb, wa, 128.0 / 225.0, wa, wb],
            )
        }
        _ => panic!("Gauss-Legendre rule with {n} points is not tabulated"),
    };
    (
        p.into_iter().map(T::lit).collect(),
        w.into_iter().map(T::lit).collect(),
    )
}

/// Tensor-product rule on the reference square: `(xi, eta, weight)`.
pub fn gauss_square<T: Scalar>(n: usize) -> Vec<(T, T, T)> {
    let (p, w) = gauss_legendre::<T>(n);
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            out.push((p[i], p[j], w[i] * w[j]));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeOrder {
    /// Biquadratic, 9 functions.
    Q2,
    /// Bilinear, 4 functions on the corners.
    Q1,
    /// Constant, 1 function.
    Q0,
}

impl ShapeOrder {
    pub fn len(self) -> usize {
        match self {
            ShapeOrder::Q2 => 9,
            ShapeOrder::Q1 => 4,
            ShapeOrder::Q0 => 1,
        }
    }
}

/// Shape function values and reference-coordinate gradients at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeEval<T> {
    pub order: ShapeOrder,
    pub values: Vec<T>,
    /// `[∂N/∂xi, ∂N/∂eta]` per function.
    pub grads: Vec<[T; 2]>,
}

/// 1D quadratic Lagrange basis on nodes -1, 0, 1 and its derivative.
fn lagrange2<T: Scalar>(t: T) -> ([T; 3], [T; 3]) {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let one = T::one();
    (
        [half * t * (t - one), one - t * t, half * t * (t + one)],
        [t - half, -two * t, t + half],
    )
}

fn lagrange1<T: Scalar>(t: T) -> ([T; 2], [T; 2]) {
    let half = T::lit(0.5);
    ([half * (T::one() - t), half * (T::one() + t)], [-half, half])
}

/// Evaluates the shape functions of `order` at `(xi, eta)` in the documented node order.
pub fn shape<T: Scalar>(order: ShapeOrder, xi: T, eta: T) -> Result<ShapeEval<T>> {
    let limit = T::one() + T::lit(8.0) * T::epsilon();
    if !(xi.abs() <= limit && eta.abs() <= limit) {
        return Err(CoreError::OutsideReferenceElement {
            xi: xi.to_f64_lossy(),
            eta: eta.to_f64_lossy(),
        });
    }
    Ok(match order {
        ShapeOrder::Q2 => {
            let (lx, dx) = lagrange2(xi);
            let (ly, dy) = lagrange2(eta);
            let mut values = Vec::with_capacity(9);
            let mut grads = Vec::with_capacity(9);
            for &(i, j) in &LOCAL_NODE_OFFSETS {
                values.push(lx[i] * ly[j]);
                grads.push([dx[i] * ly[j], lx[i] * dy[j]]);
            }
            ShapeEval {
                order,
                values,
                grads,
            }
        }
        ShapeOrder::Q1 => {
            let (lx, dx) = lagrange1(xi);
            let (ly, dy) = lagrange1(eta);
            let mut values = Vec::with_capacity(4);
            let mut grads = Vec::with_capacity(4);
            for &(i, j) in &LOCAL_NODE_OFFSETS[..4] {
                let (i, j) = (i / 2, j / 2);
                values.push(lx[i] * ly[j]);
                grads.push([dx[i] * ly[j], lx[i] * dy[j]]);
            }
            ShapeEval {
                order,
                values,
                grads,
            }
        }
        ShapeOrder::Q0 => ShapeEval {
            order,
            values: vec![T::one()],
            grads: vec![[T::zero(), T::zero()]],
        },
    })
}

/// Geometric map Jacobian `[[∂x/∂xi, ∂y/∂xi], [∂x/∂eta, ∂y/∂eta]]` with its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian<T> {
    pub matrix: [[T; 2]; 2],
    pub det: T,
    pub inverse: [[T; 2]; 2],
}

impl<T: Scalar> Jacobian<T> {
    /// Bilinear geometry from the four corner coordinates.
    pub fn from_corners(corners: &[[T; 2]], xi: T, eta: T) -> Self {
        let q1 = shape(ShapeOrder::Q1, xi, eta).expect("point already validated");
        let mut j = [[T::zero(); 2]; 2];
        for (g, c) in q1.grads.iter().zip(corners) {
            for a in 0..2 {
                for b in 0..2 {
                    j[a][b] += g[a] * c[b];
                }
            }
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inverse = [
            [j[1][1] / det, -j[0][1] / det],
            [-j[1][0] / det, j[0][0] / det],
        ];
        Self {
            matrix: j,
            det,
            inverse,
        }
    }

    /// Physical gradient `[∂/∂x, ∂/∂y]` from a reference gradient.
    pub fn physical(&self, g: [T; 2]) -> [T; 2] {
        [
            self.inverse[0][0] * g[0] + self.inverse[0][1] * g[1],
            self.inverse[1][0] * g[0] + self.inverse[1][1] * g[1],
        ]
    }
}

/// Physical-coordinate derivative operators at one quadrature point.
#[derive(Debug, Clone, PartialEq)]
pub struct BMatrices<T> {
    /// Strain `(e_xx, e_yy, γ_xy)` from the 18 displacement DOFs.
    pub strain: [[T; U_DOFS]; 3],
    /// Curl `∂u_y/∂x - ∂u_x/∂y` from the 18 displacement DOFs.
    pub curl: [T; U_DOFS],
    /// Curvature `(-∂θ/∂y, ∂θ/∂x)` from the 4 rotation DOFs.
    pub curvature: [[T; Q1_NODES]; 2],
}

pub fn b_matrices<T: Scalar>(
    q2: &ShapeEval<T>,
    q1: &ShapeEval<T>,
    jac: &Jacobian<T>,
) -> Result<BMatrices<T>> {
    if !(jac.det > T::zero()) {
        return Err(CoreError::DegenerateElement {
            element: usize::MAX,
            det: jac.det.to_f64_lossy(),
        });
    }
    let z = T::zero();
    let mut strain = [[z; U_DOFS]; 3];
    let mut curl = [z; U_DOFS];
    for (k, &g) in q2.grads.iter().enumerate() {
        let [nx, ny] = jac.physical(g);
        strain[0][2 * k] = nx;
        strain[1][2 * k + 1] = ny;
        strain[2][2 * k] = ny;
        strain[2][2 * k + 1] = nx;
        curl[2 * k] = -ny;
        curl[2 * k + 1] = nx;
    }
    let mut curvature = [[z; Q1_NODES]; 2];
    for (k, &g) in q1.grads.iter().enumerate() {
        let [nx, ny] = jac.physical(g);
        curvature[0][k] = -ny;
        curvature[1][k] = nx;
    }
    Ok(BMatrices {
        strain,
        curl,
        curvature,
    })
}

/// Local matrices of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices<T> {
    /// 18×18 force-stress stiffness.
    pub k_uu: DenseMatrix<T>,
    /// 18×18 consistent mass.
    pub m_uu: DenseMatrix<T>,
    /// Displacement–multiplier coupling `∫ curlᵀ · 1`, one column of 18.
    pub k_us: Vec<T>,
    /// 4×4 curvature stiffness.
    pub k_tt: DenseMatrix<T>,
    /// Rotation–multiplier coupling `∫ 2 N_θ`, one column of 4.
    pub k_ts: Vec<T>,
}

impl<T> ElementMatrices<T> {
    /// `(node, component)` of local displacement row `r`.
    pub fn u_row(r: usize) -> (usize, usize) {
        (r / 2, r % 2)
    }
}

fn corners<T: Copy>(coords: &[[T; 2]; 9]) -> [[T; 2]; 4] {
    [coords[0], coords[1], coords[2], coords[3]]
}

/// Evaluates everything needed at one volume quadrature point.
struct VolumePoint<T> {
    q2: ShapeEval<T>,
    q1: ShapeEval<T>,
    b: BMatrices<T>,
    /// `weight · det J`
    dv: T,
    x: [T; 2],
}

fn volume_points<T: Scalar>(coords: &[[T; 2]; 9], rule: usize) -> Result<Vec<VolumePoint<T>>> {
    let c = corners(coords);
    gauss_square::<T>(rule)
        .into_iter()
        .map(|(xi, eta, w)| {
            let q2 = shape(ShapeOrder::Q2, xi, eta)?;
            let q1 = shape(ShapeOrder::Q1, xi, eta)?;
            let jac = Jacobian::from_corners(&c, xi, eta);
            let b = b_matrices(&q2, &q1, &jac)?;
            let x = physical_point(coords, &q2);
            Ok(VolumePoint {
                dv: w * jac.det,
                q2,
                q1,
                b,
                x,
            })
        })
        .collect()
}

fn physical_point<T: Scalar>(coords: &[[T; 2]; 9], q2: &ShapeEval<T>) -> [T; 2] {
    let mut x = [T::zero(); 2];
    for (n, c) in q2.values.iter().zip(coords) {
        x[0] += *n * c[0];
        x[1] += *n * c[1];
    }
    x
}

/// Computes all local matrices by Gauss quadrature with `rule` points per direction.
pub fn local_matrices<T: Scalar>(
    coords: &[[T; 2]; 9],
    material: &Material<T>,
    rule: usize,
) -> Result<ElementMatrices<T>> {
    let voigt = material.voigt();
    let rho = material.density();
    let two = T::lit(2.0);
    let mut k_uu = DenseMatrix::zeros(U_DOFS, U_DOFS);
    let mut m_uu = DenseMatrix::zeros(U_DOFS, U_DOFS);
    let mut k_us = vec![T::zero(); U_DOFS];
    let mut k_tt = DenseMatrix::zeros(Q1_NODES, Q1_NODES);
    let mut k_ts = vec![T::zero(); Q1_NODES];
    for p in volume_points(coords, rule)? {
        let b = &p.b;
        // C · B_e, 3×18
        let mut cb = [[T::zero(); U_DOFS]; 3];
        for (a, cb_row) in cb.iter_mut().enumerate() {
            for (col, v) in cb_row.iter_mut().enumerate() {
                *v = (0..3).map(|k| voigt.c[a][k] * b.strain[k][col]).sum();
            }
        }
        for r in 0..U_DOFS {
            for c in 0..U_DOFS {
                let s: T = (0..3).map(|k| b.strain[k][r] * cb[k][c]).sum();
                k_uu[(r, c)] += s * p.dv;
            }
        }
        for a in 0..Q2_NODES {
            for bn in 0..Q2_NODES {
                let m = rho * p.q2.values[a] * p.q2.values[bn] * p.dv;
                m_uu[(2 * a, 2 * bn)] += m;
                m_uu[(2 * a + 1, 2 * bn + 1)] += m;
            }
        }
        for (r, v) in k_us.iter_mut().enumerate() {
            *v += b.curl[r] * p.dv;
        }
        for r in 0..Q1_NODES {
            for c in 0..Q1_NODES {
                let s: T = (0..2)
                    .map(|i| b.curvature[i][r] * voigt.d[i][i] * b.curvature[i][c])
                    .sum();
                k_tt[(r, c)] += s * p.dv;
            }
            k_ts[r] += two * p.q1.values[r] * p.dv;
        }
    }
    Ok(ElementMatrices {
        k_uu,
        m_uu,
        k_us,
        k_tt,
        k_ts,
    })
}

/// `∫ N_uᵀ f dV` for a body force `f(x, y)`, interleaved.
pub fn body_load<T: Scalar>(
    coords: &[[T; 2]; 9],
    rule: usize,
    force: &dyn Fn(T, T) -> [T; 2],
) -> Result<[T; U_DOFS]> {
    let mut out = [T::zero(); U_DOFS];
    for p in volume_points(coords, rule)? {
        let f = force(p.x[0], p.x[1]);
        for (a, &n) in p.q2.values.iter().enumerate() {
            out[2 * a] += n * f[0] * p.dv;
            out[2 * a + 1] += n * f[1] * p.dv;
        }
    }
    Ok(out)
}

/// Quadrature points along a boundary edge given by its three Q2 node coordinates:
/// `(1D weights·length factor, physical point, 1D quadratic values, 1D linear values)`.
pub(crate) fn edge_points<T: Scalar>(
    ends: [[T; 2]; 3],
    rule: usize,
) -> Vec<(T, [T; 2], [T; 3], [T; 2])> {
    let (pts, wts) = gauss_legendre::<T>(rule);
    let half = T::lit(0.5);
    let len = ((ends[2][0] - ends[0][0]).powi(2) + (ends[2][1] - ends[0][1]).powi(2)).sqrt();
    pts.into_iter()
        .zip(wts)
        .map(|(t, w)| {
            // start at t = -1, midside at 0, end at +1
            let (q, _) = lagrange2(t);
            let (l, _) = lagrange1(t);
            let x = [
                q[0] * ends[0][0] + q[1] * ends[1][0] + q[2] * ends[2][0],
                q[0] * ends[0][1] + q[1] * ends[1][1] + q[2] * ends[2][1],
            ];
            (w * half * len, x, q, l)
        })
        .collect()
}

/// Integrates a field `f` over an element against the Q2 interpolant of nodal
/// values: returns `∫ |u_h - f|² dV` with `u_h` from interleaved `nodal`.
pub fn l2_error_squared<T: Scalar>(
    coords: &[[T; 2]; 9],
    nodal: &[T; U_DOFS],
    rule: usize,
    exact: &dyn Fn(T, T) -> [T; 2],
) -> Result<(T, T)> {
    let mut err = T::zero();
    let mut norm = T::zero();
    for p in volume_points(coords, rule)? {
        let mut uh = [T::zero(); 2];
        for (a, &n) in p.q2.values.iter().enumerate() {
            uh[0] += n * nodal[2 * a];
            uh[1] += n * nodal[2 * a + 1];
        }
        let ue = exact(p.x[0], p.x[1]);
        err += ((uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2)) * p.dv;
        norm += (ue[0].powi(2) + ue[1].powi(2)) * p.dv;
    }
    Ok((err, norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rect(x0: f64, y0: f64, dx: f64, dy: f64) -> [[f64; 2]; 9] {
        std::array::from_fn(|k| {
            let (i, j) = LOCAL_NODE_OFFSETS[k];
            [x0 + dx * i as f64 / 2.0, y0 + dy * j as f64 / 2.0]
        })
    }

    fn interleave(coords: &[[f64; 2]; 9], f: impl Fn(f64, f64) -> [f64; 2]) -> [f64; 18] {
        let mut u = [0.0; 18];
        for (k, c) in coords.iter().enumerate() {
            let v = f(c[0], c[1]);
            u[2 * k] = v[0];
            u[2 * k + 1] = v[1];
        }
        u
    }

    #[test]
    fn q2_center_function_is_one_at_origin() {
        let s = shape(ShapeOrder::Q2, 0.0, 0.0).unwrap();
        for (k, &v) in s.values.iter().enumerate() {
            assert_eq!(v, if k == 8 { 1.0 } else { 0.0 });
        }
        let s = shape(ShapeOrder::Q1, 1.0, 1.0).unwrap();
        assert_eq!(s.values, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn kronecker_property_at_own_nodes() {
        for (j, &(a, b)) in LOCAL_NODE_OFFSETS.iter().enumerate() {
            let s = shape(ShapeOrder::Q2, a as f64 - 1.0, b as f64 - 1.0).unwrap();
            for (i, &v) in s.values.iter().enumerate() {
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn partition_of_unity_at_sample_point() {
        for order in [ShapeOrder::Q2, ShapeOrder::Q1] {
            let s = shape(order, 0.3, -0.7).unwrap();
            let sum: f64 = s.values.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-14);
            let gsum = s.grads.iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
            assert!(gsum[0].abs() < 1e-14 && gsum[1].abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_points_outside_reference_square() {
        assert!(matches!(
            shape(ShapeOrder::Q2, 1.5, 0.0),
            Err(CoreError::OutsideReferenceElement { .. })
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h: f64 = 1e-6;
        let (xi, eta) = (0.21, -0.43);
        let s = shape(ShapeOrder::Q2, xi, eta).unwrap();
        let sx = shape(ShapeOrder::Q2, xi + h, eta).unwrap();
        let sx2 = shape(ShapeOrder::Q2, xi - h, eta).unwrap();
        let sy = shape(ShapeOrder::Q2, xi, eta + h).unwrap();
        let sy2 = shape(ShapeOrder::Q2, xi, eta - h).unwrap();
        for k in 0..9 {
            assert!((s.grads[k][0] - (sx.values[k] - sx2.values[k]) / (2.0 * h)).abs() < 1e-9);
            assert!((s.grads[k][1] - (sy.values[k] - sy2.values[k]) / (2.0 * h)).abs() < 1e-9);
        }
    }

    fn b_at(coords: &[[f64; 2]; 9], xi: f64, eta: f64) -> BMatrices<f64> {
        let q2 = shape(ShapeOrder::Q2, xi, eta).unwrap();
        let q1 = shape(ShapeOrder::Q1, xi, eta).unwrap();
        let jac = Jacobian::from_corners(&corners(coords), xi, eta);
        b_matrices(&q2, &q1, &jac).unwrap()
    }

    fn apply(rows: &[f64; 18], u: &[f64; 18]) -> f64 {
        rows.iter().zip(u).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn rigid_translation_has_no_strain_or_curl() {
        let coords = rect(0.5, -1.0, 2.0, 0.5);
        let u = interleave(&coords, |_, _| [0.3, -1.2]);
        for (xi, eta, _) in gauss_square::<f64>(3) {
            let b = b_at(&coords, xi, eta);
            for row in &b.strain {
                assert!(apply(row, &u).abs() < 1e-13);
            }
            assert!(apply(&b.curl, &u).abs() < 1e-13);
        }
    }

    #[test]
    fn infinitesimal_rotation_has_curl_two() {
        let coords = rect(0.5, -1.0, 2.0, 0.5);
        let u = interleave(&coords, |x, y| [-y, x]);
        for (xi, eta, _) in gauss_square::<f64>(3) {
            let b = b_at(&coords, xi, eta);
            assert!((apply(&b.curl, &u) - 2.0).abs() < 1e-12);
            for row in &b.strain {
                assert!(apply(row, &u).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_extension_strain() {
        let coords = rect(0.0, 0.0, 1.0, 1.0);
        let u = interleave(&coords, |x, _| [x, 0.0]);
        let b = b_at(&coords, 0.1, 0.2);
        let e: Vec<f64> = b.strain.iter().map(|r| apply(r, &u)).collect();
        assert!((e[0] - 1.0).abs() < 1e-14 && e[1].abs() < 1e-14 && e[2].abs() < 1e-14);
        let u = interleave(&coords, |_, y| [0.0, y]);
        let e: Vec<f64> = b.strain.iter().map(|r| apply(r, &u)).collect();
        assert!(e[0].abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14 && e[2].abs() < 1e-14);
    }

    #[test]
    fn singular_jacobian_is_rejected() {
        let q2 = shape(ShapeOrder::Q2, 0.0, 0.0).unwrap();
        let q1 = shape(ShapeOrder::Q1, 0.0, 0.0).unwrap();
        let flat = [[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 0.0]];
        let jac = Jacobian::from_corners(&flat, 0.0, 0.0);
        assert!(matches!(
            b_matrices(&q2, &q1, &jac),
            Err(CoreError::DegenerateElement { .. })
        ));
    }

    #[test]
    fn unit_square_mass_sums_to_two() {
        let mat = Material::new(1.0, 0.29, 1.0, 0.1).unwrap();
        let em = local_matrices(&rect(0.0, 0.0, 1.0, 1.0), &mat, 3).unwrap();
        let total: f64 = em.m_uu.as_slice().iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn coupling_sums_to_twice_area() {
        let mat = Material::new(1.0, 0.29, 1.0, 0.1).unwrap();
        let coords = rect(1.0, 2.0, 0.7, 0.3);
        let em = local_matrices(&coords, &mat, 3).unwrap();
        let total: f64 = em.k_ts.iter().sum();
        assert_relative_eq!(total, 2.0 * 0.7 * 0.3, max_relative = 1e-14);
        // each corner carries a quarter of the area
        for &v in &em.k_ts {
            assert_relative_eq!(v, 0.5 * 0.21, max_relative = 1e-14);
        }
    }

    #[test]
    fn zero_eta_gives_zero_curvature_stiffness() {
        let mat = Material::new(1.0, 0.29, 1.0, 0.0).unwrap();
        let em = local_matrices(&rect(0.0, 0.0, 1.0, 2.0), &mat, 3).unwrap();
        assert_eq!(em.k_tt.max_abs(), 0.0);
    }

    #[test]
    fn symmetry_and_rigid_modes() {
        let mat = Material::new(1.0, 0.29, 1.0, 0.1).unwrap();
        let em = local_matrices(&rect(0.0, 0.0, 0.5, 0.25), &mat, 3).unwrap();
        let scale = em.k_uu.max_abs();
        assert!(em.k_uu.asymmetry() <= 1e-12 * scale);
        assert!(em.m_uu.asymmetry() <= 1e-12 * em.m_uu.max_abs());
        assert!(em.k_tt.asymmetry() <= 1e-12 * em.k_tt.max_abs());
        let eig = ccst_linalg::symmetric_eigen(&em.k_uu).unwrap();
        let near_zero = eig.values.iter().filter(|v| v.abs() < 1e-10 * scale).count();
        assert_eq!(near_zero, 3);
        // constant rotation has no curvature
        let kt = em.k_tt.mul_vec(&[1.0; 4]);
        assert!(kt.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn three_point_rule_is_exact_for_rectangles() {
        let mat = Material::new(1.0, 0.29, 1.3, 0.1).unwrap();
        let coords = rect(0.0, 0.0, 0.6, 0.2);
        let a = local_matrices(&coords, &mat, 3).unwrap();
        let b = local_matrices(&coords, &mat, 4).unwrap();
        for (x, y) in [(&a.k_uu, &b.k_uu), (&a.m_uu, &b.m_uu), (&a.k_tt, &b.k_tt)] {
            assert!(x.max_abs_diff(y) <= 1e-12 * y.max_abs());
        }
    }

    #[test]
    fn single_precision_kernels_agree() {
        let mat64 = Material::new(1.0, 0.29, 1.0, 0.1).unwrap();
        let mat32 = Material::<f32>::new(1.0, 0.29, 1.0, 0.1).unwrap();
        let c64 = rect(0.0, 0.0, 1.0, 1.0);
        let c32: [[f32; 2]; 9] = std::array::from_fn(|k| [c64[k][0] as f32, c64[k][1] as f32]);
        let a = local_matrices(&c64, &mat64, 3).unwrap();
        let b = local_matrices(&c32, &mat32, 3).unwrap();
        for r in 0..18 {
            for c in 0..18 {
                assert!((a.k_uu[(r, c)] - b.k_uu[(r, c)] as f64).abs() < 1e-5);
            }
        }
    }
}
