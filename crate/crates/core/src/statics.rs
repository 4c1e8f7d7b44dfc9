//! Static saddle-point solves, the cantilever rigidity sweep and the
//! manufactured-solution convergence study.

use ccst_linalg::{pcg, BandedCholesky, BandedLu, CsrMatrix, LinearOperator, Scalar, TripletBuilder};
use rayon::prelude::*;

use crate::assembly::{assemble, assemble_with_body_force, BoundaryTag, GlobalSystem};
use crate::elements::{self, EDGE_RULE, VOLUME_RULE};
use crate::error::LinalgContext;
use crate::mesh::{Mesh, Side};
use crate::{CoreError, Material, Result};

/// Solution of the static block system.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticSolution<T> {
    /// Free displacement DOFs.
    pub u: Vec<T>,
    /// Free rotation DOFs.
    pub theta: Vec<T>,
    /// One multiplier per element.
    pub s: Vec<T>,
    /// Full interleaved displacement including prescribed values.
    pub u_full: Vec<T>,
    /// Full corner rotations including prescribed values.
    pub theta_full: Vec<T>,
    /// Reaction forces on constrained displacement DOFs.
    pub reactions: Vec<T>,
    /// `‖A x - b‖ / ‖b‖` of the fused system (0 when `b = 0`).
    pub relative_residual: T,
}

/// Fused saddle matrix on `[u; θ; s]` and its right-hand side.
pub fn fused_system<T: Scalar>(sys: &GlobalSystem<T>) -> (CsrMatrix<T>, Vec<T>) {
    let nu = sys.dofs().num_u_free();
    let nt = sys.dofs().num_theta_free();
    let ns = sys.dofs().num_s();
    let n = nu + nt + ns;
    let nnz = sys.k_uu().nnz() + sys.k_tt().nnz() + 2 * (sys.k_us().nnz() + sys.k_ts().nnz());
    let mut b = TripletBuilder::with_capacity(n, n, nnz);
    let mut put = |m: &CsrMatrix<T>, r0: usize, c0: usize, sign: T| {
        for (i, j, v) in m.triplets() {
            b.push(r0 + i, c0 + j, sign * v);
        }
    };
    let (one, neg) = (T::one(), -T::one());
    put(sys.k_uu(), 0, 0, one);
    put(sys.k_us(), 0, nu + nt, one);
    put(sys.k_tt(), nu, nu, one);
    put(sys.k_ts(), nu, nu + nt, neg);
    put(sys.k_su(), nu + nt, 0, one);
    put(sys.k_st(), nu + nt, nu, neg);
    let mut rhs = Vec::with_capacity(n);
    rhs.extend_from_slice(sys.f_u());
    rhs.extend_from_slice(sys.m_theta());
    rhs.extend_from_slice(sys.r_s());
    (b.build(), rhs)
}

/// Solves the static problem by one banded LU factorization of the fused matrix.
///
/// With `eta = 0` the rotation block vanishes and the fused matrix is
/// singular; the classical limit is solved instead: `s` from the rotation
/// rows in the least-squares sense, `u` from the displacement rows and the
/// minimum-norm `θ` matching the constraint rows.
pub fn solve_static<T: Scalar>(sys: &GlobalSystem<T>) -> Result<StaticSolution<T>> {
    if sys.material().eta() == T::zero() {
        return solve_classical_limit(sys);
    }
    let nu = sys.dofs().num_u_free();
    let nt = sys.dofs().num_theta_free();
    let (a, rhs) = fused_system(sys);
    let lu = BandedLu::new(&a).context("fused static factorization")?;
    let x = lu.solve(&rhs);
    let relative_residual = residual(&a, &x, &rhs);
    Ok(finish(sys, x[..nu].to_vec(), x[nu..nu + nt].to_vec(), x[nu + nt..].to_vec(), relative_residual))
}

fn residual<T: Scalar>(a: &CsrMatrix<T>, x: &[T], b: &[T]) -> T {
    let ax = a.mul_vec(x);
    let bn = ccst_linalg::norm2(b);
    let r: Vec<T> = ax.iter().zip(b).map(|(p, q)| *p - *q).collect();
    if bn == T::zero() {
        ccst_linalg::norm2(&r)
    } else {
        ccst_linalg::norm2(&r) / bn
    }
}

fn finish<T: Scalar>(
    sys: &GlobalSystem<T>,
    u: Vec<T>,
    theta: Vec<T>,
    s: Vec<T>,
    relative_residual: T,
) -> StaticSolution<T> {
    let u_full = sys.dofs().expand_u(&u);
    let theta_full = sys.dofs().expand_theta(&theta);
    let reactions = sys.u_reactions(&u_full, &s);
    StaticSolution {
        u,
        theta,
        s,
        u_full,
        theta_full,
        reactions,
        relative_residual,
    }
}

/// `Bᵀ B` applied without forming it.
struct NormalOperator<'a, T> {
    b: &'a CsrMatrix<T>,
}

impl<T: Scalar> LinearOperator<T> for NormalOperator<'_, T> {
    fn dim(&self) -> usize {
        self.b.ncols()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        let bx = self.b.mul_vec(x);
        y.copy_from_slice(&self.b.tr_mul_vec(&bx));
    }
}

struct Identity(usize);

impl<T: Scalar> LinearOperator<T> for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x);
    }
}

/// Minimum-norm least-squares solution of `B x = r` by CG on the normal equations.
fn min_norm_lsq<T: Scalar>(b: &CsrMatrix<T>, r: &[T]) -> Result<Vec<T>> {
    let n = b.ncols();
    if n == 0 {
        return Ok(Vec::new());
    }
    let rhs = b.tr_mul_vec(r);
    let tol = T::epsilon().sqrt() * T::lit(1e-4);
    let out = pcg(&NormalOperator { b }, &Identity(n), &rhs, None, tol, 20 * n + 100)
        .context("classical-limit least squares")?;
    Ok(out.x)
}

fn solve_classical_limit<T: Scalar>(sys: &GlobalSystem<T>) -> Result<StaticSolution<T>> {
    // rotation rows: -K_ts s = m
    let neg_m: Vec<T> = sys.m_theta().iter().map(|&m| -m).collect();
    let s = if neg_m.iter().all(|&v| v == T::zero()) {
        vec![T::zero(); sys.dofs().num_s()]
    } else {
        min_norm_lsq(sys.k_ts(), &neg_m)?
    };
    let mut rhs = sys.k_us().mul_vec(&s);
    rhs.iter_mut().zip(sys.f_u()).for_each(|(r, f)| *r = *f - *r);
    let chol = BandedCholesky::new(sys.k_uu()).context("classical stiffness factorization")?;
    let u = chol.solve(&rhs);
    // constraint rows: K_st θ = K_su u - r_s
    let mut target = sys.k_su().mul_vec(&u);
    target.iter_mut().zip(sys.r_s()).for_each(|(t, r)| *t -= *r);
    let theta = min_norm_lsq(sys.k_st(), &target)?;
    let (a, b) = fused_system(sys);
    let x: Vec<T> = u.iter().chain(&theta).chain(&s).copied().collect();
    let relative_residual = residual(&a, &x, &b);
    Ok(finish(sys, u, theta, s, relative_residual))
}

/// Solves `K_uu u = F_u` ignoring rotations and multipliers.
pub fn solve_classical<T: Scalar>(sys: &GlobalSystem<T>) -> Result<Vec<T>> {
    let chol = BandedCholesky::new(sys.k_uu()).context("classical stiffness factorization")?;
    Ok(chol.solve(sys.f_u()))
}

/// Cantilever clamped on the left (`ux = uy = θ = 0`) with a uniform
/// downward shear load on the right edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cantilever<T> {
    pub length: T,
    pub height: T,
    pub nx: usize,
    pub ny: usize,
    pub material: Material<T>,
    /// Total applied load on the right edge.
    pub load: T,
}

impl<T: Scalar> Cantilever<T> {
    pub fn mesh(&self) -> Result<Mesh<T>> {
        Mesh::rectangle(self.length, self.height, self.nx, self.ny)
    }

    pub fn tags(&self) -> Vec<BoundaryTag<T>> {
        vec![
            BoundaryTag::clamped(Side::Left),
            BoundaryTag::free(Side::Right).with_traction(T::zero(), -self.load / self.height),
        ]
    }

    pub fn assemble(&self) -> Result<(Mesh<T>, GlobalSystem<T>)> {
        let mesh = self.mesh()?;
        let sys = assemble(&mesh, &self.material, &self.tags())?;
        Ok((mesh, sys))
    }

    /// Euler-Bernoulli tip stiffness `3EI/L³` with `I = h³/12`.
    pub fn classical_stiffness(&self) -> T {
        let i = self.height.powi(3) / T::lit(12.0);
        T::lit(3.0) * self.material.youngs_modulus() * i / self.length.powi(3)
    }

    /// Load over the edge-averaged vertical deflection of the loaded edge.
    pub fn stiffness(&self) -> Result<T> {
        let (mesh, sys) = self.assemble()?;
        let sol = solve_static(&sys)?;
        Ok(self.load / mean_edge_deflection(&mesh, &sol.u_full, Side::Right).abs())
    }
}

/// `(1/|edge|) ∫ u_y ds` over one side, using the Q2 trace of `u_full`.
pub fn mean_edge_deflection<T: Scalar>(mesh: &Mesh<T>, u_full: &[T], side: Side) -> T {
    let mut integral = T::zero();
    let mut length = T::zero();
    for edge in mesh.boundary_edges(side) {
        let conn = &mesh.elements()[edge.element];
        let nodes = edge.local_nodes.map(|l| conn[l]);
        let coords = nodes.map(|n| mesh.nodes()[n]);
        for (w, _, q, _) in elements::edge_points(coords, EDGE_RULE) {
            let uy: T = (0..3).map(|a| q[a] * u_full[2 * nodes[a] + 1]).sum();
            integral += w * uy;
            length += w;
        }
    }
    integral / length
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidityRow<T> {
    pub h_over_l: T,
    pub eta: T,
    pub stiffness: T,
    /// Stiffness over `3EI/L³`.
    pub ratio: T,
}

/// Tip stiffness for each `h/l`, with `eta = mu (h / ratio)²`. Runs in parallel.
pub fn rigidity_sweep<T: Scalar>(base: &Cantilever<T>, h_over_l: &[T]) -> Result<Vec<RigidityRow<T>>> {
    let k_cl = base.classical_stiffness();
    h_over_l
        .par_iter()
        .map(|&ratio| {
            let l = base.height / ratio;
            let eta = base.material.eta_for_length_scale(l);
            let case = Cantilever {
                material: base.material.with_eta(eta)?,
                ..*base
            };
            let stiffness = case.stiffness()?;
            Ok(RigidityRow {
                h_over_l: ratio,
                eta,
                stiffness,
                ratio: stiffness / k_cl,
            })
        })
        .collect()
}

/// Manufactured displacement on the unit square,
/// `(x-x²)²(y-y²)² (sin 6πx cos 6πy, cos 6πx sin 6πy)`, and its body force.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ManufacturedSolution;

/// `k`-th derivative of `(t - t²)²`.
fn bump<T: Scalar>(t: T, k: usize) -> T {
    let l = T::lit;
    match k {
        0 => (t - t * t).powi(2),
        1 => l(2.0) * t - l(6.0) * t * t + l(4.0) * t.powi(3),
        2 => l(2.0) - l(12.0) * t + l(12.0) * t * t,
        3 => l(-12.0) + l(24.0) * t,
        4 => l(24.0),
        _ => T::zero(),
    }
}

/// `k`-th derivative of `sin(ωt)` (`phase = 0`) or `cos(ωt)` (`phase = 1`).
fn trig<T: Scalar>(t: T, k: usize, phase: usize) -> T {
    let w = T::lit(6.0) * T::PI();
    let arg = w * t + T::FRAC_PI_2() * T::from_usize_lossy(k + phase);
    w.powi(k as i32) * arg.sin()
}

const BINOMIAL: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

/// Derivatives 0..=4 of `bump(t) · trig(t)` by the Leibniz rule.
fn factor<T: Scalar>(t: T, phase: usize) -> [T; 5] {
    std::array::from_fn(|n| {
        (0..=n)
            .map(|k| T::lit(BINOMIAL[n][k]) * bump(t, k) * trig(t, n - k, phase))
            .sum()
    })
}

impl ManufacturedSolution {
    pub fn displacement<T: Scalar>(&self, x: T, y: T) -> [T; 2] {
        let p = (x - x * x).powi(2) * (y - y * y).powi(2);
        let w = T::lit(6.0) * T::PI();
        [
            p * (w * x).sin() * (w * y).cos(),
            p * (w * x).cos() * (w * y).sin(),
        ]
    }

    /// `f = -(λ+2μ) ∇(∇·u) + (μ - η∇²) ∇×∇×u`, so that the static
    /// couple-stress equations hold with `u` as solution.
    pub fn body_force<T: Scalar>(&self, material: &Material<T>, x: T, y: T) -> [T; 2] {
        // ux = a(x) b(y), uy = c(x) d(y)
        let a = factor(x, 0);
        let b = factor(y, 1);
        let c = factor(x, 1);
        let d = factor(y, 0);
        let lam2mu = material.lambda() + T::lit(2.0) * material.mu();
        let mu = material.mu();
        let eta = material.eta();
        let fx = -lam2mu * (a[2] * b[0] + c[1] * d[1]) + mu * (c[1] * d[1] - a[0] * b[2])
            - eta * (c[3] * d[1] + c[1] * d[3] - a[2] * b[2] - a[0] * b[4]);
        let fy = -lam2mu * (a[1] * b[1] + c[0] * d[2]) + mu * (a[1] * b[1] - c[2] * d[0])
            - eta * (a[3] * b[1] + a[1] * b[3] - c[2] * d[2] - c[4] * d[0]);
        [fx, fy]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsRow<T> {
    pub divisions: usize,
    pub n_elements: usize,
    pub mesh_size: T,
    /// Absolute `L2(V)` displacement error.
    pub l2_error: T,
    /// Error over the `L2(V)` norm of the exact field.
    pub relative_error: T,
}

/// Divisions per side closest to a target element size on the unit square.
pub fn divisions_for_size<T: Scalar>(h: T) -> usize {
    (T::one() / h).round().to_f64_lossy().max(1.0) as usize
}

/// One manufactured-solution solve on an `n × n` unit-square mesh with
/// `u = θ = 0` on every side.
pub fn mms_solve<T: Scalar>(material: &Material<T>, n: usize) -> Result<MmsRow<T>> {
    let mesh = Mesh::rectangle(T::one(), T::one(), n, n)?;
    let tags: Vec<_> = Side::ALL.iter().map(|&s| BoundaryTag::clamped(s)).collect();
    let exact = ManufacturedSolution;
    let force = |x: T, y: T| exact.body_force(material, x, y);
    let sys = assemble_with_body_force(&mesh, material, &tags, Some(&force))?;
    let sol = solve_static(&sys)?;
    let (err, norm) = l2_error(&mesh, &sol.u_full, &|x, y| exact.displacement(x, y))?;
    Ok(MmsRow {
        divisions: n,
        n_elements: mesh.num_elements(),
        mesh_size: mesh.element_size(),
        l2_error: err,
        relative_error: err / norm,
    })
}

/// `(‖u_h - u‖, ‖u‖)` in `L2(V)` using the volume quadrature rule.
pub fn l2_error<T: Scalar>(
    mesh: &Mesh<T>,
    u_full: &[T],
    exact: &dyn Fn(T, T) -> [T; 2],
) -> Result<(T, T)> {
    let mut err = T::zero();
    let mut norm = T::zero();
    for (e, conn) in mesh.elements().iter().enumerate() {
        let nodal: [T; 18] = std::array::from_fn(|r| u_full[2 * conn[r / 2] + r % 2]);
        let (de, dn) = elements::l2_error_squared(&mesh.element_coords(e), &nodal, VOLUME_RULE, exact)?;
        err += de;
        norm += dn;
    }
    Ok((err.sqrt(), norm.sqrt()))
}

/// Convergence table over a list of per-side divisions, solved in parallel.
pub fn mms_static<T: Scalar>(material: &Material<T>, divisions: &[usize]) -> Result<Vec<MmsRow<T>>> {
    if divisions.is_empty() {
        return Err(CoreError::InvalidParameter {
            field: "mesh_sizes",
            value: 0.0,
            reason: "at least one mesh size is required",
        });
    }
    divisions.par_iter().map(|&n| mms_solve(material, n)).collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope<T: Scalar>(x: &[T], y: &[T]) -> T {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "slope needs two points");
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    let n = T::from_usize_lossy(x.len());
    let mx = lx.iter().copied().sum::<T>() / n;
    let my = ly.iter().copied().sum::<T>() / n;
    let sxy: T = lx.iter().zip(&ly).map(|(a, b)| (*a - mx) * (*b - my)).sum();
    let sxx: T = lx.iter().map(|a| (*a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat() -> Material<f64> {
        Material::new(1.0, 0.29, 1.0, 0.1).unwrap()
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        let mesh = Mesh::rectangle(2.0, 1.0, 4, 2).unwrap();
        let sys = assemble(&mesh, &mat(), &[BoundaryTag::clamped(Side::Left)]).unwrap();
        let sol = solve_static(&sys).unwrap();
        assert!(sol.u.iter().chain(&sol.theta).chain(&sol.s).all(|&v| v == 0.0));
    }

    #[test]
    fn cantilever_equilibrium_and_residual() {
        let c = Cantilever {
            length: 4.0,
            height: 1.0,
            nx: 8,
            ny: 2,
            material: mat(),
            load: 1.0,
        };
        let (_, sys) = c.assemble().unwrap();
        let sol = solve_static(&sys).unwrap();
        assert!(sol.relative_residual < 1e-10);
        // vertical reactions balance the applied load
        let ry: f64 = sys
            .dofs()
            .u_fixed_dofs()
            .iter()
            .zip(&sol.reactions)
            .filter(|(d, _)| *d % 2 == 1)
            .map(|(_, r)| r)
            .sum();
        assert!((ry - c.load).abs() < 1e-8, "ry = {ry}");
        // constraint rows hold: K_su u - K_st θ = r_s
        let mut c_res = sys.k_su().mul_vec(&sol.u);
        let kt = sys.k_st().mul_vec(&sol.theta);
        c_res.iter_mut().zip(kt).zip(sys.r_s()).for_each(|((a, b), r)| *a -= b + r);
        assert!(c_res.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn uniform_translation_is_reproduced() {
        let mesh = Mesh::rectangle(1.0, 1.0, 3, 3).unwrap();
        let tags: Vec<_> = Side::ALL
            .iter()
            .map(|&s| BoundaryTag::free(s).with_u(0.25, -0.5).with_theta(0.0))
            .collect();
        let sys = assemble(&mesh, &mat(), &tags).unwrap();
        let sol = solve_static(&sys).unwrap();
        for (i, v) in sol.u_full.iter().enumerate() {
            let want = if i % 2 == 0 { 0.25 } else { -0.5 };
            assert!((v - want).abs() < 1e-12);
        }
        assert!(sol.theta.iter().chain(&sol.s).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn classical_limit_matches_plain_stiffness_solve() {
        let c = Cantilever {
            length: 2.0,
            height: 1.0,
            nx: 2,
            ny: 2,
            material: Material::new(1.0, 0.29, 1.0, 0.0).unwrap(),
            load: 1.0,
        };
        let (_, sys) = c.assemble().unwrap();
        let sol = solve_static(&sys).unwrap();
        let u = solve_classical(&sys).unwrap();
        let scale = u.iter().fold(0.0f64, |m, v: &f64| m.max(v.abs()));
        for (a, b) in sol.u.iter().zip(&u) {
            let (a, b): (f64, f64) = (*a, *b);
            assert!((a - b).abs() <= 1e-8 * scale);
        }
        assert!(sol.s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn couple_stiffening_raises_tip_stiffness() {
        let base = Cantilever {
            length: 10.0,
            height: 1.0,
            nx: 10,
            ny: 2,
            material: Material::new(2.0, 0.0, 1.0, 0.0).unwrap(),
            load: 1.0,
        };
        let rows = rigidity_sweep(&base, &[100.0, 1.0]).unwrap();
        assert!(rows[1].stiffness > rows[0].stiffness);
        assert!((rows[0].eta - 1e-4f64).abs() < 1e-18);
    }

    #[test]
    fn manufactured_field_vanishes_on_boundary_and_center() {
        let m = ManufacturedSolution;
        let c = m.displacement(0.5f64, 0.5);
        assert!(c[0].abs() < 1e-16 && c[1].abs() < 1e-16);
        for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
            for p in [[0.0, t], [1.0, t], [t, 0.0], [t, 1.0]] {
                let u = m.displacement(p[0], p[1]);
                assert_eq!(u, [0.0, 0.0]);
            }
        }
    }

    #[test]
    fn leibniz_factor_matches_direct_product() {
        let t = 0.37f64;
        let f = factor(t, 0);
        let direct = (t - t * t).powi(2) * (6.0 * std::f64::consts::PI * t).sin();
        assert!((f[0] - direct).abs() < 1e-15);
        let h = 1e-5;
        let fd = (factor(t + h, 0)[0] - factor(t - h, 0)[0]) / (2.0 * h);
        assert!((f[1] - fd).abs() < 1e-7);
    }

    #[test]
    fn body_force_is_affine_in_eta() {
        let m = ManufacturedSolution;
        let base = mat();
        let (x, y) = (0.31, 0.62);
        let f0 = m.body_force(&base.with_eta(0.0).unwrap(), x, y);
        let f1 = m.body_force(&base.with_eta(0.1).unwrap(), x, y);
        let f2 = m.body_force(&base.with_eta(0.2).unwrap(), x, y);
        for k in 0..2 {
            let lhs = f2[k] - f0[k];
            let rhs = 2.0 * (f1[k] - f0[k]);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 10.0, 100.0];
        let y = [1.0, 0.1f64.powf(1.5), 0.01f64.powf(1.5)];
        assert!((loglog_slope(&x, &y) + 1.5).abs() < 1e-12);
    }
}
