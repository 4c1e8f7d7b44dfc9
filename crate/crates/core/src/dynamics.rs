//! Condensation of rotations and multipliers, implicit backward marching,
//! eigenstates and energy bookkeeping.
//!
//! Eliminating `θ` and `s` from the block system leaves
//! `M ü + C3 u = C4` with
//!
//! ```text
//! C1 = K_st K_tt⁻¹ m + r_s      C2 = K_st K_tt⁻¹ K_ts
//! C3 = K_uu + K_us C2⁻¹ K_su    C4 = F_u + K_us C2⁻¹ C1
//! ```
//!
//! which is marched with the second-order backward difference
//! `(M + Δt² C3) u⁺ = Δt² C4 + M (2u - u⁻)`.

use ccst_linalg::{
    pcg, subspace_iteration, BandedCholesky, CsrMatrix, DenseCholesky, DenseMatrix, LinearOperator,
    Scalar, SubspaceOptions,
};

use crate::assembly::GlobalSystem;
use crate::error::LinalgContext;
use crate::mesh::Mesh;
use crate::{CoreError, Material, Result};

/// Free displacement count above which `C3` is applied as an operator
/// instead of being formed.
pub const DENSE_C3_LIMIT: usize = 20_000;

/// How `u^{-1}` is built from `u⁰` and `v⁰`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartRule {
    /// `u⁰ - Δt v⁰ + Δt²/2 ü⁰`
    #[default]
    Taylor,
    /// `u⁰ - Δt v⁰`
    FirstOrder,
}

/// Two-level history of the marching scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMarchState<T> {
    pub u_prev: Vec<T>,
    pub u_curr: Vec<T>,
    pub step: usize,
    pub t: T,
}

impl<T: Scalar> TimeMarchState<T> {
    /// Backward-difference velocity `(u^n - u^{n-1}) / Δt`.
    pub fn velocity(&self, dt: T) -> Vec<T> {
        self.u_curr
            .iter()
            .zip(&self.u_prev)
            .map(|(a, b)| (*a - *b) / dt)
            .collect()
    }
}

/// Common surface of the condensed couple-stress model and its classical twin.
pub trait Marching<T: Scalar> {
    fn dt(&self) -> T;
    fn num_dofs(&self) -> usize;
    fn mass(&self) -> &CsrMatrix<T>;
    /// `y = C3 x` (or `K_uu x` for the classical twin).
    fn apply_stiffness(&self, x: &[T], y: &mut [T]);
    /// `C4` (or `F_u`).
    fn load(&self) -> &[T];
    /// `x = (M + Δt² C3)⁻¹ b`.
    fn solve_marching(&self, b: &[T]) -> Result<Vec<T>>;
    fn solve_mass(&self, b: &[T]) -> Vec<T>;
    /// Lowest `count` eigenpairs of `C3 φ = ω² M φ`.
    fn eigenmodes(&self, count: usize) -> Result<Modes<T>>;
    /// Force-stress strain energy `½ uᵀ K_uu u`.
    fn strain_energy(&self, u: &[T]) -> T;
    /// Curvature energy `½ θᵀ K_tt θ` with `θ` recovered from `u`.
    fn curvature_energy(&self, u: &[T]) -> T;
}

/// One implicit step.
pub fn step<T: Scalar, M: Marching<T> + ?Sized>(ops: &M, state: &TimeMarchState<T>) -> Result<TimeMarchState<T>> {
    let dt = ops.dt();
    let two = T::lit(2.0);
    let hist: Vec<T> = state
        .u_curr
        .iter()
        .zip(&state.u_prev)
        .map(|(a, b)| two * *a - *b)
        .collect();
    let mut rhs = ops.mass().mul_vec(&hist);
    let dt2 = dt * dt;
    rhs.iter_mut().zip(ops.load()).for_each(|(r, c)| *r += dt2 * *c);
    let next = ops.solve_marching(&rhs)?;
    Ok(TimeMarchState {
        u_prev: state.u_curr.clone(),
        u_curr: next,
        step: state.step + 1,
        t: T::from_usize_lossy(state.step + 1) * dt,
    })
}

/// Builds the step-0 state from initial displacement and velocity on free DOFs.
pub fn bootstrap<T: Scalar, M: Marching<T> + ?Sized>(
    ops: &M,
    u0: &[T],
    v0: &[T],
    rule: StartRule,
) -> Result<TimeMarchState<T>> {
    let n = ops.num_dofs();
    for (len, field) in [(u0.len(), "u0"), (v0.len(), "v0")] {
        if len != n {
            return Err(CoreError::InvalidParameter {
                field,
                value: len as f64,
                reason: "length differs from the free displacement count",
            });
        }
    }
    let dt = ops.dt();
    let mut u_prev: Vec<T> = u0.iter().zip(v0).map(|(u, v)| *u - dt * *v).collect();
    if rule == StartRule::Taylor {
        let mut c3u = vec![T::zero(); n];
        ops.apply_stiffness(u0, &mut c3u);
        let resid: Vec<T> = ops.load().iter().zip(&c3u).map(|(c, k)| *c - *k).collect();
        let acc = ops.solve_mass(&resid);
        let half = T::lit(0.5) * dt * dt;
        u_prev.iter_mut().zip(&acc).for_each(|(u, a)| *u += half * *a);
    }
    Ok(TimeMarchState {
        u_prev,
        u_curr: u0.to_vec(),
        step: 0,
        t: T::zero(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy<T> {
    pub kinetic: T,
    pub strain: T,
    pub curvature: T,
    pub total: T,
}

/// Kinetic energy from the backward-difference velocity plus the potential
/// energy of `u^n`.
pub fn energy<T: Scalar, M: Marching<T> + ?Sized>(ops: &M, state: &TimeMarchState<T>) -> Energy<T> {
    let v = state.velocity(ops.dt());
    let kinetic = T::lit(0.5) * ops.mass().quadratic_form(&v);
    let strain = ops.strain_energy(&state.u_curr);
    let curvature = ops.curvature_energy(&state.u_curr);
    Energy {
        kinetic,
        strain,
        curvature,
        total: kinetic + strain + curvature,
    }
}

/// Eigenpairs with `ω = sqrt(λ)`, ascending, mass-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Modes<T> {
    pub omega: Vec<T>,
    pub shapes: Vec<Vec<T>>,
}

impl<T: Scalar> Modes<T> {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

fn modes_from<T: Scalar>(values: Vec<T>, vectors: Vec<Vec<T>>) -> Modes<T> {
    Modes {
        omega: values.into_iter().map(|v| v.max(T::zero()).sqrt()).collect(),
        shapes: vectors,
    }
}

/// Default number of eigenpairs extracted.
pub const DEFAULT_MODE_COUNT: usize = 16;

/// `‖r‖/‖b‖` target for the iterative solves of the composed path.
const COMPOSED_TOLERANCE: f64 = 1e-12;

enum C3Form<T> {
    Dense {
        c3: DenseMatrix<T>,
        a: DenseCholesky<T>,
        /// Factor of `C3`, built on first eigen request.
        c3_chol: std::sync::OnceLock<std::result::Result<DenseCholesky<T>, CoreError>>,
    },
    Composed {
        /// `M + Δt² K_uu`, the classical twin's marching matrix.
        twin_a: BandedCholesky<T>,
        kuu: std::sync::OnceLock<std::result::Result<BandedCholesky<T>, CoreError>>,
    },
}

/// Condensed operators of the couple-stress model for one time step size.
pub struct CondensedOperators<T> {
    dt: T,
    kuu: CsrMatrix<T>,
    mass: CsrMatrix<T>,
    mass_chol: BandedCholesky<T>,
    k_us: CsrMatrix<T>,
    k_su: CsrMatrix<T>,
    k_ts: CsrMatrix<T>,
    m_theta: Vec<T>,
    k_tt: CsrMatrix<T>,
    k_tt_chol: BandedCholesky<T>,
    c1: Vec<T>,
    c2: DenseCholesky<T>,
    c4: Vec<T>,
    form: C3Form<T>,
}

impl<T: Scalar> std::fmt::Debug for CondensedOperators<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CondensedOperators")
            .field("dt", &self.dt)
            .field("n_u", &self.kuu.nrows())
            .field("n_s", &self.c1.len())
            .field("dense_c3", &matches!(self.form, C3Form::Dense { .. }))
            .finish()
    }
}

fn check_dt<T: Scalar>(dt: T) -> Result<()> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(CoreError::InvalidParameter {
            field: "dt",
            value: dt.to_f64_lossy(),
            reason: "time step must be positive and finite",
        });
    }
    Ok(())
}

impl<T: Scalar> CondensedOperators<T> {
    /// Condenses with the default dense/composed threshold.
    pub fn new(sys: &GlobalSystem<T>, dt: T) -> Result<Self> {
        Self::with_dense_limit(sys, dt, DENSE_C3_LIMIT)
    }

    pub fn with_dense_limit(sys: &GlobalSystem<T>, dt: T, dense_limit: usize) -> Result<Self> {
        check_dt(dt)?;
        if sys.material().eta() == T::zero() {
            return Err(CoreError::ZeroCoupleModulus);
        }
        let k_tt_chol = BandedCholesky::new(sys.k_tt()).map_err(|e| match e {
            ccst_linalg::LinalgError::NotPositiveDefinite { .. } => CoreError::MissingRotationConstraint,
            source => CoreError::Linalg {
                context: "rotation stiffness factorization",
                source,
            },
        })?;
        let n_s = sys.dofs().num_s();
        let n_t = sys.dofs().num_theta_free();
        // G = K_tt⁻¹ K_ts, one column per element
        let k_ts_dense = sys.k_ts().to_dense();
        let mut g = DenseMatrix::zeros(n_t, n_s);
        for j in 0..n_s {
            g.set_column(j, &k_tt_chol.solve(&k_ts_dense.column(j)));
        }
        let mut c2 = sys.k_st().mul_dense(&g);
        c2.symmetrize();
        let c2 = DenseCholesky::new(&c2).context("multiplier Schur complement C2")?;

        let mut c1 = sys.k_st().mul_vec(&k_tt_chol.solve(sys.m_theta()));
        c1.iter_mut().zip(sys.r_s()).for_each(|(c, r)| *c += *r);
        let mut c4 = sys.k_us().mul_vec(&c2.solve(&c1));
        c4.iter_mut().zip(sys.f_u()).for_each(|(c, f)| *c += *f);

        let mass_chol = BandedCholesky::new(sys.m_uu()).context("mass factorization")?;
        let dt2 = dt * dt;
        let n_u = sys.dofs().num_u_free();
        let form = if n_u <= dense_limit {
            // C3 = K_uu + Wᵀ W with W = L⁻¹ K_su, C2 = L Lᵀ
            let w = c2.half_solve_matrix(&sys.k_su().to_dense());
            let mut c3 = w.gram();
            c3.add_scaled(T::one(), &sys.k_uu().to_dense());
            let mut a = c3.clone();
            a.scale(dt2);
            a.add_scaled(T::one(), &sys.m_uu().to_dense());
            let a = DenseCholesky::new(&a).context("marching matrix M + dt² C3")?;
            C3Form::Dense {
                c3,
                a,
                c3_chol: std::sync::OnceLock::new(),
            }
        } else {
            let twin = sys.m_uu().linear_combination(T::one(), sys.k_uu(), dt2);
            C3Form::Composed {
                twin_a: BandedCholesky::new(&twin).context("classical marching preconditioner")?,
                kuu: std::sync::OnceLock::new(),
            }
        };
        Ok(Self {
            dt,
            kuu: sys.k_uu().clone(),
            mass: sys.m_uu().clone(),
            mass_chol,
            k_us: sys.k_us().clone(),
            k_su: sys.k_su().clone(),
            k_ts: sys.k_ts().clone(),
            m_theta: sys.m_theta().to_vec(),
            k_tt: sys.k_tt().clone(),
            k_tt_chol,
            c1,
            c2,
            c4,
            form,
        })
    }

    /// `C1 = K_st K_tt⁻¹ m + r_s`.
    pub fn c1(&self) -> &[T] {
        &self.c1
    }

    /// Dense `C2` rebuilt from its factor.
    pub fn c2(&self) -> DenseMatrix<T> {
        let l = self.c2.factor();
        let mut lt = l.transpose();
        // zero the strict upper part the factor may carry
        for i in 0..lt.nrows() {
            for j in 0..i {
                lt[(i, j)] = T::zero();
            }
        }
        lt.transpose().matmul(&lt)
    }

    pub fn c4(&self) -> &[T] {
        &self.c4
    }

    /// Formed `C3` when on the dense path.
    pub fn c3_dense(&self) -> Option<&DenseMatrix<T>> {
        match &self.form {
            C3Form::Dense { c3, .. } => Some(c3),
            C3Form::Composed { .. } => None,
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.form, C3Form::Dense { .. })
    }

    /// Recovers `(θ, s)` on free DOFs from free displacements.
    pub fn recover_fields(&self, u: &[T]) -> (Vec<T>, Vec<T>) {
        let mut r = self.k_su.mul_vec(u);
        r.iter_mut().zip(&self.c1).for_each(|(a, c)| *a -= *c);
        let s = self.c2.solve(&r);
        let mut rhs = self.k_ts.mul_vec(&s);
        rhs.iter_mut().zip(&self.m_theta).for_each(|(a, m)| *a += *m);
        let theta = self.k_tt_chol.solve(&rhs);
        (theta, s)
    }

    /// Static equilibrium `C3 u = C4`.
    pub fn solve_static(&self) -> Result<Vec<T>> {
        self.solve_stiffness(&self.c4)
    }

    fn solve_stiffness(&self, b: &[T]) -> Result<Vec<T>> {
        match &self.form {
            C3Form::Dense { c3, c3_chol, .. } => {
                let chol = c3_chol
                    .get_or_init(|| DenseCholesky::new(c3).context("condensed stiffness C3"))
                    .as_ref()
                    .map_err(Clone::clone)?;
                Ok(chol.solve(b))
            }
            C3Form::Composed { kuu, .. } => {
                let pre = kuu
                    .get_or_init(|| BandedCholesky::new(&self.kuu).context("stiffness preconditioner"))
                    .as_ref()
                    .map_err(Clone::clone)?;
                let op = C3Operator { ops: self };
                let out = pcg(&op, pre, b, None, T::lit(COMPOSED_TOLERANCE), 10 * b.len() + 100)
                    .context("iterative C3 solve")?;
                Ok(out.x)
            }
        }
    }

    /// Rotation stiffness on free rotation DOFs.
    pub fn k_tt(&self) -> &CsrMatrix<T> {
        &self.k_tt
    }
}

/// `C3` applied through its factors.
struct C3Operator<'a, T> {
    ops: &'a CondensedOperators<T>,
}

impl<T: Scalar> LinearOperator<T> for C3Operator<'_, T> {
    fn dim(&self) -> usize {
        self.ops.kuu.nrows()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.ops.kuu.mul_vec_into(x, y);
        let s = self.ops.c2.solve(&self.ops.k_su.mul_vec(x));
        let corr = self.ops.k_us.mul_vec(&s);
        y.iter_mut().zip(corr).for_each(|(a, c)| *a += c);
    }
}

/// `M + Δt² C3` applied through its factors.
struct MarchingOperator<'a, T> {
    ops: &'a CondensedOperators<T>,
}

impl<T: Scalar> LinearOperator<T> for MarchingOperator<'_, T> {
    fn dim(&self) -> usize {
        self.ops.kuu.nrows()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        C3Operator { ops: self.ops }.apply(x, y);
        let mx = self.ops.mass.mul_vec(x);
        let dt2 = self.ops.dt * self.ops.dt;
        y.iter_mut().zip(mx).for_each(|(a, m)| *a = dt2 * *a + m);
    }
}

/// Inverse of `C3` for the eigensolver.
struct C3Inverse<'a, T> {
    ops: &'a CondensedOperators<T>,
}

impl<T: Scalar> LinearOperator<T> for C3Inverse<'_, T> {
    fn dim(&self) -> usize {
        self.ops.kuu.nrows()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        // errors were surfaced when the factor was first built
        let v = self.ops.solve_stiffness(x).expect("C3 solve");
        y.copy_from_slice(&v);
    }
}

impl<T: Scalar> Marching<T> for CondensedOperators<T> {
    fn dt(&self) -> T {
        self.dt
    }
    fn num_dofs(&self) -> usize {
        self.kuu.nrows()
    }
    fn mass(&self) -> &CsrMatrix<T> {
        &self.mass
    }
    fn apply_stiffness(&self, x: &[T], y: &mut [T]) {
        match &self.form {
            C3Form::Dense { c3, .. } => c3.mul_vec_into(x, y),
            C3Form::Composed { .. } => C3Operator { ops: self }.apply(x, y),
        }
    }
    fn load(&self) -> &[T] {
        &self.c4
    }
    fn solve_marching(&self, b: &[T]) -> Result<Vec<T>> {
        match &self.form {
            C3Form::Dense { a, .. } => Ok(a.solve(b)),
            C3Form::Composed { twin_a, .. } => {
                let op = MarchingOperator { ops: self };
                let out = pcg(&op, twin_a, b, None, T::lit(COMPOSED_TOLERANCE), 10 * b.len() + 100)
                    .context("iterative marching solve")?;
                Ok(out.x)
            }
        }
    }
    fn solve_mass(&self, b: &[T]) -> Vec<T> {
        self.mass_chol.solve(b)
    }
    fn eigenmodes(&self, count: usize) -> Result<Modes<T>> {
        // build (and validate) the factor before handing out the operator
        self.solve_stiffness(&vec![T::zero(); self.num_dofs()])?;
        let pairs = subspace_iteration(&C3Inverse { ops: self }, &self.mass, count, SubspaceOptions::default())
            .context("condensed eigenproblem")?;
        Ok(modes_from(pairs.values, pairs.vectors))
    }
    fn strain_energy(&self, u: &[T]) -> T {
        T::lit(0.5) * self.kuu.quadratic_form(u)
    }
    fn curvature_energy(&self, u: &[T]) -> T {
        let (theta, _) = self.recover_fields(u);
        T::lit(0.5) * self.k_tt.quadratic_form(&theta)
    }
}

/// Classical elasticity on the same mesh: `M ü + K_uu u = F_u`.
pub struct ClassicalTwin<T> {
    dt: T,
    kuu: CsrMatrix<T>,
    kuu_chol: std::sync::OnceLock<std::result::Result<BandedCholesky<T>, CoreError>>,
    mass: CsrMatrix<T>,
    mass_chol: BandedCholesky<T>,
    a: BandedCholesky<T>,
    f: Vec<T>,
}

impl<T: Scalar> std::fmt::Debug for ClassicalTwin<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassicalTwin")
            .field("dt", &self.dt)
            .field("n_u", &self.kuu.nrows())
            .finish()
    }
}

impl<T: Scalar> ClassicalTwin<T> {
    /// Uses only the displacement blocks of `sys`; `eta` plays no role.
    pub fn new(sys: &GlobalSystem<T>, dt: T) -> Result<Self> {
        check_dt(dt)?;
        let a = sys.m_uu().linear_combination(T::one(), sys.k_uu(), dt * dt);
        Ok(Self {
            dt,
            kuu: sys.k_uu().clone(),
            kuu_chol: std::sync::OnceLock::new(),
            mass: sys.m_uu().clone(),
            mass_chol: BandedCholesky::new(sys.m_uu()).context("mass factorization")?,
            a: BandedCholesky::new(&a).context("classical marching matrix")?,
            f: sys.f_u().to_vec(),
        })
    }

    fn kuu_factor(&self) -> Result<&BandedCholesky<T>> {
        self.kuu_chol
            .get_or_init(|| BandedCholesky::new(&self.kuu).context("classical stiffness"))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn solve_static(&self) -> Result<Vec<T>> {
        Ok(self.kuu_factor()?.solve(&self.f))
    }
}

impl<T: Scalar> Marching<T> for ClassicalTwin<T> {
    fn dt(&self) -> T {
        self.dt
    }
    fn num_dofs(&self) -> usize {
        self.kuu.nrows()
    }
    fn mass(&self) -> &CsrMatrix<T> {
        &self.mass
    }
    fn apply_stiffness(&self, x: &[T], y: &mut [T]) {
        self.kuu.mul_vec_into(x, y)
    }
    fn load(&self) -> &[T] {
        &self.f
    }
    fn solve_marching(&self, b: &[T]) -> Result<Vec<T>> {
        Ok(self.a.solve(b))
    }
    fn solve_mass(&self, b: &[T]) -> Vec<T> {
        self.mass_chol.solve(b)
    }
    fn eigenmodes(&self, count: usize) -> Result<Modes<T>> {
        let k = self.kuu_factor()?;
        let pairs = subspace_iteration(k, &self.mass, count, SubspaceOptions::default())
            .context("classical eigenproblem")?;
        Ok(modes_from(pairs.values, pairs.vectors))
    }
    fn strain_energy(&self, u: &[T]) -> T {
        T::lit(0.5) * self.kuu.quadratic_form(u)
    }
    fn curvature_energy(&self, _u: &[T]) -> T {
        T::zero()
    }
}

/// Transverse-wave dispersion `ω = c₂ k sqrt(1 + k² l²)` with `c₂ = sqrt(μ/ρ)`.
pub fn dispersion_relation<T: Scalar>(material: &Material<T>, k: T) -> T {
    let l = material.length_scale();
    material.shear_wave_speed() * k * (T::one() + k * k * l * l).sqrt()
}

/// Sample point traced during a run, snapped to the nearest node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe<T> {
    pub id: usize,
    pub node: usize,
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Probe<T> {
    pub fn nearest(mesh: &Mesh<T>, id: usize, x: T, y: T) -> Self {
        let node = mesh.nearest_node(x, y);
        let p = mesh.nodes()[node];
        Self {
            id,
            node,
            x: p[0],
            y: p[1],
        }
    }

    /// `(ux, uy)` from a full interleaved displacement.
    pub fn displacement(&self, u_full: &[T]) -> [T; 2] {
        [u_full[2 * self.node], u_full[2 * self.node + 1]]
    }

    /// Rotation at the probe, Q1-interpolated when the node is not a corner.
    pub fn rotation(&self, mesh: &Mesh<T>, theta_full: &[T]) -> T {
        if let Some(c) = mesh.corner_of_node(self.node) {
            return theta_full[c];
        }
        q1_value(mesh, theta_full, self.x, self.y)
    }
}

/// Bilinear interpolation of corner values at a physical point.
pub fn q1_value<T: Scalar>(mesh: &Mesh<T>, corner_values: &[T], x: T, y: T) -> T {
    let (e, xi, eta) = mesh.locate(x, y);
    let n = crate::elements::shape(crate::elements::ShapeOrder::Q1, xi, eta).expect("clamped to element");
    mesh.element_corners(e)
        .iter()
        .zip(&n.values)
        .map(|(&c, &w)| w * corner_values[c])
        .sum()
}

/// `½ (∂u_y/∂x - ∂u_x/∂y)` of the Q2 displacement at a physical point.
pub fn kinematic_rotation<T: Scalar>(mesh: &Mesh<T>, u_full: &[T], x: T, y: T) -> T {
    use crate::elements::{shape, Jacobian, ShapeOrder};
    let (e, xi, eta) = mesh.locate(x, y);
    let coords = mesh.element_coords(e);
    let n = shape(ShapeOrder::Q2, xi, eta).expect("clamped to element");
    let jac = Jacobian::from_corners(&coords[..4], xi, eta);
    let mut curl = T::zero();
    for (&node, g) in mesh.elements()[e].iter().zip(&n.grads) {
        let [gx, gy] = jac.physical(*g);
        curl += gx * u_full[2 * node + 1] - gy * u_full[2 * node];
    }
    T::lit(0.5) * curl
}

/// `(x, u_y)` at every node on the horizontal line closest to `y`, sorted by `x`.
pub fn line_profile<T: Scalar>(mesh: &Mesh<T>, u_full: &[T], y: T) -> Vec<(T, T)> {
    let row_y = mesh.nodes()[mesh.nearest_node(T::zero(), y)][1];
    let mut out: Vec<(T, T)> = mesh
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, p)| p[1] == row_y)
        .map(|(n, p)| (p[0], u_full[2 * n + 1]))
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Cosine similarity of two equally sampled profiles.
pub fn correlation<T: Scalar>(a: &[T], b: &[T]) -> T {
    let num = ccst_linalg::dot(a, b);
    let den = ccst_linalg::norm2(a) * ccst_linalg::norm2(b);
    if den == T::zero() {
        T::zero()
    } else {
        num / den
    }
}

/// Times at which a sampled signal changes sign, by linear interpolation.
pub fn zero_crossings<T: Scalar>(times: &[T], values: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for k in 1..values.len() {
        let (a, b) = (values[k - 1], values[k]);
        if a == T::zero() {
            continue;
        }
        if (a < T::zero()) != (b < T::zero()) || b == T::zero() {
            let f = a / (a - b);
            out.push(times[k - 1] + f * (times[k] - times[k - 1]));
        }
    }
    out
}

/// Mean oscillation period from zero crossings (two crossings per period).
pub fn period_from_crossings<T: Scalar>(crossings: &[T]) -> Option<T> {
    if crossings.len() < 3 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Some(T::lit(2.0) * span / T::from_usize_lossy(crossings.len() - 1))
}

/// Scalar oracle for one mode: `(1 + Δt²ω²) q⁺ = 2q - q⁻ + Δt² p`.
pub fn modal_recurrence<T: Scalar>(omega: T, dt: T, q_prev: T, q0: T, modal_load: T, steps: usize) -> Vec<T> {
    let a = T::one() + dt * dt * omega * omega;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut qm, mut q) = (q_prev, q0);
    out.push(q);
    for _ in 0..steps {
        let next = (T::lit(2.0) * q - qm + dt * dt * modal_load) / a;
        qm = q;
        q = next;
        out.push(q);
    }
    out
}

/// Mass-weighted fraction of a mode's kinetic content carried by `ux`.
///
/// `dofs` maps each free position to its full DOF id (even ids are `ux`).
pub fn axial_fraction<T: Scalar>(mass: &CsrMatrix<T>, shape: &[T], full_ids: &[usize]) -> T {
    let mut ux = shape.to_vec();
    for (v, &id) in ux.iter_mut().zip(full_ids) {
        if id % 2 == 1 {
            *v = T::zero();
        }
    }
    mass.quadratic_form(&ux) / mass.quadratic_form(shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, BoundaryTag};
    use crate::mesh::Side;

    fn beam(eta: f64) -> GlobalSystem<f64> {
        let mesh = Mesh::rectangle(4.0, 1.0, 4, 1).unwrap();
        let mat = Material::new(1.0, 0.29, 1.0, eta).unwrap();
        let tags = [
            BoundaryTag::clamped(Side::Left),
            BoundaryTag::free(Side::Right).with_traction(0.0, -0.1),
        ];
        assemble(&mesh, &mat, &tags).unwrap()
    }

    #[test]
    fn eta_zero_is_rejected() {
        let err = CondensedOperators::new(&beam(0.0), 0.1).unwrap_err();
        assert_eq!(err, CoreError::ZeroCoupleModulus);
    }

    #[test]
    fn c2_is_positive_on_single_element() {
        let mesh = Mesh::rectangle(1.0, 1.0, 1, 1).unwrap();
        let mat = Material::new(1.0, 0.29, 1.0, 0.1).unwrap();
        let sys = assemble(&mesh, &mat, &[BoundaryTag::free(Side::Left).with_theta(0.0)]).unwrap();
        let ops = CondensedOperators::new(&sys, 0.1).unwrap();
        let c2 = ops.c2();
        assert_eq!((c2.nrows(), c2.ncols()), (1, 1));
        assert!(c2[(0, 0)] > 0.0);
    }

    #[test]
    fn zero_couple_load_gives_c4_equal_f() {
        let sys = beam(0.1);
        let ops = CondensedOperators::new(&sys, 0.1).unwrap();
        assert!(ops.c1().iter().all(|&c| c == 0.0));
        assert_eq!(ops.c4(), sys.f_u());
    }

    #[test]
    fn static_solution_is_a_fixed_point() {
        let ops = CondensedOperators::new(&beam(0.1), 0.3).unwrap();
        let u = ops.solve_static().unwrap();
        let state = TimeMarchState {
            u_prev: u.clone(),
            u_curr: u.clone(),
            step: 0,
            t: 0.0,
        };
        let next = step(&ops, &state).unwrap();
        let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in next.u_curr.iter().zip(&u) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
        // and the Taylor start leaves it at rest
        let s = bootstrap(&ops, &u, &vec![0.0; u.len()], StartRule::Taylor).unwrap();
        for (a, b) in s.u_prev.iter().zip(&u) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn composed_path_matches_dense() {
        let sys = beam(0.1);
        let dense = CondensedOperators::new(&sys, 0.2).unwrap();
        let composed = CondensedOperators::with_dense_limit(&sys, 0.2, 0).unwrap();
        assert!(dense.is_dense() && !composed.is_dense());
        let n = dense.num_dofs();
        let x: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let (mut y1, mut y2) = (vec![0.0; n], vec![0.0; n]);
        dense.apply_stiffness(&x, &mut y1);
        composed.apply_stiffness(&x, &mut y2);
        let scale = y1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(y1.iter().zip(&y2).all(|(a, b)| (a - b).abs() <= 1e-11 * scale));
        let a = dense.solve_marching(&x).unwrap();
        let b = composed.solve_marching(&x).unwrap();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() <= 1e-9 * scale));
        let w1 = dense.eigenmodes(3).unwrap();
        let w2 = composed.eigenmodes(3).unwrap();
        for (p, q) in w1.omega.iter().zip(&w2.omega) {
            assert!((p - q).abs() <= 1e-8 * p);
        }
    }

    #[test]
    fn zero_state_stays_zero_and_has_no_energy() {
        let mesh = Mesh::rectangle(4.0, 1.0, 4, 1).unwrap();
        let mat = Material::new(1.0, 0.29, 1.0, 0.1).unwrap();
        let sys = assemble(&mesh, &mat, &[BoundaryTag::clamped(Side::Left)]).unwrap();
        let ops = CondensedOperators::new(&sys, 0.5).unwrap();
        let n = ops.num_dofs();
        let mut s = bootstrap(&ops, &vec![0.0; n], &vec![0.0; n], StartRule::Taylor).unwrap();
        for _ in 0..5 {
            s = step(&ops, &s).unwrap();
        }
        assert!(s.u_curr.iter().all(|&v| v == 0.0));
        let e = energy(&ops, &s);
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn bootstrap_rules() {
        let mesh = Mesh::rectangle(4.0, 1.0, 4, 1).unwrap();
        let mat = Material::new(1.0, 0.29, 1.0, 0.1).unwrap();
        let sys = assemble(&mesh, &mat, &[BoundaryTag::clamped(Side::Left)]).unwrap();
        let dt: f64 = 0.05;
        let ops = CondensedOperators::new(&sys, dt).unwrap();
        let n = ops.num_dofs();
        let v0 = vec![0.3; n];
        for rule in [StartRule::Taylor, StartRule::FirstOrder] {
            let s = bootstrap(&ops, &vec![0.0; n], &v0, rule).unwrap();
            assert!(s.u_prev.iter().all(|&u| (u + dt * 0.3).abs() < 1e-15));
        }
        // eigenstate start: u⁻¹ = φ (1 - Δt² ω² / 2)
        let modes = ops.eigenmodes(2).unwrap();
        let phi = &modes.shapes[0];
        let w = modes.omega[0];
        let s = bootstrap(&ops, phi, &vec![0.0; n], StartRule::Taylor).unwrap();
        let f = 1.0 - dt * dt * w * w / 2.0;
        for (a, b) in s.u_prev.iter().zip(phi) {
            assert!((a - f * b).abs() < 1e-9);
        }
    }

    #[test]
    fn curl_free_extension_has_no_rotation() {
        let mesh = Mesh::rectangle(2.0, 1.0, 2, 2).unwrap();
        let mat = Material::new(1.0, 0.0, 1.0, 0.1).unwrap();
        let tags = [BoundaryTag::free(Side::Left).with_ux(0.0).with_theta(0.0)];
        let sys = assemble(&mesh, &mat, &tags).unwrap();
        let ops = CondensedOperators::new(&sys, 0.1).unwrap();
        let full: Vec<f64> = mesh.nodes().iter().flat_map(|p| [0.1 * p[0], 0.0]).collect();
        let u = sys.dofs().restrict_u(&full);
        let (theta, s) = ops.recover_fields(&u);
        assert!(theta.iter().chain(&s).all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn rotation_of_a_rigid_spin() {
        let mesh = Mesh::rectangle(2.0, 1.0, 2, 2).unwrap();
        let u: Vec<f64> = mesh.nodes().iter().flat_map(|p| [-0.3 * p[1], 0.3 * p[0]]).collect();
        for (x, y) in [(0.1, 0.2), (1.3, 0.77), (2.0, 1.0)] {
            assert!((kinematic_rotation(&mesh, &u, x, y) - 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn dispersion_limits() {
        let m = Material::new(1.0, 0.29, 1.0, 0.0).unwrap();
        assert_eq!(dispersion_relation(&m, 0.0), 0.0);
        let c2 = (1.0f64 / 2.58).sqrt();
        assert!((dispersion_relation(&m, 3.0) - 3.0 * c2).abs() < 1e-15);
        assert!((m.shear_wave_speed() - 0.622_572_806_364_690_3).abs() < 1e-15);
    }

    #[test]
    fn crossings_of_a_sine() {
        let t: Vec<f64> = (0..2001).map(|i| i as f64 * 0.01).collect();
        let v: Vec<f64> = t.iter().map(|&x| (x * 2.0 * std::f64::consts::PI / 5.0 + 0.3).sin()).collect();
        let c = zero_crossings(&t, &v);
        let p = period_from_crossings(&c).unwrap();
        assert!((p - 5.0).abs() < 1e-3);
    }
}
