//! Global DOF numbering, block assembly and boundary data.
//!
//! Dirichlet DOFs are removed from every block; their prescribed values move
//! to the right-hand sides. The blocks are kept separate:
//!
//! ```text
//! [ K_uu   0     K_us ] [u]   [F_u    ]
//! [ 0      K_tt  -K_ts] [θ] = [m_theta]
//! [ K_su  -K_st  0    ] [s]   [r_s    ]
//! ```
//!
//! with `K_su = K_usᵀ`, `K_st = K_tsᵀ` formed by transposition.

use ccst_linalg::{CsrMatrix, Scalar, TripletBuilder};

use crate::elements::{self, ElementMatrices, EDGE_RULE, Q2_NODES, VOLUME_RULE};
use crate::mesh::{Mesh, Side};
use crate::{CoreError, Material, Result};

/// Boundary data on one side of the rectangle.
///
/// `None` leaves a field free. Tractions act on free displacement components
/// only; a couple traction acts on a free rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTag<T> {
    pub side: Side,
    pub ux: Option<T>,
    pub uy: Option<T>,
    pub theta: Option<T>,
    /// Force per unit length `(t_x, t_y)`.
    pub traction: [T; 2],
    /// Couple per unit length.
    pub couple_traction: T,
}

impl<T: Scalar> BoundaryTag<T> {
    pub fn free(side: Side) -> Self {
        Self {
            side,
            ux: None,
            uy: None,
            theta: None,
            traction: [T::zero(); 2],
            couple_traction: T::zero(),
        }
    }

    /// `ux = uy = theta = 0`.
    pub fn clamped(side: Side) -> Self {
        Self::free(side)
            .with_u(T::zero(), T::zero())
            .with_theta(T::zero())
    }

    pub fn with_ux(mut self, v: T) -> Self {
        self.ux = Some(v);
        self
    }

    pub fn with_uy(mut self, v: T) -> Self {
        self.uy = Some(v);
        self
    }

    pub fn with_u(self, ux: T, uy: T) -> Self {
        self.with_ux(ux).with_uy(uy)
    }

    pub fn with_theta(mut self, v: T) -> Self {
        self.theta = Some(v);
        self
    }

    pub fn with_traction(mut self, tx: T, ty: T) -> Self {
        self.traction = [tx, ty];
        self
    }

    pub fn with_couple_traction(mut self, m: T) -> Self {
        self.couple_traction = m;
        self
    }

    fn validate(&self) -> Result<()> {
        let pairs = [(self.ux, self.traction[0], "ux"), (self.uy, self.traction[1], "uy")];
        for (fixed, t, component) in pairs {
            if fixed.is_some() && t != T::zero() {
                return Err(CoreError::TractionOnConstrainedDof {
                    side: self.side,
                    component,
                });
            }
        }
        if self.theta.is_some() && self.couple_traction != T::zero() {
            return Err(CoreError::TractionOnConstrainedDof {
                side: self.side,
                component: "theta",
            });
        }
        Ok(())
    }
}

/// Maps full DOF ids to free positions and holds the prescribed values.
///
/// Full displacement DOF of node `n`, component `c` is `2n + c`; full rotation
/// DOF of a corner is its corner index; multiplier DOFs are element ids and
/// are never constrained.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap<T> {
    u_free_of_full: Vec<Option<usize>>,
    theta_free_of_full: Vec<Option<usize>>,
    u_free: Vec<usize>,
    u_fixed: Vec<usize>,
    theta_free: Vec<usize>,
    theta_fixed: Vec<usize>,
    u_prescribed: Vec<T>,
    theta_prescribed: Vec<T>,
    n_s: usize,
}

impl<T: Scalar> DofMap<T> {
    fn new(u_values: &[Option<T>], theta_values: &[Option<T>], n_s: usize) -> Self {
        let split = |values: &[Option<T>]| {
            let mut free_of_full = vec![None; values.len()];
            let (mut free, mut fixed) = (Vec::new(), Vec::new());
            for (i, v) in values.iter().enumerate() {
                if v.is_some() {
                    fixed.push(i);
                } else {
                    free_of_full[i] = Some(free.len());
                    free.push(i);
                }
            }
            let prescribed = values.iter().map(|v| v.unwrap_or_else(T::zero)).collect();
            (free_of_full, free, fixed, prescribed)
        };
        let (u_free_of_full, u_free, u_fixed, u_prescribed) = split(u_values);
        let (theta_free_of_full, theta_free, theta_fixed, theta_prescribed) = split(theta_values);
        Self {
            u_free_of_full,
            theta_free_of_full,
            u_free,
            u_fixed,
            theta_free,
            theta_fixed,
            u_prescribed,
            theta_prescribed,
            n_s,
        }
    }

    /// Full displacement DOF id of `node`, component `c` (0 = x, 1 = y).
    pub fn u_dof(node: usize, c: usize) -> usize {
        2 * node + c
    }

    pub fn num_u_full(&self) -> usize {
        self.u_free_of_full.len()
    }
    pub fn num_theta_full(&self) -> usize {
        self.theta_free_of_full.len()
    }
    pub fn num_u_free(&self) -> usize {
        self.u_free.len()
    }
    pub fn num_theta_free(&self) -> usize {
        self.theta_free.len()
    }
    pub fn num_s(&self) -> usize {
        self.n_s
    }
    pub fn u_free_dofs(&self) -> &[usize] {
        &self.u_free
    }
    pub fn u_fixed_dofs(&self) -> &[usize] {
        &self.u_fixed
    }
    pub fn theta_free_dofs(&self) -> &[usize] {
        &self.theta_free
    }
    pub fn theta_fixed_dofs(&self) -> &[usize] {
        &self.theta_fixed
    }
    /// Free position of a full displacement DOF, `None` if constrained.
    pub fn u_free_index(&self, full: usize) -> Option<usize> {
        self.u_free_of_full[full]
    }
    pub fn theta_free_index(&self, full: usize) -> Option<usize> {
        self.theta_free_of_full[full]
    }
    /// Prescribed values on the full displacement vector (zero on free DOFs).
    pub fn u_prescribed(&self) -> &[T] {
        &self.u_prescribed
    }
    pub fn theta_prescribed(&self) -> &[T] {
        &self.theta_prescribed
    }

    /// Full displacement vector from free values plus prescribed values.
    pub fn expand_u(&self, free: &[T]) -> Vec<T> {
        expand(&self.u_prescribed, &self.u_free, free)
    }
    pub fn expand_theta(&self, free: &[T]) -> Vec<T> {
        expand(&self.theta_prescribed, &self.theta_free, free)
    }
    pub fn restrict_u(&self, full: &[T]) -> Vec<T> {
        self.u_free.iter().map(|&i| full[i]).collect()
    }
    pub fn restrict_theta(&self, full: &[T]) -> Vec<T> {
        self.theta_free.iter().map(|&i| full[i]).collect()
    }
}

fn expand<T: Copy>(prescribed: &[T], free_ids: &[usize], free: &[T]) -> Vec<T> {
    assert_eq!(free.len(), free_ids.len(), "free vector length");
    let mut out = prescribed.to_vec();
    for (&i, &v) in free_ids.iter().zip(free) {
        out[i] = v;
    }
    out
}

/// Rows of the full system belonging to constrained DOFs, kept for reactions.
#[derive(Debug, Clone, PartialEq)]
struct FixedRows<T> {
    k_uu: CsrMatrix<T>,
    k_us: CsrMatrix<T>,
    f_u: Vec<T>,
    k_tt: CsrMatrix<T>,
    k_ts: CsrMatrix<T>,
    m_theta: Vec<T>,
}

/// Assembled blocks on free DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSystem<T> {
    dofs: DofMap<T>,
    material: Material<T>,
    k_uu: CsrMatrix<T>,
    m_uu: CsrMatrix<T>,
    k_us: CsrMatrix<T>,
    k_su: CsrMatrix<T>,
    k_tt: CsrMatrix<T>,
    k_ts: CsrMatrix<T>,
    k_st: CsrMatrix<T>,
    f_u: Vec<T>,
    m_theta: Vec<T>,
    r_s: Vec<T>,
    fixed: FixedRows<T>,
}

impl<T: Scalar> GlobalSystem<T> {
    pub fn dofs(&self) -> &DofMap<T> {
        &self.dofs
    }
    pub fn material(&self) -> &Material<T> {
        &self.material
    }
    pub fn k_uu(&self) -> &CsrMatrix<T> {
        &self.k_uu
    }
    pub fn m_uu(&self) -> &CsrMatrix<T> {
        &self.m_uu
    }
    pub fn k_us(&self) -> &CsrMatrix<T> {
        &self.k_us
    }
    pub fn k_su(&self) -> &CsrMatrix<T> {
        &self.k_su
    }
    pub fn k_tt(&self) -> &CsrMatrix<T> {
        &self.k_tt
    }
    pub fn k_ts(&self) -> &CsrMatrix<T> {
        &self.k_ts
    }
    pub fn k_st(&self) -> &CsrMatrix<T> {
        &self.k_st
    }
    /// Force vector on free displacement DOFs, Dirichlet-corrected.
    pub fn f_u(&self) -> &[T] {
        &self.f_u
    }
    /// Couple vector on free rotation DOFs, Dirichlet-corrected.
    pub fn m_theta(&self) -> &[T] {
        &self.m_theta
    }
    /// Right-hand side of the constraint rows from prescribed u and θ.
    pub fn r_s(&self) -> &[T] {
        &self.r_s
    }

    /// Reaction forces `K_uu u + K_us s - F` on the constrained displacement
    /// DOFs, ordered as [`DofMap::u_fixed_dofs`]. Takes full `u` and `s`.
    pub fn u_reactions(&self, u_full: &[T], s: &[T]) -> Vec<T> {
        let mut r = self.fixed.k_uu.mul_vec(u_full);
        let ks = self.fixed.k_us.mul_vec(s);
        for ((ri, k), f) in r.iter_mut().zip(ks).zip(&self.fixed.f_u) {
            *ri += k - *f;
        }
        r
    }

    /// Reaction couples `K_tt θ - K_ts s - m` on the constrained rotations.
    pub fn theta_reactions(&self, theta_full: &[T], s: &[T]) -> Vec<T> {
        let mut r = self.fixed.k_tt.mul_vec(theta_full);
        let ks = self.fixed.k_ts.mul_vec(s);
        for ((ri, k), m) in r.iter_mut().zip(ks).zip(&self.fixed.m_theta) {
            *ri -= k + *m;
        }
        r
    }
}

/// Body force `f(x, y)` per unit volume.
pub type BodyForce<'a, T> = &'a dyn Fn(T, T) -> [T; 2];

/// Assembles the block system for `mesh`, `material` and the boundary `tags`.
pub fn assemble<T: Scalar>(
    mesh: &Mesh<T>,
    material: &Material<T>,
    tags: &[BoundaryTag<T>],
) -> Result<GlobalSystem<T>> {
    assemble_with_body_force(mesh, material, tags, None)
}

pub fn assemble_with_body_force<T: Scalar>(
    mesh: &Mesh<T>,
    material: &Material<T>,
    tags: &[BoundaryTag<T>],
    body_force: Option<BodyForce<'_, T>>,
) -> Result<GlobalSystem<T>> {
    for tag in tags {
        tag.validate()?;
    }
    let (u_values, theta_values) = collect_constraints(mesh, tags)?;
    if theta_values.iter().all(Option::is_none) {
        return Err(CoreError::MissingRotationConstraint);
    }
    let n_u = 2 * mesh.num_nodes();
    let n_t = mesh.num_corners();
    let n_s = mesh.num_elements();

    // Structured meshes are translates of one element, so one kernel serves all.
    let em: ElementMatrices<T> =
        elements::local_matrices(&mesh.element_coords(0), material, VOLUME_RULE).map_err(
            |e| match e {
                CoreError::DegenerateElement { det, .. } => {
                    CoreError::DegenerateElement { element: 0, det }
                }
                e => e,
            },
        )?;

    let mut k_uu = TripletBuilder::with_capacity(n_u, n_u, n_s * 324);
    let mut m_uu = TripletBuilder::with_capacity(n_u, n_u, n_s * 324);
    let mut k_us = TripletBuilder::with_capacity(n_u, n_s, n_s * 18);
    let mut k_tt = TripletBuilder::with_capacity(n_t, n_t, n_s * 16);
    let mut k_ts = TripletBuilder::with_capacity(n_t, n_s, n_s * 4);
    let mut f_u = vec![T::zero(); n_u];
    let mut m_theta = vec![T::zero(); n_t];

    for (e, conn) in mesh.elements().iter().enumerate() {
        let dof = |r: usize| DofMap::<T>::u_dof(conn[r / 2], r % 2);
        for r in 0..2 * Q2_NODES {
            for c in 0..2 * Q2_NODES {
                k_uu.push(dof(r), dof(c), em.k_uu[(r, c)]);
                let m = em.m_uu[(r, c)];
                if m != T::zero() {
                    m_uu.push(dof(r), dof(c), m);
                }
            }
            k_us.push(dof(r), e, em.k_us[r]);
        }
        let corners = mesh.element_corners(e);
        for (a, &ca) in corners.iter().enumerate() {
            for (b, &cb) in corners.iter().enumerate() {
                k_tt.push(ca, cb, em.k_tt[(a, b)]);
            }
            k_ts.push(ca, e, em.k_ts[a]);
        }
        if let Some(force) = body_force {
            let load = elements::body_load(&mesh.element_coords(e), VOLUME_RULE, force)?;
            for (r, v) in load.iter().enumerate() {
                f_u[dof(r)] += *v;
            }
        }
    }
    apply_boundary_loads(mesh, tags, &mut f_u, &mut m_theta);

    let k_uu = k_uu.build();
    let m_uu = m_uu.build();
    let k_us = k_us.build();
    let k_tt = k_tt.build();
    let k_ts = k_ts.build();

    let dofs = DofMap::new(&u_values, &theta_values, n_s);
    let all_s: Vec<usize> = (0..n_s).collect();
    let (uf, uc) = (dofs.u_free_dofs(), dofs.u_fixed_dofs());
    let (tf, tc) = (dofs.theta_free_dofs(), dofs.theta_fixed_dofs());
    let u_bar: Vec<T> = uc.iter().map(|&i| dofs.u_prescribed[i]).collect();
    let t_bar: Vec<T> = tc.iter().map(|&i| dofs.theta_prescribed[i]).collect();

    let mut f_free = dofs.restrict_u(&f_u);
    let corr = k_uu.submatrix(uf, uc).mul_vec(&u_bar);
    f_free.iter_mut().zip(corr).for_each(|(f, c)| *f -= c);
    let mut m_free = dofs.restrict_theta(&m_theta);
    let corr = k_tt.submatrix(tf, tc).mul_vec(&t_bar);
    m_free.iter_mut().zip(corr).for_each(|(m, c)| *m -= c);

    let k_us_fixed = k_us.submatrix(uc, &all_s);
    let k_ts_fixed = k_ts.submatrix(tc, &all_s);
    let mut r_s = k_ts_fixed.tr_mul_vec(&t_bar);
    let corr = k_us_fixed.tr_mul_vec(&u_bar);
    r_s.iter_mut().zip(corr).for_each(|(r, c)| *r -= c);

    let k_us_free = k_us.submatrix(uf, &all_s);
    let k_ts_free = k_ts.submatrix(tf, &all_s);
    let fixed = FixedRows {
        k_uu: k_uu.submatrix(uc, &(0..n_u).collect::<Vec<_>>()),
        k_us: k_us_fixed,
        f_u: uc.iter().map(|&i| f_u[i]).collect(),
        k_tt: k_tt.submatrix(tc, &(0..n_t).collect::<Vec<_>>()),
        k_ts: k_ts_fixed,
        m_theta: tc.iter().map(|&i| m_theta[i]).collect(),
    };
    Ok(GlobalSystem {
        k_uu: k_uu.submatrix(uf, uf),
        m_uu: m_uu.submatrix(uf, uf),
        k_su: k_us_free.transpose(),
        k_us: k_us_free,
        k_tt: k_tt.submatrix(tf, tf),
        k_st: k_ts_free.transpose(),
        k_ts: k_ts_free,
        f_u: f_free,
        m_theta: m_free,
        r_s,
        fixed,
        material: *material,
        dofs,
    })
}

type Constraints<T> = (Vec<Option<T>>, Vec<Option<T>>);

fn collect_constraints<T: Scalar>(mesh: &Mesh<T>, tags: &[BoundaryTag<T>]) -> Result<Constraints<T>> {
    let mut u = vec![None; 2 * mesh.num_nodes()];
    let mut theta = vec![None; mesh.num_corners()];
    let set = |slot: &mut Option<T>, v: T, name: &dyn Fn() -> String| -> Result<()> {
        match *slot {
            Some(old) if old != v => Err(CoreError::ConflictingConstraint {
                dof: name(),
                first: old.to_f64_lossy(),
                second: v.to_f64_lossy(),
            }),
            _ => {
                *slot = Some(v);
                Ok(())
            }
        }
    };
    for tag in tags {
        let nodes = mesh.boundary_nodes(tag.side);
        for &n in &nodes.q2 {
            let p = mesh.nodes()[n];
            for (c, value, label) in [(0, tag.ux, "ux"), (1, tag.uy, "uy")] {
                if let Some(v) = value {
                    set(&mut u[2 * n + c], v, &|| {
                        format!("{label} at node {n} ({}, {})", p[0], p[1])
                    })?;
                }
            }
        }
        if let Some(v) = tag.theta {
            for &k in &nodes.q1 {
                let p = mesh.nodes()[mesh.corner_nodes()[k]];
                set(&mut theta[k], v, &|| format!("theta at corner {k} ({}, {})", p[0], p[1]))?;
            }
        }
    }
    Ok((u, theta))
}

fn apply_boundary_loads<T: Scalar>(
    mesh: &Mesh<T>,
    tags: &[BoundaryTag<T>],
    f_u: &mut [T],
    m_theta: &mut [T],
) {
    for tag in tags {
        let has_force = tag.traction.iter().any(|&t| t != T::zero());
        let has_couple = tag.couple_traction != T::zero();
        if !has_force && !has_couple {
            continue;
        }
        for edge in mesh.boundary_edges(tag.side) {
            let conn = &mesh.elements()[edge.element];
            let nodes = edge.local_nodes.map(|l| conn[l]);
            let coords = nodes.map(|n| mesh.nodes()[n]);
            for (w, _x, q, l) in elements::edge_points(coords, EDGE_RULE) {
                for (a, &n) in nodes.iter().enumerate() {
                    for c in 0..2 {
                        f_u[2 * n + c] += w * q[a] * tag.traction[c];
                    }
                }
                for (k, &n) in [nodes[0], nodes[2]].iter().enumerate() {
                    let corner = mesh.corner_of_node(n).expect("edge ends are corners");
                    m_theta[corner] += w * l[k] * tag.couple_traction;
                }
            }
        }
    }
}

/// Nodal interpolation of initial fields at their own DOF locations.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialFields<T> {
    /// Full interleaved displacement.
    pub u: Vec<T>,
    /// Full interleaved velocity.
    pub v: Vec<T>,
    /// One rotation per corner node.
    pub theta: Vec<T>,
    /// One multiplier per element, sampled at the center.
    pub s: Vec<T>,
}

pub type VectorField<'a, T> = &'a dyn Fn(T, T) -> [T; 2];
pub type ScalarField<'a, T> = &'a dyn Fn(T, T) -> T;

pub fn apply_initial_fields<T: Scalar>(
    mesh: &Mesh<T>,
    u0: VectorField<'_, T>,
    v0: VectorField<'_, T>,
    theta0: ScalarField<'_, T>,
    s0: ScalarField<'_, T>,
) -> InitialFields<T> {
    let interleave = |f: VectorField<'_, T>| -> Vec<T> {
        mesh.nodes().iter().flat_map(|p| f(p[0], p[1])).collect()
    };
    InitialFields {
        u: interleave(u0),
        v: interleave(v0),
        theta: mesh
            .corner_nodes()
            .iter()
            .map(|&n| {
                let p = mesh.nodes()[n];
                theta0(p[0], p[1])
            })
            .collect(),
        s: (0..mesh.num_elements())
            .map(|e| {
                let c = mesh.element_center(e);
                s0(c[0], c[1])
            })
            .collect(),
    }
}

/// Transverse Gaussian pulse `u_y = exp(-a (x - L/2)²)` released from rest,
/// with rotation `½ ∂u_y/∂x` and multiplier `-½ η ∂³u_y/∂x³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPulse<T> {
    pub length: T,
    pub sharpness: T,
    pub eta: T,
}

impl<T: Scalar> GaussianPulse<T> {
    pub fn new(length: T, eta: T) -> Self {
        Self {
            length,
            sharpness: T::lit(100.0),
            eta,
        }
    }

    fn offset(&self, x: T) -> (T, T) {
        let d = x - self.length * T::lit(0.5);
        (d, (-self.sharpness * d * d).exp())
    }

    /// Displacement profile at distance `x` along the strip.
    pub fn profile(&self, x: T) -> T {
        self.offset(x).1
    }

    pub fn displacement(&self, x: T, _y: T) -> [T; 2] {
        [T::zero(), self.profile(x)]
    }

    pub fn rotation(&self, x: T, _y: T) -> T {
        let (d, g) = self.offset(x);
        -self.sharpness * d * g
    }

    pub fn multiplier(&self, x: T, _y: T) -> T {
        let (d, g) = self.offset(x);
        let a = self.sharpness;
        // g''' = 4a²d(3 - 2ad²) g
        let g3 = T::lit(4.0) * a * a * d * (T::lit(3.0) - T::lit(2.0) * a * d * d) * g;
        -T::lit(0.5) * self.eta * g3
    }

    pub fn initial_fields(&self, mesh: &Mesh<T>) -> InitialFields<T> {
        apply_initial_fields(
            mesh,
            &|x, y| self.displacement(x, y),
            &|_, _| [T::zero(); 2],
            &|x, y| self.rotation(x, y),
            &|x, y| self.multiplier(x, y),
        )
    }
}
