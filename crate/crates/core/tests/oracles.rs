use ccst_core::assembly::{assemble, BoundaryTag, GlobalSystem};
use ccst_core::dynamics::{bootstrap, modal_recurrence, step, ClassicalTwin, CondensedOperators, Marching, StartRule};
use ccst_core::statics::{solve_classical, solve_static, ManufacturedSolution};
use ccst_core::vtk::{self, Snapshot};
use ccst_core::{Material, Mesh, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn loaded_beam(eta: f64, nx: usize, ny: usize, couple: f64) -> (Mesh<f64>, GlobalSystem<f64>) {
    let mesh = Mesh::rectangle(4.0, 1.0, nx, ny).unwrap();
    let mat = Material::new(1.0, 0.29, 1.0, eta).unwrap();
    let tags = [
        BoundaryTag::clamped(Side::Left),
        BoundaryTag::free(Side::Right).with_traction(0.02, -0.1),
        BoundaryTag::free(Side::Top).with_couple_traction(couple),
    ];
    let sys = assemble(&mesh, &mat, &tags).unwrap();
    (mesh, sys)
}

#[test]
fn condensed_recovery_matches_fused_solve() {
    let (_, sys) = loaded_beam(0.1, 8, 2, 0.01);
    let fused = solve_static(&sys).unwrap();
    let ops = CondensedOperators::new(&sys, 0.1).unwrap();
    let u = ops.solve_static().unwrap();
    let (theta, s) = ops.recover_fields(&u);
    assert!(max_rel(&u, &fused.u) <= 1e-9);
    assert!(max_rel(&theta, &fused.theta) <= 1e-9);
    assert!(max_rel(&s, &fused.s) <= 1e-9);
    // the constraint row K_su u - K_st θ = r_s
    let mut r = sys.k_su().mul_vec(&u);
    let kt = sys.k_st().mul_vec(&theta);
    r.iter_mut().zip(kt).zip(sys.r_s()).for_each(|((a, b), c)| *a -= b + c);
    assert!(r.iter().all(|v| v.abs() <= 1e-10));
}

#[test]
fn classical_limit_matches_twin() {
    // a couple traction would still load u through the multiplier at eta = 0
    let (_, sys) = loaded_beam(0.0, 2, 2, 0.0);
    let fused = solve_static(&sys).unwrap();
    let twin = ClassicalTwin::new(&sys, 0.1).unwrap().solve_static().unwrap();
    let direct = solve_classical(&sys).unwrap();
    assert!(max_rel(&fused.u, &twin) <= 1e-8);
    assert!(max_rel(&direct, &twin) <= 1e-12);
}

#[test]
fn coupling_blocks_are_exact_transposes() {
    let (_, sys) = loaded_beam(0.1, 5, 3, 0.01);
    assert_eq!(sys.k_su().max_abs_diff(&sys.k_us().transpose()), 0.0);
    assert_eq!(sys.k_st().max_abs_diff(&sys.k_ts().transpose()), 0.0);
}

#[test]
fn stepper_projects_onto_scalar_recurrence() {
    let (_, sys) = loaded_beam(0.1, 8, 2, 0.01);
    let dt = 0.3;
    let ops = CondensedOperators::new(&sys, dt).unwrap();
    let modes = ops.eigenmodes(4).unwrap();
    let n = ops.num_dofs();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let mut state = bootstrap(&ops, &u0, &v0, StartRule::Taylor).unwrap();
    let start = state.clone();
    let mut history = vec![state.u_curr.clone()];
    for _ in 0..100 {
        state = step(&ops, &state).unwrap();
        history.push(state.u_curr.clone());
    }
    for (w, phi) in modes.omega.iter().zip(&modes.shapes) {
        let mphi = ops.mass().mul_vec(phi);
        let proj = |u: &[f64]| ccst_linalg::dot(&mphi, u);
        let load = ccst_linalg::dot(phi, ops.load());
        let oracle = modal_recurrence(*w, dt, proj(&start.u_prev), proj(&start.u_curr), load, 100);
        let got: Vec<f64> = history.iter().map(|u| proj(u)).collect();
        assert!(max_rel(&got, &oracle) <= 1e-8, "mode with omega {w}");
    }
}

/// Body force rebuilt from the displacement alone by nested central
/// differences, Richardson-extrapolated over steps `h` and `2h`.
fn fd_body_force(mat: &Material<f64>, x: f64, y: f64, h: f64) -> [f64; 2] {
    let u = |x: f64, y: f64| ManufacturedSolution.displacement(x, y);
    let dx = |f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64| (f(x + h, y) - f(x - h, y)) / (2.0 * h);
    let dy = |f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64| (f(x, y + h) - f(x, y - h)) / (2.0 * h);
    let div = |x: f64, y: f64| dx(&|x, y| u(x, y)[0], x, y) + dy(&|x, y| u(x, y)[1], x, y);
    let curl = |x: f64, y: f64| dx(&|x, y| u(x, y)[1], x, y) - dy(&|x, y| u(x, y)[0], x, y);
    let lap_curl = |x: f64, y: f64| {
        (curl(x + h, y) + curl(x - h, y) + curl(x, y + h) + curl(x, y - h) - 4.0 * curl(x, y)) / (h * h)
    };
    let lam2mu = mat.lambda() + 2.0 * mat.mu();
    let (mu, eta) = (mat.mu(), mat.eta());
    // curl curl u = (∂y ω, -∂x ω)
    [
        -lam2mu * dx(&div, x, y) + mu * dy(&curl, x, y) - eta * dy(&lap_curl, x, y),
        -lam2mu * dy(&div, x, y) - mu * dx(&curl, x, y) + eta * dx(&lap_curl, x, y),
    ]
}

#[test]
fn body_force_matches_finite_difference_operator() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for eta in [0.0, 0.1] {
        let mat = Material::new(1.0, 0.29, 1.0, eta).unwrap();
        for _ in 0..20 {
            let (x, y) = (rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
            let exact = ManufacturedSolution.body_force(&mat, x, y);
            let h = 1e-3;
            let f1 = fd_body_force(&mat, x, y, h);
            let f2 = fd_body_force(&mat, x, y, 2.0 * h);
            let fd: Vec<f64> = (0..2).map(|i| (4.0 * f1[i] - f2[i]) / 3.0).collect();
            let norm = exact[0].hypot(exact[1]);
            let err = (fd[0] - exact[0]).hypot(fd[1] - exact[1]);
            assert!(err <= 1e-4 * norm, "eta {eta} at ({x}, {y}): {err:e} vs {norm:e}");
        }
    }
}

#[test]
fn body_force_reduces_to_navier_without_couple_stress() {
    let mat = Material::new(1.0, 0.29, 1.0, 0.0).unwrap();
    let f = ManufacturedSolution.body_force(&mat, 0.5, 0.5);
    let fd = fd_body_force(&mat, 0.5, 0.5, 1e-3);
    // the force vanishes at the center by symmetry, so compare absolutely
    assert!(f[0].hypot(f[1]) < 1e-12);
    assert!((f[0] - fd[0]).hypot(f[1] - fd[1]) <= 1e-8);
}

#[test]
fn vtk_round_trip_recovers_coordinates() {
    let mesh = Mesh::<f64>::rectangle(1.5, 0.3, 7, 3).unwrap();
    let u: Vec<f64> = mesh.nodes().iter().flat_map(|p| [p[0].sin() / 3.0, p[1] * 1e-7]).collect();
    let theta = vec![0.25; mesh.num_corners()];
    let s = vec![-1.0; mesh.num_elements()];
    let snap = Snapshot {
        u: Some(&u[..]),
        theta: Some(&theta[..]),
        s: Some(&s[..]),
    };
    let path = std::env::temp_dir().join(format!("ccst-roundtrip-{}.vtk", std::process::id()));
    vtk::write_file(&mesh, &snap, "round trip", &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();

    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[1].contains("interpolated"));
    let at = lines.iter().position(|l| l.starts_with("POINTS")).unwrap();
    let count: usize = lines[at].split_whitespace().nth(1).unwrap().parse().unwrap();
    assert_eq!(count, mesh.num_nodes());
    for (k, p) in mesh.nodes().iter().enumerate() {
        let xyz: Vec<f64> = lines[at + 1 + k].split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert!((xyz[0] - p[0]).abs() <= 1e-12 && (xyz[1] - p[1]).abs() <= 1e-12 && xyz[2] == 0.0);
    }
    let at = lines.iter().position(|l| l.starts_with("VECTORS u")).unwrap();
    for k in 0..mesh.num_nodes() {
        let v: Vec<f64> = lines[at + 1 + k].split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(v[0], u[2 * k]);
        assert_eq!(v[1], u[2 * k + 1]);
    }
    let at = lines.iter().position(|l| l.starts_with("CELL_DATA")).unwrap();
    assert_eq!(lines[at], format!("CELL_DATA {}", mesh.num_elements()));
    assert_eq!(lines[at + 3].parse::<f64>().unwrap(), -1.0);
}

#[test]
fn zero_fields_write_zero_arrays() {
    let mesh = Mesh::<f64>::rectangle(1.0, 1.0, 1, 1).unwrap();
    let u = vec![0.0; 18];
    let t = vec![0.0; 4];
    let s = vec![0.0; 1];
    let mut buf = Vec::new();
    let snap = Snapshot {
        u: Some(&u[..]),
        theta: Some(&t[..]),
        s: Some(&s[..]),
    };
    vtk::write(&mesh, &snap, "zero", &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let data = &text[text.find("POINT_DATA").unwrap()..];
    let numbers: Vec<f64> = data
        .split_whitespace()
        .filter_map(|t| t.parse::<f64>().ok())
        .collect();
    // counts 9, 1 (scalar width), 1 (cell count), 1 (scalar width), the rest are values
    assert_eq!(numbers.iter().filter(|v| **v != 0.0).count(), 4);
}
