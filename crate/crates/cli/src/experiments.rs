//! Drivers for the five experiments. Each returns a plain report; writing
//! CSV/SVG files is left to [`crate::output`].

use std::path::Path;

use ccst_core::assembly::{assemble, BoundaryTag, GaussianPulse, GlobalSystem};
use ccst_core::dynamics::{
    axial_fraction, bootstrap, correlation, energy, kinematic_rotation, line_profile, period_from_crossings, step,
    zero_crossings, ClassicalTwin, CondensedOperators, Energy, Marching, Probe, StartRule, TimeMarchState,
};
use ccst_core::statics::{divisions_for_size, loglog_slope, mms_static, rigidity_sweep, Cantilever, MmsRow, RigidityRow};
use ccst_core::vtk::{self, Snapshot};
use ccst_core::{Mesh, Side};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Ccst,
    Classical,
}

impl Model {
    pub const BOTH: [Model; 2] = [Model::Ccst, Model::Classical];

    pub fn name(self) -> &'static str {
        match self {
            Model::Ccst => "ccst",
            Model::Classical => "classical",
        }
    }
}

/// Condensed couple-stress operators or the classical twin behind one interface.
enum Operators {
    Ccst(CondensedOperators<f64>),
    Classical(ClassicalTwin<f64>),
}

impl Operators {
    fn new(model: Model, sys: &GlobalSystem<f64>, dt: f64) -> Result<Self> {
        Ok(match model {
            Model::Ccst => Operators::Ccst(CondensedOperators::new(sys, dt)?),
            Model::Classical => Operators::Classical(ClassicalTwin::new(sys, dt)?),
        })
    }

    fn marching(&self) -> &dyn Marching<f64> {
        match self {
            Operators::Ccst(o) => o,
            Operators::Classical(o) => o,
        }
    }

    /// Full rotation and multiplier fields, if the model carries them.
    fn fields(&self, sys: &GlobalSystem<f64>, u: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Operators::Ccst(o) => {
                let (theta, s) = o.recover_fields(u);
                Some((sys.dofs().expand_theta(&theta), s))
            }
            Operators::Classical(_) => None,
        }
    }
}

// ---------------------------------------------------------------- statics

#[derive(Debug, Clone)]
pub struct RigidityReport {
    pub classical_stiffness: f64,
    pub rows: Vec<RigidityRow<f64>>,
}

pub fn cantilever_rigidity(cfg: &ExperimentConfig) -> Result<RigidityReport> {
    let g = &cfg.geometry;
    let base = Cantilever {
        length: g.width,
        height: g.height,
        nx: g.nx,
        ny: g.ny,
        material: cfg.material.build()?,
        load: cfg.load.tip_load,
    };
    Ok(RigidityReport {
        classical_stiffness: base.classical_stiffness(),
        rows: rigidity_sweep(&base, &cfg.sweep.h_over_l)?,
    })
}

#[derive(Debug, Clone)]
pub struct MmsReport {
    pub rows: Vec<MmsRow<f64>>,
    /// Index of the first row used in the slope fit.
    pub fit_from: usize,
    pub slope_vs_elements: f64,
    pub slope_vs_divisions: f64,
    pub slope_vs_mesh_size: f64,
    pub strictly_decreasing: bool,
}

pub fn mms(cfg: &ExperimentConfig) -> Result<MmsReport> {
    let material = cfg.material.build()?;
    let divisions: Vec<usize> = cfg.sweep.mesh_sizes.iter().map(|&h| divisions_for_size(h)).collect();
    let rows = mms_static(&material, &divisions)?;
    let fit_from = rows.len() - cfg.sweep.fit_points;
    let fit = &rows[fit_from..];
    let err: Vec<f64> = fit.iter().map(|r| r.l2_error).collect();
    let slope = |x: Vec<f64>| loglog_slope(&x, &err);
    Ok(MmsReport {
        slope_vs_elements: slope(fit.iter().map(|r| r.n_elements as f64).collect()),
        slope_vs_divisions: slope(fit.iter().map(|r| r.divisions as f64).collect()),
        slope_vs_mesh_size: slope(fit.iter().map(|r| r.mesh_size).collect()),
        strictly_decreasing: rows.windows(2).all(|w| w[1].l2_error < w[0].l2_error),
        fit_from,
        rows,
    })
}

// ---------------------------------------------------------------- dynamics helpers

/// Beam clamped on the left (u = θ = 0), all other sides free.
pub fn cantilever_system(cfg: &ExperimentConfig) -> Result<(Mesh<f64>, GlobalSystem<f64>)> {
    let g = &cfg.geometry;
    let mesh = Mesh::rectangle(g.width, g.height, g.nx, g.ny)?;
    let sys = assemble(&mesh, &cfg.material.build()?, &[BoundaryTag::clamped(Side::Left)])?;
    Ok((mesh, sys))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRow {
    pub omega: f64,
    pub axial_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct ModeTable {
    pub model: Model,
    pub modes: Vec<ModeRow>,
    /// 0-based index of the mode with the largest axial share.
    pub longitudinal: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub step: usize,
    pub t: f64,
    pub probe_id: usize,
    pub x: f64,
    pub y: f64,
    pub ux: f64,
    pub uy: f64,
    pub theta: f64,
    pub energy: Energy<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub model: Model,
    pub dt: f64,
    /// 0-based index of the initial eigenstate.
    pub mode: usize,
    pub omega: f64,
    pub samples: Vec<ProbeSample>,
    /// Total energy at every step, step 0 first.
    pub energy: Vec<f64>,
    /// Probe component with the largest initial amplitude: (probe id, 0 = ux / 1 = uy).
    pub traced: (usize, usize),
    /// Period measured from zero crossings of the traced component.
    pub observed_period: Option<f64>,
    /// Largest `|u|` of the traced component over the run, relative to its start value.
    pub peak_ratio: f64,
}

impl Trajectory {
    pub fn final_energy_ratio(&self) -> f64 {
        self.energy.last().unwrap() / self.energy[0]
    }

    pub fn max_energy_ratio(&self) -> f64 {
        self.energy.iter().fold(f64::NEG_INFINITY, |m, e| m.max(*e)) / self.energy[0]
    }
}

#[derive(Debug, Clone)]
pub struct EigenReport {
    pub tables: Vec<ModeTable>,
    pub runs: Vec<Trajectory>,
}

fn probes(mesh: &Mesh<f64>, cfg: &ExperimentConfig) -> Vec<Probe<f64>> {
    cfg.probes
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| Probe::nearest(mesh, i, p[0], p[1]))
        .collect()
}

fn mode_table(model: Model, ops: &dyn Marching<f64>, sys: &GlobalSystem<f64>, count: usize) -> Result<(ModeTable, Vec<Vec<f64>>)> {
    let modes = ops.eigenmodes(count)?;
    let ids = sys.dofs().u_free_dofs();
    let rows: Vec<ModeRow> = modes
        .omega
        .iter()
        .zip(&modes.shapes)
        .map(|(&omega, phi)| ModeRow {
            omega,
            axial_fraction: axial_fraction(sys.m_uu(), phi, ids),
        })
        .collect();
    let longitudinal = (0..rows.len())
        .max_by(|&a, &b| rows[a].axial_fraction.total_cmp(&rows[b].axial_fraction).then(b.cmp(&a)))
        .unwrap_or(0);
    Ok((
        ModeTable {
            model,
            modes: rows,
            longitudinal,
        },
        modes.shapes,
    ))
}

struct RunPlan<'a> {
    model: Model,
    dt: f64,
    steps: usize,
    start: StartRule,
    mode: usize,
    count: usize,
    vtk_stride: usize,
    vtk_dir: Option<&'a Path>,
    record_probes: bool,
}

/// Marches one eigenstate and records probes and energy.
fn eigen_run(mesh: &Mesh<f64>, sys: &GlobalSystem<f64>, cfg: &ExperimentConfig, plan: RunPlan<'_>) -> Result<(ModeTable, Trajectory)> {
    let ops = Operators::new(plan.model, sys, plan.dt)?;
    let m = ops.marching();
    let (table, shapes) = mode_table(plan.model, m, sys, plan.count)?;
    let phi = &shapes[plan.mode];
    let omega = table.modes[plan.mode].omega;
    let zero = vec![0.0; phi.len()];
    let state = bootstrap(m, phi, &zero, plan.start)?;
    let probes = probes(mesh, cfg);

    // trace the probe component with the largest initial amplitude
    let u0 = sys.dofs().expand_u(phi);
    let traced = probes
        .iter()
        .flat_map(|p| [(p.id, 0usize), (p.id, 1usize)])
        .max_by(|a, b| {
            let va = u0[2 * probes[a.0].node + a.1].abs();
            let vb = u0[2 * probes[b.0].node + b.1].abs();
            va.total_cmp(&vb).then(b.cmp(a))
        });
    let traced_value = |u_full: &[f64]| traced.map_or(0.0, |(i, c)| u_full[2 * probes[i].node + c]);

    let mut samples = Vec::new();
    let mut energies = vec![energy(m, &state).total];
    let mut times = vec![0.0];
    let mut signal = vec![traced_value(&u0)];
    let mut state = state;
    snapshot(mesh, sys, &ops, &state, &plan, "eigen")?;
    for _ in 0..plan.steps {
        state = step(m, &state)?;
        let e = energy(m, &state);
        energies.push(e.total);
        let u_full = sys.dofs().expand_u(&state.u_curr);
        times.push(state.t);
        signal.push(traced_value(&u_full));
        if plan.record_probes {
            let theta_full = ops.fields(sys, &state.u_curr).map(|f| f.0);
            for p in &probes {
                let [ux, uy] = p.displacement(&u_full);
                let theta = match &theta_full {
                    Some(t) => p.rotation(mesh, t),
                    None => kinematic_rotation(mesh, &u_full, p.x, p.y),
                };
                samples.push(ProbeSample {
                    step: state.step,
                    t: state.t,
                    probe_id: p.id,
                    x: p.x,
                    y: p.y,
                    ux,
                    uy,
                    theta,
                    energy: e,
                });
            }
        }
        snapshot(mesh, sys, &ops, &state, &plan, "eigen")?;
    }
    let start = signal[0].abs();
    let peak = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let run = Trajectory {
        model: plan.model,
        dt: plan.dt,
        mode: plan.mode,
        omega,
        samples,
        energy: energies,
        traced: traced.unwrap_or((0, 1)),
        observed_period: period_from_crossings(&zero_crossings(&times, &signal)),
        peak_ratio: if start > 0.0 { peak / start } else { f64::NAN },
    };
    Ok((table, run))
}

fn snapshot(
    mesh: &Mesh<f64>,
    sys: &GlobalSystem<f64>,
    ops: &Operators,
    state: &TimeMarchState<f64>,
    plan: &RunPlan<'_>,
    tag: &str,
) -> Result<()> {
    let Some(dir) = plan.vtk_dir else { return Ok(()) };
    if plan.vtk_stride == 0 || state.step % plan.vtk_stride != 0 {
        return Ok(());
    }
    let u = sys.dofs().expand_u(&state.u_curr);
    let fields = ops.fields(sys, &state.u_curr);
    let snap = Snapshot {
        u: Some(&u),
        theta: fields.as_ref().map(|f| f.0.as_slice()),
        s: fields.as_ref().map(|f| f.1.as_slice()),
    };
    let name = format!("{tag}_{}_{:06}.vtk", plan.model.name(), state.step);
    let title = format!("{tag} {} step {} t {}", plan.model.name(), state.step, state.t);
    vtk::write_file(mesh, &snap, &title, &dir.join(name))?;
    Ok(())
}

/// First eigenstate (or `modes.mode`) marched with both models.
pub fn eigen_evolve(cfg: &ExperimentConfig, vtk_dir: Option<&Path>) -> Result<EigenReport> {
    let (mesh, sys) = cantilever_system(cfg)?;
    let results: Vec<Result<(ModeTable, Trajectory)>> = Model::BOTH
        .par_iter()
        .map(|&model| {
            eigen_run(
                &mesh,
                &sys,
                cfg,
                RunPlan {
                    model,
                    dt: cfg.time.dt,
                    steps: cfg.time.steps(),
                    start: cfg.time.start_rule.into(),
                    mode: cfg.modes.mode - 1,
                    count: cfg.modes.count,
                    vtk_stride: cfg.output.vtk_stride,
                    vtk_dir,
                    record_probes: true,
                },
            )
        })
        .collect();
    let mut report = EigenReport {
        tables: Vec::new(),
        runs: Vec::new(),
    };
    for r in results {
        let (table, run) = r?;
        report.tables.push(table);
        report.runs.push(run);
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct DriftReport {
    pub runs: Vec<Trajectory>,
}

impl DriftReport {
    pub fn run(&self, model: Model, dt: f64) -> Option<&Trajectory> {
        self.runs.iter().find(|r| r.model == model && r.dt == dt)
    }
}

/// `modes.mode` eigenstate marched to `t_final` for every step size of the sweep.
pub fn energy_drift(cfg: &ExperimentConfig) -> Result<DriftReport> {
    let (mesh, sys) = cantilever_system(cfg)?;
    let jobs: Vec<(Model, f64)> = cfg
        .sweep
        .dt_values
        .iter()
        .flat_map(|&dt| Model::BOTH.map(|m| (m, dt)))
        .collect();
    let runs: Result<Vec<Trajectory>> = jobs
        .par_iter()
        .map(|&(model, dt)| {
            let plan = RunPlan {
                model,
                dt,
                steps: (cfg.time.t_final / dt).round() as usize,
                start: cfg.time.start_rule.into(),
                mode: cfg.modes.mode - 1,
                count: cfg.modes.count,
                vtk_stride: 0,
                vtk_dir: None,
                record_probes: false,
            };
            eigen_run(&mesh, &sys, cfg, plan).map(|(_, run)| run)
        })
        .collect();
    Ok(DriftReport { runs: runs? })
}

// ---------------------------------------------------------------- pulse

/// Transverse shear wave on a strip with fixed ends: d'Alembert with odd images.
pub fn pulse_reference(pulse: &GaussianPulse<f64>, length: f64, speed: f64, x: f64, t: f64) -> f64 {
    let period = 2.0 * length;
    let odd = |s: f64| -> f64 {
        let s = s.rem_euclid(period);
        // images within reach of a unit-width Gaussian
        (-2..=2)
            .map(|k| {
                let p = s + k as f64 * period;
                pulse.profile(p) - pulse.profile(-p)
            })
            .sum()
    };
    0.5 * (odd(x - speed * t) + odd(x + speed * t))
}

#[derive(Debug, Clone)]
pub struct PulseSnapshot {
    pub model: Model,
    pub step: usize,
    pub t: f64,
    pub correlation: f64,
    /// `(x, u_y, reference)` along the profile line.
    pub profile: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct PulseReport {
    pub wave_speed: f64,
    pub length_scale: f64,
    pub snapshots: Vec<PulseSnapshot>,
    pub series: Vec<(Model, Vec<ProbeSample>)>,
}

impl PulseReport {
    pub fn final_correlation(&self, model: Model) -> f64 {
        self.snapshots
            .iter()
            .filter(|s| s.model == model)
            .max_by_key(|s| s.step)
            .map_or(f64::NAN, |s| s.correlation)
    }
}

/// Strip with `u = 0` on both ends, rollers (`u_x = 0`) on top and bottom,
/// and `θ = 0` on the left end.
pub fn pulse_system(cfg: &ExperimentConfig) -> Result<(Mesh<f64>, GlobalSystem<f64>)> {
    let g = &cfg.geometry;
    let mesh = Mesh::rectangle(g.width, g.height, g.nx, g.ny)?;
    let tags = [
        BoundaryTag::clamped(Side::Left),
        BoundaryTag::free(Side::Right).with_u(0.0, 0.0),
        BoundaryTag::free(Side::Bottom).with_ux(0.0),
        BoundaryTag::free(Side::Top).with_ux(0.0),
    ];
    let sys = assemble(&mesh, &cfg.material.build()?, &tags)?;
    Ok((mesh, sys))
}

pub fn pulse(cfg: &ExperimentConfig, vtk_dir: Option<&Path>) -> Result<PulseReport> {
    let (mesh, sys) = pulse_system(cfg)?;
    let material = cfg.material.build()?;
    let mut shape = GaussianPulse::new(cfg.geometry.width, material.eta());
    shape.sharpness = cfg.pulse.sharpness;
    let init = shape.initial_fields(&mesh);
    if let Some(dir) = vtk_dir {
        let snap = Snapshot {
            u: Some(&init.u),
            theta: Some(&init.theta),
            s: Some(&init.s),
        };
        vtk::write_file(&mesh, &snap, "pulse initial fields", &dir.join("pulse_initial.vtk"))?;
    }
    let speed = material.shear_wave_speed();
    let u0 = sys.dofs().restrict_u(&init.u);
    let v0 = sys.dofs().restrict_u(&init.v);

    let runs: Vec<Result<(Vec<PulseSnapshot>, Vec<ProbeSample>)>> = Model::BOTH
        .par_iter()
        .map(|&model| {
            let ops = Operators::new(model, &sys, cfg.time.dt)?;
            let m = ops.marching();
            let plan = RunPlan {
                model,
                dt: cfg.time.dt,
                steps: cfg.time.steps(),
                start: cfg.time.start_rule.into(),
                mode: 0,
                count: 0,
                vtk_stride: cfg.output.vtk_stride,
                vtk_dir,
                record_probes: true,
            };
            let probes = probes(&mesh, cfg);
            let mut state = bootstrap(m, &u0, &v0, plan.start)?;
            let mut snaps = Vec::new();
            let mut samples = Vec::new();
            let take = |state: &TimeMarchState<f64>, snaps: &mut Vec<PulseSnapshot>| {
                let u_full = sys.dofs().expand_u(&state.u_curr);
                let line = line_profile(&mesh, &u_full, cfg.pulse.profile_y);
                let profile: Vec<(f64, f64, f64)> = line
                    .iter()
                    .map(|&(x, uy)| (x, uy, pulse_reference(&shape, cfg.geometry.width, speed, x, state.t)))
                    .collect();
                let a: Vec<f64> = profile.iter().map(|p| p.1).collect();
                let b: Vec<f64> = profile.iter().map(|p| p.2).collect();
                snaps.push(PulseSnapshot {
                    model,
                    step: state.step,
                    t: state.t,
                    correlation: correlation(&a, &b),
                    profile,
                });
            };
            take(&state, &mut snaps);
            snapshot(&mesh, &sys, &ops, &state, &plan, "pulse")?;
            for _ in 0..plan.steps {
                state = step(m, &state)?;
                if state.step % cfg.pulse.profile_stride == 0 || state.step == plan.steps {
                    take(&state, &mut snaps);
                }
                let e = energy(m, &state);
                let u_full = sys.dofs().expand_u(&state.u_curr);
                let theta_full = ops.fields(&sys, &state.u_curr).map(|f| f.0);
                for p in &probes {
                    let [ux, uy] = p.displacement(&u_full);
                    let theta = match &theta_full {
                        Some(t) => p.rotation(&mesh, t),
                        None => kinematic_rotation(&mesh, &u_full, p.x, p.y),
                    };
                    samples.push(ProbeSample {
                        step: state.step,
                        t: state.t,
                        probe_id: p.id,
                        x: p.x,
                        y: p.y,
                        ux,
                        uy,
                        theta,
                        energy: e,
                    });
                }
                snapshot(&mesh, &sys, &ops, &state, &plan, "pulse")?;
            }
            Ok((snaps, samples))
        })
        .collect();
    let mut report = PulseReport {
        wave_speed: speed,
        length_scale: material.length_scale(),
        snapshots: Vec::new(),
        series: Vec::new(),
    };
    for (model, r) in Model::BOTH.into_iter().zip(runs) {
        let (snaps, samples) = r?;
        report.snapshots.extend(snaps);
        report.series.push((model, samples));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_odd_about_both_ends() {
        let p = GaussianPulse::new(1.5, 0.0);
        for t in [0.0, 0.7, 2.9] {
            assert!(pulse_reference(&p, 1.5, 0.6, 0.0, t).abs() < 1e-12);
            assert!(pulse_reference(&p, 1.5, 0.6, 1.5, t).abs() < 1e-12);
        }
        assert!((pulse_reference(&p, 1.5, 0.6, 0.75, 0.0) - 1.0).abs() < 1e-12);
        // after one full round trip (2L / c) the profile is restored
        let t = 3.0 / 0.6;
        for x in [0.3, 0.75, 1.2] {
            assert!((pulse_reference(&p, 1.5, 0.6, x, t) - p.profile(x)).abs() < 1e-12);
        }
    }
}
