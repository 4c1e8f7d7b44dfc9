//! CSV, SVG and summary emission for the experiment reports.

use std::path::Path;

use serde::Serialize;

use crate::experiments::{DriftReport, EigenReport, MmsReport, Model, ProbeSample, PulseReport, RigidityReport};
use crate::plot::{Axis, Chart, Series};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_svg(dir: &Path, name: &str, chart: &Chart) -> Result<()> {
    std::fs::write(dir.join(name), chart.render()).map_err(io)
}

#[derive(Serialize)]
struct TimeRow {
    step: usize,
    t: f64,
    probe_id: usize,
    x: f64,
    y: f64,
    ux: f64,
    uy: f64,
    theta: f64,
    energy_kinetic: f64,
    energy_strain: f64,
    energy_curvature: f64,
    energy_total: f64,
}

fn write_timeseries(path: &Path, samples: &[ProbeSample]) -> Result<()> {
    write_rows(
        path,
        samples.iter().map(|s| TimeRow {
            step: s.step,
            t: s.t,
            probe_id: s.probe_id,
            x: s.x,
            y: s.y,
            ux: s.ux,
            uy: s.uy,
            theta: s.theta,
            energy_kinetic: s.energy.kinetic,
            energy_strain: s.energy.strain,
            energy_curvature: s.energy.curvature,
            energy_total: s.energy.total,
        }),
    )
}

pub fn rigidity(dir: &Path, r: &RigidityReport, svg: bool) -> Result<Vec<String>> {
    #[derive(Serialize)]
    struct Row {
        h_over_l: f64,
        eta: f64,
        #[serde(rename = "K")]
        k: f64,
        #[serde(rename = "K_ratio")]
        k_ratio: f64,
    }
    write_rows(
        &dir.join("rigidity.csv"),
        r.rows.iter().map(|row| Row {
            h_over_l: row.h_over_l,
            eta: row.eta,
            k: row.stiffness,
            k_ratio: row.ratio,
        }),
    )?;
    if svg {
        let chart = Chart {
            title: "Tip stiffness over its classical value".into(),
            x_label: "h / l".into(),
            y_label: "K / K_classical".into(),
            x_axis: Axis::Log,
            y_axis: Axis::Log,
            series: vec![Series {
                label: "couple-stress".into(),
                points: r.rows.iter().map(|row| (row.h_over_l, row.ratio)).collect(),
            }],
        };
        write_svg(dir, "rigidity.svg", &chart)?;
    }
    let mut lines = vec![format!("classical stiffness 3EI/L^3 = {:e}", r.classical_stiffness)];
    for row in &r.rows {
        lines.push(format!(
            "h/l = {:>8}  eta = {:<12.6e}  K = {:<12.6e}  K/K_classical = {:.4}",
            row.h_over_l, row.eta, row.stiffness, row.ratio
        ));
    }
    Ok(lines)
}

pub fn mms(dir: &Path, r: &MmsReport, svg: bool) -> Result<Vec<String>> {
    #[derive(Serialize)]
    struct Row {
        n_elements: usize,
        mesh_size: f64,
        l2_error: f64,
        divisions: usize,
        relative_error: f64,
    }
    write_rows(
        &dir.join("mms.csv"),
        r.rows.iter().map(|row| Row {
            n_elements: row.n_elements,
            mesh_size: row.mesh_size,
            l2_error: row.l2_error,
            divisions: row.divisions,
            relative_error: row.relative_error,
        }),
    )?;
    if svg {
        let chart = Chart {
            title: "Manufactured solution, L2 error".into(),
            x_label: "elements".into(),
            y_label: "absolute L2 error".into(),
            x_axis: Axis::Log,
            y_axis: Axis::Log,
            series: vec![Series {
                label: "L2(V)".into(),
                points: r.rows.iter().map(|row| (row.n_elements as f64, row.l2_error)).collect(),
            }],
        };
        write_svg(dir, "mms.svg", &chart)?;
    }
    let mut lines: Vec<String> = r
        .rows
        .iter()
        .map(|row| {
            format!(
                "n = {:>3}  elements = {:>5}  h = {:.4}  L2 = {:.4e}  relative = {:.4e}",
                row.divisions, row.n_elements, row.mesh_size, row.l2_error, row.relative_error
            )
        })
        .collect();
    lines.push(format!("strictly decreasing: {}", r.strictly_decreasing));
    lines.push(format!(
        "slope over the {} finest meshes: {:.3} vs elements, {:.3} vs elements per side, {:.3} vs mesh size",
        r.rows.len() - r.fit_from,
        r.slope_vs_elements,
        r.slope_vs_divisions,
        r.slope_vs_mesh_size
    ));
    Ok(lines)
}

pub fn eigen(dir: &Path, r: &EigenReport, svg: bool) -> Result<Vec<String>> {
    #[derive(Serialize)]
    struct Row {
        model: &'static str,
        index0: usize,
        index1: usize,
        omega: f64,
        axial_fraction: f64,
        longitudinal: bool,
    }
    write_rows(
        &dir.join("modes.csv"),
        r.tables.iter().flat_map(|t| {
            t.modes.iter().enumerate().map(move |(i, m)| Row {
                model: t.model.name(),
                index0: i,
                index1: i + 1,
                omega: m.omega,
                axial_fraction: m.axial_fraction,
                longitudinal: i == t.longitudinal,
            })
        }),
    )?;
    let mut lines = Vec::new();
    for t in &r.tables {
        let l = t.longitudinal;
        lines.push(format!(
            "{}: first omega = {:.6}, longitudinal mode index {} (1-based {}) omega = {:.6}",
            t.model.name(),
            t.modes[0].omega,
            l,
            l + 1,
            t.modes[l].omega
        ));
    }
    for run in &r.runs {
        write_timeseries(&dir.join(format!("timeseries_{}.csv", run.model.name())), &run.samples)?;
        lines.push(format!(
            "{}: mode index {} (1-based {}) omega = {:.6}, 2pi/omega = {:.4}, observed period = {}, peak ratio = {:.6}, final energy ratio = {:.6}",
            run.model.name(),
            run.mode,
            run.mode + 1,
            run.omega,
            std::f64::consts::TAU / run.omega,
            run.observed_period.map_or("n/a".into(), |p| format!("{p:.4}")),
            run.peak_ratio,
            run.final_energy_ratio()
        ));
    }
    if svg {
        let series = r
            .runs
            .iter()
            .map(|run| {
                let (probe, comp) = run.traced;
                Series {
                    label: format!("{} probe {probe}", run.model.name()),
                    points: run
                        .samples
                        .iter()
                        .filter(|s| s.probe_id == probe)
                        .map(|s| (s.t, if comp == 0 { s.ux } else { s.uy }))
                        .collect(),
                }
            })
            .collect();
        let chart = Chart {
            title: "Eigenstate evolution".into(),
            x_label: "t".into(),
            y_label: "displacement".into(),
            x_axis: Axis::Linear,
            y_axis: Axis::Linear,
            series,
        };
        write_svg(dir, "eigen.svg", &chart)?;
    }
    Ok(lines)
}

pub fn drift(dir: &Path, r: &DriftReport, svg: bool) -> Result<Vec<String>> {
    #[derive(Serialize)]
    struct Row {
        model: &'static str,
        dt: f64,
        step: usize,
        t: f64,
        energy_ratio: f64,
    }
    write_rows(
        &dir.join("energy.csv"),
        r.runs.iter().flat_map(|run| {
            let e0 = run.energy[0];
            run.energy.iter().enumerate().map(move |(k, e)| Row {
                model: run.model.name(),
                dt: run.dt,
                step: k,
                t: k as f64 * run.dt,
                energy_ratio: e / e0,
            })
        }),
    )?;
    #[derive(Serialize)]
    struct Summary {
        model: &'static str,
        dt: f64,
        index0: usize,
        index1: usize,
        omega: f64,
        final_ratio: f64,
        drift: f64,
        max_ratio: f64,
    }
    write_rows(
        &dir.join("drift.csv"),
        r.runs.iter().map(|run| Summary {
            model: run.model.name(),
            dt: run.dt,
            index0: run.mode,
            index1: run.mode + 1,
            omega: run.omega,
            final_ratio: run.final_energy_ratio(),
            drift: 1.0 - run.final_energy_ratio(),
            max_ratio: run.max_energy_ratio(),
        }),
    )?;
    let mut lines = Vec::new();
    for run in &r.runs {
        lines.push(format!(
            "{:<9} dt = {:<5} omega = {:.6}  E(tf)/E(0) = {:.6}  max E/E(0) = {:.12}",
            run.model.name(),
            run.dt,
            run.omega,
            run.final_energy_ratio(),
            run.max_energy_ratio()
        ));
    }
    let mut dts: Vec<f64> = r.runs.iter().map(|run| run.dt).collect();
    dts.dedup();
    for dt in dts {
        if let (Some(c), Some(k)) = (r.run(Model::Ccst, dt), r.run(Model::Classical, dt)) {
            let (dc, dk) = (1.0 - c.final_energy_ratio(), 1.0 - k.final_energy_ratio());
            lines.push(format!(
                "dt = {dt}: energy loss ccst / classical = {:.3} (log-ratio {:.3})",
                dc / dk,
                c.final_energy_ratio().ln() / k.final_energy_ratio().ln()
            ));
        }
    }
    if svg {
        let series = r
            .runs
            .iter()
            .map(|run| {
                let e0 = run.energy[0];
                let stride = (run.energy.len() / 2000).max(1);
                Series {
                    label: format!("{} dt={}", run.model.name(), run.dt),
                    points: run
                        .energy
                        .iter()
                        .enumerate()
                        .step_by(stride)
                        .map(|(k, e)| (k as f64 * run.dt, e / e0))
                        .collect(),
                }
            })
            .collect();
        let chart = Chart {
            title: "Energy ratio E(t)/E(0)".into(),
            x_label: "t".into(),
            y_label: "E / E0".into(),
            x_axis: Axis::Linear,
            y_axis: Axis::Linear,
            series,
        };
        write_svg(dir, "energy.svg", &chart)?;
    }
    Ok(lines)
}

pub fn pulse(dir: &Path, r: &PulseReport, svg: bool) -> Result<Vec<String>> {
    #[derive(Serialize)]
    struct Row {
        model: &'static str,
        step: usize,
        t: f64,
        x: f64,
        uy: f64,
        reference: f64,
    }
    write_rows(
        &dir.join("profiles.csv"),
        r.snapshots.iter().flat_map(|s| {
            s.profile.iter().map(move |&(x, uy, reference)| Row {
                model: s.model.name(),
                step: s.step,
                t: s.t,
                x,
                uy,
                reference,
            })
        }),
    )?;
    #[derive(Serialize)]
    struct Corr {
        model: &'static str,
        step: usize,
        t: f64,
        correlation: f64,
    }
    write_rows(
        &dir.join("correlation.csv"),
        r.snapshots.iter().map(|s| Corr {
            model: s.model.name(),
            step: s.step,
            t: s.t,
            correlation: s.correlation,
        }),
    )?;
    for (model, samples) in &r.series {
        write_timeseries(&dir.join(format!("timeseries_{}.csv", model.name())), samples)?;
    }
    let mut lines = vec![format!(
        "shear wave speed c2 = {:.6}, length scale l = {:.6}",
        r.wave_speed, r.length_scale
    )];
    for s in &r.snapshots {
        lines.push(format!("{:<9} t = {:.3}  correlation = {:.4}", s.model.name(), s.t, s.correlation));
    }
    if svg {
        let last = r.snapshots.iter().map(|s| s.step).max().unwrap_or(0);
        let mut series: Vec<Series> = r
            .snapshots
            .iter()
            .filter(|s| s.step == last)
            .map(|s| Series {
                label: s.model.name().into(),
                points: s.profile.iter().map(|p| (p.0, p.1)).collect(),
            })
            .collect();
        if let Some(s) = r.snapshots.iter().find(|s| s.step == last) {
            series.push(Series {
                label: "reference".into(),
                points: s.profile.iter().map(|p| (p.0, p.2)).collect(),
            });
        }
        let chart = Chart {
            title: "u_y along the profile line at the final time".into(),
            x_label: "x".into(),
            y_label: "u_y".into(),
            x_axis: Axis::Linear,
            y_axis: Axis::Linear,
            series,
        };
        write_svg(dir, "pulse.svg", &chart)?;
    }
    Ok(lines)
}
