//! Experiment configuration.
//!
//! A config file is TOML. Every key is optional: the file is laid over the
//! defaults of the chosen experiment, and the merged result is validated and
//! echoed next to the outputs. Sections:
//!
//! ```toml
//! experiment = "pulse"          # optional; must match the subcommand
//!
//! [geometry]   width, height, nx, ny
//! [material]   E, nu, rho, eta
//! [load]       tip_load                      # total load on the free edge
//! [time]       dt, t_final, start_rule       # "taylor" | "first-order"
//! [modes]      count, mode                   # mode is 1-based
//! [probes]     points = [[x, y], ...]
//! [sweep]      h_over_l, mesh_sizes, dt_values, fit_points
//! [pulse]      sharpness, profile_y, profile_stride
//! [output]     vtk_stride, svg                # vtk_stride = 0 disables snapshots
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ccst_core::dynamics::StartRule;
use ccst_core::{CoreError, Material};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CantileverRigidity,
    MmsStatic,
    EigenEvolve,
    EnergyDrift,
    Pulse,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::CantileverRigidity,
        Experiment::MmsStatic,
        Experiment::EigenEvolve,
        Experiment::EnergyDrift,
        Experiment::Pulse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::CantileverRigidity => "cantilever-rigidity",
            Experiment::MmsStatic => "mms-static",
            Experiment::EigenEvolve => "eigen-evolve",
            Experiment::EnergyDrift => "energy-drift",
            Experiment::Pulse => "pulse",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartRuleName {
    Taylor,
    FirstOrder,
}

impl From<StartRuleName> for StartRule {
    fn from(r: StartRuleName) -> Self {
        match r {
            StartRuleName::Taylor => StartRule::Taylor,
            StartRuleName::FirstOrder => StartRule::FirstOrder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    #[serde(rename = "E")]
    pub e: f64,
    pub nu: f64,
    pub rho: f64,
    pub eta: f64,
}

impl MaterialParams {
    pub fn build(&self) -> Result<Material<f64>, CliError> {
        Material::new(self.e, self.nu, self.rho, self.eta).map_err(|e| match e {
            CoreError::InvalidParameter { field, value, reason } => {
                CliError::Config(format!("material.{field} = {value}: {reason}"))
            }
            other => CliError::Config(other.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub tip_load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Time {
    pub dt: f64,
    pub t_final: f64,
    pub start_rule: StartRuleName,
}

impl Time {
    /// Steps needed to reach `t_final`, rounded to the nearest integer.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modes {
    pub count: usize,
    pub mode: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probes {
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub h_over_l: Vec<f64>,
    pub mesh_sizes: Vec<f64>,
    pub dt_values: Vec<f64>,
    /// Finest meshes used for the convergence slope.
    pub fit_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub sharpness: f64,
    pub profile_y: f64,
    pub profile_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub vtk_stride: usize,
    pub svg: bool,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub geometry: Geometry,
    pub material: MaterialParams,
    pub load: Load,
    pub time: Time,
    pub modes: Modes,
    pub probes: Probes,
    pub sweep: Sweep,
    pub pulse: Pulse,
    pub output: Output,
}

/// Mesh sizes of the static convergence ladder.
pub const MMS_LADDER: [f64; 8] = [0.56, 0.31, 0.17, 0.1, 0.05, 0.03, 0.017, 0.01];

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let beam = Geometry {
            width: 10.0,
            height: 1.0,
            nx: 24,
            ny: 2,
        };
        let beam_material = MaterialParams {
            e: 1.0,
            nu: 0.29,
            rho: 1.0,
            eta: 0.1,
        };
        let axis = (1..=4).map(|k| [2.5 * k as f64, 0.5]).collect();
        let mut cfg = ExperimentConfig {
            experiment,
            geometry: beam,
            material: beam_material,
            load: Load { tip_load: 1.0 },
            time: Time {
                dt: 0.5,
                t_final: 500.0,
                start_rule: StartRuleName::Taylor,
            },
            modes: Modes { count: 16, mode: 1 },
            probes: Probes { points: axis },
            sweep: Sweep {
                h_over_l: vec![100.0, 30.0, 10.0, 3.0, 1.0, 0.3],
                mesh_sizes: MMS_LADDER[..6].to_vec(),
                dt_values: vec![0.1, 0.05, 0.01],
                fit_points: 3,
            },
            pulse: Pulse {
                sharpness: 100.0,
                profile_y: 0.15,
                profile_stride: 500,
            },
            output: Output {
                vtk_stride: 0,
                svg: true,
            },
        };
        match experiment {
            Experiment::CantileverRigidity => {
                cfg.geometry = Geometry {
                    width: 20.0,
                    height: 1.0,
                    nx: 40,
                    ny: 4,
                };
                cfg.material = MaterialParams {
                    e: 2.0,
                    nu: 0.0,
                    rho: 1.0,
                    eta: 0.0,
                };
            }
            Experiment::MmsStatic => {
                cfg.geometry = Geometry {
                    width: 1.0,
                    height: 1.0,
                    nx: 1,
                    ny: 1,
                };
                cfg.material.eta = 0.001;
                cfg.probes.points.clear();
            }
            Experiment::EigenEvolve => cfg.output.vtk_stride = 100,
            Experiment::EnergyDrift => {
                cfg.modes.mode = 5;
                cfg.time.t_final = 100.0;
                cfg.time.dt = 0.05;
            }
            Experiment::Pulse => {
                cfg.geometry = Geometry {
                    width: 1.5,
                    height: 0.3,
                    nx: 30,
                    ny: 6,
                };
                cfg.material.eta = 0.001;
                cfg.time.dt = 0.001;
                cfg.time.t_final = 3.5;
                cfg.probes.points = vec![[0.375, 0.15], [0.75, 0.15], [1.125, 0.15]];
                cfg.output.vtk_stride = 500;
            }
        }
        cfg
    }

    /// Lays `text` (TOML) over the defaults of `experiment` and validates.
    pub fn from_toml(experiment: Experiment, text: &str) -> Result<Self, CliError> {
        let user: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(v) = user.get("experiment") {
            let named = v
                .as_str()
                .ok_or_else(|| CliError::Config("`experiment` must be a string".into()))?;
            let named: Experiment = named.parse()?;
            if named != experiment {
                return Err(CliError::Config(format!(
                    "config is for `{named}` but `{experiment}` was requested"
                )));
            }
        }
        let defaults = toml::Table::try_from(Self::defaults(experiment)).expect("defaults serialize");
        let merged = merge(defaults, user);
        let cfg: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(experiment: Experiment, path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(experiment, &text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: &str| Err(CliError::Config(format!("{field}: {why}")));
        let g = &self.geometry;
        if !(g.width > 0.0 && g.width.is_finite()) {
            return bad("geometry.width", "must be positive");
        }
        if !(g.height > 0.0 && g.height.is_finite()) {
            return bad("geometry.height", "must be positive");
        }
        if g.nx == 0 || g.ny == 0 {
            return bad("geometry.nx/ny", "need at least one element per axis");
        }
        self.material.build()?;
        if !self.load.tip_load.is_finite() || self.load.tip_load == 0.0 {
            return bad("load.tip_load", "must be finite and nonzero");
        }
        if !(self.time.dt > 0.0 && self.time.dt.is_finite()) {
            return bad("time.dt", "must be positive");
        }
        if !(self.time.t_final > 0.0 && self.time.t_final.is_finite()) {
            return bad("time.t_final", "must be positive");
        }
        if self.time.steps() == 0 {
            return bad("time.t_final", "shorter than one time step");
        }
        if self.modes.count == 0 {
            return bad("modes.count", "must be at least 1");
        }
        if self.modes.mode == 0 || self.modes.mode > self.modes.count {
            return bad("modes.mode", "1-based index must lie in 1..=modes.count");
        }
        for p in &self.probes.points {
            if !(0.0..=g.width).contains(&p[0]) || !(0.0..=g.height).contains(&p[1]) {
                return bad("probes.points", "every point must lie inside the domain");
            }
        }
        let positive = |v: &[f64]| !v.is_empty() && v.iter().all(|x| *x > 0.0 && x.is_finite());
        match self.experiment {
            Experiment::CantileverRigidity if !positive(&self.sweep.h_over_l) => {
                return bad("sweep.h_over_l", "needs positive values");
            }
            Experiment::MmsStatic => {
                if !positive(&self.sweep.mesh_sizes) || self.sweep.mesh_sizes.iter().any(|h| *h > 1.0) {
                    return bad("sweep.mesh_sizes", "needs values in (0, 1]");
                }
                if self.sweep.fit_points < 2 || self.sweep.fit_points > self.sweep.mesh_sizes.len() {
                    return bad("sweep.fit_points", "must lie in 2..=len(mesh_sizes)");
                }
            }
            Experiment::EnergyDrift if !positive(&self.sweep.dt_values) => {
                return bad("sweep.dt_values", "needs positive values");
            }
            Experiment::EigenEvolve | Experiment::EnergyDrift | Experiment::Pulse if self.material.eta <= 0.0 => {
                return bad("material.eta", "dynamic runs need eta > 0 (the classical twin runs alongside)");
            }
            Experiment::Pulse => {
                if !(self.pulse.sharpness > 0.0) {
                    return bad("pulse.sharpness", "must be positive");
                }
                if !(0.0..=g.height).contains(&self.pulse.profile_y) {
                    return bad("pulse.profile_y", "must lie inside the strip");
                }
                if self.pulse.profile_stride == 0 {
                    return bad("pulse.profile_stride", "must be at least 1");
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Recursive overlay of `user` on `base`; tables merge, everything else replaces.
fn merge(mut base: toml::Table, user: toml::Table) -> toml::Table {
    for (k, v) in user {
        match (base.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => {
                base.insert(k, toml::Value::Table(merge(b, u)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}
