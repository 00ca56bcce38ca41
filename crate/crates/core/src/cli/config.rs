use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::fem::PiecewiseConstant;
use crate::lab::REFINEMENT_VERTEX_CAP;
use crate::mesh::InterfaceCurve;
use crate::optim::RunConfig;
use crate::vi::Obstacle;

/// Everything a command can be configured with. Every section and key has a
/// default; unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub problem: ProblemConfig,
    pub mesh: MeshConfig,
    pub target: TargetConfig,
    pub run: RunConfig,
    pub solve: SolveConfig,
    pub study: StudyConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// `phi1`, `phi2` or an expression in `x1`, `x2`.
    pub obstacle: String,
    pub f_inner: f64,
    pub f_outer: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig { obstacle: "phi1".into(), f_inner: 100.0, f_outer: -10.0 }
    }
}

impl ProblemConfig {
    pub fn obstacle(&self) -> Result<Obstacle, CliError> {
        match self.obstacle.as_str() {
            "phi1" => Ok(Obstacle::phi1()),
            "phi2" => Ok(Obstacle::phi2()),
            src => Obstacle::expression(src).map_err(|e| CliError::Config(format!("problem.obstacle: {e}"))),
        }
    }

    pub fn source(&self) -> PiecewiseConstant {
        PiecewiseConstant::new(self.f_inner, self.f_outer)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// Initial interface, meshed with edge length `h` unless `file` is set.
    pub initial: InterfaceCurve,
    pub h: f64,
    pub file: Option<PathBuf>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { initial: InterfaceCurve::circle([0.5, 0.5], 0.15), h: 0.024, file: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetConfig {
    /// Interface of the mesh on which `ȳ` is computed.
    pub curve: InterfaceCurve,
    pub h: f64,
    pub tol: f64,
    /// Precomputed target: both files must be given together.
    pub mesh_file: Option<PathBuf>,
    pub field_file: Option<PathBuf>,
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig {
            curve: InterfaceCurve::ellipse([0.5, 0.5], [0.2, 0.13], 0.0),
            h: 0.024,
            tol: 1e-10,
            mesh_file: None,
            field_file: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Pdas,
    Psor,
    Regularized,
    Smoothed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub method: SolveMethod,
    pub psor_tol: f64,
    pub psor_max_iter: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { method: SolveMethod::Pdas, psor_tol: 1e-12, psor_max_iter: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub c_list: Vec<f64>,
    pub gamma_list: Vec<f64>,
    pub levels: usize,
    pub refinement_gamma: f64,
    pub refinement_c: f64,
    pub vertex_cap: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            c_list: vec![1e2, 1e3, 1e4, 1e5],
            gamma_list: vec![10.0, 1e2, 1e3, 1e4, 1e5],
            levels: 3,
            refinement_gamma: 1e8,
            refinement_c: 1e5,
            vertex_cap: REFINEMENT_VERTEX_CAP,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Mesh snapshot every this many optimizer steps, 0 for none.
    pub snapshot_every: usize,
    /// Also write legacy VTK files next to every field.
    pub vtk: bool,
}

/// Parses `value` as a TOML value, falling back to a plain string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies a `section.key=value` override to a raw config table.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("override `{spec}` has an empty key")));
    }
    let mut node = table;
    for k in &keys[..keys.len() - 1] {
        let entry = node.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{spec}`: `{k}` is not a section")))?;
    }
    node.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Builds the config from file contents and overrides. `run.mu_max` follows
/// the obstacle (55 for `phi2`) unless given explicitly.
pub fn resolve(text: Option<&str>, overrides: &[String]) -> Result<Config, CliError> {
    let mut table: toml::Table = match text {
        Some(t) => toml::from_str(t).map_err(|e| CliError::Config(e.to_string()))?,
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mu_max_given = table
        .get("run")
        .and_then(|r| r.as_table())
        .is_some_and(|r| r.contains_key("mu_max"));
    let mut cfg: Config = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    if !mu_max_given {
        cfg.run.mu_max = RunConfig::for_obstacle(&cfg.problem.obstacle).mu_max;
    }
    cfg.run.validate().map_err(|e| CliError::Config(format!("run: {e}")))?;
    cfg.problem.obstacle()?;
    if cfg.target.mesh_file.is_some() != cfg.target.field_file.is_some() {
        return Err(CliError::Config("target.mesh_file and target.field_file go together".into()));
    }
    for (name, h) in [("mesh.h", cfg.mesh.h), ("target.h", cfg.target.h)] {
        if !(h > 0.0 && h < 1.0) {
            return Err(CliError::Config(format!("{name} must lie in (0, 1), got {h}")));
        }
    }
    Ok(cfg)
}
