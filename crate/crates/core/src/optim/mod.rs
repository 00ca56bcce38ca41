//! Outer optimization: objective evaluation, backtracking linesearch and the
//! safeguarded steepest descent loop.

mod history;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adjoint::{detect_active_set, solve_adjoint_limit, solve_adjoint_smoothed, tracking_integral};
use crate::error::{Error, Result};
use crate::fem::{sample_target, EllipticCoefficients, PiecewiseConstant, ScalarField, TargetField, TargetSamples, VectorField};
use crate::mesh::{interface_length, TriangleMesh};
use crate::par::Parallelism;
use crate::shape::{
    assemble_dj_limit, assemble_dj_smoothed, mask_to_interface, perimeter_functional, shape_gradient, solve_mu_elas,
    ShapeGradient,
};
use crate::vi::{solve_state_smoothed, solve_vi_pdas_from, DiscreteProblem, Obstacle, PdasSolution, Smoother};

pub use history::{write_history_csv, write_interface_csv, HISTORY_HEADER};

/// Scalar parameters of an optimization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Perimeter weight.
    pub nu: f64,
    pub gamma: f64,
    pub c: f64,
    pub eps_state: f64,
    pub eps_adj: f64,
    pub eps_shape: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub lambda_elas: f64,
    pub max_iters: usize,
    pub ls_shrink: f64,
    pub ls_accept: f64,
    pub ls_max_halvings: usize,
    /// Compare `𝒥 + ν·perimeter` instead of `𝒥` in the linesearch.
    pub perimeter_in_acceptance: bool,
    /// Start each active set iteration from the previous step's active set.
    pub warm_start: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nu: 1e-5,
            gamma: 1e4,
            c: 1e8,
            eps_state: 3e-4,
            eps_adj: 1e-9,
            eps_shape: 1e-6,
            mu_min: 0.0,
            mu_max: 25.0,
            lambda_elas: 0.0,
            max_iters: 500,
            ls_shrink: 0.5,
            ls_accept: 0.995,
            ls_max_halvings: 30,
            perimeter_in_acceptance: false,
            warm_start: false,
        }
    }
}

impl RunConfig {
    /// Defaults with the elasticity stiffness used for the named obstacle
    /// (`μ_max = 55` for `phi2`, 25 otherwise).
    pub fn for_obstacle(name: &str) -> Self {
        let mut cfg = RunConfig::default();
        if name == "phi2" {
            cfg.mu_max = 55.0;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nu", self.nu, true),
            ("gamma", self.gamma, false),
            ("c", self.c, false),
            ("eps_state", self.eps_state, false),
            ("eps_adj", self.eps_adj, true),
            ("eps_shape", self.eps_shape, false),
            ("mu_min", self.mu_min, true),
            ("mu_max", self.mu_max, false),
            ("lambda_elas", self.lambda_elas, true),
        ];
        for (name, v, zero_ok) in positive {
            let ok = if zero_ok { v >= 0.0 } else { v > 0.0 };
            if !ok || !v.is_finite() {
                let bound = if zero_ok { ">= 0" } else { "> 0" };
                return Err(Error::InvalidParameter(format!("{name} must be finite and {bound}, got {v}")));
            }
        }
        if self.mu_min > self.mu_max {
            return Err(Error::InvalidParameter(format!("mu_min {} exceeds mu_max {}", self.mu_min, self.mu_max)));
        }
        for (name, v) in [("ls_shrink", self.ls_shrink), ("ls_accept", self.ls_accept)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

/// The fixed ingredients of the state equation.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub coeffs: EllipticCoefficients,
    pub f: PiecewiseConstant,
    pub obstacle: Obstacle,
    pub mode: Parallelism,
}

impl Scenario {
    /// Laplacian with the given source and obstacle.
    pub fn laplacian(f: PiecewiseConstant, obstacle: Obstacle) -> Self {
        Scenario { coeffs: EllipticCoefficients::laplacian(), f, obstacle, mode: Parallelism::default() }
    }

    pub fn problem(&self, mesh: &TriangleMesh) -> Result<DiscreteProblem> {
        DiscreteProblem::with_mode(mesh, &self.coeffs, self.f, &self.obstacle, self.mode)
    }
}

/// `J = 𝒥 + ν·perimeter`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objective {
    pub total: f64,
    pub tracking: f64,
    pub perimeter: f64,
}

impl Objective {
    fn acceptance_value(&self, cfg: &RunConfig) -> f64 {
        if cfg.perimeter_in_acceptance {
            self.total
        } else {
            self.tracking
        }
    }
}

pub fn evaluate_objective(mesh: &TriangleMesh, y: &[f64], ybar: &TargetSamples, nu: f64) -> Result<Objective> {
    let tracking = tracking_integral(mesh, y, ybar)?;
    let perimeter = interface_length(mesh);
    Ok(Objective { total: tracking + nu * perimeter, tracking, perimeter })
}

/// State, target samples and objective on one mesh.
#[derive(Clone, Debug)]
pub struct StateEval {
    pub problem: DiscreteProblem,
    pub samples: TargetSamples,
    pub pdas: PdasSolution,
    pub objective: Objective,
}

impl StateEval {
    pub fn mesh(&self) -> &TriangleMesh {
        &self.problem.mesh
    }
}

/// Solves the VI on `mesh` and evaluates the objective against `target`.
pub fn evaluate_state(
    mesh: &TriangleMesh,
    scenario: &Scenario,
    target: &dyn TargetField,
    cfg: &RunConfig,
) -> Result<StateEval> {
    evaluate_state_from(mesh, scenario, target, cfg, None)
}

/// [`evaluate_state`] with the active set iteration started from `active`.
pub fn evaluate_state_from(
    mesh: &TriangleMesh,
    scenario: &Scenario,
    target: &dyn TargetField,
    cfg: &RunConfig,
    active: Option<&[bool]>,
) -> Result<StateEval> {
    let problem = scenario.problem(mesh)?;
    let samples = sample_target(mesh, target, scenario.mode)?;
    let pdas = solve_vi_pdas_from(&problem, cfg.eps_state, active)?;
    let objective = evaluate_objective(mesh, &pdas.y, &samples, cfg.nu)?;
    Ok(StateEval { problem, samples, pdas, objective })
}

/// An accepted linesearch step.
#[derive(Clone, Debug)]
pub struct Accepted<T> {
    pub mesh: TriangleMesh,
    pub eval: T,
    pub objective: Objective,
    pub halvings: usize,
}

/// Backtracking: tries `x + s·u` for `s = 1, ρ, ρ², …` and accepts the first
/// trial with `𝒥' ≤ ls_accept·𝒥`. Inverted trial meshes are rejections.
/// Returns `None` when `ls_max_halvings` halvings did not produce descent.
pub fn linesearch<T>(
    mesh: &TriangleMesh,
    u: &VectorField,
    current: &Objective,
    cfg: &RunConfig,
    mut solve: impl FnMut(&TriangleMesh) -> Result<(T, Objective)>,
) -> Result<Option<Accepted<T>>> {
    let bound = cfg.ls_accept * current.acceptance_value(cfg);
    let mut scale = 1.0;
    for halvings in 0..=cfg.ls_max_halvings {
        match mesh.deform(&u.scaled(scale)) {
            Ok(trial) => {
                let (eval, objective) = solve(&trial)?;
                if objective.acceptance_value(cfg) <= bound {
                    return Ok(Some(Accepted { mesh: trial, eval, objective, halvings }));
                }
            }
            Err(Error::CellInversion { .. }) => {}
            Err(e) => return Err(e),
        }
        scale *= cfg.ls_shrink;
    }
    Ok(None)
}

/// One row of the optimization history. Objective values and gradient norms
/// refer to the mesh at the start of the step.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub step: usize,
    pub objective: f64,
    pub tracking: f64,
    pub perimeter: f64,
    /// `‖U‖ = sqrt(DJ[U])` of the limit derivative.
    pub grad_norm: f64,
    /// Same for the fully regularized derivative, when it was computed.
    pub grad_norm_smoothed: Option<f64>,
    /// Halvings of the accepted step, `None` if no step was taken.
    pub halvings: Option<usize>,
    /// The step used the fully regularized gradient.
    pub safeguard: bool,
    pub active_vertices: usize,
    pub min_quality: f64,
    pub snapshot: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct OptimizeResult {
    pub history: Vec<IterationRecord>,
    pub mesh: TriangleMesh,
    pub state: ScalarField,
    /// Both gradient norms fell below `eps_shape`.
    pub converged: bool,
    /// Neither gradient produced a descent step.
    pub stalled: bool,
}

impl OptimizeResult {
    pub fn initial_tracking(&self) -> f64 {
        self.history.first().map_or(f64::NAN, |r| r.tracking)
    }

    pub fn final_tracking(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.tracking)
    }

    /// Steps where the safeguard replaced the limit gradient.
    pub fn safeguard_steps(&self) -> usize {
        self.history.iter().filter(|r| r.safeguard).count()
    }
}

/// Observer called with every record and the mesh it refers to. The returned
/// path, if any, is stored as the record's snapshot.
pub type Observer<'a> = dyn FnMut(&IterationRecord, &TriangleMesh) -> Result<Option<PathBuf>> + 'a;

/// Safeguarded descent with the Laplacian state equation.
pub fn optimize(
    cfg: &RunConfig,
    initial_mesh: TriangleMesh,
    target: Arc<dyn TargetField>,
    obstacle: &Obstacle,
    f: PiecewiseConstant,
) -> Result<OptimizeResult> {
    let scenario = Scenario::laplacian(f, obstacle.clone());
    optimize_with(cfg, initial_mesh, &scenario, target.as_ref(), &mut |_, _| Ok(None))
}

/// Masked limit derivative plus perimeter term and its elasticity gradient.
pub fn limit_gradient(eval: &StateEval, cfg: &RunConfig, mu: &ScalarField) -> Result<ShapeGradient> {
    let p = &eval.problem;
    let y = &eval.pdas.y;
    let active = detect_active_set(p, y, cfg.eps_adj)?;
    let adj = solve_adjoint_limit(p, y, &eval.samples, &active)?;
    let mut dj = assemble_dj_limit(p, y, &adj, &eval.samples, &active)?;
    dj.add(&perimeter_functional(&p.mesh, cfg.nu));
    shape_gradient(&p.mesh, &mask_to_interface(&dj, &p.mesh), mu, cfg.lambda_elas)
}

/// Same as [`limit_gradient`] for the fully regularized problem.
pub fn smoothed_gradient(eval: &StateEval, cfg: &RunConfig, mu: &ScalarField) -> Result<ShapeGradient> {
    let p = &eval.problem;
    let reg = p.regularization(cfg.c)?;
    let sm = Smoother::new(cfg.gamma)?;
    let y = solve_state_smoothed(p, &reg, &sm, cfg.eps_state)?;
    let adj = solve_adjoint_smoothed(p, &y, &eval.samples, &reg, &sm)?;
    let mut dj = assemble_dj_smoothed(p, &y, &adj, &eval.samples, &reg, &sm)?;
    dj.add(&perimeter_functional(&p.mesh, cfg.nu));
    shape_gradient(&p.mesh, &mask_to_interface(&dj, &p.mesh), mu, cfg.lambda_elas)
}

/// The safeguarded loop. Each step takes the limit gradient from the VI state
/// and the active-set adjoint. When that gradient is below `eps_shape` or its
/// linesearch fails, the fully regularized gradient is computed; the run stops
/// if it is also small, and otherwise steps along it.
pub fn optimize_with(
    cfg: &RunConfig,
    initial_mesh: TriangleMesh,
    scenario: &Scenario,
    target: &dyn TargetField,
    observer: &mut Observer<'_>,
) -> Result<OptimizeResult> {
    cfg.validate()?;
    let mut eval = evaluate_state(&initial_mesh, scenario, target, cfg)?;
    let mut history = Vec::new();
    let mut converged = false;
    let mut stalled = false;

    for step in 0..=cfg.max_iters {
        let mesh = eval.mesh().clone();
        let mu = solve_mu_elas(&mesh, cfg.mu_min, cfg.mu_max)?;
        let grad = limit_gradient(&eval, cfg, &mu)?;
        let mut record = IterationRecord {
            step,
            objective: eval.objective.total,
            tracking: eval.objective.tracking,
            perimeter: eval.objective.perimeter,
            grad_norm: grad.norm,
            grad_norm_smoothed: None,
            halvings: None,
            safeguard: false,
            active_vertices: eval.pdas.active_count(),
            min_quality: mesh.min_quality(),
            snapshot: None,
        };

        if step == cfg.max_iters {
            record.snapshot = observer(&record, &mesh)?;
            history.push(record);
            break;
        }
        let warm = cfg.warm_start.then(|| eval.pdas.active.clone());
        let solve = |m: &TriangleMesh| {
            evaluate_state_from(m, scenario, target, cfg, warm.as_deref()).map(|e| {
                let o = e.objective;
                (e, o)
            })
        };
        let mut accepted = None;
        if grad.norm > cfg.eps_shape {
            accepted = linesearch(&mesh, &grad.field.scaled(-1.0), &eval.objective, cfg, solve)?;
        }
        if accepted.is_none() {
            let smoothed = smoothed_gradient(&eval, cfg, &mu)?;
            record.grad_norm_smoothed = Some(smoothed.norm);
            if smoothed.norm > cfg.eps_shape {
                record.safeguard = true;
                accepted = linesearch(&mesh, &smoothed.field.scaled(-1.0), &eval.objective, cfg, solve)?;
            } else if grad.norm <= cfg.eps_shape {
                converged = true;
            }
        }

        record.halvings = accepted.as_ref().map(|a| a.halvings);
        record.snapshot = observer(&record, &mesh)?;
        history.push(record);
        match accepted {
            Some(a) => eval = a.eval,
            None => {
                stalled = !converged;
                break;
            }
        }
    }

    Ok(OptimizeResult { history, mesh: eval.mesh().clone(), state: eval.pdas.y, converged, stalled })
}

#[cfg(test)]
mod tests;
