//! Experiment harness: target generation and the parameter studies for the
//! smoothing, regularization and mesh-refinement behaviour.

use std::io::Write;

use crate::adjoint::{
    detect_active_set, detect_active_set_c, solve_adjoint_limit, solve_adjoint_regularized_limit, solve_adjoint_smoothed,
    EPS_ADJ,
};
use crate::error::{Error, Result};
use crate::fem::{field_norms, lumped_l1, EllipticCoefficients, PiecewiseConstant, ScalarField, TargetSamples};
use crate::mesh::{refine_marked, TriangleMesh};
use crate::optim::Scenario;
use crate::par::{map_slice, Parallelism};
use crate::vi::{
    sign, solve_state_regularized, solve_state_smoothed, solve_vi_pdas, DiscreteProblem, Obstacle, Regularization, Smoother,
};

/// Default vertex cap of the refinement study.
pub const REFINEMENT_VERTEX_CAP: usize = 50_000;

/// Solves the unregularized VI for the Laplacian on the target mesh.
pub fn generate_target(target_mesh: &TriangleMesh, obstacle: &Obstacle, f: &PiecewiseConstant, tol: f64) -> Result<ScalarField> {
    let p = DiscreteProblem::new(target_mesh, &EllipticCoefficients::laplacian(), *f, obstacle)?;
    Ok(solve_vi_pdas(&p, tol)?.y)
}

/// One table row. `values` are NaN when the row failed.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub params: Vec<f64>,
    pub values: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyTable {
    pub name: String,
    pub param_names: Vec<String>,
    pub value_names: Vec<String>,
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    fn new(name: &str, params: &[&str], values: &[&str]) -> Self {
        StudyTable {
            name: name.into(),
            param_names: params.iter().map(|s| s.to_string()).collect(),
            value_names: values.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, params: Vec<f64>, values: Result<Vec<f64>>) {
        let row = match values {
            Ok(values) => StudyRow { params, values, error: None },
            Err(e) => StudyRow { params, values: vec![f64::NAN; self.value_names.len()], error: Some(e.to_string()) },
        };
        self.rows.push(row);
    }

    /// Column by name, over all rows.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if let Some(i) = self.param_names.iter().position(|n| n == name) {
            return Some(self.rows.iter().map(|r| r.params[i]).collect());
        }
        let i = self.value_names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    /// CSV with `# ` comment lines for `header` (typically the resolved
    /// config), then one line per row. Failed rows carry their message in the
    /// last column.
    pub fn write_csv<W: Write>(&self, header: &str, mut out: W) -> Result<()> {
        writeln!(out, "# study: {}", self.name)?;
        for line in header.lines() {
            writeln!(out, "# {line}")?;
        }
        let cols: Vec<&str> = self.param_names.iter().chain(&self.value_names).map(String::as_str).collect();
        writeln!(out, "{},error", cols.join(","))?;
        for r in &self.rows {
            let cells: Vec<String> = r.params.iter().chain(&r.values).map(|v| format!("{v:e}")).collect();
            let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            writeln!(out, "{},{}", cells.join(","), err)?;
        }
        Ok(())
    }
}

fn check_lists(c_list: &[f64], gamma_list: &[f64]) -> Result<()> {
    if c_list.is_empty() || gamma_list.is_empty() {
        return Err(Error::InvalidParameter("parameter lists must be nonempty".into()));
    }
    Ok(())
}

/// Pairs in row order: `c` outer, `γ` inner.
fn pairs(c_list: &[f64], gamma_list: &[f64]) -> Vec<(f64, f64)> {
    c_list.iter().flat_map(|&c| gamma_list.iter().map(move |&g| (c, g))).collect()
}

/// `sign_γ(λ̄ + c(y_{γ,c} - φ)) - sign(λ̄ + c(y_c - φ))` at the vertices.
fn sign_gap(p: &DiscreteProblem, reg: &Regularization, sm: &Smoother, y_gc: &[f64], y_c: &[f64]) -> Vec<f64> {
    let a = reg.argument(y_gc, &p.phi);
    let b = reg.argument(y_c, &p.phi);
    a.iter().zip(&b).map(|(&s, &t)| sm.sign(s) - sign(t)).collect()
}

fn sign_row(p: &DiscreteProblem, c: f64, gamma: f64, tol: f64) -> Result<Vec<f64>> {
    let reg = p.regularization(c)?;
    let sm = Smoother::new(gamma)?;
    let y_c = solve_state_regularized(p, &reg, tol)?;
    let y_gc = solve_state_smoothed(p, &reg, &sm, tol)?;
    Ok(vec![lumped_l1(&p.mesh, &sign_gap(p, &reg, &sm, &y_gc, &y_c))?])
}

/// Newton tolerance used inside the studies.
pub const STUDY_TOL: f64 = 1e-12;

/// L¹ distance between the smoothed and unsmoothed sign of the regularized
/// multiplier argument, integrated with the lumped (nodal) rule.
pub fn study_sign_convergence(mesh: &TriangleMesh, scenario: &Scenario, c_list: &[f64], gamma_list: &[f64]) -> Result<StudyTable> {
    check_lists(c_list, gamma_list)?;
    let p = scenario.problem(mesh)?;
    let mut table = StudyTable::new("sign", &["c", "gamma"], &["l1"]);
    let grid = pairs(c_list, gamma_list);
    let rows = map_slice(&grid, scenario.mode, |&(c, g)| sign_row(&p, c, g, STUDY_TOL));
    for (&(c, g), r) in grid.iter().zip(rows) {
        table.push(vec![c, g], r);
    }
    Ok(table)
}

struct Limit {
    y: ScalarField,
    p: ScalarField,
}

struct Regularized {
    reg: Regularization,
    y: ScalarField,
    p: ScalarField,
}

fn h1(mesh: &TriangleMesh, a: &ScalarField, b: &ScalarField) -> Result<f64> {
    Ok(field_norms(mesh, &a.sub(b))?.h1)
}

fn regularized(p: &DiscreteProblem, ybar: &TargetSamples, c: f64, tol: f64) -> Result<Regularized> {
    let reg = p.regularization(c)?;
    let y = solve_state_regularized(p, &reg, tol)?;
    let active = detect_active_set_c(p, &y, &reg)?;
    let adj = solve_adjoint_regularized_limit(p, &y, ybar, &reg, &active)?;
    Ok(Regularized { reg, y, p: adj })
}

fn convergence_row(p: &DiscreteProblem, ybar: &TargetSamples, limit: &Limit, rc: &Regularized, gamma: f64) -> Result<Vec<f64>> {
    let sm = Smoother::new(gamma)?;
    let y = solve_state_smoothed(p, &rc.reg, &sm, STUDY_TOL)?;
    let adj = solve_adjoint_smoothed(p, &y, ybar, &rc.reg, &sm)?;
    Ok(vec![
        h1(&p.mesh, &y, &rc.y)?,
        h1(&p.mesh, &rc.y, &limit.y)?,
        h1(&p.mesh, &adj, &rc.p)?,
        h1(&p.mesh, &rc.p, &limit.p)?,
    ])
}

/// H¹ distances along the chain `(y_{γ,c}, p_{γ,c}) → (y_c, p_c) → (y, p)`.
/// The limit pair uses PDAS and the active-set adjoint with tolerance `eps_adj`.
pub fn study_state_adjoint_convergence(
    mesh: &TriangleMesh,
    scenario: &Scenario,
    ybar: &TargetSamples,
    c_list: &[f64],
    gamma_list: &[f64],
) -> Result<StudyTable> {
    check_lists(c_list, gamma_list)?;
    let p = scenario.problem(mesh)?;
    let mut table = StudyTable::new(
        "convergence",
        &["c", "gamma"],
        &["state_gamma", "state_c", "adjoint_gamma", "adjoint_c"],
    );
    let vi = solve_vi_pdas(&p, 0.0)?;
    let active = detect_active_set(&p, &vi.y, EPS_ADJ)?;
    let limit = Limit { p: solve_adjoint_limit(&p, &vi.y, ybar, &active)?, y: vi.y };
    let per_c = map_slice(c_list, scenario.mode, |&c| regularized(&p, ybar, c, STUDY_TOL));
    let grid: Vec<(usize, f64)> =
        (0..c_list.len()).flat_map(|i| gamma_list.iter().map(move |&g| (i, g))).collect();
    let rows = map_slice(&grid, scenario.mode, |&(i, g)| match &per_c[i] {
        Ok(rc) => convergence_row(&p, ybar, &limit, rc, g),
        Err(e) => Err(Error::NonConvergence { solver: "regularized state", iterations: 0, detail: e.to_string() }),
    });
    for (&(i, g), r) in grid.iter().zip(rows) {
        table.push(vec![c_list[i], g], r);
    }
    Ok(table)
}

/// Marks every cell whose vertices straddle `∂A_c`, i.e. carry both signs of
/// the regularized multiplier argument, together with its neighbours.
fn mark_free_boundary(mesh: &TriangleMesh, arg: &[f64]) -> (Vec<bool>, usize) {
    let straddles = |k: usize| {
        let s: Vec<f64> = mesh.cell(k).iter().map(|&i| sign(arg[i])).collect();
        s.iter().any(|&v| v == 1.0) && s.iter().any(|&v| v == 0.0)
    };
    let mut on_boundary = vec![false; mesh.num_vertices()];
    for k in (0..mesh.num_cells()).filter(|&k| straddles(k)) {
        for i in mesh.cell(k) {
            on_boundary[i] = true;
        }
    }
    let marked = (0..mesh.num_cells()).map(|k| mesh.cell(k).iter().any(|&i| on_boundary[i])).collect();
    (marked, on_boundary.iter().filter(|&&b| b).count())
}

/// Repeats the sign measurement on meshes refined near `∂A_c`. Stops with an
/// error row once the next level would exceed `vertex_cap`.
pub fn study_mesh_refinement_sign(
    mesh: &TriangleMesh,
    scenario: &Scenario,
    levels: usize,
    gamma: f64,
    c: f64,
    vertex_cap: usize,
) -> Result<StudyTable> {
    if levels < 2 {
        return Err(Error::InvalidParameter(format!("refinement study needs at least 2 levels, got {levels}")));
    }
    let mut table = StudyTable::new("refinement", &["level", "gamma", "c"], &["vertices", "free_boundary_vertices", "l1"]);
    let mut current = mesh.clone();
    for level in 0..levels {
        if current.num_vertices() > vertex_cap {
            let e = Error::InvalidParameter(format!("{} vertices exceed the cap {vertex_cap}", current.num_vertices()));
            table.push(vec![level as f64, gamma, c], Err(e));
            break;
        }
        let p = scenario.problem(&current)?;
        let reg = p.regularization(c)?;
        let row = (|| {
            let y_c = solve_state_regularized(&p, &reg, STUDY_TOL)?;
            let sm = Smoother::new(gamma)?;
            let y_gc = solve_state_smoothed(&p, &reg, &sm, STUDY_TOL)?;
            let l1 = lumped_l1(&current, &sign_gap(&p, &reg, &sm, &y_gc, &y_c))?;
            let (marked, fb) = mark_free_boundary(&current, &reg.argument(&y_c, &p.phi));
            Ok((vec![current.num_vertices() as f64, fb as f64, l1], marked))
        })();
        match row {
            Ok((values, marked)) => {
                table.push(vec![level as f64, gamma, c], Ok(values));
                if level + 1 < levels {
                    current = refine_marked(&current, &marked)?;
                }
            }
            Err(e) => {
                table.push(vec![level as f64, gamma, c], Err(e));
                break;
            }
        }
    }
    Ok(table)
}

/// Parallel mode of a scenario, for callers that only want to switch it.
pub fn with_mode(scenario: &Scenario, mode: Parallelism) -> Scenario {
    Scenario { mode, ..scenario.clone() }
}

#[cfg(test)]
mod tests;
