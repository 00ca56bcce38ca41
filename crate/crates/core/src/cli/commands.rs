use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use super::{CliError, Command, Config, SolveMethod};
use crate::adjoint::{
    detect_active_set, detect_active_set_c, solve_adjoint_limit, solve_adjoint_regularized_limit, solve_adjoint_smoothed,
    tracking_value,
};
use crate::fem::{read_field, sample_target, write_field, write_vector_field, ReferenceField, ScalarField, VectorField};
use crate::lab::{
    generate_target, study_mesh_refinement_sign, study_sign_convergence, study_state_adjoint_convergence, StudyTable,
};
use crate::mesh::{generate_interface_mesh, read_mesh, write_mesh, write_vtk, TriangleMesh, VtkField};
use crate::optim::{
    evaluate_state, limit_gradient, optimize_with, smoothed_gradient, write_history_csv, write_interface_csv, Scenario,
};
use crate::shape::solve_mu_elas;
use crate::vi::{psor_solve, solve_state_regularized, solve_state_smoothed, solve_vi_pdas, DiscreteProblem, Smoother};

type Summary = Map<String, Value>;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> crate::Result<()>) -> Result<(), CliError> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

struct Out<'a> {
    dir: &'a Path,
    vtk: bool,
}

impl Out<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn mesh(&self, name: &str, mesh: &TriangleMesh) -> Result<(), CliError> {
        write_with(&self.path(&format!("{name}.txt")), |w| write_mesh(mesh, w))?;
        if self.vtk {
            write_with(&self.path(&format!("{name}.vtk")), |w| write_vtk(mesh, &[], w))?;
        }
        Ok(())
    }

    fn scalar(&self, name: &str, mesh: &TriangleMesh, values: &[f64]) -> Result<(), CliError> {
        write_with(&self.path(&format!("{name}.field")), |w| write_field(values, w))?;
        if self.vtk {
            write_with(&self.path(&format!("{name}.vtk")), |w| write_vtk(mesh, &[VtkField::Scalar(name, values)], w))?;
        }
        Ok(())
    }

    fn vector(&self, name: &str, mesh: &TriangleMesh, field: &VectorField) -> Result<(), CliError> {
        write_with(&self.path(&format!("{name}.field")), |w| write_vector_field(field, w))?;
        if self.vtk {
            write_with(&self.path(&format!("{name}.vtk")), |w| write_vtk(mesh, &[VtkField::Vector(name, field)], w))?;
        }
        Ok(())
    }
}

fn initial_mesh(cfg: &Config) -> Result<TriangleMesh, CliError> {
    match &cfg.mesh.file {
        Some(path) => Ok(read_mesh(open(path)?)?),
        None => Ok(generate_interface_mesh(&cfg.mesh.initial, cfg.mesh.h)?),
    }
}

fn scenario(cfg: &Config) -> Result<Scenario, CliError> {
    Ok(Scenario::laplacian(cfg.problem.source(), cfg.problem.obstacle()?))
}

fn problem(cfg: &Config, mesh: &TriangleMesh) -> Result<DiscreteProblem, CliError> {
    Ok(scenario(cfg)?.problem(mesh)?)
}

fn target(cfg: &Config) -> Result<ReferenceField, CliError> {
    let t = &cfg.target;
    match (&t.mesh_file, &t.field_file) {
        (Some(m), Some(f)) => {
            let mesh = read_mesh(open(m)?)?;
            let values = read_field(open(f)?)?;
            Ok(ReferenceField::new(mesh, values)?)
        }
        _ => {
            let mesh = generate_interface_mesh(&t.curve, t.h)?;
            let values = generate_target(&mesh, &cfg.problem.obstacle()?, &cfg.problem.source(), t.tol)?;
            Ok(ReferenceField::new(mesh, values)?)
        }
    }
}

fn solve_state(cfg: &Config, p: &DiscreteProblem, s: &mut Summary) -> Result<ScalarField, CliError> {
    let run = &cfg.run;
    let y = match cfg.solve.method {
        SolveMethod::Pdas => {
            let sol = solve_vi_pdas(p, run.eps_state)?;
            s.insert("pdas_iterations".into(), json!(sol.iterations));
            s.insert("active_vertices".into(), json!(sol.active_count()));
            sol.y
        }
        SolveMethod::Psor => psor_solve(p, cfg.solve.psor_tol, cfg.solve.psor_max_iter)?,
        SolveMethod::Regularized => solve_state_regularized(p, &p.regularization(run.c)?, run.eps_state)?,
        SolveMethod::Smoothed => {
            solve_state_smoothed(p, &p.regularization(run.c)?, &Smoother::new(run.gamma)?, run.eps_state)?
        }
    };
    let violation = y.iter().zip(&p.phi).map(|(y, f)| y - f).fold(f64::NEG_INFINITY, f64::max);
    s.insert("max_state".into(), json!(y.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
    s.insert("max_obstacle_violation".into(), json!(violation));
    Ok(y)
}

fn cmd_solve_state(cfg: &Config, out: &Out, s: &mut Summary) -> Result<(), CliError> {
    let mesh = initial_mesh(cfg)?;
    let p = problem(cfg, &mesh)?;
    let y = solve_state(cfg, &p, s)?;
    out.mesh("mesh", &mesh)?;
    out.scalar("state", &mesh, &y)?;
    s.insert("vertices".into(), json!(mesh.num_vertices()));
    Ok(())
}

fn cmd_solve_adjoint(cfg: &Config, out: &Out, s: &mut Summary) -> Result<(), CliError> {
    let mesh = initial_mesh(cfg)?;
    let p = problem(cfg, &mesh)?;
    let ybar = sample_target(&mesh, &target(cfg)?, p.mode)?;
    let y = solve_state(cfg, &p, s)?;
    let run = &cfg.run;
    let adj = match cfg.solve.method {
        SolveMethod::Pdas | SolveMethod::Psor => {
            let active = detect_active_set(&p, &y, run.eps_adj)?;
            s.insert("adjoint_active_vertices".into(), json!(active.len()));
            solve_adjoint_limit(&p, &y, &ybar, &active)?
        }
        SolveMethod::Regularized => {
            let reg = p.regularization(run.c)?;
            let active = detect_active_set_c(&p, &y, &reg)?;
            s.insert("adjoint_active_vertices".into(), json!(active.len()));
            solve_adjoint_regularized_limit(&p, &y, &ybar, &reg, &active)?
        }
        SolveMethod::Smoothed => {
            solve_adjoint_smoothed(&p, &y, &ybar, &p.regularization(run.c)?, &Smoother::new(run.gamma)?)?
        }
    };
    out.mesh("mesh", &mesh)?;
    out.scalar("state", &mesh, &y)?;
    out.scalar("adjoint", &mesh, &adj)?;
    s.insert("tracking".into(), json!(tracking_value(&p, &y, &ybar)?));
    Ok(())
}

fn cmd_gradient(cfg: &Config, out: &Out, s: &mut Summary) -> Result<(), CliError> {
    let mesh = initial_mesh(cfg)?;
    let sc = scenario(cfg)?;
    let t = target(cfg)?;
    let eval = evaluate_state(&mesh, &sc, &t, &cfg.run)?;
    let mu = solve_mu_elas(&mesh, cfg.run.mu_min, cfg.run.mu_max)?;
    let g = match cfg.solve.method {
        SolveMethod::Smoothed => smoothed_gradient(&eval, &cfg.run, &mu)?,
        _ => limit_gradient(&eval, &cfg.run, &mu)?,
    };
    out.mesh("mesh", &mesh)?;
    out.scalar("mu_elas", &mesh, &mu)?;
    out.vector("gradient", &mesh, &g.field)?;
    s.insert("grad_norm".into(), json!(g.norm));
    s.insert("objective".into(), json!(eval.objective.total));
    s.insert("tracking".into(), json!(eval.objective.tracking));
    Ok(())
}

fn cmd_optimize(cfg: &Config, out: &Out, s: &mut Summary) -> Result<(), CliError> {
    let mesh = initial_mesh(cfg)?;
    let sc = scenario(cfg)?;
    let t = target(cfg)?;
    out.mesh("mesh_initial", &mesh)?;
    write_with(&out.path("interface_initial.csv"), |w| write_interface_csv(&mesh, w))?;
    let every = cfg.output.snapshot_every;
    if every > 0 {
        std::fs::create_dir_all(out.path("snapshots"))?;
    }
    let mut observer = |r: &crate::optim::IterationRecord, m: &TriangleMesh| -> crate::Result<Option<PathBuf>> {
        if every == 0 || r.step % every != 0 {
            return Ok(None);
        }
        let rel = PathBuf::from("snapshots").join(format!("mesh_{:05}.txt", r.step));
        let mut w = BufWriter::new(File::create(out.dir.join(&rel))?);
        write_mesh(m, &mut w)?;
        w.flush()?;
        if out.vtk {
            let mut w = BufWriter::new(File::create(out.dir.join(rel.with_extension("vtk")))?);
            write_vtk(m, &[], &mut w)?;
            w.flush()?;
        }
        Ok(Some(rel))
    };
    let res = optimize_with(&cfg.run, mesh, &sc, &t, &mut observer)?;
    write_with(&out.path("history.csv"), |w| write_history_csv(&res.history, w))?;
    out.mesh("mesh_final", &res.mesh)?;
    write_with(&out.path("interface_final.csv"), |w| write_interface_csv(&res.mesh, w))?;
    out.scalar("state_final", &res.mesh, &res.state)?;
    let last = res.history.last();
    s.insert("final_J".into(), json!(last.map(|r| r.objective)));
    s.insert("initial_tracking".into(), json!(res.initial_tracking()));
    s.insert("final_tracking".into(), json!(res.final_tracking()));
    s.insert("final_grad_norm".into(), json!(last.map(|r| r.grad_norm)));
    s.insert("iterations".into(), json!(res.history.len().saturating_sub(1)));
    s.insert("converged".into(), json!(res.converged));
    s.insert("stalled".into(), json!(res.stalled));
    s.insert("safeguard_steps".into(), json!(res.safeguard_steps()));
    s.insert("final_min_quality".into(), json!(res.mesh.min_quality()));
    Ok(())
}

fn cmd_generate_target(cfg: &Config, out: &Out, s: &mut Summary) -> Result<(), CliError> {
    let t = target(cfg)?;
    out.mesh("target_mesh", t.mesh())?;
    out.scalar("target", t.mesh(), t.values())?;
    s.insert("vertices".into(), json!(t.mesh().num_vertices()));
    s.insert("max_target".into(), json!(t.values().iter().copied().fold(f64::NEG_INFINITY, f64::max)));
    Ok(())
}

fn write_study(table: &StudyTable, cfg_text: &str, out: &Out, s: &mut Summary) -> Result<(), CliError> {
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let name = format!("study_{}_{ts}.csv", table.name);
    write_with(&out.path(&name), |w| table.write_csv(cfg_text, w))?;
    s.insert("table".into(), json!(name));
    s.insert("rows".into(), json!(table.rows.len()));
    s.insert("failed_rows".into(), json!(table.failures()));
    Ok(())
}

fn cmd_study(cmd: Command, cfg: &Config, cfg_text: &str, out: &Out, s: &mut Summary) -> Result<(), CliError> {
    let mesh = initial_mesh(cfg)?;
    let sc = scenario(cfg)?;
    let st = &cfg.study;
    let table = match cmd {
        Command::StudySign => study_sign_convergence(&mesh, &sc, &st.c_list, &st.gamma_list),
        Command::StudyConvergence => {
            let ybar = sample_target(&mesh, &target(cfg)?, sc.mode)?;
            study_state_adjoint_convergence(&mesh, &sc, &ybar, &st.c_list, &st.gamma_list)
        }
        _ => study_mesh_refinement_sign(&mesh, &sc, st.levels, st.refinement_gamma, st.refinement_c, st.vertex_cap),
    }
    .map_err(|e| match e {
        crate::Error::InvalidParameter(m) => CliError::Config(format!("study: {m}")),
        e => e.into(),
    })?;
    write_study(&table, cfg_text, out, s)
}

/// Runs `cmd` writing into `dir`: the resolved config, the command's outputs
/// and `summary.json`, whose path is returned.
pub fn execute(cmd: Command, cfg: &Config, dir: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let cfg_text = toml::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    write_with(&dir.join("resolved_config.toml"), |w| Ok(w.write_all(cfg_text.as_bytes())?))?;
    let out = Out { dir, vtk: cfg.output.vtk };
    let start = Instant::now();
    let mut s = Summary::new();
    s.insert("command".into(), json!(cmd.name()));
    match cmd {
        Command::SolveState => cmd_solve_state(cfg, &out, &mut s)?,
        Command::SolveAdjoint => cmd_solve_adjoint(cfg, &out, &mut s)?,
        Command::Gradient => cmd_gradient(cfg, &out, &mut s)?,
        Command::Optimize => cmd_optimize(cfg, &out, &mut s)?,
        Command::GenerateTarget => cmd_generate_target(cfg, &out, &mut s)?,
        Command::StudySign | Command::StudyConvergence | Command::StudyRefinement => {
            cmd_study(cmd, cfg, &cfg_text, &out, &mut s)?
        }
    }
    s.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&Value::Object(s)).map_err(|e| CliError::Io(e.to_string()))?;
    write_with(&path, |w| Ok(writeln!(w, "{text}")?))?;
    Ok(path)
}
