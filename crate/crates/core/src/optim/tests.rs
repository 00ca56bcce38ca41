use std::cell::Cell;

use super::*;
use crate::vi::solve_vi_pdas;
use crate::fem::{AnalyticTarget, ReferenceField};
use crate::mesh::{generate_disk_mesh, generate_interface_mesh, generate_structured_mesh, InterfaceCurve, Rect};

fn zero_target() -> AnalyticTarget<impl Fn(crate::mesh::Point) -> (f64, [f64; 2])> {
    AnalyticTarget(|_| (0.0, [0.0, 0.0]))
}

fn obj(tracking: f64) -> Objective {
    Objective { total: tracking, tracking, perimeter: 0.0 }
}

fn vi_target(mesh: &TriangleMesh, scenario: &Scenario) -> ReferenceField {
    let p = scenario.problem(mesh).unwrap();
    let y = solve_vi_pdas(&p, 1e-10).unwrap().y;
    ReferenceField::new(mesh.clone(), y).unwrap()
}

#[test]
fn config_defaults_validate() {
    let cfg = RunConfig::default();
    cfg.validate().unwrap();
    assert_eq!(cfg.ls_max_halvings, 30);
    assert_eq!(RunConfig::for_obstacle("phi2").mu_max, 55.0);
    let bad = RunConfig { ls_shrink: 1.0, ..RunConfig::default() };
    assert!(bad.validate().is_err());
    let bad = RunConfig { eps_state: 0.0, ..RunConfig::default() };
    assert!(bad.validate().is_err());
    let ok = RunConfig { eps_adj: 0.0, ..RunConfig::default() };
    ok.validate().unwrap();
}

#[test]
fn config_rejects_unknown_keys() {
    let e = toml::from_str::<RunConfig>("nu = 1e-4\nbogus = 1\n");
    assert!(e.is_err());
    let cfg: RunConfig = toml::from_str("nu = 1e-4\n").unwrap();
    assert_eq!(cfg.nu, 1e-4);
    assert_eq!(cfg.ls_accept, 0.995);
}

#[test]
fn objective_of_exact_target_is_perimeter() {
    let mesh = generate_disk_mesh(0.15, 0.02).unwrap();
    let zero = vec![0.0; mesh.num_vertices()];
    let t = sample_target(&mesh, &zero_target(), Parallelism::Sequential).unwrap();
    let o = evaluate_objective(&mesh, &zero, &t, 0.0).unwrap();
    assert_eq!(o.total, 0.0);
    let o = evaluate_objective(&mesh, &zero, &t, 1e-5).unwrap();
    let exact = 1e-5 * 2.0 * std::f64::consts::PI * 0.15;
    assert!((o.total - exact).abs() <= 1e-3 * exact, "{} vs {exact}", o.total);
    assert!((o.total - (o.tracking + 1e-5 * o.perimeter)).abs() <= 1e-12);
}

#[test]
fn objective_of_unit_offset_is_half() {
    let mesh = generate_structured_mesh(6, None).unwrap();
    let ones = vec![1.0; mesh.num_vertices()];
    let t = sample_target(&mesh, &zero_target(), Parallelism::Sequential).unwrap();
    let o = evaluate_objective(&mesh, &ones, &t, 0.0).unwrap();
    assert!((o.total - 0.5).abs() < 1e-14);
}

#[test]
fn linesearch_accepts_full_step() {
    let mesh = generate_structured_mesh(4, None).unwrap();
    let u = VectorField::zeros(mesh.num_vertices());
    let cfg = RunConfig::default();
    let out = linesearch(&mesh, &u, &obj(1.0), &cfg, |_| Ok(((), obj(0.9)))).unwrap().unwrap();
    assert_eq!(out.halvings, 0);
    assert_eq!(out.objective.tracking, 0.9);
}

#[test]
fn linesearch_zero_step_fails_after_cap() {
    let mesh = generate_structured_mesh(4, None).unwrap();
    let u = VectorField::zeros(mesh.num_vertices());
    let cfg = RunConfig::default();
    let calls = Cell::new(0);
    let out = linesearch(&mesh, &u, &obj(1.0), &cfg, |_| {
        calls.set(calls.get() + 1);
        Ok(((), obj(1.0)))
    })
    .unwrap();
    assert!(out.is_none());
    assert_eq!(calls.get(), cfg.ls_max_halvings + 1);
}

#[test]
fn linesearch_treats_inversion_as_rejection() {
    let mesh = generate_structured_mesh(4, None).unwrap();
    // center vertex (0.5, 0.5) on a 4x4 grid; a shift of 0.3 leaves its
    // star, 0.15 does not
    let c = (0..mesh.num_vertices()).find(|&i| mesh.vertex(i) == [0.5, 0.5]).unwrap();
    let mut u = vec![[0.0; 2]; mesh.num_vertices()];
    u[c] = [0.3, 0.0];
    let u = VectorField::from_vec(u);
    assert!(matches!(mesh.deform(&u), Err(Error::CellInversion { .. })));
    assert!(mesh.deform(&u.scaled(0.5)).is_ok());
    let cfg = RunConfig::default();
    let out = linesearch(&mesh, &u, &obj(1.0), &cfg, |m| Ok((m.vertex(c)[0], obj(0.5)))).unwrap().unwrap();
    assert_eq!(out.halvings, 1);
    assert!((out.eval - 0.65).abs() < 1e-15);
}

#[test]
fn linesearch_respects_perimeter_switch() {
    let mesh = generate_structured_mesh(4, None).unwrap();
    let u = VectorField::zeros(mesh.num_vertices());
    let cur = Objective { total: 2.0, tracking: 1.0, perimeter: 1.0 };
    let trial = Objective { total: 2.5, tracking: 0.5, perimeter: 2.0 };
    let mut cfg = RunConfig { ls_max_halvings: 2, ..RunConfig::default() };
    assert!(linesearch(&mesh, &u, &cur, &cfg, |_| Ok(((), trial))).unwrap().is_some());
    cfg.perimeter_in_acceptance = true;
    assert!(linesearch(&mesh, &u, &cur, &cfg, |_| Ok(((), trial))).unwrap().is_none());
}

#[test]
fn short_run_decreases_tracking() {
    let scenario = Scenario::laplacian(PiecewiseConstant::new(100.0, -10.0), Obstacle::phi1());
    let target_mesh = generate_interface_mesh(&InterfaceCurve::ellipse([0.5, 0.5], [0.2, 0.13], 0.0), 0.06).unwrap();
    let target = vi_target(&target_mesh, &scenario);
    let mesh = generate_disk_mesh(0.15, 0.06).unwrap();
    let cfg = RunConfig { max_iters: 6, ..RunConfig::default() };
    let mut seen = 0;
    let res = optimize_with(&cfg, mesh, &scenario, &target, &mut |r, m| {
        assert_eq!(r.step, seen);
        assert!(m.min_quality() > 0.0);
        seen += 1;
        Ok(None)
    })
    .unwrap();
    assert_eq!(res.history.len(), seen);
    for w in res.history.windows(2) {
        if w[0].halvings.is_some() {
            assert!(w[1].tracking <= 0.995 * w[0].tracking, "{} -> {}", w[0].tracking, w[1].tracking);
        }
    }
    for r in &res.history {
        assert!((r.objective - (r.tracking + cfg.nu * r.perimeter)).abs() <= 1e-12);
        assert!(r.grad_norm >= 0.0);
    }
    assert!(res.final_tracking() < res.initial_tracking());
    assert!((0..res.mesh.num_cells()).all(|k| res.mesh.cell_area(k) > 0.0));
}

#[test]
fn stationary_start_checks_smoothed_gradient() {
    let scenario = Scenario::laplacian(PiecewiseConstant::new(100.0, -10.0), Obstacle::phi1());
    let mesh = generate_disk_mesh(0.15, 0.06).unwrap();
    let target = vi_target(&mesh, &scenario);
    let cfg = RunConfig { nu: 0.0, max_iters: 3, ..RunConfig::default() };
    let res = optimize_with(&cfg, mesh, &scenario, &target, &mut |_, _| Ok(None)).unwrap();
    let first = &res.history[0];
    assert!(first.tracking < 1e-20);
    assert!(first.grad_norm <= 1e-12, "{}", first.grad_norm);
    assert!(first.grad_norm_smoothed.is_some());
}

#[test]
fn history_csv_has_one_row_per_record() {
    let r = IterationRecord {
        step: 0,
        objective: 1.5,
        tracking: 1.0,
        perimeter: 0.5,
        grad_norm: 0.1,
        grad_norm_smoothed: None,
        halvings: Some(2),
        safeguard: false,
        active_vertices: 7,
        min_quality: 0.8,
        snapshot: None,
    };
    let mut out = Vec::new();
    write_history_csv(&[r.clone(), IterationRecord { step: 1, ..r }], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], HISTORY_HEADER);
    assert_eq!(lines[1], "0,1.5e0,1e0,5e-1,1e-1,,2,0,7,8e-1,");
}

#[test]
fn interface_csv_lists_closed_loop() {
    let mesh = generate_structured_mesh(4, Some(Rect::new(0.25, 0.25, 0.75, 0.75))).unwrap();
    let mut out = Vec::new();
    write_interface_csv(&mesh, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), mesh.interface_edges().len() + 1);
    assert_eq!(rows.first(), rows.last());
}
