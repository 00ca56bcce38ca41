use super::*;
use crate::fem::{sample_target, ReferenceField};
use crate::mesh::{generate_disk_mesh, generate_interface_mesh, InterfaceCurve, Label};

fn f36() -> PiecewiseConstant {
    PiecewiseConstant::new(100.0, -10.0)
}

fn scenario(obstacle: Obstacle) -> Scenario {
    Scenario::laplacian(f36(), obstacle)
}

#[test]
fn zero_source_gives_zero_target() {
    let mesh = generate_disk_mesh(0.15, 0.08).unwrap();
    let y = generate_target(&mesh, &Obstacle::phi1(), &PiecewiseConstant::uniform(0.0), 1e-10).unwrap();
    assert!(y.max_abs() < 1e-14);
}

#[test]
fn targets_are_feasible() {
    let curve = InterfaceCurve::ellipse([0.5, 0.5], [0.2, 0.13], 0.0);
    let mesh = generate_interface_mesh(&curve, 0.05).unwrap();
    for obstacle in [Obstacle::phi1(), Obstacle::phi2()] {
        let y = generate_target(&mesh, &obstacle, &f36(), 1e-10).unwrap();
        let mut touches = false;
        for (i, &x) in mesh.vertices().iter().enumerate() {
            let phi = obstacle.value(x);
            assert!(y[i] <= phi + 1e-8, "{}: {} > {}", obstacle.name(), y[i], phi);
            touches |= (y[i] - phi).abs() < 1e-10;
        }
        assert!(touches, "{} never binds", obstacle.name());
    }
}

#[test]
fn sign_gap_vanishes_for_equal_states_away_from_band() {
    let mesh = generate_disk_mesh(0.15, 0.08).unwrap();
    let s = scenario(Obstacle::phi1());
    let p = s.problem(&mesh).unwrap();
    let reg = p.regularization(1e3).unwrap();
    let y = solve_state_regularized(&p, &reg, 1e-12).unwrap();
    let sm = Smoother::new(1e12).unwrap();
    let gap = sign_gap(&p, &reg, &sm, &y, &y);
    assert!(gap.iter().all(|&g| g == 0.0));
}

#[test]
fn sign_study_decreases_in_gamma() {
    let mesh = generate_disk_mesh(0.15, 0.06).unwrap();
    let gammas = [1e-3, 1e-2, 0.1, 1.0, 10.0, 1e8];
    let t = study_sign_convergence(&mesh, &scenario(Obstacle::phi2()), &[1e3], &gammas).unwrap();
    assert_eq!(t.failures(), 0);
    let l1 = t.column("l1").unwrap();
    assert!(l1[0] > 0.0);
    for w in l1.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{l1:?}");
    }
    assert_eq!(t.column("gamma").unwrap(), gammas);
}

#[test]
fn state_gap_respects_smoothing_bound() {
    let mesh = generate_disk_mesh(0.15, 0.06).unwrap();
    let s = scenario(Obstacle::phi1());
    let zero = sample_target(&mesh, &crate::fem::AnalyticTarget(|_| (0.0, [0.0, 0.0])), Parallelism::Sequential).unwrap();
    let gammas = [10.0, 100.0, 1000.0];
    let t = study_state_adjoint_convergence(&mesh, &s, &zero, &[1e-6], &gammas).unwrap();
    assert_eq!(t.failures(), 0);
    let e = t.column("state_gamma").unwrap();
    for (g, v) in gammas.iter().zip(&e) {
        // vol(Ω) = 1, and the Poincaré constant of the unit square exceeds 1
        assert!(*v <= 1.0 / (4.0 * g), "gamma {g}: {v}");
    }
    let slope = (e[2] / e[0]).log10() / 2.0;
    assert!((slope + 1.0).abs() < 0.3, "slope {slope}");
}

#[test]
fn limit_adjoint_gap_shrinks_with_c() {
    let curve = InterfaceCurve::ellipse([0.5, 0.5], [0.2, 0.13], 0.0);
    let tm = generate_interface_mesh(&curve, 0.06).unwrap();
    let ybar = ReferenceField::new(tm.clone(), generate_target(&tm, &Obstacle::phi1(), &f36(), 1e-10).unwrap()).unwrap();
    let mesh = generate_disk_mesh(0.15, 0.06).unwrap();
    let samples = sample_target(&mesh, &ybar, Parallelism::Sequential).unwrap();
    let cs = [1e2, 1e3, 1e4, 1e5];
    let t = study_state_adjoint_convergence(&mesh, &scenario(Obstacle::phi1()), &samples, &cs, &[1e3]).unwrap();
    let a = t.column("adjoint_c").unwrap();
    let y = t.column("state_c").unwrap();
    for w in a.windows(2).chain(y.windows(2)) {
        assert!(w[1] < w[0], "{a:?} {y:?}");
    }
}

#[test]
fn failed_rows_are_recorded() {
    let mesh = generate_disk_mesh(0.15, 0.08).unwrap();
    let t = study_sign_convergence(&mesh, &scenario(Obstacle::phi1()), &[1e3], &[-1.0, 10.0]).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows[0].error.is_some());
    assert!(t.rows[0].values[0].is_nan());
    assert!(t.rows[1].error.is_none());
    assert!(study_sign_convergence(&mesh, &scenario(Obstacle::phi1()), &[], &[1.0]).is_err());
}

#[test]
fn refinement_adds_vertices_and_echoes_parameters() {
    let mesh = generate_disk_mesh(0.15, 0.08).unwrap();
    let t = study_mesh_refinement_sign(&mesh, &scenario(Obstacle::phi2()), 3, 1e8, 1e5, REFINEMENT_VERTEX_CAP).unwrap();
    assert_eq!(t.failures(), 0);
    let v = t.column("vertices").unwrap();
    assert_eq!(v.len(), 3);
    assert!(v.windows(2).all(|w| w[1] > w[0]));
    assert!(t.column("gamma").unwrap().iter().all(|&g| g == 1e8));
    assert!(t.column("c").unwrap().iter().all(|&c| c == 1e5));
    assert!(t.column("free_boundary_vertices").unwrap().iter().all(|&n| n > 0.0));
}

#[test]
fn refinement_respects_vertex_cap() {
    let mesh = generate_disk_mesh(0.15, 0.08).unwrap();
    let cap = mesh.num_vertices() + 1;
    let t = study_mesh_refinement_sign(&mesh, &scenario(Obstacle::phi1()), 4, 1e8, 1e5, cap).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows[1].error.as_deref().unwrap().contains("cap"));
    assert!(study_mesh_refinement_sign(&mesh, &scenario(Obstacle::phi1()), 1, 1e8, 1e5, cap).is_err());
}

#[test]
fn marked_refinement_keeps_the_interface() {
    let mesh = generate_disk_mesh(0.15, 0.08).unwrap();
    let s = scenario(Obstacle::phi1());
    let p = s.problem(&mesh).unwrap();
    let reg = p.regularization(1e5).unwrap();
    let y = solve_state_regularized(&p, &reg, 1e-12).unwrap();
    let (marked, _) = mark_free_boundary(&mesh, &reg.argument(&y, &p.phi));
    let fine = refine_marked(&mesh, &marked).unwrap();
    let a = mesh.subdomain_area(Label::Inner);
    assert!((fine.subdomain_area(Label::Inner) - a).abs() < 1e-12);
}

#[test]
fn csv_is_deterministic_and_commented() {
    let mesh = generate_disk_mesh(0.15, 0.08).unwrap();
    let run = |mode| {
        let s = with_mode(&scenario(Obstacle::phi1()), mode);
        let t = study_sign_convergence(&mesh, &s, &[1e2, 1e3], &[10.0, 100.0]).unwrap();
        let mut out = Vec::new();
        t.write_csv("gamma = [10, 100]\nc = [100, 1000]", &mut out).unwrap();
        String::from_utf8(out).unwrap()
    };
    let a = run(Parallelism::Sequential);
    assert_eq!(a, run(Parallelism::Parallel));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "# study: sign");
    assert_eq!(lines[1], "# gamma = [10, 100]");
    assert_eq!(lines[3], "c,gamma,l1,error");
    assert_eq!(lines.len(), 8);
}
