use proptest::prelude::*;

use vishape::fem::{read_field, write_field, EllipticCoefficients, PiecewiseConstant, ScalarField, VectorField};
use vishape::mesh::{generate_structured_mesh, read_mesh, write_mesh, Rect, TriangleMesh};
use vishape::shape::{shape_gradient, solve_mu_elas, ShapeFunctional};
use vishape::vi::{solve_state_regularized, solve_vi_pdas, DiscreteProblem, Obstacle};

fn mesh() -> TriangleMesh {
    generate_structured_mesh(10, Some(Rect::new(0.3, 0.3, 0.7, 0.6))).unwrap()
}

fn problem(mesh: &TriangleMesh, fi: f64, fo: f64, obstacle: &Obstacle) -> DiscreteProblem {
    DiscreteProblem::new(mesh, &EllipticCoefficients::laplacian(), PiecewiseConstant::new(fi, fo), obstacle)
        .unwrap()
        .with_linear_tol(1e-13)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pdas_solution_is_complementary(fi in -50.0..150.0f64, fo in -50.0..150.0f64, level in 0.01..0.2f64) {
        let m = mesh();
        let p = problem(&m, fi, fo, &Obstacle::constant(level));
        let sol = solve_vi_pdas(&p, 0.0).unwrap();
        for i in 0..m.num_vertices() {
            prop_assert!(sol.y[i] <= p.phi[i] + 1e-10);
            prop_assert!(sol.lambda[i] >= -1e-8);
            prop_assert!(sol.lambda[i] * (p.phi[i] - sol.y[i]) <= 1e-8);
        }
    }

    #[test]
    fn regularized_states_increase_in_c(fi in 0.0..150.0f64, fo in -20.0..50.0f64) {
        let m = mesh();
        let obstacle = Obstacle::phi2();
        let p = problem(&m, fi, fo, &obstacle);
        let lo = solve_state_regularized(&p, &p.regularization(1e2).unwrap(), 1e-12).unwrap();
        let hi = solve_state_regularized(&p, &p.regularization(1e4).unwrap(), 1e-12).unwrap();
        let y = solve_vi_pdas(&p, 0.0).unwrap().y;
        for i in 0..m.num_vertices() {
            prop_assert!(lo[i] <= hi[i] + 1e-10);
            prop_assert!(hi[i] <= y[i] + 1e-10);
        }
    }

    #[test]
    fn gradient_norm_is_the_derivative_of_the_gradient(seed in proptest::collection::vec(-1.0..1.0f64, 242)) {
        let m = mesh();
        let dj = ShapeFunctional { values: seed.chunks(2).map(|c| [c[0], c[1]]).collect() };
        let mu = solve_mu_elas(&m, 0.0, 25.0).unwrap();
        let g = shape_gradient(&m, &dj, &mu, 0.0).unwrap();
        let dju = dj.apply(&g.field);
        prop_assert!(dju >= 0.0);
        prop_assert!((g.norm * g.norm - dju).abs() <= 1e-9 * (1.0 + dju));
    }

    #[test]
    fn small_interior_shift_keeps_cells_positive(dx in -0.02..0.02f64, dy in -0.02..0.02f64) {
        let m = mesh();
        let u = VectorField::interpolate(&m, |x| {
            let b = 16.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
            [dx * b, dy * b]
        });
        let moved = m.deform(&u).unwrap();
        prop_assert!((0..moved.num_cells()).all(|k| moved.cell_area(k) > 0.0));
        prop_assert!(moved.shares_topology(&m));
    }

    #[test]
    fn field_io_round_trips(values in proptest::collection::vec(-1e6..1e6f64, 1..50)) {
        let mut buf = Vec::new();
        write_field(&values, &mut buf).unwrap();
        let back = read_field(std::io::BufReader::new(&buf[..])).unwrap();
        prop_assert_eq!(back, ScalarField::from_vec(values));
    }
}

#[test]
fn mesh_io_round_trips() {
    let m = mesh();
    let mut buf = Vec::new();
    write_mesh(&m, &mut buf).unwrap();
    let back = read_mesh(std::io::BufReader::new(&buf[..])).unwrap();
    assert_eq!(back.vertices(), m.vertices());
    assert_eq!(back.cells(), m.cells());
    assert_eq!(back.labels(), m.labels());
}
