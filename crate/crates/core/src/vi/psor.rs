use super::DiscreteProblem;
use crate::error::{Error, Result};
use crate::fem::ScalarField;

const OMEGA: f64 = 1.8;

/// Projected SOR for `min ½ yᵀAy - Fᵀy` subject to `y ≤ φ` at the nodes and
/// `y = 0` on the outer boundary. Stops when the largest nodal change of a
/// sweep is at most `tol`.
pub fn psor_solve(p: &DiscreteProblem, tol: f64, max_iter: usize) -> Result<ScalarField> {
    let n = p.num_vertices();
    let a = &p.stiffness;
    let boundary = p.mesh.boundary_mask();
    let diag = a.diagonal();
    if (0..n).any(|i| !boundary[i] && !(diag[i] > 0.0)) {
        return Err(Error::InvalidParameter("stiffness matrix needs a positive diagonal".into()));
    }
    let mut u = vec![0.0; n];
    for sweep in 1..=max_iter {
        let mut change: f64 = 0.0;
        for i in 0..n {
            if boundary[i] {
                continue;
            }
            let mut s = p.load[i];
            for (j, v) in a.row(i) {
                if j != i {
                    s -= v * u[j];
                }
            }
            let gs = s / diag[i];
            let new = (u[i] + OMEGA * (gs - u[i])).min(p.phi[i]);
            change = change.max((new - u[i]).abs());
            u[i] = new;
        }
        if change <= tol {
            return Ok(ScalarField::from_vec(u));
        }
        if sweep == max_iter {
            return Err(Error::NonConvergence {
                solver: "projected SOR",
                iterations: max_iter,
                detail: format!("last change {change:e}"),
            });
        }
    }
    Ok(ScalarField::from_vec(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{EllipticCoefficients, PiecewiseConstant};
    use crate::mesh::generate_disk_mesh;
    use crate::vi::{solve_vi_pdas, Obstacle};

    fn problem(f: PiecewiseConstant, o: Obstacle) -> DiscreteProblem {
        let m = generate_disk_mesh(0.15, 0.08).unwrap();
        DiscreteProblem::new(&m, &EllipticCoefficients::laplacian(), f, &o).unwrap().with_linear_tol(1e-14)
    }

    #[test]
    fn zero_source_is_zero() {
        let p = problem(PiecewiseConstant::uniform(0.0), Obstacle::phi1());
        assert_eq!(psor_solve(&p, 1e-12, 10).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn far_obstacle_is_unconstrained_solve() {
        let p = problem(PiecewiseConstant::new(100.0, -10.0), Obstacle::constant(1e6));
        let u = psor_solve(&p, 1e-12, 100_000).unwrap();
        let free = p.solve_unconstrained().unwrap();
        assert!(u.sub(&free).max_abs() < 1e-10);
    }

    #[test]
    fn fixed_point_complementarity_and_pdas_agreement() {
        let tol = 1e-12;
        let p = problem(PiecewiseConstant::new(100.0, -10.0), Obstacle::phi2());
        let u = psor_solve(&p, tol, 100_000).unwrap();
        let au = p.stiffness.mul(&u);
        let scale = p.stiffness.diagonal().into_iter().fold(0.0, f64::max);
        for i in 0..p.num_vertices() {
            if p.mesh.is_boundary(i) {
                continue;
            }
            let r = p.load[i] - au[i];
            if u[i] == p.phi[i] {
                assert!(r >= -10.0 * tol * scale);
            } else {
                assert!(r.abs() <= 10.0 * tol * scale, "{r}");
            }
        }
        let s = solve_vi_pdas(&p, 0.0).unwrap();
        assert!(s.y.sub(&u).max_abs() < 1e-6);
    }
}
