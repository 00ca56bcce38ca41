use super::smoothing::heaviside_open;
use super::{DiscreteProblem, Regularization, Smoother};
use crate::error::{Error, Result};
use crate::fem::{norm2, ScalarField};

const MAX_ITERS: usize = 50;
const MIN_DAMPING: f64 = 1.0 / 1024.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
}

/// `A y + M_L g(λ̄ + c(y - φ)) - F`, zero on boundary rows.
fn residual(p: &DiscreteProblem, reg: &Regularization, g: &dyn Fn(f64) -> f64, y: &[f64]) -> Vec<f64> {
    let mut r = p.stiffness.mul(y);
    for i in 0..r.len() {
        r[i] += p.lumped[i] * g(reg.lambda_bar[i] + reg.c * (y[i] - p.phi[i])) - p.load[i];
    }
    for &i in p.mesh.boundary_vertices() {
        r[i] = 0.0;
    }
    r
}

/// Damped Newton on the nodal nonlinearity `g` with derivative `dg`. Stops at
/// `‖R‖₂ ≤ tol · max(1, ‖F‖₂)`.
fn newton(
    p: &DiscreteProblem,
    reg: &Regularization,
    g: &dyn Fn(f64) -> f64,
    dg: &dyn Fn(f64) -> f64,
    tol: f64,
    name: &'static str,
) -> Result<(ScalarField, NewtonReport)> {
    if reg.lambda_bar.len() != p.num_vertices() {
        return Err(Error::Mismatch("lambda_bar does not match the mesh".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let n = p.num_vertices();
    let target = tol * norm2(&p.load).max(1.0);
    let mut y = vec![0.0; n];
    let mut r = residual(p, reg, g, &y);
    let mut rn = norm2(&r);
    for it in 0..=MAX_ITERS {
        if rn <= target {
            return Ok((ScalarField::from_vec(y), NewtonReport { iterations: it, residual: rn }));
        }
        if it == MAX_ITERS {
            break;
        }
        let mut jac = p.stiffness.clone();
        let diag: Vec<f64> = (0..n)
            .map(|i| reg.c * p.lumped[i] * dg(reg.lambda_bar[i] + reg.c * (y[i] - p.phi[i])))
            .collect();
        jac.add_to_diagonal(&diag);
        let step = p.solve_linear(jac, r.iter().map(|v| -v).collect(), &[], &[])?;

        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect();
            let rt = residual(p, reg, g, &trial);
            let rtn = norm2(&rt);
            if rtn < rn || alpha <= MIN_DAMPING {
                if rtn >= rn {
                    // no damped step reduces the residual: take the full step
                    y.iter_mut().zip(step.iter()).for_each(|(a, d)| *a += d);
                    r = residual(p, reg, g, &y);
                    rn = norm2(&r);
                } else {
                    (y, r, rn) = (trial, rt, rtn);
                }
                break;
            }
            alpha *= 0.5;
        }
        if !rn.is_finite() {
            return Err(Error::NonFinite(format!("{name} residual")));
        }
    }
    Err(Error::NonConvergence { solver: name, iterations: MAX_ITERS, detail: format!("residual {rn:e}") })
}

/// Fully regularized state: `a(y, v) + (max_γ(λ̄ + c(y - φ)), v) = (f, v)`.
pub fn solve_state_smoothed(p: &DiscreteProblem, reg: &Regularization, smoother: &Smoother, tol: f64) -> Result<ScalarField> {
    solve_state_smoothed_report(p, reg, smoother, tol).map(|(y, _)| y)
}

pub(crate) fn solve_state_smoothed_report(
    p: &DiscreteProblem,
    reg: &Regularization,
    smoother: &Smoother,
    tol: f64,
) -> Result<(ScalarField, NewtonReport)> {
    let s = *smoother;
    newton(p, reg, &move |t| s.max(t), &move |t| s.sign(t), tol, "smoothed state Newton")
}

/// Regularized state: `a(y, v) + (max(0, λ̄ + c(y - φ)), v) = (f, v)`, by
/// semi-smooth Newton.
pub fn solve_state_regularized(p: &DiscreteProblem, reg: &Regularization, tol: f64) -> Result<ScalarField> {
    newton(p, reg, &|t: f64| t.max(0.0), &heaviside_open, tol, "regularized state Newton").map(|(y, _)| y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{field_norms, EllipticCoefficients, PiecewiseConstant};
    use crate::mesh::generate_disk_mesh;
    use crate::vi::Obstacle;

    fn problem(f: PiecewiseConstant, obstacle: Obstacle) -> DiscreteProblem {
        let m = generate_disk_mesh(0.15, 0.06).unwrap();
        DiscreteProblem::new(&m, &EllipticCoefficients::laplacian(), f, &obstacle).unwrap().with_linear_tol(1e-13)
    }

    #[test]
    fn inactive_obstacle_gives_elliptic_solution() {
        let p = problem(PiecewiseConstant::new(100.0, -10.0), Obstacle::constant(1e6));
        let reg = Regularization::new(1e3, ScalarField::zeros(p.num_vertices())).unwrap();
        let free = p.solve_unconstrained().unwrap();
        let ys = solve_state_smoothed(&p, &reg, &Smoother::new(1e3).unwrap(), 1e-12).unwrap();
        let yr = solve_state_regularized(&p, &reg, 1e-12).unwrap();
        assert!(field_norms(&p.mesh, &ys.sub(&free)).unwrap().h1 < 1e-8);
        assert!(field_norms(&p.mesh, &yr.sub(&free)).unwrap().h1 < 1e-8);
    }

    #[test]
    fn zero_data_gives_zero_state() {
        let p = problem(PiecewiseConstant::uniform(0.0), Obstacle::phi1());
        let reg = Regularization::new(1e2, ScalarField::zeros(p.num_vertices())).unwrap();
        let y = solve_state_regularized(&p, &reg, 1e-12).unwrap();
        assert!(y.max_abs() == 0.0);
        let y = solve_state_smoothed(&p, &reg, &Smoother::new(10.0).unwrap(), 1e-12).unwrap();
        assert!(y.max_abs() < 1e-14);
    }

    #[test]
    fn large_penalty_nearly_feasible() {
        let p = problem(PiecewiseConstant::new(100.0, -10.0), Obstacle::phi1());
        let reg = Regularization::new(1e6, ScalarField::zeros(p.num_vertices())).unwrap();
        let (y, rep) = solve_state_smoothed_report(&p, &reg, &Smoother::new(1e8).unwrap(), 1e-12).unwrap();
        assert!(rep.iterations < 50);
        let viol = y.iter().zip(&p.phi).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        assert!(viol <= 1e-4, "violation {viol}");
        let yr = solve_state_regularized(&p, &reg, 1e-12).unwrap();
        let viol = yr.iter().zip(&p.phi).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        assert!(viol <= 1e-4 && viol > 0.0);
    }
}
