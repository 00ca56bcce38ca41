//! Adjoint equations for the tracking functional `½‖y - ȳ‖²`: the smoothed
//! adjoint `p_{γ,c}`, the regularized limit `p_c`, and the limit adjoint `p`
//! that vanishes on the active set.

use crate::error::{Error, Result};
use crate::fem::{assemble_quadrature_load, ScalarField, TargetSamples, QUAD_BARY};
use crate::mesh::TriangleMesh;
use crate::vi::{sign, DiscreteProblem, Regularization, Smoother};

/// Default detection tolerance for the active set.
pub const EPS_ADJ: f64 = 1e-9;

/// Per-vertex active flags.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSet {
    pub mask: Vec<bool>,
    pub eps_adj: f64,
}

impl ActiveSet {
    pub fn empty(n: usize) -> Self {
        ActiveSet { mask: vec![false; n], eps_adj: 0.0 }
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).collect()
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&a| a).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask[i]
    }

    /// Vertices of `self` missing from `other`.
    pub fn difference(&self, other: &ActiveSet) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i] && !other.mask[i]).collect()
    }
}

/// `A = {y - φ ≥ -eps_adj}` at the vertices.
pub fn detect_active_set(p: &DiscreteProblem, y: &[f64], eps_adj: f64) -> Result<ActiveSet> {
    if !(eps_adj >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps_adj must be nonnegative, got {eps_adj}")));
    }
    crate::fem::check_len(y.len(), &p.mesh, "state")?;
    Ok(ActiveSet { mask: y.iter().zip(&p.phi).map(|(y, f)| y - f >= -eps_adj).collect(), eps_adj })
}

/// `A_c = {λ̄ + c(y_c - φ) ≥ 0}` at the vertices.
pub fn detect_active_set_c(p: &DiscreteProblem, y_c: &[f64], reg: &Regularization) -> Result<ActiveSet> {
    crate::fem::check_len(y_c.len(), &p.mesh, "state")?;
    let mask = reg.argument(y_c, &p.phi).into_iter().map(|t| sign(t) == 1.0).collect();
    Ok(ActiveSet { mask, eps_adj: 0.0 })
}

/// `-∫ (y - ȳ) φ_k` with the edge-midpoint rule.
pub fn adjoint_rhs(p: &DiscreteProblem, y: &[f64], ybar: &TargetSamples) -> Result<Vec<f64>> {
    crate::fem::check_len(y.len(), &p.mesh, "state")?;
    if ybar.value.len() != p.mesh.num_cells() {
        return Err(Error::Mismatch("target samples belong to a different mesh".into()));
    }
    Ok(assemble_quadrature_load(&p.mesh, p.mode, |k, q, _| {
        let c = p.mesh.cell(k);
        let w = QUAD_BARY[q];
        let yq = w[0] * y[c[0]] + w[1] * y[c[1]] + w[2] * y[c[2]];
        -(yq - ybar.value[k][q])
    }))
}

/// `½ ∫ (y - ȳ)²` with the edge-midpoint rule, the functional whose
/// derivative [`adjoint_rhs`] negates.
pub fn tracking_value(p: &DiscreteProblem, y: &[f64], ybar: &TargetSamples) -> Result<f64> {
    tracking_integral(&p.mesh, y, ybar)
}

/// [`tracking_value`] without a discrete problem at hand.
pub fn tracking_integral(mesh: &TriangleMesh, y: &[f64], ybar: &TargetSamples) -> Result<f64> {
    crate::fem::check_len(y.len(), mesh, "state")?;
    if ybar.value.len() != mesh.num_cells() {
        return Err(Error::Mismatch("target samples belong to a different mesh".into()));
    }
    Ok((0..mesh.num_cells())
        .map(|k| {
            let c = mesh.cell(k);
            let s: f64 = (0..3)
                .map(|q| {
                    let w = QUAD_BARY[q];
                    let r = w[0] * y[c[0]] + w[1] * y[c[1]] + w[2] * y[c[2]] - ybar.value[k][q];
                    r * r
                })
                .sum();
            0.5 * mesh.cell_area(k) / 3.0 * s
        })
        .sum())
}

fn solve_with_reaction(
    p: &DiscreteProblem,
    y: &[f64],
    ybar: &TargetSamples,
    reaction: Vec<f64>,
    dirichlet: &[usize],
) -> Result<ScalarField> {
    let rhs = adjoint_rhs(p, y, ybar)?;
    let mut a = p.stiffness.transpose();
    a.add_to_diagonal(&reaction);
    let zeros = vec![0.0; dirichlet.len()];
    p.solve_linear(a, rhs, dirichlet, &zeros)
}

/// `a(v, p) + c (sign_γ(λ̄ + c(y - φ)) p, v) = -(y - ȳ, v)`, lumped reaction.
pub fn solve_adjoint_smoothed(
    p: &DiscreteProblem,
    y: &[f64],
    ybar: &TargetSamples,
    reg: &Regularization,
    smoother: &Smoother,
) -> Result<ScalarField> {
    let t = reg.argument(y, &p.phi);
    let reaction = (0..p.num_vertices()).map(|i| reg.c * p.lumped[i] * smoother.sign(t[i])).collect();
    solve_with_reaction(p, y, ybar, reaction, &[])
}

/// `a(v, p_c) + c (𝟙_{A_c} p_c, v) = -(y_c - ȳ, v)`, lumped reaction.
pub fn solve_adjoint_regularized_limit(
    p: &DiscreteProblem,
    y_c: &[f64],
    ybar: &TargetSamples,
    reg: &Regularization,
    active_c: &ActiveSet,
) -> Result<ScalarField> {
    if active_c.mask.len() != p.num_vertices() {
        return Err(Error::Mismatch("active set does not match the mesh".into()));
    }
    let reaction = (0..p.num_vertices())
        .map(|i| if active_c.mask[i] { reg.c * p.lumped[i] } else { 0.0 })
        .collect();
    solve_with_reaction(p, y_c, ybar, reaction, &[])
}

/// `a(v, p) = -(y - ȳ, v)` with `p = 0` on the active set and on `∂Ω`.
pub fn solve_adjoint_limit(p: &DiscreteProblem, y: &[f64], ybar: &TargetSamples, active: &ActiveSet) -> Result<ScalarField> {
    if active.mask.len() != p.num_vertices() {
        return Err(Error::Mismatch("active set does not match the mesh".into()));
    }
    let boundary = p.mesh.boundary_mask();
    let nodes: Vec<usize> = active.indices().into_iter().filter(|&i| !boundary[i]).collect();
    solve_with_reaction(p, y, ybar, vec![0.0; p.num_vertices()], &nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{sample_target, AnalyticTarget, EllipticCoefficients, PiecewiseConstant, ReferenceField};
    use crate::mesh::{generate_disk_mesh, Label, Point};
    use crate::par::Parallelism;
    use crate::vi::{solve_state_smoothed, solve_vi_pdas, Obstacle};

    fn setup() -> DiscreteProblem {
        let m = generate_disk_mesh(0.15, 0.05).unwrap();
        DiscreteProblem::new(&m, &EllipticCoefficients::laplacian(), PiecewiseConstant::new(100.0, -10.0), &Obstacle::phi1())
            .unwrap()
            .with_linear_tol(1e-13)
    }

    fn self_target(p: &DiscreteProblem, y: &ScalarField) -> TargetSamples {
        let r = ReferenceField::new(p.mesh.clone(), y.clone()).unwrap();
        sample_target(&p.mesh, &r, Parallelism::Sequential).unwrap()
    }

    #[test]
    fn matching_target_gives_zero_adjoints() {
        let p = setup();
        let reg = p.regularization(1e3).unwrap();
        let sm = Smoother::new(1e3).unwrap();
        let y = solve_state_smoothed(&p, &reg, &sm, 1e-12).unwrap();
        let t = self_target(&p, &y);
        assert!(solve_adjoint_smoothed(&p, &y, &t, &reg, &sm).unwrap().max_abs() < 1e-12);
        let ac = detect_active_set_c(&p, &y, &reg).unwrap();
        assert!(solve_adjoint_regularized_limit(&p, &y, &t, &reg, &ac).unwrap().max_abs() < 1e-12);
        let a = detect_active_set(&p, &y, EPS_ADJ).unwrap();
        assert!(solve_adjoint_limit(&p, &y, &t, &a).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn limit_adjoint_vanishes_on_active_set() {
        let p = setup();
        let s = solve_vi_pdas(&p, 0.0).unwrap();
        let t = sample_target(&p.mesh, &AnalyticTarget(|_: Point| (0.1, [0.0; 2])), Parallelism::Sequential).unwrap();
        let a = detect_active_set(&p, &s.y, EPS_ADJ).unwrap();
        assert!(!a.is_empty());
        for i in a.indices() {
            assert!(p.mesh.vertex_cells(i).iter().any(|&k| p.mesh.label(k) == Label::Inner));
        }
        let adj = solve_adjoint_limit(&p, &s.y, &t, &a).unwrap();
        for i in a.indices() {
            assert_eq!(adj[i], 0.0);
        }
        assert!(adj.max_abs() > 0.0);

        let all = ActiveSet { mask: vec![true; p.num_vertices()], eps_adj: 0.0 };
        assert_eq!(solve_adjoint_limit(&p, &s.y, &t, &all).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn empty_sets_reduce_to_plain_adjoint() {
        let p = setup();
        let y = p.solve_unconstrained().unwrap();
        let t = sample_target(&p.mesh, &AnalyticTarget(|x: Point| (x[0], [1.0, 0.0])), Parallelism::Sequential).unwrap();
        let reg = Regularization::new(1e3, ScalarField::zeros(p.num_vertices())).unwrap();
        let empty = ActiveSet::empty(p.num_vertices());
        let a = solve_adjoint_limit(&p, &y, &t, &empty).unwrap();
        let b = solve_adjoint_regularized_limit(&p, &y, &t, &reg, &empty).unwrap();
        assert!(a.sub(&b).max_abs() < 1e-12);
    }

    #[test]
    fn active_set_conventions() {
        let p = setup();
        let phi = ScalarField::from_vec(p.phi.clone());
        assert_eq!(detect_active_set(&p, &phi, 0.0).unwrap().len(), p.num_vertices());
        let low: Vec<f64> = p.phi.iter().map(|v| v - 1.0).collect();
        assert!(detect_active_set(&p, &low, 1e-2).unwrap().is_empty());
        let reg = Regularization::new(10.0, ScalarField::zeros(p.num_vertices())).unwrap();
        assert_eq!(detect_active_set_c(&p, &phi, &reg).unwrap().len(), p.num_vertices());
        assert!(detect_active_set_c(&p, &low, &reg).unwrap().is_empty());
    }
}
