//! Obstacle problem `y ≤ φ`: the smoothed and regularized state equations
//! solved by Newton, the unregularized variational inequality solved by a
//! primal-dual active set method, and a projected SOR reference solver.

mod expr;
mod newton;
mod obstacle;
mod pdas;
mod psor;
mod smoothing;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_bilinear_with, assemble_load, lumped_mass, solve_dirichlet, CsrMatrix, EllipticCoefficients,
    PiecewiseConstant, ScalarField, LINEAR_TOL,
};
use crate::mesh::TriangleMesh;
use crate::par::Parallelism;

pub use expr::Expr;
pub use newton::{solve_state_regularized, solve_state_smoothed, NewtonReport};
pub use obstacle::Obstacle;
pub use pdas::{solve_vi_pdas, solve_vi_pdas_from, PdasSolution, PdasStop, PDAS_MAX_ITERS};
pub use psor::psor_solve;
pub use smoothing::{max_gamma, sign, sign_gamma, Regularization, Smoother};

/// Everything about the discrete state equation that does not depend on the
/// regularization: stiffness, load, lumped mass and nodal obstacle values on
/// one mesh. Homogeneous Dirichlet conditions hold on the outer boundary.
#[derive(Clone, Debug)]
pub struct DiscreteProblem {
    pub mesh: TriangleMesh,
    pub coeffs: EllipticCoefficients,
    pub f: PiecewiseConstant,
    pub obstacle: Obstacle,
    /// Stiffness matrix without boundary conditions.
    pub stiffness: CsrMatrix,
    pub load: Vec<f64>,
    pub lumped: Vec<f64>,
    pub phi: Vec<f64>,
    pub linear_tol: f64,
    pub mode: Parallelism,
}

impl DiscreteProblem {
    pub fn new(mesh: &TriangleMesh, coeffs: &EllipticCoefficients, f: PiecewiseConstant, obstacle: &Obstacle) -> Result<Self> {
        Self::with_mode(mesh, coeffs, f, obstacle, Parallelism::default())
    }

    pub fn with_mode(
        mesh: &TriangleMesh,
        coeffs: &EllipticCoefficients,
        f: PiecewiseConstant,
        obstacle: &Obstacle,
        mode: Parallelism,
    ) -> Result<Self> {
        if !f.inner.is_finite() || !f.outer.is_finite() {
            return Err(Error::NonFinite("source term".into()));
        }
        let phi: Vec<f64> = mesh.vertices().iter().map(|&x| obstacle.value(x)).collect();
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("obstacle {}", obstacle.name())));
        }
        Ok(DiscreteProblem {
            mesh: mesh.clone(),
            coeffs: coeffs.clone(),
            f,
            obstacle: obstacle.clone(),
            stiffness: assemble_bilinear_with(mesh, coeffs, mode)?,
            load: assemble_load(mesh, &f),
            lumped: lumped_mass(mesh),
            phi,
            linear_tol: LINEAR_TOL,
            mode,
        })
    }

    pub fn with_linear_tol(mut self, tol: f64) -> Self {
        self.linear_tol = tol;
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh.num_vertices()
    }

    /// `λ̄` of this problem, see [`lambda_bar`].
    pub fn lambda_bar(&self) -> ScalarField {
        lambda_bar(&self.mesh, &self.f, &self.obstacle)
    }

    /// Regularization with penalty `c` and the default `λ̄`.
    pub fn regularization(&self, c: f64) -> Result<Regularization> {
        Regularization::new(c, self.lambda_bar())
    }

    /// Solves `A y = F` with homogeneous boundary values, ignoring the obstacle.
    pub fn solve_unconstrained(&self) -> Result<ScalarField> {
        self.solve_linear(self.stiffness.clone(), self.load.clone(), &[], &[])
    }

    /// Solves `matrix x = rhs` with `x = 0` on the outer boundary and the extra
    /// Dirichlet data `(nodes, values)`.
    pub(crate) fn solve_linear(&self, matrix: CsrMatrix, rhs: Vec<f64>, nodes: &[usize], values: &[f64]) -> Result<ScalarField> {
        let mut all: Vec<usize> = self.mesh.boundary_vertices().to_vec();
        let mut vals = vec![0.0; all.len()];
        all.extend_from_slice(nodes);
        vals.extend_from_slice(values);
        solve_dirichlet(matrix, rhs, &all, &vals, self.linear_tol).map(ScalarField::from_vec)
    }
}

/// `λ̄_i = max(0, f + Δφ)` at each vertex, taking the largest `f` among the
/// cells around the vertex.
pub fn lambda_bar(mesh: &TriangleMesh, f: &PiecewiseConstant, obstacle: &Obstacle) -> ScalarField {
    let fc = f.cell_values(mesh);
    ScalarField::from_vec(
        (0..mesh.num_vertices())
            .map(|i| {
                let fmax = mesh.vertex_cells(i).iter().map(|&k| fc[k]).fold(f64::NEG_INFINITY, f64::max);
                (fmax + obstacle.laplacian(mesh.vertex(i))).max(0.0)
            })
            .collect(),
    )
}
