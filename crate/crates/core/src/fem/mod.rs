//! P1 finite elements on [`TriangleMesh`]: nodal fields, the general elliptic
//! bilinear form, loads, norms, point evaluation and the linear solvers.

mod assembly;
mod coefficients;
mod io;
mod locate;
mod norms;
mod sparse;
mod target;

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::mesh::{Label, Point, TriangleMesh};

pub use assembly::{
    assemble_bilinear, assemble_bilinear_with, assemble_load, assemble_mass, assemble_quadrature_load,
    cellwise_gradient, lumped_mass, mesh_pattern,
};
pub use coefficients::{CoefficientSample, EllipticCoefficients};
pub use io::{read_field, read_vector_field, write_field, write_vector_field};
pub use locate::{evaluate_at_points, PointLocator};
pub use norms::{field_norms, h1_seminorm, l1_norm, l2_norm, lumped_l1, FieldNorms};
pub use sparse::{
    apply_dirichlet, conjugate_gradient, solve_dense, solve_dirichlet, solve_sparse, CsrMatrix, SolveStats, SparseSystem,
};
pub use target::{sample_target, AnalyticTarget, ReferenceField, TargetField, TargetSamples};

pub(crate) use sparse::norm2;

/// Default relative residual for the conjugate gradient solves.
pub const LINEAR_TOL: f64 = 1e-10;

/// Nodal values of a P1 scalar function.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        ScalarField(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        ScalarField(vec![value; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        ScalarField(values)
    }

    /// Nodal interpolant of `f` on the mesh vertices.
    pub fn interpolate(mesh: &TriangleMesh, f: impl Fn(Point) -> f64) -> Self {
        ScalarField(mesh.vertices().iter().map(|&x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Errors unless the field has one finite value per mesh vertex.
    pub fn check(&self, mesh: &TriangleMesh, what: &str) -> Result<()> {
        check_len(self.len(), mesh, what)?;
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(what.to_string()));
        }
        Ok(())
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        ScalarField(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ScalarField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        ScalarField(v)
    }
}

/// Nodal values of a P1 vector function.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct VectorField(Vec<[f64; 2]>);

impl VectorField {
    pub fn zeros(n: usize) -> Self {
        VectorField(vec![[0.0; 2]; n])
    }

    pub fn from_vec(values: Vec<[f64; 2]>) -> Self {
        VectorField(values)
    }

    pub fn interpolate(mesh: &TriangleMesh, f: impl Fn(Point) -> [f64; 2]) -> Self {
        VectorField(mesh.vertices().iter().map(|&x| f(x)).collect())
    }

    /// From interleaved components `[x0, y0, x1, y1, ...]`.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() % 2 != 0 {
            return Err(Error::Mismatch(format!("odd length {} for a vector field", flat.len())));
        }
        Ok(VectorField(flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect()))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.0.iter().flat_map(|v| [v[0], v[1]]).collect()
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.0
    }

    pub fn scaled(&self, s: f64) -> VectorField {
        VectorField(self.0.iter().map(|v| [s * v[0], s * v[1]]).collect())
    }

    pub fn check(&self, mesh: &TriangleMesh, what: &str) -> Result<()> {
        check_len(self.len(), mesh, what)?;
        if self.0.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(Error::NonFinite(what.to_string()));
        }
        Ok(())
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v[0].hypot(v[1])))
    }
}

impl Deref for VectorField {
    type Target = [[f64; 2]];
    fn deref(&self) -> &[[f64; 2]] {
        &self.0
    }
}

impl DerefMut for VectorField {
    fn deref_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.0
    }
}

pub(crate) fn check_len(len: usize, mesh: &TriangleMesh, what: &str) -> Result<()> {
    if len != mesh.num_vertices() {
        return Err(Error::Mismatch(format!(
            "{what} has {len} values for {} vertices",
            mesh.num_vertices()
        )));
    }
    Ok(())
}

/// Source term that is constant on each subdomain.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PiecewiseConstant {
    pub inner: f64,
    pub outer: f64,
}

impl PiecewiseConstant {
    pub fn new(inner: f64, outer: f64) -> Self {
        PiecewiseConstant { inner, outer }
    }

    pub fn uniform(value: f64) -> Self {
        PiecewiseConstant { inner: value, outer: value }
    }

    pub fn on(&self, label: Label) -> f64 {
        match label {
            Label::Inner => self.inner,
            Label::Outer => self.outer,
        }
    }

    /// Per-cell values on `mesh`.
    pub fn cell_values(&self, mesh: &TriangleMesh) -> Vec<f64> {
        mesh.labels().iter().map(|&l| self.on(l)).collect()
    }
}

/// Barycentric coordinates of the edge-midpoint rule. Each point has weight
/// one third of the cell area; the rule is exact for quadratics.
pub const QUAD_BARY: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

/// Area, vertices and hat-function gradients of one cell.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CellGeometry {
    pub pts: [Point; 3],
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl CellGeometry {
    pub fn new(mesh: &TriangleMesh, k: usize) -> Self {
        Self::from_points(mesh.cell_points(k))
    }

    pub fn from_points(pts: [Point; 3]) -> Self {
        let [p0, p1, p2] = pts;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let area = 0.5 * det;
        let mut grads = [[0.0; 2]; 3];
        for a in 0..3 {
            let (pb, pc) = (pts[(a + 1) % 3], pts[(a + 2) % 3]);
            grads[a] = [(pb[1] - pc[1]) / det, (pc[0] - pb[0]) / det];
        }
        CellGeometry { pts, area, grads }
    }

    pub fn quad_point(&self, q: usize) -> Point {
        let w = QUAD_BARY[q];
        [
            w[0] * self.pts[0][0] + w[1] * self.pts[1][0] + w[2] * self.pts[2][0],
            w[0] * self.pts[0][1] + w[1] * self.pts[1][1] + w[2] * self.pts[2][1],
        ]
    }

    /// Gradient of the P1 function with the given vertex values.
    pub fn gradient(&self, u: [f64; 3]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for a in 0..3 {
            g[0] += u[a] * self.grads[a][0];
            g[1] += u[a] * self.grads[a][1];
        }
        g
    }
}

pub(crate) fn cell_values(values: &[f64], cell: [usize; 3]) -> [f64; 3] {
    [values[cell[0]], values[cell[1]], values[cell[2]]]
}
