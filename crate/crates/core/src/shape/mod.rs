//! Shape derivatives of the tracking objective and their Steklov-Poincaré
//! representation by linear elasticity.

mod derivative;
mod elasticity;

use crate::error::Result;
use crate::fem::{check_len, VectorField};
use crate::mesh::{dist, interface_adjacent_vertices, TriangleMesh};

pub use derivative::{assemble_dj_laplacian, assemble_dj_limit, assemble_dj_obstacle_terms, assemble_dj_smoothed};
pub use elasticity::{shape_gradient, solve_mu_elas, ShapeGradient};

/// Dual vector of a shape derivative: entry `i` holds `DJ[e_1 φ_i]` and
/// `DJ[e_2 φ_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeFunctional {
    pub values: Vec<[f64; 2]>,
}

impl ShapeFunctional {
    pub fn zeros(n: usize) -> Self {
        ShapeFunctional { values: vec![[0.0; 2]; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `DJ[V]`.
    pub fn apply(&self, v: &VectorField) -> f64 {
        self.values.iter().zip(v.iter()).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum()
    }

    pub fn add(&mut self, other: &ShapeFunctional) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            a[0] += b[0];
            a[1] += b[1];
        }
    }

    pub fn scaled(&self, s: f64) -> ShapeFunctional {
        ShapeFunctional { values: self.values.iter().map(|v| [s * v[0], s * v[1]]).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v[0].abs()).max(v[1].abs()))
    }

    /// Number of vertices with a nonzero entry.
    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|v| v[0] != 0.0 || v[1] != 0.0).count()
    }

    pub fn as_field(&self) -> VectorField {
        VectorField::from_vec(self.values.clone())
    }
}

/// `ν` times the derivative of the polygonal interface length as a dual
/// vector: each edge `a → b` contributes `t·(V_b - V_a)` with unit tangent `t`.
pub fn perimeter_functional(mesh: &TriangleMesh, nu: f64) -> ShapeFunctional {
    let mut out = ShapeFunctional::zeros(mesh.num_vertices());
    for &[a, b] in mesh.interface_edges() {
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let len = dist(pa, pb);
        let t = [nu * (pb[0] - pa[0]) / len, nu * (pb[1] - pa[1]) / len];
        for d in 0..2 {
            out.values[b][d] += t[d];
            out.values[a][d] -= t[d];
        }
    }
    out
}

/// `ν d/dt length(Γ_int + tV)` at `t = 0`.
pub fn perimeter_derivative(mesh: &TriangleMesh, nu: f64, v: &VectorField) -> Result<f64> {
    check_len(v.len(), mesh, "vector field")?;
    Ok(perimeter_functional(mesh, nu).apply(v))
}

/// Zeroes every entry outside the interface vertices and their one-ring.
pub fn mask_to_interface(func: &ShapeFunctional, mesh: &TriangleMesh) -> ShapeFunctional {
    let mut out = ShapeFunctional::zeros(func.len());
    for i in interface_adjacent_vertices(mesh) {
        out.values[i] = func.values[i];
    }
    out
}
