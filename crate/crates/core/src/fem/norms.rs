use super::{cell_values, check_len, lumped_mass, CellGeometry};
use crate::error::Result;
use crate::mesh::TriangleMesh;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldNorms {
    pub l1: f64,
    pub l2: f64,
    /// Full norm `sqrt(‖u‖² + ‖∇u‖²)`.
    pub h1: f64,
    pub h1_semi: f64,
}

/// `∫_T |u|` for a linear function with vertex values `u` on a cell of area `a`.
fn cell_l1(u: [f64; 3], a: f64) -> f64 {
    let pos = u.iter().filter(|&&v| v > 0.0).count();
    let neg = u.iter().filter(|&&v| v < 0.0).count();
    let mean = (u[0] + u[1] + u[2]) / 3.0;
    if pos == 0 || neg == 0 {
        return a * mean.abs();
    }
    // |u| = 2 u⁺ − u, or 2 u⁻ + u; pick the sign held by a single vertex
    let (w, sign) = if pos == 1 { (u, 1.0) } else { (u.map(|v| -v), -1.0) };
    let i = (0..3).find(|&i| w[i] > 0.0).unwrap();
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    let tj = w[i] / (w[i] - w[j]);
    let tk = w[i] / (w[i] - w[k]);
    let positive_part = a * tj * tk * w[i] / 3.0;
    2.0 * positive_part - sign * a * mean
}

/// Exact `L¹` norm of a P1 field.
pub fn l1_norm(mesh: &TriangleMesh, u: &[f64]) -> Result<f64> {
    check_len(u.len(), mesh, "field")?;
    Ok((0..mesh.num_cells()).map(|k| cell_l1(cell_values(u, mesh.cell(k)), mesh.cell_area(k))).sum())
}

/// Exact `L²` norm of a P1 field.
pub fn l2_norm(mesh: &TriangleMesh, u: &[f64]) -> Result<f64> {
    check_len(u.len(), mesh, "field")?;
    let s: f64 = (0..mesh.num_cells())
        .map(|k| {
            let [a, b, c] = cell_values(u, mesh.cell(k));
            mesh.cell_area(k) / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a)
        })
        .sum();
    Ok(s.max(0.0).sqrt())
}

/// `‖∇u‖_{L²}`.
pub fn h1_seminorm(mesh: &TriangleMesh, u: &[f64]) -> Result<f64> {
    check_len(u.len(), mesh, "field")?;
    let s: f64 = (0..mesh.num_cells())
        .map(|k| {
            let g = CellGeometry::new(mesh, k);
            let d = g.gradient(cell_values(u, mesh.cell(k)));
            g.area * (d[0] * d[0] + d[1] * d[1])
        })
        .sum();
    Ok(s.sqrt())
}

pub fn field_norms(mesh: &TriangleMesh, u: &[f64]) -> Result<FieldNorms> {
    let l1 = l1_norm(mesh, u)?;
    let l2 = l2_norm(mesh, u)?;
    let h1_semi = h1_seminorm(mesh, u)?;
    Ok(FieldNorms { l1, l2, h1: (l2 * l2 + h1_semi * h1_semi).sqrt(), h1_semi })
}

/// `Σ m_i |u_i|` with the lumped mass `m`, the nodal-quadrature `L¹` norm.
pub fn lumped_l1(mesh: &TriangleMesh, u: &[f64]) -> Result<f64> {
    check_len(u.len(), mesh, "field")?;
    Ok(lumped_mass(mesh).iter().zip(u).map(|(m, v)| m * v.abs()).sum())
}
