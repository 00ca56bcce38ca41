use super::{cell_values, CellGeometry, CsrMatrix, EllipticCoefficients, PiecewiseConstant, QUAD_BARY};
use crate::error::{Error, Result};
use crate::mesh::{Point, TriangleMesh};
use crate::par::{map_range, Parallelism};

/// Sparsity pattern of a P1 operator: each vertex couples to itself and its
/// one-ring.
pub fn mesh_pattern(mesh: &TriangleMesh) -> Vec<Vec<usize>> {
    (0..mesh.num_vertices())
        .map(|i| {
            let mut row: Vec<usize> = mesh.neighbors(i).to_vec();
            row.push(i);
            row.sort_unstable();
            row
        })
        .collect()
}

/// Local matrix `K[k][l] = a(φ_l, φ_k)` on one cell.
fn local_bilinear(g: &CellGeometry, coeffs: &EllipticCoefficients) -> Result<[[f64; 3]; 3]> {
    let mut k = [[0.0; 3]; 3];
    let w = g.area / 3.0;
    for q in 0..3 {
        let s = coeffs.sample(g.quad_point(q));
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("coefficients at {:?}", g.quad_point(q))));
        }
        let lam = QUAD_BARY[q];
        for a in 0..3 {
            let ga = g.grads[a];
            for b in 0..3 {
                let gb = g.grads[b];
                let mut v = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        v += s.m[i][j] * gb[i] * ga[j];
                    }
                    v += s.d[i] * (gb[i] * lam[a] + lam[b] * ga[i]);
                }
                v += s.b * lam[b] * lam[a];
                k[a][b] += w * v;
            }
        }
    }
    Ok(k)
}

fn scatter(mesh: &TriangleMesh, locals: Vec<[[f64; 3]; 3]>) -> CsrMatrix {
    let mut m = CsrMatrix::from_pattern(&mesh_pattern(mesh));
    for (c, local) in mesh.cells().iter().zip(locals) {
        for a in 0..3 {
            for b in 0..3 {
                m.add(c[a], c[b], local[a][b]);
            }
        }
    }
    m
}

/// Stiffness matrix of the bilinear form without boundary conditions, entry
/// `(k, l) = a(φ_l, φ_k)`.
pub fn assemble_bilinear(mesh: &TriangleMesh, coeffs: &EllipticCoefficients) -> Result<CsrMatrix> {
    assemble_bilinear_with(mesh, coeffs, Parallelism::default())
}

/// [`assemble_bilinear`] with an explicit execution mode. Local matrices are
/// reduced in cell order, so both modes give identical bits.
pub fn assemble_bilinear_with(
    mesh: &TriangleMesh,
    coeffs: &EllipticCoefficients,
    mode: Parallelism,
) -> Result<CsrMatrix> {
    let locals = map_range(mesh.num_cells(), mode, |k| local_bilinear(&CellGeometry::new(mesh, k), coeffs));
    let locals = locals.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(scatter(mesh, locals))
}

/// Consistent mass matrix.
pub fn assemble_mass(mesh: &TriangleMesh) -> CsrMatrix {
    let locals = (0..mesh.num_cells())
        .map(|k| {
            let a = mesh.cell_area(k) / 12.0;
            let mut m = [[a; 3]; 3];
            (0..3).for_each(|i| m[i][i] = 2.0 * a);
            m
        })
        .collect();
    scatter(mesh, locals)
}

/// Row sums of the mass matrix, `m_i = Σ_{cells ∋ i} area / 3`.
pub fn lumped_mass(mesh: &TriangleMesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.num_vertices()];
    for (k, c) in mesh.cells().iter().enumerate() {
        let a = mesh.cell_area(k) / 3.0;
        for &i in c {
            m[i] += a;
        }
    }
    m
}

/// `∫ f φ_k` for a source constant on each subdomain.
pub fn assemble_load(mesh: &TriangleMesh, f: &PiecewiseConstant) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_vertices()];
    for (k, c) in mesh.cells().iter().enumerate() {
        let v = f.on(mesh.label(k)) * mesh.cell_area(k) / 3.0;
        for &i in c {
            b[i] += v;
        }
    }
    b
}

/// `∫ g φ_k` with the edge-midpoint rule, where `g(cell, q, x)` is the
/// integrand at quadrature point `q` of `cell`.
pub fn assemble_quadrature_load(
    mesh: &TriangleMesh,
    mode: Parallelism,
    g: impl Fn(usize, usize, Point) -> f64 + Sync + Send,
) -> Vec<f64> {
    let locals = map_range(mesh.num_cells(), mode, |k| {
        let geo = CellGeometry::new(mesh, k);
        let w = geo.area / 3.0;
        let mut l = [0.0; 3];
        for q in 0..3 {
            let v = w * g(k, q, geo.quad_point(q));
            for a in 0..3 {
                l[a] += v * QUAD_BARY[q][a];
            }
        }
        l
    });
    let mut b = vec![0.0; mesh.num_vertices()];
    for (c, l) in mesh.cells().iter().zip(locals) {
        for a in 0..3 {
            b[c[a]] += l[a];
        }
    }
    b
}

/// Exact gradient of the P1 interpolant on each cell.
pub fn cellwise_gradient(mesh: &TriangleMesh, values: &[f64]) -> Result<Vec<[f64; 2]>> {
    super::check_len(values.len(), mesh, "field")?;
    (0..mesh.num_cells())
        .map(|k| {
            let g = CellGeometry::new(mesh, k);
            if !(g.area > 0.0) {
                return Err(Error::InvalidMesh(format!("degenerate cell {k}")));
            }
            Ok(g.gradient(cell_values(values, mesh.cell(k))))
        })
        .collect()
}
