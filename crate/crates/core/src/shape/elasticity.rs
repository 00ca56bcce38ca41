use super::ShapeFunctional;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_bilinear, mesh_pattern, solve_dirichlet, CellGeometry, CsrMatrix, EllipticCoefficients, ScalarField,
    VectorField, LINEAR_TOL,
};
use crate::mesh::TriangleMesh;
use crate::par::{map_range, Parallelism};

/// Harmonic `μ` with `μ = mu_max` on the interface and `mu_min` on `∂Ω`.
pub fn solve_mu_elas(mesh: &TriangleMesh, mu_min: f64, mu_max: f64) -> Result<ScalarField> {
    if !(mu_min >= 0.0 && mu_max >= mu_min && mu_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 <= mu_min <= mu_max, got {mu_min}, {mu_max}")));
    }
    let a = assemble_bilinear(mesh, &EllipticCoefficients::laplacian())?;
    let mut nodes: Vec<usize> = mesh.boundary_vertices().to_vec();
    let mut vals = vec![mu_min; nodes.len()];
    for v in mesh.interface_vertices() {
        if !mesh.is_boundary(v) {
            nodes.push(v);
            vals.push(mu_max);
        }
    }
    let mu = solve_dirichlet(a, vec![0.0; mesh.num_vertices()], &nodes, &vals, 1e-12)?;
    // clip rounding noise so the discrete maximum principle holds exactly
    Ok(ScalarField::from_vec(mu.into_iter().map(|v| v.clamp(mu_min, mu_max)).collect()))
}

/// Riesz representative `U` of a shape functional and `‖U‖ = sqrt(DJ[U])`.
#[derive(Clone, Debug)]
pub struct ShapeGradient {
    pub field: VectorField,
    pub norm: f64,
}

fn elasticity_matrix(mesh: &TriangleMesh, mu: &[f64], lambda: f64, mode: Parallelism) -> CsrMatrix {
    let rows: Vec<Vec<usize>> = mesh_pattern(mesh)
        .into_iter()
        .flat_map(|r| {
            let cols: Vec<usize> = r.iter().flat_map(|&j| [2 * j, 2 * j + 1]).collect();
            [cols.clone(), cols]
        })
        .collect();
    let mut k = CsrMatrix::from_pattern(&rows);
    let locals = map_range(mesh.num_cells(), mode, |c| {
        let geo = CellGeometry::new(mesh, c);
        let cell = mesh.cell(c);
        let mu_c = (mu[cell[0]] + mu[cell[1]] + mu[cell[2]]) / 3.0;
        let mut l = [[0.0; 6]; 6];
        for a in 0..3 {
            for ci in 0..2 {
                for b in 0..3 {
                    for di in 0..2 {
                        let (ga, gb) = (geo.grads[a], geo.grads[b]);
                        let dot = if ci == di { ga[0] * gb[0] + ga[1] * gb[1] } else { 0.0 };
                        let v = mu_c * (dot + ga[di] * gb[ci]) + lambda * ga[ci] * gb[di];
                        l[2 * a + ci][2 * b + di] = geo.area * v;
                    }
                }
            }
        }
        l
    });
    for (cell, l) in mesh.cells().iter().zip(locals) {
        for r in 0..6 {
            for s in 0..6 {
                k.add(2 * cell[r / 2] + r % 2, 2 * cell[s / 2] + s % 2, l[r][s]);
            }
        }
    }
    k
}

/// Solves `∫ σ(U):ε(V) = DJ[V]` for all `V` vanishing on `∂Ω`, with
/// `σ(U) = λ tr ε(U) I + 2μ ε(U)`.
pub fn shape_gradient(mesh: &TriangleMesh, func: &ShapeFunctional, mu: &ScalarField, lambda_elas: f64) -> Result<ShapeGradient> {
    crate::fem::check_len(func.len(), mesh, "shape functional")?;
    mu.check(mesh, "mu_elas")?;
    let n = mesh.num_vertices();
    if func.max_abs() == 0.0 {
        return Ok(ShapeGradient { field: VectorField::zeros(n), norm: 0.0 });
    }
    if mu.iter().all(|&m| m == 0.0) {
        return Err(Error::InvalidParameter("elasticity coefficient vanishes identically".into()));
    }
    let k = elasticity_matrix(mesh, mu, lambda_elas, Parallelism::default());
    let mut rhs: Vec<f64> = func.values.iter().flat_map(|v| [v[0], v[1]]).collect();
    let nodes: Vec<usize> = mesh.boundary_vertices().iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect();
    for &i in &nodes {
        rhs[i] = 0.0;
    }
    let zeros = vec![0.0; nodes.len()];
    let u = solve_dirichlet(k, rhs, &nodes, &zeros, LINEAR_TOL.min(1e-12))?;
    let field = VectorField::from_flat(&u)?;
    let energy = func.apply(&field);
    Ok(ShapeGradient { norm: energy.max(0.0).sqrt(), field })
}
