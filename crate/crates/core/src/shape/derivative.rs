//! Shape derivatives as dual vectors against the P1 vector basis `e_d φ_b`.
//!
//! For `V = e_d φ_b` on a cell: `DV = e_d ⊗ ∇φ_b`, `div V = ∂_d φ_b` and
//! `V(x_q) = e_d φ_b(x_q)`. Every term is integrated with the same rules used
//! for the state equation (edge midpoints, nodal lumping for the obstacle
//! nonlinearity), so the result is the derivative of the discrete objective.

use super::ShapeFunctional;
use crate::adjoint::{adjoint_rhs, ActiveSet};
use crate::error::{Error, Result};
use crate::fem::{cell_values, CellGeometry, TargetSamples, QUAD_BARY};
use crate::par::map_range;
use crate::vi::{DiscreteProblem, Regularization, Smoother};

type Local = [[f64; 2]; 3];

fn interp(u: [f64; 3], q: usize) -> f64 {
    let w = QUAD_BARY[q];
    w[0] * u[0] + w[1] * u[1] + w[2] * u[2]
}

fn check_inputs(p: &DiscreteProblem, y: &[f64], adj: &[f64], ybar: &TargetSamples) -> Result<()> {
    crate::fem::check_len(y.len(), &p.mesh, "state")?;
    crate::fem::check_len(adj.len(), &p.mesh, "adjoint")?;
    if ybar.value.len() != p.mesh.num_cells() || ybar.grad.len() != p.mesh.num_cells() {
        return Err(Error::Mismatch("target samples belong to a different mesh".into()));
    }
    Ok(())
}

fn scatter(p: &DiscreteProblem, locals: Vec<Local>) -> ShapeFunctional {
    let mut out = ShapeFunctional::zeros(p.num_vertices());
    for (c, l) in p.mesh.cells().iter().zip(locals) {
        for a in 0..3 {
            out.values[c[a]][0] += l[a][0];
            out.values[c[a]][1] += l[a][1];
        }
    }
    out
}

/// Tracking, bilinear-form and source terms for general `(M, d, b)`.
fn elliptic_terms(p: &DiscreteProblem, y: &[f64], adj: &[f64], ybar: &TargetSamples) -> Vec<Local> {
    let mesh = &p.mesh;
    map_range(mesh.num_cells(), p.mode, |k| {
        let geo = CellGeometry::new(mesh, k);
        let cell = mesh.cell(k);
        let (yc, pc) = (cell_values(y, cell), cell_values(adj, cell));
        let (gy, gp) = (geo.gradient(yc), geo.gradient(pc));
        let f = p.f.on(mesh.label(k));
        let w = geo.area / 3.0;
        let mut out = [[0.0; 2]; 3];
        for q in 0..3 {
            let s = p.coeffs.sample(geo.quad_point(q));
            let (yq, pq) = (interp(yc, q), interp(pc, q));
            let (r, gr) = (yq - ybar.value[k][q], ybar.grad[k][q]);
            let m = s.m;
            let mgp = [m[0][0] * gp[0] + m[0][1] * gp[1], m[1][0] * gp[0] + m[1][1] * gp[1]];
            let vol = 0.5 * r * r
                + s.b * yq * pq
                + gy[0] * mgp[0]
                + gy[1] * mgp[1]
                + s.d[0] * (gy[0] * pq + yq * gp[0])
                + s.d[1] * (gy[1] * pq + yq * gp[1])
                - f * pq;
            for b in 0..3 {
                let g = geo.grads[b];
                let lb = QUAD_BARY[q][b];
                for d in 0..2 {
                    // DV[i][j] = δ_id g_j, V = e_d lb
                    let mut dv = [[0.0; 2]; 2];
                    dv[d] = g;
                    let mut bm = [[0.0; 2]; 2];
                    for i in 0..2 {
                        for j in 0..2 {
                            let mut v = 0.0;
                            for l in 0..2 {
                                v += dv[i][l] * m[l][j] + m[l][i] * dv[j][l];
                            }
                            bm[i][j] = v - s.dm[i][j][d] * lb;
                        }
                    }
                    let lead = -(0..2).map(|i| (0..2).map(|j| gy[i] * bm[i][j] * gp[j]).sum::<f64>()).sum::<f64>();
                    let dvd = [dv[0][0] * s.d[0] + dv[0][1] * s.d[1], dv[1][0] * s.d[0] + dv[1][1] * s.d[1]];
                    let mut drift = 0.0;
                    for i in 0..2 {
                        drift += s.dd[i][d] * lb * (gy[i] * pq + yq * gp[i]);
                        drift -= dvd[i] * (gy[i] * pq + yq * gp[i]);
                    }
                    let reaction = s.db[d] * lb * yq * pq;
                    let data = -r * gr[d] * lb;
                    out[b][d] += w * (data + lead + drift + reaction + g[d] * vol);
                }
            }
        }
        out
    })
}

/// Same terms as [`elliptic_terms`] written out for `M = I`, `d = 0`, `b = 0`:
/// `-(y-ȳ)∇ȳᵀV - ∇yᵀ(DV + DVᵀ)∇p + div V (½(y-ȳ)² + ∇y·∇p - f p)`.
fn laplacian_terms(p: &DiscreteProblem, y: &[f64], adj: &[f64], ybar: &TargetSamples) -> Vec<Local> {
    let mesh = &p.mesh;
    map_range(mesh.num_cells(), p.mode, |k| {
        let geo = CellGeometry::new(mesh, k);
        let cell = mesh.cell(k);
        let (yc, pc) = (cell_values(y, cell), cell_values(adj, cell));
        let (gy, gp) = (geo.gradient(yc), geo.gradient(pc));
        let f = p.f.on(mesh.label(k));
        let grad_dot = gy[0] * gp[0] + gy[1] * gp[1];
        let mut out = [[0.0; 2]; 3];
        for q in 0..3 {
            let (yq, pq) = (interp(yc, q), interp(pc, q));
            let r = yq - ybar.value[k][q];
            let vol = 0.5 * r * r + grad_dot - f * pq;
            for b in 0..3 {
                let g = geo.grads[b];
                let gy_g = gy[0] * g[0] + gy[1] * g[1];
                let gp_g = gp[0] * g[0] + gp[1] * g[1];
                for d in 0..2 {
                    let sym = gy[d] * gp_g + gy_g * gp[d];
                    out[b][d] += geo.area / 3.0
                        * (-r * ybar.grad[k][q][d] * QUAD_BARY[q][b] - sym + g[d] * vol);
                }
            }
        }
        out
    })
}

/// Lumped obstacle terms of the smoothed problem:
/// `div V · max_γ(λ̄ + c(y-φ)) p - c sign_γ(λ̄ + c(y-φ)) ∇φᵀV p`.
fn smoothing_terms(p: &DiscreteProblem, y: &[f64], adj: &[f64], reg: &Regularization, sm: &Smoother) -> ShapeFunctional {
    let mesh = &p.mesh;
    let t = reg.argument(y, &p.phi);
    let mut out = scatter(
        p,
        map_range(mesh.num_cells(), p.mode, |k| {
            let geo = CellGeometry::new(mesh, k);
            let cell = mesh.cell(k);
            let s: f64 = cell.iter().map(|&i| sm.max(t[i]) * adj[i]).sum::<f64>() * geo.area / 3.0;
            let mut l = [[0.0; 2]; 3];
            for b in 0..3 {
                l[b] = [geo.grads[b][0] * s, geo.grads[b][1] * s];
            }
            l
        }),
    );
    for i in 0..p.num_vertices() {
        let gphi = p.obstacle.gradient(mesh.vertex(i));
        let s = -reg.c * p.lumped[i] * sm.sign(t[i]) * adj[i];
        out.values[i][0] += s * gphi[0];
        out.values[i][1] += s * gphi[1];
    }
    out
}

/// Limit of `-c sign_γ(·) ∇φᵀV p`: the residual `Aᵀp + (y - ȳ, ·)` of the
/// adjoint equation on the active vertices, paired with `∇φᵀV` there. In the
/// interior of `A` it reduces to `∫_A (φ - ȳ) ∇φᵀV`; along `∂A` it also
/// carries the flux of `p`.
fn active_terms(p: &DiscreteProblem, y: &[f64], adj: &[f64], ybar: &TargetSamples, active: &ActiveSet) -> Result<ShapeFunctional> {
    let rhs = adjoint_rhs(p, y, ybar)?;
    let atp = p.stiffness.transpose().mul(adj);
    let mut out = ShapeFunctional::zeros(p.num_vertices());
    for i in active.indices() {
        let r = atp[i] - rhs[i];
        let gphi = p.obstacle.gradient(p.mesh.vertex(i));
        out.values[i] = [r * gphi[0], r * gphi[1]];
    }
    Ok(out)
}

fn finish(p: &DiscreteProblem, mut f: ShapeFunctional) -> ShapeFunctional {
    for &i in p.mesh.boundary_vertices() {
        f.values[i] = [0.0; 2];
    }
    f
}

/// Derivative of the fully regularized reduced objective.
pub fn assemble_dj_smoothed(
    p: &DiscreteProblem,
    y: &[f64],
    adj: &[f64],
    ybar: &TargetSamples,
    reg: &Regularization,
    smoother: &Smoother,
) -> Result<ShapeFunctional> {
    check_inputs(p, y, adj, ybar)?;
    let mut f = scatter(p, elliptic_terms(p, y, adj, ybar));
    f.add(&smoothing_terms(p, y, adj, reg, smoother));
    Ok(finish(p, f))
}

/// Limit derivative from the VI state, the limit adjoint and the active set.
pub fn assemble_dj_limit(
    p: &DiscreteProblem,
    y: &[f64],
    adj: &[f64],
    ybar: &TargetSamples,
    active: &ActiveSet,
) -> Result<ShapeFunctional> {
    check_inputs(p, y, adj, ybar)?;
    if active.mask.len() != p.num_vertices() {
        return Err(Error::Mismatch("active set does not match the mesh".into()));
    }
    let mut f = scatter(p, elliptic_terms(p, y, adj, ybar));
    f.add(&active_terms(p, y, adj, ybar, active)?);
    Ok(finish(p, f))
}

/// Laplacian-only assembler. With `active` it is the limit derivative; without
/// it, the elliptic part of the smoothed derivative.
pub fn assemble_dj_laplacian(
    p: &DiscreteProblem,
    y: &[f64],
    adj: &[f64],
    ybar: &TargetSamples,
    active: Option<&ActiveSet>,
) -> Result<ShapeFunctional> {
    check_inputs(p, y, adj, ybar)?;
    if !p.coeffs.is_laplacian() {
        return Err(Error::InvalidParameter("Laplacian assembler needs M = I, d = 0, b = 0".into()));
    }
    let mut f = scatter(p, laplacian_terms(p, y, adj, ybar));
    if let Some(a) = active {
        f.add(&active_terms(p, y, adj, ybar, a)?);
    }
    Ok(finish(p, f))
}

/// The obstacle terms that [`assemble_dj_smoothed`] adds on top of the
/// elliptic part.
pub fn assemble_dj_obstacle_terms(
    p: &DiscreteProblem,
    y: &[f64],
    adj: &[f64],
    reg: &Regularization,
    smoother: &Smoother,
) -> ShapeFunctional {
    finish(p, smoothing_terms(p, y, adj, reg, smoother))
}
