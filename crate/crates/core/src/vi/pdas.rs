use super::DiscreteProblem;
use crate::error::{Error, Result};
use crate::fem::{l2_norm, ScalarField};

pub const PDAS_MAX_ITERS: usize = 100;

/// Which rule ended the active set iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdasStop {
    /// Two consecutive iterations produced the same active set.
    Stabilized,
    /// The state increment fell below `ε_state` before the set settled.
    SmallIncrement,
}

#[derive(Clone, Debug)]
pub struct PdasSolution {
    pub y: ScalarField,
    /// Nodal multiplier `λ = (F - A y) / m` on the active set, zero elsewhere.
    pub lambda: ScalarField,
    pub active: Vec<bool>,
    pub iterations: usize,
    pub stop: PdasStop,
}

impl PdasSolution {
    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Primal-dual active set method for the discrete obstacle problem with
/// `c = 1`: `A_k = {λ_k + (y_k - φ) > 0}`, `y = φ` on `A_k`, `λ = 0` off it.
///
/// Stops when the active set repeats or when `‖y_{k+1} - y_k‖_{L²} ≤ eps_state`.
pub fn solve_vi_pdas(p: &DiscreteProblem, eps_state: f64) -> Result<PdasSolution> {
    solve_vi_pdas_from(p, eps_state, None)
}

/// [`solve_vi_pdas`] started from a guess of the active set, typically the
/// one of a nearby mesh with the same topology.
pub fn solve_vi_pdas_from(p: &DiscreteProblem, eps_state: f64, initial: Option<&[bool]>) -> Result<PdasSolution> {
    if !(eps_state >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps_state must be nonnegative, got {eps_state}")));
    }
    let n = p.num_vertices();
    let boundary = p.mesh.boundary_mask();
    let mut active = match initial {
        Some(a) if a.len() == n => (0..n).map(|i| a[i] && !boundary[i]).collect(),
        Some(a) => return Err(Error::Mismatch(format!("initial active set has {} entries for {n} vertices", a.len()))),
        None => vec![false; n],
    };
    let mut prev: Option<ScalarField> = None;
    for it in 1..=PDAS_MAX_ITERS {
        let nodes: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        let vals: Vec<f64> = nodes.iter().map(|&i| p.phi[i]).collect();
        let y = p.solve_linear(p.stiffness.clone(), p.load.clone(), &nodes, &vals)?;
        let ay = p.stiffness.mul(&y);
        let lambda: Vec<f64> =
            (0..n).map(|i| if active[i] { (p.load[i] - ay[i]) / p.lumped[i] } else { 0.0 }).collect();
        let next: Vec<bool> = (0..n).map(|i| !boundary[i] && lambda[i] + (y[i] - p.phi[i]) > 0.0).collect();

        let stop = if next == active {
            Some(PdasStop::Stabilized)
        } else if prev.as_ref().is_some_and(|q| l2_norm(&p.mesh, &y.sub(q)).unwrap() <= eps_state) {
            Some(PdasStop::SmallIncrement)
        } else {
            None
        };
        if let Some(stop) = stop {
            return Ok(PdasSolution { y, lambda: ScalarField::from_vec(lambda), active, iterations: it, stop });
        }
        active = next;
        prev = Some(y);
    }
    Err(Error::NonConvergence {
        solver: "primal-dual active set",
        iterations: PDAS_MAX_ITERS,
        detail: "active set keeps changing".into(),
    })
}
