//! Tracking data `ȳ` and its gradient, sampled at the quadrature points of
//! whatever mesh the objective is evaluated on.

use std::sync::Arc;

use super::{cellwise_gradient, CellGeometry, PointLocator, ScalarField};
use crate::error::Result;
use crate::mesh::{Point, TriangleMesh};
use crate::par::{map_range, Parallelism};

/// A target function with value and gradient at any point of the hold-all domain.
pub trait TargetField: Send + Sync {
    fn eval(&self, x: Point) -> Result<(f64, [f64; 2])>;
}

/// P1 field living on a fixed reference mesh. The gradient is the cellwise
/// gradient of the cell containing the point.
#[derive(Clone, Debug)]
pub struct ReferenceField {
    mesh: TriangleMesh,
    values: ScalarField,
    grads: Vec<[f64; 2]>,
    locator: Arc<PointLocator>,
}

impl ReferenceField {
    pub fn new(mesh: TriangleMesh, values: ScalarField) -> Result<Self> {
        values.check(&mesh, "reference field")?;
        let grads = cellwise_gradient(&mesh, &values)?;
        let locator = Arc::new(PointLocator::new(&mesh));
        Ok(ReferenceField { mesh, values, grads, locator })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn values(&self) -> &ScalarField {
        &self.values
    }
}

impl TargetField for ReferenceField {
    fn eval(&self, x: Point) -> Result<(f64, [f64; 2])> {
        let (k, l) = self.locator.locate(&self.mesh, x)?;
        let c = self.mesh.cell(k);
        let v = l[0] * self.values[c[0]] + l[1] * self.values[c[1]] + l[2] * self.values[c[2]];
        Ok((v, self.grads[k]))
    }
}

/// Closed-form target, mostly for tests.
pub struct AnalyticTarget<F>(pub F);

impl<F> TargetField for AnalyticTarget<F>
where
    F: Fn(Point) -> (f64, [f64; 2]) + Send + Sync,
{
    fn eval(&self, x: Point) -> Result<(f64, [f64; 2])> {
        Ok((self.0)(x))
    }
}

/// `ȳ` and `∇ȳ` at the three quadrature points of every cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSamples {
    pub value: Vec<[f64; 3]>,
    pub grad: Vec<[[f64; 2]; 3]>,
}

impl TargetSamples {
    /// Samples of a target that vanishes identically.
    pub fn zero(mesh: &TriangleMesh) -> Self {
        TargetSamples { value: vec![[0.0; 3]; mesh.num_cells()], grad: vec![[[0.0; 2]; 3]; mesh.num_cells()] }
    }
}

pub fn sample_target(mesh: &TriangleMesh, target: &dyn TargetField, mode: Parallelism) -> Result<TargetSamples> {
    let per_cell = map_range(mesh.num_cells(), mode, |k| -> Result<_> {
        let g = CellGeometry::new(mesh, k);
        let mut v = [0.0; 3];
        let mut d = [[0.0; 2]; 3];
        for q in 0..3 {
            (v[q], d[q]) = target.eval(g.quad_point(q))?;
        }
        Ok((v, d))
    });
    let mut out = TargetSamples { value: Vec::with_capacity(mesh.num_cells()), grad: Vec::with_capacity(mesh.num_cells()) };
    for r in per_cell {
        let (v, d) = r?;
        out.value.push(v);
        out.grad.push(d);
    }
    Ok(out)
}
