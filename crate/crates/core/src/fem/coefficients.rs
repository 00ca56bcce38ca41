use std::fmt;
use std::sync::Arc;

use crate::mesh::Point;

type MatrixFn = dyn Fn(Point) -> ([[f64; 2]; 2], [[[f64; 2]; 2]; 2]) + Send + Sync;
type VectorFn = dyn Fn(Point) -> ([f64; 2], [[f64; 2]; 2]) + Send + Sync;
type ScalarFn = dyn Fn(Point) -> (f64, [f64; 2]) + Send + Sync;

/// Coefficient values and their spatial gradients at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientSample {
    /// `m[i][j] = a_ij`
    pub m: [[f64; 2]; 2],
    /// `dm[i][j] = ∇a_ij`
    pub dm: [[[f64; 2]; 2]; 2],
    pub d: [f64; 2],
    /// `dd[i] = ∇d_i`
    pub dd: [[f64; 2]; 2],
    pub b: f64,
    pub db: [f64; 2],
}

impl CoefficientSample {
    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
            && self.dm.iter().flatten().flatten().all(|v| v.is_finite())
            && self.d.iter().chain(self.dd.iter().flatten()).all(|v| v.is_finite())
            && self.b.is_finite()
            && self.db.iter().all(|v| v.is_finite())
    }
}

/// Data `(M, d, b)` of the bilinear form
/// `a(y, v) = ∫ Σ a_ij ∂_i y ∂_j v + d_i (∂_i y v + y ∂_i v) + b y v`.
///
/// Every coefficient closure returns its value together with its gradient.
#[derive(Clone)]
pub struct EllipticCoefficients {
    matrix: Arc<MatrixFn>,
    drift: Arc<VectorFn>,
    reaction: Arc<ScalarFn>,
    laplacian: bool,
}

impl fmt::Debug for EllipticCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticCoefficients").field("laplacian", &self.laplacian).finish_non_exhaustive()
    }
}

impl Default for EllipticCoefficients {
    fn default() -> Self {
        Self::laplacian()
    }
}

impl EllipticCoefficients {
    /// `M = I`, `d = 0`, `b = 0`.
    pub fn laplacian() -> Self {
        let mut c = Self::constant([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0], 0.0);
        c.laplacian = true;
        c
    }

    pub fn constant(m: [[f64; 2]; 2], d: [f64; 2], b: f64) -> Self {
        EllipticCoefficients {
            matrix: Arc::new(move |_| (m, [[[0.0; 2]; 2]; 2])),
            drift: Arc::new(move |_| (d, [[0.0; 2]; 2])),
            reaction: Arc::new(move |_| (b, [0.0; 2])),
            laplacian: false,
        }
    }

    pub fn new(
        matrix: impl Fn(Point) -> ([[f64; 2]; 2], [[[f64; 2]; 2]; 2]) + Send + Sync + 'static,
        drift: impl Fn(Point) -> ([f64; 2], [[f64; 2]; 2]) + Send + Sync + 'static,
        reaction: impl Fn(Point) -> (f64, [f64; 2]) + Send + Sync + 'static,
    ) -> Self {
        EllipticCoefficients {
            matrix: Arc::new(matrix),
            drift: Arc::new(drift),
            reaction: Arc::new(reaction),
            laplacian: false,
        }
    }

    /// True only for the coefficients built by [`EllipticCoefficients::laplacian`].
    pub fn is_laplacian(&self) -> bool {
        self.laplacian
    }

    pub fn sample(&self, x: Point) -> CoefficientSample {
        let (m, dm) = (self.matrix)(x);
        let (d, dd) = (self.drift)(x);
        let (b, db) = (self.reaction)(x);
        CoefficientSample { m, dm, d, dd, b, db }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_sample() {
        let c = EllipticCoefficients::laplacian();
        assert!(c.is_laplacian());
        let s = c.sample([0.3, 0.4]);
        assert_eq!(s.m, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(s.b, 0.0);
        assert!(s.is_finite());
        assert!(!EllipticCoefficients::constant(s.m, s.d, 0.0).is_laplacian());
    }

    #[test]
    fn variable_coefficients() {
        let c = EllipticCoefficients::new(
            |x| ([[1.0 + x[0], 0.0], [0.0, 1.0]], [[[1.0, 0.0], [0.0; 2]], [[0.0; 2], [0.0; 2]]]),
            |_| ([0.0; 2], [[0.0; 2]; 2]),
            |x| (x[1] * x[1], [0.0, 2.0 * x[1]]),
        );
        let s = c.sample([0.5, 2.0]);
        assert_eq!(s.m[0][0], 1.5);
        assert_eq!(s.b, 4.0);
        assert_eq!(s.db, [0.0, 4.0]);
    }
}
