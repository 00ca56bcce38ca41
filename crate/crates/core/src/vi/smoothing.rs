use crate::error::{Error, Result};
use crate::fem::ScalarField;

/// Smoothed `max(0, x)`: quadratic blend on `[-1/γ, 1/γ]`.
pub fn max_gamma(x: f64, gamma: f64) -> f64 {
    let w = 1.0 / gamma;
    if x >= w {
        x
    } else if x <= -w {
        0.0
    } else {
        0.25 * gamma * x * x + 0.5 * x + 0.25 * w
    }
}

/// Derivative of [`max_gamma`].
pub fn sign_gamma(x: f64, gamma: f64) -> f64 {
    let w = 1.0 / gamma;
    if x >= w {
        1.0
    } else if x <= -w {
        0.0
    } else {
        0.5 * gamma * x + 0.5
    }
}

/// Unsmoothed sign used for the active set: 1 for `x ≥ 0`, else 0.
pub fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Semi-smooth derivative of `max(0, x)` taken by Newton on the regularized
/// state: 1 for `x > 0`, else 0.
pub(crate) fn heaviside_open(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Smoother {
    pub gamma: f64,
}

impl Smoother {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Smoother { gamma })
    }

    /// Uniform distance `sup |max_γ - max(0, ·)| = 1/(4γ)`.
    pub fn bound(&self) -> f64 {
        0.25 / self.gamma
    }

    pub fn max(&self, x: f64) -> f64 {
        max_gamma(x, self.gamma)
    }

    pub fn sign(&self, x: f64) -> f64 {
        sign_gamma(x, self.gamma)
    }
}

/// Penalty scale `c` and shift `λ̄` of `max(0, λ̄ + c(y - φ))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Regularization {
    pub c: f64,
    pub lambda_bar: ScalarField,
}

impl Regularization {
    pub fn new(c: f64, lambda_bar: ScalarField) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
        }
        if lambda_bar.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("lambda_bar must be finite and nonnegative".into()));
        }
        Ok(Regularization { c, lambda_bar })
    }

    /// Nodal argument `λ̄ + c(y - φ)`.
    pub fn argument(&self, y: &[f64], phi: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(phi)
            .zip(self.lambda_bar.iter())
            .map(|((y, p), l)| l + self.c * (y - p))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert_eq!(max_gamma(0.2, 10.0), 0.2);
        assert!((max_gamma(0.0, 10.0) - 0.025).abs() < 1e-17);
        assert_eq!(max_gamma(-0.2, 10.0), 0.0);
        assert_eq!(sign_gamma(0.0, 10.0), 0.5);
        assert_eq!(sign_gamma(1.0, 10.0), 1.0);
        assert_eq!(sign_gamma(-1.0, 10.0), 0.0);
        assert_eq!(sign(0.0), 1.0);
        assert_eq!(sign(-1e-300), 0.0);
    }

    #[test]
    fn c1_at_kinks() {
        for gamma in [1.0, 10.0, 1e4, 1e8] {
            let w = 1.0 / gamma;
            let inner = |x: f64| 0.25 * gamma * x * x + 0.5 * x + 0.25 * w;
            let dinner = |x: f64| 0.5 * gamma * x + 0.5;
            assert!((inner(w) - w).abs() <= 1e-14 * (1.0 + w));
            assert!(inner(-w).abs() <= 1e-14);
            assert!((dinner(w) - 1.0).abs() <= 1e-14 && dinner(-w).abs() <= 1e-14);
        }
        assert!(Smoother::new(0.0).is_err());
        assert!(Regularization::new(-1.0, ScalarField::zeros(2)).is_err());
        assert!(Regularization::new(1.0, ScalarField::from_vec(vec![-1.0])).is_err());
    }

    proptest! {
        #[test]
        fn uniform_bound(x in -5.0..5.0f64, lg in -2.0..8.0f64) {
            let g = 10f64.powf(lg);
            let d = (max_gamma(x, g) - x.max(0.0)).abs();
            prop_assert!(d <= 0.25 / g * (1.0 + 1e-12));
        }

        #[test]
        fn sign_gamma_monotone_in_unit_interval(a in -5.0..5.0f64, b in -5.0..5.0f64, lg in -2.0..8.0f64) {
            let g = 10f64.powf(lg);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(sign_gamma(lo, g) <= sign_gamma(hi, g));
            prop_assert!((0.0..=1.0).contains(&sign_gamma(a, g)));
            prop_assert!(max_gamma(lo, g) <= max_gamma(hi, g));
        }

        #[test]
        fn sign_gamma_is_derivative(x in -2.0..2.0f64, lg in 0.0..3.0f64) {
            let g = 10f64.powf(lg);
            let h = 1e-7;
            let fd = (max_gamma(x + h, g) - max_gamma(x - h, g)) / (2.0 * h);
            prop_assert!((fd - sign_gamma(x, g)).abs() < 1e-5 * (1.0 + g));
        }
    }
}
