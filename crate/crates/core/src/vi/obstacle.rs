use std::fmt;
use std::sync::Arc;

use super::expr::Expr;
use crate::error::Result;
use crate::mesh::Point;

type ObstacleFn = dyn Fn(Point) -> (f64, [f64; 2], f64) + Send + Sync;

#[derive(Clone)]
enum Kind {
    Symbolic { value: Expr, grad: [Expr; 2], lap: Expr },
    Custom(Arc<ObstacleFn>),
}

/// Upper obstacle `φ` with gradient and Laplacian.
#[derive(Clone)]
pub struct Obstacle {
    name: String,
    kind: Kind,
}

impl fmt::Debug for Obstacle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Obstacle").field("name", &self.name).finish()
    }
}

impl Obstacle {
    /// `φ₁ = 0.5`
    pub fn phi1() -> Self {
        Self::expression("0.5").unwrap().named("phi1")
    }

    /// `φ₂ = 5 exp(-x₁ - 1)`
    pub fn phi2() -> Self {
        Self::expression("5*exp(-x1-1)").unwrap().named("phi2")
    }

    pub fn constant(value: f64) -> Self {
        Obstacle {
            name: format!("{value}"),
            kind: Kind::Symbolic { value: Expr::Num(value), grad: [Expr::Num(0.0), Expr::Num(0.0)], lap: Expr::Num(0.0) },
        }
    }

    /// Parses an expression in `x1`, `x2`; see [`Expr`] for the grammar.
    pub fn expression(src: &str) -> Result<Self> {
        let value = Expr::parse(src)?;
        let grad = [value.derivative(0), value.derivative(1)];
        let lap = Expr::Add(Box::new(grad[0].derivative(0)), Box::new(grad[1].derivative(1)));
        Ok(Obstacle { name: src.to_string(), kind: Kind::Symbolic { value, grad, lap } })
    }

    /// Obstacle from a closure returning value, gradient and Laplacian.
    pub fn custom(name: &str, f: impl Fn(Point) -> (f64, [f64; 2], f64) + Send + Sync + 'static) -> Self {
        Obstacle { name: name.to_string(), kind: Kind::Custom(Arc::new(f)) }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: Point) -> f64 {
        match &self.kind {
            Kind::Symbolic { value, .. } => value.eval(x),
            Kind::Custom(f) => f(x).0,
        }
    }

    pub fn gradient(&self, x: Point) -> [f64; 2] {
        match &self.kind {
            Kind::Symbolic { grad, .. } => [grad[0].eval(x), grad[1].eval(x)],
            Kind::Custom(f) => f(x).1,
        }
    }

    pub fn laplacian(&self, x: Point) -> f64 {
        match &self.kind {
            Kind::Symbolic { lap, .. } => lap.eval(x),
            Kind::Custom(f) => f(x).2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_consistency(o: &Obstacle) {
        let h = 1e-4;
        for x in [[0.2, 0.3], [0.5, 0.5], [0.9, 0.1]] {
            let fd = |d: usize| {
                let (mut a, mut b) = (x, x);
                a[d] += h;
                b[d] -= h;
                (o.value(a) - o.value(b)) / (2.0 * h)
            };
            let lap_fd: f64 = (0..2)
                .map(|d| {
                    let (mut a, mut b) = (x, x);
                    a[d] += h;
                    b[d] -= h;
                    (o.value(a) - 2.0 * o.value(x) + o.value(b)) / (h * h)
                })
                .sum();
            let g = o.gradient(x);
            assert!((g[0] - fd(0)).abs() < 1e-6 && (g[1] - fd(1)).abs() < 1e-6);
            assert!((o.laplacian(x) - lap_fd).abs() < 1e-6);
        }
    }

    #[test]
    fn named_obstacles() {
        let p1 = Obstacle::phi1();
        assert_eq!(p1.value([0.1, 0.7]), 0.5);
        assert_eq!(p1.laplacian([0.1, 0.7]), 0.0);
        let p2 = Obstacle::phi2();
        let x = [0.3, 0.8];
        let v = 5.0 * (-x[0] - 1.0f64).exp();
        assert!((p2.value(x) - v).abs() < 1e-15);
        assert!((p2.laplacian(x) - v).abs() < 1e-14);
        assert!((p2.gradient(x)[0] + v).abs() < 1e-14 && p2.gradient(x)[1] == 0.0);
        check_consistency(&p1);
        check_consistency(&p2);
        check_consistency(&Obstacle::expression("0.3 + (x1-0.5)^2*x2 - exp(x2)/4").unwrap());
    }
}
