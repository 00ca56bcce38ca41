use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Point;

/// Closed analytic curve used to place the interface when meshing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum InterfaceCurve {
    Circle { center: Point, radius: f64 },
    Ellipse { center: Point, semi_axes: [f64; 2], angle: f64 },
}

impl InterfaceCurve {
    pub fn circle(center: Point, radius: f64) -> Self {
        InterfaceCurve::Circle { center, radius }
    }

    pub fn ellipse(center: Point, semi_axes: [f64; 2], angle: f64) -> Self {
        InterfaceCurve::Ellipse { center, semi_axes, angle }
    }

    /// Point at parameter `t` in `[0, 2pi)`, counterclockwise.
    pub fn point(&self, t: f64) -> Point {
        match *self {
            InterfaceCurve::Circle { center, radius } => {
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            }
            InterfaceCurve::Ellipse { center, semi_axes, angle } => {
                let (x, y) = (semi_axes[0] * t.cos(), semi_axes[1] * t.sin());
                let (s, c) = angle.sin_cos();
                [center[0] + c * x - s * y, center[1] + s * x + c * y]
            }
        }
    }

    fn dense(&self) -> Vec<Point> {
        const N: usize = 4096;
        (0..N).map(|i| self.point(2.0 * PI * i as f64 / N as f64)).collect()
    }

    pub fn length(&self) -> f64 {
        match *self {
            InterfaceCurve::Circle { radius, .. } => 2.0 * PI * radius,
            InterfaceCurve::Ellipse { .. } => {
                let pts = self.dense();
                (0..pts.len()).map(|i| super::dist(pts[i], pts[(i + 1) % pts.len()])).sum()
            }
        }
    }

    /// `n` points equidistributed in arc length, counterclockwise.
    pub fn sample(&self, n: usize) -> Vec<Point> {
        match *self {
            InterfaceCurve::Circle { .. } => {
                (0..n).map(|i| self.point(2.0 * PI * i as f64 / n as f64)).collect()
            }
            InterfaceCurve::Ellipse { .. } => {
                let pts = self.dense();
                let m = pts.len();
                let mut cum = Vec::with_capacity(m + 1);
                cum.push(0.0);
                for i in 0..m {
                    let l = cum[i] + super::dist(pts[i], pts[(i + 1) % m]);
                    cum.push(l);
                }
                let total = cum[m];
                let mut out = Vec::with_capacity(n);
                let mut seg = 0;
                for i in 0..n {
                    let s = total * i as f64 / n as f64;
                    while cum[seg + 1] < s {
                        seg += 1;
                    }
                    let w = (s - cum[seg]) / (cum[seg + 1] - cum[seg]);
                    let t0 = 2.0 * PI * seg as f64 / m as f64;
                    let t1 = 2.0 * PI * (seg + 1) as f64 / m as f64;
                    out.push(self.point(t0 + w * (t1 - t0)));
                }
                out
            }
        }
    }

    /// Bounding box `[xmin, ymin, xmax, ymax]`.
    pub fn bounds(&self) -> [f64; 4] {
        let pts = self.dense();
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in pts {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].min(p[1]);
            b[2] = b[2].max(p[0]);
            b[3] = b[3].max(p[1]);
        }
        b
    }
}

/// Even-odd point-in-polygon test.
pub(crate) fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from `p` to the closed polygon.
pub(crate) fn distance_to_polygon(p: Point, poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    super::dist(p, [a[0] + t * dx, a[1] + t * dy])
}
