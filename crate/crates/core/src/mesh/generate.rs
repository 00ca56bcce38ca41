use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::curve::{distance_to_polygon, point_in_polygon};
use super::{InterfaceCurve, Label, Point, TriangleMesh};
use crate::error::{Error, Result};

/// Number of Laplacian smoothing sweeps applied to the free lattice points.
const SMOOTHING_SWEEPS: usize = 4;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    fn contains(&self, p: Point) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }
}

/// Structured `n x n` mesh of the unit square. Diagonals point towards the
/// centre so the mesh is mirror symmetric about `x = 0.5` and `y = 0.5` for
/// even `n`. Cells whose centroid falls in `inner` are labelled inner.
pub fn generate_structured_mesh(n: usize, inner: Option<Rect>) -> Result<TriangleMesh> {
    if n == 0 {
        return Err(Error::InvalidParameter("structured mesh needs n >= 1".into()));
    }
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            let left = 2 * i + 1 < n;
            let low = 2 * j + 1 < n;
            if left == low {
                // "/" diagonal a-c
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            } else {
                // "\" diagonal b-d
                cells.push([a, b, d]);
                cells.push([b, c, d]);
            }
        }
    }
    let labels = cells
        .iter()
        .map(|c| {
            let p = centroid(&vertices, c);
            match inner {
                Some(r) if r.contains(p) => Label::Inner,
                _ => Label::Outer,
            }
        })
        .collect();
    TriangleMesh::new(vertices, cells, labels)
}

fn centroid(vertices: &[Point], c: &[usize; 3]) -> Point {
    let (a, b, d) = (vertices[c[0]], vertices[c[1]], vertices[c[2]]);
    [(a[0] + b[0] + d[0]) / 3.0, (a[1] + b[1] + d[1]) / 3.0]
}

/// Conforming mesh of the unit square whose interface approximates a circle
/// of the given radius centred at `(0.5, 0.5)`.
pub fn generate_disk_mesh(radius: f64, target_edge_length: f64) -> Result<TriangleMesh> {
    if !(radius > 0.0 && radius < 0.5) {
        return Err(Error::InvalidParameter(format!("radius {radius} outside (0, 0.5)")));
    }
    if !(target_edge_length > 0.0 && target_edge_length < radius) {
        return Err(Error::InvalidParameter(format!(
            "edge length {target_edge_length} outside (0, radius)"
        )));
    }
    generate_interface_mesh(&InterfaceCurve::circle([0.5, 0.5], radius), target_edge_length)
}

/// Constrained Delaunay mesh of the unit square with the interface polygon
/// sampled from `curve` at spacing close to `h`. Interior points come from a
/// hexagonal lattice smoothed a few times; the construction is deterministic.
pub fn generate_interface_mesh(curve: &InterfaceCurve, h: f64) -> Result<TriangleMesh> {
    if !(h > 0.0 && h <= 0.25) {
        return Err(Error::InvalidParameter(format!("edge length {h} outside (0, 0.25]")));
    }
    let b = curve.bounds();
    let clearance = b[0].min(b[1]).min(1.0 - b[2]).min(1.0 - b[3]);
    if !(clearance >= 0.75 * h) {
        return Err(Error::Meshing(format!(
            "interface comes within {clearance:.3e} of the outer boundary (needs {:.3e})",
            0.75 * h
        )));
    }

    let n_curve = ((curve.length() / h).ceil() as usize).max(12);
    let polygon = curve.sample(n_curve);

    let mut fixed: Vec<Point> = Vec::new();
    let n_side = ((1.0 / h).round() as usize).max(2);
    for i in 0..n_side {
        let s = i as f64 / n_side as f64;
        fixed.push([s, 0.0]);
        fixed.push([1.0, s]);
        fixed.push([1.0 - s, 1.0]);
        fixed.push([0.0, 1.0 - s]);
    }
    let curve_start = fixed.len();
    fixed.extend_from_slice(&polygon);

    let rows = ((1.0 / (h * 3f64.sqrt() / 2.0)).round() as usize).max(2);
    let dy = 1.0 / rows as f64;
    let dx = 1.0 / n_side as f64;
    let mut free: Vec<Point> = Vec::new();
    for j in 1..rows {
        let y = j as f64 * dy;
        let shift = if j % 2 == 1 { 0.5 * dx } else { 0.0 };
        let mut i = 0;
        loop {
            let x = i as f64 * dx + shift;
            if x >= 1.0 {
                break;
            }
            i += 1;
            let wall = x.min(1.0 - x).min(y).min(1.0 - y);
            if wall < 0.5 * h || distance_to_polygon([x, y], &polygon) < 0.5 * h {
                continue;
            }
            free.push([x, y]);
        }
    }

    let n_fixed = fixed.len();
    let mut triangles = triangulate(&fixed, &free, curve_start, n_curve)?;
    for _ in 0..SMOOTHING_SWEEPS {
        let n = n_fixed + free.len();
        let mut sum = vec![[0.0f64; 2]; n];
        let mut count = vec![0usize; n];
        let all = |i: usize| if i < n_fixed { fixed[i] } else { free[i - n_fixed] };
        for t in &triangles {
            for a in 0..3 {
                for b in 0..3 {
                    if a != b {
                        let p = all(t[b]);
                        sum[t[a]][0] += p[0];
                        sum[t[a]][1] += p[1];
                        count[t[a]] += 1;
                    }
                }
            }
        }
        let moved: Vec<Point> = (0..free.len())
            .map(|i| {
                let g = n_fixed + i;
                if count[g] == 0 {
                    free[i]
                } else {
                    [sum[g][0] / count[g] as f64, sum[g][1] / count[g] as f64]
                }
            })
            .collect();
        free = moved;
        triangles = triangulate(&fixed, &free, curve_start, n_curve)?;
    }

    let mut vertices = fixed;
    vertices.extend_from_slice(&free);
    let labels: Vec<Label> = triangles
        .iter()
        .map(|c| {
            if point_in_polygon(centroid(&vertices, c), &polygon) {
                Label::Inner
            } else {
                Label::Outer
            }
        })
        .collect();
    let mesh = TriangleMesh::new(vertices, triangles, labels)
        .map_err(|e| Error::Meshing(format!("generated mesh is invalid: {e}")))?;
    if mesh.interface_edges().len() != n_curve || mesh.interface_loop_count() != 1 {
        return Err(Error::Meshing(format!(
            "interface has {} edges in {} loops, expected {n_curve} edges in one loop",
            mesh.interface_edges().len(),
            mesh.interface_loop_count()
        )));
    }
    Ok(mesh)
}

fn triangulate(
    fixed: &[Point],
    free: &[Point],
    curve_start: usize,
    n_curve: usize,
) -> Result<Vec<[usize; 3]>> {
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(fixed.len() + free.len());
    for p in fixed.iter().chain(free.iter()) {
        let h = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::Meshing(format!("point insertion failed: {e:?}")))?;
        handles.push(h);
    }
    if cdt.num_vertices() != handles.len() {
        return Err(Error::Meshing("duplicate mesh points".into()));
    }
    for i in 0..n_curve {
        let a = handles[curve_start + i];
        let b = handles[curve_start + (i + 1) % n_curve];
        if !cdt.can_add_constraint(a, b) {
            return Err(Error::Meshing(format!("interface segment {i} intersects another constraint")));
        }
        cdt.add_constraint(a, b);
    }
    // spade numbers vertices in insertion order
    let mut cells = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices();
        let tri = [a.fix().index(), b.fix().index(), c.fix().index()];
        cells.push(tri);
    }
    // orient counterclockwise
    let all = |i: usize| if i < fixed.len() { fixed[i] } else { free[i - fixed.len()] };
    for t in cells.iter_mut() {
        let (p, q, r) = (all(t[0]), all(t[1]), all(t[2]));
        if (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]) < 0.0 {
            t.swap(1, 2);
        }
    }
    cells.sort_unstable();
    Ok(cells)
}
