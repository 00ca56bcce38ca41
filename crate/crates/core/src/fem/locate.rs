use super::check_len;
use crate::error::{Error, Result};
use crate::mesh::{Point, TriangleMesh};

/// Barycentric tolerance for accepting a point as inside a cell.
const INSIDE_TOL: f64 = 1e-10;

/// Bucket grid over the mesh bounding box for point-in-cell queries, with an
/// exhaustive search as fallback.
#[derive(Clone, Debug)]
pub struct PointLocator {
    origin: Point,
    cell_size: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

fn barycentric(pts: [Point; 3], x: Point) -> [f64; 3] {
    let [p0, p1, p2] = pts;
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let l1 = ((x[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (x[1] - p0[1])) / det;
    let l2 = ((p1[0] - p0[0]) * (x[1] - p0[1]) - (x[0] - p0[0]) * (p1[1] - p0[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

fn min3(v: [f64; 3]) -> f64 {
    v[0].min(v[1]).min(v[2])
}

impl PointLocator {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in mesh.vertices() {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let side = ((mesh.num_cells() as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let dims = [side, side];
        let cell_size = [((hi[0] - lo[0]) / side as f64).max(1e-300), ((hi[1] - lo[1]) / side as f64).max(1e-300)];
        let mut loc = PointLocator { origin: lo, cell_size, dims, buckets: vec![Vec::new(); side * side] };
        for k in 0..mesh.num_cells() {
            let pts = mesh.cell_points(k);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in pts {
                for d in 0..2 {
                    a[d] = a[d].min(p[d]);
                    b[d] = b[d].max(p[d]);
                }
            }
            let [i0, j0] = loc.bucket_of(a);
            let [i1, j1] = loc.bucket_of(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * dims[0] + i].push(k);
                }
            }
        }
        loc
    }

    fn bucket_of(&self, x: Point) -> [usize; 2] {
        let mut ij = [0; 2];
        for d in 0..2 {
            let t = ((x[d] - self.origin[d]) / self.cell_size[d]).floor();
            ij[d] = if t < 0.0 { 0 } else { (t as usize).min(self.dims[d] - 1) };
        }
        ij
    }

    /// Cell containing `x` and the barycentric coordinates of `x` in it.
    pub fn locate(&self, mesh: &TriangleMesh, x: Point) -> Result<(usize, [f64; 3])> {
        let [i, j] = self.bucket_of(x);
        let consider = |best: &mut Option<(usize, [f64; 3])>, k: usize| {
            let l = barycentric(mesh.cell_points(k), x);
            if best.map_or(true, |(_, bl)| min3(l) > min3(bl)) {
                *best = Some((k, l));
            }
        };
        let mut best = None;
        for &k in &self.buckets[j * self.dims[0] + i] {
            consider(&mut best, k);
        }
        if let Some((k, l)) = best {
            if min3(l) >= -INSIDE_TOL {
                return Ok((k, l));
            }
        }
        for k in 0..mesh.num_cells() {
            consider(&mut best, k);
        }
        match best {
            Some((k, l)) if min3(l) >= -INSIDE_TOL => Ok((k, l)),
            _ => Err(Error::PointOutside { x: x[0], y: x[1] }),
        }
    }

    pub fn evaluate(&self, mesh: &TriangleMesh, values: &[f64], x: Point) -> Result<f64> {
        let (k, l) = self.locate(mesh, x)?;
        let c = mesh.cell(k);
        Ok(l[0] * values[c[0]] + l[1] * values[c[1]] + l[2] * values[c[2]])
    }
}

/// Barycentric P1 interpolation of `values` at each point.
pub fn evaluate_at_points(mesh: &TriangleMesh, values: &[f64], points: &[Point]) -> Result<Vec<f64>> {
    check_len(values.len(), mesh, "field")?;
    let loc = PointLocator::new(mesh);
    points.iter().map(|&x| loc.evaluate(mesh, values, x)).collect()
}
