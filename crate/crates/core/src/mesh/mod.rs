//! Triangulated hold-all domain `(0,1)^2` split into an inner and an outer
//! subdomain by a polygonal interface made of mesh edges.

mod curve;
mod generate;
mod io;
mod refine;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::VectorField;

pub use curve::InterfaceCurve;
pub use generate::{generate_disk_mesh, generate_interface_mesh, generate_structured_mesh, Rect};
pub use io::{read_mesh, write_mesh, write_vtk, VtkField};
pub use refine::{refine_marked, refine_uniform};

pub type Point = [f64; 2];

/// Tolerance for outer-boundary vertices to sit on the unit square.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Subdomain label of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Inner,
    Outer,
}

/// Connectivity shared by a mesh and all meshes obtained from it by vertex
/// transport.
#[derive(Debug, PartialEq)]
struct Topology {
    cells: Vec<[usize; 3]>,
    labels: Vec<Label>,
    boundary: Vec<usize>,
    is_boundary: Vec<bool>,
    interface_edges: Vec<[usize; 2]>,
    interface_loops: usize,
    /// Sorted one-ring neighbours per vertex.
    neighbors: Vec<Vec<usize>>,
    /// Cells incident to each vertex.
    vertex_cells: Vec<Vec<usize>>,
}

/// 2D triangulation of the unit square with subdomain labels.
///
/// Invariants checked on construction: positive signed cell areas, boundary
/// vertices on the unit square, interface edges separating exactly one inner
/// and one outer cell and forming closed loops.
#[derive(Clone, Debug)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    topo: Arc<Topology>,
}

impl PartialEq for TriangleMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && (Arc::ptr_eq(&self.topo, &other.topo) || self.topo == other.topo)
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn on_unit_square(p: Point) -> bool {
    p[0].abs() <= BOUNDARY_TOL
        || (p[0] - 1.0).abs() <= BOUNDARY_TOL
        || p[1].abs() <= BOUNDARY_TOL
        || (p[1] - 1.0).abs() <= BOUNDARY_TOL
}

impl TriangleMesh {
    /// Builds a mesh and derives boundary and interface data.
    pub fn new(vertices: Vec<Point>, cells: Vec<[usize; 3]>, labels: Vec<Label>) -> Result<Self> {
        let nv = vertices.len();
        if cells.len() != labels.len() {
            return Err(Error::InvalidMesh(format!(
                "{} cells but {} labels",
                cells.len(),
                labels.len()
            )));
        }
        if cells.is_empty() {
            return Err(Error::InvalidMesh("no cells".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::NonFinite(format!("vertex {i}")));
            }
        }
        for (k, c) in cells.iter().enumerate() {
            if c.iter().any(|&i| i >= nv) || c[0] == c[1] || c[1] == c[2] || c[0] == c[2] {
                return Err(Error::InvalidMesh(format!("cell {k} has invalid vertex indices {c:?}")));
            }
            let area = signed_area(vertices[c[0]], vertices[c[1]], vertices[c[2]]);
            if !(area > 0.0) {
                return Err(Error::CellInversion { cell: k, area });
            }
        }

        // undirected edge -> (cell, local directed edge)
        let mut edges: BTreeMap<(usize, usize), Vec<(usize, [usize; 2])>> = BTreeMap::new();
        for (k, c) in cells.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (c[e], c[(e + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push((k, [a, b]));
            }
        }

        let mut is_boundary = vec![false; nv];
        let mut interface_edges = Vec::new();
        for (key, owners) in &edges {
            match owners.as_slice() {
                [_] => {
                    is_boundary[key.0] = true;
                    is_boundary[key.1] = true;
                }
                [(k0, e0), (k1, e1)] => {
                    if labels[*k0] != labels[*k1] {
                        let directed = if labels[*k0] == Label::Inner { *e0 } else { *e1 };
                        interface_edges.push(directed);
                    }
                }
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "edge {key:?} shared by {} cells",
                        owners.len()
                    )))
                }
            }
        }
        for (i, &b) in is_boundary.iter().enumerate() {
            if b && !on_unit_square(vertices[i]) {
                return Err(Error::InvalidMesh(format!(
                    "boundary vertex {i} at {:?} is not on the unit square",
                    vertices[i]
                )));
            }
        }
        let boundary: Vec<usize> = (0..nv).filter(|&i| is_boundary[i]).collect();

        let (interface_edges, interface_loops) = order_loops(interface_edges)?;

        let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nv];
        let mut vertex_cells = vec![Vec::new(); nv];
        for (k, c) in cells.iter().enumerate() {
            for a in 0..3 {
                vertex_cells[c[a]].push(k);
                for b in 0..3 {
                    if a != b {
                        neighbors[c[a]].insert(c[b]);
                    }
                }
            }
        }
        let neighbors = neighbors.into_iter().map(|s| s.into_iter().collect()).collect();

        Ok(TriangleMesh {
            vertices,
            topo: Arc::new(Topology {
                cells,
                labels,
                boundary,
                is_boundary,
                interface_edges,
                interface_loops,
                neighbors,
                vertex_cells,
            }),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.topo.cells.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.topo.cells
    }

    pub fn cell(&self, k: usize) -> [usize; 3] {
        self.topo.cells[k]
    }

    pub fn labels(&self) -> &[Label] {
        &self.topo.labels
    }

    pub fn label(&self, k: usize) -> Label {
        self.topo.labels[k]
    }

    /// Sorted indices of the vertices on the outer boundary.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.topo.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.topo.is_boundary[i]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.topo.is_boundary
    }

    /// Interface edges ordered loop by loop, each oriented with the inner cell on its left.
    pub fn interface_edges(&self) -> &[[usize; 2]] {
        &self.topo.interface_edges
    }

    pub fn interface_loop_count(&self) -> usize {
        self.topo.interface_loops
    }

    /// Sorted, deduplicated vertices lying on the interface.
    pub fn interface_vertices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.topo.interface_edges.iter().flatten().copied().collect();
        set.into_iter().collect()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.topo.neighbors[i]
    }

    pub fn vertex_cells(&self, i: usize) -> &[usize] {
        &self.topo.vertex_cells[i]
    }

    pub fn cell_points(&self, k: usize) -> [Point; 3] {
        let c = self.topo.cells[k];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    pub fn cell_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.cell_points(k);
        signed_area(a, b, c)
    }

    pub fn cell_centroid(&self, k: usize) -> Point {
        let [a, b, c] = self.cell_points(k);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Longest edge length of a cell.
    pub fn cell_diameter(&self, k: usize) -> f64 {
        let [a, b, c] = self.cell_points(k);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    /// Total area of the cells carrying `label`.
    pub fn subdomain_area(&self, label: Label) -> f64 {
        (0..self.num_cells())
            .filter(|&k| self.label(k) == label)
            .map(|k| self.cell_area(k))
            .sum()
    }

    /// Smallest ratio between inscribed and circumscribed radius (scaled to 1
    /// for equilateral cells) over all cells.
    pub fn min_quality(&self) -> f64 {
        (0..self.num_cells())
            .map(|k| {
                let [a, b, c] = self.cell_points(k);
                let (la, lb, lc) = (dist(b, c), dist(c, a), dist(a, b));
                let area = signed_area(a, b, c);
                let s = 0.5 * (la + lb + lc);
                let r_in = area / s;
                let r_out = la * lb * lc / (4.0 * area);
                2.0 * r_in / r_out
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Transports every vertex by the nodal displacement. Connectivity, labels
    /// and interface topology are kept.
    pub fn deform(&self, displacement: &VectorField) -> Result<TriangleMesh> {
        if displacement.len() != self.num_vertices() {
            return Err(Error::Mismatch(format!(
                "displacement has {} values for {} vertices",
                displacement.len(),
                self.num_vertices()
            )));
        }
        for &i in self.boundary_vertices() {
            let d = displacement[i];
            if d[0] != 0.0 || d[1] != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "displacement at boundary vertex {i} is {d:?}, expected zero"
                )));
            }
        }
        let vertices: Vec<Point> = self
            .vertices
            .iter()
            .zip(displacement.iter())
            .map(|(x, d)| [x[0] + d[0], x[1] + d[1]])
            .collect();
        for (k, c) in self.topo.cells.iter().enumerate() {
            let area = signed_area(vertices[c[0]], vertices[c[1]], vertices[c[2]]);
            if !(area > 0.0) {
                return Err(Error::CellInversion { cell: k, area });
            }
        }
        Ok(TriangleMesh { vertices, topo: Arc::clone(&self.topo) })
    }

    /// Rigidly translates all vertices. Only meaningful for testing
    /// invariants: the result is not a mesh of the unit square.
    #[doc(hidden)]
    pub fn translated_unchecked(&self, shift: Point) -> TriangleMesh {
        let vertices = self.vertices.iter().map(|x| [x[0] + shift[0], x[1] + shift[1]]).collect();
        TriangleMesh { vertices, topo: Arc::clone(&self.topo) }
    }

    pub fn shares_topology(&self, other: &TriangleMesh) -> bool {
        Arc::ptr_eq(&self.topo, &other.topo) || self.topo == other.topo
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Chains directed interface edges into closed loops.
fn order_loops(edges: Vec<[usize; 2]>) -> Result<(Vec<[usize; 2]>, usize)> {
    if edges.is_empty() {
        return Ok((edges, 0));
    }
    let mut outgoing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut in_degree: BTreeMap<usize, usize> = BTreeMap::new();
    for (e, [a, b]) in edges.iter().enumerate() {
        outgoing.entry(*a).or_default().push(e);
        *in_degree.entry(*b).or_default() += 1;
    }
    for (v, out) in &outgoing {
        if in_degree.get(v).copied().unwrap_or(0) != out.len() {
            return Err(Error::InvalidMesh(format!("interface is not closed at vertex {v}")));
        }
    }
    if in_degree.keys().any(|v| !outgoing.contains_key(v)) {
        return Err(Error::InvalidMesh("interface is not closed".into()));
    }

    let mut used = vec![false; edges.len()];
    let mut ordered = Vec::with_capacity(edges.len());
    let mut loops = 0;
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        loops += 1;
        let mut e = start;
        loop {
            used[e] = true;
            ordered.push(edges[e]);
            let head = edges[e][1];
            match outgoing[&head].iter().copied().find(|&n| !used[n]) {
                Some(n) => e = n,
                None => break,
            }
        }
    }
    Ok((ordered, loops))
}

/// Sum of the Euclidean lengths of the interface edges.
pub fn interface_length(mesh: &TriangleMesh) -> f64 {
    mesh.interface_edges()
        .iter()
        .map(|&[a, b]| dist(mesh.vertex(a), mesh.vertex(b)))
        .sum()
}

/// Interface vertices together with their one-ring neighbours, sorted.
pub fn interface_adjacent_vertices(mesh: &TriangleMesh) -> Vec<usize> {
    let mut set = BTreeSet::new();
    for v in mesh.interface_vertices() {
        set.insert(v);
        set.extend(mesh.neighbors(v).iter().copied());
    }
    set.into_iter().collect()
}

/// Polylines of the interface loops, each closed by repeating its first point.
pub fn interface_polylines(mesh: &TriangleMesh) -> Vec<Vec<Point>> {
    let mut lines: Vec<Vec<Point>> = Vec::new();
    let mut current: Vec<Point> = Vec::new();
    let mut start = usize::MAX;
    for &[a, b] in mesh.interface_edges() {
        if current.is_empty() {
            start = a;
            current.push(mesh.vertex(a));
        }
        current.push(mesh.vertex(b));
        if b == start {
            lines.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        lines.push(current);
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> TriangleMesh {
        TriangleMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![Label::Outer, Label::Outer],
        )
        .unwrap()
    }

    #[test]
    fn rejects_clockwise_cells() {
        let err = TriangleMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            vec![Label::Outer],
        )
        .unwrap_err();
        assert!(matches!(err, Error::CellInversion { .. }));
    }

    #[test]
    fn rejects_boundary_off_the_square() {
        let err = TriangleMesh::new(
            vec![[0.0, 0.0], [0.5, 0.0], [0.2, 0.5]],
            vec![[0, 1, 2]],
            vec![Label::Outer],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn empty_interface() {
        let m = two_triangles();
        assert!(m.interface_edges().is_empty());
        assert_eq!(m.interface_loop_count(), 0);
        assert!(interface_adjacent_vertices(&m).is_empty());
        assert_eq!(interface_length(&m), 0.0);
        assert_eq!(m.boundary_vertices(), &[0, 1, 2, 3]);
    }

    #[test]
    fn single_interface_edge_ring() {
        // interface edge (0,2) is not closed on its own, so use labels on a
        // structured mesh instead and check the ring definition by hand
        let m = generate_structured_mesh(4, Some(Rect::new(0.25, 0.25, 0.75, 0.75))).unwrap();
        let ring = interface_adjacent_vertices(&m);
        let mut expected = BTreeSet::new();
        for &[a, b] in m.interface_edges() {
            for v in [a, b] {
                expected.insert(v);
                expected.extend(m.neighbors(v).iter().copied());
            }
        }
        assert_eq!(ring, expected.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn zero_deformation_is_identity() {
        let m = generate_structured_mesh(6, Some(Rect::new(1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0)))
            .unwrap();
        let zero = VectorField::zeros(m.num_vertices());
        let d = m.deform(&zero).unwrap();
        assert_eq!(d, m);
        assert_eq!(interface_length(&d).to_bits(), interface_length(&m).to_bits());
    }

    #[test]
    fn uniform_interior_shift() {
        let m = generate_structured_mesh(8, Some(Rect::new(0.25, 0.25, 0.75, 0.75))).unwrap();
        let mut v = VectorField::zeros(m.num_vertices());
        for i in 0..m.num_vertices() {
            if !m.is_boundary(i) {
                v[i] = [1e-3, 0.0];
            }
        }
        let d = m.deform(&v).unwrap();
        for i in 0..m.num_vertices() {
            let dx = d.vertex(i)[0] - m.vertex(i)[0];
            let dy = d.vertex(i)[1] - m.vertex(i)[1];
            if m.is_boundary(i) {
                assert_eq!((dx, dy), (0.0, 0.0));
            } else {
                assert!((dx - 1e-3).abs() < 1e-15 && dy == 0.0);
            }
        }
        assert_eq!(d.interface_edges(), m.interface_edges());
    }

    #[test]
    fn flipping_displacement_is_rejected() {
        let m = generate_structured_mesh(8, None).unwrap();
        let h = 1.0 / 8.0;
        let target = (0..m.num_vertices()).find(|&i| !m.is_boundary(i)).unwrap();
        let mut v = VectorField::zeros(m.num_vertices());
        v[target] = [2.5 * h, 0.0];
        assert!(matches!(m.deform(&v), Err(Error::CellInversion { .. })));
    }

    #[test]
    fn boundary_displacement_rejected() {
        let m = generate_structured_mesh(4, None).unwrap();
        let mut v = VectorField::zeros(m.num_vertices());
        v[0] = [0.0, 1e-3];
        assert!(matches!(m.deform(&v), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn square_interface_length() {
        let m = generate_structured_mesh(8, Some(Rect::new(0.25, 0.25, 0.75, 0.75))).unwrap();
        assert!((interface_length(&m) - 2.0).abs() < 1e-14);
        assert_eq!(m.interface_loop_count(), 1);
        let lines = interface_polylines(&m);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].first(), lines[0].last());
    }

    #[test]
    fn interface_edges_have_inner_on_left() {
        let m = generate_structured_mesh(8, Some(Rect::new(0.25, 0.25, 0.75, 0.75))).unwrap();
        for &[a, b] in m.interface_edges() {
            let (pa, pb) = (m.vertex(a), m.vertex(b));
            let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
            let normal_left = [-(pb[1] - pa[1]), pb[0] - pa[0]];
            let probe = [mid[0] + 0.01 * normal_left[0], mid[1] + 0.01 * normal_left[1]];
            assert!(probe[0] > 0.25 && probe[0] < 0.75 && probe[1] > 0.25 && probe[1] < 0.75);
        }
    }
}
