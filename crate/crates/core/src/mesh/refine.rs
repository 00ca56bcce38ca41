use std::collections::HashMap;

use super::{Point, TriangleMesh};
use crate::error::{Error, Result};

/// Red refinement of every cell: each triangle is split into four.
pub fn refine_uniform(mesh: &TriangleMesh) -> Result<TriangleMesh> {
    refine_marked(mesh, &vec![true; mesh.num_cells()])
}

/// Refines the marked cells red (one into four) and closes the mesh with
/// green bisections. A cell with two or more split edges is refined red, so
/// the closure loop only ever adds splits.
pub fn refine_marked(mesh: &TriangleMesh, marked: &[bool]) -> Result<TriangleMesh> {
    if marked.len() != mesh.num_cells() {
        return Err(Error::Mismatch(format!(
            "{} marks for {} cells",
            marked.len(),
            mesh.num_cells()
        )));
    }
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut split: HashMap<(usize, usize), usize> = HashMap::new();
    let mut red: Vec<bool> = marked.to_vec();
    let mut vertices: Vec<Point> = mesh.vertices().to_vec();

    let mut changed = true;
    while changed {
        changed = false;
        for (k, c) in mesh.cells().iter().enumerate() {
            let n_split = (0..3).filter(|&e| split.contains_key(&key(c[e], c[(e + 1) % 3]))).count();
            if !red[k] && n_split >= 2 {
                red[k] = true;
            }
            if red[k] {
                for e in 0..3 {
                    let (a, b) = (c[e], c[(e + 1) % 3]);
                    if !split.contains_key(&key(a, b)) {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        vertices.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
                        split.insert(key(a, b), vertices.len() - 1);
                        changed = true;
                    }
                }
            }
        }
    }

    let mut cells = Vec::with_capacity(mesh.num_cells() * 2);
    let mut labels = Vec::with_capacity(mesh.num_cells() * 2);
    for (k, &[a, b, c]) in mesh.cells().iter().enumerate() {
        let label = mesh.label(k);
        let mab = split.get(&key(a, b)).copied();
        let mbc = split.get(&key(b, c)).copied();
        let mca = split.get(&key(c, a)).copied();
        let children: Vec<[usize; 3]> = match (mab, mbc, mca) {
            (Some(ab), Some(bc), Some(ca)) => vec![[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]],
            (None, None, None) => vec![[a, b, c]],
            (Some(ab), None, None) => vec![[a, ab, c], [ab, b, c]],
            (None, Some(bc), None) => vec![[a, b, bc], [a, bc, c]],
            (None, None, Some(ca)) => vec![[a, b, ca], [ca, b, c]],
            _ => unreachable!("closure leaves at most one split edge on green cells"),
        };
        for ch in children {
            cells.push(ch);
            labels.push(label);
        }
    }
    TriangleMesh::new(vertices, cells, labels)
}
