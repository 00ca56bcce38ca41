//! Plain-text mesh format:
//!
//! ```text
//! vertices N cells M
//! x y            (N lines)
//! i j k label    (M lines, label 1 = inner, 0 = outer)
//! ```
//!
//! Coordinates are written with the shortest representation that round-trips.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{Label, TriangleMesh};
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &TriangleMesh, mut out: W) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "vertices {} cells {}", mesh.num_vertices(), mesh.num_cells()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{:e} {:e}", v[0], v[1]).unwrap();
    }
    for (k, c) in mesh.cells().iter().enumerate() {
        let l = match mesh.label(k) {
            Label::Inner => 1,
            Label::Outer => 0,
        };
        writeln!(s, "{} {} {} {}", c[0], c[1], c[2], l).unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<TriangleMesh> {
    let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('#') => None,
        other => Some((i + 1, other)),
    });
    let (lineno, header) = lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?;
    let header = header?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    let (nv, nc) = match tok.as_slice() {
        ["vertices", n, "cells", m] => (parse_usize(n, lineno)?, parse_usize(m, lineno)?),
        _ => return Err(Error::Parse(format!("line {lineno}: expected `vertices N cells M`"))),
    };
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (lineno, line) = lines.next().ok_or_else(|| Error::Parse("truncated vertex list".into()))?;
        let line = line?;
        let v: Vec<&str> = line.split_whitespace().collect();
        if v.len() != 2 {
            return Err(Error::Parse(format!("line {lineno}: expected `x y`")));
        }
        vertices.push([parse_f64(v[0], lineno)?, parse_f64(v[1], lineno)?]);
    }
    let mut cells = Vec::with_capacity(nc);
    let mut labels = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (lineno, line) = lines.next().ok_or_else(|| Error::Parse("truncated cell list".into()))?;
        let line = line?;
        let v: Vec<&str> = line.split_whitespace().collect();
        if v.len() != 4 {
            return Err(Error::Parse(format!("line {lineno}: expected `i j k label`")));
        }
        cells.push([
            parse_usize(v[0], lineno)?,
            parse_usize(v[1], lineno)?,
            parse_usize(v[2], lineno)?,
        ]);
        labels.push(match v[3] {
            "1" | "inner" => Label::Inner,
            "0" | "outer" => Label::Outer,
            other => return Err(Error::Parse(format!("line {lineno}: unknown label `{other}`"))),
        });
    }
    if let Some((lineno, _)) = lines.next() {
        return Err(Error::Parse(format!("line {lineno}: trailing data")));
    }
    TriangleMesh::new(vertices, cells, labels)
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("line {line}: `{s}` is not an index")))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("line {line}: `{s}` is not a number")))
}

/// Nodal data attached to a VTK export.
pub enum VtkField<'a> {
    Scalar(&'a str, &'a [f64]),
    Vector(&'a str, &'a [[f64; 2]]),
}

/// Legacy ASCII VTK unstructured grid with the cell labels as cell data.
pub fn write_vtk<W: Write>(mesh: &TriangleMesh, fields: &[VtkField<'_>], mut out: W) -> Result<()> {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nvishape mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", mesh.num_vertices()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{:e} {:e} 0", v[0], v[1]).unwrap();
    }
    writeln!(s, "CELLS {} {}", mesh.num_cells(), 4 * mesh.num_cells()).unwrap();
    for c in mesh.cells() {
        writeln!(s, "3 {} {} {}", c[0], c[1], c[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {}", mesh.num_cells()).unwrap();
    for _ in mesh.cells() {
        s.push_str("5\n");
    }
    writeln!(s, "CELL_DATA {}\nSCALARS label int 1\nLOOKUP_TABLE default", mesh.num_cells()).unwrap();
    for l in mesh.labels() {
        s.push_str(if *l == Label::Inner { "1\n" } else { "0\n" });
    }
    if !fields.is_empty() {
        writeln!(s, "POINT_DATA {}", mesh.num_vertices()).unwrap();
    }
    for f in fields {
        match f {
            VtkField::Scalar(name, values) => {
                check_len(values.len(), mesh.num_vertices(), name)?;
                writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
                for v in values.iter() {
                    writeln!(s, "{v:e}").unwrap();
                }
            }
            VtkField::Vector(name, values) => {
                check_len(values.len(), mesh.num_vertices(), name)?;
                writeln!(s, "VECTORS {name} double").unwrap();
                for v in values.iter() {
                    writeln!(s, "{:e} {:e} 0", v[0], v[1]).unwrap();
                }
            }
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn check_len(got: usize, expected: usize, name: &str) -> Result<()> {
    if got != expected {
        return Err(Error::Mismatch(format!("field `{name}` has {got} values for {expected} vertices")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_disk_mesh;

    #[test]
    fn text_round_trip_is_exact() {
        let m = generate_disk_mesh(0.2, 0.05).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(read_mesh("".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_mesh("vertices 1 cells 0\n0 0\n".as_bytes()), Err(Error::InvalidMesh(_))));
        let bad_label = "vertices 3 cells 1\n0 0\n1 0\n0 1\n0 1 2 middle\n";
        assert!(matches!(read_mesh(bad_label.as_bytes()), Err(Error::Parse(_))));
        let trailing = "vertices 3 cells 1\n0 0\n1 0\n0 1\n0 1 2 0\n7\n";
        assert!(matches!(read_mesh(trailing.as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn vtk_has_sections() {
        let m = generate_disk_mesh(0.2, 0.05).unwrap();
        let y = vec![0.0; m.num_vertices()];
        let mut buf = Vec::new();
        write_vtk(&m, &[VtkField::Scalar("y", &y)], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains(&format!("POINTS {} double", m.num_vertices())));
        assert!(s.contains("SCALARS y double 1"));
        let short = vec![0.0; 3];
        assert!(write_vtk(&m, &[VtkField::Scalar("y", &short)], Vec::new()).is_err());
    }
}
