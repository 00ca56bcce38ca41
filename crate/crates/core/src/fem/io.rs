//! Plain-text field format: a header line `field N`, then `N` values, one per
//! line. Vector fields store their two components interleaved, so a vector
//! field on `n` vertices has header `field 2n`.

use std::io::{BufRead, Write};

use super::{ScalarField, VectorField};
use crate::error::{Error, Result};

pub fn write_field<W: Write>(values: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "field {}", values.len())?;
    for v in values {
        // `{:e}` prints the shortest representation that round-trips
        writeln!(out, "{v:e}")?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(input: R) -> Result<ScalarField> {
    let mut lines = input
        .lines()
        .map(|l| l.map(|s| s.trim().to_string()))
        .filter(|l| !matches!(l, Ok(s) if s.is_empty() || s.starts_with('#')));
    let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))??;
    let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["field", n] => n.parse().map_err(|_| Error::Parse(format!("bad field length `{n}`")))?,
        _ => return Err(Error::Parse(format!("expected `field N`, got `{header}`"))),
    };
    let mut values = Vec::with_capacity(n);
    for line in lines.by_ref().take(n) {
        let line = line?;
        values.push(line.parse::<f64>().map_err(|_| Error::Parse(format!("bad value `{line}`")))?);
    }
    if values.len() != n {
        return Err(Error::Parse(format!("expected {n} values, found {}", values.len())));
    }
    if lines.next().is_some() {
        return Err(Error::Parse("trailing data after field values".into()));
    }
    Ok(ScalarField::from_vec(values))
}

pub fn write_vector_field<W: Write>(field: &VectorField, out: W) -> Result<()> {
    write_field(&field.to_flat(), out)
}

pub fn read_vector_field<R: BufRead>(input: R) -> Result<VectorField> {
    VectorField::from_flat(&read_field(input)?)
}
