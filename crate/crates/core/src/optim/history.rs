use std::io::Write;

use super::IterationRecord;
use crate::error::Result;
use crate::mesh::{interface_polylines, TriangleMesh};

pub const HISTORY_HEADER: &str =
    "step,J,tracking,perimeter,grad_norm,grad_norm_smoothed,halvings,safeguard,active_vertices,min_quality,snapshot";

/// One line per record. Missing values are left empty.
pub fn write_history_csv<W: Write>(history: &[IterationRecord], mut out: W) -> Result<()> {
    writeln!(out, "{HISTORY_HEADER}")?;
    for r in history {
        let smoothed = r.grad_norm_smoothed.map(|v| format!("{v:e}")).unwrap_or_default();
        let halvings = r.halvings.map(|h| h.to_string()).unwrap_or_default();
        let snapshot = r.snapshot.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{},{},{},{},{:e},{}",
            r.step,
            r.objective,
            r.tracking,
            r.perimeter,
            r.grad_norm,
            smoothed,
            halvings,
            r.safeguard as u8,
            r.active_vertices,
            r.min_quality,
            snapshot
        )?;
    }
    Ok(())
}

/// Interface polylines as `loop,x,y` rows.
pub fn write_interface_csv<W: Write>(mesh: &TriangleMesh, mut out: W) -> Result<()> {
    writeln!(out, "loop,x,y")?;
    for (l, poly) in interface_polylines(mesh).iter().enumerate() {
        for p in poly {
            writeln!(out, "{l},{:e},{:e}", p[0], p[1])?;
        }
    }
    Ok(())
}
