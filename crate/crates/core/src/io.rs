//! Output formats: legacy VTK polydata for point fields and CSV tables.

use std::io::Write;

use crate::error::{GfdmError, Result};
use crate::pointcloud::PointCloud;

/// Writes the cloud as `VERTICES` with one named scalar array per field.
/// Two-dimensional embeddings are padded with `z = 0`.
pub fn write_vtk<W: Write>(
    mut out: W,
    title: &str,
    cloud: &PointCloud,
    fields: &[(&str, &[f64])],
) -> Result<()> {
    let n = cloud.len();
    for (name, values) in fields {
        if values.len() != n {
            return Err(GfdmError::ShapeMismatch {
                expected: n,
                found: values.len(),
            });
        }
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(GfdmError::invalid(format!(
                "field name '{name}' must be a non-empty word"
            )));
        }
    }
    let title: String = title
        .chars()
        .map(|c| if c == '\n' { ' ' } else { c })
        .take(255)
        .collect();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET POLYDATA")?;
    writeln!(out, "POINTS {n} double")?;
    for p in cloud.points() {
        let c = |d: usize| p.get(d).copied().unwrap_or(0.0);
        writeln!(out, "{:e} {:e} {:e}", c(0), c(1), c(2))?;
    }
    writeln!(out, "VERTICES {n} {}", 2 * n)?;
    for i in 0..n {
        writeln!(out, "1 {i}")?;
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {n}")?;
    }
    let boundary: Vec<f64> = cloud
        .boundary_flags()
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect();
    let mut all: Vec<(&str, &[f64])> = fields.to_vec();
    if !fields.is_empty() {
        all.push(("boundary", &boundary));
    }
    for (name, values) in all {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(out, "{v:e}")?;
        }
    }
    Ok(())
}

/// Writes a header row and records as comma-separated UTF-8.
pub fn write_csv<W: Write, S: AsRef<str>>(out: W, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(GfdmError::ShapeMismatch {
                expected: header.len(),
                found: r.len(),
            });
        }
        w.write_record(r.iter().map(|c| c.as_ref()))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> GfdmError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => GfdmError::Io(io),
        other => GfdmError::invalid(format!("csv: {other:?}")),
    }
}
