//! Plain-text cloud files.
//!
//! ```text
//! gfdm-cloud v1 n=3 k=2 N=2
//! 1 0 0 0.5 0
//! 0 1 0 0.5 1
//! ```
//!
//! Each data line holds the coordinates, the smoothing length and the
//! boundary flag. Floats are written in shortest round-trip form.

use std::io::{BufRead, Write};

use super::PointCloud;
use crate::error::{GfdmError, Result};

const MAGIC: &str = "gfdm-cloud";

pub fn write_cloud<W: Write>(cloud: &PointCloud, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{MAGIC} v1 n={} k={} N={}",
        cloud.embedding_dim(),
        cloud.manifold_dim(),
        cloud.len()
    )?;
    let mut line = String::new();
    for i in 0..cloud.len() {
        line.clear();
        for v in cloud.point(i) {
            line.push_str(&format!("{v} "));
        }
        line.push_str(&format!(
            "{} {}",
            cloud.smoothing_length(i),
            cloud.is_boundary(i) as u8
        ));
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_cloud<R: BufRead>(input: R) -> Result<PointCloud> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(GfdmError::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let header = header?;
    let (n, k, count) = parse_header(&header)?;

    let mut positions = Vec::with_capacity(n * count);
    let mut h = Vec::with_capacity(count);
    let mut flags = Vec::with_capacity(count);
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != n + 2 {
            return Err(GfdmError::Parse {
                line: lineno,
                message: format!(
                    "expected {} fields (coordinates, h, boundary flag), found {}",
                    n + 2,
                    fields.len()
                ),
            });
        }
        for f in &fields[..n + 1] {
            let v: f64 = f.parse().map_err(|_| GfdmError::Parse {
                line: lineno,
                message: format!("not a number: {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(GfdmError::Parse {
                    line: lineno,
                    message: format!("non-finite value {f:?}"),
                });
            }
            positions.push(v);
        }
        h.push(positions.pop().unwrap());
        flags.push(match fields[n + 1] {
            "0" => false,
            "1" => true,
            other => {
                return Err(GfdmError::Parse {
                    line: lineno,
                    message: format!("boundary flag must be 0 or 1, found {other:?}"),
                })
            }
        });
    }
    if flags.len() != count {
        return Err(GfdmError::Parse {
            line: 1,
            message: format!("header declares {count} points, file holds {}", flags.len()),
        });
    }
    PointCloud::new(positions, n, k, h, flags)
}

fn parse_header(header: &str) -> Result<(usize, usize, usize)> {
    let bad = |message: String| GfdmError::Parse { line: 1, message };
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MAGIC) || parts.next() != Some("v1") {
        return Err(bad(format!("unrecognized header {header:?}")));
    }
    let (mut n, mut k, mut count) = (None, None, None);
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed field {part:?}")))?;
        let value: usize = value
            .parse()
            .map_err(|_| bad(format!("malformed value in {part:?}")))?;
        match key {
            "n" => n = Some(value),
            "k" => k = Some(value),
            "N" => count = Some(value),
            _ => return Err(bad(format!("unknown header field {key:?}"))),
        }
    }
    match (n, k, count) {
        (Some(n), Some(k), Some(c)) => Ok((n, k, c)),
        _ => Err(bad("header must define n, k and N".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let cloud = PointCloud::new(
            vec![0.1, 1.0 / 3.0, -2e-17, 1e300, -0.0, 7.0],
            3,
            2,
            vec![0.123456789012345, 2.0],
            vec![false, true],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_cloud(&cloud, &mut buf).unwrap();
        let back = read_cloud(buf.as_slice()).unwrap();
        assert_eq!(back, cloud);
    }

    #[test]
    fn missing_boundary_flag_is_rejected() {
        let text = "gfdm-cloud v1 n=2 k=1 N=1\n1 0 0.5\n";
        assert!(matches!(
            read_cloud(text.as_bytes()),
            Err(GfdmError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let text = "gfdm-cloud v1 n=2 k=1 N=2\n1 0 0.5 0\n";
        assert!(read_cloud(text.as_bytes()).is_err());
        assert!(read_cloud("something else\n".as_bytes()).is_err());
    }
}
