//! Analytic descriptions of the manifolds used by the samplers and benchmarks.
//!
//! Every surface knows its implicit equation, an outward (or upward) unit
//! normal and its area, which is enough to generate clouds, to override
//! estimated normals in validation runs and to build exact solutions.

use std::f64::consts::PI;

use crate::error::{GfdmError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Surface {
    /// Sphere of the given radius centered at the origin.
    Sphere { radius: f64 },
    /// Torus around the z axis: `(major - sqrt(x^2 + y^2))^2 + z^2 = minor^2`.
    Torus { major: f64, minor: f64 },
    /// Cone `x^2 + y^2 = slope^2 z^2` restricted to `z_min <= z <= z_max`.
    Cone { slope: f64, z_min: f64, z_max: f64 },
    /// Graph `z = sin(2x) sin(y)` over a rectangle.
    WavePatch {
        x_range: (f64, f64),
        y_range: (f64, f64),
    },
    /// Circle of the given radius in the plane.
    Circle { radius: f64 },
}

impl Surface {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Surface::Sphere { radius } | Surface::Circle { radius } => radius > 0.0,
            Surface::Torus { major, minor } => minor > 0.0 && major > minor,
            Surface::Cone {
                slope,
                z_min,
                z_max,
            } => slope > 0.0 && z_min < z_max && (z_max <= 0.0 || z_min >= 0.0),
            Surface::WavePatch { x_range, y_range } => {
                x_range.0 < x_range.1 && y_range.0 < y_range.1
            }
        };
        let finite = match *self {
            Surface::Sphere { radius } | Surface::Circle { radius } => radius.is_finite(),
            Surface::Torus { major, minor } => major.is_finite() && minor.is_finite(),
            Surface::Cone {
                slope,
                z_min,
                z_max,
            } => slope.is_finite() && z_min.is_finite() && z_max.is_finite(),
            Surface::WavePatch { x_range, y_range } => [x_range.0, x_range.1, y_range.0, y_range.1]
                .iter()
                .all(|v| v.is_finite()),
        };
        if ok && finite {
            Ok(())
        } else {
            Err(GfdmError::invalid(format!(
                "invalid surface parameters: {self:?}"
            )))
        }
    }

    pub fn embedding_dim(&self) -> usize {
        match self {
            Surface::Circle { .. } => 2,
            _ => 3,
        }
    }

    pub fn manifold_dim(&self) -> usize {
        self.embedding_dim() - 1
    }

    pub fn is_closed(&self) -> bool {
        matches!(
            self,
            Surface::Sphere { .. } | Surface::Torus { .. } | Surface::Circle { .. }
        )
    }

    /// Signed distance-like residual of the implicit equation, zero on the surface.
    pub fn residual(&self, p: &[f64]) -> f64 {
        match *self {
            Surface::Sphere { radius } | Surface::Circle { radius } => norm(p) - radius,
            Surface::Torus { major, minor } => {
                let rho = p[0].hypot(p[1]);
                (major - rho).hypot(p[2]) - minor
            }
            Surface::Cone { slope, .. } => p[0].hypot(p[1]) - slope * p[2].abs(),
            Surface::WavePatch { .. } => p[2] - wave_height(p[0], p[1]),
        }
    }

    /// Unit normal; outward for closed surfaces and cones, upward for the wave patch.
    pub fn normal(&self, p: &[f64]) -> Vec<f64> {
        let g = match *self {
            Surface::Sphere { .. } | Surface::Circle { .. } => p.to_vec(),
            Surface::Torus { major, .. } => {
                let rho = p[0].hypot(p[1]);
                let s = (rho - major) / rho;
                vec![s * p[0], s * p[1], p[2]]
            }
            Surface::Cone { slope, .. } => {
                let rho = p[0].hypot(p[1]);
                vec![p[0] / rho, p[1] / rho, -slope * p[2].signum()]
            }
            Surface::WavePatch { .. } => {
                let (x, y) = (p[0], p[1]);
                vec![
                    -2.0 * (2.0 * x).cos() * y.sin(),
                    -(2.0 * x).sin() * y.cos(),
                    1.0,
                ]
            }
        };
        let l = norm(&g);
        g.into_iter().map(|v| v / l).collect()
    }

    /// Tangential projector `I - n n^T` at `p`, row-major.
    pub fn projector(&self, p: &[f64]) -> Vec<f64> {
        let n = self.normal(p);
        let d = n.len();
        let mut out = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                out[r * d + c] = if r == c { 1.0 } else { 0.0 } - n[r] * n[c];
            }
        }
        out
    }

    /// Area (length for curves) of the surface.
    pub fn area(&self) -> f64 {
        match *self {
            Surface::Sphere { radius } => 4.0 * PI * radius * radius,
            Surface::Circle { radius } => 2.0 * PI * radius,
            Surface::Torus { major, minor } => 4.0 * PI * PI * major * minor,
            Surface::Cone {
                slope,
                z_min,
                z_max,
            } => {
                let stretch = (1.0 + slope * slope).sqrt();
                let (a, b) = (z_min.abs(), z_max.abs());
                PI * slope * stretch * (a * a - b * b).abs()
            }
            Surface::WavePatch { x_range, y_range } => {
                // composite midpoint rule, plenty accurate for reporting
                let m = 800;
                let dx = (x_range.1 - x_range.0) / m as f64;
                let dy = (y_range.1 - y_range.0) / m as f64;
                let mut acc = 0.0;
                for i in 0..m {
                    let x = x_range.0 + (i as f64 + 0.5) * dx;
                    for j in 0..m {
                        let y = y_range.0 + (j as f64 + 0.5) * dy;
                        let zx = 2.0 * (2.0 * x).cos() * y.sin();
                        let zy = (2.0 * x).sin() * y.cos();
                        acc += (1.0 + zx * zx + zy * zy).sqrt();
                    }
                }
                acc * dx * dy
            }
        }
    }
}

pub fn wave_height(x: f64, y: f64) -> f64 {
    (2.0 * x).sin() * y.sin()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
