//! Deterministic samplers for the analytic surfaces.
//!
//! The size parameter is the target spacing `s`, read as the square root of
//! the surface area per point (arc length per point on curves). Smoothing
//! lengths are set to `s / SPACING_PER_SMOOTHING_LENGTH`.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PointCloud;
use crate::error::{GfdmError, Result};
use crate::surface::{wave_height, Surface};

/// Ratio of point spacing to smoothing length.
pub const SPACING_PER_SMOOTHING_LENGTH: f64 = 0.3;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Samples `surface` at spacing `spacing`. `jitter` in `[0, 1)` perturbs the
/// points by up to `jitter * spacing / 2` along the surface.
pub fn sample_surface(
    surface: &Surface,
    spacing: f64,
    jitter: f64,
    seed: u64,
) -> Result<PointCloud> {
    surface.validate()?;
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(GfdmError::invalid(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(GfdmError::invalid(format!(
            "jitter must lie in [0, 1), got {jitter}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (points, boundary) = match *surface {
        Surface::Sphere { radius } => sphere(radius, spacing, jitter, &mut rng),
        Surface::Circle { radius } => circle(radius, spacing, jitter, &mut rng),
        Surface::Torus { major, minor } => torus(major, minor, spacing, jitter, &mut rng),
        Surface::Cone {
            slope,
            z_min,
            z_max,
        } => cone(slope, z_min, z_max, spacing, jitter, &mut rng),
        Surface::WavePatch { x_range, y_range } => {
            wave(x_range, y_range, spacing, jitter, &mut rng)
        }
    };
    let dim = surface.embedding_dim();
    let h = spacing / SPACING_PER_SMOOTHING_LENGTH;
    let keep = thin(&points, &boundary, dim, super::R_MIN * h);
    let mut pos = Vec::with_capacity(keep.len() * dim);
    let mut flags = Vec::with_capacity(keep.len());
    for &i in &keep {
        pos.extend_from_slice(&points[i * dim..(i + 1) * dim]);
        flags.push(boundary[i]);
    }
    let n = flags.len();
    Ok(PointCloud::new(pos, dim, dim - 1, vec![h; n], flags)?.with_surface(surface.clone()))
}

fn centered(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>() - 0.5
}

fn sphere(r: f64, s: f64, jitter: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<bool>) {
    let n = ((4.0 * PI * r * r) / (s * s)).round().max(1.0) as usize;
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    let mut pts = Vec::with_capacity(3 * n);
    for i in 0..n {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden_angle * i as f64;
        let mut p = [rho * phi.cos(), rho * phi.sin(), z];
        if jitter > 0.0 {
            // perturb along two tangent directions, then pull back to the sphere
            let t1 = if p[2].abs() < 0.9 {
                normalize([-p[1], p[0], 0.0])
            } else {
                normalize([0.0, -p[2], p[1]])
            };
            let t2 = cross(p, t1);
            let (a, b) = (
                jitter * s / r * centered(rng),
                jitter * s / r * centered(rng),
            );
            for d in 0..3 {
                p[d] += a * t1[d] + b * t2[d];
            }
            p = normalize(p);
        }
        pts.extend(p.iter().map(|v| v * r));
    }
    (pts, vec![false; n])
}

fn circle(r: f64, s: f64, jitter: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<bool>) {
    let n = (2.0 * PI * r / s).round().max(1.0) as usize;
    let dt = 2.0 * PI / n as f64;
    let mut pts = Vec::with_capacity(2 * n);
    for i in 0..n {
        let t = dt * i as f64 + jitter * dt * centered(rng);
        pts.extend([r * t.cos(), r * t.sin()]);
    }
    (pts, vec![false; n])
}

fn torus(big: f64, small: f64, s: f64, jitter: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<bool>) {
    let n_phi = (2.0 * PI * small / s).round().max(3.0) as usize;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut pts = Vec::new();
    for k in 0..n_phi {
        let phi0 = dphi * k as f64;
        let rho0 = big + small * phi0.cos();
        let n_theta = (2.0 * PI * rho0 / s).round().max(3.0) as usize;
        let dtheta = 2.0 * PI / n_theta as f64;
        let offset = (k as f64 * GOLDEN).fract() * dtheta;
        for m in 0..n_theta {
            let phi = phi0 + jitter * dphi * centered(rng);
            let theta = offset + dtheta * m as f64 + jitter * dtheta * centered(rng);
            let rho = big + small * phi.cos();
            pts.extend([rho * theta.cos(), rho * theta.sin(), small * phi.sin()]);
        }
    }
    let n = pts.len() / 3;
    (pts, vec![false; n])
}

fn cone(
    slope: f64,
    z_min: f64,
    z_max: f64,
    s: f64,
    jitter: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<bool>) {
    let stretch = (1.0 + slope * slope).sqrt();
    let sign = if z_max <= 0.0 { -1.0 } else { 1.0 };
    let (za, zb) = (z_min.abs().min(z_max.abs()), z_min.abs().max(z_max.abs()));
    // slant distance from the apex
    let (la, lb) = (za * stretch, zb * stretch);
    let rows: Vec<(f64, bool)> = if za > 0.0 {
        let n = ((lb - la) / s).round().max(1.0) as usize;
        let step = (lb - la) / n as f64;
        (0..=n)
            .map(|k| (lb - step * k as f64, k == 0 || k == n))
            .collect()
    } else {
        (0..)
            .map(|k| lb - s * k as f64)
            .take_while(|&l| l >= 0.5 * s)
            .enumerate()
            .map(|(k, l)| (l, k == 0))
            .collect()
    };
    let row_step = if rows.len() > 1 {
        rows[0].0 - rows[1].0
    } else {
        s
    };
    let mut pts = Vec::new();
    let mut flags = Vec::new();
    for (k, &(l0, on_rim)) in rows.iter().enumerate() {
        let rho0 = l0 * slope / stretch;
        let n_theta = (2.0 * PI * rho0 / s).round().max(3.0) as usize;
        let dtheta = 2.0 * PI / n_theta as f64;
        let offset = (k as f64 * GOLDEN).fract() * dtheta;
        for m in 0..n_theta {
            let l = if on_rim {
                l0
            } else {
                (l0 + jitter * row_step * centered(rng)).clamp(la, lb)
            };
            let theta = offset + dtheta * m as f64 + jitter * dtheta * centered(rng);
            let rho = l * slope / stretch;
            pts.extend([rho * theta.cos(), rho * theta.sin(), sign * rho / slope]);
            flags.push(on_rim);
        }
    }
    (pts, flags)
}

fn wave(
    xr: (f64, f64),
    yr: (f64, f64),
    s: f64,
    jitter: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<bool>) {
    // random sequential thinning of a dense candidate set; the exclusion
    // radius is calibrated so the saturated density is about one point per s^2
    let d = 0.835 * s;
    let step = s / 4.0;
    let nx = ((xr.1 - xr.0) / step).ceil() as usize;
    let ny = ((yr.1 - yr.0) / step).ceil() as usize;
    let (dx, dy) = ((xr.1 - xr.0) / nx as f64, (yr.1 - yr.0) / ny as f64);

    let corners = vec![(xr.0, yr.0), (xr.1, yr.0), (xr.0, yr.1), (xr.1, yr.1)];
    let mut edges = Vec::new();
    for i in 1..nx {
        let x = xr.0 + dx * i as f64;
        edges.push((x, yr.0));
        edges.push((x, yr.1));
    }
    for j in 1..ny {
        let y = yr.0 + dy * j as f64;
        edges.push((xr.0, y));
        edges.push((xr.1, y));
    }
    let mut interior = Vec::new();
    for j in 1..ny {
        for i in 1..nx {
            let x = xr.0 + dx * (i as f64 + jitter * centered(rng));
            let y = yr.0 + dy * (j as f64 + jitter * centered(rng));
            interior.push((x, y));
        }
    }
    edges.shuffle(rng);
    interior.shuffle(rng);

    let mut grid = HashGrid::new(3, d);
    let mut pts = Vec::new();
    let mut flags = Vec::new();
    for (group, on_edge) in [(corners, true), (edges, true), (interior, false)] {
        for (x, y) in group {
            let p = [x, y, wave_height(x, y)];
            if grid.any_within(&pts, &p, d) {
                continue;
            }
            grid.insert(&p, flags.len());
            pts.extend(p);
            flags.push(on_edge);
        }
    }
    (pts, flags)
}

/// Greedy removal of points closer than `min_dist`; boundary points win ties.
fn thin(points: &[f64], boundary: &[bool], dim: usize, min_dist: f64) -> Vec<usize> {
    let n = boundary.len();
    let mut order: Vec<usize> = (0..n).filter(|&i| boundary[i]).collect();
    order.extend((0..n).filter(|&i| !boundary[i]));
    let mut grid = HashGrid::new(dim, min_dist);
    let mut kept = Vec::with_capacity(n);
    let mut kept_pts = Vec::with_capacity(points.len());
    for i in order {
        let p = &points[i * dim..(i + 1) * dim];
        if grid.any_within(&kept_pts, p, min_dist) {
            continue;
        }
        grid.insert(p, kept.len());
        kept_pts.extend_from_slice(p);
        kept.push(i);
    }
    kept.sort_unstable();
    kept
}

/// Uniform hash grid for small-radius exclusion queries.
struct HashGrid {
    dim: usize,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl HashGrid {
    fn new(dim: usize, cell: f64) -> Self {
        HashGrid {
            dim,
            cell,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &[f64]) -> [i64; 3] {
        let mut k = [0i64; 3];
        for (d, v) in p.iter().enumerate() {
            k[d] = (v / self.cell).floor() as i64;
        }
        k
    }

    fn insert(&mut self, p: &[f64], id: usize) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(id);
    }

    fn any_within(&self, stored: &[f64], p: &[f64], r: f64) -> bool {
        let k = self.key(p);
        let span = |d: usize| if d < self.dim { -1..=1 } else { 0..=0 };
        for a in span(0) {
            for b in span(1) {
                for c in span(2) {
                    let Some(ids) = self.cells.get(&[k[0] + a, k[1] + b, k[2] + c]) else {
                        continue;
                    };
                    for &id in ids {
                        let q = &stored[id * self.dim..(id + 1) * self.dim];
                        let d2: f64 = p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum();
                        if d2 < r * r {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / l, v[1] / l, v[2] / l]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
