//! Diagnostics for the separation and covering conventions of a cloud.

use std::collections::BTreeSet;

use super::{PointCloud, SpatialIndex};

/// No two points closer than `R_MIN * h`.
pub const R_MIN: f64 = 0.2;
/// No empty ball of radius larger than `R_MAX * h` on the surface.
pub const R_MAX: f64 = 0.45;

const HOLE_NEIGHBORS: usize = 8;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpacingReport {
    /// Pairs `(i, j, distance)` with `i < j` closer than `R_MIN * h_i`.
    pub close_pairs: Vec<(usize, usize, f64)>,
    /// Points `(i, radius)` next to an empty ball larger than `R_MAX * h_i`.
    pub holes: Vec<(usize, f64)>,
    pub min_distance: f64,
    pub max_empty_radius: f64,
}

impl SpacingReport {
    pub fn is_clean(&self) -> bool {
        self.close_pairs.is_empty() && self.holes.is_empty()
    }
}

/// Checks minimum separation exactly and hole size approximately, using
/// empty circumballs of acute local triangles (midpoints of pairs on curves).
pub fn validate_spacing(cloud: &PointCloud) -> SpacingReport {
    let dim = cloud.embedding_dim();
    let index = SpatialIndex::new(cloud.positions(), dim);
    let mut pairs = BTreeSet::new();
    let mut report = SpacingReport {
        min_distance: f64::INFINITY,
        ..Default::default()
    };

    for i in 0..cloud.len() {
        let p = cloud.point(i);
        let h = cloud.smoothing_length(i);
        for (j, d) in index.within(p, R_MIN * h) {
            if j != i && d < R_MIN * h {
                let key = (i.min(j), i.max(j));
                if pairs.insert(key) {
                    report.close_pairs.push((key.0, key.1, d));
                }
            }
        }
        let near = index.nearest(p, HOLE_NEIGHBORS + 1);
        if let Some(&(_, d)) = near.iter().find(|(j, _)| *j != i) {
            report.min_distance = report.min_distance.min(d);
        }
        let others: Vec<usize> = near.iter().map(|&(j, _)| j).filter(|&j| j != i).collect();
        let mut worst: f64 = 0.0;
        let mut probe = |c: &[f64]| {
            let empty = index.nearest(c, 1).first().map_or(0.0, |&(_, d)| d);
            worst = worst.max(empty);
        };
        if cloud.manifold_dim() == 1 {
            for &j in &others {
                let c: Vec<f64> = p
                    .iter()
                    .zip(cloud.point(j))
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                probe(&c);
            }
        } else {
            for (a, &j) in others.iter().enumerate() {
                for &l in &others[a + 1..] {
                    if let Some(c) = acute_circumcenter(p, cloud.point(j), cloud.point(l)) {
                        probe(&c);
                    }
                }
            }
        }
        report.max_empty_radius = report.max_empty_radius.max(worst);
        if worst > R_MAX * h {
            report.holes.push((i, worst));
        }
    }
    report
        .close_pairs
        .sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    report
}

/// Circumcenter of a non-obtuse triangle, `None` for obtuse or degenerate ones.
fn acute_circumcenter(a: &[f64], b: &[f64], c: &[f64]) -> Option<Vec<f64>> {
    let u: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let v: Vec<f64> = c.iter().zip(a).map(|(x, y)| x - y).collect();
    let w: Vec<f64> = c.iter().zip(b).map(|(x, y)| x - y).collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let (uu, vv, uv) = (dot(&u, &u), dot(&v, &v), dot(&u, &v));
    let tol = -1e-12 * (uu + vv);
    if uv < tol || -dot(&u, &w) < tol || dot(&v, &w) < tol {
        return None;
    }
    let det = uu * vv - uv * uv;
    if det <= 1e-14 * uu * vv {
        return None;
    }
    // c = a + alpha u + beta v with |c - a| = |c - b| = |c - c'|
    let alpha = 0.5 * vv * (uu - uv) / det;
    let beta = 0.5 * uu * (vv - uv) / det;
    Some(
        a.iter()
            .enumerate()
            .map(|(d, x)| x + alpha * u[d] + beta * v[d])
            .collect(),
    )
}
