//! Point clouds on manifolds: positions, smoothing lengths, boundary flags and
//! neighborhood search.

mod io;
mod sample;
mod spacing;

use std::num::NonZero;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rayon::prelude::*;

use crate::error::{GfdmError, Result};
use crate::surface::Surface;

pub use io::{read_cloud, write_cloud};
pub use sample::{sample_surface, SPACING_PER_SMOOTHING_LENGTH};
pub use spacing::{validate_spacing, SpacingReport, R_MAX, R_MIN};

/// Discretized k-manifold embedded in R^n.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    positions: Vec<f64>,
    smoothing_length: Vec<f64>,
    is_boundary: Vec<bool>,
    manifold_dim: usize,
    embedding_dim: usize,
    surface: Option<Surface>,
}

impl PointCloud {
    /// Builds a cloud from flat row-major positions (stride `embedding_dim`).
    pub fn new(
        positions: Vec<f64>,
        embedding_dim: usize,
        manifold_dim: usize,
        smoothing_length: Vec<f64>,
        is_boundary: Vec<bool>,
    ) -> Result<Self> {
        if embedding_dim == 0 || manifold_dim == 0 || manifold_dim >= embedding_dim {
            return Err(GfdmError::invalid(format!(
                "manifold dimension {manifold_dim} must satisfy 0 < k < n = {embedding_dim}"
            )));
        }
        if positions.is_empty() {
            return Err(GfdmError::EmptyCloud);
        }
        if positions.len() % embedding_dim != 0 {
            return Err(GfdmError::ShapeMismatch {
                expected: embedding_dim * (positions.len() / embedding_dim + 1),
                found: positions.len(),
            });
        }
        let n_points = positions.len() / embedding_dim;
        for (name, len) in [
            ("smoothing length", smoothing_length.len()),
            ("boundary", is_boundary.len()),
        ] {
            if len != n_points {
                return Err(GfdmError::invalid(format!(
                    "{name} array has {len} entries for {n_points} points"
                )));
            }
        }
        if let Some(i) = positions.iter().position(|v| !v.is_finite()) {
            return Err(GfdmError::invalid(format!(
                "point {} has a non-finite coordinate",
                i / embedding_dim
            )));
        }
        if let Some(i) = smoothing_length
            .iter()
            .position(|h| !(*h > 0.0 && h.is_finite()))
        {
            return Err(GfdmError::invalid(format!(
                "point {i} has a nonpositive smoothing length"
            )));
        }
        Ok(PointCloud {
            positions,
            smoothing_length,
            is_boundary,
            manifold_dim,
            embedding_dim,
            surface: None,
        })
    }

    /// Attaches the analytic surface the cloud was sampled from.
    pub fn with_surface(mut self, surface: Surface) -> Self {
        self.surface = Some(surface);
        self
    }

    pub fn len(&self) -> usize {
        self.smoothing_length.len()
    }

    pub fn is_empty(&self) -> bool {
        self.smoothing_length.is_empty()
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn manifold_dim(&self) -> usize {
        self.manifold_dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.embedding_dim;
        &self.positions[i * n..(i + 1) * n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.embedding_dim)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn smoothing_length(&self, i: usize) -> f64 {
        self.smoothing_length[i]
    }

    pub fn smoothing_lengths(&self) -> &[f64] {
        &self.smoothing_length
    }

    /// Replaces the per-point smoothing lengths, e.g. with kNN support radii.
    pub fn set_smoothing_lengths(&mut self, h: Vec<f64>) -> Result<()> {
        if h.len() != self.len() {
            return Err(GfdmError::ShapeMismatch {
                expected: self.len(),
                found: h.len(),
            });
        }
        if let Some(i) = h.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(GfdmError::invalid(format!(
                "point {i} has a nonpositive smoothing length"
            )));
        }
        self.smoothing_length = h;
        Ok(())
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.is_boundary
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_boundary[i]).collect()
    }

    pub fn surface(&self) -> Option<&Surface> {
        self.surface.as_ref()
    }

    /// Mean smoothing length over all points.
    pub fn mean_smoothing_length(&self) -> f64 {
        self.smoothing_length.iter().sum::<f64>() / self.len() as f64
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        crate::surface::norm(
            &self
                .point(i)
                .iter()
                .zip(self.point(j))
                .map(|(a, b)| b - a)
                .collect::<Vec<_>>(),
        )
    }
}

/// Support of one stencil: the center and its neighbors sorted by distance.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighborhood {
    pub center: usize,
    /// Member indices, center first, then ascending by (distance, index).
    pub members: Vec<usize>,
    /// Support radius used for this neighborhood.
    pub radius: f64,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NeighborStrategy {
    /// The `k` nearest points, center included; the radius is the farthest member distance.
    Knn(usize),
    /// All points within the smoothing length of the center.
    Radius,
}

impl Default for NeighborStrategy {
    fn default() -> Self {
        NeighborStrategy::Knn(15)
    }
}

/// Read-only spatial index over a cloud. Uses a kd-tree up to three dimensions
/// and a brute-force scan beyond.
pub struct SpatialIndex {
    tree: Option<ImmutableKdTree<f64, 3>>,
    positions: Vec<f64>,
    dim: usize,
}

impl SpatialIndex {
    pub fn new(positions: &[f64], dim: usize) -> Self {
        let tree = (dim <= 3 && !positions.is_empty()).then(|| {
            let padded: Vec<[f64; 3]> = positions.chunks_exact(dim).map(pad3).collect();
            ImmutableKdTree::new_from_slice(&padded)
                .expect("kd-tree construction from finite points")
        });
        SpatialIndex {
            tree,
            positions: positions.to_vec(),
            dim,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn dist2(&self, q: &[f64], j: usize) -> f64 {
        self.positions[j * self.dim..(j + 1) * self.dim]
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// The `k` nearest points to `q` as (index, distance), ascending by (distance, index).
    pub fn nearest(&self, q: &[f64], k: usize) -> Vec<(usize, f64)> {
        let k = k.min(self.len());
        if k == 0 {
            return Vec::new();
        }
        // over-query slightly so that ties at the cut are resolved by index
        let want = (k + 4).min(self.len());
        let mut found: Vec<(usize, f64)> = match &self.tree {
            Some(tree) => tree
                .query(&pad3(q))
                .nearest_n::<SquaredEuclidean<f64>>(NonZero::new(want).unwrap())
                .execute()
                .into_iter()
                .map(|r| {
                    let j = r.item as usize;
                    (j, self.dist2(q, j))
                })
                .collect(),
            None => (0..self.len()).map(|j| (j, self.dist2(q, j))).collect(),
        };
        found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        found.truncate(k);
        found.into_iter().map(|(j, d2)| (j, d2.sqrt())).collect()
    }

    /// All points within `radius` of `q` (inclusive), ascending by (distance, index).
    pub fn within(&self, q: &[f64], radius: f64) -> Vec<(usize, f64)> {
        let r2 = radius * radius;
        let mut found: Vec<(usize, f64)> = match &self.tree {
            Some(tree) => tree
                .query(&pad3(q))
                .within::<SquaredEuclidean<f64>>(r2 * (1.0 + 1e-12) + f64::MIN_POSITIVE)
                .execute()
                .into_iter()
                .map(|r| {
                    let j = r.item as usize;
                    (j, self.dist2(q, j))
                })
                .filter(|&(_, d2)| d2 <= r2)
                .collect(),
            None => (0..self.len())
                .map(|j| (j, self.dist2(q, j)))
                .filter(|&(_, d2)| d2 <= r2)
                .collect(),
        };
        found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        found.into_iter().map(|(j, d2)| (j, d2.sqrt())).collect()
    }
}

fn pad3(p: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    out[..p.len()].copy_from_slice(p);
    out
}

/// One neighborhood per point under the given strategy.
pub fn build_neighborhoods(
    cloud: &PointCloud,
    strategy: NeighborStrategy,
) -> Result<Vec<Neighborhood>> {
    if cloud.is_empty() {
        return Err(GfdmError::EmptyCloud);
    }
    if let NeighborStrategy::Knn(k) = strategy {
        if k == 0 || k > cloud.len() {
            return Err(GfdmError::invalid(format!(
                "knn({k}) requested on a cloud of {} points",
                cloud.len()
            )));
        }
    }
    let index = SpatialIndex::new(cloud.positions(), cloud.embedding_dim());
    let out = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let q = cloud.point(i);
            let found = match strategy {
                NeighborStrategy::Knn(k) => index.nearest(q, k),
                NeighborStrategy::Radius => index.within(q, cloud.smoothing_length(i)),
            };
            let mut members = Vec::with_capacity(found.len());
            members.push(i);
            let mut radius: f64 = 0.0;
            let mut has_center = false;
            for &(j, d) in &found {
                if j == i {
                    has_center = true;
                    continue;
                }
                members.push(j);
                radius = radius.max(d);
            }
            if !has_center {
                // duplicates of the center may crowd it out of a kNN list
                if let NeighborStrategy::Knn(_) = strategy {
                    members.pop();
                    radius = members[1..]
                        .iter()
                        .map(|&j| cloud.distance(i, j))
                        .fold(0.0, f64::max);
                }
            }
            if let NeighborStrategy::Radius = strategy {
                radius = cloud.smoothing_length(i);
            }
            Neighborhood {
                center: i,
                members,
                radius,
            }
        })
        .collect();
    Ok(out)
}

/// Sets every smoothing length to the support radius of its kNN neighborhood.
pub fn adopt_support_radii(cloud: &mut PointCloud, neighborhoods: &[Neighborhood]) -> Result<()> {
    let h: Vec<f64> = neighborhoods
        .iter()
        .map(|nb| {
            if nb.radius > 0.0 {
                nb.radius
            } else {
                cloud.smoothing_length(nb.center)
            }
        })
        .collect();
    cloud.set_smoothing_lengths(h)
}
