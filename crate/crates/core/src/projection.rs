//! Tangent-plane coordinates of neighborhoods.
//!
//! Only offsets are stored; function values at projected sites are the
//! values at the original points.

use rayon::prelude::*;

use crate::error::{GfdmError, Result};
use crate::frames::Frame;
use crate::pointcloud::{Neighborhood, PointCloud};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Rotate offsets into the frame of the center and drop the normal part.
    #[default]
    CentralNormal,
    /// Slide each neighbor along its own normal onto the center's tangent plane.
    NeighborNormal,
}

impl std::fmt::Display for ProjectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProjectionMode::CentralNormal => "central",
            ProjectionMode::NeighborNormal => "neighbor",
        })
    }
}

impl std::str::FromStr for ProjectionMode {
    type Err = GfdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central" => Ok(ProjectionMode::CentralNormal),
            "neighbor" => Ok(ProjectionMode::NeighborNormal),
            _ => Err(GfdmError::invalid(format!("unknown projection mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedNeighborhood {
    pub center: usize,
    pub members: Vec<usize>,
    pub manifold_dim: usize,
    /// Tangential offsets, `manifold_dim` per member.
    pub tangential: Vec<f64>,
    /// Normal components of the rotated raw offsets, `n - k` per member.
    pub normal: Vec<f64>,
    /// Squared embedding-space distances to the center.
    pub dist2: Vec<f64>,
    /// Smoothing lengths of the members.
    pub smoothing: Vec<f64>,
    pub support_radius: f64,
    pub mode: ProjectionMode,
}

impl ProjectedNeighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn offset(&self, m: usize) -> &[f64] {
        let k = self.manifold_dim;
        &self.tangential[m * k..(m + 1) * k]
    }

    pub fn normal_offset(&self, m: usize) -> &[f64] {
        let c = self.normal.len() / self.members.len().max(1);
        &self.normal[m * c..(m + 1) * c]
    }

    /// Gaussian weights `exp(-wf |x_j - x_i|^2 / (h_i^2 + h_j^2))`.
    pub fn weights(&self, wf: f64) -> Vec<f64> {
        let hi = self.smoothing[0];
        self.dist2
            .iter()
            .zip(&self.smoothing)
            .map(|(d2, hj)| (-wf * d2 / (hi * hi + hj * hj)).exp())
            .collect()
    }
}

pub fn project(
    cloud: &PointCloud,
    frames: &[Frame],
    nb: &Neighborhood,
    mode: ProjectionMode,
) -> Result<ProjectedNeighborhood> {
    let n = cloud.embedding_dim();
    let k = cloud.manifold_dim();
    let i = nb.center;
    if nb.members.first() != Some(&i) {
        return Err(GfdmError::invalid(format!(
            "neighborhood of {i} must list its center first"
        )));
    }
    if mode == ProjectionMode::NeighborNormal && n - k != 1 {
        return Err(GfdmError::invalid(
            "neighbor-normal projection needs codimension one",
        ));
    }
    let frame = &frames[i];
    let xi = cloud.point(i);
    let ni = frame.normal(0);
    let m = nb.members.len();
    let mut out = ProjectedNeighborhood {
        center: i,
        members: nb.members.clone(),
        manifold_dim: k,
        tangential: Vec::with_capacity(m * k),
        normal: Vec::with_capacity(m * (n - k)),
        dist2: Vec::with_capacity(m),
        smoothing: Vec::with_capacity(m),
        support_radius: nb.radius,
        mode,
    };
    let mut delta = vec![0.0; n];
    for &j in &nb.members {
        for (d, (a, b)) in delta.iter_mut().zip(cloud.point(j).iter().zip(xi)) {
            *d = a - b;
        }
        let rotated = frame.rotate(&delta);
        out.normal.extend(rotated.iter().skip(k));
        out.dist2.push(delta.iter().map(|v| v * v).sum());
        out.smoothing.push(cloud.smoothing_length(j));
        match mode {
            ProjectionMode::CentralNormal => out.tangential.extend(rotated.iter().take(k)),
            ProjectionMode::NeighborNormal => {
                if j == i {
                    out.tangential.extend(std::iter::repeat_n(0.0, k));
                    continue;
                }
                let nj = frames[j].normal(0);
                let cos = ni.dot(&nj);
                if cos.abs() < 1e-8 {
                    return Err(GfdmError::NonTransversal {
                        point: i,
                        neighbor: j,
                    });
                }
                let height: f64 = ni.iter().zip(&delta).map(|(a, b)| a * b).sum();
                let tau = -height / cos;
                let moved: Vec<f64> = delta
                    .iter()
                    .zip(nj.iter())
                    .map(|(d, v)| d + tau * v)
                    .collect();
                out.tangential.extend(frame.rotate(&moved).iter().take(k));
            }
        }
    }
    Ok(out)
}

pub fn project_all(
    cloud: &PointCloud,
    frames: &[Frame],
    neighborhoods: &[Neighborhood],
    mode: ProjectionMode,
) -> Result<Vec<ProjectedNeighborhood>> {
    neighborhoods
        .par_iter()
        .map(|nb| project(cloud, frames, nb, mode))
        .collect()
}
