//! Per-point orthonormal frames: tangents, normals, the rotation into the
//! tangent plane and, on the boundary, the in-surface outward normal.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{GfdmError, Result};
use crate::pointcloud::{Neighborhood, PointCloud};

/// Orthonormal frame at one point. Rows of `rotation` are `t_1..t_k, n_1..n_{n-k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    rotation: DMatrix<f64>,
    manifold_dim: usize,
    boundary_normal: Option<DVector<f64>>,
}

impl Frame {
    /// Completes the given orthonormal normal vectors with tangents obtained by
    /// Gram–Schmidt on the coordinate axes, most tangential axis first.
    pub fn from_normals(normals: &[DVector<f64>], embedding_dim: usize) -> Result<Self> {
        let n = embedding_dim;
        let k = n
            .checked_sub(normals.len())
            .filter(|&k| k > 0)
            .ok_or_else(|| {
                GfdmError::invalid(format!(
                    "{} normals leave no tangent space in R^{n}",
                    normals.len()
                ))
            })?;
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
        for nr in normals {
            if nr.len() != n {
                return Err(GfdmError::ShapeMismatch {
                    expected: n,
                    found: nr.len(),
                });
            }
            basis.push(orthonormalize(nr.clone(), &basis).ok_or_else(|| {
                GfdmError::invalid("normal vectors are not linearly independent")
            })?);
        }
        let projected: Vec<(usize, DVector<f64>)> = (0..n)
            .map(|a| {
                let e = DVector::from_fn(n, |r, _| if r == a { 1.0 } else { 0.0 });
                (a, remove_components(e, &basis))
            })
            .collect();
        let mut order: Vec<&(usize, DVector<f64>)> = projected.iter().collect();
        order.sort_by(|x, y| y.1.norm().total_cmp(&x.1.norm()).then(x.0.cmp(&y.0)));
        let normal_count = basis.len();
        let mut tangents: Vec<DVector<f64>> = Vec::with_capacity(k);
        for (_, v) in order {
            if tangents.len() == k {
                break;
            }
            let mut all = basis.clone();
            all.extend(tangents.iter().cloned());
            if let Some(t) = orthonormalize(v.clone(), &all) {
                tangents.push(t);
            }
        }
        debug_assert_eq!(tangents.len(), k);
        let mut rotation = DMatrix::zeros(n, n);
        for (r, t) in tangents
            .iter()
            .chain(basis[..normal_count].iter())
            .enumerate()
        {
            rotation.set_row(r, &t.transpose());
        }
        Ok(Frame {
            rotation,
            manifold_dim: k,
            boundary_normal: None,
        })
    }

    /// Frame from an explicit rotation whose first `manifold_dim` rows are
    /// tangents; rows must be orthonormal to `1e-12`.
    pub fn from_rotation(rotation: DMatrix<f64>, manifold_dim: usize) -> Result<Self> {
        let n = rotation.nrows();
        if rotation.ncols() != n {
            return Err(GfdmError::ShapeMismatch {
                expected: n,
                found: rotation.ncols(),
            });
        }
        if manifold_dim == 0 || manifold_dim >= n {
            return Err(GfdmError::invalid(format!(
                "manifold dimension {manifold_dim} does not fit R^{n}"
            )));
        }
        let defect = (&rotation * rotation.transpose() - DMatrix::<f64>::identity(n, n)).amax();
        if defect > 1e-12 {
            return Err(GfdmError::invalid(format!(
                "rotation rows are not orthonormal (defect {defect:.2e})"
            )));
        }
        Ok(Frame {
            rotation,
            manifold_dim,
            boundary_normal: None,
        })
    }

    pub fn embedding_dim(&self) -> usize {
        self.rotation.nrows()
    }

    pub fn manifold_dim(&self) -> usize {
        self.manifold_dim
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn tangent(&self, a: usize) -> DVector<f64> {
        self.rotation.row(a).transpose()
    }

    pub fn normal(&self, r: usize) -> DVector<f64> {
        self.rotation.row(self.manifold_dim + r).transpose()
    }

    pub fn tangents(&self) -> Vec<DVector<f64>> {
        (0..self.manifold_dim).map(|a| self.tangent(a)).collect()
    }

    pub fn normals(&self) -> Vec<DVector<f64>> {
        (0..self.embedding_dim() - self.manifold_dim)
            .map(|r| self.normal(r))
            .collect()
    }

    /// Tangential projector `I - sum_r n_r n_r^T`.
    pub fn projector(&self) -> DMatrix<f64> {
        let n = self.embedding_dim();
        let mut p = DMatrix::identity(n, n);
        for nr in self.normals() {
            p -= &nr * nr.transpose();
        }
        p
    }

    /// `R * v`: tangential components first, then normal components.
    pub fn rotate(&self, v: &[f64]) -> DVector<f64> {
        &self.rotation * DVector::from_column_slice(v)
    }

    pub fn boundary_normal(&self) -> Option<&DVector<f64>> {
        self.boundary_normal.as_ref()
    }

    pub fn set_boundary_normal(&mut self, nu: Option<DVector<f64>>) {
        self.boundary_normal = nu;
    }

    fn flip_normals(&mut self) {
        for r in self.manifold_dim..self.embedding_dim() {
            let row = -self.rotation.row(r);
            self.rotation.set_row(r, &row);
        }
    }
}

fn remove_components(mut v: DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    // two passes keep the result orthogonal to rounding level
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&v);
            v -= b * c;
        }
    }
    v
}

fn orthonormalize(v: DVector<f64>, basis: &[DVector<f64>]) -> Option<DVector<f64>> {
    let scale = v.norm();
    let w = remove_components(v, basis);
    let l = w.norm();
    (scale > 0.0 && l > 1e-8 * scale).then(|| w / l)
}

/// Where surface normals come from.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum NormalSource {
    /// Weighted principal component analysis of each neighborhood.
    #[default]
    WeightedPca,
    /// Exact normals of the analytic surface attached to the cloud.
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameOptions {
    pub source: NormalSource,
    /// Gaussian weight sharpness used by the PCA estimator.
    pub weight_factor: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions {
            source: NormalSource::WeightedPca,
            weight_factor: 2.0,
        }
    }
}

/// Estimates one frame per point. Normals are oriented along the analytic
/// normal when the cloud carries a surface, otherwise by propagating signs
/// through the neighborhood graph starting at point 0.
pub fn estimate_frames(
    cloud: &PointCloud,
    neighborhoods: &[Neighborhood],
    opts: &FrameOptions,
) -> Result<Vec<Frame>> {
    if neighborhoods.len() != cloud.len() {
        return Err(GfdmError::ShapeMismatch {
            expected: cloud.len(),
            found: neighborhoods.len(),
        });
    }
    let n = cloud.embedding_dim();
    let k = cloud.manifold_dim();
    let surface = cloud.surface();
    if opts.source == NormalSource::Analytic && (surface.is_none() || n - k != 1) {
        return Err(GfdmError::invalid(
            "analytic normals require a cloud sampled from a surface",
        ));
    }
    let mut frames: Vec<Frame> = neighborhoods
        .par_iter()
        .map(|nb| {
            let normals = match opts.source {
                NormalSource::Analytic => {
                    vec![DVector::from_vec(
                        surface.unwrap().normal(cloud.point(nb.center)),
                    )]
                }
                NormalSource::WeightedPca => pca_normals(cloud, nb, opts.weight_factor)?,
            };
            Frame::from_normals(&normals, n)
        })
        .collect::<Result<_>>()?;

    if n - k == 1 {
        match surface {
            Some(s) => {
                for (i, f) in frames.iter_mut().enumerate() {
                    let exact = DVector::from_vec(s.normal(cloud.point(i)));
                    if f.normal(0).dot(&exact) < 0.0 {
                        f.flip_normals();
                    }
                }
            }
            None => propagate_orientation(&mut frames, neighborhoods),
        }
    }
    Ok(frames)
}

fn pca_normals(cloud: &PointCloud, nb: &Neighborhood, wf: f64) -> Result<Vec<DVector<f64>>> {
    let n = cloud.embedding_dim();
    let k = cloud.manifold_dim();
    let i = nb.center;
    if nb.members.len() < k + 1 {
        return Err(GfdmError::DegenerateNeighborhood {
            point: i,
            reason: format!(
                "{} members cannot span a {k}-dimensional tangent space",
                nb.members.len()
            ),
        });
    }
    let xi = cloud.point(i);
    let hi = cloud.smoothing_length(i);
    let mut weights = Vec::with_capacity(nb.members.len());
    let mut centroid = DVector::zeros(n);
    for &j in &nb.members {
        let hj = cloud.smoothing_length(j);
        let d2: f64 = cloud
            .point(j)
            .iter()
            .zip(xi)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let w = (-wf * d2 / (hi * hi + hj * hj)).exp();
        weights.push(w);
        for (c, x) in centroid.iter_mut().zip(cloud.point(j)) {
            *c += w * x;
        }
    }
    let wsum: f64 = weights.iter().sum();
    centroid /= wsum;
    let mut cov = DMatrix::zeros(n, n);
    for (&j, &w) in nb.members.iter().zip(&weights) {
        let d = DVector::from_column_slice(cloud.point(j)) - &centroid;
        cov += (&d * d.transpose()) * w;
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let largest = eig.eigenvalues[order[0]];
    let kth = eig.eigenvalues[order[k - 1]];
    if !(largest > 0.0) || kth <= 1e-12 * largest {
        return Err(GfdmError::DegenerateNeighborhood {
            point: i,
            reason: "neighbor covariance has rank below the manifold dimension".into(),
        });
    }
    Ok(order[k..]
        .iter()
        .map(|&c| eig.eigenvectors.column(c).into_owned())
        .collect())
}

fn propagate_orientation(frames: &mut [Frame], neighborhoods: &[Neighborhood]) {
    let mut seen = vec![false; frames.len()];
    for root in 0..frames.len() {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            let ni = frames[i].normal(0);
            for &j in &neighborhoods[i].members {
                if !seen[j] {
                    seen[j] = true;
                    if frames[j].normal(0).dot(&ni) < 0.0 {
                        frames[j].flip_normals();
                    }
                    queue.push_back(j);
                }
            }
        }
    }
}

/// Attaches the unit outward boundary normal to every boundary point.
pub fn boundary_normals(
    cloud: &PointCloud,
    neighborhoods: &[Neighborhood],
    frames: &mut [Frame],
) -> Result<()> {
    let updates: Vec<(usize, DVector<f64>)> = cloud
        .boundary_indices()
        .into_par_iter()
        .map(|i| boundary_normal_at(cloud, &neighborhoods[i], &frames[i]).map(|nu| (i, nu)))
        .collect::<Result<_>>()?;
    for (i, nu) in updates {
        frames[i].set_boundary_normal(Some(nu));
    }
    Ok(())
}

fn boundary_normal_at(
    cloud: &PointCloud,
    nb: &Neighborhood,
    frame: &Frame,
) -> Result<DVector<f64>> {
    let i = nb.center;
    let degenerate = |reason: &str| GfdmError::DegenerateNeighborhood {
        point: i,
        reason: reason.into(),
    };
    let n = cloud.embedding_dim();
    let xi = DVector::from_column_slice(cloud.point(i));
    let p = frame.projector();
    let others: Vec<usize> = nb.members.iter().copied().filter(|&j| j != i).collect();
    if others.is_empty() {
        return Err(degenerate("boundary point has no neighbors"));
    }
    let mut centroid = DVector::zeros(n);
    for &j in &others {
        centroid += DVector::from_column_slice(cloud.point(j));
    }
    centroid /= others.len() as f64;
    let v = &p * (centroid - &xi);

    if frame.manifold_dim() == 1 {
        let t = frame.tangent(0);
        let s = v.dot(&t);
        if s.abs() <= 1e-14 * nb.radius.max(f64::MIN_POSITIVE) {
            return Err(degenerate(
                "neighbors are balanced on both sides of the end point",
            ));
        }
        return Ok(if s > 0.0 { -t } else { t });
    }

    let edge: Vec<DVector<f64>> = others
        .iter()
        .filter(|&&j| cloud.is_boundary(j))
        .map(|&j| &p * (DVector::from_column_slice(cloud.point(j)) - &xi))
        .collect();
    let mut v_perp = v.clone();
    if edge.len() >= 2 {
        let mut m = DMatrix::zeros(n, n);
        for o in &edge {
            m += o * o.transpose();
        }
        let eig = SymmetricEigen::new(m);
        let top = eig.eigenvalues.imax();
        let tb = eig.eigenvectors.column(top).into_owned();
        v_perp -= &tb * tb.dot(&v);
    }
    let l = v_perp.norm();
    if l <= 1e-12 * v.norm().max(nb.radius * 1e-3) || l == 0.0 {
        return Err(degenerate("interior neighbors lie on the boundary line"));
    }
    Ok(-v_perp / l)
}
