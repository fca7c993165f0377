//! Rotation and projection for `k`-manifolds in `R^n`.
//!
//! The frame, projection and stencil code paths take `k` and `n` from the
//! cloud; this module adds the gauge tools used to check them on curves in
//! the plane as well as on surfaces.

use nalgebra::{DMatrix, DVector};

use crate::error::{GfdmError, Result};
pub use crate::frames::Frame as GeneralRotation;

/// First `k` components of `R dx`.
pub fn tangential_offsets_general(frame: &GeneralRotation, dx: &[f64]) -> DVector<f64> {
    let k = frame.manifold_dim();
    frame.rotate(dx).rows(0, k).into_owned()
}

/// Largest entry of `R R^T - I`.
pub fn orthogonality_defect(frame: &GeneralRotation) -> f64 {
    let r = frame.rotation();
    let n = r.nrows();
    (r * r.transpose() - DMatrix::<f64>::identity(n, n)).amax()
}

/// Replaces the tangents `t_a` by `sum_b q_ab t_b` for an orthogonal `k x k`
/// matrix `q`; the tangent space and the normals are unchanged.
pub fn regauge(frame: &GeneralRotation, q: &DMatrix<f64>) -> Result<GeneralRotation> {
    let k = frame.manifold_dim();
    if q.shape() != (k, k) {
        return Err(GfdmError::ShapeMismatch {
            expected: k,
            found: q.nrows(),
        });
    }
    let mut r = frame.rotation().clone();
    let tangents = q * r.rows(0, k);
    r.rows_mut(0, k).copy_from(&tangents);
    let mut out = GeneralRotation::from_rotation(r, k)?;
    out.set_boundary_normal(frame.boundary_normal().cloned());
    Ok(out)
}

/// Planar rotation by `angle` completed to a `k x k` orthogonal matrix that
/// acts on the first two axes (identity when `k = 1`).
pub fn plane_rotation(k: usize, angle: f64) -> DMatrix<f64> {
    let mut q = DMatrix::identity(k, k);
    if k >= 2 {
        let (s, c) = angle.sin_cos();
        q[(0, 0)] = c;
        q[(0, 1)] = -s;
        q[(1, 0)] = s;
        q[(1, 1)] = c;
    }
    q
}
