//! Weighted least-squares solves for stencil coefficients.
//!
//! For constraint columns `F` (rows are neighbors) and weights `W`, the row
//! minimizing `sum (c_j / W_j)^2` subject to `F^T c = b` is
//! `c = W^2 F (F^T W^2 F)^{-1} b`. Offsets are scaled by the support radius
//! before the solve, and targets are rescaled accordingly.

use nalgebra::{DMatrix, DVector};

use crate::error::{GfdmError, Result};

/// Largest accepted condition estimate of the equilibrated Gram matrix
/// before switching to the SVD path.
pub const CHOLESKY_CONDITION_LIMIT: f64 = 1e12;
/// Singular values below this fraction of the largest are treated as zero.
pub const SVD_RELATIVE_CUTOFF: f64 = 1e-10;
/// Largest accepted relative residual of any constraint after a solve.
pub const RESIDUAL_LIMIT: f64 = 1e-6;

/// Factorized local problem for one point; solves for any number of targets.
#[derive(Clone, Debug)]
pub struct LocalSystem {
    point: usize,
    /// Constraint values in scaled coordinates, one column per constraint.
    columns: DMatrix<f64>,
    /// Maps physical targets to coefficients: `c = solver * b`.
    solver: DMatrix<f64>,
    weights: Vec<f64>,
    /// Orthonormal basis of the range of the weighted constraint matrix.
    range: DMatrix<f64>,
    /// Physical-to-scaled factor of each target.
    target_scale: Vec<f64>,
    used_svd: bool,
}

impl LocalSystem {
    /// `columns[(j, a)]` is constraint `a` evaluated at member `j` in scaled
    /// coordinates; `target_scale[a]` converts a physical target into the
    /// scaled system (`h^{-|alpha|}` for a monomial of degree `|alpha|`).
    pub fn new(
        point: usize,
        weights: &[f64],
        columns: DMatrix<f64>,
        target_scale: Vec<f64>,
    ) -> Result<Self> {
        let (m, p) = columns.shape();
        if weights.len() != m || target_scale.len() != p {
            return Err(GfdmError::ShapeMismatch {
                expected: m,
                found: weights.len(),
            });
        }
        let mut a = columns.clone();
        for (j, &w) in weights.iter().enumerate() {
            a.row_mut(j).scale_mut(w);
        }
        let norms: Vec<f64> = (0..p).map(|c| a.column(c).norm()).collect();
        let largest = norms.iter().cloned().fold(0.0, f64::max);
        if !(largest > 0.0) {
            return Err(GfdmError::SingularSystem {
                point,
                reason: "all constraints vanish".into(),
            });
        }
        let active: Vec<usize> = (0..p).filter(|&c| norms[c] > 1e-14 * largest).collect();
        let mut eq = DMatrix::zeros(m, active.len());
        for (k, &c) in active.iter().enumerate() {
            eq.set_column(k, &(a.column(c) / norms[c]));
        }

        // op maps equilibrated targets to coefficients: c = W * eq * G^{-1} * t
        let svd = Svd::new(&eq);
        let rank = svd.rank(SVD_RELATIVE_CUTOFF * svd.s[0]);
        let range = svd.u.columns(0, rank).into_owned();
        let gram = eq.transpose() * &eq;
        let mut used_svd = false;
        let core = match gram.clone().cholesky() {
            Some(chol)
                if condition_estimate(chol.l_dirty(), active.len()) <= CHOLESKY_CONDITION_LIMIT =>
            {
                let ginv = chol.inverse();
                &eq * ginv
            }
            _ => {
                used_svd = true;
                let mut core = DMatrix::zeros(m, active.len());
                for r in 0..rank {
                    core += (svd.u.column(r) / svd.s[r]) * svd.v.column(r).transpose();
                }
                core
            }
        };
        let mut solver = DMatrix::zeros(m, p);
        for (k, &c) in active.iter().enumerate() {
            let mut col = core.column(k) / norms[c] * target_scale[c];
            for (j, &w) in weights.iter().enumerate() {
                col[j] *= w;
            }
            solver.set_column(c, &col);
        }
        Ok(LocalSystem {
            point,
            columns,
            solver,
            weights: weights.to_vec(),
            range,
            target_scale,
            used_svd,
        })
    }

    pub fn point(&self) -> usize {
        self.point
    }

    pub fn members(&self) -> usize {
        self.columns.nrows()
    }

    pub fn constraints(&self) -> usize {
        self.columns.ncols()
    }

    pub fn used_svd(&self) -> bool {
        self.used_svd
    }

    /// Coefficients for physical targets `b`, verified against every constraint.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let c = self.solve_unchecked(b)?;
        let worst = self.max_residual(&c, b);
        if !(worst <= RESIDUAL_LIMIT) {
            return Err(GfdmError::SingularSystem {
                point: self.point,
                reason: format!(
                    "consistency conditions cannot be met (relative residual {worst:.2e})"
                ),
            });
        }
        Ok(c)
    }

    pub fn solve_unchecked(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.constraints() {
            return Err(GfdmError::ShapeMismatch {
                expected: self.constraints(),
                found: b.len(),
            });
        }
        Ok((&self.solver * DVector::from_column_slice(b))
            .iter()
            .copied()
            .collect())
    }

    /// Solves with additional constraints of lower priority: the primary
    /// constraints hold exactly, `extra^T c = extra_targets` is met in the
    /// least-squares sense within the remaining freedom, and the weighted norm
    /// is minimal among all such rows. `extra[(j, q)]` holds physical values.
    /// Returns the coefficients and the relative residual of each extra constraint.
    pub fn solve_prioritized(
        &self,
        b: &[f64],
        extra: &DMatrix<f64>,
        extra_targets: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.members();
        if extra.nrows() != m || extra.ncols() != extra_targets.len() {
            return Err(GfdmError::ShapeMismatch {
                expected: m,
                found: extra.nrows(),
            });
        }
        let c0 = self.solve(b)?;
        let w = DVector::from_column_slice(&self.weights);
        let y0 = DVector::from_iterator(m, c0.iter().zip(&self.weights).map(|(c, w)| c / w));
        let q = extra.ncols();
        // weighted, column-equilibrated extra constraints projected onto the
        // null space of the primary ones
        let mut k = DMatrix::zeros(q, m);
        let mut rhs = DVector::zeros(q);
        for a in 0..q {
            let col = extra.column(a).component_mul(&w);
            let nrm = col.norm();
            if nrm == 0.0 {
                continue;
            }
            let col = col / nrm;
            let proj = &col - &self.range * (self.range.transpose() * &col);
            k.set_row(a, &proj.transpose());
            rhs[a] =
                (extra_targets[a] - extra.column(a).dot(&DVector::from_column_slice(&c0))) / nrm;
        }
        let mut zeta = DVector::zeros(m);
        if k.amax() > 0.0 {
            // K^T = U S V^T, so K^+ = U S^{-1} V^T; rows of K had unit norm
            // before projection, so the cutoff is absolute
            let svd = Svd::new(&k.transpose());
            for r in 0..svd.rank(SVD_RELATIVE_CUTOFF) {
                zeta += svd.u.column(r) * (svd.v.column(r).dot(&rhs) / svd.s[r]);
            }
        }
        let c: Vec<f64> = (y0 + &zeta).component_mul(&w).iter().copied().collect();
        let worst = self.max_residual(&c, b);
        if !(worst <= RESIDUAL_LIMIT) {
            return Err(GfdmError::SingularSystem {
                point: self.point,
                reason: format!(
                    "extra constraints broke consistency (relative residual {worst:.2e})"
                ),
            });
        }
        let residuals = (0..q)
            .map(|a| relative_residual(&c, extra.column(a).as_slice(), extra_targets[a]))
            .collect();
        Ok((c, residuals))
    }

    /// Largest relative residual of `c` over all constraints.
    pub fn max_residual(&self, c: &[f64], b: &[f64]) -> f64 {
        (0..self.constraints())
            .map(|a| {
                relative_residual(
                    c,
                    self.columns.column(a).as_slice(),
                    b[a] * self.target_scale[a],
                )
            })
            .fold(0.0, f64::max)
    }
}

/// `|sum c_j f_j - b| / max(|b|, sum |c_j| max |f_j|)`, zero when both vanish.
/// The denominator bounds the rounding error of the sum, so an exactly met
/// constraint reports a residual near machine precision.
pub fn relative_residual(c: &[f64], f: &[f64], b: f64) -> f64 {
    let mut sum = 0.0;
    let mut c1 = 0.0;
    let mut fmax: f64 = 0.0;
    for (cj, fj) in c.iter().zip(f) {
        sum += cj * fj;
        c1 += cj.abs();
        fmax = fmax.max(fj.abs());
    }
    let scale = b.abs().max(c1 * fmax);
    if scale < 1e-300 {
        0.0
    } else {
        (sum - b).abs() / scale
    }
}

/// Thin singular value decomposition `A = U diag(s) V^T` by one-sided Jacobi
/// rotations, with `s` sorted in decreasing order. Accurate for the small
/// dense, possibly rank-deficient, matrices that arise in local fits.
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (m, p) = a.shape();
        let mut u = a.clone();
        let mut v = DMatrix::identity(p, p);
        for _ in 0..80 {
            let mut rotated = false;
            for i in 0..p {
                for j in i + 1..p {
                    let alpha = u.column(i).norm_squared();
                    let beta = u.column(j).norm_squared();
                    let gamma = u.column(i).dot(&u.column(j));
                    if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for (mat, rows) in [(&mut u, m), (&mut v, p)] {
                        for r in 0..rows {
                            let (x, y) = (mat[(r, i)], mat[(r, j)]);
                            mat[(r, i)] = c * x - s * y;
                            mat[(r, j)] = s * x + c * y;
                        }
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut order: Vec<(usize, f64)> = (0..p).map(|k| (k, u.column(k).norm())).collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut su = DMatrix::zeros(m, p);
        let mut sv = DMatrix::zeros(p, p);
        let mut s = Vec::with_capacity(p);
        for (dst, &(src, sigma)) in order.iter().enumerate() {
            if sigma > 0.0 {
                su.set_column(dst, &(u.column(src) / sigma));
            }
            sv.set_column(dst, &v.column(src));
            s.push(sigma);
        }
        Svd { u: su, s, v: sv }
    }

    /// Number of singular values above `cutoff`.
    pub fn rank(&self, cutoff: f64) -> usize {
        self.s.iter().take_while(|&&s| s > cutoff).count()
    }
}

fn condition_estimate(l: &DMatrix<f64>, n: usize) -> f64 {
    let diag: Vec<f64> = (0..n).map(|d| l[(d, d)].abs()).collect();
    let hi = diag.iter().cloned().fold(0.0, f64::max);
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        (hi / lo).powi(2)
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_system(s: f64) -> LocalSystem {
        // 1, x, x^2 at offsets -s, 0, s, scaled by h = s
        let xi: [f64; 3] = [0.0, -1.0, 1.0];
        let cols = DMatrix::from_fn(3, 3, |j, a| xi[j].powi(a as i32));
        LocalSystem::new(0, &[1.0, 0.6, 0.6], cols, vec![1.0, 1.0 / s, 1.0 / (s * s)]).unwrap()
    }

    #[test]
    fn central_differences_on_three_points() {
        let s = 0.1;
        let sys = line_system(s);
        let d1 = sys.solve(&[0.0, 1.0, 0.0]).unwrap();
        let want = [0.0, -1.0 / (2.0 * s), 1.0 / (2.0 * s)];
        for (a, b) in d1.iter().zip(want) {
            assert!((a - b).abs() < 1e-12 / s);
        }
        let d2 = sys.solve(&[0.0, 0.0, 2.0]).unwrap();
        let want = [-2.0 / (s * s), 1.0 / (s * s), 1.0 / (s * s)];
        for (a, b) in d2.iter().zip(want) {
            assert!((a - b).abs() < 1e-10 / (s * s));
        }
    }

    #[test]
    fn unattainable_targets_are_singular() {
        // a column that is zero on every member cannot carry a nonzero target
        let cols = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let sys = LocalSystem::new(3, &[1.0, 1.0], cols, vec![1.0, 1.0]).unwrap();
        assert!(sys.solve(&[0.0, 0.0]).is_ok());
        assert!(matches!(
            sys.solve(&[0.0, 1.0]),
            Err(GfdmError::SingularSystem { point: 3, .. })
        ));
    }

    #[test]
    fn redundant_columns_take_the_svd_path() {
        let xi: [f64; 4] = [0.0, -1.0, 1.0, 0.5];
        let cols = DMatrix::from_fn(4, 3, |j, a| {
            if a == 2 {
                2.0 * xi[j]
            } else {
                xi[j].powi(a as i32)
            }
        });
        let sys = LocalSystem::new(0, &[1.0; 4], cols, vec![1.0; 3]).unwrap();
        assert!(sys.used_svd());
        let c = sys.solve(&[0.0, 1.0, 2.0]).unwrap();
        assert!(sys.max_residual(&c, &[0.0, 1.0, 2.0]) < 1e-12);
        assert!(sys.solve(&[0.0, 1.0, 1.0]).is_err());
    }

    fn check_svd(a: &DMatrix<f64>) {
        let svd = Svd::new(a);
        let rebuilt =
            &svd.u * DMatrix::from_diagonal(&DVector::from_vec(svd.s.clone())) * svd.v.transpose();
        assert!((rebuilt - a).amax() < 1e-13 * a.amax().max(1.0));
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        let vtv = svd.v.transpose() * &svd.v;
        assert!((vtv - DMatrix::identity(a.ncols(), a.ncols())).amax() < 1e-13);
    }

    #[test]
    fn jacobi_svd_reconstructs_full_and_deficient_matrices() {
        check_svd(&DMatrix::from_fn(7, 4, |i, j| {
            ((i * 3 + j * 5) % 7) as f64 - 2.5 + 0.1 * (i * j) as f64
        }));
        // rank one with a known singular value
        let x = DVector::from_fn(9, |i, _| (i as f64).sin());
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let a = &x * y.transpose();
        check_svd(&a);
        let svd = Svd::new(&a);
        assert!((svd.s[0] - x.norm() * y.norm()).abs() < 1e-13 * svd.s[0]);
        assert_eq!(svd.rank(1e-10 * svd.s[0]), 1);
    }

    #[test]
    fn prioritized_extra_constraints_keep_primary_ones() {
        let s = 0.1;
        let xi: [f64; 5] = [0.0, -1.0, 1.0, -0.5, 0.7];
        let cols = DMatrix::from_fn(5, 2, |j, a| xi[j].powi(a as i32));
        let sys =
            LocalSystem::new(0, &[1.0, 0.8, 0.8, 0.9, 0.7], cols, vec![1.0, 1.0 / s]).unwrap();
        let b = [0.0, 1.0];
        // a consistent extra constraint (second moment) is met exactly
        let extra = DMatrix::from_fn(5, 1, |j, _| (s * xi[j]).powi(2));
        let (c, res) = sys.solve_prioritized(&b, &extra, &[0.0]).unwrap();
        assert!(res[0] < 1e-12 && sys.max_residual(&c, &b) < 1e-12);
        // two copies with conflicting targets are met in the least-squares sense
        let extra = DMatrix::from_fn(5, 2, |j, _| (s * xi[j]).powi(2));
        let (c, res) = sys.solve_prioritized(&b, &extra, &[0.0, 1.0]).unwrap();
        let got: f64 = (0..5).map(|j| c[j] * extra[(j, 0)]).sum();
        assert!((got - 0.5).abs() < 1e-10 && res[0] > 0.1);
        assert!(sys.max_residual(&c, &b) < 1e-12);
    }
}
