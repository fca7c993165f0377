//! Operator stencils built from the per-point least-squares systems.

use log::{debug, warn};
use nalgebra::DMatrix;
use rayon::prelude::*;

use super::basis::MonomialBasis;
use super::wls::LocalSystem;
use super::{StencilKind, StencilSet};
use crate::error::{GfdmError, Result};
use crate::frames::Frame;
use crate::projection::ProjectedNeighborhood;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilOptions {
    /// Highest monomial degree reproduced exactly.
    pub order: usize,
    /// Gaussian weight sharpness `W_F`.
    pub weight_factor: f64,
}

impl Default for StencilOptions {
    fn default() -> Self {
        StencilOptions {
            order: 2,
            weight_factor: 2.0,
        }
    }
}

/// Differential operator whose action on the basis defines the targets.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// Derivative along the tangent `t_{a+1}`.
    TangentDerivative(usize),
    /// Directional derivative along an embedding-space vector.
    Directional(Vec<f64>),
    /// Tangent-plane Laplacian.
    Laplacian,
    /// `div(kappa grad u)` with nodal value and tangent-plane gradient of kappa.
    ScalarDiffusion { kappa: f64, gradient: Vec<f64> },
    /// `div(K grad u)` with a constant symmetric tangent-plane tensor.
    TensorDiffusion(DMatrix<f64>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LaplacianOptions {
    /// Maximize the relative central weight while keeping consistency.
    pub optimize: bool,
    /// Central value of the auxiliary stencil; defaults to an h-scaled negative value.
    pub center_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DiffusionField {
    /// Positive nodal values.
    Scalar(Vec<f64>),
    /// Symmetric `n x n` tensors in embedding coordinates, one per point.
    Tensor(Vec<DMatrix<f64>>),
}

/// Source of the nodal derivatives of `log kappa` used by the diffusion targets.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum LogKappaSource {
    /// Apply the gradient and Laplacian stencils to nodal `log kappa`.
    #[default]
    Numerical,
    /// Exact values: embedding-space surface gradient (flat, `n` per point) and Laplacian.
    Analytic {
        gradient: Vec<f64>,
        laplacian: Vec<f64>,
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiffusionOptions {
    /// Enforce the extra test functions `1/kappa`, `ds/kappa`, `ds^2/kappa`.
    pub jump: bool,
    pub log_kappa: LogKappaSource,
}

/// Diffusion rows together with the derivative data they were built from.
#[derive(Clone, Debug)]
pub struct DiffusionStencils {
    pub stencil: StencilSet,
    /// Surface gradient of `log kappa`, `n` per point (scalar fields only).
    pub grad_log_kappa: Vec<f64>,
    /// Surface Laplacian of `log kappa` (scalar fields only).
    pub lap_log_kappa: Vec<f64>,
    /// Unit direction of steepest `kappa` change used in jump mode, `n` per point.
    pub jump_direction: Vec<f64>,
    /// Points where `grad log kappa` vanished and the directional condition was skipped.
    pub flat_points: Vec<usize>,
    /// Largest relative residual of the extra conditions at each point.
    pub jump_residual: Vec<f64>,
}

/// Factorized local systems for every point, reused across operators.
pub struct StencilBuilder<'a> {
    projections: &'a [ProjectedNeighborhood],
    frames: &'a [Frame],
    basis: MonomialBasis,
    weight_factor: f64,
    systems: Vec<LocalSystem>,
    scales: Vec<f64>,
}

impl<'a> StencilBuilder<'a> {
    pub fn new(
        projections: &'a [ProjectedNeighborhood],
        frames: &'a [Frame],
        opts: &StencilOptions,
    ) -> Result<Self> {
        if !(opts.weight_factor > 0.0 && opts.weight_factor.is_finite()) {
            return Err(GfdmError::invalid(format!(
                "weight factor must be positive, got {}",
                opts.weight_factor
            )));
        }
        if projections.len() != frames.len() {
            return Err(GfdmError::ShapeMismatch {
                expected: frames.len(),
                found: projections.len(),
            });
        }
        let k = projections.first().map_or(1, |p| p.manifold_dim);
        let basis = MonomialBasis::new(k, opts.order)?;
        let built: Vec<(LocalSystem, f64)> = projections
            .par_iter()
            .map(|pr| {
                let h = scale_of(pr);
                let (cols, scale) = basis_columns(&basis, pr, h);
                let required = effective_count(&cols).max(k + 1);
                if pr.len() < required {
                    return Err(GfdmError::InsufficientNeighbors {
                        point: pr.center,
                        found: pr.len(),
                        required,
                    });
                }
                let w = pr.weights(opts.weight_factor);
                Ok((LocalSystem::new(pr.center, &w, cols, scale)?, h))
            })
            .collect::<Result<_>>()?;
        let (systems, scales) = built.into_iter().unzip();
        Ok(StencilBuilder {
            projections,
            frames,
            basis,
            weight_factor: opts.weight_factor,
            systems,
            scales,
        })
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn system(&self, i: usize) -> &LocalSystem {
        &self.systems[i]
    }

    pub fn projection(&self, i: usize) -> &ProjectedNeighborhood {
        &self.projections[i]
    }

    /// Number of points whose system fell back to the SVD factorization.
    pub fn svd_fallbacks(&self) -> usize {
        self.systems.iter().filter(|s| s.used_svd()).count()
    }

    /// Action of `target` on each basis monomial at the origin.
    pub fn targets(&self, i: usize, target: &Target) -> Vec<f64> {
        let k = self.basis.dim();
        let frame = &self.frames[i];
        self.basis
            .exponents()
            .iter()
            .map(|e| {
                let deg: u32 = e.iter().sum();
                let vars: Vec<usize> = (0..k)
                    .flat_map(|a| std::iter::repeat_n(a, e[a] as usize))
                    .collect();
                match (target, deg) {
                    (Target::TangentDerivative(a), 1) => (vars[0] == *a) as u8 as f64,
                    (Target::Directional(v), 1) => frame
                        .tangent(vars[0])
                        .iter()
                        .zip(v)
                        .map(|(t, x)| t * x)
                        .sum(),
                    (Target::Laplacian, 2) => second(&vars, |a, b| (a == b) as u8 as f64),
                    (Target::ScalarDiffusion { kappa, .. }, 2) => {
                        kappa * second(&vars, |a, b| (a == b) as u8 as f64)
                    }
                    (Target::ScalarDiffusion { gradient, .. }, 1) => gradient[vars[0]],
                    (Target::TensorDiffusion(kt), 2) => second(&vars, |a, b| kt[(a, b)]),
                    _ => 0.0,
                }
            })
            .collect()
    }

    fn rows(&self, i: usize, target: &Target) -> Result<Vec<f64>> {
        self.systems[i].solve(&self.targets(i, target))
    }

    /// Largest relative consistency residual of `set` against `target(i)`.
    pub fn consistency_residual(
        &self,
        set: &StencilSet,
        target: impl Fn(usize) -> Target + Sync,
    ) -> f64 {
        (0..set.len())
            .into_par_iter()
            .map(|i| {
                let (_, v) = set.row(i);
                self.systems[i].max_residual(v, &self.targets(i, &target(i)))
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Derivatives along each tangent direction, `k` stencil sets.
    pub fn tangent_gradient(&self) -> Result<Vec<StencilSet>> {
        let k = self.basis.dim();
        let per_point: Vec<Vec<Vec<f64>>> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                (0..k)
                    .map(|a| self.rows(i, &Target::TangentDerivative(a)))
                    .collect()
            })
            .collect::<Result<_>>()?;
        (0..k)
            .map(|a| {
                let rows = per_point
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (self.projections[i].members.clone(), r[a].clone()))
                    .collect();
                StencilSet::from_rows(StencilKind::TangentGradient(a), rows)
            })
            .collect()
    }

    /// Embedding-space surface gradient, `n` stencil sets, obtained by
    /// rotating the tangent rows back with `R^T`.
    pub fn surface_gradient(&self) -> Result<Vec<StencilSet>> {
        let tangent = self.tangent_gradient()?;
        Ok(rotate_gradient(&tangent, self.frames))
    }

    /// Tangent-plane Laplacian, optionally with maximized central weight.
    pub fn laplacian(&self, opts: &LaplacianOptions) -> Result<StencilSet> {
        let kind = if opts.optimize {
            StencilKind::LaplacianOptimized
        } else {
            StencilKind::Laplacian
        };
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let plain = self.rows(i, &Target::Laplacian)?;
                let row = if opts.optimize {
                    self.optimize_row(i, plain, opts.center_value)?
                } else {
                    plain
                };
                Ok((self.projections[i].members.clone(), row))
            })
            .collect::<Result<_>>()?;
        StencilSet::from_rows(kind, rows)
    }

    /// Default central value `-2 |P| / sum_j W_ij |offset_j|^2`.
    pub fn default_center_value(&self, i: usize) -> f64 {
        let pr = &self.projections[i];
        let w = pr.weights(self.weight_factor);
        let s: f64 = (0..pr.len())
            .map(|m| w[m] * pr.offset(m).iter().map(|v| v * v).sum::<f64>())
            .sum();
        -2.0 * self.basis.len() as f64 / s
    }

    fn optimize_row(
        &self,
        i: usize,
        plain: Vec<f64>,
        center_value: Option<f64>,
    ) -> Result<Vec<f64>> {
        let ac = center_value.unwrap_or_else(|| self.default_center_value(i));
        let h = self.scales[i];
        if !ac.is_finite() || ac == 0.0 || (ac * h * h - 1.0).abs() < 1e-12 {
            return Err(GfdmError::invalid(format!(
                "central value {ac} is not admissible at point {i}"
            )));
        }
        let pr = &self.projections[i];
        let (mut cols, mut scale) = basis_columns(&self.basis, pr, h);
        let p = cols.ncols();
        cols = cols.insert_column(p, 0.0);
        cols[(0, p)] = 1.0;
        scale.push(1.0);
        let sys = LocalSystem::new(i, &pr.weights(self.weight_factor), cols, scale)?;
        let mut b = self.targets(i, &Target::Laplacian);
        b.push(ac);
        let sigma = sys.solve(&b)?;
        let mut b0 = vec![0.0; p];
        b0.push(1.0);
        let d = sys.solve(&b0)?;
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let (sd, ss, dd) = (dot(&sigma, &d), dot(&sigma, &sigma), dot(&d, &d));
        let denom = sd - dd * ac;
        if denom.abs() <= 1e-14 * (sd.abs() + (dd * ac).abs()) {
            warn!("point {i}: optimized Laplacian is degenerate, keeping the plain stencil");
            return Ok(plain);
        }
        let alpha = (sd * ac - ss) / denom;
        Ok(sigma.iter().zip(&d).map(|(s, dv)| s + alpha * dv).collect())
    }

    /// Rows of `div(kappa grad u)` on the tangent plane.
    pub fn diffusion(
        &self,
        kappa: &DiffusionField,
        opts: &DiffusionOptions,
    ) -> Result<DiffusionStencils> {
        match kappa {
            DiffusionField::Scalar(values) => self.scalar_diffusion(values, opts),
            DiffusionField::Tensor(tensors) => {
                if opts.jump {
                    return Err(GfdmError::invalid(
                        "jump conditions need a scalar diffusion coefficient",
                    ));
                }
                self.tensor_diffusion(tensors)
            }
        }
    }

    /// Target of the scalar diffusion row at `i` from the nodal coefficient
    /// and the embedding-space surface gradient of `log kappa`.
    pub fn scalar_diffusion_target(&self, i: usize, kappa: f64, grad_log_kappa: &[f64]) -> Target {
        let frame = &self.frames[i];
        let gradient = (0..self.basis.dim())
            .map(|a| {
                kappa
                    * frame
                        .tangent(a)
                        .iter()
                        .zip(grad_log_kappa)
                        .map(|(t, x)| t * x)
                        .sum::<f64>()
            })
            .collect();
        Target::ScalarDiffusion { kappa, gradient }
    }

    fn log_kappa_derivatives(
        &self,
        values: &[f64],
        source: &LogKappaSource,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.frames.first().map_or(0, |f| f.embedding_dim());
        match source {
            LogKappaSource::Analytic {
                gradient,
                laplacian,
            } => {
                if gradient.len() != n * self.len() || laplacian.len() != self.len() {
                    return Err(GfdmError::ShapeMismatch {
                        expected: self.len(),
                        found: laplacian.len(),
                    });
                }
                Ok((gradient.clone(), laplacian.clone()))
            }
            LogKappaSource::Numerical => {
                let logk: Vec<f64> = values.iter().map(|v| v.ln()).collect();
                let grad = self.surface_gradient()?;
                let comps: Vec<Vec<f64>> = grad.iter().map(|g| g.apply(&logk)).collect();
                let flat = (0..self.len())
                    .flat_map(|i| comps.iter().map(move |c| c[i]))
                    .collect();
                let lap = self.laplacian(&LaplacianOptions::default())?.apply(&logk);
                Ok((flat, lap))
            }
        }
    }

    fn scalar_diffusion(
        &self,
        values: &[f64],
        opts: &DiffusionOptions,
    ) -> Result<DiffusionStencils> {
        if values.len() != self.len() {
            return Err(GfdmError::ShapeMismatch {
                expected: self.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(GfdmError::NonSpd { point: i });
        }
        let n = self.frames.first().map_or(0, |f| f.embedding_dim());
        let k = self.basis.dim();
        let (grad_log, lap_log) = self.log_kappa_derivatives(values, &opts.log_kappa)?;

        struct RowOut {
            coeffs: Vec<f64>,
            direction: Vec<f64>,
            flat: bool,
            residual: f64,
        }
        let rows: Vec<RowOut> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let frame = &self.frames[i];
                let g = &grad_log[i * n..(i + 1) * n];
                let gt: Vec<f64> = (0..k)
                    .map(|a| frame.tangent(a).iter().zip(g).map(|(t, x)| t * x).sum())
                    .collect();
                let target = self.scalar_diffusion_target(i, values[i], g);
                let b = self.targets(i, &target);
                if !opts.jump {
                    return Ok(RowOut {
                        coeffs: self.systems[i].solve(&b)?,
                        direction: vec![0.0; n],
                        flat: false,
                        residual: 0.0,
                    });
                }
                self.jump_row(i, values, b, &gt, lap_log[i]).map(
                    |(coeffs, dir_t, flat, residual)| {
                        let mut direction = vec![0.0; n];
                        for a in 0..k {
                            for (d, t) in direction.iter_mut().zip(frame.tangent(a).iter()) {
                                *d += dir_t[a] * t;
                            }
                        }
                        RowOut {
                            coeffs,
                            direction,
                            flat,
                            residual,
                        }
                    },
                )
            })
            .collect::<Result<_>>()?;

        let flat_points: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.flat)
            .map(|(i, _)| i)
            .collect();
        if opts.jump && !flat_points.is_empty() {
            debug!("jump conditions: {} points with vanishing grad log kappa, directional condition skipped", flat_points.len());
        }
        let jump_residual: Vec<f64> = rows.iter().map(|r| r.residual).collect();
        let unmet = jump_residual.iter().filter(|&&r| r > 1e-9).count();
        if unmet > 0 {
            debug!("jump conditions met only in the least-squares sense at {unmet} points");
        }
        let jump_direction = rows
            .iter()
            .flat_map(|r| r.direction.iter().copied())
            .collect();
        let kind = if opts.jump {
            StencilKind::DiffusionJump
        } else {
            StencilKind::Diffusion
        };
        let stencil = StencilSet::from_rows(
            kind,
            rows.into_iter()
                .enumerate()
                .map(|(i, r)| (self.projections[i].members.clone(), r.coeffs))
                .collect(),
        )?;
        Ok(DiffusionStencils {
            stencil,
            grad_log_kappa: grad_log,
            lap_log_kappa: lap_log,
            jump_direction,
            flat_points,
            jump_residual,
        })
    }

    /// Row with the extra jump test functions as additional constraints.
    /// Returns coefficients, the tangent-plane direction, the flat flag and the
    /// largest extra-condition residual.
    fn jump_row(
        &self,
        i: usize,
        values: &[f64],
        b: Vec<f64>,
        grad_t: &[f64],
        lap_log: f64,
    ) -> Result<(Vec<f64>, Vec<f64>, bool, f64)> {
        let pr = &self.projections[i];
        let k = self.basis.dim();
        let norm = grad_t.iter().map(|v| v * v).sum::<f64>().sqrt();
        let flat = norm < 1e-14;
        let s: Vec<f64> = if flat {
            let mut e = vec![0.0; k];
            e[0] = 1.0;
            e
        } else {
            grad_t.iter().map(|v| v / norm).collect()
        };
        let inv_kappa: Vec<f64> = pr.members.iter().map(|&j| 1.0 / values[j]).collect();
        let ds: Vec<f64> = (0..pr.len())
            .map(|m| pr.offset(m).iter().zip(&s).map(|(x, y)| x * y).sum())
            .collect();
        let mut extra: Vec<(Vec<f64>, f64)> = vec![(inv_kappa.clone(), -lap_log)];
        if !flat {
            extra.push((
                ds.iter().zip(&inv_kappa).map(|(d, ik)| d * ik).collect(),
                -norm,
            ));
        }
        extra.push((
            ds.iter()
                .zip(&inv_kappa)
                .map(|(d, ik)| d * d * ik)
                .collect(),
            2.0,
        ));
        let cols = DMatrix::from_fn(pr.len(), extra.len(), |j, a| extra[a].0[j]);
        let targets: Vec<f64> = extra.iter().map(|e| e.1).collect();
        let (c, residuals) = self.systems[i].solve_prioritized(&b, &cols, &targets)?;
        let worst = residuals.iter().cloned().fold(0.0, f64::max);
        Ok((c, s, flat, worst))
    }

    fn tensor_diffusion(&self, tensors: &[DMatrix<f64>]) -> Result<DiffusionStencils> {
        if tensors.len() != self.len() {
            return Err(GfdmError::ShapeMismatch {
                expected: self.len(),
                found: tensors.len(),
            });
        }
        let k = self.basis.dim();
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let kappa = &tensors[i];
                let r = self.frames[i].rotation();
                if kappa.shape() != r.shape() {
                    return Err(GfdmError::ShapeMismatch {
                        expected: r.nrows(),
                        found: kappa.nrows(),
                    });
                }
                let asym = (kappa - kappa.transpose()).amax();
                if asym > 1e-12 * kappa.amax().max(f64::MIN_POSITIVE) {
                    return Err(GfdmError::NonSpd { point: i });
                }
                let rotated = r * kappa * r.transpose();
                let kt = rotated.view((0, 0), (k, k)).into_owned();
                if kt.clone().cholesky().is_none() {
                    return Err(GfdmError::NonSpd { point: i });
                }
                Ok((
                    self.projections[i].members.clone(),
                    self.rows(i, &Target::TensorDiffusion(kt))?,
                ))
            })
            .collect::<Result<_>>()?;
        Ok(DiffusionStencils {
            stencil: StencilSet::from_rows(StencilKind::Diffusion, rows)?,
            grad_log_kappa: Vec::new(),
            lap_log_kappa: Vec::new(),
            jump_direction: Vec::new(),
            flat_points: Vec::new(),
            jump_residual: Vec::new(),
        })
    }
}

// sum over the two (ordered) index pairs of a degree-2 monomial
fn second(vars: &[usize], f: impl Fn(usize, usize) -> f64) -> f64 {
    if vars[0] == vars[1] {
        2.0 * f(vars[0], vars[0])
    } else {
        f(vars[0], vars[1]) + f(vars[1], vars[0])
    }
}

fn scale_of(pr: &ProjectedNeighborhood) -> f64 {
    if pr.support_radius > 0.0 {
        return pr.support_radius;
    }
    let far = (0..pr.len())
        .map(|m| pr.offset(m).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if far > 0.0 {
        far
    } else {
        pr.smoothing[0]
    }
}

fn basis_columns(
    basis: &MonomialBasis,
    pr: &ProjectedNeighborhood,
    h: f64,
) -> (DMatrix<f64>, Vec<f64>) {
    let m = pr.len();
    let mut cols = DMatrix::zeros(m, basis.len());
    for r in 0..m {
        let xi: Vec<f64> = pr.offset(r).iter().map(|v| v / h).collect();
        for (a, v) in basis.eval(&xi).into_iter().enumerate() {
            cols[(r, a)] = v;
        }
    }
    let scale = (0..basis.len())
        .map(|a| h.powi(-(basis.degree(a) as i32)))
        .collect();
    (cols, scale)
}

// number of columns that are not identically zero on the offsets
fn effective_count(cols: &DMatrix<f64>) -> usize {
    (0..cols.ncols())
        .filter(|&c| cols.column(c).amax() > 1e-12)
        .count()
}

fn rotate_gradient(tangent: &[StencilSet], frames: &[Frame]) -> Vec<StencilSet> {
    let n = frames.first().map_or(0, |f| f.embedding_dim());
    (0..n)
        .map(|d| {
            tangent[0].map_rows(StencilKind::SurfaceGradient(d), |i, _, v| {
                let r = frames[i].rotation();
                (0..v.len())
                    .map(|j| {
                        tangent
                            .iter()
                            .enumerate()
                            .map(|(a, t)| t.row(i).1[j] * r[(a, d)])
                            .sum()
                    })
                    .collect()
            })
        })
        .collect()
}

/// Coefficient rows for each right-hand side of one projected neighborhood.
pub fn build_wls(
    projected: &ProjectedNeighborhood,
    basis: &MonomialBasis,
    weight_factor: f64,
    rhs: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    if basis.dim() != projected.manifold_dim {
        return Err(GfdmError::ShapeMismatch {
            expected: projected.manifold_dim,
            found: basis.dim(),
        });
    }
    let h = scale_of(projected);
    let (cols, scale) = basis_columns(basis, projected, h);
    let required = effective_count(&cols).max(basis.dim() + 1);
    if projected.len() < required {
        return Err(GfdmError::InsufficientNeighbors {
            point: projected.center,
            found: projected.len(),
            required,
        });
    }
    let sys = LocalSystem::new(
        projected.center,
        &projected.weights(weight_factor),
        cols,
        scale,
    )?;
    rhs.iter().map(|b| sys.solve(b)).collect()
}

/// Per-point combination `sum_d v_i^d G_d` of surface-gradient rows.
fn combine(grad: &[StencilSet], vectors: &[f64], kind: StencilKind) -> Result<StencilSet> {
    let n = grad.len();
    let rows = grad.first().map_or(0, |g| g.len());
    if vectors.len() != n * rows {
        return Err(GfdmError::ShapeMismatch {
            expected: n * rows,
            found: vectors.len(),
        });
    }
    if grad.iter().any(|g| !g.same_pattern(&grad[0])) {
        return Err(GfdmError::invalid(
            "gradient stencils must share one sparsity pattern",
        ));
    }
    Ok(grad[0].map_rows(kind, |i, _, v| {
        let dir = &vectors[i * n..(i + 1) * n];
        (0..v.len())
            .map(|j| (0..n).map(|d| dir[d] * grad[d].row(i).1[j]).sum())
            .collect()
    }))
}

/// Derivative along per-point unit directions (flat, `n` per point).
pub fn directional_stencil(surface_grad: &[StencilSet], directions: &[f64]) -> Result<StencilSet> {
    let n = surface_grad.len();
    for (i, dir) in directions.chunks(n.max(1)).enumerate() {
        let l = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (l - 1.0).abs() > 1e-8 {
            return Err(GfdmError::invalid(format!(
                "direction at point {i} has length {l}"
            )));
        }
    }
    combine(surface_grad, directions, StencilKind::Directional)
}

/// Rows of `v . grad_M` for the per-point velocity `v` (flat, `n` per point).
pub fn advection_stencil(surface_grad: &[StencilSet], velocity: &[f64]) -> Result<StencilSet> {
    combine(surface_grad, velocity, StencilKind::Advection)
}

/// Discrete surface divergence `sum_d G_d v^d` of a per-point vector field.
pub fn surface_divergence_apply(surface_grad: &[StencilSet], field: &[f64]) -> Result<Vec<f64>> {
    let n = surface_grad.len();
    let rows = surface_grad.first().map_or(0, |g| g.len());
    if field.len() != n * rows {
        return Err(GfdmError::ShapeMismatch {
            expected: n * rows,
            found: field.len(),
        });
    }
    Ok((0..rows)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|d| {
                    let (c, v) = surface_grad[d].row(i);
                    c.iter()
                        .zip(v)
                        .map(|(&j, &w)| w * field[j * n + d])
                        .sum::<f64>()
                })
                .sum()
        })
        .collect())
}
