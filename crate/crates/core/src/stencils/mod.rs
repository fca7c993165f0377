//! GFDM stencils: per-point coefficient rows for differential operators.

mod basis;
mod operators;
mod wls;

use std::fmt;

pub use basis::{binomial, MonomialBasis, MAX_ORDER};
pub use operators::{
    advection_stencil, build_wls, directional_stencil, surface_divergence_apply, DiffusionField,
    DiffusionOptions, DiffusionStencils, LaplacianOptions, LogKappaSource, StencilBuilder,
    StencilOptions, Target,
};
pub use wls::{
    relative_residual, LocalSystem, CHOLESKY_CONDITION_LIMIT, RESIDUAL_LIMIT, SVD_RELATIVE_CUTOFF,
};

use crate::error::{GfdmError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StencilKind {
    /// Derivative along tangent `t_{a+1}`.
    TangentGradient(usize),
    /// Embedding-space component of the surface gradient.
    SurfaceGradient(usize),
    Laplacian,
    LaplacianOptimized,
    Diffusion,
    DiffusionJump,
    Directional,
    Advection,
}

impl fmt::Display for StencilKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StencilKind::TangentGradient(a) => write!(f, "grad_t{}", a + 1),
            StencilKind::SurfaceGradient(d) => match d {
                0 => f.write_str("surface_grad_x"),
                1 => f.write_str("surface_grad_y"),
                2 => f.write_str("surface_grad_z"),
                _ => write!(f, "surface_grad_{d}"),
            },
            StencilKind::Laplacian => f.write_str("laplacian"),
            StencilKind::LaplacianOptimized => f.write_str("laplacian_optimized"),
            StencilKind::Diffusion => f.write_str("diffusion"),
            StencilKind::DiffusionJump => f.write_str("diffusion_jump"),
            StencilKind::Directional => f.write_str("directional"),
            StencilKind::Advection => f.write_str("advection"),
        }
    }
}

/// One sparse coefficient row per point. Row `i` lists its neighborhood in
/// the order of the neighborhood (center first).
#[derive(Clone, Debug, PartialEq)]
pub struct StencilSet {
    pub kind: StencilKind,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl StencilSet {
    pub fn from_rows(kind: StencilKind, rows: Vec<(Vec<usize>, Vec<f64>)>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let total = rows.iter().map(|r| r.0.len()).sum();
        let mut cols = Vec::with_capacity(total);
        let mut vals = Vec::with_capacity(total);
        for (c, v) in rows {
            if c.len() != v.len() {
                return Err(GfdmError::ShapeMismatch {
                    expected: c.len(),
                    found: v.len(),
                });
            }
            cols.extend(c);
            vals.extend(v);
            row_ptr.push(cols.len());
        }
        Ok(StencilSet {
            kind,
            row_ptr,
            cols,
            vals,
        })
    }

    /// Number of rows (points).
    pub fn len(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Coefficient of column `j` in row `i` (zero when absent).
    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.iter()
            .zip(v)
            .filter(|(&cj, _)| cj == j)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn apply_at(&self, i: usize, u: &[f64]) -> f64 {
        let (c, v) = self.row(i);
        c.iter().zip(v).map(|(&j, &w)| w * u[j]).sum()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.apply_at(i, u)).collect()
    }

    /// Same sparsity, values mapped row by row.
    pub fn map_rows(
        &self,
        kind: StencilKind,
        mut f: impl FnMut(usize, &[usize], &[f64]) -> Vec<f64>,
    ) -> Self {
        let mut vals = Vec::with_capacity(self.vals.len());
        for i in 0..self.len() {
            let (c, v) = self.row(i);
            let out = f(i, c, v);
            debug_assert_eq!(out.len(), c.len());
            vals.extend(out);
        }
        StencilSet {
            kind,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_rows(self.kind, |_, _, v| v.iter().map(|x| s * x).collect())
    }

    /// Whether both sets share the same row structure.
    pub fn same_pattern(&self, other: &StencilSet) -> bool {
        self.row_ptr == other.row_ptr && self.cols == other.cols
    }
}
