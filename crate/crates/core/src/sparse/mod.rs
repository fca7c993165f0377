//! Sparse matrices, global assembly with boundary conditions, and BiCGSTAB.

mod bicgstab;
mod csr;

pub use bicgstab::{bicgstab, SolveStats, SolverOptions};
pub use csr::CsrMatrix;

use crate::error::{GfdmError, Result};
use crate::stencils::StencilSet;

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryKind {
    /// `u_i = g_i`.
    Dirichlet,
    /// `sum_j c_ij u_j = l_i` with directional-derivative rows (usually along ν).
    Neumann(StencilSet),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCondition {
    pub kind: BoundaryKind,
    pub points: Vec<usize>,
    /// One value per entry of `points`.
    pub values: Vec<f64>,
}

impl BoundaryCondition {
    pub fn dirichlet(points: Vec<usize>, values: Vec<f64>) -> Self {
        BoundaryCondition {
            kind: BoundaryKind::Dirichlet,
            points,
            values,
        }
    }

    pub fn neumann(rows: StencilSet, points: Vec<usize>, values: Vec<f64>) -> Self {
        BoundaryCondition {
            kind: BoundaryKind::Neumann(rows),
            points,
            values,
        }
    }
}

/// Assembles `sum_t s_t L_t` on interior rows and replaces the rows of
/// boundary-condition points by identity or directional rows.
///
/// Every point flagged in `boundary` must be covered by exactly one
/// condition; points without a flag may also carry a condition.
pub fn assemble(
    terms: &[(f64, &StencilSet)],
    bcs: &[BoundaryCondition],
    rhs_interior: &[f64],
    boundary: &[bool],
) -> Result<(CsrMatrix, Vec<f64>)> {
    let n = rhs_interior.len();
    if boundary.len() != n {
        return Err(GfdmError::ShapeMismatch {
            expected: n,
            found: boundary.len(),
        });
    }
    for (_, s) in terms {
        if s.len() != n {
            return Err(GfdmError::ShapeMismatch {
                expected: n,
                found: s.len(),
            });
        }
    }
    let mut owner: Vec<Option<(usize, usize)>> = vec![None; n];
    for (b, bc) in bcs.iter().enumerate() {
        if bc.points.len() != bc.values.len() {
            return Err(GfdmError::ShapeMismatch {
                expected: bc.points.len(),
                found: bc.values.len(),
            });
        }
        if let BoundaryKind::Neumann(rows) = &bc.kind {
            if rows.len() != n {
                return Err(GfdmError::ShapeMismatch {
                    expected: n,
                    found: rows.len(),
                });
            }
        }
        for (k, &p) in bc.points.iter().enumerate() {
            if p >= n {
                return Err(GfdmError::invalid(format!(
                    "boundary condition names point {p} of {n}"
                )));
            }
            if owner[p].replace((b, k)).is_some() {
                return Err(GfdmError::DuplicateBoundaryCondition(p));
            }
        }
    }
    if let Some(p) = (0..n).find(|&p| boundary[p] && owner[p].is_none()) {
        return Err(GfdmError::UncoveredBoundaryPoint(p));
    }

    let mut triplets = Vec::new();
    let mut rhs = rhs_interior.to_vec();
    for i in 0..n {
        match owner[i] {
            None => {
                for (s, set) in terms {
                    let (c, v) = set.row(i);
                    triplets.extend(c.iter().zip(v).map(|(&j, &w)| (i, j, s * w)));
                }
            }
            Some((b, k)) => {
                let bc = &bcs[b];
                rhs[i] = bc.values[k];
                match &bc.kind {
                    BoundaryKind::Dirichlet => triplets.push((i, i, 1.0)),
                    BoundaryKind::Neumann(rows) => {
                        let (c, v) = rows.row(i);
                        triplets.extend(c.iter().zip(v).map(|(&j, &w)| (i, j, w)));
                    }
                }
            }
        }
    }
    Ok((CsrMatrix::from_triplets(n, n, &triplets)?, rhs))
}
