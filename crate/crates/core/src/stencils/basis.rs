//! Monomial bases in tangent-plane coordinates.

use crate::error::{GfdmError, Result};

/// All monomials of total degree at most `order` in `dim` variables, in
/// graded order with the constant first (`1, x, y, x^2, xy, y^2, ...`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    dim: usize,
    order: usize,
    exponents: Vec<Vec<u32>>,
}

pub const MAX_ORDER: usize = 3;

impl MonomialBasis {
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        if dim == 0 {
            return Err(GfdmError::invalid(
                "monomial basis needs at least one variable",
            ));
        }
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(GfdmError::invalid(format!(
                "monomial order must lie in 1..={MAX_ORDER}, got {order}"
            )));
        }
        let mut exponents = Vec::new();
        for degree in 0..=order as u32 {
            let mut current = vec![0u32; dim];
            push_degree(&mut exponents, &mut current, 0, degree);
        }
        Ok(MonomialBasis {
            dim,
            order,
            exponents,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn degree(&self, m: usize) -> u32 {
        self.exponents[m].iter().sum()
    }

    /// Index of the monomial with the given exponent vector.
    pub fn index_of(&self, exps: &[u32]) -> Option<usize> {
        self.exponents.iter().position(|e| e == exps)
    }

    /// Values of all monomials at `x`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.exponents
            .iter()
            .map(|e| e.iter().zip(x).map(|(&p, &v)| v.powi(p as i32)).product())
            .collect()
    }
}

// enumerate exponent vectors of a fixed total degree, first variable highest
fn push_degree(out: &mut Vec<Vec<u32>>, current: &mut [u32], var: usize, remaining: u32) {
    if var == current.len() - 1 {
        current[var] = remaining;
        out.push(current.to_vec());
        return;
    }
    for p in (0..=remaining).rev() {
        current[var] = p;
        push_degree(out, current, var + 1, remaining - p);
    }
    current[var] = 0;
}

pub fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
