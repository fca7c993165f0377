//! Unpreconditioned BiCGSTAB in the van der Vorst form.

use log::debug;

use super::CsrMatrix;
use crate::error::{GfdmError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative residual `|b - Ax| / |b|` at which to stop (absolute when `b = 0`).
    pub tol: f64,
    pub max_iter: usize,
    /// Scale rows by the inverse diagonal before iterating.
    pub diagonal_scaling: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 1000,
            diagonal_scaling: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final true relative residual.
    pub residual: f64,
    pub converged: bool,
    pub restarts: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` starting from `x0` (zero when `None`).
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(GfdmError::ShapeMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if b.len() != n {
        return Err(GfdmError::ShapeMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(GfdmError::invalid(format!(
            "solver tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(GfdmError::invalid("right-hand side is not finite"));
    }
    let x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => {
            return Err(GfdmError::ShapeMismatch {
                expected: n,
                found: x0.len(),
            })
        }
        None => vec![0.0; n],
    };
    if opts.diagonal_scaling {
        let d = a.diagonal();
        if d.iter().any(|v| *v == 0.0) {
            return Err(GfdmError::invalid(
                "diagonal scaling needs a zero-free diagonal",
            ));
        }
        let inv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
        let mut scaled = a.clone();
        scaled.scale_rows(&inv);
        let sb: Vec<f64> = b.iter().zip(&inv).map(|(x, s)| x * s).collect();
        let (x, mut stats) = iterate(&scaled, &sb, x, opts)?;
        stats.residual = true_residual(a, b, &x);
        return Ok((x, stats));
    }
    iterate(a, b, x, opts)
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = b
        .iter()
        .zip(&ax)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    let bn = norm(b);
    if bn > 0.0 {
        r / bn
    } else {
        r
    }
}

enum Outcome {
    Converged,
    Breakdown,
    Exhausted,
}

fn iterate(
    a: &CsrMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let bnorm = norm(b);
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut stats = SolveStats::default();
    loop {
        match run(a, b, &mut x, scale, opts, &mut stats.iterations) {
            Outcome::Converged => {
                stats.residual = true_residual(a, b, &x);
                stats.converged = true;
                return Ok((x, stats));
            }
            Outcome::Breakdown if stats.restarts == 0 && stats.iterations < opts.max_iter => {
                stats.restarts += 1;
                let mag = x
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()))
                    .max(f64::MIN_POSITIVE);
                debug!(
                    "BiCGSTAB breakdown after {} iterations, restarting",
                    stats.iterations
                );
                for (i, v) in x.iter_mut().enumerate() {
                    *v += 1e-10 * mag * ((i as f64 + 1.0) * 0.618_033_988_749_895).sin();
                }
            }
            Outcome::Breakdown if stats.iterations < opts.max_iter => {
                return Err(GfdmError::Breakdown {
                    iterations: stats.iterations,
                    residual: true_residual(a, b, &x),
                });
            }
            Outcome::Breakdown | Outcome::Exhausted => {
                return Err(GfdmError::MaxIterExceeded {
                    iterations: stats.iterations,
                    residual: true_residual(a, b, &x),
                });
            }
        }
    }
}

// One BiCGSTAB sweep from the current iterate. Convergence is only claimed
// once the true residual agrees with the recurrence.
fn run(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    scale: f64,
    opts: &SolverOptions,
    iters: &mut usize,
) -> Outcome {
    let n = b.len();
    let mut r: Vec<f64> = {
        let ax = a.matvec(x);
        b.iter().zip(&ax).map(|(p, q)| p - q).collect()
    };
    if norm(&r) <= opts.tol * scale {
        return Outcome::Converged;
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let tiny = f64::EPSILON * f64::EPSILON;
    while *iters < opts.max_iter {
        *iters += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() <= tiny * norm(&r_hat) * norm(&r) || !rho_new.is_finite() {
            return Outcome::Breakdown;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        a.matvec_into(&p, &mut v);
        let denom = dot(&r_hat, &v);
        if denom.abs() <= tiny * norm(&r_hat) * norm(&v) || !denom.is_finite() {
            return Outcome::Breakdown;
        }
        alpha = rho_new / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= opts.tol * scale {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            if true_norm(a, b, x) <= opts.tol * scale {
                return Outcome::Converged;
            }
            // recurrence drifted: restart the sweep from the true residual
            return run(a, b, x, scale, opts, iters);
        }
        a.matvec_into(&s, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Outcome::Breakdown;
        }
        omega = dot(&t, &s) / tt;
        if omega.abs() <= tiny || !omega.is_finite() {
            return Outcome::Breakdown;
        }
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        if norm(&r) <= opts.tol * scale {
            if true_norm(a, b, x) <= opts.tol * scale {
                return Outcome::Converged;
            }
            return run(a, b, x, scale, opts, iters);
        }
    }
    if true_norm(a, b, x) <= opts.tol * scale {
        Outcome::Converged
    } else {
        Outcome::Exhausted
    }
}

fn true_norm(a: &CsrMatrix, b: &[f64], x: &[f64]) -> f64 {
    let ax = a.matvec(x);
    b.iter()
        .zip(&ax)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}
