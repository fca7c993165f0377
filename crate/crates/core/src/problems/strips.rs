//! Elliptic diffusion with four strips of strongly different coefficient on
//! the wave patch `z = sin(2x) sin(y)`, `(x, y) in [0, 4 pi]^2`.

use std::f64::consts::PI;

use log::info;

use super::{FieldOutput, MethodOptions, Stopwatch};
use crate::error::{GfdmError, Result};
use crate::sparse::{assemble, bicgstab, BoundaryCondition, SolverOptions};
use crate::stencils::{DiffusionField, DiffusionOptions};
use crate::surface::Surface;

/// Diffusion coefficient of the strips `[k pi, (k + 1) pi]` in `x`.
pub const FOUR_STRIP_ETA: [f64; 4] = [1e4, 1.0, 1e2, 1.0];

pub const FOUR_STRIP_SURFACE: Surface = Surface::WavePatch {
    x_range: (0.0, 4.0 * PI),
    y_range: (0.0, 4.0 * PI),
};

/// Slopes `C / eta_i` of the one-dimensional flux-continuity solution with
/// `phi(0) = 0`, `phi(4 pi) = 1` and strips of width `pi`.
pub fn four_strip_oracle(eta: &[f64; 4]) -> [f64; 4] {
    let c = 1.0 / (PI * eta.iter().map(|e| 1.0 / e).sum::<f64>());
    eta.map(|e| c / e)
}

fn strip_of(x: f64) -> usize {
    ((x / PI).floor().max(0.0) as usize).min(3)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourStripConfig {
    pub method: MethodOptions,
    pub n_target: usize,
    pub eta: [f64; 4],
    pub diffusion: DiffusionOptions,
    /// Number of `x`-bins of the spread and oscillation metrics.
    pub bins: usize,
}

impl Default for FourStripConfig {
    fn default() -> Self {
        FourStripConfig {
            method: MethodOptions {
                solver: SolverOptions {
                    tol: 1e-10,
                    max_iter: 20_000,
                    diagonal_scaling: true,
                },
                ..Default::default()
            },
            n_target: 14_000,
            eta: FOUR_STRIP_ETA,
            diffusion: DiffusionOptions {
                jump: true,
                ..Default::default()
            },
            bins: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourStripReport {
    pub n: usize,
    /// Fitted `d phi / dx` per strip.
    pub slopes: [f64; 4],
    pub oracle: [f64; 4],
    /// Largest spread, over `x`-bins, of the residual from the per-strip fit.
    pub y_spread: f64,
    /// Total variation of the bin means of the same residual.
    pub oscillation: f64,
    /// Largest extra-condition residual over rows whose neighbors all share the
    /// coefficient of the center.
    pub far_jump_residual: f64,
    pub iterations: usize,
    pub seconds: f64,
}

impl FourStripReport {
    /// Largest `|slope / oracle - 1|` over the strips.
    pub fn worst_slope_error(&self) -> f64 {
        self.slopes
            .iter()
            .zip(&self.oracle)
            .map(|(s, o)| (s / o - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Least-squares line `a + b x`; returns `(a, b)`.
fn fit_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let b = x
        .iter()
        .zip(y)
        .map(|(a, c)| (a - mx) * (c - my))
        .sum::<f64>()
        / sxx;
    Some((my - b * mx, b))
}

/// Solves `div_M(kappa grad_M phi) = 0` and measures the strip slopes.
pub fn run_four_strip(cfg: &FourStripConfig) -> Result<(FourStripReport, FieldOutput)> {
    if cfg.bins < 2 {
        return Err(GfdmError::invalid("at least two bins are required"));
    }
    if cfg.eta.iter().any(|e| !(*e > 0.0)) {
        return Err(GfdmError::invalid("strip coefficients must be positive"));
    }
    let clock = Stopwatch::start();
    let cloud = cfg
        .method
        .cloud_with_count(&FOUR_STRIP_SURFACE, cfg.n_target)?;
    let disc = cfg.method.discretize(cloud)?;
    let n = disc.len();
    let x: Vec<f64> = disc.cloud.points().map(|p| p[0]).collect();
    let kappa: Vec<f64> = x.iter().map(|&v| cfg.eta[strip_of(v)]).collect();
    let builder = disc.builder()?;
    let d = builder.diffusion(&DiffusionField::Scalar(kappa.clone()), &cfg.diffusion)?;
    let grad = builder.surface_gradient()?;

    let edge = 1e-9 * 4.0 * PI;
    let (mut dir_pts, mut dir_vals, mut neu_pts) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &xi) in x
        .iter()
        .enumerate()
        .filter(|(i, _)| disc.cloud.is_boundary(*i))
    {
        if xi < edge {
            dir_pts.push(i);
            dir_vals.push(0.0);
        } else if xi > 4.0 * PI - edge {
            dir_pts.push(i);
            dir_vals.push(1.0);
        } else {
            neu_pts.push(i);
        }
    }
    let neu_vals = vec![0.0; neu_pts.len()];
    let bcs = [
        BoundaryCondition::dirichlet(dir_pts, dir_vals),
        BoundaryCondition::neumann(grad[1].clone(), neu_pts, neu_vals),
    ];
    let (a, rhs) = assemble(
        &[(1.0, &d.stencil)],
        &bcs,
        &vec![0.0; n],
        disc.cloud.boundary_flags(),
    )?;
    let (phi, stats) = bicgstab(&a, &rhs, None, &cfg.method.solver)?;

    let far_jump_residual = (0..n)
        .filter(|&i| {
            disc.neighborhoods[i]
                .members
                .iter()
                .all(|&j| kappa[j] == kappa[i])
        })
        .map(|i| d.jump_residual[i])
        .fold(0.0, f64::max);

    // fits use points at least one support radius away from the interfaces
    let margin = disc.mean_support_radius();
    let mut slopes = [0.0; 4];
    let mut fits = [(0.0, 0.0); 4];
    for (s, fit) in fits.iter_mut().enumerate() {
        let (lo, hi) = (s as f64 * PI + margin, (s + 1) as f64 * PI - margin);
        let (xs, ys): (Vec<f64>, Vec<f64>) = x
            .iter()
            .zip(&phi)
            .filter(|(v, _)| **v > lo && **v < hi)
            .map(|(a, b)| (*a, *b))
            .unzip();
        *fit = fit_line(&xs, &ys)
            .ok_or_else(|| GfdmError::invalid(format!("strip {s} has too few points to fit")))?;
        slopes[s] = fit.1;
    }
    let width = 4.0 * PI / cfg.bins as f64;
    let mut lo = vec![f64::INFINITY; cfg.bins];
    let mut hi = vec![f64::NEG_INFINITY; cfg.bins];
    let mut sum = vec![0.0; cfg.bins];
    let mut count = vec![0usize; cfg.bins];
    for (&xi, &p) in x.iter().zip(&phi) {
        let (a, b) = fits[strip_of(xi)];
        let r = p - (a + b * xi);
        let bin = ((xi / width) as usize).min(cfg.bins - 1);
        lo[bin] = lo[bin].min(r);
        hi[bin] = hi[bin].max(r);
        sum[bin] += r;
        count[bin] += 1;
    }
    let y_spread = (0..cfg.bins)
        .filter(|&b| count[b] > 0)
        .map(|b| hi[b] - lo[b])
        .fold(0.0, f64::max);
    let means: Vec<f64> = (0..cfg.bins)
        .filter(|&b| count[b] > 0)
        .map(|b| sum[b] / count[b] as f64)
        .collect();
    let oscillation = means.windows(2).map(|w| (w[1] - w[0]).abs()).sum();

    let report = FourStripReport {
        n,
        slopes,
        oracle: four_strip_oracle(&cfg.eta),
        y_spread,
        oscillation,
        far_jump_residual,
        iterations: stats.iterations,
        seconds: clock.seconds(),
    };
    info!(
        "four-strip (jump {}): N = {n}, slopes {:?}, worst slope error {:.3e}, spread {:.3e}, oscillation {:.3e}, {} iterations",
        cfg.diffusion.jump,
        report.slopes,
        report.worst_slope_error(),
        y_spread,
        oscillation,
        stats.iterations
    );
    let fields = FieldOutput {
        label: format!(
            "four_strip_{}",
            if cfg.diffusion.jump { "jump" } else { "plain" }
        ),
        cloud: disc.cloud.clone(),
        fields: vec![("phi".into(), phi), ("kappa".into(), kappa)],
    };
    Ok((report, fields))
}
