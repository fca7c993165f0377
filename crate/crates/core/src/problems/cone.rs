//! Rigid rotation of a Gaussian bell on the cone `x^2 + y^2 = (4/9) z^2`,
//! `-6 <= z <= 0`, with velocity `v = (-y, x, 0)`.

use std::f64::consts::PI;

use log::info;

use super::{eps2, BenchmarkReport, FieldOutput, MethodOptions, ResolutionRow, Stopwatch};
use crate::advection::{Reconstruction, UpwindScheme};
use crate::error::{GfdmError, Result};
use crate::pointcloud::{sample_surface, SPACING_PER_SMOOTHING_LENGTH};
use crate::surface::Surface;
use crate::timeint::{sdirk2, StepPolicy, TimeGrid};

pub const CONE: Surface = Surface::Cone {
    slope: 2.0 / 3.0,
    z_min: -6.0,
    z_max: 0.0,
};

/// Center of the initial bell.
pub const ADVECTION_CENTER: [f64; 3] = [2.0, 0.0, -3.0];

/// Squared cutoff radius of the bell.
const CUTOFF_SQ: f64 = 25.0;

/// `(exp(-|x - x0|^2) - exp(-25)) / (1 - exp(-25))` inside radius 5, zero outside.
pub fn advection_initial(p: &[f64]) -> f64 {
    let r2: f64 = p
        .iter()
        .zip(&ADVECTION_CENTER)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    if r2 >= CUTOFF_SQ {
        return 0.0;
    }
    let floor = (-CUTOFF_SQ).exp();
    ((-r2).exp() - floor) / (1.0 - floor)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdvectionConfig {
    pub method: MethodOptions,
    pub mode: Reconstruction,
    /// Smoothing lengths, one per resolution; the spacing is `0.3 h`.
    pub h: Vec<f64>,
    pub dt: StepPolicy,
    pub t_end: f64,
}

impl Default for AdvectionConfig {
    fn default() -> Self {
        AdvectionConfig {
            method: MethodOptions::default(),
            mode: Reconstruction::MusclSuperbee,
            h: vec![0.6, 0.3, 0.15],
            dt: StepPolicy::Fixed(0.02),
            t_end: 2.0 * PI,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdvectionRow {
    pub resolution: ResolutionRow,
    pub peak: f64,
    pub initial_peak: f64,
}

/// Collects the rows into a convergence report.
pub fn advection_report(mode: Reconstruction, rows: &[AdvectionRow]) -> Result<BenchmarkReport> {
    BenchmarkReport::new(
        format!("advection-cone-{mode}"),
        rows.iter().map(|r| r.resolution.clone()).collect(),
        2,
    )
}

/// One rotation with SDIRK2; after a full turn the exact solution equals the
/// initial data.
pub fn run_advection_cone(cfg: &AdvectionConfig) -> Result<(Vec<AdvectionRow>, Vec<FieldOutput>)> {
    if cfg.h.is_empty() {
        return Err(GfdmError::invalid("at least one resolution is required"));
    }
    let mut rows = Vec::new();
    let mut fields = Vec::new();
    for (level, &h) in cfg.h.iter().enumerate() {
        let clock = Stopwatch::start();
        let cloud = sample_surface(
            &CONE,
            SPACING_PER_SMOOTHING_LENGTH * h,
            cfg.method.jitter,
            cfg.method.seed,
        )?;
        let disc = cfg.method.discretize(cloud)?;
        let gradient = disc.builder()?.surface_gradient()?;
        let velocity: Vec<f64> = disc
            .cloud
            .points()
            .flat_map(|p| [-p[1], p[0], 0.0])
            .collect();
        let scheme = UpwindScheme::new(cfg.mode, &disc.cloud, &gradient, &velocity)?;
        let grid = TimeGrid::new(0.0, cfg.t_end, cfg.dt, h)?;
        let u0: Vec<f64> = disc.cloud.points().map(advection_initial).collect();
        let (u, steps) = sdirk2(&scheme, &u0, &grid, &cfg.method.solver, &mut |_, _, _| {})?;
        let exact: Vec<f64> = discrete_exact(&disc.cloud, cfg.t_end);
        let peak = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let initial_peak = u0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let resolution = ResolutionRow {
            resolution: format!("h={h}"),
            n: disc.len(),
            h: disc.mean_support_radius(),
            eps2: eps2(&u, &exact),
            iters: steps.max_iterations(),
            seconds: clock.seconds(),
        };
        info!(
            "cone {}: h = {h}, N = {}, {} steps, eps2 = {:.3e}, peak {:.4} (initial {:.4})",
            cfg.mode, resolution.n, grid.steps, resolution.eps2, peak, initial_peak
        );
        fields.push(FieldOutput {
            label: format!("cone_{}_L{level}", cfg.mode),
            cloud: disc.cloud.clone(),
            fields: vec![("phi".into(), u), ("exact".into(), exact)],
        });
        rows.push(AdvectionRow {
            resolution,
            peak,
            initial_peak,
        });
    }
    Ok((rows, fields))
}

/// Exact solution: the initial bell rotated by angle `t` about the `z` axis.
fn discrete_exact(cloud: &crate::pointcloud::PointCloud, t: f64) -> Vec<f64> {
    let (s, c) = t.sin_cos();
    cloud
        .points()
        .map(|p| advection_initial(&[c * p[0] + s * p[1], -s * p[0] + c * p[1], p[2]]))
        .collect()
}
