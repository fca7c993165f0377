//! Heat equation on the unit sphere and forced diffusion on a torus.

use log::info;

use super::{eps2, BenchmarkReport, FieldOutput, MethodOptions, ResolutionRow, Stopwatch};
use crate::error::{GfdmError, Result};
use crate::sparse::CsrMatrix;
use crate::surface::Surface;
use crate::timeint::{crank_nicolson, StepPolicy, TimeGrid};

/// Torus with major radius 1 and minor radius 1/3.
pub const TORUS: Surface = Surface::Torus {
    major: 1.0,
    minor: 1.0 / 3.0,
};

#[derive(Clone, Debug, PartialEq)]
pub struct HeatConfig {
    pub method: MethodOptions,
    /// Target point counts, one per resolution.
    pub levels: Vec<usize>,
    pub t_end: f64,
    /// Time step; `h` in an h-scaled policy is the mean support radius.
    pub dt: StepPolicy,
}

impl Default for HeatConfig {
    fn default() -> Self {
        HeatConfig {
            method: MethodOptions::default(),
            levels: vec![1000, 2520, 6350, 16000],
            t_end: 0.3,
            dt: StepPolicy::HScaled { c: 0.1, power: 2.0 },
        }
    }
}

/// `u = exp(-6t) x y` solves `u_t = lap_M u` on the unit sphere.
pub fn heat_sphere_exact(p: &[f64], t: f64) -> f64 {
    (-6.0 * t).exp() * p[0] * p[1]
}

/// `p = x (x^4 - 10 x^2 y^2 + 5 y^4) (x^2 + y^2 - 60 z^2)`.
fn torus_polynomial(p: &[f64]) -> f64 {
    let (x, y, z) = (p[0], p[1], p[2]);
    x * (x.powi(4) - 10.0 * x * x * y * y + 5.0 * y.powi(4)) * (x * x + y * y - 60.0 * z * z)
}

/// Manufactured torus solution `u = exp(-5t) p / 8`.
pub fn torus_exact(p: &[f64], t: f64) -> f64 {
    0.125 * (-5.0 * t).exp() * torus_polynomial(p)
}

/// `lap_M p = lap p - n.H n - (div n)(n . grad p)` on the torus
/// `(rho - 1)^2 + z^2 = 1/9`, where `n = 3((rho - 1) x / rho, (rho - 1) y / rho, z)`
/// and `div n = 3 (2 rho - 1) / rho`. `docs/torus_forcing.py` derives and
/// checks the same expression symbolically.
pub fn torus_laplace_beltrami_p(p: &[f64]) -> f64 {
    let (x, y, z) = (p[0], p[1], p[2]);
    // p = a b
    let a = x.powi(5) - 10.0 * x.powi(3) * y * y + 5.0 * x * y.powi(4);
    let b = x * x + y * y - 60.0 * z * z;
    let ga = [
        5.0 * x.powi(4) - 30.0 * x * x * y * y + 5.0 * y.powi(4),
        -20.0 * x.powi(3) * y + 20.0 * x * y.powi(3),
        0.0,
    ];
    let gb = [2.0 * x, 2.0 * y, -120.0 * z];
    let ha = [
        [
            20.0 * x.powi(3) - 60.0 * x * y * y,
            -60.0 * x * x * y + 20.0 * y.powi(3),
            0.0,
        ],
        [
            -60.0 * x * x * y + 20.0 * y.powi(3),
            -20.0 * x.powi(3) + 60.0 * x * y * y,
            0.0,
        ],
        [0.0, 0.0, 0.0],
    ];
    let hb = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, -120.0]];
    let grad: Vec<f64> = (0..3).map(|i| ga[i] * b + a * gb[i]).collect();
    let hess = |i: usize, j: usize| ha[i][j] * b + ga[i] * gb[j] + ga[j] * gb[i] + a * hb[i][j];
    let rho = x.hypot(y);
    let n = [
        3.0 * (rho - 1.0) * x / rho,
        3.0 * (rho - 1.0) * y / rho,
        3.0 * z,
    ];
    let div_n = 3.0 * (2.0 * rho - 1.0) / rho;
    let lap: f64 = (0..3).map(|i| hess(i, i)).sum();
    let nhn: f64 = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| n[i] * hess(i, j) * n[j])
        .sum();
    let dn: f64 = (0..3).map(|i| n[i] * grad[i]).sum();
    lap - nhn - div_n * dn
}

/// Forcing `f = u_t - lap_M u` for the manufactured torus solution.
pub fn torus_forcing(p: &[f64], t: f64) -> f64 {
    0.125 * (-5.0 * t).exp() * (-5.0 * torus_polynomial(p) - torus_laplace_beltrami_p(p))
}

fn check_levels(cfg: &HeatConfig) -> Result<()> {
    if cfg.levels.is_empty() {
        return Err(GfdmError::invalid("at least one resolution is required"));
    }
    if !(cfg.t_end > 0.0) {
        return Err(GfdmError::invalid("t_end must be positive"));
    }
    Ok(())
}

struct Problem<'a> {
    name: &'static str,
    surface: Surface,
    exact: &'a (dyn Fn(&[f64], f64) -> f64 + Sync),
    forcing: Option<&'a (dyn Fn(&[f64], f64) -> f64 + Sync)>,
}

fn run(problem: &Problem<'_>, cfg: &HeatConfig) -> Result<(BenchmarkReport, Vec<FieldOutput>)> {
    check_levels(cfg)?;
    let mut rows = Vec::new();
    let mut fields = Vec::new();
    for (level, &target) in cfg.levels.iter().enumerate() {
        let clock = Stopwatch::start();
        let cloud = cfg.method.cloud_with_count(&problem.surface, target)?;
        let disc = cfg.method.discretize(cloud)?;
        let h = disc.mean_support_radius();
        let lap = disc.builder()?.laplacian(&cfg.method.laplacian)?;
        let l = CsrMatrix::from_stencil(&lap)?;
        let grid = TimeGrid::new(0.0, cfg.t_end, cfg.dt, h)?;
        let points: Vec<&[f64]> = disc.cloud.points().collect();
        let u0: Vec<f64> = points.iter().map(|p| (problem.exact)(p, 0.0)).collect();
        let force = problem
            .forcing
            .map(|f| move |t: f64| points.iter().map(|p| f(p, t)).collect::<Vec<f64>>());
        let force_ref = force
            .as_ref()
            .map(|f| f as &(dyn Fn(f64) -> Vec<f64> + Sync));
        let (u, steps) = crank_nicolson(
            &l,
            &u0,
            &grid,
            force_ref,
            &cfg.method.solver,
            &mut |_, _, _| {},
        )?;
        let exact: Vec<f64> = disc
            .cloud
            .points()
            .map(|p| (problem.exact)(p, cfg.t_end))
            .collect();
        let err = eps2(&u, &exact);
        let row = ResolutionRow {
            resolution: format!("L{level}"),
            n: disc.len(),
            h,
            eps2: err,
            iters: steps.max_iterations(),
            seconds: clock.seconds(),
        };
        info!(
            "{}: N = {}, h = {:.4}, {} steps, eps2 = {:.3e}, max iterations {}",
            problem.name, row.n, h, grid.steps, err, row.iters
        );
        rows.push(row);
        let error: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| a - b).collect();
        fields.push(FieldOutput {
            label: format!("{}_L{level}", problem.name),
            cloud: disc.cloud.clone(),
            fields: vec![
                ("u".into(), u),
                ("exact".into(), exact),
                ("error".into(), error),
            ],
        });
    }
    Ok((BenchmarkReport::new(problem.name, rows, 2)?, fields))
}

/// Crank–Nicolson heat equation on the unit sphere from `u0 = x y`,
/// errors at `t_end` against `exp(-6t) x y`.
pub fn run_heat_sphere(cfg: &HeatConfig) -> Result<(BenchmarkReport, Vec<FieldOutput>)> {
    let problem = Problem {
        name: "heat-sphere",
        surface: Surface::Sphere { radius: 1.0 },
        exact: &heat_sphere_exact,
        forcing: None,
    };
    run(&problem, cfg)
}

/// Forced diffusion on the torus with the manufactured solution; the
/// projection mode is taken from `cfg.method.projection`.
pub fn run_torus_forced(cfg: &HeatConfig) -> Result<(BenchmarkReport, Vec<FieldOutput>)> {
    let problem = Problem {
        name: "torus",
        surface: TORUS,
        exact: &torus_exact,
        forcing: Some(&torus_forcing),
    };
    run(&problem, cfg)
}
