//! Benchmark problems: geometry, data, exact solutions and error metrics.

mod cone;
mod heat;
mod phase;
mod strips;

use std::io::Write;
use std::time::Instant;

pub use cone::{
    advection_initial, advection_report, run_advection_cone, AdvectionConfig, AdvectionRow,
    ADVECTION_CENTER, CONE,
};
pub use heat::{
    heat_sphere_exact, run_heat_sphere, run_torus_forced, torus_exact, torus_forcing,
    torus_laplace_beltrami_p, HeatConfig, TORUS,
};
pub use phase::{run_cahn_hilliard, PhaseConfig, PhaseReport};
pub use strips::{
    four_strip_oracle, run_four_strip, FourStripConfig, FourStripReport, FOUR_STRIP_ETA,
    FOUR_STRIP_SURFACE,
};

use crate::discretization::{Discretization, DiscretizationOptions};
use crate::error::{GfdmError, Result};
use crate::frames::NormalSource;
use crate::io::write_csv;
use crate::pointcloud::{sample_surface, NeighborStrategy, PointCloud};
use crate::projection::ProjectionMode;
use crate::sparse::SolverOptions;
use crate::stencils::{LaplacianOptions, StencilOptions};
use crate::surface::Surface;

/// Relative error `sqrt(sum (u - u_e)^2) / sqrt(sum u_e^2)`.
pub fn eps2(numeric: &[f64], exact: &[f64]) -> f64 {
    let num: f64 = numeric
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let den: f64 = exact.iter().map(|b| b * b).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(GfdmError::invalid(
            "a slope needs at least two paired values",
        ));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(GfdmError::invalid("log-log slopes need positive values"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(GfdmError::invalid("a slope needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

/// Convergence order in `h` from errors at point counts `n` on a
/// `k`-manifold, where `h ~ N^{-1/k}`: `-k d log eps / d log N`.
pub fn convergence_order(n: &[usize], eps: &[f64], manifold_dim: usize) -> Result<f64> {
    let nf: Vec<f64> = n.iter().map(|&v| v as f64).collect();
    Ok(-(manifold_dim as f64) * loglog_slope(&nf, eps)?)
}

/// Method settings shared by all benchmarks.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodOptions {
    pub stencil: StencilOptions,
    pub laplacian: LaplacianOptions,
    pub projection: ProjectionMode,
    pub strategy: NeighborStrategy,
    pub normals: NormalSource,
    pub solver: SolverOptions,
    /// Sampler jitter as a fraction of the spacing.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions {
            // flatter weights leave eigenvalues with positive real part in
            // the plain rows on jittered clouds
            stencil: StencilOptions {
                weight_factor: 6.0,
                ..Default::default()
            },
            laplacian: LaplacianOptions {
                optimize: true,
                center_value: None,
            },
            projection: ProjectionMode::CentralNormal,
            strategy: NeighborStrategy::default(),
            normals: NormalSource::Analytic,
            solver: SolverOptions::default(),
            jitter: 0.3,
            seed: 1,
        }
    }
}

impl MethodOptions {
    pub fn discretization_options(&self) -> DiscretizationOptions {
        DiscretizationOptions {
            strategy: self.strategy,
            normals: self.normals,
            projection: self.projection,
            stencil: self.stencil,
            ..Default::default()
        }
    }

    /// Samples `surface` with about `n_target` points.
    pub fn cloud_with_count(&self, surface: &Surface, n_target: usize) -> Result<PointCloud> {
        if n_target == 0 {
            return Err(GfdmError::invalid("target point count must be positive"));
        }
        let spacing = (surface.area() / n_target as f64).sqrt();
        sample_surface(surface, spacing, self.jitter, self.seed)
    }

    pub fn discretize(&self, cloud: PointCloud) -> Result<Discretization> {
        Discretization::new(cloud, self.discretization_options())
    }
}

/// One resolution of a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolutionRow {
    pub resolution: String,
    pub n: usize,
    /// Mean support radius of the discretization.
    pub h: f64,
    pub eps2: f64,
    /// Largest solver iteration count of any step.
    pub iters: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkReport {
    pub name: String,
    pub rows: Vec<ResolutionRow>,
    /// Fitted order in `h`; present with three or more resolutions.
    pub slope: Option<f64>,
}

pub const REPORT_HEADER: [&str; 7] = ["resolution", "N", "h", "eps2", "slope", "iters", "seconds"];

impl BenchmarkReport {
    pub fn new(
        name: impl Into<String>,
        rows: Vec<ResolutionRow>,
        manifold_dim: usize,
    ) -> Result<Self> {
        let slope = if rows.len() >= 3 {
            let n: Vec<usize> = rows.iter().map(|r| r.n).collect();
            let e: Vec<f64> = rows.iter().map(|r| r.eps2).collect();
            Some(convergence_order(&n, &e, manifold_dim)?)
        } else {
            None
        };
        Ok(BenchmarkReport {
            name: name.into(),
            rows,
            slope,
        })
    }

    /// CSV with one line per resolution; the fitted slope repeats on each line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let slope = self.slope.map_or(String::new(), |s| format!("{s}"));
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.resolution.clone(),
                    r.n.to_string(),
                    format!("{}", r.h),
                    format!("{}", r.eps2),
                    slope.clone(),
                    r.iters.to_string(),
                    format!("{:.3}", r.seconds),
                ]
            })
            .collect();
        write_csv(out, &REPORT_HEADER, &rows)
    }
}

/// Final fields of one run, for checkpoint output.
#[derive(Clone, Debug)]
pub struct FieldOutput {
    pub label: String,
    pub cloud: PointCloud,
    pub fields: Vec<(String, Vec<f64>)>,
}

/// Point counts spaced geometrically from `first` to `last`.
pub fn geometric_levels(first: usize, last: usize, levels: usize) -> Result<Vec<usize>> {
    if levels == 0 || first == 0 || last < first {
        return Err(GfdmError::invalid(format!(
            "invalid level range {first}..{last} with {levels} levels"
        )));
    }
    if levels == 1 {
        return Ok(vec![first]);
    }
    let ratio = (last as f64 / first as f64).powf(1.0 / (levels - 1) as f64);
    Ok((0..levels)
        .map(|l| (first as f64 * ratio.powi(l as i32)).round() as usize)
        .collect())
}

pub(crate) struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch(Instant::now())
    }

    pub fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
