//! Cahn–Hilliard phase separation on the torus from small random data.

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::heat::TORUS;
use super::{FieldOutput, MethodOptions, Stopwatch};
use crate::error::{GfdmError, Result};
use crate::sparse::CsrMatrix;
use crate::timeint::{
    implicit_euler_coupled, CahnHilliardParams, CoupledSolve, PhaseMonitor, StepReport, TimeGrid,
};

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseConfig {
    pub method: MethodOptions,
    pub n_target: usize,
    pub params: CahnHilliardParams,
    pub dt: f64,
    pub steps: usize,
    /// Initial data is uniform in `[-noise, noise]`.
    pub noise: f64,
    pub solve: CoupledSolve,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            method: MethodOptions::default(),
            n_target: 4000,
            params: CahnHilliardParams { pe: 1.0, cn: 0.5 },
            dt: 1e-4,
            steps: 500,
            noise: 0.05,
            solve: CoupledSolve::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseReport {
    pub n: usize,
    /// Entry 0 is the initial state, then one per step.
    pub monitors: Vec<PhaseMonitor>,
    pub steps: StepReport,
    pub seconds: f64,
}

impl PhaseReport {
    /// Smallest and largest nodal value over the whole run.
    pub fn range(&self) -> (f64, f64) {
        self.monitors
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| {
                (lo.min(m.min), hi.max(m.max))
            })
    }

    /// Largest `|mass - mass_0|`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.monitors.first().map_or(0.0, |m| m.mass);
        self.monitors
            .iter()
            .map(|m| (m.mass - m0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest step-to-step energy increase relative to the initial energy,
    /// over monitors from `skip` onwards.
    pub fn max_relative_energy_increase(&self, skip: usize) -> f64 {
        let e0 = self
            .monitors
            .first()
            .map_or(1.0, |m| m.energy.abs().max(f64::MIN_POSITIVE));
        self.monitors
            .get(skip..)
            .unwrap_or(&[])
            .windows(2)
            .map(|w| (w[1].energy - w[0].energy) / e0)
            .fold(0.0, f64::max)
    }
}

pub fn run_cahn_hilliard(cfg: &PhaseConfig) -> Result<(PhaseReport, FieldOutput)> {
    if cfg.steps == 0 || !(cfg.dt > 0.0) {
        return Err(GfdmError::invalid(
            "the run needs a positive step and step count",
        ));
    }
    let clock = Stopwatch::start();
    let cloud = cfg.method.cloud_with_count(&TORUS, cfg.n_target)?;
    let disc = cfg.method.discretize(cloud)?;
    let builder = disc.builder()?;
    let lap = CsrMatrix::from_stencil(&builder.laplacian(&cfg.method.laplacian)?)?;
    let gradient = builder.surface_gradient()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.method.seed);
    let f0: Vec<f64> = (0..disc.len())
        .map(|_| cfg.noise * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    let grid = TimeGrid::fixed(0.0, cfg.dt * cfg.steps as f64, cfg.dt)?;
    let run = implicit_euler_coupled(
        &lap,
        &gradient,
        &f0,
        cfg.params,
        &grid,
        cfg.solve,
        &cfg.method.solver,
        &mut |_, _, _| {},
    )?;
    let report = PhaseReport {
        n: disc.len(),
        monitors: run.monitors,
        steps: run.report,
        seconds: clock.seconds(),
    };
    let (lo, hi) = report.range();
    info!(
        "cahn-hilliard: N = {}, {} steps, range [{lo:.4}, {hi:.4}], mass drift {:.3e}, max iterations {}",
        report.n,
        grid.steps,
        report.mass_drift(),
        report.steps.max_iterations()
    );
    let fields = FieldOutput {
        label: "cahn_hilliard".into(),
        cloud: disc.cloud.clone(),
        fields: vec![("f".into(), run.f), ("mu".into(), run.mu)],
    };
    Ok((report, fields))
}
