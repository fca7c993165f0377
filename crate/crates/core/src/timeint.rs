//! Implicit time integrators: Crank–Nicolson, SDIRK2 and a coupled implicit
//! Euler step for the Cahn–Hilliard system.

use log::debug;

use crate::advection::UpwindScheme;
use crate::error::{GfdmError, Result};
use crate::sparse::{bicgstab, CsrMatrix, SolveStats, SolverOptions};
use crate::stencils::StencilSet;

/// `gamma = 1 - sqrt(2)/2` of the two-stage, L-stable SDIRK2 tableau.
pub const SDIRK2_GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepPolicy {
    Fixed(f64),
    /// `dt = c * h^power`.
    HScaled {
        c: f64,
        power: f64,
    },
}

/// Uniform time grid; `dt` is shrunk slightly so that an integer number of
/// steps lands on `t_end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, policy: StepPolicy, h: f64) -> Result<Self> {
        let dt = match policy {
            StepPolicy::Fixed(dt) => dt,
            StepPolicy::HScaled { c, power } => {
                if !(h > 0.0) {
                    return Err(GfdmError::invalid(format!(
                        "h must be positive for an h-scaled step, got {h}"
                    )));
                }
                c * h.powf(power)
            }
        };
        Self::fixed(t0, t_end, dt)
    }

    pub fn fixed(t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(GfdmError::invalid(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if !(t_end >= t0) || !t0.is_finite() || !t_end.is_finite() {
            return Err(GfdmError::invalid(format!(
                "invalid time interval [{t0}, {t_end}]"
            )));
        }
        let span = t_end - t0;
        let steps = ((span / dt) - 1e-9).ceil().max(0.0) as usize;
        let dt = if steps == 0 { dt } else { span / steps as f64 };
        Ok(TimeGrid {
            t0,
            t_end,
            dt,
            steps,
        })
    }

    /// Time after `n` steps.
    pub fn time(&self, n: usize) -> f64 {
        if n >= self.steps {
            self.t_end
        } else {
            self.t0 + n as f64 * self.dt
        }
    }
}

/// Solver iteration counts over a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub iterations: Vec<usize>,
}

impl StepReport {
    pub fn steps(&self) -> usize {
        self.iterations.len()
    }

    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }
}

/// Called after every step with the step index (1-based), time and state.
pub type Observer<'a> = dyn FnMut(usize, f64, &[f64]) + 'a;

fn solve_step(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    opts: &SolverOptions,
    step: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    bicgstab(a, b, Some(x0), opts).map_err(|e| GfdmError::SolverFailure {
        step,
        source: Box::new(e),
    })
}

fn check_square(l: &CsrMatrix, n: usize) -> Result<()> {
    if l.nrows() != l.ncols() {
        return Err(GfdmError::ShapeMismatch {
            expected: l.nrows(),
            found: l.ncols(),
        });
    }
    if l.nrows() != n {
        return Err(GfdmError::ShapeMismatch {
            expected: l.nrows(),
            found: n,
        });
    }
    Ok(())
}

/// Crank–Nicolson for `u' = L u + f(t)`:
/// `(I - dt/2 L) u^{n+1} = (I + dt/2 L) u^n + dt f(t^{n+1/2})`.
pub fn crank_nicolson(
    l: &CsrMatrix,
    u0: &[f64],
    grid: &TimeGrid,
    forcing: Option<&(dyn Fn(f64) -> Vec<f64> + Sync)>,
    opts: &SolverOptions,
    observer: &mut Observer<'_>,
) -> Result<(Vec<f64>, StepReport)> {
    let n = u0.len();
    check_square(l, n)?;
    let id = CsrMatrix::identity(n);
    let half = 0.5 * grid.dt;
    let lhs = CsrMatrix::linear_combination(&[(1.0, &id), (-half, l)])?;
    let explicit = CsrMatrix::linear_combination(&[(1.0, &id), (half, l)])?;
    let mut u = u0.to_vec();
    let mut report = StepReport::default();
    for step in 1..=grid.steps {
        let mut rhs = explicit.matvec(&u);
        if let Some(f) = forcing {
            let t_mid = grid.time(step - 1) + half;
            let fv = f(t_mid);
            if fv.len() != n {
                return Err(GfdmError::ShapeMismatch {
                    expected: n,
                    found: fv.len(),
                });
            }
            for (r, v) in rhs.iter_mut().zip(fv) {
                *r += grid.dt * v;
            }
        }
        let (next, stats) = solve_step(&lhs, &rhs, &u, opts, step)?;
        report.iterations.push(stats.iterations);
        u = next;
        observer(step, grid.time(step), &u);
    }
    debug!(
        "crank-nicolson: {} steps, at most {} iterations",
        report.steps(),
        report.max_iterations()
    );
    Ok((u, report))
}

/// Right-hand side `f(u)` that is linear once frozen at a state.
pub trait LinearizedRhs {
    fn len(&self) -> usize;

    /// `A` with `f(v) = A v` for the operator frozen at `u`.
    fn linearize(&self, u: &[f64]) -> Result<CsrMatrix>;
}

impl LinearizedRhs for CsrMatrix {
    fn len(&self) -> usize {
        self.nrows()
    }

    fn linearize(&self, _u: &[f64]) -> Result<CsrMatrix> {
        Ok(self.clone())
    }
}

impl LinearizedRhs for UpwindScheme {
    fn len(&self) -> usize {
        UpwindScheme::len(self)
    }

    fn linearize(&self, u: &[f64]) -> Result<CsrMatrix> {
        UpwindScheme::linearize(self, u)
    }
}

/// Two-stage SDIRK2 with `a = [[g, 0], [1 - g, g]]`, `b = (1 - g, g)`. Each
/// stage freezes the operator at its explicit predictor and solves one linear
/// system; the last stage is the new state.
pub fn sdirk2(
    rhs: &dyn LinearizedRhs,
    u0: &[f64],
    grid: &TimeGrid,
    opts: &SolverOptions,
    observer: &mut Observer<'_>,
) -> Result<(Vec<f64>, StepReport)> {
    let n = u0.len();
    if rhs.len() != n {
        return Err(GfdmError::ShapeMismatch {
            expected: rhs.len(),
            found: n,
        });
    }
    let id = CsrMatrix::identity(n);
    let g = SDIRK2_GAMMA;
    let gdt = g * grid.dt;
    let mut u = u0.to_vec();
    let mut report = StepReport::default();
    for step in 1..=grid.steps {
        let a1 = rhs.linearize(&u)?;
        check_square(&a1, n)?;
        let m1 = CsrMatrix::linear_combination(&[(1.0, &id), (-gdt, &a1)])?;
        let (u1, s1) = solve_step(&m1, &u, &u, opts, step)?;
        let k1 = a1.matvec(&u1);
        let predictor: Vec<f64> = u
            .iter()
            .zip(&k1)
            .map(|(a, k)| a + grid.dt * (1.0 - g) * k)
            .collect();
        let a2 = rhs.linearize(&predictor)?;
        let m2 = CsrMatrix::linear_combination(&[(1.0, &id), (-gdt, &a2)])?;
        let (u2, s2) = solve_step(&m2, &predictor, &u1, opts, step)?;
        report.iterations.push(s1.iterations.max(s2.iterations));
        u = u2;
        observer(step, grid.time(step), &u);
    }
    debug!(
        "sdirk2: {} steps, at most {} iterations per stage",
        report.steps(),
        report.max_iterations()
    );
    Ok((u, report))
}

/// Double-well potential `g(f) = f^4/4 - f^2/2`.
pub fn double_well(f: f64) -> f64 {
    0.25 * f.powi(4) - 0.5 * f * f
}

/// `g'(f) = f^3 - f`.
pub fn double_well_derivative(f: f64) -> f64 {
    f * f * f - f
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CahnHilliardParams {
    /// Peclet number.
    pub pe: f64,
    /// Cahn number.
    pub cn: f64,
}

/// Monitors recorded after each Cahn–Hilliard step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseMonitor {
    pub t: f64,
    /// `sum_i f_i`.
    pub mass: f64,
    /// `sum_i g(f_i) + Cn^2/2 |grad_M f|_i^2`.
    pub energy: f64,
    pub min: f64,
    pub max: f64,
}

impl PhaseMonitor {
    pub fn measure(t: f64, f: &[f64], gradient: &[StencilSet], cn: f64) -> Self {
        let comps: Vec<Vec<f64>> = gradient.iter().map(|g| g.apply(f)).collect();
        let energy = (0..f.len())
            .map(|i| {
                double_well(f[i]) + 0.5 * cn * cn * comps.iter().map(|c| c[i] * c[i]).sum::<f64>()
            })
            .sum();
        PhaseMonitor {
            t,
            mass: f.iter().sum(),
            energy,
            min: f.iter().cloned().fold(f64::INFINITY, f64::min),
            max: f.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Result of a coupled Cahn–Hilliard run.
#[derive(Clone, Debug)]
pub struct PhaseRun {
    pub f: Vec<f64>,
    pub mu: Vec<f64>,
    /// Entry 0 is the initial state.
    pub monitors: Vec<PhaseMonitor>,
    pub report: StepReport,
}

/// Linear solve used by each Cahn–Hilliard step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CoupledSolve {
    /// BiCGSTAB on the assembled `2N x 2N` block system.
    Block,
    /// Eliminate `mu` exactly and run BiCGSTAB on
    /// `(I + (dt Cn^2 / Pe) L^2) f = f^n + (dt / Pe) L g'(f^n)`, then
    /// recover `mu = g'(f^n) - Cn^2 L f`. Same solution as `Block`.
    #[default]
    Eliminated,
}

/// Implicit Euler for `f_t = (1/Pe) lap mu`, `mu = g'(f) - Cn^2 lap f` with the
/// nonlinearity lagged: each step solves the coupled system
/// `[[I, -(dt/Pe) L], [Cn^2 L, I]] [f; mu] = [f^n; g'(f^n)]`.
#[allow(clippy::too_many_arguments)]
pub fn implicit_euler_coupled(
    lap: &CsrMatrix,
    gradient: &[StencilSet],
    f0: &[f64],
    params: CahnHilliardParams,
    grid: &TimeGrid,
    solve: CoupledSolve,
    opts: &SolverOptions,
    observer: &mut Observer<'_>,
) -> Result<PhaseRun> {
    let n = f0.len();
    check_square(lap, n)?;
    let CahnHilliardParams { pe, cn } = params;
    if !(pe > 0.0 && cn > 0.0) {
        return Err(GfdmError::invalid(format!(
            "Pe and Cn must be positive, got {pe} and {cn}"
        )));
    }
    let a = grid.dt / pe;
    let b = cn * cn;
    let id = CsrMatrix::identity(n);
    let system = match solve {
        CoupledSolve::Block => {
            let upper = CsrMatrix::linear_combination(&[(-a, lap)])?;
            let lower = CsrMatrix::linear_combination(&[(b, lap)])?;
            CsrMatrix::block(&[vec![Some(&id), Some(&upper)], vec![Some(&lower), Some(&id)]])?
        }
        CoupledSolve::Eliminated => {
            CsrMatrix::linear_combination(&[(1.0, &id), (a * b, &lap.matmul(lap)?)])?
        }
    };

    let mut f = f0.to_vec();
    let chemical = |f: &[f64], lf: &[f64]| -> Vec<f64> {
        f.iter()
            .zip(lf)
            .map(|(&v, l)| double_well_derivative(v) - b * l)
            .collect()
    };
    let mut mu = chemical(&f, &lap.matvec(&f));
    let mut monitors = vec![PhaseMonitor::measure(grid.t0, &f, gradient, cn)];
    let mut report = StepReport::default();
    for step in 1..=grid.steps {
        let gp: Vec<f64> = f.iter().map(|&v| double_well_derivative(v)).collect();
        match solve {
            CoupledSolve::Block => {
                let mut rhs = f.clone();
                rhs.extend_from_slice(&gp);
                let mut guess = f.clone();
                guess.extend_from_slice(&mu);
                let (x, stats) = solve_step(&system, &rhs, &guess, opts, step)?;
                report.iterations.push(stats.iterations);
                f = x[..n].to_vec();
                mu = x[n..].to_vec();
            }
            CoupledSolve::Eliminated => {
                let lg = lap.matvec(&gp);
                let rhs: Vec<f64> = f.iter().zip(&lg).map(|(v, l)| v + a * l).collect();
                let (next, stats) = solve_step(&system, &rhs, &f, opts, step)?;
                report.iterations.push(stats.iterations);
                let lf = lap.matvec(&next);
                mu = gp.iter().zip(&lf).map(|(g, l)| g - b * l).collect();
                f = next;
            }
        }
        let t = grid.time(step);
        monitors.push(PhaseMonitor::measure(t, &f, gradient, cn));
        observer(step, t, &f);
    }
    Ok(PhaseRun {
        f,
        mu,
        monitors,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_lands_on_the_end_time() {
        let g = TimeGrid::fixed(0.0, 0.3, 0.07).unwrap();
        assert_eq!(g.steps, 5);
        assert!((g.t0 + g.steps as f64 * g.dt - 0.3).abs() < 1e-12);
        let g = TimeGrid::fixed(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.steps, 10);
        let g = TimeGrid::new(0.0, 1.0, StepPolicy::HScaled { c: 0.1, power: 2.0 }, 0.5).unwrap();
        assert!((g.dt - 0.025).abs() < 1e-15);
        assert!(TimeGrid::fixed(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::fixed(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn double_well_stationary_points() {
        for f in [-1.0, 0.0, 1.0] {
            assert_eq!(double_well_derivative(f), 0.0);
        }
        assert_eq!(double_well(1.0), -0.25);
    }
}
