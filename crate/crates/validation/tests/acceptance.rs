//! Acceptance suite: one PASS or FAIL line per criterion.
//!
//! Runs without the libtest harness and exits with a failure status when any
//! criterion fails. Set `GFDM_LONG_RUNS=1` to add the N ~ 52000 cone run.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use gfdm::advection::Reconstruction;
use gfdm::problems::{
    run_advection_cone, run_cahn_hilliard, run_four_strip, run_heat_sphere, run_torus_forced,
    AdvectionConfig, AdvectionRow, FourStripConfig, FourStripReport, HeatConfig, MethodOptions,
    PhaseConfig, FOUR_STRIP_ETA, FOUR_STRIP_SURFACE, TORUS,
};
use gfdm::projection::{ProjectedNeighborhood, ProjectionMode};
use gfdm::sparse::{CsrMatrix, SolverOptions};
use gfdm::stencils::{
    advection_stencil, build_wls, DiffusionField, DiffusionOptions, LaplacianOptions,
    MonomialBasis, StencilBuilder, StencilOptions, Target,
};
use gfdm::timeint::{sdirk2, TimeGrid};
use gfdm::{Discretization, Result, Surface};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Verdict::new(false, format!("error: {e}"))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("stencil consistency", consistency),
        ("least-squares optimality", kkt_optimality),
        ("heat on the sphere", heat_sphere),
        ("torus forced diffusion", torus),
        ("four strips", four_strip),
        ("advection on the cone", cone),
        ("jump-condition exactness", jump_exactness),
        ("optimized Laplacian", optimized_laplacian),
        ("Cahn-Hilliard", cahn_hilliard),
        ("SDIRK2 order", sdirk2_order),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {status} {name} ({:.1} s): {}",
            k + 1,
            clock.elapsed().as_secs_f64(),
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn sample(surface: &Surface, n: usize, seed: u64) -> Result<Discretization> {
    let method = MethodOptions {
        seed,
        ..Default::default()
    };
    method.discretize(method.cloud_with_count(surface, n)?)
}

fn four_strip_kappa(disc: &Discretization) -> Vec<f64> {
    disc.cloud
        .points()
        .map(|p| FOUR_STRIP_ETA[((p[0] / PI).floor().max(0.0) as usize).min(3)])
        .collect()
}

/// Largest residual over every operator on one cloud.
fn operator_residuals(surface: &Surface, seed: u64) -> Result<Vec<(String, f64)>> {
    let disc = sample(surface, 2000, seed)?;
    let b = disc.builder()?;
    let n = disc.len();
    let dim = disc.frames[0].embedding_dim();
    let mut out = Vec::new();

    let tangent = b.tangent_gradient()?;
    for (a, t) in tangent.iter().enumerate() {
        out.push((
            format!("tangent derivative {a}"),
            b.consistency_residual(t, |_| Target::TangentDerivative(a)),
        ));
    }
    let grad = b.surface_gradient()?;
    for (d, g) in grad.iter().enumerate() {
        let mut e = vec![0.0; dim];
        e[d] = 1.0;
        out.push((
            format!("surface gradient {d}"),
            b.consistency_residual(g, |_| Target::Directional(e.clone())),
        ));
    }
    for optimize in [false, true] {
        let lap = b.laplacian(&LaplacianOptions {
            optimize,
            center_value: None,
        })?;
        out.push((
            format!("laplacian (optimized {optimize})"),
            b.consistency_residual(&lap, |_| Target::Laplacian),
        ));
    }

    // rotation about z, projected onto each tangent plane
    let velocity: Vec<f64> = disc
        .cloud
        .points()
        .zip(&disc.frames)
        .flat_map(|(p, f)| {
            let v = DVector::from_vec(vec![-p[1], p[0], 0.0]);
            (f.projector() * v).iter().copied().collect::<Vec<_>>()
        })
        .collect();
    let adv = advection_stencil(&grad, &velocity)?;
    out.push((
        "directional".into(),
        b.consistency_residual(&adv, |i| {
            Target::Directional(velocity[i * dim..(i + 1) * dim].to_vec())
        }),
    ));

    let smooth: Vec<f64> = disc
        .cloud
        .points()
        .map(|p| 2.0 + (p[0] + 0.5 * p[1]).sin() * p[2].cos())
        .collect();
    let d = b.diffusion(
        &DiffusionField::Scalar(smooth.clone()),
        &DiffusionOptions::default(),
    )?;
    out.push((
        "scalar diffusion".into(),
        b.consistency_residual(&d.stencil, |i| {
            b.scalar_diffusion_target(i, smooth[i], &d.grad_log_kappa[i * dim..(i + 1) * dim])
        }),
    ));

    let tensors: Vec<DMatrix<f64>> = disc
        .cloud
        .points()
        .map(|p| {
            let a = DVector::from_vec(vec![1.0, p[0], p[1] - p[2]]);
            DMatrix::identity(dim, dim) + &a * a.transpose() * 0.5
        })
        .collect();
    let d = b.diffusion(
        &DiffusionField::Tensor(tensors.clone()),
        &DiffusionOptions::default(),
    )?;
    let k = disc.cloud.manifold_dim();
    out.push((
        "tensor diffusion".into(),
        b.consistency_residual(&d.stencil, |i| {
            let r = disc.frames[i].rotation();
            let rotated = r * &tensors[i] * r.transpose();
            Target::TensorDiffusion(rotated.view((0, 0), (k, k)).into_owned())
        }),
    ));

    if matches!(surface, Surface::WavePatch { .. }) {
        let kappa = four_strip_kappa(&disc);
        let d = b.diffusion(
            &DiffusionField::Scalar(kappa.clone()),
            &DiffusionOptions {
                jump: true,
                ..Default::default()
            },
        )?;
        out.push((
            "jump diffusion".into(),
            b.consistency_residual(&d.stencil, |i| {
                b.scalar_diffusion_target(i, kappa[i], &d.grad_log_kappa[i * dim..(i + 1) * dim])
            }),
        ));
    }
    debug_assert_eq!(n, disc.len());
    Ok(out)
}

fn consistency() -> Verdict {
    let clock = Instant::now();
    let surfaces = [
        ("sphere", Surface::Sphere { radius: 1.0 }),
        ("torus", TORUS),
        ("wave", FOUR_STRIP_SURFACE),
    ];
    let mut worst = (String::new(), 0.0f64);
    for (seed, (name, s)) in surfaces.iter().enumerate() {
        match operator_residuals(s, seed as u64 + 11) {
            Ok(rows) => {
                for (op, r) in rows {
                    if !(r <= worst.1) {
                        worst = (format!("{name} {op}"), r);
                    }
                }
            }
            Err(e) => return Verdict::error(format!("{name}: {e}")),
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    Verdict::new(
        worst.1 < 1e-9 && secs < 10.0,
        format!(
            "worst residual {:.2e} ({}), limit 1e-9; {secs:.1} s, limit 10 s",
            worst.1, worst.0
        ),
    )
}

/// Minimizes `sum (c / w)^2` subject to `M^T c = b` through the KKT system.
fn kkt(weights: &[f64], m: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let (rows, cols) = m.shape();
    let mut k = DMatrix::zeros(rows + cols, rows + cols);
    for j in 0..rows {
        k[(j, j)] = 2.0 / (weights[j] * weights[j]);
    }
    k.view_mut((0, rows), (rows, cols)).copy_from(m);
    k.view_mut((rows, 0), (cols, rows))
        .copy_from(&m.transpose());
    let mut rhs = DVector::zeros(rows + cols);
    for a in 0..cols {
        rhs[rows + a] = b[a];
    }
    let sol = k.lu().solve(&rhs)?;
    Some(sol.iter().take(rows).copied().collect())
}

fn kkt_optimality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut cases, mut draws) = (0, 0);
    let mut worst = 0.0f64;
    while cases < 200 && draws < 100_000 {
        draws += 1;
        let k = rng.random_range(1..=2usize);
        let order = rng.random_range(1..=2usize);
        let basis = MonomialBasis::new(k, order).expect("basis");
        let size = rng.random_range(basis.len()..=8);
        let mut offsets = vec![vec![0.0; k]];
        for _ in 1..size {
            offsets.push((0..k).map(|_| rng.random_range(-1.0..1.0)).collect());
        }
        let d2: Vec<f64> = offsets
            .iter()
            .map(|o| o.iter().map(|x| x * x).sum())
            .collect();
        let h = d2.iter().fold(0.0f64, |a, b| a.max(*b)).sqrt();
        let pr = ProjectedNeighborhood {
            center: 0,
            members: (0..size).collect(),
            manifold_dim: k,
            tangential: offsets.concat(),
            normal: vec![0.0; size * (3 - k)],
            dist2: d2,
            smoothing: (0..size).map(|_| h * rng.random_range(0.5..1.5)).collect(),
            support_radius: h,
            mode: ProjectionMode::CentralNormal,
        };
        let wf = rng.random_range(0.5..8.0);
        let w = pr.weights(wf);
        let m = DMatrix::from_fn(size, basis.len(), |j, a| basis.eval(&offsets[j])[a]);
        let w2 = DMatrix::from_diagonal(&DVector::from_iterator(size, w.iter().map(|v| v * v)));
        let svd = (m.transpose() * w2 * &m).svd(false, false);
        if svd.singular_values.min() <= 1e-6 * svd.singular_values.max() {
            continue;
        }
        let targets: Vec<Vec<f64>> = (0..basis.len())
            .map(|_| {
                (0..basis.len())
                    .map(|_| rng.random_range(-5.0..5.0))
                    .collect()
            })
            .collect();
        let rows = match build_wls(&pr, &basis, wf, &targets) {
            Ok(r) => r,
            Err(e) => return Verdict::error(e),
        };
        for (b, row) in targets.iter().zip(&rows) {
            let Some(oracle) = kkt(&w, &m, b) else {
                return Verdict::error("singular KKT system");
            };
            let scale = oracle.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            for (x, y) in row.iter().zip(&oracle) {
                worst = worst.max((x - y).abs() / scale);
            }
        }
        cases += 1;
    }
    Verdict::new(
        cases == 200 && worst < 1e-8,
        format!("{cases} neighborhoods, worst relative deviation {worst:.2e}, limit 1e-8"),
    )
}

fn heat_sphere() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut seconds = 0.0;
    for (order, want, tol) in [(2, 2.0, 0.4), (3, 3.0, 0.5)] {
        let mut cfg = HeatConfig::default();
        cfg.method.stencil.order = order;
        cfg.method.solver = SolverOptions {
            tol: 1e-10,
            ..Default::default()
        };
        let report = match run_heat_sphere(&cfg) {
            Ok((r, _)) => r,
            Err(e) => return Verdict::error(format!("order {order}: {e}")),
        };
        let slope = report.slope.unwrap_or(f64::NAN);
        let iters = report.rows.iter().map(|r| r.iters).max().unwrap_or(0);
        seconds += report.rows.iter().map(|r| r.seconds).sum::<f64>();
        let ok = (slope - want).abs() <= tol && iters <= 10;
        pass &= ok;
        let eps: Vec<String> = report
            .rows
            .iter()
            .map(|r| format!("{}:{:.2e}", r.n, r.eps2))
            .collect();
        parts.push(format!(
            "order {order} slope {slope:.3} (want {want} +- {tol}), max {iters} iterations, eps2 [{}]",
            eps.join(" ")
        ));
    }
    pass &= seconds < 600.0;
    parts.push(format!("{seconds:.0} s, limit 600 s"));
    Verdict::new(pass, parts.join("; "))
}

fn torus() -> Verdict {
    let mut reports = Vec::new();
    for projection in [
        ProjectionMode::CentralNormal,
        ProjectionMode::NeighborNormal,
    ] {
        let mut cfg = HeatConfig {
            levels: vec![4000, 8000, 16000],
            ..Default::default()
        };
        cfg.method.projection = projection;
        match run_torus_forced(&cfg) {
            Ok((r, _)) => reports.push(r),
            Err(e) => return Verdict::error(format!("{projection:?}: {e}")),
        }
    }
    let slope = reports[0].slope.unwrap_or(f64::NAN);
    let ordered = reports[0]
        .rows
        .iter()
        .zip(&reports[1].rows)
        .all(|(c, n)| c.n == n.n && c.eps2 < n.eps2);
    let seconds: f64 = reports
        .iter()
        .flat_map(|r| r.rows.iter().map(|x| x.seconds))
        .sum();
    let pairs: Vec<String> = reports[0]
        .rows
        .iter()
        .zip(&reports[1].rows)
        .map(|(c, n)| format!("{}:{:.2e}<{:.2e}", c.n, c.eps2, n.eps2))
        .collect();
    Verdict::new(
        (slope - 2.0).abs() <= 0.4 && ordered && seconds < 900.0,
        format!(
            "central slope {slope:.3} (want 2 +- 0.4), central < neighbor at each N: {ordered} [{}]; {seconds:.0} s, limit 900 s",
            pairs.join(" ")
        ),
    )
}

fn four_strip() -> Verdict {
    let run = |jump: bool, eta: [f64; 4]| -> Result<FourStripReport> {
        let mut cfg = FourStripConfig {
            eta,
            ..Default::default()
        };
        cfg.diffusion.jump = jump;
        run_four_strip(&cfg).map(|(r, _)| r)
    };
    let homogeneous = match run(false, [1.0; 4]) {
        Ok(r) => r,
        Err(e) => return Verdict::error(format!("homogeneous run: {e}")),
    };
    let on = run(true, FOUR_STRIP_ETA);
    let off = run(false, FOUR_STRIP_ETA);
    let describe = |r: &Result<FourStripReport>| match r {
        Ok(r) => format!(
            "slope error {:.3}, spread {:.2e}, oscillation {:.2e}, {} iterations, {:.0} s",
            r.worst_slope_error(),
            r.y_spread,
            r.oscillation,
            r.iterations,
            r.seconds
        ),
        Err(e) => format!("error: {e}"),
    };
    let detail = format!(
        "jump on: {}; jump off: {}; homogeneous spread {:.2e}",
        describe(&on),
        describe(&off),
        homogeneous.y_spread
    );
    let pass = match (&on, &off) {
        (Ok(on), Ok(off)) => {
            on.worst_slope_error() <= 0.05
                && on.y_spread < 50.0 * homogeneous.y_spread
                && off.oscillation > on.oscillation
                && on.seconds < 300.0
        }
        _ => false,
    };
    Verdict::new(pass, detail)
}

fn cone_rows(mode: Reconstruction, h: Vec<f64>) -> Result<Vec<AdvectionRow>> {
    let cfg = AdvectionConfig {
        mode,
        h,
        ..Default::default()
    };
    run_advection_cone(&cfg).map(|(rows, _)| rows)
}

fn cone() -> Verdict {
    let peaks = (
        cone_rows(Reconstruction::MusclSuperbee, vec![0.6, 0.3, 0.15]),
        cone_rows(Reconstruction::PureUpwind, vec![0.3]),
    );
    let (muscl, upwind) = match peaks {
        (Ok(m), Ok(u)) => (m, u),
        (Err(e), _) | (_, Err(e)) => return Verdict::error(e),
    };
    let mid = &muscl[1];
    let pm = mid.peak;
    let pu = upwind[0].peak;
    let eps: Vec<f64> = muscl.iter().map(|r| r.resolution.eps2).collect();
    let monotone = eps.windows(2).all(|w| w[1] < w[0]);
    let mut pass = pm > 0.85 && pm > pu + 0.2 && monotone;
    let mut detail = format!(
        "h = 0.3 (N = {}): peak muscl {pm:.3}, upwind {pu:.3}, initial {:.3}; muscl eps2 over h 0.6/0.3/0.15 {:.3e} / {:.3e} / {:.3e}, decreasing: {monotone}",
        mid.resolution.n, mid.initial_peak, eps[0], eps[1], eps[2]
    );
    if std::env::var("GFDM_LONG_RUNS").is_ok_and(|v| v == "1") {
        // spacing 0.3 h gives about 52000 points on the cone
        let long = (
            cone_rows(Reconstruction::MusclSuperbee, vec![0.14]),
            cone_rows(Reconstruction::PureUpwind, vec![0.14]),
        );
        match long {
            (Ok(m), Ok(u)) => {
                let (a, b) = (m[0].peak, u[0].peak);
                pass &= (a - 0.97).abs() <= 0.05 && (b - 0.36).abs() <= 0.05;
                detail.push_str(&format!(
                    "; long run N = {}: peaks {a:.3} / {b:.3} (want 0.97 / 0.36 +- 0.05)",
                    m[0].resolution.n
                ));
            }
            (Err(e), _) | (_, Err(e)) => return Verdict::error(format!("long run: {e}")),
        }
    } else {
        detail.push_str("; long run skipped (GFDM_LONG_RUNS=1 enables it)");
    }
    Verdict::new(pass, detail)
}

fn jump_exactness() -> Verdict {
    let run = || -> Result<(usize, f64)> {
        let disc = sample(&FOUR_STRIP_SURFACE, 14_000, 1)?;
        let kappa = four_strip_kappa(&disc);
        let d = disc.builder()?.diffusion(
            &DiffusionField::Scalar(kappa.clone()),
            &DiffusionOptions {
                jump: true,
                ..Default::default()
            },
        )?;
        let far: Vec<usize> = (0..disc.len())
            .filter(|&i| {
                disc.neighborhoods[i]
                    .members
                    .iter()
                    .all(|&j| kappa[j] == kappa[i])
            })
            .collect();
        let worst = far.iter().map(|&i| d.jump_residual[i]).fold(0.0, f64::max);
        Ok((far.len(), worst))
    };
    match run() {
        Ok((rows, worst)) => Verdict::new(
            rows > 0 && worst < 1e-9,
            format!(
                "largest residual {worst:.2e} over {rows} rows away from interfaces, limit 1e-9"
            ),
        ),
        Err(e) => Verdict::error(e),
    }
}

fn optimized_laplacian() -> Verdict {
    let run = |wf: f64| -> Result<(usize, usize, f64)> {
        let disc = sample(&TORUS, 2000, 5)?;
        let b = StencilBuilder::new(
            &disc.projections,
            &disc.frames,
            &StencilOptions {
                weight_factor: wf,
                ..Default::default()
            },
        )?;
        let plain = b.laplacian(&LaplacianOptions::default())?;
        let opt = b.laplacian(&LaplacianOptions {
            optimize: true,
            center_value: None,
        })?;
        let g = |row: &[f64], c: usize| row.iter().map(|x| x * x).sum::<f64>() / row[c].powi(2);
        let mut worse = 0;
        for i in 0..disc.len() {
            let (cols, _) = plain.row(i);
            let c = cols.iter().position(|&j| j == i).expect("center column");
            if g(opt.row(i).1, c) > g(plain.row(i).1, c) + 1e-12 {
                worse += 1;
            }
        }
        let res = b
            .consistency_residual(&opt, |_| Target::Laplacian)
            .max(b.consistency_residual(&plain, |_| Target::Laplacian));
        Ok((disc.len(), worse, res))
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for wf in [2.0, 6.0] {
        match run(wf) {
            Ok((n, worse, res)) => {
                pass &= worse == 0 && res < 1e-9;
                parts.push(format!(
                    "W_F {wf}: {worse} of {n} points with larger g, residual {res:.2e}"
                ));
            }
            Err(e) => return Verdict::error(e),
        }
    }
    Verdict::new(pass, parts.join("; "))
}

fn cahn_hilliard() -> Verdict {
    let cfg = PhaseConfig::default();
    let report = match run_cahn_hilliard(&cfg) {
        Ok((r, _)) => r,
        Err(e) => return Verdict::error(e),
    };
    let (lo, hi) = report.range();
    let skip = cfg.steps / 5;
    let rise = report.max_relative_energy_increase(skip);
    let drift = report.mass_drift();
    let limit = 0.01 * report.n as f64;
    let steps = report.monitors.len() - 1;
    Verdict::new(
        lo >= -1.1 && hi <= 1.1 && rise <= 0.0 && drift < limit && steps == cfg.steps,
        format!(
            "range [{lo:.3}, {hi:.3}], largest relative energy rise after step {skip}: {rise:.2e}, mass drift {drift:.2e} (limit {limit:.1}), {steps} steps"
        ),
    )
}

fn sdirk2_order() -> Verdict {
    let a = CsrMatrix::from_triplets(1, 1, &[(0, 0, -1.0)]).expect("scalar operator");
    let opts = SolverOptions {
        tol: 1e-14,
        ..Default::default()
    };
    let mut errs = Vec::new();
    for dt in [0.1, 0.05, 0.025, 0.0125] {
        let grid = TimeGrid::fixed(0.0, 1.0, dt).expect("grid");
        match sdirk2(&a, &[1.0], &grid, &opts, &mut |_, _, _| {}) {
            Ok((u, _)) => errs.push((u[0] - (-1.0f64).exp()).abs()),
            Err(e) => return Verdict::error(e),
        }
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Verdict::new(
        orders.iter().all(|p| (p - 2.0).abs() <= 0.1),
        format!(
            "orders {}",
            orders
                .iter()
                .map(|p| format!("{p:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}
