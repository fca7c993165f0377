//! Subcommand implementations.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use gfdm::io::{write_csv, write_vtk};
use gfdm::pointcloud::{read_cloud, sample_surface, write_cloud, SPACING_PER_SMOOTHING_LENGTH};
use gfdm::problems::{
    advection_report, geometric_levels, run_advection_cone, run_cahn_hilliard, run_four_strip,
    run_heat_sphere, run_torus_forced, AdvectionConfig, AdvectionRow, BenchmarkReport, FieldOutput,
    FourStripConfig, FourStripReport, HeatConfig, MethodOptions, PhaseConfig, ResolutionRow, CONE,
    FOUR_STRIP_ETA, FOUR_STRIP_SURFACE, TORUS,
};
use gfdm::stencils::{
    DiffusionField, DiffusionOptions, LaplacianOptions, StencilBuilder, StencilSet, Target,
};
use gfdm::timeint::StepPolicy;
use gfdm::{frames::NormalSource, GfdmError, PointCloud, Surface};
use log::info;
use rayon::prelude::*;

use crate::args::{
    BenchArgs, Benchmark, CommonArgs, GenerateArgs, Geometry, GeometryArgs, JumpChoice, KappaField,
    MethodArgs, Mode, Operator, StencilDumpArgs,
};
use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] GfdmError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} runs failed")]
    RunsFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => core_code(e),
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::RunsFailed { .. } => "runs_failed",
        }
    }

    /// One `key=value` line for scripts: `gfdm-error code=<code> message="<text>"`.
    pub fn machine_line(&self) -> String {
        format!(
            "gfdm-error code={} message={:?}",
            self.code(),
            self.to_string()
        )
    }
}

fn core_code(e: &GfdmError) -> &'static str {
    match e {
        GfdmError::EmptyCloud => "empty_cloud",
        GfdmError::InvalidParameter(_) => "invalid_parameter",
        GfdmError::InsufficientNeighbors { .. } => "insufficient_neighbors",
        GfdmError::DegenerateNeighborhood { .. } => "degenerate_neighborhood",
        GfdmError::NonTransversal { .. } => "non_transversal",
        GfdmError::SingularSystem { .. } => "singular_system",
        GfdmError::NonSpd { .. } => "non_spd",
        GfdmError::UncoveredBoundaryPoint(_) => "uncovered_boundary_point",
        GfdmError::DuplicateBoundaryCondition(_) => "duplicate_boundary_condition",
        GfdmError::ShapeMismatch { .. } => "shape_mismatch",
        GfdmError::Breakdown { .. } => "solver_breakdown",
        GfdmError::MaxIterExceeded { .. } => "max_iter_exceeded",
        GfdmError::SolverFailure { .. } => "solver_failure",
        GfdmError::Parse { .. } => "parse",
        GfdmError::Io(_) => "io",
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Output directory holding the echoed run file.
struct Output {
    dir: PathBuf,
}

impl Output {
    fn create(dir: &Path, echo: &str) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let out = Output {
            dir: dir.to_path_buf(),
        };
        let path = out.path("run.conf");
        fs::write(&path, echo).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(out)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })
    }

    fn csv<S: AsRef<str>>(&self, name: &str, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
        write_csv(self.file(name)?, header, rows)?;
        info!("wrote {}", self.path(name).display());
        Ok(())
    }

    fn vtk(&self, f: &FieldOutput) -> Result<()> {
        let fields: Vec<(&str, &[f64])> = f
            .fields
            .iter()
            .map(|(n, v)| (n.as_str(), v.as_slice()))
            .collect();
        let name = format!("{}.vtk", f.label);
        write_vtk(self.file(&name)?, &f.label, &f.cloud, &fields)?;
        info!("wrote {}", self.path(&name).display());
        Ok(())
    }
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

fn surface_for(geometry: Geometry, shape: &GeometryArgs) -> Result<Surface> {
    let misplaced = |flag: &str| {
        CliError::Usage(format!(
            "--{flag} does not apply to {}",
            value_name(&geometry)
        ))
    };
    if !matches!(geometry, Geometry::Sphere | Geometry::Circle) && shape.radius.is_some() {
        return Err(misplaced("radius"));
    }
    if geometry != Geometry::Torus {
        if shape.major.is_some() {
            return Err(misplaced("major"));
        }
        if shape.minor.is_some() {
            return Err(misplaced("minor"));
        }
    }
    let surface = match geometry {
        Geometry::Sphere => Surface::Sphere {
            radius: shape.radius.unwrap_or(1.0),
        },
        Geometry::Circle => Surface::Circle {
            radius: shape.radius.unwrap_or(1.0),
        },
        Geometry::Torus => match TORUS {
            Surface::Torus { major, minor } => Surface::Torus {
                major: shape.major.unwrap_or(major),
                minor: shape.minor.unwrap_or(minor),
            },
            other => other,
        },
        Geometry::Cone => CONE,
        Geometry::Wave => FOUR_STRIP_SURFACE,
    };
    surface.validate()?;
    Ok(surface)
}

fn check_h(h: f64) -> Result<f64> {
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Err(CliError::Usage(format!(
            "--h must be positive and finite, got {h}"
        )))
    }
}

fn sample(surface: &Surface, h: f64, common: &CommonArgs) -> Result<PointCloud> {
    Ok(sample_surface(
        surface,
        SPACING_PER_SMOOTHING_LENGTH * check_h(h)?,
        common.jitter,
        common.seed,
    )?)
}

pub fn generate(a: &GenerateArgs, echo: &str) -> Result<()> {
    let surface = surface_for(a.geometry, &a.shape)?;
    let cloud = sample(&surface, a.h, &a.common)?;
    let out = Output::create(&a.common.out, echo)?;
    let name = format!("{}.cloud", value_name(&a.geometry));
    write_cloud(&cloud, out.file(&name)?)?;
    println!(
        "{}: {} points, {} on the boundary",
        out.path(&name).display(),
        cloud.len(),
        cloud.boundary_indices().len()
    );
    Ok(())
}

/// Library settings with the method flags applied over `base`.
fn method_options(m: &MethodArgs, common: &CommonArgs, base: MethodOptions) -> MethodOptions {
    let mut o = base;
    o.stencil.order = m.order as usize;
    o.stencil.weight_factor = m.wf;
    o.laplacian = LaplacianOptions {
        optimize: !m.plain,
        center_value: m.ac,
    };
    o.projection = m.projection.into();
    o.strategy = m.neighbors;
    if let Some(n) = m.normals {
        o.normals = n.into();
    }
    if let Some(t) = m.tol {
        o.solver.tol = t;
    }
    if let Some(k) = m.max_iter {
        o.solver.max_iter = k;
    }
    o.jitter = common.jitter;
    o.seed = common.seed;
    o
}

fn four_strip_kappa(cloud: &PointCloud) -> Vec<f64> {
    cloud
        .points()
        .map(|p| FOUR_STRIP_ETA[((p[0] / PI).floor().max(0.0) as usize).min(3)])
        .collect()
}

/// CSV records of `sets`, whose row `r` belongs to point `centers[r]`.
fn stencil_rows(sets: &[StencilSet], centers: &[usize]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for set in sets {
        let kind = set.kind.to_string();
        for (r, c) in centers.iter().enumerate() {
            let (cols, vals) = set.row(r);
            for (j, v) in cols.iter().zip(vals) {
                rows.push(vec![
                    kind.clone(),
                    c.to_string(),
                    j.to_string(),
                    v.to_string(),
                ]);
            }
        }
    }
    rows
}

pub fn stencil_dump(a: &StencilDumpArgs, echo: &str) -> Result<()> {
    if a.jump && a.op != Operator::Diffusion {
        return Err(CliError::Usage("--jump needs --op diffusion".into()));
    }
    let cloud = match (&a.cloud, a.geometry) {
        (Some(path), _) => {
            let file = File::open(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            read_cloud(BufReader::new(file))?
        }
        (None, Some(g)) => {
            let h =
                a.h.ok_or_else(|| CliError::Usage("--geometry needs --h".into()))?;
            sample(&surface_for(g, &a.shape)?, h, &a.common)?
        }
        (None, None) => return Err(CliError::Usage("give --cloud or --geometry".into())),
    };
    let mut method = method_options(&a.method, &a.common, MethodOptions::default());
    if a.method.normals.is_none() && cloud.surface().is_none() {
        method.normals = NormalSource::WeightedPca;
    }
    let disc = method.discretize(cloud)?;
    let centers: Vec<usize> = if a.points.is_empty() {
        (0..disc.len()).collect()
    } else {
        if a.op == Operator::Diffusion {
            return Err(CliError::Usage(
                "--points does not apply to diffusion rows".into(),
            ));
        }
        if let Some(&p) = a.points.iter().find(|&&p| p >= disc.len()) {
            return Err(CliError::Usage(format!(
                "point {p} is out of range for {} points",
                disc.len()
            )));
        }
        a.points.clone()
    };
    let projections: Vec<_> = centers
        .iter()
        .map(|&i| disc.projections[i].clone())
        .collect();
    let frames: Vec<_> = centers.iter().map(|&i| disc.frames[i].clone()).collect();
    let b = StencilBuilder::new(&projections, &frames, &method.stencil)?;
    let n = disc.cloud.embedding_dim();
    let out = Output::create(&a.common.out, echo)?;

    let (sets, residual) = match a.op {
        Operator::Grad => {
            let sets = b.surface_gradient()?;
            let r = sets
                .iter()
                .enumerate()
                .map(|(d, s)| {
                    let e: Vec<f64> = (0..n).map(|c| (c == d) as u8 as f64).collect();
                    b.consistency_residual(s, |_| Target::Directional(e.clone()))
                })
                .fold(0.0, f64::max);
            (sets, r)
        }
        Operator::TangentGrad => {
            let sets = b.tangent_gradient()?;
            let r = sets
                .iter()
                .enumerate()
                .map(|(d, s)| b.consistency_residual(s, |_| Target::TangentDerivative(d)))
                .fold(0.0, f64::max);
            (sets, r)
        }
        Operator::Laplacian | Operator::LaplacianOptimized => {
            let opts = LaplacianOptions {
                optimize: a.op == Operator::LaplacianOptimized,
                center_value: a.method.ac,
            };
            let set = b.laplacian(&opts)?;
            let r = b.consistency_residual(&set, |_| Target::Laplacian);
            (vec![set], r)
        }
        Operator::Diffusion => diffusion_dump(a, &disc.cloud, &disc.neighborhoods, &b, &out)?,
    };
    let rows = stencil_rows(&sets, &centers);
    out.csv(
        "stencils.csv",
        &["operator", "point", "neighbor", "coefficient"],
        &rows,
    )?;
    println!(
        "{}: {} coefficients over {} points",
        out.path("stencils.csv").display(),
        rows.len(),
        centers.len()
    );
    if a.check_consistency {
        println!("consistency residual ({}): {residual:e}", value_name(&a.op));
    }
    Ok(())
}

fn diffusion_dump(
    a: &StencilDumpArgs,
    cloud: &PointCloud,
    neighborhoods: &[gfdm::Neighborhood],
    b: &StencilBuilder<'_>,
    out: &Output,
) -> Result<(Vec<StencilSet>, f64)> {
    let kappa = match a.kappa {
        KappaField::FourStrip => four_strip_kappa(cloud),
        KappaField::One => vec![1.0; cloud.len()],
    };
    let d = b.diffusion(
        &DiffusionField::Scalar(kappa.clone()),
        &DiffusionOptions {
            jump: a.jump,
            ..Default::default()
        },
    )?;
    let n = cloud.embedding_dim();
    let residual = b.consistency_residual(&d.stencil, |i| {
        b.scalar_diffusion_target(i, kappa[i], &d.grad_log_kappa[i * n..(i + 1) * n])
    });
    if a.jump {
        let far: Vec<bool> = neighborhoods
            .iter()
            .enumerate()
            .map(|(i, nb)| nb.members.iter().all(|&j| kappa[j] == kappa[i]))
            .collect();
        let rows: Vec<Vec<String>> = (0..cloud.len())
            .map(|i| {
                vec![
                    i.to_string(),
                    kappa[i].to_string(),
                    (far[i] as u8).to_string(),
                    d.jump_residual[i].to_string(),
                ]
            })
            .collect();
        out.csv(
            "jump_residuals.csv",
            &["point", "kappa", "away_from_interface", "residual"],
            &rows,
        )?;
        let (count, worst) = (0..cloud.len())
            .filter(|&i| far[i])
            .fold((0usize, 0.0f64), |(c, w), i| {
                (c + 1, w.max(d.jump_residual[i]))
            });
        let overall = d.jump_residual.iter().cloned().fold(0.0, f64::max);
        println!(
            "extra-condition residual away from interfaces: max {worst:e} over {count} rows (all < 1e-9: {})",
            if worst < 1e-9 { "yes" } else { "no" }
        );
        println!("extra-condition residual over all rows: max {overall:e}");
    }
    Ok((vec![d.stencil], residual))
}

/// Runs `f` on each item, with `jobs` threads when `jobs > 1`.
fn run_all<T, R, F>(jobs: usize, items: Vec<T>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    match jobs {
        0 => Err(CliError::Usage("--jobs must be at least 1".into())),
        1 => Ok(items.into_iter().map(f).collect()),
        j => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            Ok(pool.install(|| items.into_par_iter().map(f).collect()))
        }
    }
}

/// Point counts from `--n` or `--h`; empty when neither is given.
fn explicit_counts(a: &BenchArgs, surface: &Surface) -> Result<Vec<usize>> {
    if !a.h.is_empty() {
        return a
            .h
            .iter()
            .map(|&h| {
                let s = SPACING_PER_SMOOTHING_LENGTH * check_h(h)?;
                Ok((surface.area() / (s * s)).round().max(1.0) as usize)
            })
            .collect();
    }
    Ok(a.n.clone())
}

fn single_count(a: &BenchArgs, surface: &Surface, default: usize) -> Result<usize> {
    if a.levels.is_some() {
        return Err(CliError::Usage(format!(
            "{} runs a single resolution; use --n or --h",
            value_name(&a.benchmark)
        )));
    }
    match explicit_counts(a, surface)?.as_slice() {
        [] => Ok(default),
        [n] => Ok(*n),
        _ => Err(CliError::Usage(format!(
            "{} runs a single resolution",
            value_name(&a.benchmark)
        ))),
    }
}

/// Prints failures and turns them into the exit status.
fn finish(failures: Vec<String>, total: usize) -> Result<()> {
    if failures.is_empty() {
        return Ok(());
    }
    for f in &failures {
        eprintln!("{f}");
    }
    Err(CliError::RunsFailed {
        failed: failures.len(),
        total,
    })
}

fn failure_line(label: &str, e: GfdmError) -> String {
    let e = CliError::Core(e);
    format!(
        "gfdm-error code={} message={:?}",
        e.code(),
        format!("{label}: {e}")
    )
}

fn report_rows(report: &BenchmarkReport) -> String {
    let mut text = format!("{}", report.name);
    if let Some(s) = report.slope {
        text.push_str(&format!(": fitted order {s:.3}"));
    }
    for r in &report.rows {
        text.push_str(&format!(
            "\n  {:<8} N = {:<7} h = {:.4}  eps2 = {:.4e}  iters = {:<4} {:.1} s",
            r.resolution, r.n, r.h, r.eps2, r.iters, r.seconds
        ));
    }
    text
}

pub fn bench(a: &BenchArgs, echo: &str) -> Result<()> {
    let out = Output::create(&a.common.out, echo)?;
    match a.benchmark {
        Benchmark::HeatSphere | Benchmark::Torus => bench_heat(a, &out),
        Benchmark::Advection => bench_advection(a, &out),
        Benchmark::FourStrip => bench_four_strip(a, &out),
        Benchmark::CahnHilliard => bench_phase(a, &out),
    }
}

fn bench_heat(a: &BenchArgs, out: &Output) -> Result<()> {
    let sphere = a.benchmark == Benchmark::HeatSphere;
    let (surface, first, last, count) = if sphere {
        (Surface::Sphere { radius: 1.0 }, 1000, 16000, 4)
    } else {
        (TORUS, 4000, 16000, 3)
    };
    let mut levels = explicit_counts(a, &surface)?;
    if levels.is_empty() {
        levels = geometric_levels(first, last, a.levels.unwrap_or(count))?;
    }
    let mut cfg = HeatConfig::default();
    cfg.method = method_options(&a.method, &a.common, cfg.method);
    if let Some(dt) = a.dt {
        cfg.dt = StepPolicy::Fixed(dt);
    }
    if let Some(c) = a.dt_scale {
        cfg.dt = StepPolicy::HScaled { c, power: 2.0 };
    }
    if let Some(t) = a.t_end {
        cfg.t_end = t;
    }
    let runner = if sphere {
        run_heat_sphere
    } else {
        run_torus_forced
    };
    let name = value_name(&a.benchmark);
    let total = levels.len();
    let results = run_all(
        a.jobs,
        levels.into_iter().enumerate().collect(),
        |(idx, n)| {
            let mut c = cfg.clone();
            c.levels = vec![n];
            (idx, runner(&c))
        },
    )?;
    let mut rows: Vec<ResolutionRow> = Vec::new();
    let mut failures = Vec::new();
    for (idx, r) in results {
        match r {
            Ok((report, fields)) => {
                for mut row in report.rows {
                    row.resolution = format!("L{idx}");
                    rows.push(row);
                }
                if !a.no_vtk {
                    for mut f in fields {
                        f.label = format!("{}_L{idx}", report.name);
                        out.vtk(&f)?;
                    }
                }
            }
            Err(e) => failures.push(failure_line(&format!("{name} L{idx}"), e)),
        }
    }
    let report = BenchmarkReport::new(name.clone(), rows, 2)?;
    report.write_csv(out.file(&format!("{name}.csv"))?)?;
    println!("{}", report_rows(&report));
    finish(failures, total)
}

fn bench_advection(a: &BenchArgs, out: &Output) -> Result<()> {
    if a.levels.is_some() || !a.n.is_empty() {
        return Err(CliError::Usage(
            "advection resolutions are set with --h".into(),
        ));
    }
    let mut modes: Vec<Mode> = Vec::new();
    for m in &a.mode {
        if !modes.contains(m) {
            modes.push(*m);
        }
    }
    if modes.is_empty() {
        modes.push(Mode::Muscl);
    }
    let base = AdvectionConfig::default();
    let hs = if a.h.is_empty() {
        base.h.clone()
    } else {
        a.h.iter().map(|&h| check_h(h)).collect::<Result<_>>()?
    };
    let mut cfg = base;
    cfg.method = method_options(&a.method, &a.common, cfg.method);
    if let Some(dt) = a.dt {
        cfg.dt = StepPolicy::Fixed(dt);
    }
    if let Some(c) = a.dt_scale {
        cfg.dt = StepPolicy::HScaled { c, power: 1.0 };
    }
    if let Some(t) = a.t_end {
        cfg.t_end = t;
    }
    let items: Vec<(Mode, usize, f64)> = modes
        .iter()
        .flat_map(|&m| hs.iter().enumerate().map(move |(i, &h)| (m, i, h)))
        .collect();
    let total = items.len();
    let results = run_all(a.jobs, items, |(m, idx, h)| {
        let mut c = cfg.clone();
        c.mode = m.into();
        c.h = vec![h];
        (m, idx, run_advection_cone(&c))
    })?;
    let mut rows: Vec<Vec<Option<AdvectionRow>>> = vec![vec![None; hs.len()]; modes.len()];
    let mut failures = Vec::new();
    for (m, idx, r) in results {
        let slot = modes
            .iter()
            .position(|x| *x == m)
            .expect("mode was requested");
        match r {
            Ok((mut row, fields)) => {
                rows[slot][idx] = row.pop();
                if !a.no_vtk {
                    for mut f in fields {
                        f.label = format!("cone_{}_L{idx}", value_name(&m));
                        out.vtk(&f)?;
                    }
                }
            }
            Err(e) => failures.push(failure_line(
                &format!("advection {} h={}", value_name(&m), hs[idx]),
                e,
            )),
        }
    }
    for (slot, m) in modes.iter().enumerate() {
        let done: Vec<AdvectionRow> = rows[slot].iter().flatten().cloned().collect();
        let report = advection_report((*m).into(), &done)?;
        report.write_csv(out.file(&format!("{}.csv", report.name))?)?;
        println!("{}", report_rows(&report));
    }
    let mut header = vec!["h".to_string(), "N".into(), "initial_peak".into()];
    header.extend(modes.iter().map(|m| format!("peak_{}", value_name(m))));
    let table: Vec<Vec<String>> = (0..hs.len())
        .map(|idx| {
            let any = rows.iter().find_map(|r| r[idx].as_ref());
            let mut line = vec![
                hs[idx].to_string(),
                any.map_or(String::new(), |r| r.resolution.n.to_string()),
                any.map_or(String::new(), |r| r.initial_peak.to_string()),
            ];
            line.extend(rows.iter().map(|r| {
                r[idx]
                    .as_ref()
                    .map_or(String::new(), |r| r.peak.to_string())
            }));
            line
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("advection-peaks.csv", &header_refs, &table)?;
    println!("{}", header.join(","));
    for line in &table {
        println!("{}", line.join(","));
    }
    finish(failures, total)
}

fn bench_four_strip(a: &BenchArgs, out: &Output) -> Result<()> {
    let mut cfg = FourStripConfig::default();
    cfg.n_target = single_count(a, &FOUR_STRIP_SURFACE, cfg.n_target)?;
    cfg.method = method_options(&a.method, &a.common, cfg.method);
    let modes = match a.jump {
        JumpChoice::On => vec![true],
        JumpChoice::Off => vec![false],
        JumpChoice::Both => vec![true, false],
    };
    let total = modes.len();
    let results = run_all(a.jobs, modes, |jump| {
        let mut c = cfg.clone();
        c.diffusion.jump = jump;
        (jump, run_four_strip(&c))
    })?;
    let mut strips = Vec::new();
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    let mut done: Vec<(bool, FourStripReport)> = Vec::new();
    for (jump, r) in results {
        let tag = if jump { "on" } else { "off" };
        match r {
            Ok((report, fields)) => {
                if !a.no_vtk {
                    out.vtk(&fields)?;
                }
                for s in 0..4 {
                    strips.push(vec![
                        tag.to_string(),
                        s.to_string(),
                        cfg.eta[s].to_string(),
                        report.slopes[s].to_string(),
                        report.oracle[s].to_string(),
                        (report.slopes[s] / report.oracle[s] - 1.0).to_string(),
                    ]);
                }
                summary.push(vec![
                    tag.to_string(),
                    report.n.to_string(),
                    report.worst_slope_error().to_string(),
                    report.y_spread.to_string(),
                    report.oscillation.to_string(),
                    report.far_jump_residual.to_string(),
                    report.iterations.to_string(),
                    format!("{:.3}", report.seconds),
                ]);
                done.push((jump, report));
            }
            Err(e) => failures.push(failure_line(&format!("four-strip jump {tag}"), e)),
        }
    }
    out.csv(
        "four-strip.csv",
        &["jump", "strip", "eta", "slope", "oracle", "relative_error"],
        &strips,
    )?;
    out.csv(
        "four-strip-summary.csv",
        &[
            "jump",
            "N",
            "worst_slope_error",
            "y_spread",
            "oscillation",
            "far_jump_residual",
            "iterations",
            "seconds",
        ],
        &summary,
    )?;
    println!("jump,strip,eta,slope,oracle,relative_error");
    for line in &strips {
        println!("{}", line.join(","));
    }
    for (jump, r) in &done {
        println!(
            "jump {}: N = {}, worst slope error {:.3e}, y-spread {:.3e}, oscillation {:.3e}, {} iterations",
            if *jump { "on" } else { "off" },
            r.n,
            r.worst_slope_error(),
            r.y_spread,
            r.oscillation,
            r.iterations
        );
    }
    finish(failures, total)
}

fn bench_phase(a: &BenchArgs, out: &Output) -> Result<()> {
    if a.dt_scale.is_some() {
        return Err(CliError::Usage("cahn-hilliard takes a fixed --dt".into()));
    }
    let mut cfg = PhaseConfig::default();
    cfg.n_target = single_count(a, &TORUS, cfg.n_target)?;
    cfg.method = method_options(&a.method, &a.common, cfg.method);
    if let Some(dt) = a.dt {
        cfg.dt = dt;
    }
    cfg.steps = match (a.steps, a.t_end) {
        (Some(s), _) => s,
        (None, Some(t)) => (t / cfg.dt).round() as usize,
        (None, None) => cfg.steps,
    };
    let (report, fields) = match run_cahn_hilliard(&cfg) {
        Ok(r) => r,
        Err(e) => return finish(vec![failure_line("cahn-hilliard", e)], 1),
    };
    if !a.no_vtk {
        out.vtk(&fields)?;
    }
    let rows: Vec<Vec<String>> = report
        .monitors
        .iter()
        .enumerate()
        .map(|(s, m)| {
            vec![
                s.to_string(),
                m.t.to_string(),
                m.mass.to_string(),
                m.energy.to_string(),
                m.min.to_string(),
                m.max.to_string(),
            ]
        })
        .collect();
    out.csv(
        "cahn-hilliard.csv",
        &["step", "t", "mass", "energy", "min", "max"],
        &rows,
    )?;
    let (lo, hi) = report.range();
    let skip = cfg.steps / 5;
    println!(
        "cahn-hilliard: N = {}, {} steps of {:e}",
        report.n, cfg.steps, cfg.dt
    );
    println!("  range [{lo:.4}, {hi:.4}]");
    println!(
        "  mass drift {:.3e} ({:.3e} of N)",
        report.mass_drift(),
        report.mass_drift() / report.n as f64
    );
    println!(
        "  largest relative energy increase after step {skip}: {:.3e}",
        report.max_relative_energy_increase(skip)
    );
    println!(
        "  largest solver iteration count {}, {:.1} s",
        report.steps.max_iterations(),
        report.seconds
    );
    Ok(())
}
