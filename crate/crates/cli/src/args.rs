//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gfdm::advection::Reconstruction;
use gfdm::frames::NormalSource;
use gfdm::projection::ProjectionMode;
use gfdm::NeighborStrategy;

#[derive(Debug, Parser)]
#[command(
    name = "gfdm",
    version,
    about = "Meshfree generalized finite differences on point-cloud surfaces"
)]
pub struct Cli {
    /// Log verbosity: -v for progress, -vv for details.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a surface and write a point-cloud file.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Generate(GenerateArgs),
    /// Build one operator and write its stencil rows as CSV.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    StencilDump(StencilDumpArgs),
    /// Run a benchmark and write report tables and VTK checkpoints.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Bench(BenchArgs),
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Generate(a) => &a.common,
            Command::StencilDump(a) => &a.common,
            Command::Bench(a) => &a.common,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct CommonArgs {
    /// Plain `key = value` file with long flag names as keys; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "GFDM_OUT", default_value = "gfdm-out")]
    pub out: PathBuf,
    /// Seed of every random choice in the run.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Sampler jitter as a fraction of the spacing.
    #[arg(long, default_value_t = 0.3)]
    pub jitter: f64,
}

#[derive(Clone, Debug, Args)]
pub struct MethodArgs {
    /// Highest reproduced monomial degree.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub order: u8,
    /// Gaussian weight sharpness.
    #[arg(long, default_value_t = 6.0)]
    pub wf: f64,
    /// Central value of the auxiliary stencil of the optimized Laplacian.
    #[arg(long)]
    pub ac: Option<f64>,
    /// Use the plain instead of the optimized Laplacian.
    #[arg(long)]
    pub plain: bool,
    #[arg(long, value_enum, default_value_t = Projection::Central)]
    pub projection: Projection,
    /// `knn:K` or `radius`.
    #[arg(long, default_value = "knn:15", value_parser = parse_neighbors)]
    pub neighbors: NeighborStrategy,
    /// Normal source; analytic needs a known surface.
    #[arg(long, value_enum)]
    pub normals: Option<Normals>,
    /// Relative residual tolerance of BiCGSTAB.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Projection {
    Central,
    Neighbor,
}

impl From<Projection> for ProjectionMode {
    fn from(p: Projection) -> Self {
        match p {
            Projection::Central => ProjectionMode::CentralNormal,
            Projection::Neighbor => ProjectionMode::NeighborNormal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Normals {
    Pca,
    Analytic,
}

impl From<Normals> for NormalSource {
    fn from(n: Normals) -> Self {
        match n {
            Normals::Pca => NormalSource::WeightedPca,
            Normals::Analytic => NormalSource::Analytic,
        }
    }
}

pub fn parse_neighbors(s: &str) -> Result<NeighborStrategy, String> {
    if s == "radius" {
        return Ok(NeighborStrategy::Radius);
    }
    let k = s
        .strip_prefix("knn:")
        .ok_or_else(|| format!("expected knn:K or radius, got '{s}'"))?;
    match k.parse::<usize>() {
        Ok(k) if k >= 2 => Ok(NeighborStrategy::Knn(k)),
        _ => Err(format!("knn needs an integer K >= 2, got '{k}'")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Geometry {
    Sphere,
    Torus,
    Cone,
    Wave,
    Circle,
}

#[derive(Clone, Debug, Args)]
pub struct GeometryArgs {
    /// Radius of the sphere or circle.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Major radius of the torus.
    #[arg(long)]
    pub major: Option<f64>,
    /// Minor radius of the torus.
    #[arg(long)]
    pub minor: Option<f64>,
}

#[derive(Clone, Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub geometry: Geometry,
    /// Smoothing length; the point spacing is 0.3 h.
    #[arg(long)]
    pub h: f64,
    #[command(flatten)]
    pub shape: GeometryArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Operator {
    /// Embedding-space surface gradient, one set per coordinate.
    Grad,
    /// Derivatives along the tangent vectors.
    TangentGrad,
    Laplacian,
    LaplacianOptimized,
    /// `div(kappa grad u)` with the field chosen by `--kappa`.
    Diffusion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KappaField {
    /// Coefficients 1e4, 1, 1e2, 1 on the strips `[k pi, (k + 1) pi]` in x.
    FourStrip,
    /// Constant one.
    One,
}

#[derive(Clone, Debug, Args)]
pub struct StencilDumpArgs {
    /// Cloud file to read.
    #[arg(
        long,
        conflicts_with = "geometry",
        required_unless_present = "geometry"
    )]
    pub cloud: Option<PathBuf>,
    /// Sample this surface instead of reading a file.
    #[arg(long, value_enum, requires = "h")]
    pub geometry: Option<Geometry>,
    /// Smoothing length of the sampled surface.
    #[arg(long)]
    pub h: Option<f64>,
    #[command(flatten)]
    pub shape: GeometryArgs,
    #[arg(long, value_enum, default_value_t = Operator::Laplacian)]
    pub op: Operator,
    /// Enforce the extra jump test functions in diffusion rows.
    #[arg(long)]
    pub jump: bool,
    #[arg(long, value_enum, default_value_t = KappaField::FourStrip)]
    pub kappa: KappaField,
    /// Build rows only at these points (not with diffusion).
    #[arg(long, value_delimiter = ',')]
    pub points: Vec<usize>,
    /// Print the largest monomial-consistency residual.
    #[arg(long)]
    pub check_consistency: bool,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Benchmark {
    /// Heat equation on the unit sphere.
    HeatSphere,
    /// Forced diffusion on the torus with radii 1 and 1/3.
    Torus,
    /// Elliptic diffusion across four strips of the wave patch.
    FourStrip,
    /// One rotation of a bell on the cone.
    Advection,
    /// Cahn-Hilliard on the torus.
    CahnHilliard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Upwind,
    Muscl,
}

impl From<Mode> for Reconstruction {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Upwind => Reconstruction::PureUpwind,
            Mode::Muscl => Reconstruction::MusclSuperbee,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum JumpChoice {
    On,
    Off,
    /// Run with and without the jump conditions.
    Both,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub benchmark: Benchmark,
    /// Number of resolutions, spaced geometrically over the default range.
    #[arg(long, conflicts_with_all = ["n", "h"])]
    pub levels: Option<usize>,
    /// Target point counts, one per resolution.
    #[arg(long, value_delimiter = ',', conflicts_with = "h")]
    pub n: Vec<usize>,
    /// Smoothing lengths, one per resolution; the spacing is 0.3 h.
    #[arg(long, value_delimiter = ',')]
    pub h: Vec<f64>,
    /// Fixed time step.
    #[arg(long, conflicts_with = "dt_scale")]
    pub dt: Option<f64>,
    /// `dt = c h^2` for diffusion and `dt = c h` for advection.
    #[arg(long)]
    pub dt_scale: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Number of time steps of the phase-field run.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Advection reconstructions; repeat or separate with commas.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub mode: Vec<Mode>,
    #[arg(long, value_enum, default_value_t = JumpChoice::Both)]
    pub jump: JumpChoice,
    /// Resolutions solved in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Skip the VTK checkpoints.
    #[arg(long)]
    pub no_vtk: bool,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}
