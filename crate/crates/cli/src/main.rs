//! `escs`: build doubled surfaces, trace geodesics, enumerate cylinders and
//! run the eigenfunction and torus estimate experiments from the shell.

mod commands;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use escs_core::{BoundaryCondition, Neighborhood, ResonancePolicy};

/// Exit statuses besides success.
const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Environment variable with the number of worker threads.
const WORKERS_ENV: &str = "ESCS_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "escs", version, about = "Flat surfaces with cone points, their cylinders and eigenfunction experiments")]
#[command(after_help = "The worker thread count is read from ESCS_WORKERS (default: all cores).")]
struct Cli {
    /// Seed for every random choice; recorded in each output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Double a polygon into a flat surface with cone points.
    Double(DoubleArgs),
    /// Trace one geodesic on a doubled polygon or surface.
    Trace(TraceArgs),
    /// Enumerate the maximal cylinders avoiding the eps-neighbourhood of the cone points.
    Cylinders(CylindersArgs),
    /// Sample orbits and check that every orbit avoiding the neighbourhood lies in a cylinder.
    CheckCc(CheckCcArgs),
    /// Laplace eigenvalues of a polygon.
    Spectrum(SpectrumArgs),
    /// Eigenfunction mass near the polygon vertices.
    Control(ControlArgs),
    /// Resolvent estimate on a torus strip for a sweep of frequencies.
    BzCheck(BzArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Bc {
    Dirichlet,
    Neumann,
}

impl From<Bc> for BoundaryCondition {
    fn from(b: Bc) -> Self {
        match b {
            Bc::Dirichlet => BoundaryCondition::Dirichlet,
            Bc::Neumann => BoundaryCondition::Neumann,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Region {
    Disks,
    CornerBoxes,
}

impl From<Region> for Neighborhood {
    fn from(r: Region) -> Self {
        match r {
            Region::Disks => Neighborhood::Disks,
            Region::CornerBoxes => Neighborhood::CornerBoxes,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Resonance {
    Error,
    Project,
}

impl From<Resonance> for ResonancePolicy {
    fn from(r: Resonance) -> Self {
        match r {
            Resonance::Error => ResonancePolicy::Error,
            Resonance::Project => ResonancePolicy::Project,
        }
    }
}

#[derive(Args, Debug)]
pub struct DoubleArgs {
    /// Polygon JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Surface JSON to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    /// Polygon or surface JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Start point in polygon coordinates, as "x,y" (decimals or p/q).
    #[arg(long, allow_hyphen_values = true)]
    pub start: String,
    /// Direction as "dx,dy". Normalized in float mode; any nonzero vector in exact mode.
    #[arg(long, allow_hyphen_values = true)]
    pub dir: String,
    /// Start on the mirrored sheet of the double.
    #[arg(long)]
    pub mirrored: bool,
    /// Maximum length.
    #[arg(long, default_value_t = 10.0)]
    pub l_max: f64,
    /// Distance at which a cone point counts as hit (float mode).
    #[arg(long, default_value_t = 1e-9)]
    pub cone_tol: f64,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Trajectory JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Drawing of the unfolded trajectory.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CylindersArgs {
    /// Polygon or surface JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Radius of the neighbourhood of the cone points.
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Cylinder list JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Drawing of the cylinders in the triangle charts.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckCcArgs {
    /// Polygon or surface JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Radius of the neighbourhood of the cone points.
    #[arg(long)]
    pub eps: f64,
    /// Number of sampled orbits.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Length of each orbit.
    #[arg(long, default_value_t = 100.0)]
    pub l_max: f64,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Drawing of the cylinders used for the check.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    /// Polygon JSON (or a doubled surface that records its polygon).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Target mesh edge length.
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    /// Number of eigenpairs.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = Bc::Dirichlet)]
    pub bc: Bc,
    /// CSV with one row per eigenvalue.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON summary; defaults to the CSV path with a .json extension.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Heatmap of one eigenfunction.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// 1-based index of the eigenfunction drawn in the heatmap.
    #[arg(long, default_value_t = 1)]
    pub plot_index: usize,
}

#[derive(Args, Debug)]
pub struct ControlArgs {
    /// Polygon JSON (or a doubled surface that records its polygon).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Radius of the vertex neighbourhoods (disk radius or box half-side).
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = Bc::Dirichlet)]
    pub bc: Bc,
    /// Number of eigenpairs.
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    /// Target mesh edge length.
    #[arg(long, default_value_t = 0.02)]
    pub h: f64,
    #[arg(long, value_enum, default_value_t = Region::Disks)]
    pub neighborhood: Region,
    /// CSV with one row per eigenpair: k, lambda_sq, ratio.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON summary; defaults to the CSV path with a .json extension.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Ratio against frequency scatter plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Heatmap of the eigenfunction attaining the smallest ratio.
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BzArgs {
    /// Torus period in x.
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    /// Torus period in y.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Grid points per direction.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Observation strip in y, as "y0,y1".
    #[arg(long, default_value = "0.4,0.6")]
    pub omega: String,
    /// Smallest frequency lambda.
    #[arg(long, default_value_t = 10.0)]
    pub lambda_min: f64,
    /// Largest frequency lambda.
    #[arg(long, default_value_t = 500.0)]
    pub lambda_max: f64,
    /// Number of frequencies, evenly spaced.
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    /// Highest Fourier mode of the random data.
    #[arg(long, default_value_t = 20)]
    pub bandwidth: usize,
    #[arg(long, value_enum, default_value_t = Resonance::Project)]
    pub resonance: Resonance,
    /// Sweep JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Constant against frequency scatter plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn configure_workers() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| escs_core::Error::InvalidArgument(format!("{WORKERS_ENV} must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(escs_core::Error::InvalidArgument(format!("{WORKERS_ENV} must be positive")).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<escs_core::Error>() {
        Some(e) if e.is_solver_failure() => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_workers().and_then(|_| match cli.command {
        Command::Double(a) => commands::double(&a, cli.seed),
        Command::Trace(a) => commands::trace(&a, cli.seed),
        Command::Cylinders(a) => commands::cylinders(&a, cli.seed),
        Command::CheckCc(a) => commands::check_cc(&a, cli.seed),
        Command::Spectrum(a) => commands::spectrum(&a, cli.seed),
        Command::Control(a) => commands::control(&a, cli.seed),
        Command::BzCheck(a) => commands::bz_check(&a, cli.seed),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
