//! `enclosure`: batch front end for scene checks, indicator sweeps, length
//! extraction, audits, voxel reconstruction and fixture export.
//!
//! Exit codes: 0 success, 1 usage, 2 numerical failure, 3 assumption violation.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "enclosure", version, about = "Enclosure-method toolkit for cavities in a heat conductor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the convexity, disjointness and minimizer assumptions of a scene.
    SceneValidate(ValidateArgs),
    /// Evaluate the indicator over a λ grid and write one CSV per probe.
    Sweep(SweepArgs),
    /// Fit l̂(p, D) per probe, from a scene or from sweep CSVs.
    Extract(ExtractArgs),
    /// Decay and asymptotic audits.
    Audit(AuditArgs),
    /// Carve an enclosing voxel region from probe lengths.
    Reconstruct(ReconstructArgs),
    /// Write the shipped scenes and Laplace-integral specs as TOML.
    Fixtures(FixturesArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SceneArgs {
    /// Scene file (TOML).
    #[arg(long)]
    pub scene: PathBuf,
    /// Override the refinement level of every surface.
    #[arg(long)]
    pub refinement: Option<usize>,
    /// Probe point x,y,z; repeatable. Defaults to the probes listed in the scene.
    #[arg(long = "probe", value_parser = parse_point)]
    pub probes: Vec<[f64; 3]>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionArg {
    Sector,
    Log,
    Real,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long, default_value_t = 8.0)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 40.0)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 9)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = RegionArg::Real)]
    pub region: RegionArg,
    #[arg(long, default_value_t = 0.5)]
    pub delta0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta1: f64,
}

#[derive(Args, Debug, Clone)]
pub struct NoiseArgs {
    /// Relative additive noise on the flux data.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Seed of the noise generator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Directory for validate.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Also evaluate the resolvent route and report its residual.
    #[arg(long)]
    kernel_route: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Scene to sweep, or with --curve the scene that supplies oracle lengths.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long)]
    refinement: Option<usize>,
    #[arg(long = "probe", value_parser = parse_point)]
    probes: Vec<[f64; 3]>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Indicator CSV written by `sweep`; repeatable.
    #[arg(long = "curve")]
    curves: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum AuditKind {
    Kernels,
    Laplace,
    Densities,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(value_enum)]
    which: AuditKind,
    /// Scene file for the kernel and density audits.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long)]
    refinement: Option<usize>,
    /// Laplace-integral spec (TOML); the shipped set when absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// μ values of the audit grid (comma separated).
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    /// Envelope parameter δ of the off-diagonal audits.
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    delta1: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum LengthSource {
    /// Exact lengths from the path oracle.
    Oracle,
    /// Lengths fitted from synthetic indicator sweeps.
    Fit,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Extraction JSON files written by `extract`; repeatable.
    #[arg(long = "extraction")]
    extractions: Vec<PathBuf>,
    /// Where lengths come from when no extraction files are given.
    #[arg(long, value_enum, default_value_t = LengthSource::Oracle)]
    lengths: LengthSource,
    /// Use the 26 probes on this sphere about the outer center when no probes are given.
    #[arg(long)]
    probe_radius: Option<f64>,
    /// Carving margin; default max(voxel diameter, 1.5·stderr).
    #[arg(long)]
    margin: Option<f64>,
    /// Voxel edge; default 1/64 of the bounding-box edge.
    #[arg(long)]
    resolution: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FixturesArgs {
    #[arg(long, default_value_t = 3)]
    refinement: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> =
        s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"))).collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok([*x, *y, *z]),
        _ => Err(format!("expected three finite numbers x,y,z, got '{s}'")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let status = match cli.command {
        Command::SceneValidate(a) => commands::scene_validate(&a.scene, a.out.as_deref()),
        Command::Sweep(a) => commands::sweep(&a.scene, &a.grid, &a.noise, a.kernel_route, &a.out),
        Command::Extract(a) => {
            commands::extract(a.scene.as_deref(), a.refinement, &a.probes, &a.curves, &a.grid, &a.noise, &a.out)
        }
        Command::Audit(a) => match a.which {
            AuditKind::Kernels => commands::audit_kernels(a.scene.as_deref(), a.refinement, a.mu, a.delta, &a.out),
            AuditKind::Densities => commands::audit_densities(a.scene.as_deref(), a.refinement, a.mu, &a.out),
            AuditKind::Laplace => commands::audit_laplace(a.spec.as_deref(), a.mu, a.delta1, &a.out),
        },
        Command::Reconstruct(a) => commands::reconstruct(&commands::ReconstructConfig {
            scene: &a.scene,
            extractions: &a.extractions,
            from_fit: a.lengths == LengthSource::Fit,
            probe_radius: a.probe_radius,
            margin: a.margin,
            resolution: a.resolution,
            grid: &a.grid,
            noise: &a.noise,
            out: &a.out,
        }),
        Command::Fixtures(a) => commands::fixtures(a.refinement, &a.out),
    };
    match status {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
