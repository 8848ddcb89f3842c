use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use serde::Serialize;

use enclosure_core::bie::resolvent::{block_split_from, resolvent_from};
use enclosure_core::bie::{
    decay_audit, norm_slope, off_block_envelope, y22_sup_norm, Assembler, EnvelopePairs, Region, SpectralSample,
};
use enclosure_core::enclosure::{
    default_margin, default_resolution, enclose, EnclosureGrid, ProbeLength, SoundnessReport,
};
use enclosure_core::fit::loglog_slope;
use enclosure_core::fixtures;
use enclosure_core::forward::{scene_flux, solve_with};
use enclosure_core::geometry::{cavity_separation, Scene, SceneFile};
use enclosure_core::io::{csv, fmt17, json17};
use enclosure_core::laplace::{self, degenerate_lower_bound_audit, holder_remainder_audit, LaplaceIntegralSpec, Phase};
use enclosure_core::path_oracle::{check_assumptions, min_broken_path};
use enclosure_core::spectral::{
    extract_length, fit_length, lambda_grid, mu_ceiling_warning, sweep as run_sweep, ExtractionResult, ImProfile,
    IndicatorCurve, LambdaGrid, SceneEvaluator,
};
use enclosure_core::{Error as CoreError, Vector3, C64};

use crate::{GridArgs, NoiseArgs, RegionArg, SceneArgs};

/// Bad command-line input that clap cannot catch.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn core_code(e: &CoreError) -> u8 {
    match e {
        CoreError::Assumption(_)
        | CoreError::NotStrictlyConvex(_)
        | CoreError::Overlap(..)
        | CoreError::ProbeInside(_) => 3,
        CoreError::InvalidGrid(_)
        | CoreError::Parse(_)
        | CoreError::InvalidScene(_)
        | CoreError::InvalidSurface(_)
        | CoreError::ChartTooCoarse { .. }
        | CoreError::NonPositiveMu(_)
        | CoreError::Io(_) => 1,
        _ => 2,
    }
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<Usage>().is_some() || cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
        if let Some(c) = cause.downcast_ref::<CoreError>() {
            return core_code(c);
        }
    }
    2
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn load_scene_file(path: &Path, refinement: Option<usize>) -> Result<SceneFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = SceneFile::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(match refinement {
        Some(r) => file.with_refinement(r),
        None => file,
    })
}

fn build(file: &SceneFile) -> Result<Scene> {
    Ok(file.build()?)
}

fn probes_or_scene(args: &[[f64; 3]], file: &SceneFile) -> Result<Vec<Vector3<f64>>> {
    let probes: Vec<Vector3<f64>> =
        if args.is_empty() { file.probes() } else { args.iter().map(|p| Vector3::from(*p)).collect() };
    if probes.is_empty() {
        return Err(usage("no probes: pass --probe x,y,z or list probes in the scene file"));
    }
    Ok(probes)
}

fn region_of(grid: &GridArgs) -> (Region, ImProfile) {
    match grid.region {
        RegionArg::Sector => (Region::Sector { delta0: grid.delta0 }, ImProfile::SectorEdge),
        RegionArg::Log => (Region::LogRegion { delta1: grid.delta1 }, ImProfile::LogEdge),
        RegionArg::Real => (Region::RealAxis, ImProfile::Zero),
    }
}

fn make_grid(grid: &GridArgs) -> Result<LambdaGrid> {
    let (region, profile) = region_of(grid);
    Ok(lambda_grid(region, grid.mu_min, grid.mu_max, grid.count, profile)?)
}

fn arr(p: &Vector3<f64>) -> [f64; 3] {
    [p.x, p.y, p.z]
}

fn fmt_point(p: &[f64; 3]) -> String {
    format!("({:.4}, {:.4}, {:.4})", p[0], p[1], p[2])
}

// ---------------------------------------------------------------- validate

#[derive(Serialize)]
struct ValidateEntry {
    p: [f64; 3],
    report: Option<enclosure_core::path_oracle::AssumptionReport>,
    error: Option<String>,
}

pub fn scene_validate(args: &SceneArgs, out: Option<&Path>) -> Result<u8> {
    let file = load_scene_file(&args.scene, args.refinement)?;
    let scene = build(&file)?;
    let probes = probes_or_scene(&args.probes, &file)?;
    let mut code = 0u8;
    let mut entries = Vec::new();
    println!(
        "scene {}: {} cavities, {} outer nodes",
        file.name.as_deref().unwrap_or("-"),
        scene.cavities.len(),
        scene.outer.len()
    );
    for p in &probes {
        if let Err(e) = scene.check_probe(p) {
            println!("probe {}: {e}", fmt_point(&arr(p)));
            code = code.max(core_code(&e));
            entries.push(ValidateEntry { p: arr(p), report: None, error: Some(e.to_string()) });
            continue;
        }
        let r = check_assumptions(&scene, p);
        println!("probe {}: I1 {} I2 {} I3 {} d1 {}", fmt_point(&arr(p)), r.i1, r.i2, r.i3, fmt17(r.d1));
        for (j, c) in r.convexity.iter().enumerate() {
            match c {
                Some((m0, m1)) => println!("  cavity {j}: M0 {} M1 {}", fmt17(*m0), fmt17(*m1)),
                None => println!("  cavity {j}: convexity audit failed"),
            }
        }
        if let Some(path) = &r.path {
            println!("  l_min {}", fmt17(path.l_min));
            println!(
                "  {:>6} {:>8} {:>24} {:>24} {:>24} {:>10}",
                "cavity", "class", "length", "hplus", "min_eig", "grad"
            );
            for m in &path.minimizers {
                println!(
                    "  {:>6} {:>8} {:>24} {:>24} {:>24} {:>10.2e}",
                    m.cavity,
                    m.class.map(|c| format!("{c:?}")).unwrap_or_else(|| "-".into()),
                    fmt17(m.value),
                    fmt17(m.hplus),
                    fmt17(m.hessian_eigenvalues[0]),
                    m.grad_norm
                );
            }
        }
        for reason in &r.reasons {
            println!("  note: {reason}");
        }
        if !r.i1 || !r.i2 {
            code = 3;
        } else if !r.i3 {
            log::warn!("I3 (nondegenerate minimizers) fails at probe {:?}; lengths are still valid but the fit may converge slowly", arr(p));
        }
        entries.push(ValidateEntry { p: arr(p), report: Some(r), error: None });
    }
    if let Some(dir) = out {
        write(dir, "validate.json", &json17(&entries))?;
    }
    Ok(code)
}

// ---------------------------------------------------------- sweep/extract

#[derive(Serialize, Default)]
struct ProbeEntry {
    index: usize,
    p: [f64; 3],
    status: &'static str,
    error: Option<String>,
    csv: Option<String>,
    json: Option<String>,
    warnings: Vec<String>,
    failed_samples: Vec<(usize, String)>,
    l_hat: Option<f64>,
    stderr: Option<f64>,
    oracle_value: Option<f64>,
    rel_error: Option<f64>,
    max_route_residual: Option<f64>,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    command: &'a str,
    region: &'a str,
    mu_min: f64,
    mu_max: f64,
    count: usize,
    noise: f64,
    seed: u64,
    probes: Vec<ProbeEntry>,
}

struct Swept {
    curve: IndicatorCurve,
    oracle: Option<f64>,
}

fn sweep_probe(
    scene: &Scene,
    p: &Vector3<f64>,
    grid: &LambdaGrid,
    noise: &NoiseArgs,
    kernel_route: bool,
) -> Result<Swept, CoreError> {
    scene.check_probe(p)?;
    let mut warnings = Vec::new();
    let oracle = match min_broken_path(scene, p) {
        Ok(r) => {
            if !r.assumption_i2_holds {
                warnings
                    .push("I2 fails at this probe (grazing or backward minimizer): no length guarantee".to_string());
            }
            warnings.extend(mu_ceiling_warning(scene, grid.mu_max, r.l_min));
            Some(r.l_min)
        }
        Err(e) => {
            warnings.push(format!("path oracle: {e}"));
            None
        }
    };
    let eval = SceneEvaluator {
        kernel_route,
        noise: (noise.noise > 0.0).then_some((noise.noise, noise.seed)),
        ..SceneEvaluator::new(scene, *p)
    };
    let mut curve = run_sweep(&eval, grid)?;
    warnings.append(&mut curve.warnings);
    curve.warnings = warnings;
    Ok(Swept { curve, oracle })
}

/// Shared by `sweep` and `extract`: one CSV per probe, optionally one
/// extraction JSON, plus summary.json. Exit code is the worst per-probe code.
fn sweep_probes(
    command: &str,
    args: &SceneArgs,
    grid_args: &GridArgs,
    noise: &NoiseArgs,
    kernel_route: bool,
    with_extraction: bool,
    out: &Path,
) -> Result<u8> {
    let grid = make_grid(grid_args)?;
    let file = load_scene_file(&args.scene, args.refinement)?;
    let scene = build(&file)?;
    let probes = probes_or_scene(&args.probes, &file)?;
    let mut code = 0u8;
    let mut entries = Vec::new();
    for (k, p) in probes.iter().enumerate() {
        let mut e = ProbeEntry { index: k, p: arr(p), status: "ok", ..Default::default() };
        match sweep_probe(&scene, p, &grid, noise, kernel_route) {
            Err(err) => {
                log::error!("probe {k}: {err}");
                code = code.max(core_code(&err));
                e.status = "error";
                e.error = Some(err.to_string());
            }
            Ok(Swept { curve, oracle }) => {
                let name = format!("probe_{k}.csv");
                write(out, &name, &curve.to_csv())?;
                e.csv = Some(name);
                e.warnings = curve.warnings.clone();
                e.failed_samples = curve.failures.clone();
                e.oracle_value = oracle;
                if kernel_route {
                    e.max_route_residual = curve.points.iter().map(|c| c.value.route_residual).reduce(f64::max);
                }
                match extract_length(&curve) {
                    Ok(fit) => {
                        let res = ExtractionResult::new(p, &fit, grid.region, oracle);
                        e.l_hat = Some(res.l_hat);
                        e.stderr = Some(res.stderr);
                        e.rel_error = res.rel_error;
                        if with_extraction {
                            let name = format!("probe_{k}.json");
                            write(out, &name, &json17(&res))?;
                            e.json = Some(name);
                        }
                    }
                    Err(err) => {
                        log::error!("probe {k}: {err}");
                        code = code.max(2);
                        e.status = "fit_failed";
                        e.error = Some(err.to_string());
                    }
                }
            }
        }
        entries.push(e);
    }
    let summary = RunSummary {
        command,
        region: grid.region.name(),
        mu_min: grid.mu_min,
        mu_max: grid.mu_max,
        count: grid.count,
        noise: noise.noise,
        seed: noise.seed,
        probes: entries,
    };
    write(out, "summary.json", &json17(&summary))?;
    for e in &summary.probes {
        match e.l_hat {
            Some(l) => println!(
                "probe {} {}: l_hat {} stderr {}",
                e.index,
                fmt_point(&e.p),
                fmt17(l),
                fmt17(e.stderr.unwrap_or(f64::NAN))
            ),
            None => println!("probe {} {}: {}", e.index, fmt_point(&e.p), e.error.as_deref().unwrap_or("failed")),
        }
    }
    Ok(code)
}

pub fn sweep(args: &SceneArgs, grid: &GridArgs, noise: &NoiseArgs, kernel_route: bool, out: &Path) -> Result<u8> {
    sweep_probes("sweep", args, grid, noise, kernel_route, false, out)
}

/// (mu, log|I₀|) from an indicator CSV written by `sweep`.
fn read_curve(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> =
        lines.next().ok_or_else(|| usage(format!("{}: empty file", path.display())))?.split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| usage(format!("{}: no '{name}' column", path.display())))
    };
    let (im, il) = (col("mu")?, col("log_abs_I0")?);
    let mut mu = Vec::new();
    let mut la = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let get = |i: usize| -> Result<f64> {
            f.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| usage(format!("{}: line {}: bad number in column {}", path.display(), n + 2, i + 1)))
        };
        let (m, l) = (get(im)?, get(il)?);
        if l.is_finite() {
            mu.push(m);
            la.push(l);
        }
    }
    Ok((mu, la))
}

#[allow(clippy::too_many_arguments)]
pub fn extract(
    scene: Option<&Path>,
    refinement: Option<usize>,
    probes: &[[f64; 3]],
    curves: &[PathBuf],
    grid: &GridArgs,
    noise: &NoiseArgs,
    out: &Path,
) -> Result<u8> {
    if curves.is_empty() {
        let scene = scene.ok_or_else(|| usage("extract needs --scene or at least one --curve"))?;
        let args = SceneArgs { scene: scene.to_path_buf(), refinement, probes: probes.to_vec() };
        return sweep_probes("extract", &args, grid, noise, false, true, out);
    }
    if probes.len() != curves.len() {
        return Err(usage(format!(
            "{} curves but {} probes: give one --probe per --curve",
            curves.len(),
            probes.len()
        )));
    }
    let truth = match scene {
        Some(s) => Some(build(&load_scene_file(s, refinement)?)?),
        None => None,
    };
    let (region, _) = region_of(grid);
    let mut code = 0u8;
    for (k, (path, p)) in curves.iter().zip(probes).enumerate() {
        let p = Vector3::from(*p);
        let (mu, la) = read_curve(path)?;
        let oracle = match &truth {
            Some(s) => Some(min_broken_path(s, &p)?.l_min),
            None => None,
        };
        match fit_length(&mu, &la) {
            Ok(fit) => {
                let res = ExtractionResult::new(&p, &fit, region, oracle);
                println!("curve {}: l_hat {} stderr {}", path.display(), fmt17(res.l_hat), fmt17(res.stderr));
                write(out, &format!("probe_{k}.json"), &json17(&res))?;
            }
            Err(e) => {
                eprintln!("curve {}: {e}", path.display());
                code = code.max(2);
            }
        }
    }
    Ok(code)
}

// ------------------------------------------------------------------ audits

fn audit_mu(mu: Option<Vec<f64>>, default: &[f64]) -> Result<Vec<f64>> {
    let mu = mu.unwrap_or_else(|| default.to_vec());
    if mu.len() < 3 || mu.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(usage(format!("audit grid needs at least 3 positive μ values, got {mu:?}")));
    }
    Ok(mu)
}

fn audit_scene(scene: Option<&Path>, refinement: Option<usize>, fallback: SceneFile) -> Result<Scene> {
    match scene {
        Some(s) => build(&load_scene_file(s, refinement)?),
        None => build(&refinement.map_or(fallback.clone(), |r| fallback.with_refinement(r))),
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    threshold: String,
    pass: bool,
}

fn finish_audit(out: &Path, kind: &str, checks: Vec<Check>) -> Result<u8> {
    for c in &checks {
        println!("{} {}: {} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, fmt17(c.value), c.threshold);
    }
    let pass = checks.iter().all(|c| c.pass);
    #[derive(Serialize)]
    struct Summary<'a> {
        audit: &'a str,
        pass: bool,
        checks: Vec<Check>,
    }
    write(out, "summary.json", &json17(&Summary { audit: kind, pass, checks }))?;
    Ok(if pass { 0 } else { 2 })
}

pub fn audit_kernels(
    scene: Option<&Path>,
    refinement: Option<usize>,
    mu: Option<Vec<f64>>,
    delta: f64,
    out: &Path,
) -> Result<u8> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(usage(format!("--delta must lie in (0, 1), got {delta}")));
    }
    let mu = audit_mu(mu, &[4.0, 8.0, 16.0, 32.0])?;
    let scene = audit_scene(scene, refinement, fixtures::two_sphere_audit(2))?;
    let mut checks = Vec::new();

    let norms =
        mu.iter().map(|&m| y22_sup_norm(&scene, C64::new(m, 0.0))).collect::<enclosure_core::Result<Vec<_>>>()?;
    let slope = norm_slope(&mu, &norms)?;
    write(
        out,
        "y22_norm.csv",
        &csv(&["mu", "y22_norm"], mu.iter().zip(&norms).map(|(m, n)| vec![fmt17(*m), fmt17(*n)])),
    )?;
    checks.push(Check {
        name: "y22_norm_slope".into(),
        value: slope,
        threshold: "-1 ± 0.15".into(),
        pass: (slope + 1.0).abs() <= 0.15,
    });

    if scene.cavities.len() >= 2 {
        let d1 = cavity_separation(&scene)?;
        let st = scene.cavity_nodes();
        let off = scene.cavity_offsets();
        let (mut ew, mut em) = (Vec::new(), Vec::new());
        for &m in &mu {
            let lam = C64::new(m, 0.0);
            let r = resolvent_from(&Assembler::new(&scene, lam)?)?;
            let b = block_split_from(&scene, &r.ty22, lam)?;
            ew.push(off_block_envelope(&b.w, &st.nodes, &st.weights, &off, EnvelopePairs::OffDiagonal, m, delta));
            em.push(off_block_envelope(&r.m1, &st.nodes, &st.weights, &off, EnvelopePairs::OffDiagonal, m, delta));
        }
        for (name, env) in [("w", ew), ("m1", em)] {
            let rep = decay_audit(&mu, &env, delta * d1)?;
            write(out, &format!("{name}_decay.csv"), &rep.to_csv())?;
            checks.push(Check {
                name: format!("{name}_off_diagonal_rate"),
                value: rep.fitted_rate,
                threshold: format!(">= {} (0.5·δ·d1, δ = {delta}, d1 = {})", fmt17(rep.threshold), fmt17(d1)),
                pass: rep.pass,
            });
        }
    } else {
        log::warn!("off-diagonal audits need at least two cavities; skipped");
    }
    finish_audit(out, "kernels", checks)
}

pub fn audit_densities(
    scene: Option<&Path>,
    refinement: Option<usize>,
    mu: Option<Vec<f64>>,
    out: &Path,
) -> Result<u8> {
    let mu = audit_mu(mu, &[8.0, 16.0, 32.0, 64.0])?;
    let scene = audit_scene(scene, refinement, fixtures::concentric(3))?;
    let mut rows = Vec::new();
    let mut dev = Vec::new();
    for &m in &mu {
        let lam = C64::new(m, 0.0);
        let d = solve_with(&Assembler::new(&scene, lam)?, &scene_flux(&scene, lam)?)?;
        dev.push(d.phi_deviation());
        rows.push(vec![fmt17(m), fmt17(d.phi_deviation()), fmt17(d.residual)]);
    }
    write(out, "densities.csv", &csv(&["mu", "phi_deviation", "solve_residual"], rows))?;
    let slope = loglog_slope(&mu, &dev)?;
    finish_audit(
        out,
        "densities",
        vec![Check {
            name: "phi_deviation_slope".into(),
            value: slope,
            threshold: "<= -0.8".into(),
            pass: slope <= -0.8,
        }],
    )
}

/// Samples at the given μ on the region's edge.
fn grid_from_mu(mu: &[f64], region: Region, profile: ImProfile) -> Result<LambdaGrid> {
    let samples = mu
        .iter()
        .map(|&m| {
            let im = match region {
                Region::LogRegion { delta1 } => delta1 * m / m.ln(),
                _ => 0.0,
            };
            SpectralSample::new(C64::new(m, im), region)
        })
        .collect::<enclosure_core::Result<Vec<_>>>()?;
    Ok(LambdaGrid {
        samples,
        region,
        mu_min: mu.iter().copied().fold(f64::INFINITY, f64::min),
        mu_max: mu.iter().copied().fold(0.0, f64::max),
        count: mu.len(),
        im_profile: profile,
    })
}

fn read_laplace_spec(path: &Path) -> Result<LaplaceIntegralSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).map_err(|e| CoreError::Parse(format!("{}: {e}", path.display())).into())
}

pub fn audit_laplace(spec: Option<&Path>, mu: Option<Vec<f64>>, delta1: f64, out: &Path) -> Result<u8> {
    let specs = match spec {
        Some(p) => vec![read_laplace_spec(p)?],
        None => laplace::shipped(),
    };
    let mut checks = Vec::new();
    for s in &specs {
        // Quartic phases have a degenerate minimum: check the lower bound on
        // the log-region edge. Everything else gets the remainder audit.
        if matches!(s.phase, Phase::Quartic { .. }) {
            let region = Region::LogRegion { delta1 };
            let grid = match &mu {
                Some(m) => grid_from_mu(&audit_mu(Some(m.clone()), &[])?, region, ImProfile::LogEdge)?,
                None => lambda_grid(region, 8.0, 256.0, 8, ImProfile::LogEdge)?,
            };
            let rep = degenerate_lower_bound_audit(s, &grid)?;
            write(out, &format!("{}_lower_bound.csv", s.name), &rep.to_csv())?;
            checks.push(Check {
                name: format!("{}_min_scaled_level", s.name),
                value: rep.min_level,
                threshold: format!("> 0 and band ratio {} <= 2", fmt17(rep.band_ratio)),
                pass: rep.pass,
            });
        } else {
            let grid = match &mu {
                Some(m) => grid_from_mu(&audit_mu(Some(m.clone()), &[])?, Region::RealAxis, ImProfile::Zero)?,
                None => lambda_grid(Region::RealAxis, 8.0, 128.0, 6, ImProfile::Zero)?,
            };
            let rep = holder_remainder_audit(s, &grid)?;
            write(out, &format!("{}_remainder.csv", s.name), &rep.to_csv())?;
            let worst = rep.rows.iter().map(|r| r.remainder).fold(0.0, f64::max);
            checks.push(Check {
                name: format!("{}_remainder_exponent", s.name),
                value: rep.fitted_exponent.unwrap_or(f64::INFINITY),
                threshold: if rep.at_floor {
                    format!("at quadrature floor, max remainder {}", fmt17(worst))
                } else {
                    format!(">= {} (0.4·α0)", fmt17(rep.threshold))
                },
                pass: rep.pass,
            });
        }
    }
    finish_audit(out, "laplace", checks)
}

// ------------------------------------------------------------- reconstruct

pub struct ReconstructConfig<'a> {
    pub scene: &'a SceneArgs,
    pub extractions: &'a [PathBuf],
    pub from_fit: bool,
    pub probe_radius: Option<f64>,
    pub margin: Option<f64>,
    pub resolution: Option<f64>,
    pub grid: &'a GridArgs,
    pub noise: &'a NoiseArgs,
    pub out: &'a Path,
}

#[derive(Serialize)]
struct ProbeRecord {
    p: [f64; 3],
    l_hat: f64,
    stderr: f64,
    margin: f64,
    source: &'static str,
}

#[derive(Serialize)]
struct ReconstructSummary {
    resolution: f64,
    voxel_diameter: f64,
    probes: Vec<ProbeRecord>,
    report: SoundnessReport,
}

fn default_probes(cfg: &ReconstructConfig<'_>, file: &SceneFile, scene: &Scene) -> Vec<Vector3<f64>> {
    if !cfg.scene.probes.is_empty() {
        return cfg.scene.probes.iter().map(|p| Vector3::from(*p)).collect();
    }
    let center = scene.outer_center();
    if let Some(r) = cfg.probe_radius {
        return fixtures::probes_on_sphere(&center, r);
    }
    if !file.probes.is_empty() {
        return file.probes();
    }
    let (lo, hi) = scene.outer.bounding_box();
    fixtures::probes_on_sphere(&center, 0.75 * (hi - lo).max())
}

pub fn reconstruct(cfg: &ReconstructConfig<'_>) -> Result<u8> {
    if let Some(m) = cfg.margin {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(usage(format!("--margin must be a non-negative number, got {m}")));
        }
    }
    let file = load_scene_file(&cfg.scene.scene, cfg.scene.refinement)?;
    let scene = build(&file)?;
    let resolution = cfg.resolution.unwrap_or_else(|| default_resolution(&scene));
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(usage(format!("--resolution must be positive, got {resolution}")));
    }
    let lattice = EnclosureGrid::new(&scene, resolution)?;
    let voxel_diameter = lattice.voxel_diameter();
    let margin_for = |stderr: f64| cfg.margin.unwrap_or_else(|| default_margin(&lattice, stderr));

    let mut records = Vec::new();
    if !cfg.extractions.is_empty() {
        for path in cfg.extractions {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let r: ExtractionResult =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            records.push(ProbeRecord {
                p: r.p,
                l_hat: r.l_hat,
                stderr: r.stderr,
                margin: margin_for(r.stderr),
                source: "extraction",
            });
        }
    } else {
        let grid = if cfg.from_fit { Some(make_grid(cfg.grid)?) } else { None };
        for p in default_probes(cfg, &file, &scene) {
            let (l_hat, stderr, source) = match &grid {
                None => {
                    scene.check_probe(&p)?;
                    (min_broken_path(&scene, &p)?.l_min, 0.0, "oracle")
                }
                Some(g) => {
                    let s = sweep_probe(&scene, &p, g, cfg.noise, false)?;
                    let fit = extract_length(&s.curve)?;
                    (fit.l_hat, fit.stderr, "fit")
                }
            };
            records.push(ProbeRecord { p: arr(&p), l_hat, stderr, margin: margin_for(stderr), source });
        }
    }
    let probes: Vec<ProbeLength> =
        records.iter().map(|r| ProbeLength { p: r.p, l_hat: r.l_hat, margin: r.margin }).collect();
    let (grid, report) = enclose(&scene, &probes, resolution)?;
    write(cfg.out, "enclosure.vtk", &grid.to_vtk())?;
    write(cfg.out, "enclosure.csv", &grid.to_csv())?;
    println!(
        "{} probes, {} retained / {} carved voxels, {} of {} cavity samples carved",
        records.len(),
        report.retained_voxels,
        report.carved_voxels,
        report.violations,
        report.samples
    );
    let violations = report.violations;
    let summary = ReconstructSummary { resolution, voxel_diameter, probes: records, report };
    write(cfg.out, "soundness.json", &json17(&summary))?;
    if violations > 0 {
        eprintln!("soundness violated: {violations} cavity samples lie in carved voxels");
        return Ok(2);
    }
    Ok(0)
}

// ---------------------------------------------------------------- fixtures

pub fn fixtures(refinement: usize, out: &Path) -> Result<u8> {
    for f in fixtures::all(refinement) {
        let name = f.name.clone().ok_or_else(|| anyhow!("shipped scene without a name"))?;
        let path = write(&out.join("scenes"), &format!("{name}.toml"), &f.to_toml())?;
        println!("{}", path.display());
    }
    for s in laplace::shipped() {
        let text = toml::to_string(&s).context("serializing a Laplace spec")?;
        let path = write(&out.join("laplace"), &format!("{}.toml", s.name), &text)?;
        println!("{}", path.display());
    }
    Ok(0)
}
