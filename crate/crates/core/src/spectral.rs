//! λ grids, indicator sweeps and the regression that turns log|I₀| into l̂(p, D).

use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bie::{Region, SpectralSample};
use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::forward::{evaluate_indicator_with, scene_flux, IndicatorValue};
use crate::geometry::{Scene, SceneFile};
use crate::io::fmt17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ImProfile {
    Zero,
    /// Im λ = δ₀ Re λ.
    SectorEdge,
    /// Im λ = δ₁ Re λ / ln Re λ.
    LogEdge,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaGrid {
    pub samples: Vec<SpectralSample>,
    pub region: Region,
    pub mu_min: f64,
    pub mu_max: f64,
    pub count: usize,
    pub im_profile: ImProfile,
}

/// Geometrically spaced μ with imaginary parts set by the profile.
pub fn lambda_grid(
    region: Region,
    mu_min: f64,
    mu_max: f64,
    count: usize,
    im_profile: ImProfile,
) -> Result<LambdaGrid> {
    if count < 3 {
        return Err(Error::InvalidGrid(format!("count {count} < 3")));
    }
    if !(mu_min > 0.0 && mu_max > mu_min && mu_max.is_finite()) {
        return Err(Error::InvalidGrid(format!("invalid μ range [{mu_min}, {mu_max}]")));
    }
    if matches!(region, Region::LogRegion { .. }) && mu_min < std::f64::consts::E {
        return Err(Error::InvalidGrid(format!("log region needs μ_min ≥ e, got {mu_min}")));
    }
    let im = |mu: f64| -> Result<f64> {
        Ok(match (im_profile, region) {
            (ImProfile::Zero, _) => 0.0,
            (ImProfile::SectorEdge, Region::Sector { delta0 }) => delta0 * mu,
            (ImProfile::LogEdge, Region::LogRegion { delta1 }) => delta1 * mu / mu.ln(),
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "profile {im_profile:?} does not belong to the {} region",
                    region.name()
                )))
            }
        })
    };
    let ratio = (mu_max / mu_min).powf(1.0 / (count - 1) as f64);
    let mut samples = Vec::with_capacity(count);
    for k in 0..count {
        let mu = if k == count - 1 { mu_max } else { mu_min * ratio.powi(k as i32) };
        let s = SpectralSample::new(C64::new(mu, im(mu)?), region)?;
        samples.push(s);
    }
    Ok(LambdaGrid { samples, region, mu_min, mu_max, count, im_profile })
}

/// Anything that produces I₀ at a spectral sample.
pub trait IndicatorEvaluator: Sync {
    fn evaluate(&self, sample: &SpectralSample) -> Result<IndicatorValue>;
}

impl<F> IndicatorEvaluator for F
where
    F: Fn(&SpectralSample) -> Result<IndicatorValue> + Sync,
{
    fn evaluate(&self, sample: &SpectralSample) -> Result<IndicatorValue> {
        self(sample)
    }
}

/// Synthetic data from the scene's flux model, optionally perturbed by
/// additive relative noise.
pub struct SceneEvaluator<'a> {
    pub scene: &'a Scene,
    pub p: Vector3<f64>,
    pub kernel_route: bool,
    /// (relative level, seed).
    pub noise: Option<(f64, u64)>,
}

impl<'a> SceneEvaluator<'a> {
    pub fn new(scene: &'a Scene, p: Vector3<f64>) -> Self {
        Self { scene, p, kernel_route: false, noise: None }
    }
}

impl IndicatorEvaluator for SceneEvaluator<'_> {
    fn evaluate(&self, sample: &SpectralSample) -> Result<IndicatorValue> {
        let mut g = scene_flux(self.scene, sample.lambda)?;
        if let Some((level, seed)) = self.noise {
            perturb(&mut g, level, seed ^ sample.mu.to_bits());
        }
        evaluate_indicator_with(self.scene, sample.lambda, &self.p, &g, self.kernel_route)
    }
}

/// g ← g·(1 + level·ε) with ε uniform in [−1, 1]², deterministic in the seed.
pub fn perturb(g: &mut [C64], level: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in g {
        let e = C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        *v *= C64::new(1.0, 0.0) + e * level;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub index: usize,
    pub lambda: C64,
    pub mu: f64,
    pub value: IndicatorValue,
}

#[derive(Debug, Clone, Serialize)]
pub struct LengthFit {
    pub l_hat: f64,
    pub stderr: f64,
    /// Coefficient of log μ.
    pub a: f64,
    pub b: f64,
    pub rms_residual: f64,
    pub n: usize,
    pub mu_min: f64,
    pub mu_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndicatorCurve {
    pub region: Region,
    pub points: Vec<CurvePoint>,
    /// Samples that failed, with the reason.
    pub failures: Vec<(usize, String)>,
    pub warnings: Vec<String>,
    pub fit: Option<LengthFit>,
}

impl IndicatorCurve {
    /// (μ, log|I₀|) over the valid samples.
    pub fn log_abs(&self) -> (Vec<f64>, Vec<f64>) {
        self.points
            .iter()
            .filter(|c| c.value.i0_direct.norm() > 0.0)
            .map(|c| (c.mu, c.value.i0_direct.norm().ln()))
            .unzip()
    }

    /// Indicator dump: mu, im_lambda, re_I0, im_I0, log_abs_I0, route_residual.
    pub fn to_csv(&self) -> String {
        crate::io::csv(
            &["mu", "im_lambda", "re_I0", "im_I0", "log_abs_I0", "route_residual"],
            self.points.iter().map(|c| {
                let i0 = c.value.i0_direct;
                vec![
                    fmt17(c.mu),
                    fmt17(c.lambda.im),
                    fmt17(i0.re),
                    fmt17(i0.im),
                    fmt17(i0.norm().ln()),
                    fmt17(c.value.route_residual),
                ]
            }),
        )
    }
}

/// Evaluates the indicator over the grid. Individual failures are recorded;
/// the sweep fails only if every sample does. Samples run one after another,
/// each using the parallel assembly and LU.
pub fn sweep(eval: &impl IndicatorEvaluator, grid: &LambdaGrid) -> Result<IndicatorCurve> {
    let mut points = Vec::new();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    for (index, s) in grid.samples.iter().enumerate() {
        match eval.evaluate(s) {
            Ok(value) if value.i0_direct.norm().is_finite() && value.i0_direct.norm() > 0.0 => {
                points.push(CurvePoint { index, lambda: s.lambda, mu: s.mu, value })
            }
            Ok(value) => {
                let msg = format!("indicator {} is zero or not finite", value.i0_direct);
                log::warn!("λ = {}: {msg}", s.lambda);
                failures.push((index, msg));
            }
            Err(e) => {
                log::warn!("λ = {}: {e}", s.lambda);
                failures.push((index, e.to_string()));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::Fit("every sample of the sweep failed".into()));
    }
    if !failures.is_empty() {
        warnings.push(format!("{} of {} samples failed", failures.len(), grid.samples.len()));
    }
    let mut curve = IndicatorCurve { region: grid.region, points, failures, warnings, fit: None };
    curve.fit = extract_length(&curve).ok();
    Ok(curve)
}

/// Sweep of a scene at probe p, with the assumption check and the μ-ceiling
/// guard reported as warnings.
pub fn sweep_scene(scene: &Scene, p: &Vector3<f64>, grid: &LambdaGrid, kernel_route: bool) -> Result<IndicatorCurve> {
    scene.check_probe(p)?;
    let mut pre = Vec::new();
    if let Ok(r) = crate::path_oracle::min_broken_path(scene, p) {
        if !r.assumption_i2_holds {
            pre.push("I2 fails at this probe (grazing or backward minimizer): no length guarantee".to_string());
        }
        if let Some(w) = mu_ceiling_warning(scene, grid.mu_max, r.l_min) {
            pre.push(w);
        }
    }
    for w in &pre {
        log::warn!("{w}");
    }
    let eval = SceneEvaluator { kernel_route, ..SceneEvaluator::new(scene, *p) };
    let mut curve = sweep(&eval, grid)?;
    pre.append(&mut curve.warnings);
    curve.warnings = pre;
    Ok(curve)
}

/// Warns when the kernel decays across one mesh cell by more than the double
/// range can resolve, or the indicator itself leaves the representable range.
pub fn mu_ceiling_warning(scene: &Scene, mu_max: f64, l: f64) -> Option<String> {
    let h = scene.cavities.iter().map(|c| c.spacing).fold(scene.outer.spacing, f64::max);
    let dynamic_range = (mu_max * l).exp();
    if (-mu_max * h).exp() < f64::EPSILON * dynamic_range.min(1.0 / f64::EPSILON)
        || !dynamic_range.is_finite()
        || mu_max * l > 690.0
    {
        Some(format!("μ_max = {mu_max} exceeds the resolvable range for mesh spacing {h:.3e} and length {l:.3}"))
    } else {
        None
    }
}

/// Fit of log|I₀| = −l·μ + a·log μ + b over the valid samples.
pub fn extract_length(curve: &IndicatorCurve) -> Result<LengthFit> {
    let (mu, y) = curve.log_abs();
    fit_length(&mu, &y)
}

pub fn fit_length(mu: &[f64], log_abs: &[f64]) -> Result<LengthFit> {
    if mu.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 samples, got {}", mu.len())));
    }
    let mu_min = mu.iter().copied().fold(f64::INFINITY, f64::min);
    let mu_max = mu.iter().copied().fold(0.0, f64::max);
    if !(mu_max > 1.2 * mu_min) {
        return Err(Error::Fit(format!("μ range [{mu_min}, {mu_max}] too narrow")));
    }
    let design: Vec<Vec<f64>> = mu.iter().map(|&m| vec![-m, m.ln(), 1.0]).collect();
    let f = least_squares(&design, log_abs)?;
    let l_hat = f.params[0];
    if !(l_hat > 0.0) {
        return Err(Error::Fit(format!("fitted length {l_hat} is not positive")));
    }
    Ok(LengthFit {
        l_hat,
        stderr: f.stderr[0],
        a: f.params[1],
        b: f.params[2],
        rms_residual: f.rms,
        n: mu.len(),
        mu_min,
        mu_max,
    })
}

/// Re[λ^{β₀+1}e^{λl}I₀] per sample, the quantity whose sign the asymptotics fix.
pub fn sign_structure(curve: &IndicatorCurve, l: f64, beta0: f64) -> Vec<f64> {
    curve
        .points
        .iter()
        .map(|c| {
            let lam = c.lambda;
            // Scale by e^{−μl} first so the product stays in range.
            let phase = (C64::new(0.0, lam.im * l)).exp();
            let mag = (lam.re * l + c.value.i0_direct.norm().ln()).exp();
            (lam.powf(beta0 + 1.0) * phase * (c.value.i0_direct / c.value.i0_direct.norm()) * mag).re
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub p: [f64; 3],
    pub l_hat: f64,
    pub stderr: f64,
    pub region: String,
    pub mu_range: [f64; 2],
    pub oracle_value: Option<f64>,
    pub rel_error: Option<f64>,
}

impl ExtractionResult {
    pub fn new(p: &Vector3<f64>, fit: &LengthFit, region: Region, oracle: Option<f64>) -> Self {
        Self {
            p: [p.x, p.y, p.z],
            l_hat: fit.l_hat,
            stderr: fit.stderr,
            region: region.name().into(),
            mu_range: [fit.mu_min, fit.mu_max],
            oracle_value: oracle,
            rel_error: oracle.map(|l| (fit.l_hat - l).abs() / l),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub refinement: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    pub l_hat: f64,
    pub stderr: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub oracle: f64,
    pub rows: Vec<ConvergenceRow>,
    /// At the finest mesh, error decreases as μ_max grows.
    pub improves_with_mu: bool,
    /// At the largest μ range, error decreases as the mesh refines.
    pub improves_with_mesh: bool,
    /// At the coarsest mesh the error stops improving with μ_max.
    pub quadrature_floor: bool,
}

/// l̂ error over refinement levels and μ ranges (real axis, `count` points each).
pub fn convergence_report(
    file: &SceneFile,
    p: &Vector3<f64>,
    refinements: &[usize],
    mu_ranges: &[(f64, f64)],
    count: usize,
) -> Result<ConvergenceReport> {
    if refinements.len() < 2 {
        return Err(Error::InvalidGrid("convergence needs at least 2 refinement levels".into()));
    }
    let finest = *refinements.iter().max().expect("non-empty");
    let oracle = crate::path_oracle::min_broken_path(&file.with_refinement(finest).build()?, p)?.l_min;
    let mut rows = Vec::new();
    for &r in refinements {
        let scene = file.with_refinement(r).build()?;
        for &(lo, hi) in mu_ranges {
            let grid = lambda_grid(Region::RealAxis, lo, hi, count, ImProfile::Zero)?;
            let curve = sweep(&SceneEvaluator::new(&scene, *p), &grid)?;
            let fit = extract_length(&curve)?;
            rows.push(ConvergenceRow {
                refinement: r,
                mu_min: lo,
                mu_max: hi,
                l_hat: fit.l_hat,
                stderr: fit.stderr,
                abs_error: (fit.l_hat - oracle).abs(),
            });
        }
    }
    let err =
        |r: usize, k: usize| rows.iter().filter(|x| x.refinement == r).nth(k).map(|x| x.abs_error).unwrap_or(f64::NAN);
    let nr = mu_ranges.len();
    let coarsest = *refinements.iter().min().expect("non-empty");
    let improves_with_mu = nr >= 2 && err(finest, nr - 1) < err(finest, 0);
    let improves_with_mesh = err(finest, nr - 1) < err(coarsest, nr - 1);
    let quadrature_floor = nr >= 2 && err(coarsest, nr - 1) >= 0.9 * err(coarsest, nr - 2);
    Ok(ConvergenceReport { oracle, rows, improves_with_mu, improves_with_mesh, quadrature_floor })
}
