//! Laplace integrals I(λ) = ∫_U e^{−λS(σ)} φ(σ) h(σ; λ) dσ in one or two
//! dimensions, their leading-order asymptotics and the audits built on them.
//!
//! Everything is evaluated relative to the minimum: the quadrature integrates
//! e^{−λ(S−τ₋∞)} and the factor e^{−λτ₋∞} is applied once at the end, so large
//! τ₋∞ does not underflow the integrand.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bie::SpectralSample;
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::io::fmt17;
use crate::quadrature::{adaptive, Integral};
use crate::spectral::LambdaGrid;

/// Fraction of the cutoff radius on which φ ≡ 1.
pub const CUTOFF_PLATEAU: f64 = 0.6;
/// Remainders below this are treated as quadrature noise.
pub const REMAINDER_FLOOR: f64 = 1e-9;

const REL_TOL: f64 = 1e-12;
const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phase {
    /// τ + Σ cᵢσᵢ².
    Quadratic {
        coeffs: Vec<f64>,
        #[serde(default)]
        tau: f64,
    },
    /// τ + aσ₁² + bσ₂⁴, two-dimensional with a flat Hessian direction.
    Quartic {
        a: f64,
        b: f64,
        #[serde(default)]
        tau: f64,
    },
}

impl Phase {
    pub fn dimension(&self) -> usize {
        match self {
            Phase::Quadratic { coeffs, .. } => coeffs.len(),
            Phase::Quartic { .. } => 2,
        }
    }

    pub fn tau(&self) -> f64 {
        match self {
            Phase::Quadratic { tau, .. } | Phase::Quartic { tau, .. } => *tau,
        }
    }

    /// S(σ) − τ₋∞ in centred coordinates.
    fn excess(&self, s: &[f64; 2]) -> f64 {
        match self {
            Phase::Quadratic { coeffs, .. } => coeffs.iter().zip(s).map(|(c, x)| c * x * x).sum(),
            Phase::Quartic { a, b, .. } => a * s[0] * s[0] + b * s[1].powi(4),
        }
    }

    /// Diagonal of Hess S(0); both shipped phases are separable.
    fn hessian_diagonal(&self) -> Vec<f64> {
        match self {
            Phase::Quadratic { coeffs, .. } => coeffs.iter().map(|c| 2.0 * c).collect(),
            Phase::Quartic { a, .. } => vec![2.0 * a, 0.0],
        }
    }

    /// The same phase times c.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Phase::Quadratic { coeffs, tau } => {
                Phase::Quadratic { coeffs: coeffs.iter().map(|x| c * x).collect(), tau: c * tau }
            }
            Phase::Quartic { a, b, tau } => Phase::Quartic { a: c * a, b: c * b, tau: c * tau },
        }
    }
}

/// h(σ; λ) = h₁(σ) + λ⁻¹h̃₁(σ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Amplitude {
    Constant {
        value: f64,
    },
    /// h₁ = exp(aσ₁ + b|σ|²).
    Smooth {
        a: f64,
        b: f64,
    },
    /// h₁ = 1 + c|σ|^α.
    Holder {
        alpha: f64,
        c: f64,
    },
    /// h₁ = 1 + ½cos(kσ₁), h̃₁ = amp·e^{ikσ_n}.
    Oscillatory {
        k: f64,
        amp: f64,
    },
}

impl Amplitude {
    fn parts(&self, s: &[f64; 2], n: usize) -> (C64, C64) {
        let r2: f64 = s[..n].iter().map(|x| x * x).sum();
        let zero = C64::new(0.0, 0.0);
        match *self {
            Amplitude::Constant { value } => (C64::new(value, 0.0), zero),
            Amplitude::Smooth { a, b } => (C64::new((a * s[0] + b * r2).exp(), 0.0), zero),
            Amplitude::Holder { alpha, c } => (C64::new(1.0 + c * r2.sqrt().powf(alpha), 0.0), zero),
            Amplitude::Oscillatory { k, amp } => {
                (C64::new(1.0 + 0.5 * (k * s[0]).cos(), 0.0), C64::from_polar(amp, k * s[n - 1]))
            }
        }
    }

    fn eval(&self, s: &[f64; 2], n: usize, lambda: C64) -> C64 {
        let (h1, ht) = self.parts(s, n);
        h1 + ht / lambda
    }

    /// Hölder exponent of h₁ at the minimum; 1 for Lipschitz amplitudes.
    pub fn holder_exponent(&self) -> f64 {
        match *self {
            Amplitude::Holder { alpha, .. } => alpha.min(1.0),
            _ => 1.0,
        }
    }
}

/// A Laplace integral on the box U = center + [−R, R]ⁿ with the radial C²
/// cutoff φ supported in the ball of radius R.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceIntegralSpec {
    pub name: String,
    pub phase: Phase,
    pub amplitude: Amplitude,
    pub cutoff_radius: f64,
    /// Location of the minimum; phase, amplitude and cutoff are all centred here.
    #[serde(default)]
    pub center: Vec<f64>,
}

/// Sampled hypothesis check.
#[derive(Debug, Clone, Serialize)]
pub struct SpecCheck {
    /// S ≥ τ₋∞ at every sample.
    pub s1: bool,
    /// Smallest C₀ with S ≤ τ₋∞ + C₀|σ|².
    pub c0: f64,
    pub s2: bool,
    /// min Re h₁ and max |h₁| + |h̃₁| over the samples.
    pub re_h1_min: f64,
    pub h_max: f64,
    pub h2: bool,
}

impl LaplaceIntegralSpec {
    pub fn dimension(&self) -> usize {
        self.phase.dimension()
    }

    fn center_at(&self, i: usize) -> f64 {
        self.center.get(i).copied().unwrap_or(0.0)
    }

    /// φ at a centred point.
    pub fn cutoff(&self, s: &[f64; 2]) -> f64 {
        let n = self.dimension();
        let t = s[..n].iter().map(|x| x * x).sum::<f64>().sqrt() / self.cutoff_radius;
        if t <= CUTOFF_PLATEAU {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            let u = (t - CUTOFF_PLATEAU) / (1.0 - CUTOFF_PLATEAU);
            1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
        }
    }

    /// The same integral translated by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Self {
        let n = self.dimension();
        Self {
            center: (0..n).map(|i| self.center_at(i) + shift.get(i).copied().unwrap_or(0.0)).collect(),
            ..self.clone()
        }
    }

    fn validate_shape(&self) -> Result<()> {
        let n = self.dimension();
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidScene(format!("{}: dimension {n} is not 1 or 2", self.name)));
        }
        if !(self.cutoff_radius > 0.0 && self.cutoff_radius.is_finite()) {
            return Err(Error::InvalidScene(format!("{}: cutoff radius must be positive", self.name)));
        }
        if !self.center.is_empty() && self.center.len() != n {
            return Err(Error::InvalidScene(format!(
                "{}: center has {} entries for dimension {n}",
                self.name,
                self.center.len()
            )));
        }
        Ok(())
    }

    /// Samples (S.1), (S.2) and (H.2) on a 41ⁿ grid over the cutoff ball.
    pub fn check(&self) -> Result<SpecCheck> {
        self.validate_shape()?;
        let n = self.dimension();
        let m = 41;
        let mut out = SpecCheck { s1: true, c0: 0.0, s2: true, re_h1_min: f64::INFINITY, h_max: 0.0, h2: true };
        let probe_lambda = C64::new(1.0, 0.0);
        let coord = |k: usize| self.cutoff_radius * (2.0 * k as f64 / (m - 1) as f64 - 1.0);
        for i in 0..m {
            for j in 0..if n == 2 { m } else { 1 } {
                let s = [coord(i), if n == 2 { coord(j) } else { 0.0 }];
                let r2: f64 = s[..n].iter().map(|x| x * x).sum();
                if r2 > self.cutoff_radius * self.cutoff_radius {
                    continue;
                }
                let ex = self.phase.excess(&s);
                if ex < -1e-14 {
                    out.s1 = false;
                }
                if r2 > 0.0 {
                    out.c0 = out.c0.max(ex / r2);
                }
                let (h1, ht) = self.amplitude.parts(&s, n);
                out.re_h1_min = out.re_h1_min.min(h1.re);
                out.h_max = out.h_max.max(h1.norm() + (ht / probe_lambda).norm());
            }
        }
        out.s2 = out.c0.is_finite();
        out.h2 = out.re_h1_min > 0.0 && out.h_max.is_finite();
        Ok(out)
    }

    /// e^{λτ₋∞}I(λ) by nested adaptive Gauss–Kronrod quadrature.
    pub fn scaled_quadrature(&self, lambda: C64) -> Result<Integral> {
        self.validate_shape()?;
        let n = self.dimension();
        let r = self.cutoff_radius;
        let (c0, c1) = (self.center_at(0), self.center_at(1));
        let integrand = |x: &[f64; 2]| {
            let s = &[x[0] - c0, x[1] - c1];
            let phi = self.cutoff(s);
            if phi == 0.0 {
                return C64::new(0.0, 0.0);
            }
            (-lambda * self.phase.excess(s)).exp() * phi * self.amplitude.eval(s, n, lambda)
        };
        // Absolute floor from the size of the leading term, so far tails stop early.
        let scale = (std::f64::consts::PI / lambda.re).powf(0.5 * n as f64)
            * self.amplitude.eval(&[0.0; 2], n, lambda).norm().max(1e-300);
        let abs_tol = 1e-15 * scale;
        let halves = [(c0 - r, c0), (c0, c0 + r)];
        let mut total = Integral { value: C64::new(0.0, 0.0), error: 0.0 };
        for &(a, b) in &halves {
            let part = if n == 1 {
                adaptive(|x| integrand(&[x, 0.0]), a, b, abs_tol, REL_TOL, MAX_INTERVALS)?
            } else {
                let mut inner_err: Option<Error> = None;
                let mut inner_sum = 0.0;
                let outer = adaptive(
                    |x| {
                        let h = (r * r - (x - c0) * (x - c0)).max(0.0).sqrt();
                        let mut v = C64::new(0.0, 0.0);
                        for &(c, d) in &[(c1 - h, c1), (c1, c1 + h)] {
                            match adaptive(
                                |y| integrand(&[x, y]),
                                c,
                                d,
                                abs_tol / (4.0 * r),
                                0.1 * REL_TOL,
                                MAX_INTERVALS,
                            ) {
                                Ok(i) => {
                                    v += i.value;
                                    inner_sum = f64::max(inner_sum, i.error);
                                }
                                Err(e) => {
                                    inner_err.get_or_insert(e);
                                }
                            }
                        }
                        v
                    },
                    a,
                    b,
                    abs_tol,
                    REL_TOL,
                    MAX_INTERVALS,
                )?;
                if let Some(e) = inner_err {
                    return Err(e);
                }
                Integral { value: outer.value, error: outer.error + 2.0 * r * inner_sum }
            };
            total.value += part.value;
            total.error += part.error;
        }
        Ok(total)
    }
}

/// I(λ) with its error estimate.
pub fn quadrature_value(spec: &LaplaceIntegralSpec, lambda: C64) -> Result<Integral> {
    let q = spec.scaled_quadrature(lambda)?;
    let f = (-lambda * spec.phase.tau()).exp();
    Ok(Integral { value: q.value * f, error: q.error * f.norm() })
}

/// (2π/λ)^{n/2}(det Hess S(0))^{−1/2}e^{−λτ₋∞}h(0; λ), principal branch.
pub fn nondegenerate_asymptotic(spec: &LaplaceIntegralSpec, lambda: C64) -> Result<C64> {
    Ok(scaled_asymptotic(spec, lambda)? * (-lambda * spec.phase.tau()).exp())
}

fn scaled_asymptotic(spec: &LaplaceIntegralSpec, lambda: C64) -> Result<C64> {
    spec.validate_shape()?;
    let n = spec.dimension();
    let diag = spec.phase.hessian_diagonal();
    let det: f64 = diag.iter().product();
    if diag.iter().any(|d| !(*d > 1e-12)) {
        return Err(Error::Assumption(format!("{}: Hessian at the minimum is singular (det = {det:e})", spec.name)));
    }
    let pre = (C64::new(2.0 * std::f64::consts::PI, 0.0) / lambda).powf(0.5 * n as f64) / det.sqrt();
    Ok(pre * spec.amplitude.eval(&[0.0; 2], n, lambda))
}

/// Quadrature against asymptotic at one λ.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticRow {
    pub mu: f64,
    pub im_lambda: f64,
    pub quadrature: C64,
    pub asymptotic: C64,
    pub quadrature_error: f64,
    /// |quadrature/asymptotic − 1|.
    pub remainder: f64,
}

pub fn compare(spec: &LaplaceIntegralSpec, sample: &SpectralSample) -> Result<AsymptoticRow> {
    let q = spec.scaled_quadrature(sample.lambda)?;
    let a = scaled_asymptotic(spec, sample.lambda)?;
    Ok(AsymptoticRow {
        mu: sample.mu,
        im_lambda: sample.lambda.im,
        quadrature: q.value,
        asymptotic: a,
        quadrature_error: q.error / q.value.norm(),
        remainder: (q.value / a - 1.0).norm(),
    })
}

/// μ^{n/2}Re[e^{λτ₋∞}I(λ)] over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub name: String,
    pub mu: Vec<f64>,
    pub im_lambda: Vec<f64>,
    pub level: Vec<f64>,
    pub min_level: f64,
    /// max/min of the level over the upper half of the grid.
    pub band_ratio: f64,
    pub positive: bool,
    pub stable: bool,
    pub pass: bool,
}

impl LowerBoundReport {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = (0..self.mu.len())
            .map(|k| vec![fmt17(self.mu[k]), fmt17(self.im_lambda[k]), fmt17(self.level[k])])
            .collect();
        crate::io::csv(&["mu", "im_lambda", "scaled_level"], rows)
    }
}

pub fn degenerate_lower_bound_audit(spec: &LaplaceIntegralSpec, grid: &LambdaGrid) -> Result<LowerBoundReport> {
    let n = spec.dimension() as f64;
    let mut level = Vec::with_capacity(grid.samples.len());
    for s in &grid.samples {
        let q = spec.scaled_quadrature(s.lambda)?;
        level.push(s.mu.powf(0.5 * n) * q.value.re);
    }
    let min_level = level.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = &level[level.len() / 2..];
    let (lo, hi) = upper.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let band_ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let positive = min_level > 0.0;
    let stable = band_ratio <= 2.0;
    Ok(LowerBoundReport {
        name: spec.name.clone(),
        mu: grid.samples.iter().map(|s| s.mu).collect(),
        im_lambda: grid.samples.iter().map(|s| s.lambda.im).collect(),
        level,
        min_level,
        band_ratio,
        positive,
        stable,
        pass: positive && stable,
    })
}

/// Decay of |quadrature/asymptotic − 1| in μ.
#[derive(Debug, Clone, Serialize)]
pub struct RemainderReport {
    pub name: String,
    pub rows: Vec<AsymptoticRow>,
    /// −(log-log slope); `None` when every remainder is at the floor.
    pub fitted_exponent: Option<f64>,
    pub alpha0: f64,
    pub threshold: f64,
    pub at_floor: bool,
    pub pass: bool,
}

impl RemainderReport {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    fmt17(r.mu),
                    fmt17(r.im_lambda),
                    fmt17(r.quadrature.re),
                    fmt17(r.quadrature.im),
                    fmt17(r.asymptotic.re),
                    fmt17(r.asymptotic.im),
                    fmt17(r.remainder),
                ]
            })
            .collect();
        crate::io::csv(&["mu", "im_lambda", "re_quad", "im_quad", "re_asym", "im_asym", "remainder"], rows)
    }
}

/// Passes if the fitted decay exponent is at least 0.4·α₀, or if the remainder
/// never leaves the quadrature floor.
pub fn holder_remainder_audit(spec: &LaplaceIntegralSpec, grid: &LambdaGrid) -> Result<RemainderReport> {
    let rows = grid.samples.iter().map(|s| compare(spec, s)).collect::<Result<Vec<_>>>()?;
    let alpha0 = spec.amplitude.holder_exponent();
    let threshold = 0.4 * alpha0;
    let at_floor = rows.iter().all(|r| r.remainder < REMAINDER_FLOOR);
    let fitted_exponent = if at_floor {
        None
    } else {
        let mu: Vec<f64> = rows.iter().map(|r| r.mu).collect();
        let rem: Vec<f64> = rows.iter().map(|r| r.remainder.max(f64::MIN_POSITIVE)).collect();
        Some(-loglog_slope(&mu, &rem)?)
    };
    let pass = at_floor || fitted_exponent.is_some_and(|e| e >= threshold);
    Ok(RemainderReport { name: spec.name.clone(), rows, fitted_exponent, alpha0, threshold, at_floor, pass })
}

/// ∫ e^{−λτ}dβ_λ(τ) for a one-dimensional spec, with
/// β_λ(τ) = ∫_{S<τ} φh dσ, by parts: e^{−λτ∞}β(τ∞) + λ∫_{τ₋∞}^{τ∞} e^{−λτ}β(τ)dτ.
/// Returned relative to e^{−λτ₋∞} like [`LaplaceIntegralSpec::scaled_quadrature`].
pub fn stieltjes_value(spec: &LaplaceIntegralSpec, lambda: C64) -> Result<C64> {
    spec.validate_shape()?;
    if spec.dimension() != 1 {
        return Err(Error::InvalidScene(format!("{}: Stieltjes form needs n = 1", spec.name)));
    }
    let r = spec.cutoff_radius;
    let ex = |x: f64| spec.phase.excess(&[x, 0.0]);
    // Sublevel sets of a unimodal phase are intervals [σ₋(t), σ₊(t)].
    let branch = |t: f64, end: f64| {
        if ex(end) <= t {
            return end;
        }
        let (mut a, mut b) = (0.0, end);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if ex(m) <= t {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let weight = |x: f64| spec.amplitude.eval(&[x, 0.0], 1, lambda) * spec.cutoff(&[x, 0.0]);
    let beta = |t: f64| -> Result<C64> {
        let (a, b) = (branch(t, -r), branch(t, r));
        Ok(adaptive(weight, a, 0.0, 1e-16, 1e-13, MAX_INTERVALS)?.value
            + adaptive(weight, 0.0, b, 1e-16, 1e-13, MAX_INTERVALS)?.value)
    };
    let t_inf = ex(-r).max(ex(r));
    let mut err: Option<Error> = None;
    let tail = adaptive(
        |t| match beta(t) {
            Ok(v) => (-lambda * t).exp() * v,
            Err(e) => {
                err.get_or_insert(e);
                C64::new(0.0, 0.0)
            }
        },
        0.0,
        t_inf,
        1e-16,
        1e-11,
        MAX_INTERVALS,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok((-lambda * t_inf).exp() * beta(t_inf)? + lambda * tail.value)
}

/// The shipped specs, by name.
pub fn shipped() -> Vec<LaplaceIntegralSpec> {
    let spec = |name: &str, phase, amplitude, cutoff_radius| LaplaceIntegralSpec {
        name: name.into(),
        phase,
        amplitude,
        cutoff_radius,
        center: Vec::new(),
    };
    vec![
        spec(
            "gaussian",
            Phase::Quadratic { coeffs: vec![1.0, 1.0], tau: 0.0 },
            Amplitude::Constant { value: 1.0 },
            6.0,
        ),
        spec("gaussian_1d", Phase::Quadratic { coeffs: vec![1.0], tau: 0.0 }, Amplitude::Constant { value: 1.0 }, 6.0),
        spec(
            "anisotropic",
            Phase::Quadratic { coeffs: vec![1.0, 4.0], tau: 0.5 },
            Amplitude::Smooth { a: 0.5, b: 0.25 },
            1.5,
        ),
        spec("degenerate", Phase::Quartic { a: 1.0, b: 1.0, tau: 0.0 }, Amplitude::Constant { value: 1.0 }, 1.0),
        spec(
            "holder",
            Phase::Quadratic { coeffs: vec![1.0, 1.0], tau: 0.0 },
            Amplitude::Holder { alpha: 0.5, c: 1.0 },
            1.5,
        ),
        spec(
            "oscillatory",
            Phase::Quartic { a: 1.0, b: 1.0, tau: 0.0 },
            Amplitude::Oscillatory { k: 3.0, amp: 2.0 },
            1.0,
        ),
    ]
}

pub fn shipped_spec(name: &str) -> Option<LaplaceIntegralSpec> {
    shipped().into_iter().find(|s| s.name == name)
}
