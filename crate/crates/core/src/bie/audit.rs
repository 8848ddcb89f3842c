//! Decay audits: envelopes of kernel magnitudes against the exponential rates
//! the estimates predict, fitted over a μ grid.

use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use super::kernels::robin_parts;
use super::singular::polar_integral;
use crate::error::{Error, Result};
use crate::fit::{linear_fit, loglog_slope};
use crate::geometry::Scene;
use crate::linalg::CMat;

/// Node pairs an envelope ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopePairs {
    /// Pairs on different cavities.
    OffDiagonal,
    /// Pairs on cavity j, excluding coincident nodes.
    Diagonal(usize),
}

/// Entries below this fraction of the block maximum are at the floating-point
/// floor of the dense algebra and are left out of envelopes.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

/// R = max |K(ξ, ζ)|·e^{(1−δ)μ|ξ−ζ|} over the selected pairs, with the kernel
/// K = A_ij / w_j recovered from the weighted matrix.
pub fn off_block_envelope(
    a: &CMat,
    nodes: &[Vector3<f64>],
    weights: &[f64],
    offsets: &[usize],
    pairs: EnvelopePairs,
    mu: f64,
    delta: f64,
) -> f64 {
    let owner = |i: usize| offsets.partition_point(|&o| o <= i) - 1;
    let selected = |i: usize, j: usize| match pairs {
        EnvelopePairs::OffDiagonal => owner(i) != owner(j),
        EnvelopePairs::Diagonal(k) => i != j && owner(i) == k && owner(j) == k,
    };
    let n = nodes.len();
    let mut kmax: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            if selected(i, j) {
                kmax = kmax.max(a[(i, j)].norm() / weights[j]);
            }
        }
    }
    let floor = ENVELOPE_FLOOR * kmax;
    let mut env: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            if !selected(i, j) {
                continue;
            }
            let k = a[(i, j)].norm() / weights[j];
            if k <= floor {
                continue;
            }
            let r = (nodes[i] - nodes[j]).norm();
            env = env.max(k * ((1.0 - delta) * mu * r).exp());
        }
    }
    env
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub mu: Vec<f64>,
    pub envelope: Vec<f64>,
    /// −d log R / dμ from a least-squares line.
    pub fitted_rate: f64,
    /// Exponent of the estimate being audited.
    pub target_rate: f64,
    /// Pass threshold: half the target rate.
    pub threshold: f64,
    pub pass: bool,
}

impl DecayReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mu,max_envelope,fitted_rate\n");
        for (m, e) in self.mu.iter().zip(&self.envelope) {
            s.push_str(&format!(
                "{},{},{}\n",
                crate::io::fmt17(*m),
                crate::io::fmt17(*e),
                crate::io::fmt17(self.fitted_rate)
            ));
        }
        s
    }
}

/// Fits log R(μ) against μ and compares the rate with half the target.
pub fn decay_audit(mu: &[f64], envelope: &[f64], target_rate: f64) -> Result<DecayReport> {
    if mu.len() < 3 || mu.len() != envelope.len() {
        return Err(Error::Fit(format!("decay fit needs at least 3 grid points, got {}", mu.len())));
    }
    if envelope.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Fit("envelope must be positive at every grid point".into()));
    }
    let logs: Vec<f64> = envelope.iter().map(|e| e.ln()).collect();
    let (slope, _) = linear_fit(mu, &logs)?;
    let threshold = 0.5 * target_rate;
    Ok(DecayReport {
        mu: mu.to_vec(),
        envelope: envelope.to_vec(),
        fitted_rate: -slope,
        target_rate,
        threshold,
        pass: -slope >= threshold,
    })
}

/// Bound shape of the diagonal M⁽¹⁾ kernel: e^{−μr}(1 + 1/r + min{μ(μr³)^{1/2}, r⁻³}).
pub fn m1_diagonal_bound(mu: f64, r: f64) -> f64 {
    (-mu * r).exp() * (1.0 + 1.0 / r + (mu * (mu * r.powi(3)).sqrt()).min(r.powi(-3)))
}

/// max |K(ξ,ζ)| / bound(μ, r) over the diagonal block of cavity j.
pub fn diagonal_envelope_constant(
    a: &CMat,
    nodes: &[Vector3<f64>],
    weights: &[f64],
    offsets: &[usize],
    j: usize,
    mu: f64,
    bound: impl Fn(f64, f64) -> f64,
) -> f64 {
    let (lo, hi) = (offsets[j], offsets[j + 1]);
    let mut kmax: f64 = 0.0;
    for c in lo..hi {
        for r in lo..hi {
            if r != c {
                kmax = kmax.max(a[(r, c)].norm() / weights[c]);
            }
        }
    }
    let floor = ENVELOPE_FLOOR * kmax;
    let mut cmax: f64 = 0.0;
    for c in lo..hi {
        for r in lo..hi {
            if r == c {
                continue;
            }
            let k = a[(r, c)].norm() / weights[c];
            if k <= floor {
                continue;
            }
            let dist = (nodes[r] - nodes[c]).norm();
            cmax = cmax.max(k / bound(mu, dist));
        }
    }
    cmax
}

/// Log-log slope of operator norms against μ.
/// ‖Y₂₂(λ)‖ on C(∂D): max over cavity nodes ξ of ∫_{∂D}|K(ξ, ζ)|dS_ζ.
///
/// The own surface is integrated by the polar rule so the near-singular part is
/// resolved at any μ; other cavities use the node rule. Row sums of the Nyström
/// matrix are not used here, since the locally corrected entries change sign
/// and overstate the norm once μ·spacing is large.
pub fn y22_sup_norm(scene: &Scene, lambda: C64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (k, cav) in scene.cavities.iter().enumerate() {
        let shape = cav
            .shape
            .as_ref()
            .ok_or_else(|| Error::InvalidSurface("operator norm needs analytic cavity surfaces".into()))?;
        let rho = scene.rho[k];
        let row_max = (0..cav.len())
            .into_par_iter()
            .map(|i| {
                let (xi, nu) = (cav.nodes[i], cav.normals[i]);
                let abs_k = |z: &Vector3<f64>| {
                    let (a, b) = robin_parts(lambda, &xi, &nu, rho, z);
                    (a + b).norm()
                };
                let own = polar_integral(shape, &cav.preimages[i], lambda.norm(), |z, _| C64::new(abs_k(z), 0.0)).re;
                let others: f64 = scene
                    .cavities
                    .iter()
                    .enumerate()
                    .filter(|(m, _)| *m != k)
                    .flat_map(|(_, c)| c.nodes.iter().zip(&c.weights))
                    .map(|(z, w)| abs_k(z) * w)
                    .sum();
                own + others
            })
            .reduce(|| 0.0, f64::max);
        best = best.max(row_max);
    }
    Ok(best)
}

pub fn norm_slope(mu: &[f64], norms: &[f64]) -> Result<f64> {
    loglog_slope(mu, norms)
}
