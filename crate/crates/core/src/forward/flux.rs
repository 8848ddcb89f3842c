use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive;

/// Time profile of the prescribed heat flux f(t, y) on the outer boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluxKind {
    /// f ≡ value.
    Constant { value: f64 },
    /// f(t, y) = (value + slope·t)·(1 + modulation·(y − c)), with c the outer center.
    C1Profile {
        value: f64,
        slope: f64,
        #[serde(default)]
        modulation: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxModel {
    pub kind: FluxKind,
    /// Time horizon T.
    pub horizon: f64,
    /// Exponent β₀ with Re[λ^β₀ g] bounded below; 2 for profiles with f(0, ·) > 0.
    pub beta0: f64,
}

impl Default for FluxModel {
    fn default() -> Self {
        Self { kind: FluxKind::Constant { value: 1.0 }, horizon: 1.0, beta0: 2.0 }
    }
}

impl FluxModel {
    pub fn constant(value: f64, horizon: f64) -> Self {
        Self { kind: FluxKind::Constant { value }, horizon, beta0: 2.0 }
    }

    /// Checks positivity of f(0, ·) on the given boundary nodes.
    pub fn validate(&self, nodes: &[Vector3<f64>], center: &Vector3<f64>) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidScene("horizon T must be positive".into()));
        }
        match &self.kind {
            FluxKind::Constant { value } if !(*value > 0.0) => {
                Err(Error::InvalidScene("constant flux must be positive".into()))
            }
            FluxKind::C1Profile { value, modulation, .. } => {
                let m = Vector3::from(*modulation);
                let inf = nodes.iter().map(|y| value * (1.0 + m.dot(&(y - center)))).fold(f64::INFINITY, f64::min);
                if inf > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidScene(format!("flux profile has inf f(0, y) = {inf:.3e} ≤ 0")))
                }
            }
            _ => Ok(()),
        }
    }

    /// ∫₀ᵀ e^{−λ²t} τ(t) dt for the time factor τ of the profile.
    pub fn time_transform(&self, lambda: C64) -> Result<C64> {
        let l2 = lambda * lambda;
        if !(l2.re > 0.0) {
            return Err(Error::InvalidGrid(format!("Re λ² = {:.3e} ≤ 0: the flux transform does not decay", l2.re)));
        }
        let t = self.horizon;
        match &self.kind {
            FluxKind::Constant { value } => Ok(*value * (C64::new(1.0, 0.0) - (-l2 * t).exp()) / l2),
            FluxKind::C1Profile { value, slope, .. } => {
                let f = |s: f64| (-l2 * s).exp() * (value + slope * s);
                // Split off the boundary layer of width 1/|λ²| at t = 0.
                let cut = (30.0 / l2.re).min(t);
                let head = adaptive(f, 0.0, cut, 1e-300, 1e-14, 4000)?;
                let tail = if cut < t { adaptive(f, cut, t, 1e-300, 1e-14, 4000)?.value } else { C64::new(0.0, 0.0) };
                Ok(head.value + tail)
            }
        }
    }

    /// Spatial factor of the profile at a boundary node.
    pub fn spatial_factor(&self, y: &Vector3<f64>, center: &Vector3<f64>) -> f64 {
        match &self.kind {
            FluxKind::Constant { .. } => 1.0,
            FluxKind::C1Profile { modulation, .. } => 1.0 + Vector3::from(*modulation).dot(&(y - center)),
        }
    }
}

/// Laplace-transformed flux g(y; λ) = ∫₀ᵀ e^{−λ²t} f(t, y) dt on the given nodes.
pub fn laplace_flux(model: &FluxModel, lambda: C64, nodes: &[Vector3<f64>], center: &Vector3<f64>) -> Result<Vec<C64>> {
    let tau = model.time_transform(lambda)?;
    Ok(nodes.iter().map(|y| tau * model.spatial_factor(y, center)).collect())
}
