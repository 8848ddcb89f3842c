//! Modified-Helmholtz kernels. E_λ(x, y) = e^{−λr}/(2πr) is twice the
//! free-space Green's function of Δ − λ².

use nalgebra::Vector3;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const INV_2PI: f64 = 1.0 / (2.0 * std::f64::consts::PI);

#[inline]
pub fn e_kernel(lambda: C64, r: f64) -> C64 {
    (-lambda * r).exp() * (INV_2PI / r)
}

pub fn fundamental_solution(lambda: C64, x: &Vector3<f64>, y: &Vector3<f64>) -> Result<C64> {
    let r = (x - y).norm();
    if r == 0.0 {
        return Err(Error::Coincident);
    }
    Ok(e_kernel(lambda, r))
}

/// ∂_ν E_λ(x, y) with the derivative taken in x along ν:
/// −e^{−λr}(λ + 1/r)(ν·(x−y))/(2πr²).
pub fn normal_derivative_kernel(lambda: C64, x: &Vector3<f64>, y: &Vector3<f64>, nu: &Vector3<f64>) -> Result<C64> {
    let d = x - y;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::Coincident);
    }
    Ok(-(-lambda * r).exp() * (lambda + 1.0 / r) * (nu.dot(&d) * INV_2PI / (r * r)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HKernels {
    pub h0: f64,
    pub h1: f64,
}

/// H₀(ξ, ζ) = ν_ξ·(ζ−ξ)/|ξ−ζ|² and H₁ = (H₀ + ρ)/|ξ−ζ|.
pub fn h_kernels(xi: &Vector3<f64>, zeta: &Vector3<f64>, nu_xi: &Vector3<f64>, rho: f64) -> Result<HKernels> {
    let d = zeta - xi;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::Coincident);
    }
    let h0 = nu_xi.dot(&d) / (r * r);
    Ok(HKernels { h0, h1: (h0 + rho) / r })
}

/// Kernel of the cavity Robin operator (target ξ with normal ν, source ζ):
/// ∂_{ν_ξ}E(ξ, ζ) + ρE(ξ, ζ) = (1/2π)e^{−λr}(λH₀ + H₁), returned as the pair
/// (λH₀ part, H₁ part).
#[inline]
pub fn robin_parts(lambda: C64, xi: &Vector3<f64>, nu: &Vector3<f64>, rho: f64, zeta: &Vector3<f64>) -> (C64, C64) {
    let d = zeta - xi;
    let r2 = d.norm_squared();
    let r = r2.sqrt();
    let h0 = nu.dot(&d) / r2;
    let ex = (-lambda * r).exp() * INV_2PI;
    (ex * lambda * h0, ex * ((h0 + rho) / r))
}

/// Kernel of the outer Neumann operator −∂_{ν_y}E(y, z) = −(1/2π)e^{−λr}(λ + 1/r)H₀(y, z).
#[inline]
pub fn neumann_kernel(lambda: C64, y: &Vector3<f64>, nu: &Vector3<f64>, z: &Vector3<f64>) -> C64 {
    let d = z - y;
    let r2 = d.norm_squared();
    let r = r2.sqrt();
    let h0 = nu.dot(&d) / r2;
    -(-lambda * r).exp() * (lambda + 1.0 / r) * (INV_2PI * h0)
}
