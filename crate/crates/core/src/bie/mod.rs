//! Modified-Helmholtz layer potentials: kernels, Nyström assembly, the Neumann
//! resolvent and its block decomposition, and decay audits.

pub mod assembly;
pub mod audit;
pub mod correction;
pub mod kernels;
pub mod resolvent;
pub mod singular;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use assembly::{surface_moments, Assembler};
pub use audit::{decay_audit, norm_slope, off_block_envelope, y22_sup_norm, DecayReport, EnvelopePairs};
pub use kernels::{fundamental_solution, h_kernels, normal_derivative_kernel, HKernels};
pub use resolvent::{block_split_w, resolvent_m, BlockSplit, ResolventSplit};

use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::linalg::CMat;

/// Admissible λ regions.
///
/// The sector is taken as |Im λ| ≤ δ₀ Re λ, which keeps |arg λ| < π/4 for
/// δ₀ < 1 so that Re λ² > 0 and the flux transform decays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "snake_case")]
pub enum Region {
    Sector { delta0: f64 },
    LogRegion { delta1: f64 },
    RealAxis,
}

impl Region {
    pub fn contains(&self, lambda: C64) -> bool {
        let (re, im) = (lambda.re, lambda.im);
        if !(re > 0.0) {
            return false;
        }
        let slack = 1e-12 * re;
        match *self {
            Region::Sector { delta0 } => im.abs() <= delta0 * re + slack,
            Region::LogRegion { delta1 } => re >= std::f64::consts::E && im.abs() <= delta1 * re / re.ln() + slack,
            Region::RealAxis => im == 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Region::Sector { .. } => "sector",
            Region::LogRegion { .. } => "log",
            Region::RealAxis => "real",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub lambda: C64,
    pub mu: f64,
    pub region: Region,
}

impl SpectralSample {
    pub fn new(lambda: C64, region: Region) -> Result<Self> {
        if !region.contains(lambda) {
            return Err(Error::InvalidGrid(format!("λ = {lambda} is outside the {} region", region.name())));
        }
        Ok(Self { lambda, mu: lambda.re, region })
    }

    pub fn real(mu: f64) -> Result<Self> {
        Self::new(C64::new(mu, 0.0), Region::RealAxis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorTag {
    Y11,
    Y12,
    Y21,
    Y22,
    TY22,
    M0,
    MTilde,
    M,
    M1,
    W,
    WInf,
    MD(usize),
}

/// Which node sets an operator maps between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeSet {
    Outer,
    Cavities,
    Cavity(usize),
}

pub struct BoundaryOperator {
    pub tag: OperatorTag,
    pub lambda: C64,
    pub rows: NodeSet,
    pub cols: NodeSet,
    pub matrix: CMat,
}

/// Assembles one operator at λ.
pub fn assemble_block(scene: &Scene, lambda: C64, tag: OperatorTag) -> Result<BoundaryOperator> {
    let asm = Assembler::new(scene, lambda)?;
    let needs_cav = !matches!(tag, OperatorTag::Y11);
    if needs_cav && scene.cavities.is_empty() {
        return Err(Error::InvalidScene(format!("{tag:?} needs at least one cavity")));
    }
    let (rows, cols, matrix) = match tag {
        OperatorTag::Y11 => (NodeSet::Outer, NodeSet::Outer, asm.y11()),
        OperatorTag::Y12 => (NodeSet::Outer, NodeSet::Cavities, asm.y12()),
        OperatorTag::Y21 => (NodeSet::Cavities, NodeSet::Outer, asm.y21()),
        OperatorTag::Y22 => (NodeSet::Cavities, NodeSet::Cavities, asm.y22()),
        OperatorTag::TY22 | OperatorTag::M0 | OperatorTag::MTilde => {
            let p = resolvent::transpose_parts(&asm);
            let m = match tag {
                OperatorTag::TY22 => p.ty22,
                OperatorTag::M0 => p.m0,
                _ => p.mtilde,
            };
            (NodeSet::Cavities, NodeSet::Cavities, m)
        }
        OperatorTag::M | OperatorTag::M1 => {
            let r = resolvent::resolvent_from(&asm)?;
            (NodeSet::Cavities, NodeSet::Cavities, if tag == OperatorTag::M { r.m } else { r.m1 })
        }
        OperatorTag::W | OperatorTag::WInf | OperatorTag::MD(_) => {
            let p = resolvent::transpose_parts(&asm);
            let b = resolvent::block_split_from(scene, &p.ty22, lambda)?;
            match tag {
                OperatorTag::W => (NodeSet::Cavities, NodeSet::Cavities, b.w),
                OperatorTag::WInf => (NodeSet::Cavities, NodeSet::Cavities, b.w_inf),
                OperatorTag::MD(j) => {
                    if j >= scene.cavities.len() {
                        return Err(Error::InvalidScene(format!("no cavity {j}")));
                    }
                    (NodeSet::Cavity(j), NodeSet::Cavity(j), b.m_dj(j))
                }
                _ => unreachable!(),
            }
        }
    };
    Ok(BoundaryOperator { tag, lambda, rows, cols, matrix })
}
