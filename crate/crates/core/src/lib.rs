//! Enclosure-method toolkit for the heat equation with strictly convex cavities.
//!
//! Scenes are built from parametric surfaces, boundary data is synthesized in the
//! Laplace domain with modified-Helmholtz layer potentials, and the indicator
//! I₀(λ, p) is swept over λ to recover the broken-path length l(p, D). Recovered
//! lengths from many probes carve a voxel enclosure of the cavities.

pub mod bie;
pub mod enclosure;
pub mod error;
pub mod fit;
pub mod fixtures;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod laplace;
pub mod linalg;
pub mod path_oracle;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use nalgebra::Vector3;
pub use num_complex::Complex64 as C64;
