//! Parametric surfaces, quadrature, charts and scenes.

pub mod chart;
pub mod quadric;
pub mod scene;
pub mod surface;

pub use chart::{convexity_audit, local_chart, tangent_frame, ConvexityReport, LocalChart};
pub use quadric::Quadric;
pub use scene::{cavity_separation, surface_distance, CavityEntry, FluxEntry, FluxTag, Scene, SceneFile, StackedNodes};
pub use surface::{grid_size, make_ellipsoid, make_sphere, make_surface, DiscretizedSurface, SurfaceKind, SurfaceSpec};
