//! Laboratory for random Čech complexes on the flat torus and round sphere.
//!
//! The crate samples homogeneous Poisson processes on a constant-curvature
//! manifold, builds Čech complexes with geodesic minimal-enclosing-ball
//! tests, computes Betti numbers over GF(2), enumerates critical points of
//! the distance function, detects Θ-cycles, and drives Monte Carlo sweeps
//! that probe the homological-connectivity phase transition.

pub mod analytics;
pub mod cech;
pub mod error;
pub mod harness;
pub mod homology;
pub(crate) mod linalg;
pub mod manifold;
pub mod morse;
pub mod oracle;
pub mod sampler;
pub mod theta;
pub mod verify;

pub use error::{Error, Result};
pub use manifold::{AnnulusRegion, BallSpec, ManifoldKind, ManifoldModel};

