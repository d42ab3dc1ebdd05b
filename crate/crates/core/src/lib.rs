//! Numerical model manifolds `dr² + g(r)² dθ²` built from a radial curvature
//! profile `G`, the radial solutions of the associated Obata-type equations,
//! and residual checks for the identities they satisfy.

mod error;
pub mod classify;
pub mod geodesics;
pub mod geometry;
pub mod integrate;
pub mod profile;
pub mod radial;
pub mod warping;

pub use error::{Error, Result};
