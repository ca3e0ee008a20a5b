//! Explicit harmonic functions, Green's functions, hitting laws and Doob
//! h-transform conditionings for one-dimensional stable processes killed on
//! first entering `[-1, 1]`, together with a Monte Carlo engine and the
//! verification suites that check every identity numerically.

pub mod error;
pub mod model;
pub mod quad;
pub mod special;
pub mod harmonic;
pub mod hitting;
pub mod dist;
pub mod pathsim;
pub mod experiments;

pub use error::{Error, Result};
pub use model::{validate_params, RngStream, StableParams};
pub use quad::QuadratureSettings;
