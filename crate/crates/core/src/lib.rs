//! Randomly weighted averages of independent variates.
//!
//! `S = Σ_j R_j X_j` where the weights `R` are grouped spacings of uniform
//! order statistics (a Dirichlet vector with integer parameters) and the
//! atoms `X_j` are independent. The crate provides the exact conditional
//! CDF given the atoms, Stieltjes transform identities linking the law of
//! `S` to the marginals, variance curves for power-law spacings, limit
//! experiments, and seeded samplers for Monte Carlo cross-checks.

pub mod atoms;
pub mod dists;
pub mod error;
pub mod kernel;
pub mod limits;
pub mod mc;
pub mod quad;
pub mod rng;
pub mod series;
pub mod stieltjes;
pub mod variance;

pub use atoms::{AtomConfig, WeightScheme};
pub use dists::Dist;
pub use error::{Error, Result};
pub use rng::RngState;
