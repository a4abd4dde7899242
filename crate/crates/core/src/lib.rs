//! Possibilistic single-target tracking with Bernoulli Gaussian-max filters and
//! exact Chernoff fusion of two such filters.
//!
//! - [`possibility`]: Gaussian possibility functions and Gaussian-max mixtures.
//! - [`bernoulli`]: the filter recursion, mixture reduction and estimate extraction.
//! - [`fusion`]: Chernoff and independent-product fusion of two filter posteriors.
//! - [`simulator`]: two-sensor cluttered scenario generation.
//! - [`metrics`]: OSPA and covariance-trace scoring, Monte Carlo aggregation.
//! - [`experiment`]: configuration and the Monte Carlo experiment drivers.
//! - [`oracle`]: brute-force numerical checks used by the self-test and test suites.

pub mod bernoulli;
pub mod error;
pub mod experiment;
pub mod fusion;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod possibility;
pub mod simulator;

pub use bernoulli::{BernoulliGmf, BernoulliPossState, Estimate, Scan};
pub use error::{Error, Result};
pub use fusion::{fuse_chernoff, fuse_independent, select_omega, FusionResult, OmegaStrategy};
pub use possibility::{GaussianMaxMixture, GaussianPossibility, WeightedComponent};
