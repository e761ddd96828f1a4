//! Numerical information geometry for second-order-unbiased MAP estimation.
//!
//! The library builds the Fisher metric, skewness tensor and the one-parameter
//! family of alpha-connections for a handful of built-in parametric models
//! (and for user-supplied models), constructs log-priors that cancel the
//! O(1/n) bias of plug-in MAP estimators of a scalar estimand, and verifies
//! the constructions with tensor identities and Monte Carlo bias experiments.

pub mod cli;
pub mod config;
pub mod error;
pub mod estimate;
pub mod geodesic;
pub mod geometry;
pub mod linalg;
pub mod manifold;
pub mod mc;
pub mod numeric;
pub mod prior;
pub mod registry;

pub use config::NumericConfig;
pub use error::{Error, Result};
