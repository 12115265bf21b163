//! Batch Bayesian optimization with K-means batch selection.
//!
//! The library is organised bottom-up:
//!
//! - [`objective`]: black-box objectives, search domains, observed datasets and
//!   the benchmark suite (Branin-Hoo, six-hump camel, Hartmann-6, a synthetic
//!   sparse binary candidate pool).
//! - [`gp`]: Gaussian process regression with a squared-exponential ARD kernel.
//! - [`acquisition`]: expected improvement.
//! - [`slice`]: uniform sampling of the region under an acquisition surface.
//! - [`strategies`]: KMBBO and the baseline batch builders.
//! - [`compression`]: sparse-coding dimensionality reduction for CS-KMBBO.
//! - [`harness`]: repeated experiments, metrics and output files.
//!
//! All internal optimisation is written for maximisation. Objectives that are
//! minimised are negated when values enter the surrogate.

pub mod acquisition;
pub mod compression;
pub mod error;
pub mod gp;
pub mod harness;
pub mod objective;
pub mod optimize;
pub mod rng;
pub mod slice;
pub mod strategies;

pub use error::{Error, Result};
pub use objective::{Dataset, Direction, Domain, Objective};
