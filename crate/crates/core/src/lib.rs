//! Filamentarity statistics for planar and spherical point patterns.
//!
//! The crate detects near-collinear runs of points ("filaments") and
//! characterises them statistically:
//!
//! - [`triad_stats`]: blunt-triad/tetrad counting with closed-form moment
//!   theory for the Poisson null, and the diagnostic test built on it.
//! - [`pfp_sim`]: a Poisson filament process generator (correlated random
//!   walk offspring) plus Poisson and Poisson-cluster baselines.
//! - [`filament_search`]: arc-search and MST filament identification,
//!   linearity diagnostics and recovery metrics.
//! - [`abc_infer`]: rejection ABC for the filament process parameters
//!   (λ₀, λ₁, μ).
//! - [`geometry`]: points, metrics, observation windows, boundary secants
//!   and gridded-field utilities shared by everything above.
//!
//! All stochastic entry points take explicit seeds or RNG streams; results
//! are reproducible bit-for-bit for any worker count (see [`rng`]).

pub mod abc_infer;
pub mod cli;
pub mod config;
pub mod error;
pub mod filament_search;
pub mod geometry;
pub mod io;
pub mod pfp_sim;
pub mod reproduce;
pub mod rng;
pub mod triad_stats;

pub use error::{Error, Result};
pub use geometry::{Metric, Point, Region};
pub use triad_stats::TriadParams;

/// Library version string, embedded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
