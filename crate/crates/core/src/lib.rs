//! Home-range estimation (MCP, KDE, AKDE) and Monte Carlo tests of spatial
//! interaction between tracked animals.
//!
//! The crate is organized along the analysis pipeline:
//!
//! - [`data`]: relocations, trajectories, windows and marked point patterns
//! - [`ingest`]: collar CSV parsing and planar projection
//! - [`variogram`]: empirical semivariance, movement models, fitting and AIC
//! - [`sim`]: exact movement simulation
//! - [`homerange`]: minimum convex polygons and kernel density level sets
//! - [`ppstats`]: log-linear intensities and cross-type K, L, F, G, J
//! - [`envelope`]: random-shift simulation envelopes and global tests

pub mod data;
pub mod envelope;
pub mod homerange;
pub mod ingest;
pub mod optim;
pub mod ppstats;
pub mod rng;
pub mod sim;
pub mod variogram;

pub use data::{
    split_by_mark, validate_trajectory, Crs, DataError, MarkedPoint, MarkedPointPattern,
    Relocation, Trajectory, Window,
};
