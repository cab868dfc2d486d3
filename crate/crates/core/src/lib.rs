//! Multistatic ISAC simulation and passive-target localization.
//!
//! The pipeline runs from 5G NR positioning reference signal (PRS) synthesis
//! through a symbol-domain bistatic echo channel and periodogram ranging, to
//! robust 2-D localization of a passive target from bistatic range
//! measurements:
//!
//! * [`prs`]: Gold sequences, QPSK PRS symbols and comb-structured resource grids.
//! * [`channel`]: the multistatic echo channel with AWGN, per receiving UE.
//! * [`ranging`]: pointwise channel division, averaged IFFT periodogram and peak search.
//! * [`scenario`]: random geometries, LoS/NLoS excess paths and measurement synthesis.
//! * [`solvers`]: LS, IRLS (Andrews sine weights), path-differencing and fusion.
//! * [`harness`]: Monte Carlo experiments, sweeps and report emission.

pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod prs;
pub mod ranging;
pub mod scenario;
pub mod solvers;

pub use error::{Error, Result};
pub use geometry::Point2;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
