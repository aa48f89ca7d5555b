//! Two-tier privacy-preserving data pipeline for body-area health sensors.
//!
//! Tier 1 runs on or next to the sensor: a variance-rate filter drops
//! samples that barely differ from their neighbours, the survivors are
//! packed and encrypted. Tier 2 runs at an edge server: the payload is
//! decrypted and statistical queries are answered with Laplace noise.
//!
//! - [`trace`]: time series, population records, CSV, synthetic generators
//! - [`inference`]: sample selection, reconstruction, accuracy metrics
//! - [`crypto`]: wire format, ECB block ciphers, size model
//! - [`dp`]: Laplace mechanism, sensitivity, ε-DP ratio check
//! - [`pipeline`]: end-to-end simulation with byte and energy accounting
//! - [`experiments`] and [`chart`]: parameter sweeps and SVG output

pub mod chart;
pub mod crypto;
pub mod dp;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod pipeline;
pub mod rng;
pub mod trace;

pub use error::{Error, Result};
