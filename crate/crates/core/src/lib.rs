//! Synthetic music-theory diagnostic datasets and the tooling to probe
//! representations for them.
//!
//! The pipeline runs in four stages:
//!
//! - [`theory`] and [`midi`] build symbolic material for each concept,
//! - [`synth`] renders it to 4 s mono clips at 22,050 Hz,
//! - [`features`] turns clips into time-aggregated spectral vectors,
//! - [`probe`] trains linear / MLP probes and reports accuracy or R².
//!
//! [`datasets`] enumerates the seven concept datasets and their splits, and
//! [`harness`] holds the file formats and the glue used by the CLI.

pub mod datasets;
pub mod error;
pub mod features;
pub mod harness;
pub mod midi;
pub mod probe;
pub mod seed;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
