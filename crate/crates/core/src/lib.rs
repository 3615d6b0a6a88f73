//! Link-level OTFS building blocks.
//!
//! The crate covers the discrete delay-Doppler (DD) channel in its sparse,
//! BCCB-spectral and rectangular block-SVD forms, the AMP and unitary-AMP
//! symbol detectors, the `[5,7]_8` convolutional code with an exact BCJR
//! decoder, the single-loop turbo receiver and the state-evolution BER
//! predictor. IO, experiment orchestration and the command line live in the
//! companion `otfs-sim` crate.
//!
//! Vectors over the DD grid use the index `j = k*M + l` (Doppler bin `k`,
//! delay bin `l`), i.e. an `M x N` matrix stored column by column.

pub mod coding;
pub mod dd_channel;
pub mod detectors;
mod error;
pub mod fft2;
pub mod modem;
pub mod rng;
pub mod state_evolution;
pub mod turbo;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;
