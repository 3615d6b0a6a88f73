//! Slow, explicit reference implementations for cross-checking the
//! matrix-free paths in `otfs-core`. Everything here favours obviousness
//! over speed.

pub mod bcjr;
pub mod dense;
pub mod map;

pub use num_complex::Complex64 as C64;
