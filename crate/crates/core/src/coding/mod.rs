//! Rate-1/2 `[5,7]_8` convolutional code, BCJR decoding, interleaving and
//! the symbol/bit soft conversions used by the turbo receiver.
//!
//! LLRs follow `L = ln P(c=0) / P(c=1)`: positive favours bit 0.

mod bcjr;
mod interleaver;
mod soft;

pub use bcjr::{bcjr_decode, conv_encode, BcjrOutput};
pub use interleaver::{deinterleave, interleave, Interleaver};
pub use soft::{
    combine_extrinsic, demap_llr, extrinsic_stats, priors_from_llr, ExtrinsicStats,
};

use crate::{Error, Result};

/// Magnitude bound for every LLR handed between modules.
pub const LLR_CLAMP: f64 = 30.0;

/// The `[5,7]_8` code, optionally zero-terminated with two flush bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeSpec {
    pub terminated: bool,
}

impl Default for CodeSpec {
    fn default() -> Self {
        Self { terminated: true }
    }
}

impl CodeSpec {
    pub const GENERATORS: (u8, u8) = (0o5, 0o7);
    pub const CONSTRAINT_LENGTH: usize = 3;
    pub const MEMORY: usize = 2;

    fn tail(&self) -> usize {
        if self.terminated {
            Self::MEMORY
        } else {
            0
        }
    }

    /// Coded length for `info_len` message bits.
    pub fn coded_len(&self, info_len: usize) -> usize {
        2 * (info_len + self.tail())
    }

    /// Message length that fills exactly `coded_len` coded bits.
    pub fn info_len(&self, coded_len: usize) -> Result<usize> {
        if coded_len % 2 != 0 || coded_len / 2 <= self.tail() {
            return Err(Error::invalid(
                "coded_len",
                format!("{coded_len} cannot hold a rate-1/2 codeword"),
            ));
        }
        Ok(coded_len / 2 - self.tail())
    }
}

/// One LLR per coded bit, clamped to `±LLR_CLAMP`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlrFrame(Vec<f64>);

impl LlrFrame {
    /// Clamps every entry; NaN becomes 0.
    pub fn new(mut values: Vec<f64>) -> Self {
        for v in values.iter_mut() {
            *v = clamp_llr(*v);
        }
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl core::ops::Deref for LlrFrame {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn clamp_llr(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-LLR_CLAMP, LLR_CLAMP)
    }
}

/// Hard decisions: negative LLR means bit 1; zero resolves to 0.
pub fn hard_bits(llr: &[f64]) -> Vec<u8> {
    llr.iter().map(|&l| u8::from(l < 0.0)).collect()
}

/// `ln(e^a + e^b)` without overflow.
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 + e^x)`.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln P(c = bit)` from an LLR.
pub(crate) fn log_bit_prob(llr: f64, bit: u8) -> f64 {
    if bit == 0 {
        -softplus(-llr)
    } else {
        -softplus(llr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_fill_a_frame() {
        let spec = CodeSpec::default();
        assert_eq!(spec.info_len(2048).unwrap(), 1022);
        assert_eq!(spec.coded_len(1022), 2048);
        assert_eq!(CodeSpec { terminated: false }.info_len(10).unwrap(), 5);
        assert!(spec.info_len(7).is_err());
        assert!(spec.info_len(4).is_err());
    }

    #[test]
    fn clamp_and_bit_probabilities() {
        let f = LlrFrame::new(vec![100.0, -100.0, f64::NAN, 1.5]);
        assert_eq!(f.values(), &[30.0, -30.0, 0.0, 1.5]);
        let l: f64 = 0.7;
        let p0 = log_bit_prob(l, 0).exp();
        let p1 = log_bit_prob(l, 1).exp();
        assert!((p0 + p1 - 1.0).abs() < 1e-15);
        assert!(((p0 / p1).ln() - l).abs() < 1e-12);
        assert_eq!(log_bit_prob(f64::INFINITY, 0), 0.0);
        assert_eq!(log_bit_prob(f64::INFINITY, 1), f64::NEG_INFINITY);
        assert!((log_add(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(hard_bits(&[0.0, -0.1, 2.0]), vec![0, 1, 0]);
    }
}
