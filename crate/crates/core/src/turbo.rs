//! Single-loop joint detection and decoding.
//!
//! Each outer iteration runs the channel half of one detector iteration,
//! demaps the pseudo observation into extrinsic bit LLRs, decodes once, and
//! feeds the decoder's extrinsic LLRs back as symbol priors for the
//! detector's posterior step. Detector state carries over between outer
//! iterations.

use crate::coding::{
    bcjr_decode, demap_llr, extrinsic_stats, hard_bits, priors_from_llr, BcjrOutput, CodeSpec,
    Interleaver, LlrFrame,
};
use crate::detectors::{Detector, DetectorKind, PseudoObservation, SymbolPriors};
use crate::modem::Constellation;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurboConfig {
    pub outer_iterations: usize,
    pub detector: DetectorKind,
    /// Full detector iterations per decoder activation; 1 is the single loop.
    pub inner_iterations: usize,
    /// Keep the detector priors uniform (decoder output is still computed).
    pub freeze_priors: bool,
}

impl Default for TurboConfig {
    fn default() -> Self {
        Self {
            outer_iterations: 15,
            detector: DetectorKind::Uamp,
            inner_iterations: 1,
            freeze_priors: false,
        }
    }
}

impl TurboConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer_iterations == 0 {
            return Err(Error::invalid("outer_iterations", "must be at least 1"));
        }
        if self.inner_iterations == 0 {
            return Err(Error::invalid("inner_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

/// Result of one detector-to-decoder exchange.
#[derive(Debug, Clone)]
pub struct SisoPass {
    /// Detector extrinsic LLRs in transmit (interleaved) order.
    pub detector_llr: LlrFrame,
    pub decoder: BcjrOutput,
    /// Decoder extrinsic LLRs in transmit order.
    pub feedback: Vec<f64>,
    pub priors: SymbolPriors,
}

/// Demap, deinterleave, decode, reinterleave and convert to symbol priors.
pub fn siso_pass(
    obs: &PseudoObservation,
    apriori: &[f64],
    c: &Constellation,
    code: &CodeSpec,
    interleaver: &Interleaver,
) -> Result<SisoPass> {
    let detector_llr = demap_llr(&extrinsic_stats(obs), apriori, c)?;
    Error::check_len("interleaver", interleaver.len(), detector_llr.len())?;
    let channel = interleaver.invert(&detector_llr);
    let decoder = bcjr_decode(&channel, &vec![0.0; channel.len()], code)?;
    let feedback = interleaver.apply(&decoder.extrinsic);
    let priors = priors_from_llr(&feedback, c)?;
    Ok(SisoPass {
        detector_llr,
        decoder,
        feedback,
        priors,
    })
}

/// Per-iteration outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TurboIteration {
    pub iteration: usize,
    /// Hard message decisions from the decoder.
    pub info_bits: Vec<u8>,
    /// Hard decisions on the detector's extrinsic coded-bit LLRs, in
    /// encoder order.
    pub coded_bits: Vec<u8>,
    pub eps_hat: f64,
    pub mean_nu_x: f64,
}

/// Steppable turbo receiver around any [`Detector`].
pub struct TurboReceiver<'d, D: Detector + ?Sized> {
    det: &'d mut D,
    code: CodeSpec,
    interleaver: Interleaver,
    cfg: TurboConfig,
    feedback: Vec<f64>,
    t: usize,
}

impl<'d, D: Detector + ?Sized> TurboReceiver<'d, D> {
    pub fn new(
        det: &'d mut D,
        code: CodeSpec,
        interleaver: Interleaver,
        cfg: TurboConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let bits = det.x_hat().len() * det.constellation().bits_per_symbol();
        Error::check_len("interleaver", bits, interleaver.len())?;
        code.info_len(bits)?;
        Ok(Self {
            det,
            code,
            interleaver,
            cfg,
            feedback: vec![0.0; bits],
            t: 0,
        })
    }

    pub fn detector(&self) -> &D {
        self.det
    }

    /// Decoder extrinsic LLRs currently used as priors.
    pub fn feedback(&self) -> &[f64] {
        &self.feedback
    }

    pub fn step(&mut self) -> Result<TurboIteration> {
        let c = self.det.constellation().clone();
        let len = self.det.x_hat().len();
        let uniform = SymbolPriors::uniform(len, c.order());
        let current = if self.cfg.freeze_priors || self.t == 0 {
            uniform.clone()
        } else {
            priors_from_llr(&self.feedback, &c)?
        };
        for _ in 1..self.cfg.inner_iterations {
            let obs = self.det.observe()?;
            self.det.update(&obs, &current)?;
        }
        let obs = self.det.observe()?;
        let pass = siso_pass(&obs, &self.feedback, &c, &self.code, &self.interleaver)?;
        let priors = if self.cfg.freeze_priors {
            &uniform
        } else {
            &pass.priors
        };
        let post = self.det.update(&obs, priors)?;
        self.feedback = pass.feedback;
        self.t += 1;
        Ok(TurboIteration {
            iteration: self.t,
            info_bits: hard_bits(&pass.decoder.info),
            coded_bits: hard_bits(&self.interleaver.invert(&pass.detector_llr)),
            eps_hat: self.det.eps_hat(),
            mean_nu_x: post.mean_var(),
        })
    }
}

/// Runs `cfg.outer_iterations` turbo iterations.
pub fn turbo_receive<D: Detector + ?Sized>(
    det: &mut D,
    code: CodeSpec,
    interleaver: Interleaver,
    cfg: TurboConfig,
) -> Result<Vec<TurboIteration>> {
    let mut rx = TurboReceiver::new(det, code, interleaver, cfg)?;
    (0..cfg.outer_iterations).map(|_| rx.step()).collect()
}
