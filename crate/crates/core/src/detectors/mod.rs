//! Iterative symbol detectors on the DD model `y = H x + ω`.
//!
//! Each detector is a small state machine split in two halves so the turbo
//! receiver can run the decoder in between:
//!
//! * [`Detector::observe`] turns the current estimate into the decoupled
//!   pseudo observation `q_j = x_j + ϖ_j` (message from the channel side);
//! * [`Detector::update`] combines it with symbol priors into the posterior
//!   mean/variance that drive the next iteration.
//!
//! [`run_detector`] strings the two together for the uncoded case.

mod amp;
mod posterior;
mod uamp;

pub use amp::{amp_detect, AmpDetector};
pub use posterior::{discrete_posterior, SymbolPosterior, SymbolPriors};
pub use uamp::{
    uamp_detect, uamp_rect_detect, BccbModel, RectModel, UampDetector, UnitaryModel,
};

use crate::modem::Constellation;
use crate::{Result, C64};

/// Floor applied to the message variances `ν_p`, `ν_s`, `ν_q`.
pub const VARIANCE_FLOOR: f64 = 1e-15;

/// Which detector to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    /// AMP on the explicit DD matrix with known noise precision.
    Amp,
    /// UAMP on the BCCB model via 2D FFTs (bi-orthogonal waveform).
    Uamp,
    /// UAMP on the block-SVD model (rectangular waveform).
    UampRect,
}

/// Scalar (shared) or per-symbol variance.
#[derive(Debug, Clone, PartialEq)]
pub enum Variance {
    Shared(f64),
    PerSymbol(Vec<f64>),
}

impl Variance {
    pub fn get(&self, j: usize) -> f64 {
        match self {
            Variance::Shared(v) => *v,
            Variance::PerSymbol(v) => v[j],
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Variance::Shared(v) => *v,
            Variance::PerSymbol(v) => v.iter().sum::<f64>() / v.len().max(1) as f64,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Variance::Shared(v) => v.is_finite(),
            Variance::PerSymbol(v) => v.iter().all(|x| x.is_finite()),
        }
    }
}

/// Decoupled pseudo observation `q = x + ϖ`, `ϖ ~ CN(0, ν_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObservation {
    pub q: Vec<C64>,
    pub nu_q: Variance,
}

/// Knobs shared by all detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorOptions {
    pub max_iter: usize,
    /// Weight of the new estimate in `x̂, ν_x <- w·new + (1-w)·old`.
    /// `None` leaves the updates undamped.
    pub damping: Option<f64>,
    /// Stop once `‖x̂^{t+1} - x̂^t‖ / ‖x̂^t‖` falls below this.
    pub early_stop: Option<f64>,
    /// Freeze the UAMP noise-precision estimate at this value.
    pub known_noise_precision: Option<f64>,
}

impl Default for DetectorOptions {
    fn default() -> Self {
        Self {
            max_iter: 15,
            damping: None,
            early_stop: None,
            known_noise_precision: None,
        }
    }
}

/// Snapshot after one full detector iteration.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub observation: PseudoObservation,
    pub posterior: SymbolPosterior,
    pub eps_hat: f64,
}

/// Two-phase detector interface.
pub trait Detector {
    /// Computes the pseudo observation from the current estimate.
    fn observe(&mut self) -> Result<PseudoObservation>;

    /// Folds `priors` and `obs` into a new estimate.
    fn update(
        &mut self,
        obs: &PseudoObservation,
        priors: &SymbolPriors,
    ) -> Result<SymbolPosterior>;

    /// Current noise-precision estimate (the true value for AMP).
    fn eps_hat(&self) -> f64;

    /// Current posterior mean.
    fn x_hat(&self) -> &[C64];

    fn constellation(&self) -> &Constellation;

    /// Completed iterations.
    fn iteration(&self) -> usize;
}

/// Runs up to `opts.max_iter` iterations with fixed priors.
pub fn run_detector<D: Detector + ?Sized>(
    det: &mut D,
    priors: &SymbolPriors,
    opts: &DetectorOptions,
) -> Result<Vec<IterationRecord>> {
    let mut out = Vec::with_capacity(opts.max_iter);
    for _ in 0..opts.max_iter {
        let prev = det.x_hat().to_vec();
        let observation = det.observe()?;
        let posterior = det.update(&observation, priors)?;
        out.push(IterationRecord {
            iteration: det.iteration(),
            observation,
            posterior,
            eps_hat: det.eps_hat(),
        });
        if let Some(tol) = opts.early_stop {
            let norm: f64 = prev.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let diff: f64 = prev
                .iter()
                .zip(det.x_hat())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if norm > 0.0 && diff / norm < tol {
                break;
            }
        }
    }
    Ok(out)
}

/// `new·w + old·(1-w)` in place.
pub(crate) fn damp(old: &mut [C64], new: &[C64], w: Option<f64>) {
    match w {
        None => old.copy_from_slice(new),
        Some(w) => old
            .iter_mut()
            .zip(new)
            .for_each(|(o, n)| *o = *n * w + *o * (1.0 - w)),
    }
}

pub(crate) fn check_finite(iteration: usize, what: &str, values: &[C64]) -> Result<()> {
    if values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::Diverged {
            iteration,
            reason: format!("non-finite {what}"),
        })
    }
}
