//! Monte-Carlo trial orchestration.
//!
//! Every random draw of trial `t` comes from substreams keyed by
//! `(master_seed, t)`, so all SNR points and detectors see the same
//! channels, data and (rescaled) noise. Trials run in fixed-size batches
//! merged in trial order; the early-stop check happens only between
//! batches, which keeps results independent of the thread count.

use std::time::Instant;

use otfs_core::coding::{conv_encode, CodeSpec, Interleaver};
use otfs_core::dd_channel::{simulate_rx, ChannelOperator, DdChannel, LinkModel};
use otfs_core::detectors::{
    AmpDetector, BccbModel, Detector, DetectorKind, DetectorOptions, RectModel, SymbolPriors,
    UampDetector,
};
use otfs_core::modem::{hard_decision, indices_to_bits, map_bits, Constellation};
use otfs_core::rng::{mix, substream, Stream};
use otfs_core::state_evolution::{amp_se_tau, se_predict, se_predict_with, GTable};
use otfs_core::turbo::{TurboConfig, TurboReceiver};
use otfs_core::{Error, C64};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{DetectorName, ExperimentConfig, WaveformName};
use crate::SimError;

/// Accumulated counts for one (SNR, detector) point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub detector: DetectorName,
    pub waveform: WaveformName,
    pub coded: bool,
    pub paths: usize,
    pub trials: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub diverged: u64,
    pub ber: f64,
    pub fer: f64,
    pub mean_eps_hat_db: f64,
    pub wall_s: f64,
    /// Bit errors after each detector (uncoded) or outer (coded) iteration,
    /// summed over trials.
    pub iteration_bit_errors: Vec<u64>,
}

/// One simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub bits: u64,
    pub bit_errors: u64,
    pub diverged: bool,
    pub eps_hat: f64,
    pub iteration_bit_errors: Vec<u64>,
    /// Per-iteration `(eps_hat, mean ν_x)`.
    pub iteration_stats: Vec<(f64, f64)>,
    /// Per-iteration coded-bit errors of the detector output (coded only).
    pub iteration_coded_errors: Vec<u64>,
    /// Per-iteration symbol errors of `x̂` (uncoded only).
    pub iteration_symbol_errors: Vec<u64>,
}

/// Transmitted frame and channel of trial `t`.
pub struct Frame {
    pub link: LinkModel,
    /// Message bits (coded) or raw payload bits (uncoded).
    pub payload: Vec<u8>,
    /// Bits on the constellation, in transmit order.
    pub tx_bits: Vec<u8>,
    pub x: Vec<C64>,
    pub interleaver: Option<Interleaver>,
}

pub fn noise_precision(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

pub fn channel_for_trial(cfg: &ExperimentConfig, trial: u64) -> Result<DdChannel, SimError> {
    if let Some(ch) = &cfg.fixed_channel {
        return Ok(ch.clone());
    }
    let grid = cfg.grid()?;
    if cfg.identity_channel {
        return Ok(DdChannel::identity(grid));
    }
    let mut rng = substream(cfg.master_seed, &[trial], Stream::Channel);
    Ok(cfg.sampler().sample(&grid, &mut rng)?)
}

pub fn frame_for_trial(cfg: &ExperimentConfig, trial: u64) -> Result<Frame, SimError> {
    let channel = channel_for_trial(cfg, trial)?;
    let link = LinkModel::new(channel, cfg.waveform(), cfg.trunc())?;
    let c = cfg.constellation();
    let nbits = cfg.m * cfg.n * c.bits_per_symbol();
    let mut data = substream(cfg.master_seed, &[trial], Stream::Data);
    let (payload, tx_bits, interleaver) = if cfg.coded {
        let code = CodeSpec::default();
        let k = code.info_len(nbits)?;
        let info: Vec<u8> = (0..k).map(|_| data.random_range(0..2u8)).collect();
        let il = Interleaver::new(nbits, mix(&[cfg.master_seed, trial]));
        let tx = il.apply(&conv_encode(&info, &code)?);
        (info, tx, Some(il))
    } else {
        let bits: Vec<u8> = (0..nbits).map(|_| data.random_range(0..2u8)).collect();
        (bits.clone(), bits, None)
    };
    let x = map_bits(&tx_bits, &c)?;
    Ok(Frame {
        link,
        payload,
        tx_bits,
        x,
        interleaver,
    })
}

fn count_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::Diverged { .. })
}

fn drive_uncoded<D: Detector>(det: &mut D, frame: &Frame, iters: usize) -> Result<TrialOutcome, SimError> {
    let c = det.constellation().clone();
    let priors = SymbolPriors::uniform(frame.x.len(), c.order());
    let mut out = TrialOutcome {
        bits: frame.tx_bits.len() as u64,
        bit_errors: 0,
        diverged: false,
        eps_hat: det.eps_hat(),
        iteration_bit_errors: Vec::with_capacity(iters),
        iteration_stats: Vec::with_capacity(iters),
        iteration_coded_errors: Vec::new(),
        iteration_symbol_errors: Vec::with_capacity(iters),
    };
    let truth = hard_decision(&frame.x, &c);
    for _ in 0..iters {
        let obs = match det.observe() {
            Ok(o) => o,
            Err(e) if is_divergence(&e) => {
                log::debug!("{e}");
                out.diverged = true;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let post = det.update(&obs, &priors)?;
        let idx = hard_decision(det.x_hat(), &c);
        let bits = indices_to_bits(&idx, &c);
        out.iteration_bit_errors.push(count_errors(&bits, &frame.tx_bits));
        out.iteration_symbol_errors
            .push(idx.iter().zip(&truth).filter(|(a, b)| a != b).count() as u64);
        out.iteration_stats.push((det.eps_hat(), post.mean_var()));
    }
    let bits = indices_to_bits(&hard_decision(det.x_hat(), &c), &c);
    out.bit_errors = count_errors(&bits, &frame.tx_bits);
    out.eps_hat = det.eps_hat();
    let last = *out.iteration_bit_errors.last().unwrap_or(&out.bit_errors);
    out.iteration_bit_errors.resize(iters, last);
    Ok(out)
}

fn drive_coded<D: Detector>(det: &mut D, frame: &Frame, outer: usize) -> Result<TrialOutcome, SimError> {
    let il = frame.interleaver.clone().expect("coded frame has an interleaver");
    let cfg = TurboConfig {
        outer_iterations: outer,
        ..Default::default()
    };
    let mut rx = TurboReceiver::new(det, CodeSpec::default(), il.clone(), cfg)?;
    let coded_truth = il.invert(&frame.tx_bits);
    // With no decoder output at all every message bit is decided as 0.
    let mut last_info = vec![0u8; frame.payload.len()];
    let mut out = TrialOutcome {
        bits: frame.payload.len() as u64,
        bit_errors: 0,
        diverged: false,
        eps_hat: 0.0,
        iteration_bit_errors: Vec::with_capacity(outer),
        iteration_stats: Vec::with_capacity(outer),
        iteration_coded_errors: Vec::with_capacity(outer),
        iteration_symbol_errors: Vec::new(),
    };
    for _ in 0..outer {
        match rx.step() {
            Ok(it) => {
                out.iteration_bit_errors.push(count_errors(&it.info_bits, &frame.payload));
                out.iteration_coded_errors.push(count_errors(&it.coded_bits, &coded_truth));
                out.iteration_stats.push((it.eps_hat, it.mean_nu_x));
                last_info = it.info_bits;
            }
            Err(e) if is_divergence(&e) => {
                log::debug!("{e}");
                out.diverged = true;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.eps_hat = rx.detector().eps_hat();
    out.bit_errors = count_errors(&last_info, &frame.payload);
    let last = *out.iteration_bit_errors.last().unwrap_or(&out.bit_errors);
    out.iteration_bit_errors.resize(outer, last);
    Ok(out)
}

fn drive<D: Detector>(det: &mut D, cfg: &ExperimentConfig, frame: &Frame) -> Result<TrialOutcome, SimError> {
    if cfg.coded {
        drive_coded(det, frame, cfg.outer_iterations)
    } else {
        drive_uncoded(det, frame, cfg.max_iter)
    }
}

/// Runs one trial end to end.
pub fn run_trial(
    cfg: &ExperimentConfig,
    detector: DetectorName,
    snr_db: f64,
    trial: u64,
) -> Result<TrialOutcome, SimError> {
    let frame = frame_for_trial(cfg, trial)?;
    run_frame(cfg, detector, snr_db, trial, &frame)
}

pub fn run_frame(
    cfg: &ExperimentConfig,
    detector: DetectorName,
    snr_db: f64,
    trial: u64,
    frame: &Frame,
) -> Result<TrialOutcome, SimError> {
    let eps = noise_precision(snr_db);
    let mut noise = substream(cfg.master_seed, &[trial], Stream::Noise);
    let rx = simulate_rx(&frame.link, &frame.x, eps, &mut noise)?;
    let c: Constellation = cfg.constellation();
    let opts = DetectorOptions {
        max_iter: cfg.max_iter,
        ..Default::default()
    };
    match (cfg.detector_kind(detector), frame.link.unitary()) {
        (DetectorKind::Amp, _) => {
            let mut det = AmpDetector::new(frame.link.sparse(), &rx.y, eps, c, None)?;
            drive(&mut det, cfg, frame)
        }
        (DetectorKind::Uamp, ChannelOperator::Spectral(spec)) => {
            let r = frame.link.transform(&rx.y);
            let mut det = UampDetector::new(BccbModel(spec), &r, c, &opts)?;
            drive(&mut det, cfg, frame)
        }
        (DetectorKind::UampRect, ChannelOperator::RectSvd(svd)) => {
            let r = frame.link.transform(&rx.y);
            let mut det = UampDetector::new(RectModel::new(svd), &r, c, &opts)?;
            drive(&mut det, cfg, frame)
        }
        (kind, _) => Err(SimError::Runtime(format!("{kind:?} does not match the waveform"))),
    }
}

/// Simulates one SNR point for one detector.
pub fn run_point(cfg: &ExperimentConfig, snr_db: f64, detector: DetectorName) -> Result<BerRecord, SimError> {
    let start = Instant::now();
    let iters = if cfg.coded { cfg.outer_iterations } else { cfg.max_iter };
    let mut rec = BerRecord {
        snr_db,
        detector,
        waveform: cfg.waveform,
        coded: cfg.coded,
        paths: match &cfg.fixed_channel {
            Some(ch) => ch.paths().len(),
            None if cfg.identity_channel => 1,
            None => cfg.paths,
        },
        trials: 0,
        bits: 0,
        bit_errors: 0,
        frame_errors: 0,
        diverged: 0,
        ber: 0.0,
        fer: 0.0,
        mean_eps_hat_db: 0.0,
        wall_s: 0.0,
        iteration_bit_errors: vec![0; iters],
    };
    let mut eps_db_sum = 0.0;
    let mut next = 0;
    while next < cfg.trials {
        if let Some(min) = cfg.min_bit_errors {
            if rec.bit_errors >= min {
                break;
            }
        }
        let end = (next + cfg.batch).min(cfg.trials);
        let outcomes: Vec<Result<TrialOutcome, SimError>> = (next..end)
            .into_par_iter()
            .map(|t| run_trial(cfg, detector, snr_db, t))
            .collect();
        for o in outcomes {
            let o = o?;
            rec.trials += 1;
            rec.bits += o.bits;
            rec.bit_errors += o.bit_errors;
            rec.frame_errors += u64::from(o.bit_errors > 0 || o.diverged);
            rec.diverged += u64::from(o.diverged);
            eps_db_sum += 10.0 * o.eps_hat.log10();
            for (acc, e) in rec.iteration_bit_errors.iter_mut().zip(&o.iteration_bit_errors) {
                *acc += e;
            }
        }
        next = end;
    }
    if rec.diverged > 0 {
        log::warn!(
            "{} of {} frames diverged at {snr_db} dB ({})",
            rec.diverged,
            rec.trials,
            detector.as_str()
        );
    }
    rec.ber = rec.bit_errors as f64 / rec.bits.max(1) as f64;
    rec.fer = rec.frame_errors as f64 / rec.trials.max(1) as f64;
    rec.mean_eps_hat_db = eps_db_sum / rec.trials.max(1) as f64;
    rec.wall_s = start.elapsed().as_secs_f64();
    Ok(rec)
}

/// All (SNR, detector) points, in SNR-major order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>, SimError> {
    run_sweep_with(cfg, |_| {})
}

/// As [`run_sweep`], handing each record to `sink` as soon as it is done.
pub fn run_sweep_with(
    cfg: &ExperimentConfig,
    mut sink: impl FnMut(&BerRecord),
) -> Result<Vec<BerRecord>, SimError> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.snr_db.len() * cfg.detectors.len());
    for &snr in &cfg.snr_db {
        for &d in &cfg.detectors {
            let rec = run_point(cfg, snr, d)?;
            sink(&rec);
            out.push(rec);
        }
    }
    Ok(out)
}

/// Eigenvalue powers of trial `t`'s channel under the unitary model.
pub fn lambda_for_trial(cfg: &ExperimentConfig, trial: u64) -> Result<Vec<f64>, SimError> {
    let link = LinkModel::new(channel_for_trial(cfg, trial)?, cfg.waveform(), cfg.trunc())?;
    Ok(link.lambda().to_vec())
}

/// State-evolution BER trajectories for every SNR in `snrs`, each the mean
/// of per-realization trajectories over the first `trials` channels.
/// UAMP uses the eigenvalue recursion, AMP its entry-power counterpart.
/// Also returns the number of out-of-table lookups per SNR.
pub fn se_curves(
    cfg: &ExperimentConfig,
    detector: DetectorName,
    snrs: &[f64],
    table: &GTable,
    trials: u64,
) -> Result<Vec<(Vec<f64>, usize)>, SimError> {
    let iters = cfg.outer_iterations;
    let per: Vec<Result<Vec<(Vec<f64>, usize)>, SimError>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let link = LinkModel::new(channel_for_trial(cfg, t)?, cfg.waveform(), cfg.trunc())?;
            snrs.iter()
                .map(|&snr| {
                    let eps = noise_precision(snr);
                    let p = match detector {
                        DetectorName::Uamp => se_predict(link.lambda(), eps, table, iters)?,
                        DetectorName::Amp => {
                            se_predict_with(|v| amp_se_tau(link.sparse(), eps, v), table, iters)
                        }
                    };
                    Ok((p.ber, p.clamped))
                })
                .collect()
        })
        .collect();
    let mut out = vec![(vec![0.0; iters], 0); snrs.len()];
    for r in per {
        for ((mean, clamped), (ber, c)) in out.iter_mut().zip(r?) {
            *clamped += c;
            mean.iter_mut().zip(ber).for_each(|(m, b)| *m += b);
        }
    }
    for (mean, _) in out.iter_mut() {
        mean.iter_mut().for_each(|m| *m /= trials.max(1) as f64);
    }
    Ok(out)
}
