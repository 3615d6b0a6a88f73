//! BER prediction for the coded UAMP receiver.
//!
//! The code and mapper are characterized once over a scalar AWGN channel,
//! giving a table `(BER, v_x) = g(τ)`. For a channel realization with
//! eigenvalue powers `λ`, the recursion
//! `τ^t = J / Σ_j λ_j / (v_x^t λ_j + 1/ε)`, `(BER, v_x^{t+1}) = g(τ^t)`
//! then predicts the per-iteration BER.

use rand::Rng;

use crate::coding::{conv_encode, hard_bits, CodeSpec, Interleaver};
use crate::dd_channel::SparseChannelMatrix;
use crate::detectors::{discrete_posterior, PseudoObservation, Variance, VARIANCE_FLOOR};
use crate::modem::{map_bits, Constellation};
use crate::rng::{complex_gaussian, mix, substream, Stream};
use crate::turbo::siso_pass;
use crate::{Error, Result};

/// Smallest BER used when interpolating in the log domain.
const BER_FLOOR: f64 = 1e-12;

/// One characterized point of the pseudo AWGN channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GRow {
    pub tau: f64,
    pub ber: f64,
    pub v_x: f64,
    pub trials: u64,
    pub errors: u64,
}

/// Monte-Carlo budget for one table point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GTableBudget {
    pub min_trials: u64,
    pub max_trials: u64,
    /// Stop early once this many info-bit errors are seen.
    pub target_errors: u64,
}

impl Default for GTableBudget {
    fn default() -> Self {
        Self {
            min_trials: 20,
            max_trials: 2000,
            target_errors: 100,
        }
    }
}

/// `(BER, v_x) = g(τ)`, sorted by `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GTable {
    rows: Vec<GRow>,
    /// Message bits per simulated frame.
    pub info_bits: usize,
}

impl GTable {
    /// Validates ordering and ranges.
    pub fn from_rows(rows: Vec<GRow>, info_bits: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("g-table", "no rows"));
        }
        for w in rows.windows(2) {
            if !(w[1].tau > w[0].tau) {
                return Err(Error::invalid("g-table", "tau must be strictly increasing"));
            }
        }
        for r in &rows {
            if !(r.tau > 0.0 && r.tau.is_finite()) {
                return Err(Error::invalid("g-table", format!("bad tau {}", r.tau)));
            }
            if !(0.0..=1.0).contains(&r.ber) || !(0.0..=1.0 + 1e-9).contains(&r.v_x) {
                return Err(Error::invalid("g-table", format!("row at tau {} out of range", r.tau)));
            }
        }
        Ok(Self { rows, info_bits })
    }

    pub fn rows(&self) -> &[GRow] {
        &self.rows
    }

    /// Rows with fewer than `min_errors` bit errors.
    pub fn censored(&self, min_errors: u64) -> impl Iterator<Item = &GRow> {
        self.rows.iter().filter(move |r| r.errors < min_errors)
    }

    /// Isotonic (pool-adjacent-violators) fit making `ber` and `v_x`
    /// non-decreasing in `τ`, weighted by trial count.
    pub fn regularized(&self) -> Self {
        let w: Vec<f64> = self.rows.iter().map(|r| r.trials.max(1) as f64).collect();
        let ber = isotonic(&self.rows.iter().map(|r| r.ber).collect::<Vec<_>>(), &w);
        let vx = isotonic(&self.rows.iter().map(|r| r.v_x).collect::<Vec<_>>(), &w);
        let rows = self
            .rows
            .iter()
            .zip(ber.into_iter().zip(vx))
            .map(|(r, (ber, v_x))| GRow { ber, v_x, ..*r })
            .collect();
        Self {
            rows,
            info_bits: self.info_bits,
        }
    }

    /// `g(τ)` with log-τ interpolation; `clamped` is true outside the grid.
    pub fn lookup(&self, tau: f64) -> (f64, f64, bool) {
        let first = self.rows[0];
        let last = self.rows[self.rows.len() - 1];
        if tau <= first.tau {
            return (first.ber, first.v_x, tau < first.tau);
        }
        if tau >= last.tau || tau.is_nan() {
            return (last.ber, last.v_x, tau > last.tau || tau.is_nan());
        }
        let i = self.rows.partition_point(|r| r.tau <= tau) - 1;
        let (a, b) = (self.rows[i], self.rows[i + 1]);
        if a.tau == tau {
            return (a.ber, a.v_x, false);
        }
        let w = (tau.ln() - a.tau.ln()) / (b.tau.ln() - a.tau.ln());
        let v_x = a.v_x + w * (b.v_x - a.v_x);
        let ber = if a.ber == 0.0 && b.ber == 0.0 {
            0.0
        } else {
            let (la, lb) = (a.ber.max(BER_FLOOR).ln(), b.ber.max(BER_FLOOR).ln());
            (la + w * (lb - la)).exp()
        };
        (ber, v_x, false)
    }
}

/// Weighted least-squares non-decreasing fit.
pub fn isotonic(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len());
    // (value, weight, count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((v, wt, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            let (v1, w1, c1) = blocks[n - 2];
            let (v2, w2, c2) = blocks[n - 1];
            if v1 <= v2 {
                break;
            }
            blocks.pop();
            blocks[n - 2] = ((v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2, c1 + c2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, _, c)| core::iter::repeat(v).take(c))
        .collect()
}

/// The default grid: 25 points geometrically spaced over `[1e-3, 10]`.
pub fn default_tau_grid() -> Vec<f64> {
    geometric_grid(1e-3, 10.0, 25)
}

pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (points - 1) as f64;
    (0..points).map(|i| lo * (step * i as f64).exp()).collect()
}

/// Simulates one frame over the pseudo AWGN channel; returns
/// `(info bit errors, mean posterior variance)`.
pub fn g_trial(
    code: &CodeSpec,
    c: &Constellation,
    symbols: usize,
    tau: f64,
    seed: u64,
    path: &[u64],
) -> Result<(u64, f64)> {
    let coded = symbols * c.bits_per_symbol();
    let k = code.info_len(coded)?;
    let mut data = substream(seed, path, Stream::Data);
    let info: Vec<u8> = (0..k).map(|_| data.random_range(0..2u8)).collect();
    let interleaver = Interleaver::new(coded, mix(&[seed, mix(path)]));
    let tx = interleaver.apply(&conv_encode(&info, code)?);
    let x = map_bits(&tx, c)?;
    let mut noise = substream(seed, path, Stream::Noise);
    let q = x.iter().map(|&v| v + complex_gaussian(&mut noise, tau)).collect();
    let obs = PseudoObservation {
        q,
        nu_q: Variance::Shared(tau),
    };
    let pass = siso_pass(&obs, &vec![0.0; coded], c, code, &interleaver)?;
    let post = discrete_posterior(&obs, &pass.priors, c)?;
    let errors = hard_bits(&pass.decoder.info)
        .iter()
        .zip(&info)
        .filter(|(a, b)| a != b)
        .count() as u64;
    Ok((errors, post.mean_var()))
}

/// Builds `g` on `tau_grid` for frames of `symbols` symbols.
///
/// `v_x` is the mean symbol variance of the posterior that combines the
/// pseudo observation with priors from the decoder's extrinsic output, the
/// same quantity the turbo receiver's detector produces.
pub fn build_g_table(
    code: &CodeSpec,
    c: &Constellation,
    symbols: usize,
    tau_grid: &[f64],
    budget: &GTableBudget,
    seed: u64,
) -> Result<GTable> {
    if budget.max_trials == 0 || budget.min_trials > budget.max_trials {
        return Err(Error::invalid("budget", "need 0 < min_trials <= max_trials"));
    }
    let k = code.info_len(symbols * c.bits_per_symbol())?;
    let mut rows = Vec::with_capacity(tau_grid.len());
    for (i, &tau) in tau_grid.iter().enumerate() {
        if !(tau > 0.0) {
            return Err(Error::invalid("tau_grid", "entries must be positive"));
        }
        let (mut trials, mut errors, mut vx) = (0u64, 0u64, 0.0);
        while trials < budget.max_trials
            && (trials < budget.min_trials || errors < budget.target_errors)
        {
            let (e, v) = g_trial(code, c, symbols, tau, seed, &[Stream::Table as u64, i as u64, trials])?;
            errors += e;
            vx += v;
            trials += 1;
        }
        rows.push(GRow {
            tau,
            ber: errors as f64 / (trials as f64 * k as f64),
            v_x: vx / trials as f64,
            trials,
            errors,
        });
    }
    GTable::from_rows(rows, k)
}

/// `τ = J / Σ_j λ_j / (v_x λ_j + 1/ε)`.
pub fn se_tau(lambda: &[f64], eps: f64, v_x: f64) -> f64 {
    let inv = 1.0 / eps;
    let s: f64 = lambda
        .iter()
        .map(|&l| if l == 0.0 { 0.0 } else { l / (v_x * l + inv) })
        .sum();
    lambda.len() as f64 / s
}

/// AMP counterpart of [`se_tau`]: the mean over columns of the AMP
/// pseudo-noise variance `1 / Σ_i |H_ij|² / (v_x Σ_k |H_ik|² + 1/ε)`.
pub fn amp_se_tau(h: &SparseChannelMatrix, eps: f64, v_x: f64) -> f64 {
    let inv = 1.0 / eps;
    let nu_s: Vec<f64> = h
        .abs2_matvec(&vec![v_x; h.dim()])
        .into_iter()
        .map(|p| 1.0 / (p + inv))
        .collect();
    let col = h.abs2_adjoint_matvec(&nu_s);
    col.iter().map(|&c| 1.0 / c.max(VARIANCE_FLOOR)).sum::<f64>() / col.len() as f64
}

/// Predicted trajectory; entry `t` holds `τ^t` and `g(τ^t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SePrediction {
    pub tau: Vec<f64>,
    pub ber: Vec<f64>,
    pub v_x: Vec<f64>,
    /// Lookups that fell outside the table.
    pub clamped: usize,
}

/// Runs `iters` steps of the recursion from `v_x = 1`.
pub fn se_predict(lambda: &[f64], eps: f64, table: &GTable, iters: usize) -> Result<SePrediction> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "noise precision must be positive"));
    }
    if lambda.is_empty() {
        return Err(Error::invalid("lambda", "empty"));
    }
    Ok(se_predict_with(|v| se_tau(lambda, eps, v), table, iters))
}

/// The recursion with an arbitrary `v_x ↦ τ` map.
pub fn se_predict_with(mut tau_of: impl FnMut(f64) -> f64, table: &GTable, iters: usize) -> SePrediction {
    let mut out = SePrediction {
        tau: Vec::with_capacity(iters),
        ber: Vec::with_capacity(iters),
        v_x: Vec::with_capacity(iters),
        clamped: 0,
    };
    let mut v = 1.0;
    for _ in 0..iters {
        let tau = tau_of(v);
        let (ber, vx, clamped) = table.lookup(tau);
        if clamped {
            out.clamped += 1;
            log::warn!("tau {tau:.3e} outside g-table range, clamped");
        }
        out.tau.push(tau);
        out.ber.push(ber);
        out.v_x.push(vx);
        v = vx;
    }
    out
}
