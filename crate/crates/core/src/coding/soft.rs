use super::{clamp_llr, log_add, log_bit_prob, LlrFrame};
use crate::detectors::{PseudoObservation, SymbolPriors, Variance};
use crate::modem::Constellation;
use crate::{Error, Result, C64};

/// Extrinsic mean and variance per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrinsicStats {
    pub mean: Vec<C64>,
    pub var: Variance,
}

/// The detector's pseudo observation already excludes the symbol's own
/// prior, so it is passed through unchanged.
pub fn extrinsic_stats(obs: &PseudoObservation) -> ExtrinsicStats {
    ExtrinsicStats {
        mean: obs.q.clone(),
        var: obs.nu_q.clone(),
    }
}

/// Removes a Gaussian prior `(m, v)` from a Gaussian posterior `(m_p, v_p)`.
///
/// Returns `None` when `v_p ≥ v`, i.e. the observation carried no
/// information about the symbol and the extrinsic variance is unbounded.
pub fn combine_extrinsic(m_post: C64, v_post: f64, m_prior: C64, v_prior: f64) -> Option<(C64, f64)> {
    let prec = 1.0 / v_post - 1.0 / v_prior;
    if !(prec > 0.0) {
        return None;
    }
    let v = 1.0 / prec;
    Some(((m_post / v_post - m_prior / v_prior) * v, v))
}

/// Extrinsic bit LLRs from Gaussian symbol messages and a-priori bit LLRs
/// (both per coded bit, MSB of each label first), clamped to `±30`.
pub fn demap_llr(
    stats: &ExtrinsicStats,
    apriori: &[f64],
    c: &Constellation,
) -> Result<LlrFrame> {
    let bps = c.bits_per_symbol();
    let len = stats.mean.len();
    Error::check_len("a-priori LLRs", len * bps, apriori.len())?;
    if let Variance::PerSymbol(v) = &stats.var {
        Error::check_len("extrinsic variances", len, v.len())?;
    }
    let order = c.order();
    let pts = c.points();
    let mut out = Vec::with_capacity(len * bps);
    let mut metric = vec![0.0; order];
    let mut bit_lp = vec![[0.0; 2]; bps];
    for (j, &m) in stats.mean.iter().enumerate() {
        let v = stats.var.get(j);
        if !(v > 0.0) {
            return Err(Error::invalid("extrinsic variance", format!("{v} at symbol {j}")));
        }
        let la = &apriori[j * bps..(j + 1) * bps];
        for q in 0..bps {
            bit_lp[q] = [log_bit_prob(la[q], 0), log_bit_prob(la[q], 1)];
        }
        for a in 0..order {
            let prior: f64 = (0..bps).map(|q| bit_lp[q][c.label_bit(a, q) as usize]).sum();
            metric[a] = -(pts[a] - m).norm_sqr() / v + prior;
        }
        for q in 0..bps {
            let mut num = [f64::NEG_INFINITY; 2];
            for a in 0..order {
                let b = c.label_bit(a, q) as usize;
                num[b] = log_add(num[b], metric[a] - bit_lp[q][b]);
            }
            out.push(clamp_llr(num[0] - num[1]));
        }
    }
    Ok(LlrFrame::new(out))
}

/// `p(x_j = α_a) = Π_q P(c_j^q = α_a^q)` from a-priori bit LLRs.
pub fn priors_from_llr(llr: &[f64], c: &Constellation) -> Result<SymbolPriors> {
    let bps = c.bits_per_symbol();
    if llr.len() % bps != 0 {
        return Err(Error::invalid("llr", "length is not a multiple of bits per symbol"));
    }
    let order = c.order();
    let mut probs = Vec::with_capacity(llr.len() / bps * order);
    for chunk in llr.chunks_exact(bps) {
        let start = probs.len();
        for a in 0..order {
            let lp: f64 = (0..bps)
                .map(|q| log_bit_prob(chunk[q], c.label_bit(a, q)))
                .sum();
            probs.push(lp.exp());
        }
        let row = &mut probs[start..];
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= s);
    }
    SymbolPriors::new(probs, order)
}
