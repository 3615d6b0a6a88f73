use super::{clamp_llr, log_add, CodeSpec, LlrFrame};
use crate::{Error, Result};

const STATES: usize = 4;

/// State packs `(u_{k-1}, u_{k-2})` as `u_{k-1} | u_{k-2} << 1`.
#[inline]
fn step(state: usize, u: usize) -> (usize, [u8; 2]) {
    let s1 = state & 1;
    let s2 = state >> 1;
    let c0 = (u ^ s2) as u8;
    let c1 = (u ^ s1 ^ s2) as u8;
    (u | (s1 << 1), [c0, c1])
}

/// Feed-forward encoding, two output bits per input bit (`g = 5` first).
pub fn conv_encode(info: &[u8], spec: &CodeSpec) -> Result<Vec<u8>> {
    if let Some(b) = info.iter().find(|&&b| b > 1) {
        return Err(Error::invalid("info_bits", format!("bit value {b} is not 0 or 1")));
    }
    let mut out = Vec::with_capacity(spec.coded_len(info.len()));
    let mut state = 0;
    let tail = if spec.terminated { CodeSpec::MEMORY } else { 0 };
    for &u in info.iter().chain(core::iter::repeat(&0).take(tail)) {
        let (next, c) = step(state, u as usize);
        out.extend_from_slice(&c);
        state = next;
    }
    Ok(out)
}

/// Soft outputs of one BCJR pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BcjrOutput {
    /// `app - channel - apriori` per coded bit.
    pub extrinsic: LlrFrame,
    /// A-posteriori LLR per coded bit.
    pub app: LlrFrame,
    /// A-posteriori LLR per message bit (flush bits excluded).
    pub info: LlrFrame,
}

/// Exact log-domain forward-backward decoding.
///
/// `channel` and `apriori` are both per coded bit; they enter the branch
/// metrics as a sum and are removed again from the extrinsic output.
pub fn bcjr_decode(channel: &[f64], apriori: &[f64], spec: &CodeSpec) -> Result<BcjrOutput> {
    Error::check_len("a-priori LLRs", channel.len(), apriori.len())?;
    let info_len = spec.info_len(channel.len())?;
    let steps = channel.len() / 2;
    let ninf = f64::NEG_INFINITY;
    let llr: Vec<f64> = channel.iter().zip(apriori).map(|(a, b)| a + b).collect();

    // gamma[t][state][u]
    let mut gamma = vec![[[0.0; 2]; STATES]; steps];
    for t in 0..steps {
        let (l0, l1) = (llr[2 * t], llr[2 * t + 1]);
        for s in 0..STATES {
            for u in 0..2 {
                let (_, c) = step(s, u);
                let sgn = |b: u8, l: f64| if b == 0 { 0.5 * l } else { -0.5 * l };
                gamma[t][s][u] = sgn(c[0], l0) + sgn(c[1], l1);
            }
        }
    }

    let mut alpha = vec![[ninf; STATES]; steps + 1];
    alpha[0][0] = 0.0;
    for t in 0..steps {
        let mut next = [ninf; STATES];
        for s in 0..STATES {
            if alpha[t][s] == ninf {
                continue;
            }
            for u in 0..2 {
                let (ns, _) = step(s, u);
                next[ns] = log_add(next[ns], alpha[t][s] + gamma[t][s][u]);
            }
        }
        let norm = next.iter().copied().fold(ninf, f64::max);
        next.iter_mut().for_each(|v| *v -= norm);
        alpha[t + 1] = next;
    }

    let mut beta = vec![[ninf; STATES]; steps + 1];
    if spec.terminated {
        beta[steps][0] = 0.0;
    } else {
        beta[steps] = [0.0; STATES];
    }
    for t in (0..steps).rev() {
        let mut cur = [ninf; STATES];
        for s in 0..STATES {
            for u in 0..2 {
                let (ns, _) = step(s, u);
                cur[s] = log_add(cur[s], gamma[t][s][u] + beta[t + 1][ns]);
            }
        }
        let norm = cur.iter().copied().fold(ninf, f64::max);
        cur.iter_mut().for_each(|v| *v -= norm);
        beta[t] = cur;
    }

    let mut app = Vec::with_capacity(channel.len());
    let mut info = Vec::with_capacity(info_len);
    for t in 0..steps {
        // [bit index][value]
        let mut acc = [[ninf; 2]; 3];
        for s in 0..STATES {
            if alpha[t][s] == ninf {
                continue;
            }
            for u in 0..2 {
                let (ns, c) = step(s, u);
                let m = alpha[t][s] + gamma[t][s][u] + beta[t + 1][ns];
                acc[0][c[0] as usize] = log_add(acc[0][c[0] as usize], m);
                acc[1][c[1] as usize] = log_add(acc[1][c[1] as usize], m);
                acc[2][u] = log_add(acc[2][u], m);
            }
        }
        app.push(acc[0][0] - acc[0][1]);
        app.push(acc[1][0] - acc[1][1]);
        if t < info_len {
            info.push(acc[2][0] - acc[2][1]);
        }
    }
    let extrinsic = app
        .iter()
        .zip(&llr)
        .map(|(a, l)| clamp_llr(a - l))
        .collect();
    Ok(BcjrOutput {
        extrinsic: LlrFrame::new(extrinsic),
        app: LlrFrame::new(app),
        info: LlrFrame::new(info),
    })
}
