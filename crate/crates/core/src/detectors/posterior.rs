use super::{PseudoObservation, VARIANCE_FLOOR};
use crate::modem::Constellation;
use crate::{Error, Result, C64};

const ROW_SUM_TOL: f64 = 1e-9;

/// Per-symbol prior probabilities `p(x_j = α_a)`, row-major `MN x |A|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPriors {
    order: usize,
    probs: Vec<f64>,
}

impl SymbolPriors {
    pub fn uniform(len: usize, order: usize) -> Self {
        Self {
            order,
            probs: vec![1.0 / order as f64; len * order],
        }
    }

    /// Validates that each row is a probability vector.
    pub fn new(probs: Vec<f64>, order: usize) -> Result<Self> {
        if order == 0 || probs.len() % order != 0 {
            return Err(Error::invalid("priors", "length is not a multiple of |A|"));
        }
        for (j, row) in probs.chunks_exact(order).enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::invalid("priors", format!("row {j} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if s == 0.0 {
                return Err(Error::DegeneratePrior { index: j });
            }
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid("priors", format!("row {j} sums to {s}")));
            }
        }
        Ok(Self { order, probs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.probs.len() / self.order
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.probs[j * self.order..(j + 1) * self.order]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

/// Posterior over the constellation for every symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPosterior {
    order: usize,
    /// `β_{j,a}`, row-major.
    pub beta: Vec<f64>,
    pub mean: Vec<C64>,
    pub var: Vec<f64>,
}

impl SymbolPosterior {
    pub fn row(&self, j: usize) -> &[f64] {
        &self.beta[j * self.order..(j + 1) * self.order]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mean_var(&self) -> f64 {
        self.var.iter().sum::<f64>() / self.var.len().max(1) as f64
    }
}

/// `ξ_{j,a} = p(x_j = α_a) exp(-|α_a - q_j|^2 / ν_q)`, normalized into `β`,
/// with posterior mean `Σ_a α_a β_{j,a}` and variance `Σ_a β_{j,a} |α_a - x̂_j|^2`.
/// Evaluated in the log domain with per-row max subtraction.
pub fn discrete_posterior(
    obs: &PseudoObservation,
    priors: &SymbolPriors,
    c: &Constellation,
) -> Result<SymbolPosterior> {
    let len = obs.q.len();
    let order = c.order();
    Error::check_len("priors", len, priors.len())?;
    if priors.order() != order {
        return Err(Error::invalid("priors", "row width differs from constellation order"));
    }
    let pts = c.points();
    let mut beta = vec![0.0; len * order];
    let mut mean = Vec::with_capacity(len);
    let mut var = Vec::with_capacity(len);
    let mut logw = vec![0.0; order];
    for (j, &q) in obs.q.iter().enumerate() {
        let nu = obs.nu_q.get(j).max(VARIANCE_FLOOR);
        let prior = priors.row(j);
        let mut max = f64::NEG_INFINITY;
        for a in 0..order {
            logw[a] = if prior[a] > 0.0 {
                prior[a].ln() - (pts[a] - q).norm_sqr() / nu
            } else {
                f64::NEG_INFINITY
            };
            max = max.max(logw[a]);
        }
        if max == f64::NEG_INFINITY {
            return Err(Error::DegeneratePrior { index: j });
        }
        let row = &mut beta[j * order..(j + 1) * order];
        let mut total = 0.0;
        for a in 0..order {
            row[a] = (logw[a] - max).exp();
            total += row[a];
        }
        let mut m = C64::default();
        for a in 0..order {
            row[a] /= total;
            m += pts[a] * row[a];
        }
        let v = (0..order).map(|a| row[a] * (pts[a] - m).norm_sqr()).sum();
        mean.push(m);
        var.push(v);
    }
    Ok(SymbolPosterior {
        order,
        beta,
        mean,
        var,
    })
}
