use super::{
    check_finite, damp, discrete_posterior, run_detector, Detector, DetectorOptions,
    IterationRecord, PseudoObservation, SymbolPosterior, SymbolPriors, Variance, VARIANCE_FLOOR,
};
use crate::dd_channel::SparseChannelMatrix;
use crate::modem::Constellation;
use crate::{Error, Result, C64};

/// AMP on an explicit channel matrix with known noise precision.
#[derive(Debug, Clone)]
pub struct AmpDetector<'a> {
    h: &'a SparseChannelMatrix,
    y: Vec<C64>,
    eps: f64,
    c: Constellation,
    damping: Option<f64>,
    s: Vec<C64>,
    x_hat: Vec<C64>,
    nu_x: Vec<f64>,
    t: usize,
}

impl<'a> AmpDetector<'a> {
    pub fn new(
        h: &'a SparseChannelMatrix,
        y: &[C64],
        eps: f64,
        c: Constellation,
        damping: Option<f64>,
    ) -> Result<Self> {
        Error::check_len("observation", h.dim(), y.len())?;
        if !(eps > 0.0) {
            return Err(Error::invalid("eps", "noise precision must be positive"));
        }
        let n = h.dim();
        Ok(Self {
            h,
            y: y.to_vec(),
            eps,
            c,
            damping,
            s: vec![C64::default(); n],
            x_hat: vec![C64::default(); n],
            nu_x: vec![1.0; n],
            t: 0,
        })
    }

    pub fn nu_x(&self) -> &[f64] {
        &self.nu_x
    }
}

impl Detector for AmpDetector<'_> {
    fn observe(&mut self) -> Result<PseudoObservation> {
        let h = self.h;
        let nu_p: Vec<f64> = h
            .abs2_matvec(&self.nu_x)
            .into_iter()
            .map(|v| v.max(VARIANCE_FLOOR))
            .collect();
        let hx = h.matvec(&self.x_hat);
        let inv_eps = 1.0 / self.eps;
        let mut nu_s = Vec::with_capacity(nu_p.len());
        for j in 0..nu_p.len() {
            let p = hx[j] - self.s[j] * nu_p[j];
            let ns = (1.0 / (nu_p[j] + inv_eps)).max(VARIANCE_FLOOR);
            self.s[j] = (self.y[j] - p) * ns;
            nu_s.push(ns);
        }
        check_finite(self.t, "residual message s", &self.s)?;
        let nu_q: Vec<f64> = h
            .abs2_adjoint_matvec(&nu_s)
            .into_iter()
            .map(|v| (1.0 / v).max(VARIANCE_FLOOR))
            .collect();
        let hs = h.adjoint_matvec(&self.s);
        let q: Vec<C64> = (0..hs.len()).map(|j| self.x_hat[j] + hs[j] * nu_q[j]).collect();
        check_finite(self.t, "pseudo observation q", &q)?;
        Ok(PseudoObservation {
            q,
            nu_q: Variance::PerSymbol(nu_q),
        })
    }

    fn update(
        &mut self,
        obs: &PseudoObservation,
        priors: &SymbolPriors,
    ) -> Result<SymbolPosterior> {
        let post = discrete_posterior(obs, priors, &self.c)?;
        damp(&mut self.x_hat, &post.mean, self.damping);
        match self.damping {
            None => self.nu_x.copy_from_slice(&post.var),
            Some(w) => self
                .nu_x
                .iter_mut()
                .zip(&post.var)
                .for_each(|(o, n)| *o = w * n + (1.0 - w) * *o),
        }
        self.t += 1;
        Ok(post)
    }

    fn eps_hat(&self) -> f64 {
        self.eps
    }

    fn x_hat(&self) -> &[C64] {
        &self.x_hat
    }

    fn constellation(&self) -> &Constellation {
        &self.c
    }

    fn iteration(&self) -> usize {
        self.t
    }
}

/// Runs AMP for `opts.max_iter` iterations with fixed priors.
pub fn amp_detect(
    h: &SparseChannelMatrix,
    y: &[C64],
    eps: f64,
    priors: &SymbolPriors,
    c: &Constellation,
    opts: &DetectorOptions,
) -> Result<Vec<IterationRecord>> {
    let mut det = AmpDetector::new(h, y, eps, c.clone(), opts.damping)?;
    run_detector(&mut det, priors, opts)
}
