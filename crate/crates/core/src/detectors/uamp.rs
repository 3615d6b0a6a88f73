use super::{
    check_finite, damp, discrete_posterior, run_detector, Detector, DetectorOptions,
    IterationRecord, PseudoObservation, SymbolPosterior, SymbolPriors, Variance, VARIANCE_FLOOR,
};
use crate::dd_channel::{RectSvdChannel, SpectralChannel};
use crate::fft2::Fft2;
use crate::modem::Constellation;
use crate::{Error, Result, C64};

/// Floor on the denominator of the noise-precision update.
const EPS_DENOM_FLOOR: f64 = 1e-12;

/// Unitary model `r = A x + ω` with `A = diag(d) Φ`, `Φ` unitary.
pub trait UnitaryModel {
    fn len(&self) -> usize;
    /// `|d|^2`.
    fn lambda(&self) -> &[f64];
    /// `A x`.
    fn forward(&self, x: &[C64]) -> Vec<C64>;
    /// `A^H s`.
    fn adjoint(&self, s: &[C64]) -> Vec<C64>;
}

/// Bi-orthogonal model: `A = diag(d) F`.
#[derive(Debug, Clone, Copy)]
pub struct BccbModel<'a>(pub &'a SpectralChannel);

impl UnitaryModel for BccbModel<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn lambda(&self) -> &[f64] {
        self.0.lambda()
    }

    fn forward(&self, x: &[C64]) -> Vec<C64> {
        let mut v = x.to_vec();
        self.0.fft().forward(&mut v);
        v.iter_mut().zip(self.0.d()).for_each(|(a, d)| *a *= d);
        v
    }

    fn adjoint(&self, s: &[C64]) -> Vec<C64> {
        let mut v: Vec<C64> = s.iter().zip(self.0.d()).map(|(a, d)| a * d.conj()).collect();
        self.0.fft().inverse(&mut v);
        v
    }
}

/// Rectangular model: `A = diag(d) V (F_N^H ⊗ I_M)`.
#[derive(Debug, Clone)]
pub struct RectModel<'a> {
    svd: &'a RectSvdChannel,
    fft: Fft2,
}

impl<'a> RectModel<'a> {
    pub fn new(svd: &'a RectSvdChannel) -> Self {
        Self {
            svd,
            fft: Fft2::new(svd.m(), svd.n()),
        }
    }
}

impl UnitaryModel for RectModel<'_> {
    fn len(&self) -> usize {
        self.svd.len()
    }

    fn lambda(&self) -> &[f64] {
        self.svd.lambda()
    }

    fn forward(&self, x: &[C64]) -> Vec<C64> {
        let mut v = x.to_vec();
        self.fft.doppler_inverse(&mut v);
        let mut w = self.svd.apply_v(&v);
        w.iter_mut().zip(self.svd.d()).for_each(|(a, d)| *a *= *d);
        w
    }

    fn adjoint(&self, s: &[C64]) -> Vec<C64> {
        let ds: Vec<C64> = s.iter().zip(self.svd.d()).map(|(a, d)| a * *d).collect();
        let mut w = self.svd.apply_v_adjoint(&ds);
        self.fft.doppler_forward(&mut w);
        w
    }
}

/// UAMP with noise-precision estimation.
#[derive(Debug, Clone)]
pub struct UampDetector<M> {
    model: M,
    r: Vec<C64>,
    c: Constellation,
    damping: Option<f64>,
    known_eps: Option<f64>,
    s: Vec<C64>,
    x_hat: Vec<C64>,
    nu_x: f64,
    eps_hat: f64,
    p: Vec<C64>,
    z_hat: Vec<C64>,
    t: usize,
}

impl<M: UnitaryModel> UampDetector<M> {
    /// `r` is the observation already in the transformed domain.
    pub fn new(model: M, r: &[C64], c: Constellation, opts: &DetectorOptions) -> Result<Self> {
        let n = model.len();
        Error::check_len("observation", n, r.len())?;
        if let Some(e) = opts.known_noise_precision {
            if !(e > 0.0) {
                return Err(Error::invalid("known_noise_precision", "must be positive"));
            }
        }
        Ok(Self {
            model,
            r: r.to_vec(),
            c,
            damping: opts.damping,
            known_eps: opts.known_noise_precision,
            s: vec![C64::default(); n],
            x_hat: vec![C64::default(); n],
            nu_x: 1.0,
            eps_hat: opts.known_noise_precision.unwrap_or(1.0),
            p: vec![C64::default(); n],
            z_hat: vec![C64::default(); n],
            t: 0,
        })
    }

    pub fn nu_x(&self) -> f64 {
        self.nu_x
    }

    /// `p` from the most recent [`Detector::observe`].
    pub fn last_p(&self) -> &[C64] {
        &self.p
    }

    /// `ẑ` from the most recent [`Detector::observe`].
    pub fn last_z_hat(&self) -> &[C64] {
        &self.z_hat
    }
}

impl<M: UnitaryModel> Detector for UampDetector<M> {
    fn observe(&mut self) -> Result<PseudoObservation> {
        let n = self.model.len();
        let lambda = self.model.lambda();
        let nu_p: Vec<f64> = lambda
            .iter()
            .map(|l| (l * self.nu_x).max(VARIANCE_FLOOR))
            .collect();
        let ax = self.model.forward(&self.x_hat);
        for j in 0..n {
            self.p[j] = ax[j] - self.s[j] * nu_p[j];
        }
        let mut resid = 0.0;
        let mut sum_nu_z = 0.0;
        for j in 0..n {
            let nu_z = 1.0 / (1.0 / nu_p[j] + self.eps_hat);
            self.z_hat[j] = (self.p[j] / nu_p[j] + self.r[j] * self.eps_hat) * nu_z;
            resid += (self.r[j] - self.z_hat[j]).norm_sqr();
            sum_nu_z += nu_z;
        }
        // The refreshed estimate already feeds ν_s below.
        if self.known_eps.is_none() {
            self.eps_hat = n as f64 / (resid + sum_nu_z).max(EPS_DENOM_FLOOR);
        }
        let inv_eps = 1.0 / self.eps_hat;
        let mut lam_nu_s = 0.0;
        for j in 0..n {
            let nu_s = (1.0 / (nu_p[j] + inv_eps)).max(VARIANCE_FLOOR);
            self.s[j] = (self.r[j] - self.p[j]) * nu_s;
            lam_nu_s += lambda[j] * nu_s;
        }
        check_finite(self.t, "residual message s", &self.s)?;
        let nu_q = (n as f64 / lam_nu_s).max(VARIANCE_FLOOR);
        if !nu_q.is_finite() || !self.eps_hat.is_finite() {
            return Err(Error::Diverged {
                iteration: self.t,
                reason: "non-finite variance".into(),
            });
        }
        let back = self.model.adjoint(&self.s);
        let q: Vec<C64> = (0..n).map(|j| self.x_hat[j] + back[j] * nu_q).collect();
        check_finite(self.t, "pseudo observation q", &q)?;
        Ok(PseudoObservation {
            q,
            nu_q: Variance::Shared(nu_q),
        })
    }

    fn update(
        &mut self,
        obs: &PseudoObservation,
        priors: &SymbolPriors,
    ) -> Result<SymbolPosterior> {
        let post = discrete_posterior(obs, priors, &self.c)?;
        damp(&mut self.x_hat, &post.mean, self.damping);
        let nu = post.mean_var();
        self.nu_x = match self.damping {
            None => nu,
            Some(w) => w * nu + (1.0 - w) * self.nu_x,
        };
        self.t += 1;
        Ok(post)
    }

    fn eps_hat(&self) -> f64 {
        self.eps_hat
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

/// UAMP on a BCCB channel; `r = F y`.
pub fn uamp_detect(
    spec: &SpectralChannel,
    r: &[C64],
    priors: &SymbolPriors,
    c: &Constellation,
    opts: &DetectorOptions,
) -> Result<Vec<IterationRecord>> {
    let mut det = UampDetector::new(BccbModel(spec), r, c.clone(), opts)?;
    run_detector(&mut det, priors, opts)
}

/// UAMP on the rectangular-waveform model; `r = U^H (F_N^H ⊗ I_M) y`.
pub fn uamp_rect_detect(
    svd: &RectSvdChannel,
    r: &[C64],
    priors: &SymbolPriors,
    c: &Constellation,
    opts: &DetectorOptions,
) -> Result<Vec<IterationRecord>> {
    let mut det = UampDetector::new(RectModel::new(svd), r, c.clone(), opts)?;
    run_detector(&mut det, priors, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd_channel::{DdChannel, LinkModel, OtfsGrid, Waveform};
    use crate::modem::{hard_decision, Constellation};

    fn frame(len: usize, c: &Constellation) -> (Vec<usize>, Vec<C64>) {
        let idx: Vec<usize> = (0..len).map(|j| (j * 7 + 3) % c.order()).collect();
        let x = idx.iter().map(|&a| c.points()[a]).collect();
        (idx, x)
    }

    #[test]
    fn identity_channel_noise_free_recovers_frame() {
        let grid = OtfsGrid::with_default_numerology(8, 4).unwrap();
        let c = Constellation::qpsk();
        let (idx, x) = frame(grid.len(), &c);
        for wf in [Waveform::Biorthogonal, Waveform::Rectangular] {
            let link = LinkModel::new(DdChannel::identity(grid), wf, 1).unwrap();
            let y = link.apply(&x).unwrap();
            let r = link.transform(&y);
            let priors = SymbolPriors::uniform(grid.len(), 4);
            let recs = match link.unitary() {
                crate::dd_channel::ChannelOperator::Spectral(s) => {
                    uamp_detect(s, &r, &priors, &c, &DetectorOptions::default())
                }
                crate::dd_channel::ChannelOperator::RectSvd(s) => {
                    uamp_rect_detect(s, &r, &priors, &c, &DetectorOptions::default())
                }
                _ => unreachable!(),
            }
            .unwrap();
            let last = recs.last().unwrap();
            assert_eq!(hard_decision(&last.posterior.mean, &c), idx);
            assert!(last.posterior.mean_var() < 1e-12);
            assert!(last.eps_hat > 1e6);
        }
    }

    #[test]
    fn known_noise_freezes_estimate() {
        let grid = OtfsGrid::with_default_numerology(4, 2).unwrap();
        let c = Constellation::qpsk();
        let link = LinkModel::new(DdChannel::identity(grid), Waveform::Biorthogonal, 0).unwrap();
        let (_, x) = frame(grid.len(), &c);
        let r = link.transform(&link.apply(&x).unwrap());
        let opts = DetectorOptions {
            known_noise_precision: Some(42.0),
            max_iter: 3,
            ..Default::default()
        };
        let crate::dd_channel::ChannelOperator::Spectral(s) = link.unitary() else {
            unreachable!()
        };
        let recs = uamp_detect(s, &r, &SymbolPriors::uniform(8, 4), &c, &opts).unwrap();
        assert!(recs.iter().all(|r| r.eps_hat == 42.0));
    }
}
