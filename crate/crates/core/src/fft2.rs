//! Unitary 2D DFT over the delay-Doppler grid.
//!
//! A DD vector of length `M*N` is the column-major `M x N` matrix `X` with
//! `X[l, k] = x[k*M + l]`. With `F_M`, `F_N` the normalized DFT matrices,
//! `(F_N ⊗ F_M) vec(X) = vec(F_M X F_N^T)`: an `M`-point transform down each
//! (contiguous) column followed by an `N`-point transform along each
//! (stride-`M`) row.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

/// Planned transforms for one `M x N` grid. Cheap to clone and shareable
/// across threads; scratch space is allocated per call.
#[derive(Clone)]
pub struct Fft2 {
    m: usize,
    n: usize,
    fwd_m: Arc<dyn Fft<f64>>,
    inv_m: Arc<dyn Fft<f64>>,
    fwd_n: Arc<dyn Fft<f64>>,
    inv_n: Arc<dyn Fft<f64>>,
}

impl core::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Fft2")
            .field("m", &self.m)
            .field("n", &self.n)
            .finish()
    }
}

impl Fft2 {
    pub fn new(m: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            n,
            fwd_m: planner.plan_fft_forward(m),
            inv_m: planner.plan_fft_inverse(m),
            fwd_n: planner.plan_fft_forward(n),
            inv_n: planner.plan_fft_inverse(n),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.m * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn columns(&self, plan: &Arc<dyn Fft<f64>>, x: &mut [C64]) {
        assert_eq!(x.len(), self.len());
        plan.process(x);
    }

    fn rows(&self, plan: &Arc<dyn Fft<f64>>, x: &mut [C64]) {
        assert_eq!(x.len(), self.len());
        let (m, n) = (self.m, self.n);
        let mut buf = vec![C64::default(); n * m];
        // transpose to row-major so each row is contiguous
        for k in 0..n {
            for l in 0..m {
                buf[l * n + k] = x[k * m + l];
            }
        }
        plan.process(&mut buf);
        for k in 0..n {
            for l in 0..m {
                x[k * m + l] = buf[l * n + k];
            }
        }
    }

    fn scale(x: &mut [C64], s: f64) {
        x.iter_mut().for_each(|v| *v *= s);
    }

    /// `x <- (F_N ⊗ F_M) x`.
    pub fn forward(&self, x: &mut [C64]) {
        self.columns(&self.fwd_m, x);
        self.rows(&self.fwd_n, x);
        Self::scale(x, 1.0 / (self.len() as f64).sqrt());
    }

    /// `x <- (F_N ⊗ F_M)^H x`.
    pub fn inverse(&self, x: &mut [C64]) {
        self.columns(&self.inv_m, x);
        self.rows(&self.inv_n, x);
        Self::scale(x, 1.0 / (self.len() as f64).sqrt());
    }

    /// Unnormalized 2D DFT, i.e. `sqrt(MN) (F_N ⊗ F_M) x`.
    pub fn forward_unnormalized(&self, x: &mut [C64]) {
        self.columns(&self.fwd_m, x);
        self.rows(&self.fwd_n, x);
    }

    /// `x <- (F_N ⊗ I_M) x`: unitary DFT along Doppler only.
    pub fn doppler_forward(&self, x: &mut [C64]) {
        self.rows(&self.fwd_n, x);
        Self::scale(x, 1.0 / (self.n as f64).sqrt());
    }

    /// `x <- (F_N^H ⊗ I_M) x`.
    pub fn doppler_inverse(&self, x: &mut [C64]) {
        self.rows(&self.inv_n, x);
        Self::scale(x, 1.0 / (self.n as f64).sqrt());
    }

    /// `x <- (I_N ⊗ F_M) x`: unitary DFT along delay only.
    pub fn delay_forward(&self, x: &mut [C64]) {
        self.columns(&self.fwd_m, x);
        Self::scale(x, 1.0 / (self.m as f64).sqrt());
    }

    /// `x <- (I_N ⊗ F_M^H) x`.
    pub fn delay_inverse(&self, x: &mut [C64]) {
        self.columns(&self.inv_m, x);
        Self::scale(x, 1.0 / (self.m as f64).sqrt());
    }
}
