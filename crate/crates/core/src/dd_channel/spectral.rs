use super::{OtfsGrid, SparseChannelMatrix};
use crate::fft2::Fft2;
use crate::{Error, Result, C64};

/// Eigen-decomposition `H = F^H diag(d) F` of a BCCB channel, with
/// `F = F_N ⊗ F_M` unitary.
#[derive(Debug, Clone)]
pub struct SpectralChannel {
    d: Vec<C64>,
    lambda: Vec<f64>,
    fft: Fft2,
}

impl SpectralChannel {
    /// Builds directly from eigenvalues, e.g. `d = 1` for the identity.
    pub fn from_eigenvalues(grid: &OtfsGrid, d: Vec<C64>) -> Result<Self> {
        Error::check_len("eigenvalues", grid.len(), d.len())?;
        let lambda = d.iter().map(|v| v.norm_sqr()).collect();
        Ok(Self {
            d,
            lambda,
            fft: Fft2::new(grid.m, grid.n),
        })
    }

    pub fn from_sparse(h: &SparseChannelMatrix, grid: &OtfsGrid) -> Result<Self> {
        bccb_spectrum(&h.column(0), grid)
    }

    /// Eigenvalues `d`.
    pub fn d(&self) -> &[C64] {
        &self.d
    }

    /// `λ = |d|^2`.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// `H^H x = F^H (d^* · F x)`.
    pub fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        let mut v = x.to_vec();
        self.fft.forward(&mut v);
        v.iter_mut().zip(&self.d).for_each(|(a, d)| *a *= d.conj());
        self.fft.inverse(&mut v);
        v
    }
}

/// Eigenvalues of a BCCB matrix from its first column: `d` is the
/// unnormalized 2D DFT of `reshape_M(H(:,1))`.
pub fn bccb_spectrum(first_column: &[C64], grid: &OtfsGrid) -> Result<SpectralChannel> {
    Error::check_len("first column", grid.len(), first_column.len())?;
    let fft = Fft2::new(grid.m, grid.n);
    let mut d = first_column.to_vec();
    fft.forward_unnormalized(&mut d);
    let lambda = d.iter().map(|v| v.norm_sqr()).collect();
    Ok(SpectralChannel { d, lambda, fft })
}

/// Matrix-free `H x = F^H (d · F x)`.
pub fn apply_bccb(spec: &SpectralChannel, x: &[C64]) -> Result<Vec<C64>> {
    Error::check_len("input vector", spec.len(), x.len())?;
    let mut v = x.to_vec();
    spec.fft.forward(&mut v);
    v.iter_mut().zip(&spec.d).for_each(|(a, d)| *a *= d);
    spec.fft.inverse(&mut v);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::super::{build_h_integer, ChannelPath, DdChannel};
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn identity_has_unit_spectrum() {
        let g = OtfsGrid::with_default_numerology(4, 3).unwrap();
        let mut e0 = vec![C64::default(); 12];
        e0[0] = C64::new(1.0, 0.0);
        let s = bccb_spectrum(&e0, &g).unwrap();
        for d in s.d() {
            assert!((d - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let x: Vec<C64> = (0..12).map(|i| C64::new(i as f64, -1.0)).collect();
        let y = apply_bccb(&s, &x).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(apply_bccb(&s, &vec![C64::default(); 12])
            .unwrap()
            .iter()
            .all(|v| v.norm() == 0.0));
    }

    #[test]
    fn delay_shift_spectrum_is_twiddle() {
        let (m, n) = (8, 4);
        let g = OtfsGrid::with_default_numerology(m, n).unwrap();
        let ch = DdChannel::new(g, vec![ChannelPath::new(C64::new(1.0, 0.0), 1, 0, 0.0)]).unwrap();
        let h = build_h_integer(&ch).unwrap();
        let s = SpectralChannel::from_sparse(&h, &g).unwrap();
        for k in 0..n {
            for l in 0..m {
                let want = C64::from_polar(1.0, -2.0 * PI * l as f64 / m as f64);
                assert!((s.d()[k * m + l] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let g = OtfsGrid::with_default_numerology(4, 3).unwrap();
        assert!(bccb_spectrum(&[C64::default(); 5], &g).is_err());
    }
}
