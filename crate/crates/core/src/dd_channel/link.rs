use std::sync::OnceLock;

use rand::Rng;

use super::{
    build_h_biorth, build_rect_blocks, rect_block_svd, rect_dd_matrix, spreading_coeff, DdChannel,
    RectBlocks, RectSvdChannel, SparseChannelMatrix, SpectralChannel,
};
use crate::fft2::Fft2;
use crate::rng::complex_gaussian;
use crate::{Error, Result, C64};

/// Transmit/receive pulse pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Waveform {
    /// Ideal bi-orthogonal pulses: the DD channel is exactly BCCB.
    Biorthogonal,
    /// Rectangular pulses with a CP per sub-block.
    Rectangular,
}

/// Borrowed view of one of the interchangeable channel representations a
/// detector works on.
#[derive(Debug, Clone, Copy)]
pub enum ChannelOperator<'a> {
    Sparse(&'a SparseChannelMatrix),
    Spectral(&'a SpectralChannel),
    RectSvd(&'a RectSvdChannel),
}

/// Received frame: DD-domain `y` and its unitary transform `r`
/// (`r = F y` for bi-orthogonal, `r = U^H (F_N^H ⊗ I_M) y` for rectangular).
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub y: Vec<C64>,
    pub r: Vec<C64>,
}

/// A channel realization with the representations each detector needs.
/// Explicit sparse forms are built lazily on first use.
#[derive(Debug)]
pub enum LinkModel {
    Biorthogonal {
        channel: DdChannel,
        trunc: usize,
        spectral: SpectralChannel,
        sparse: OnceLock<SparseChannelMatrix>,
    },
    Rectangular {
        channel: DdChannel,
        blocks: RectBlocks,
        svd: RectSvdChannel,
        fft: Fft2,
        sparse: OnceLock<SparseChannelMatrix>,
    },
}

/// First column of the bi-orthogonal DD matrix, built without the rest.
fn biorth_first_column(channel: &DdChannel, trunc: usize) -> Result<Vec<C64>> {
    let grid = channel.grid();
    let (m, n) = (grid.m, grid.n);
    if trunc >= n {
        return Err(Error::invalid("trunc_Ni", format!("must be below N = {n}, got {trunc}")));
    }
    let mut col = vec![C64::default(); m * n];
    let lo = -(trunc as i64);
    let hi = (trunc as i64).min(lo + n as i64 - 1);
    for path in channel.paths() {
        for c in lo..=hi {
            let g = spreading_coeff(c, path, grid)?;
            let shift = (path.doppler_idx - c).rem_euclid(n as i64) as usize;
            col[shift * m + path.delay_idx] += path.gain * g;
        }
    }
    Ok(col)
}

impl LinkModel {
    /// `trunc` is the one-sided fractional-Doppler spread used by the
    /// bi-orthogonal model; it is ignored for the rectangular waveform.
    pub fn new(channel: DdChannel, waveform: Waveform, trunc: usize) -> Result<Self> {
        let grid = *channel.grid();
        match waveform {
            Waveform::Biorthogonal => {
                let col = biorth_first_column(&channel, trunc)?;
                let spectral = super::bccb_spectrum(&col, &grid)?;
                Ok(LinkModel::Biorthogonal {
                    channel,
                    trunc,
                    spectral,
                    sparse: OnceLock::new(),
                })
            }
            Waveform::Rectangular => {
                let blocks = build_rect_blocks(&channel);
                let svd = rect_block_svd(&blocks)?;
                Ok(LinkModel::Rectangular {
                    channel,
                    blocks,
                    svd,
                    fft: Fft2::new(grid.m, grid.n),
                    sparse: OnceLock::new(),
                })
            }
        }
    }

    pub fn waveform(&self) -> Waveform {
        match self {
            LinkModel::Biorthogonal { .. } => Waveform::Biorthogonal,
            LinkModel::Rectangular { .. } => Waveform::Rectangular,
        }
    }

    pub fn channel(&self) -> &DdChannel {
        match self {
            LinkModel::Biorthogonal { channel, .. } | LinkModel::Rectangular { channel, .. } => channel,
        }
    }

    /// Explicit DD matrix `H` (for AMP).
    pub fn sparse(&self) -> &SparseChannelMatrix {
        match self {
            LinkModel::Biorthogonal {
                channel,
                trunc,
                sparse,
                ..
            } => sparse.get_or_init(|| {
                build_h_biorth(channel, *trunc).expect("truncation validated at construction")
            }),
            LinkModel::Rectangular { blocks, sparse, .. } => {
                sparse.get_or_init(|| rect_dd_matrix(blocks))
            }
        }
    }

    /// Unitary-model operator: BCCB spectrum or block SVD.
    pub fn unitary(&self) -> ChannelOperator<'_> {
        match self {
            LinkModel::Biorthogonal { spectral, .. } => ChannelOperator::Spectral(spectral),
            LinkModel::Rectangular { svd, .. } => ChannelOperator::RectSvd(svd),
        }
    }

    /// Per-entry power `λ` of the unitary model.
    pub fn lambda(&self) -> &[f64] {
        match self {
            LinkModel::Biorthogonal { spectral, .. } => spectral.lambda(),
            LinkModel::Rectangular { svd, .. } => svd.lambda(),
        }
    }

    /// Noise-free DD output `H x`.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        Error::check_len("symbol vector", self.channel().grid().len(), x.len())?;
        match self {
            LinkModel::Biorthogonal { spectral, .. } => super::apply_bccb(spectral, x),
            LinkModel::Rectangular { blocks, fft, .. } => {
                let mut s = x.to_vec();
                fft.doppler_inverse(&mut s);
                let mut u = blocks.apply(&s);
                fft.doppler_forward(&mut u);
                Ok(u)
            }
        }
    }

    /// Unitary transform of a DD observation `y` into the detector domain.
    pub fn transform(&self, y: &[C64]) -> Vec<C64> {
        match self {
            LinkModel::Biorthogonal { spectral, .. } => {
                let mut r = y.to_vec();
                spectral.fft().forward(&mut r);
                r
            }
            LinkModel::Rectangular { svd, fft, .. } => {
                let mut t = y.to_vec();
                fft.doppler_inverse(&mut t);
                svd.apply_u_adjoint(&t)
            }
        }
    }
}

/// Passes `x` through the link and adds circular complex Gaussian noise of
/// variance `1/noise_precision` per entry. An infinite precision disables
/// the noise.
pub fn simulate_rx<R: Rng + ?Sized>(
    link: &LinkModel,
    x: &[C64],
    noise_precision: f64,
    rng: &mut R,
) -> Result<Received> {
    if !(noise_precision > 0.0) {
        return Err(Error::invalid("noise_precision", "must be positive"));
    }
    let mut y = link.apply(x)?;
    if noise_precision.is_finite() {
        let var = 1.0 / noise_precision;
        y.iter_mut().for_each(|v| *v += complex_gaussian(rng, var));
    }
    let r = link.transform(&y);
    Ok(Received { y, r })
}

#[cfg(test)]
mod tests {
    use super::super::{ChannelSampler, OtfsGrid};
    use super::*;
    use crate::rng::{substream, Stream};

    fn grid() -> OtfsGrid {
        OtfsGrid::with_default_numerology(8, 4).unwrap()
    }

    #[test]
    fn noise_free_identity_passes_through() {
        let x: Vec<C64> = (0..32).map(|i| C64::new(i as f64, 0.5)).collect();
        for wf in [Waveform::Biorthogonal, Waveform::Rectangular] {
            let link = LinkModel::new(DdChannel::identity(grid()), wf, 2).unwrap();
            let mut rng = substream(0, &[], Stream::Noise);
            let rx = simulate_rx(&link, &x, f64::INFINITY, &mut rng).unwrap();
            for (a, b) in rx.y.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lazy_sparse_matches_spectral_action() {
        let s = ChannelSampler {
            paths: 3,
            pdp_alpha: 0.0,
            k_max: 1,
            l_max: 5,
            fractional: true,
            distinct_delays: true,
        };
        let ch = s.sample_seeded(&grid(), 5).unwrap();
        let x: Vec<C64> = (0..32).map(|i| C64::new((i as f64).cos(), (i as f64 * 0.3).sin())).collect();
        for wf in [Waveform::Biorthogonal, Waveform::Rectangular] {
            let link = LinkModel::new(ch.clone(), wf, 2).unwrap();
            let a = link.apply(&x).unwrap();
            let b = link.sparse().matvec(&x);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).norm() < 1e-12, "{wf:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_precision_and_length() {
        let link = LinkModel::new(DdChannel::identity(grid()), Waveform::Biorthogonal, 2).unwrap();
        let mut rng = substream(0, &[], Stream::Noise);
        assert!(simulate_rx(&link, &[C64::default(); 32], 0.0, &mut rng).is_err());
        assert!(simulate_rx(&link, &[C64::default(); 31], 1.0, &mut rng).is_err());
    }
}
