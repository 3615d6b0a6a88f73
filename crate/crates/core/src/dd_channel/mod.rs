//! Delay-Doppler channel: random path draws and the effective DD matrix in
//! its explicit sparse, BCCB-spectral and rectangular block-SVD forms.

mod link;
mod rect;
mod sparse;
mod spectral;
mod spreading;

use rand::Rng;

use crate::rng::complex_gaussian;
use crate::{Error, Result, C64};

pub use link::{simulate_rx, ChannelOperator, LinkModel, Received, Waveform};
pub use rect::{build_rect_blocks, rect_block_svd, RectBlocks, RectSvdChannel};
pub use sparse::{build_h_biorth, build_h_integer, rect_dd_matrix, SparseChannelMatrix};
pub use spectral::{apply_bccb, bccb_spectrum, SpectralChannel};
pub use spreading::spreading_coeff;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Dimensions and physical numerology of one OTFS frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtfsGrid {
    /// Delay bins (subcarriers).
    pub m: usize,
    /// Doppler bins (time slots).
    pub n: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
}

impl OtfsGrid {
    pub fn new(m: usize, n: usize, subcarrier_spacing: f64, carrier_freq: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("M", format!("need M >= 2, got {m}")));
        }
        if n < 2 {
            return Err(Error::invalid("N", format!("need N >= 2, got {n}")));
        }
        if !(subcarrier_spacing > 0.0) {
            return Err(Error::invalid("subcarrier_spacing", "must be positive"));
        }
        Ok(Self {
            m,
            n,
            subcarrier_spacing,
            carrier_freq,
        })
    }

    /// Grid with 2 kHz spacing at 3 GHz.
    pub fn with_default_numerology(m: usize, n: usize) -> Result<Self> {
        Self::new(m, n, 2e3, 3e9)
    }

    /// Frame length `M*N`.
    pub fn len(&self) -> usize {
        self.m * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Slot duration `T = 1/Δf`.
    pub fn symbol_period(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    /// Delay resolution `1/(M Δf)` in seconds.
    pub fn delay_resolution(&self) -> f64 {
        1.0 / (self.m as f64 * self.subcarrier_spacing)
    }

    /// Doppler resolution `Δf/N` in Hz.
    pub fn doppler_resolution(&self) -> f64 {
        self.subcarrier_spacing / self.n as f64
    }

    /// Largest Doppler index reached by a terminal moving at `speed` m/s.
    pub fn max_doppler_index(&self, speed: f64) -> i64 {
        let nu_max = speed * self.carrier_freq / SPEED_OF_LIGHT;
        (nu_max / self.doppler_resolution()).round() as i64
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPath {
    pub gain: C64,
    pub delay_idx: usize,
    pub doppler_idx: i64,
    /// Fractional Doppler offset in `[-1/2, 1/2]`.
    pub frac_doppler: f64,
}

impl ChannelPath {
    pub fn new(gain: C64, delay_idx: usize, doppler_idx: i64, frac_doppler: f64) -> Self {
        Self {
            gain,
            delay_idx,
            doppler_idx,
            frac_doppler,
        }
    }

    /// Total Doppler `k + κ` in bins.
    pub fn doppler(&self) -> f64 {
        self.doppler_idx as f64 + self.frac_doppler
    }
}

/// A set of paths on a grid. Immutable once built.
///
/// Only the delay and fractional-Doppler ranges are enforced here; integer
/// Doppler indices may exceed `N/2` (they act modulo `N` apart from the
/// phase term). [`ChannelSampler`] keeps its draws within `|k| < N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdChannel {
    grid: OtfsGrid,
    paths: Vec<ChannelPath>,
}

impl DdChannel {
    pub fn new(grid: OtfsGrid, paths: Vec<ChannelPath>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::invalid("paths", "need at least one path"));
        }
        for p in &paths {
            if p.delay_idx >= grid.m {
                return Err(Error::invalid(
                    "delay_idx",
                    format!("delay {} not below M = {}", p.delay_idx, grid.m),
                ));
            }
            if !(-0.5..=0.5).contains(&p.frac_doppler) {
                return Err(Error::invalid(
                    "frac_doppler",
                    format!("{} outside [-0.5, 0.5]", p.frac_doppler),
                ));
            }
            if !p.gain.re.is_finite() || !p.gain.im.is_finite() {
                return Err(Error::invalid("gain", "non-finite path gain"));
            }
        }
        Ok(Self { grid, paths })
    }

    /// Single unit-gain path with no delay or Doppler (identity channel).
    pub fn identity(grid: OtfsGrid) -> Self {
        Self {
            grid,
            paths: vec![ChannelPath::new(C64::new(1.0, 0.0), 0, 0, 0.0)],
        }
    }

    pub fn grid(&self) -> &OtfsGrid {
        &self.grid
    }

    pub fn paths(&self) -> &[ChannelPath] {
        &self.paths
    }

    pub fn has_fractional_doppler(&self) -> bool {
        self.paths.iter().any(|p| p.frac_doppler != 0.0)
    }
}

/// Normalized exponential power-delay profile `exp(-α l_i) / Σ exp(-α l_i)`.
pub fn power_delay_profile(delays: &[usize], alpha: f64) -> Vec<f64> {
    let w: Vec<f64> = delays.iter().map(|&l| (-alpha * l as f64).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Parameters of the random channel ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSampler {
    pub paths: usize,
    pub pdp_alpha: f64,
    pub k_max: i64,
    pub l_max: usize,
    pub fractional: bool,
    /// Draw the delays of paths 2..P without replacement.
    pub distinct_delays: bool,
}

impl ChannelSampler {
    pub fn validate(&self, grid: &OtfsGrid) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::invalid("P", "need at least one path"));
        }
        if self.l_max >= grid.m {
            return Err(Error::invalid(
                "l_max",
                format!("l_max = {} must be below M = {}", self.l_max, grid.m),
            ));
        }
        if self.k_max < 0 || 2 * self.k_max >= grid.n as i64 {
            return Err(Error::invalid(
                "k_max",
                format!("k_max = {} must satisfy 0 <= k_max < N/2 = {}", self.k_max, grid.n as f64 / 2.0),
            ));
        }
        if self.paths > 1 && self.l_max == 0 {
            return Err(Error::invalid("l_max", "paths beyond the first need l_max >= 1"));
        }
        if self.distinct_delays && self.paths - 1 > self.l_max {
            return Err(Error::invalid(
                "P",
                format!(
                    "{} distinct nonzero delays requested but l_max = {}",
                    self.paths - 1,
                    self.l_max
                ),
            ));
        }
        if !self.pdp_alpha.is_finite() {
            return Err(Error::invalid("pdp_alpha", "must be finite"));
        }
        Ok(())
    }

    /// Draws one realization. The first path has zero delay.
    pub fn sample<R: Rng + ?Sized>(&self, grid: &OtfsGrid, rng: &mut R) -> Result<DdChannel> {
        self.validate(grid)?;
        let mut delays = Vec::with_capacity(self.paths);
        delays.push(0usize);
        if self.distinct_delays {
            let mut pool: Vec<usize> = (1..=self.l_max).collect();
            for _ in 1..self.paths {
                let i = rng.random_range(0..pool.len());
                delays.push(pool.swap_remove(i));
            }
        } else {
            for _ in 1..self.paths {
                delays.push(rng.random_range(1..=self.l_max));
            }
        }
        let variances = power_delay_profile(&delays, self.pdp_alpha);
        let paths = delays
            .iter()
            .zip(&variances)
            .map(|(&l, &var)| {
                let k = rng.random_range(-self.k_max..=self.k_max);
                let kappa = if self.fractional {
                    rng.random_range(-0.5..=0.5)
                } else {
                    0.0
                };
                ChannelPath::new(complex_gaussian(rng, var), l, k, kappa)
            })
            .collect();
        DdChannel::new(*grid, paths)
    }

    pub fn sample_seeded(&self, grid: &OtfsGrid, seed: u64) -> Result<DdChannel> {
        let mut rng = crate::rng::substream(seed, &[], crate::rng::Stream::Channel);
        self.sample(grid, &mut rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler(paths: usize) -> ChannelSampler {
        ChannelSampler {
            paths,
            pdp_alpha: 0.0,
            k_max: 6,
            l_max: 14,
            fractional: true,
            distinct_delays: true,
        }
    }

    #[test]
    fn paper_numerology_gives_k_max_six() {
        let grid = OtfsGrid::new(256, 32, 2e3, 3e9).unwrap();
        assert_eq!(grid.max_doppler_index(135.0 / 3.6), 6);
        assert!((grid.doppler_resolution() - 62.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_profile_is_flat() {
        let p = power_delay_profile(&[0, 3, 7, 9], 0.0);
        for v in p {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn exponential_profile_matches_direct_formula() {
        let p = power_delay_profile(&[0, 1, 2], 0.1);
        let raw = [1.0, (-0.1f64).exp(), (-0.2f64).exp()];
        let s: f64 = raw.iter().sum();
        for (a, b) in p.iter().zip(raw) {
            assert!((a - b / s).abs() < 1e-15);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_respects_bounds_and_is_deterministic() {
        let grid = OtfsGrid::with_default_numerology(64, 16).unwrap();
        let s = sampler(14);
        let a = s.sample_seeded(&grid, 11).unwrap();
        let b = s.sample_seeded(&grid, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.paths()[0].delay_idx, 0);
        let mut delays: Vec<_> = a.paths().iter().map(|p| p.delay_idx).collect();
        delays.sort();
        delays.dedup();
        assert_eq!(delays.len(), 14);
        for p in a.paths() {
            assert!(p.delay_idx <= 14);
            assert!(p.doppler_idx.abs() <= 6);
            assert!(p.frac_doppler.abs() <= 0.5);
        }
        let c = s.sample_seeded(&grid, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_bounds_rejected() {
        let grid = OtfsGrid::with_default_numerology(16, 8).unwrap();
        let mut s = sampler(4);
        s.l_max = 16;
        assert!(s.sample_seeded(&grid, 0).is_err());
        let mut s = sampler(4);
        s.l_max = 10;
        s.k_max = 4;
        assert!(s.sample_seeded(&grid, 0).is_err());
        s.k_max = 3;
        assert!(s.sample_seeded(&grid, 0).is_ok());
        assert!(OtfsGrid::with_default_numerology(1, 8).is_err());
    }

    #[test]
    fn collisions_allowed_when_requested() {
        let grid = OtfsGrid::with_default_numerology(8, 4).unwrap();
        let s = ChannelSampler {
            paths: 6,
            pdp_alpha: 0.0,
            k_max: 1,
            l_max: 2,
            fractional: false,
            distinct_delays: false,
        };
        let ch = s.sample_seeded(&grid, 3).unwrap();
        assert_eq!(ch.paths().len(), 6);
        assert!(!ch.has_fractional_doppler());
        let mut strict = s;
        strict.distinct_delays = true;
        assert!(strict.sample_seeded(&grid, 3).is_err());
    }
}
