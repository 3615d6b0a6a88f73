use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SVD};

use super::DdChannel;
use crate::{Error, Result, C64};

/// Block-diagonal time-domain channel `H_T = diag(H_1, ..., H_N)` of the
/// rectangular waveform with a cyclic prefix on every length-`M` sub-block.
#[derive(Debug, Clone, PartialEq)]
pub struct RectBlocks {
    m: usize,
    blocks: Vec<DMatrix<C64>>,
}

impl RectBlocks {
    pub fn from_blocks(blocks: Vec<DMatrix<C64>>) -> Result<Self> {
        let m = blocks.first().map(|b| b.nrows()).unwrap_or(0);
        if m == 0 {
            return Err(Error::invalid("blocks", "need at least one non-empty block"));
        }
        if blocks.iter().any(|b| b.nrows() != m || b.ncols() != m) {
            return Err(Error::invalid("blocks", "all blocks must be M x M"));
        }
        Ok(Self { m, blocks })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, n: usize) -> &DMatrix<C64> {
        &self.blocks[n]
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    /// `H_T s` for a time-domain frame `s` of length `MN`.
    pub fn apply(&self, s: &[C64]) -> Vec<C64> {
        apply_blockwise(&self.blocks, s, false)
    }
}

/// Multiplies `x` by the block-diagonal matrix `diag(blocks)`, or by its
/// conjugate transpose.
fn apply_blockwise(blocks: &[DMatrix<C64>], x: &[C64], adjoint: bool) -> Vec<C64> {
    let m = blocks[0].nrows();
    assert_eq!(x.len(), m * blocks.len());
    let mut out = Vec::with_capacity(x.len());
    for (b, chunk) in blocks.iter().zip(x.chunks_exact(m)) {
        let v = DVector::from_column_slice(chunk);
        let y = if adjoint { b.ad_mul(&v) } else { b * v };
        out.extend(y.iter());
    }
    out
}

/// Time-domain blocks of the rectangular-waveform channel:
/// `H_n[p, [p - l_i]_M] += h_i e^{j2π (k_i + κ_i)(nM + p - l_i)/(MN)}`.
///
/// The Doppler phase runs on the global sample index so it stays continuous
/// across sub-blocks; the CP makes each delay a cyclic shift inside a block.
pub fn build_rect_blocks(channel: &DdChannel) -> RectBlocks {
    let grid = channel.grid();
    let (m, n) = (grid.m, grid.n);
    let mn = (m * n) as f64;
    let blocks = (0..n)
        .map(|blk| {
            let mut h = DMatrix::<C64>::zeros(m, m);
            for path in channel.paths() {
                let l = path.delay_idx;
                for p in 0..m {
                    let t = (blk * m + p) as f64 - l as f64;
                    let phase = 2.0 * PI * path.doppler() * t / mn;
                    h[(p, (p + m - l) % m)] += path.gain * C64::from_polar(1.0, phase);
                }
            }
            h
        })
        .collect();
    RectBlocks { m, blocks }
}

/// Per-block SVD `H_n = U_n Λ_n V_n` (here `V_n` is the conjugate transpose
/// of the usual right singular vectors).
#[derive(Debug, Clone)]
pub struct RectSvdChannel {
    u: Vec<DMatrix<C64>>,
    v: Vec<DMatrix<C64>>,
    d: Vec<f64>,
    lambda: Vec<f64>,
}

impl RectSvdChannel {
    pub fn m(&self) -> usize {
        self.u[0].nrows()
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Stacked singular values, block `n` at `n*M .. (n+1)*M`, descending
    /// within each block.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// `λ = d^2`.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn u(&self, n: usize) -> &DMatrix<C64> {
        &self.u[n]
    }

    pub fn v(&self, n: usize) -> &DMatrix<C64> {
        &self.v[n]
    }

    pub fn apply_u(&self, x: &[C64]) -> Vec<C64> {
        apply_blockwise(&self.u, x, false)
    }

    pub fn apply_u_adjoint(&self, x: &[C64]) -> Vec<C64> {
        apply_blockwise(&self.u, x, true)
    }

    pub fn apply_v(&self, x: &[C64]) -> Vec<C64> {
        apply_blockwise(&self.v, x, false)
    }

    pub fn apply_v_adjoint(&self, x: &[C64]) -> Vec<C64> {
        apply_blockwise(&self.v, x, true)
    }
}

const SVD_MAX_ITER: usize = 100_000;

/// Block-by-block SVD of `H_T`.
pub fn rect_block_svd(blocks: &RectBlocks) -> Result<RectSvdChannel> {
    let m = blocks.m();
    let mut u = Vec::with_capacity(blocks.n());
    let mut v = Vec::with_capacity(blocks.n());
    let mut d = Vec::with_capacity(m * blocks.n());
    for (i, b) in blocks.blocks().iter().enumerate() {
        let svd = SVD::try_new(b.clone(), true, true, f64::EPSILON, SVD_MAX_ITER)
            .ok_or(Error::SvdNotConverged { block: i })?;
        let (Some(ub), Some(vt)) = (svd.u, svd.v_t) else {
            return Err(Error::SvdNotConverged { block: i });
        };
        d.extend(svd.singular_values.iter().copied());
        u.push(ub);
        v.push(vt);
    }
    let lambda = d.iter().map(|s| s * s).collect();
    Ok(RectSvdChannel { u, v, d, lambda })
}

#[cfg(test)]
mod tests {
    use super::super::{ChannelPath, OtfsGrid};
    use super::*;

    fn grid(m: usize, n: usize) -> OtfsGrid {
        OtfsGrid::with_default_numerology(m, n).unwrap()
    }

    #[test]
    fn identity_channel_gives_identity_blocks() {
        let b = build_rect_blocks(&DdChannel::identity(grid(5, 3)));
        assert_eq!(b.n(), 3);
        for blk in b.blocks() {
            assert_eq!(blk, &DMatrix::<C64>::identity(5, 5));
        }
        let svd = rect_block_svd(&b).unwrap();
        assert!(svd.d().iter().all(|&s| (s - 1.0).abs() < 1e-14));
    }

    #[test]
    fn pure_delay_gives_cyclic_shift() {
        let ch = DdChannel::new(grid(4, 2), vec![ChannelPath::new(C64::new(1.0, 0.0), 1, 0, 0.0)]).unwrap();
        let b = build_rect_blocks(&ch);
        for blk in b.blocks() {
            for p in 0..4 {
                for q in 0..4 {
                    let want = if q == (p + 3) % 4 { 1.0 } else { 0.0 };
                    assert_eq!(blk[(p, q)], C64::new(want, 0.0));
                }
            }
        }
        let svd = rect_block_svd(&b).unwrap();
        assert!(svd.d().iter().all(|&s| (s - 1.0).abs() < 1e-13));
    }

    #[test]
    fn factors_reconstruct_blocks() {
        let ch = DdChannel::new(
            grid(6, 4),
            vec![
                ChannelPath::new(C64::new(0.8, 0.1), 0, 1, 0.2),
                ChannelPath::new(C64::new(-0.3, 0.5), 2, -1, -0.4),
            ],
        )
        .unwrap();
        let b = build_rect_blocks(&ch);
        let svd = rect_block_svd(&b).unwrap();
        for n in 0..4 {
            let s = DMatrix::from_diagonal(&DVector::from_iterator(
                6,
                svd.d()[n * 6..(n + 1) * 6].iter().map(|&x| C64::new(x, 0.0)),
            ));
            let rec = svd.u(n) * s * svd.v(n);
            let err = (&rec - b.block(n)).norm();
            assert!(err <= 1e-10 * b.block(n).norm(), "block {n}: {err}");
            let w = &svd.d()[n * 6..(n + 1) * 6];
            assert!(w.windows(2).all(|p| p[0] >= p[1]) && w[5] >= 0.0);
        }
    }

    #[test]
    fn ragged_blocks_rejected() {
        let blocks = vec![DMatrix::<C64>::identity(3, 3), DMatrix::<C64>::identity(2, 2)];
        assert!(RectBlocks::from_blocks(blocks).is_err());
    }
}
