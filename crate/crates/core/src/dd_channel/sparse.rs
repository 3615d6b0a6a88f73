use core::f64::consts::PI;

use super::{spreading_coeff, DdChannel, RectBlocks};
use crate::{Error, Result, C64};

/// Entries below this magnitude are dropped when the rectangular DD matrix
/// is materialized.
const RECT_PRUNE: f64 = 1e-15;

/// Compressed-row sparse `MN x MN` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseChannelMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseChannelMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates add up and
    /// exact zeros are dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != C64::new(0.0, 0.0) {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map(|(_, v)| v)
            .unwrap_or_default()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::default(); self.dim * self.dim];
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                out[i * self.dim + j] = v;
            }
        }
        out
    }

    /// `H x`.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `H^H x`.
    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim);
        let mut out = vec![C64::default(); self.dim];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                out[j] += v.conj() * xi;
            }
        }
        out
    }

    /// `|H|^2 v` with the squared magnitude taken element-wise.
    pub fn abs2_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).map(|(j, h)| h.norm_sqr() * v[j]).sum())
            .collect()
    }

    /// `|H^H|^2 v`.
    pub fn abs2_adjoint_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for (i, &vi) in v.iter().enumerate() {
            for (j, h) in self.row(i) {
                out[j] += h.norm_sqr() * vi;
            }
        }
        out
    }
}

/// Range of Doppler offsets `c` summed for truncation `trunc`; clipped to one
/// period of `N` so no block is counted twice.
fn offset_range(trunc: usize, n: usize) -> core::ops::RangeInclusive<i64> {
    let lo = -(trunc as i64);
    let hi = (trunc as i64).min(lo + n as i64 - 1);
    lo..=hi
}

/// Bi-orthogonal-waveform DD matrix
/// `H = Σ_i Σ_c I_N([k_i - c]_N) ⊗ [I_M(l_i) h_i g(c, κ_i)]`.
///
/// `trunc` is the one-sided Doppler spread `N_i`; `N/2` covers every bin.
pub fn build_h_biorth(channel: &DdChannel, trunc: usize) -> Result<SparseChannelMatrix> {
    let grid = channel.grid();
    let (m, n) = (grid.m, grid.n);
    if trunc >= n {
        return Err(Error::invalid(
            "trunc_Ni",
            format!("must be below N = {n}, got {trunc}"),
        ));
    }
    let mut trip = Vec::new();
    for path in channel.paths() {
        for c in offset_range(trunc, n) {
            let g = spreading_coeff(c, path, grid)?;
            if g == C64::new(0.0, 0.0) {
                continue;
            }
            let shift = (path.doppler_idx - c).rem_euclid(n as i64) as usize;
            push_shift(&mut trip, m, n, shift, path.delay_idx, path.gain * g);
        }
    }
    Ok(SparseChannelMatrix::from_triplets(m * n, trip))
}

/// Integer-Doppler DD matrix `H = Σ_i I_N(k_i) ⊗ [I_M(l_i) h_i e^{-j2π l_i k_i/(MN)}]`.
pub fn build_h_integer(channel: &DdChannel) -> Result<SparseChannelMatrix> {
    let grid = channel.grid();
    let (m, n) = (grid.m, grid.n);
    let mut trip = Vec::new();
    for path in channel.paths() {
        if path.frac_doppler != 0.0 {
            return Err(Error::invalid(
                "frac_doppler",
                "integer-Doppler construction needs every κ_i = 0",
            ));
        }
        let phase = -2.0 * PI * (path.delay_idx as f64) * (path.doppler_idx as f64) / (m * n) as f64;
        let shift = path.doppler_idx.rem_euclid(n as i64) as usize;
        push_shift(
            &mut trip,
            m,
            n,
            shift,
            path.delay_idx,
            path.gain * C64::from_polar(1.0, phase),
        );
    }
    Ok(SparseChannelMatrix::from_triplets(m * n, trip))
}

/// Adds `value · (I_N(k_shift) ⊗ I_M(l_shift))`: column `(k, l)` lands on row
/// `([k + k_shift]_N, [l + l_shift]_M)`.
fn push_shift(
    trip: &mut Vec<(usize, usize, C64)>,
    m: usize,
    n: usize,
    k_shift: usize,
    l_shift: usize,
    value: C64,
) {
    for k in 0..n {
        let row_k = (k + k_shift) % n;
        for l in 0..m {
            let row_l = (l + l_shift) % m;
            trip.push((row_k * m + row_l, k * m + l, value));
        }
    }
}

/// Effective DD matrix of the rectangular waveform,
/// `(F_N ⊗ I_M) H_T (F_N^H ⊗ I_M)`, materialized for the AMP detector.
///
/// Entry `((k,l), (k',l'))` equals `(1/N) Σ_n H_n[l,l'] e^{-j2π n (k-k')/N}`,
/// so each delay pair `(l, l')` contributes a circulant Doppler block.
pub fn rect_dd_matrix(blocks: &RectBlocks) -> SparseChannelMatrix {
    let (m, n) = (blocks.m(), blocks.n());
    let mut trip = Vec::new();
    let mut profile = vec![C64::default(); n];
    for l in 0..m {
        for lp in 0..m {
            let mut any = false;
            for (t, p) in profile.iter_mut().enumerate() {
                *p = blocks.block(t)[(l, lp)];
                any |= *p != C64::new(0.0, 0.0);
            }
            if !any {
                continue;
            }
            // spectrum[d] = (1/N) Σ_n a_n e^{-j2π n d / N}
            let spectrum: Vec<C64> = (0..n)
                .map(|d| {
                    profile
                        .iter()
                        .enumerate()
                        .map(|(t, &a)| a * C64::from_polar(1.0, -2.0 * PI * (t * d) as f64 / n as f64))
                        .sum::<C64>()
                        / n as f64
                })
                .collect();
            for k in 0..n {
                for kp in 0..n {
                    let v = spectrum[(k + n - kp) % n];
                    if v.norm() > RECT_PRUNE {
                        trip.push((k * m + l, kp * m + lp, v));
                    }
                }
            }
        }
    }
    SparseChannelMatrix::from_triplets(m * n, trip)
}
