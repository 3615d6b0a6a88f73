//! Gray-labelled constellations, DD-grid indexing and the ISFFT/SFFT pair.

use crate::fft2::Fft2;
use crate::{Error, Result, C64};

/// Supported symbol alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

/// Unit-energy constellation whose point `a` carries the label given by the
/// binary digits of `a`, most significant bit first.
///
/// QPSK: bits `(b0, b1)` map to `((1-2b0) + j(1-2b1))/√2`, so `00 -> (1+j)/√2`.
/// 16-QAM: `(b0, b1)` drive the real axis and `(b2, b3)` the imaginary axis,
/// each as `(1-2s)(1+2m)/√10`, i.e. levels `-3,-1,1,3` carry `11,10,00,01`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    points: Vec<C64>,
    bits: usize,
}

fn pam_level(sign: usize, mag: usize) -> f64 {
    (1.0 - 2.0 * sign as f64) * (1.0 + 2.0 * mag as f64)
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        match modulation {
            Modulation::Qpsk => {
                let s = core::f64::consts::FRAC_1_SQRT_2;
                let points = (0..4)
                    .map(|a| C64::new(s * pam_level(a >> 1, 0), s * pam_level(a & 1, 0)))
                    .collect();
                Self {
                    modulation,
                    points,
                    bits: 2,
                }
            }
            Modulation::Qam16 => {
                let s = 1.0 / 10f64.sqrt();
                let points = (0..16)
                    .map(|a| {
                        C64::new(
                            s * pam_level((a >> 3) & 1, (a >> 2) & 1),
                            s * pam_level((a >> 1) & 1, a & 1),
                        )
                    })
                    .collect();
                Self {
                    modulation,
                    points,
                    bits: 4,
                }
            }
        }
    }

    pub fn qpsk() -> Self {
        Self::new(Modulation::Qpsk)
    }

    pub fn qam16() -> Self {
        Self::new(Modulation::Qam16)
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// `log2 |A|`.
    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    /// Bit `q` (0 = most significant) of the label of point `a`.
    pub fn label_bit(&self, a: usize, q: usize) -> u8 {
        ((a >> (self.bits - 1 - q)) & 1) as u8
    }
}

/// Maps groups of `log2|A|` bits (MSB first) onto constellation points.
pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<C64>> {
    let q = c.bits_per_symbol();
    if bits.len() % q != 0 {
        return Err(Error::invalid(
            "bits",
            format!("length {} is not a multiple of {q}", bits.len()),
        ));
    }
    bits.chunks_exact(q)
        .map(|g| {
            let a = g.iter().try_fold(0usize, |acc, &b| match b {
                0 | 1 => Ok((acc << 1) | b as usize),
                _ => Err(Error::invalid("bits", format!("bit value {b} is not 0 or 1"))),
            })?;
            Ok(c.points[a])
        })
        .collect()
}

/// Nearest constellation point per entry; ties go to the lowest index.
pub fn hard_decision(x: &[C64], c: &Constellation) -> Vec<usize> {
    x.iter()
        .map(|&v| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (a, p) in c.points.iter().enumerate() {
                let d = (v - p).norm_sqr();
                if d < best_d {
                    best_d = d;
                    best = a;
                }
            }
            best
        })
        .collect()
}

/// Expands symbol indices into their label bits.
pub fn indices_to_bits(indices: &[usize], c: &Constellation) -> Vec<u8> {
    let q = c.bits_per_symbol();
    indices
        .iter()
        .flat_map(|&a| (0..q).map(move |i| ((a >> (q - 1 - i)) & 1) as u8))
        .collect()
}

/// Position of DD sample `(k, l)` in the frame vector.
pub fn dd_index(k: usize, l: usize, m: usize) -> usize {
    k * m + l
}

/// Inverse of [`dd_index`]: `(k, l)`.
pub fn dd_coords(j: usize, m: usize) -> (usize, usize) {
    (j / m, j % m)
}

/// ISFFT: DD grid to TF grid,
/// `X_tf[n,m] = (1/√MN) Σ_k Σ_l x[k,l] e^{j2π(nk/N - ml/M)}`.
/// Both grids use the slot-major layout `n*M + m`.
pub fn isfft(x_dd: &[C64], m: usize, n: usize) -> Result<Vec<C64>> {
    Error::check_len("DD grid", m * n, x_dd.len())?;
    let f = Fft2::new(m, n);
    let mut v = x_dd.to_vec();
    f.delay_forward(&mut v);
    f.doppler_inverse(&mut v);
    Ok(v)
}

/// SFFT: TF grid back to the DD grid (inverse of [`isfft`]).
pub fn sfft(x_tf: &[C64], m: usize, n: usize) -> Result<Vec<C64>> {
    Error::check_len("TF grid", m * n, x_tf.len())?;
    let f = Fft2::new(m, n);
    let mut v = x_tf.to_vec();
    f.delay_inverse(&mut v);
    f.doppler_forward(&mut v);
    Ok(v)
}
