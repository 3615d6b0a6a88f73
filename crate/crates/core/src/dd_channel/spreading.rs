use core::f64::consts::PI;

use super::{ChannelPath, OtfsGrid};
use crate::{Error, Result, C64};

const SINGULAR_TOL: f64 = 1e-12;

/// Doppler spreading coefficient `g(c, κ_i)` of `path` onto Doppler offset `c`:
///
/// `(1/N) (1 - e^{-j2π(-c-κ)}) / (1 - e^{-j2π(-c-κ)/N}) · e^{-j2π l (k+κ)/(MN)}`.
///
/// The ratio is `N`-periodic in `c`. At `-c-κ ≡ 0 (mod N)` the removable
/// singularity takes its limit `N`; at other integers the numerator vanishes
/// and the coefficient is exactly zero.
pub fn spreading_coeff(c: i64, path: &ChannelPath, grid: &OtfsGrid) -> Result<C64> {
    let n = grid.n as i64;
    if c <= -n || c >= n {
        return Err(Error::invalid("c", format!("need -N < c < N, got {c}")));
    }
    let n_f = grid.n as f64;
    let a = -(c as f64) - path.frac_doppler;
    let ratio = if (a / n_f - (a / n_f).round()).abs() < SINGULAR_TOL {
        C64::new(1.0, 0.0)
    } else if (a - a.round()).abs() < SINGULAR_TOL {
        C64::new(0.0, 0.0)
    } else {
        let num = C64::new(1.0, 0.0) - C64::from_polar(1.0, -2.0 * PI * a);
        let den = C64::new(1.0, 0.0) - C64::from_polar(1.0, -2.0 * PI * a / n_f);
        num / den / n_f
    };
    let phase = -2.0 * PI * path.delay_idx as f64 * path.doppler() / grid.len() as f64;
    Ok(ratio * C64::from_polar(1.0, phase))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize, n: usize) -> OtfsGrid {
        OtfsGrid::with_default_numerology(m, n).unwrap()
    }

    #[test]
    fn zero_offset_integer_doppler_is_unity() {
        let p = ChannelPath::new(C64::new(1.0, 0.0), 0, 3, 0.0);
        let g = spreading_coeff(0, &p, &grid(4, 8)).unwrap();
        assert!((g - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn integer_doppler_has_no_leakage() {
        let p = ChannelPath::new(C64::new(1.0, 0.0), 2, 1, 0.0);
        for c in -7..8 {
            let g = spreading_coeff(c, &p, &grid(4, 8)).unwrap();
            if c == 0 {
                assert!((g.norm() - 1.0).abs() < 1e-15);
            } else {
                assert_eq!(g, C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn period_sums_to_unit_energy() {
        let p = ChannelPath::new(C64::new(1.0, 0.0), 1, 0, 0.37);
        let g = grid(4, 16);
        let e: f64 = (-8..8)
            .map(|c| spreading_coeff(c, &p, &g).unwrap().norm_sqr())
            .sum();
        assert!((e - 1.0).abs() < 1e-13);
    }

    #[test]
    fn out_of_range_offset_rejected() {
        let p = ChannelPath::new(C64::new(1.0, 0.0), 0, 0, 0.1);
        assert!(spreading_coeff(3, &p, &grid(4, 3)).is_err());
        assert!(spreading_coeff(-3, &p, &grid(4, 3)).is_err());
    }
}
