use otfs_core::modem::Constellation;

use crate::dense::{mul, Mat};

/// Exhaustive ML (= MAP under uniform priors) symbol-vector search.
pub fn brute_force_map(h: &Mat, y: &[crate::C64], c: &Constellation) -> Vec<usize> {
    let n = y.len();
    let order = c.order();
    let total = order.pow(n as u32);
    let mut best = (f64::INFINITY, 0usize);
    let mut x = vec![crate::C64::new(0.0, 0.0); n];
    for code in 0..total {
        let mut k = code;
        for xi in x.iter_mut() {
            *xi = c.points()[k % order];
            k /= order;
        }
        let hx = mul(h, &x);
        let d: f64 = hx.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum();
        if d < best.0 {
            best = (d, code);
        }
    }
    let mut k = best.1;
    (0..n)
        .map(|_| {
            let a = k % order;
            k /= order;
            a
        })
        .collect()
}
