use core::f64::consts::PI;

use nalgebra::DMatrix;
use otfs_core::dd_channel::{RectSvdChannel, SparseChannelMatrix};
use otfs_core::modem::Constellation;

use crate::C64;

pub type Mat = DMatrix<C64>;

/// Unitary `n`-point DFT matrix, `F[a,b] = e^{-j2π ab/n}/√n`.
pub fn dft(n: usize) -> Mat {
    let s = 1.0 / (n as f64).sqrt();
    Mat::from_fn(n, n, |a, b| C64::from_polar(s, -2.0 * PI * (a * b) as f64 / n as f64))
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

/// `F_N ⊗ F_M`.
pub fn diag(d: &[C64]) -> Mat {
    Mat::from_diagonal(&nalgebra::DVector::from_column_slice(d))
}

pub fn dft2(m: usize, n: usize) -> Mat {
    kron(&dft(n), &dft(m))
}

pub fn from_sparse(h: &SparseChannelMatrix) -> Mat {
    let n = h.dim();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for (j, v) in h.row(i) {
            out[(i, j)] += v;
        }
    }
    out
}

pub fn block_diag(blocks: &[Mat]) -> Mat {
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(total, total);
    let mut o = 0;
    for b in blocks {
        out.view_mut((o, o), b.shape()).copy_from(b);
        o += b.nrows();
    }
    out
}

pub fn mul(a: &Mat, x: &[C64]) -> Vec<C64> {
    let v = a * nalgebra::DVector::from_column_slice(x);
    v.as_slice().to_vec()
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `(A, Q)` with `r = A x + noise`, `A = diag(d) Φ` and `r = Q y`, for the
/// rectangular waveform: `Φ = V (F_N^H ⊗ I_M)`, `Q = U^H (F_N^H ⊗ I_M)`.
pub fn rect_model(svd: &RectSvdChannel) -> (Mat, Mat, Vec<C64>) {
    let (m, n) = (svd.m(), svd.n());
    let fnh = kron(&dft(n).adjoint(), &eye(m));
    let v = block_diag(&(0..n).map(|b| svd.v(b).clone()).collect::<Vec<_>>());
    let u = block_diag(&(0..n).map(|b| svd.u(b).clone()).collect::<Vec<_>>());
    let d: Vec<C64> = svd.d().iter().map(|&x| C64::new(x, 0.0)).collect();
    (&v * &fnh, u.adjoint() * &fnh, d)
}

/// Everything one UAMP iteration produces.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub p: Vec<C64>,
    pub z_hat: Vec<C64>,
    pub eps_hat: f64,
    pub q: Vec<C64>,
    pub nu_q: f64,
    pub x_hat: Vec<C64>,
    pub nu_x: f64,
}

/// Textbook UAMP on `r = diag(d) Φ x + ω` with `Φ` an explicit matrix.
pub fn dense_uamp(phi: &Mat, d: &[C64], r: &[C64], c: &Constellation, iters: usize) -> Vec<Iterate> {
    let n = r.len();
    let a = Mat::from_diagonal(&nalgebra::DVector::from_column_slice(d)) * phi;
    let ah = a.adjoint();
    let lambda: Vec<f64> = d.iter().map(|v| v.norm_sqr()).collect();
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut s = vec![C64::new(0.0, 0.0); n];
    let mut nu_x = 1.0;
    let mut eps = 1.0;
    let mut out = Vec::new();
    for _ in 0..iters {
        let nu_p: Vec<f64> = lambda.iter().map(|l| (l * nu_x).max(1e-15)).collect();
        let ax = mul(&a, &x);
        let p: Vec<C64> = (0..n).map(|j| ax[j] - s[j] * nu_p[j]).collect();
        let nu_z: Vec<f64> = (0..n).map(|j| 1.0 / (1.0 / nu_p[j] + eps)).collect();
        let z: Vec<C64> = (0..n).map(|j| nu_z[j] * (p[j] / nu_p[j] + r[j] * eps)).collect();
        let resid: f64 = (0..n).map(|j| (r[j] - z[j]).norm_sqr()).sum::<f64>() + nu_z.iter().sum::<f64>();
        eps = n as f64 / resid.max(1e-12);
        let nu_s: Vec<f64> = (0..n).map(|j| (1.0 / (nu_p[j] + 1.0 / eps)).max(1e-15)).collect();
        s = (0..n).map(|j| nu_s[j] * (r[j] - p[j])).collect();
        let nu_q = (n as f64 / (0..n).map(|j| lambda[j] * nu_s[j]).sum::<f64>()).max(1e-15);
        let back = mul(&ah, &s);
        let q: Vec<C64> = (0..n).map(|j| x[j] + back[j] * nu_q).collect();
        let (mean, var) = naive_posterior(&q, nu_q, c);
        x = mean;
        nu_x = var.iter().sum::<f64>() / n as f64;
        out.push(Iterate {
            p,
            z_hat: z,
            eps_hat: eps,
            q,
            nu_q,
            x_hat: x.clone(),
            nu_x,
        });
    }
    out
}

/// Uniform-prior posterior mean/variance evaluated directly.
pub fn naive_posterior(q: &[C64], nu: f64, c: &Constellation) -> (Vec<C64>, Vec<f64>) {
    let pts = c.points();
    let mut mean = Vec::with_capacity(q.len());
    let mut var = Vec::with_capacity(q.len());
    for &qj in q {
        let dmin = pts.iter().map(|a| (a - qj).norm_sqr()).fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = pts.iter().map(|a| (-((a - qj).norm_sqr() - dmin) / nu).exp()).collect();
        let z: f64 = w.iter().sum();
        let m: C64 = pts.iter().zip(&w).map(|(a, wi)| a * (wi / z)).sum();
        let v: f64 = pts.iter().zip(&w).map(|(a, wi)| (a - m).norm_sqr() * wi / z).sum();
        mean.push(m);
        var.push(v);
    }
    (mean, var)
}

/// Largest entry-wise deviation relative to the reference vector's scale.
pub fn rel_err(got: &[C64], want: &[C64]) -> f64 {
    let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale
}
