use otfs_core::dd_channel::{
    simulate_rx, ChannelOperator, ChannelPath, ChannelSampler, DdChannel, LinkModel, OtfsGrid,
    SparseChannelMatrix, Waveform,
};
use otfs_core::detectors::{
    amp_detect, run_detector, BccbModel, Detector, DetectorOptions, RectModel, SymbolPriors,
    UampDetector, UnitaryModel,
};
use otfs_core::modem::{hard_decision, Constellation};
use otfs_core::rng::{complex_gaussian, substream, Stream};
use otfs_core::C64;
use otfs_testkit::dense::{dense_uamp, dft2, from_sparse, naive_posterior, rect_model, rel_err};
use otfs_testkit::map::brute_force_map;
use rand::Rng;

fn random_frame(len: usize, c: &Constellation, seed: u64) -> (Vec<usize>, Vec<C64>) {
    let mut rng = substream(seed, &[], Stream::Data);
    let idx: Vec<usize> = (0..len).map(|_| rng.random_range(0..c.order())).collect();
    let x = idx.iter().map(|&a| c.points()[a]).collect();
    (idx, x)
}

fn check_against_dense<M: UnitaryModel>(
    model: M,
    r: &[C64],
    reference: &[otfs_testkit::dense::Iterate],
    c: &Constellation,
) {
    let mut det = UampDetector::new(model, r, c.clone(), &DetectorOptions::default()).unwrap();
    let priors = SymbolPriors::uniform(r.len(), c.order());
    for (t, want) in reference.iter().enumerate() {
        let obs = det.observe().unwrap();
        assert!(rel_err(det.last_p(), &want.p) < 1e-9, "p at {t}");
        assert!(rel_err(det.last_z_hat(), &want.z_hat) < 1e-9, "z at {t}");
        assert!((det.eps_hat() / want.eps_hat - 1.0).abs() < 1e-9, "eps at {t}");
        assert!(rel_err(&obs.q, &want.q) < 1e-9, "q at {t}");
        det.update(&obs, &priors).unwrap();
        assert!(rel_err(det.x_hat(), &want.x_hat) < 1e-9, "x at {t}");
    }
}

#[test]
fn uamp_matches_dense_reference_on_toy_channel() {
    let grid = OtfsGrid::with_default_numerology(4, 3).unwrap();
    let paths = vec![
        ChannelPath::new(C64::new(0.7, 0.2), 0, 1, -0.1),
        ChannelPath::new(C64::new(-0.4, 0.3), 1, 3, 0.1),
        ChannelPath::new(C64::new(0.1, -0.5), 2, 4, 0.2),
    ];
    let link = LinkModel::new(DdChannel::new(grid, paths).unwrap(), Waveform::Biorthogonal, 1).unwrap();
    let c = Constellation::qpsk();
    let (_, x) = random_frame(12, &c, 3);
    let eps = 10f64.powf(2.5);
    let rx = simulate_rx(&link, &x, eps, &mut substream(3, &[], Stream::Noise)).unwrap();
    let ChannelOperator::Spectral(spec) = link.unitary() else { unreachable!() };
    let f = dft2(4, 3);
    let r_dense = otfs_testkit::dense::mul(&f, &rx.y);
    let reference = dense_uamp(&f, spec.d(), &r_dense, &c, 15);
    check_against_dense(BccbModel(spec), &link.transform(&rx.y), &reference, &c);
}

#[test]
fn rect_uamp_matches_dense_reference() {
    let grid = OtfsGrid::with_default_numerology(16, 8).unwrap();
    let s = ChannelSampler {
        paths: 4,
        pdp_alpha: 0.1,
        k_max: 3,
        l_max: 6,
        fractional: true,
        distinct_delays: true,
    };
    let c = Constellation::qpsk();
    for seed in 0..2 {
        let ch = s.sample_seeded(&grid, seed).unwrap();
        let link = LinkModel::new(ch, Waveform::Rectangular, 0).unwrap();
        let (_, x) = random_frame(grid.len(), &c, seed);
        let rx = simulate_rx(&link, &x, 10f64.powf(2.5), &mut substream(seed, &[], Stream::Noise)).unwrap();
        let ChannelOperator::RectSvd(svd) = link.unitary() else { unreachable!() };
        let (phi, q, d) = rect_model(svd);
        let r_dense = otfs_testkit::dense::mul(&q, &rx.y);
        assert!(rel_err(&link.transform(&rx.y), &r_dense) < 1e-10);
        let reference = dense_uamp(&phi, &d, &r_dense, &c, 15);
        check_against_dense(RectModel::new(svd), &r_dense, &reference, &c);
    }
}

#[test]
fn noise_free_limit_recovers_frames() {
    let grid = OtfsGrid::with_default_numerology(16, 8).unwrap();
    let c = Constellation::qam16();
    let s = ChannelSampler {
        paths: 5,
        pdp_alpha: 0.0,
        k_max: 3,
        l_max: 6,
        fractional: true,
        distinct_delays: true,
    };
    let opts = DetectorOptions {
        known_noise_precision: Some(1e12),
        ..Default::default()
    };
    for seed in 0..5 {
        let ch = s.sample_seeded(&grid, seed).unwrap();
        let link = LinkModel::new(ch, Waveform::Biorthogonal, 4).unwrap();
        assert!(link.lambda().iter().cloned().fold(f64::INFINITY, f64::min) > 0.0);
        let (idx, x) = random_frame(grid.len(), &c, seed);
        let y = link.apply(&x).unwrap();
        let ChannelOperator::Spectral(spec) = link.unitary() else { unreachable!() };
        let mut det = UampDetector::new(BccbModel(spec), &link.transform(&y), c.clone(), &opts).unwrap();
        run_detector(&mut det, &SymbolPriors::uniform(grid.len(), 16), &opts).unwrap();
        assert_eq!(hard_decision(det.x_hat(), &c), idx, "seed {seed}");
    }
}

#[test]
fn amp_on_identity_converges_in_one_iteration() {
    let n = 16;
    let h = SparseChannelMatrix::from_triplets(n, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect());
    let c = Constellation::qpsk();
    let (idx, x) = random_frame(n, &c, 1);
    let opts = DetectorOptions {
        max_iter: 4,
        ..Default::default()
    };
    let recs = amp_detect(&h, &x, 1e12, &SymbolPriors::uniform(n, 4), &c, &opts).unwrap();
    assert_eq!(hard_decision(&recs[0].posterior.mean, &c), idx);
    assert!(recs[3].posterior.mean_var() < 1e-12);
}

#[test]
fn uamp_and_amp_agree_with_map_on_tiny_frames() {
    let grid = OtfsGrid::with_default_numerology(4, 2).unwrap();
    let c = Constellation::qpsk();
    let s = ChannelSampler {
        paths: 2,
        pdp_alpha: 0.0,
        k_max: 0,
        l_max: 3,
        fractional: false,
        distinct_delays: true,
    };
    let eps = 100.0;
    let (mut ua, mut aa) = (0, 0);
    let trials = 20;
    for t in 0..trials {
        let ch = s.sample_seeded(&grid, t).unwrap();
        let link = LinkModel::new(ch, Waveform::Biorthogonal, 0).unwrap();
        let (_, x) = random_frame(8, &c, t);
        let rx = simulate_rx(&link, &x, eps, &mut substream(t, &[], Stream::Noise)).unwrap();
        let map = brute_force_map(&from_sparse(link.sparse()), &rx.y, &c);
        let ChannelOperator::Spectral(spec) = link.unitary() else { unreachable!() };
        let pri = SymbolPriors::uniform(8, 4);
        let opts = DetectorOptions::default();
        let u = otfs_core::detectors::uamp_detect(spec, &link.transform(&rx.y), &pri, &c, &opts).unwrap();
        ua += usize::from(hard_decision(&u.last().unwrap().posterior.mean, &c) == map);
        let a = amp_detect(link.sparse(), &rx.y, eps, &pri, &c, &opts).unwrap();
        aa += usize::from(hard_decision(&a.last().unwrap().posterior.mean, &c) == map);
    }
    assert!(ua >= 19, "uamp {ua}/{trials}");
    assert!(aa >= 18, "amp {aa}/{trials}");
}

/// QPSK MMSE at complex noise variance `tau`, by quadrature over one
/// real BPSK dimension.
fn qpsk_mmse(tau: f64) -> f64 {
    let a = core::f64::consts::FRAC_1_SQRT_2;
    let s2 = tau / 2.0;
    let sd = s2.sqrt();
    let steps = 4000;
    let (lo, hi) = (-10.0, 10.0);
    let h = (hi - lo) / steps as f64;
    let mut acc = 0.0;
    for i in 0..=steps {
        let z: f64 = lo + h * i as f64;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let pdf = (-0.5 * z * z).exp() / (2.0 * core::f64::consts::PI).sqrt();
        acc += w * pdf * (a * (a + sd * z) / s2).tanh();
    }
    2.0 * a * a * (1.0 - acc * h)
}

/// Mean per-iteration MSE of AMP on `n x n` i.i.d. CN(0, 1/n) matrices,
/// QPSK, 10 dB, next to the scalar recursion `τ = 1/ε + v`, `v = mmse(τ)`.
fn amp_vs_se(n: usize, trials: u64, iters: usize) -> Vec<(f64, f64)> {
    let c = Constellation::qpsk();
    let eps = 10.0;
    let mut mse = vec![0.0; iters];
    for t in 0..trials {
        let mut rng = substream(99, &[n as u64, t], Stream::Channel);
        let mut trip = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                trip.push((i, j, complex_gaussian(&mut rng, 1.0 / n as f64)));
            }
        }
        let h = SparseChannelMatrix::from_triplets(n, trip);
        let (_, x) = random_frame(n, &c, 1000 + t);
        let mut noise = substream(99, &[n as u64, t], Stream::Noise);
        let y: Vec<C64> = h.matvec(&x).into_iter().map(|v| v + complex_gaussian(&mut noise, 1.0 / eps)).collect();
        let opts = DetectorOptions {
            max_iter: iters,
            ..Default::default()
        };
        let recs = amp_detect(&h, &y, eps, &SymbolPriors::uniform(n, 4), &c, &opts).unwrap();
        for (i, r) in recs.iter().enumerate() {
            mse[i] += r.posterior.mean.iter().zip(&x).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / n as f64;
        }
    }
    let mut v = 1.0;
    mse.iter()
        .map(|m| {
            v = qpsk_mmse(1.0 / eps + v);
            (m / trials as f64, v)
        })
        .collect()
}

#[test]
fn amp_tracks_state_evolution_on_iid_gaussian_matrix() {
    for (i, (emp, se)) in amp_vs_se(1024, 20, 5).into_iter().enumerate() {
        assert!((emp / se - 1.0).abs() < 0.2, "n=1024 iter {i}: {emp:.4e} vs {se:.4e}");
    }
    // At n = 64 the fifth iterate drifts from the large-system limit; the
    // first four still sit within 20%.
    for (i, (emp, se)) in amp_vs_se(64, 300, 4).into_iter().enumerate() {
        assert!((emp / se - 1.0).abs() < 0.2, "n=64 iter {i}: {emp:.4e} vs {se:.4e}");
    }
}

#[test]
fn naive_posterior_agrees_with_library() {
    let c = Constellation::qam16();
    let q = vec![C64::new(0.2, -0.9), C64::new(1.4, 0.3)];
    let (m, v) = naive_posterior(&q, 0.07, &c);
    let obs = otfs_core::detectors::PseudoObservation {
        q,
        nu_q: otfs_core::detectors::Variance::Shared(0.07),
    };
    let post = otfs_core::detectors::discrete_posterior(&obs, &SymbolPriors::uniform(2, 16), &c).unwrap();
    assert!(rel_err(&post.mean, &m) < 1e-12);
    assert!((post.var[0] - v[0]).abs() < 1e-12 && (post.var[1] - v[1]).abs() < 1e-12);
}
