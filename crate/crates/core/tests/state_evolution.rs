use otfs_core::coding::CodeSpec;
use otfs_core::modem::Constellation;
use otfs_core::state_evolution::{build_g_table, se_predict, GTableBudget};

fn budget(trials: u64) -> GTableBudget {
    GTableBudget { min_trials: trials, max_trials: trials, target_errors: u64::MAX }
}

#[test]
fn table_limits() {
    let c = Constellation::qpsk();
    let t = build_g_table(&CodeSpec::default(), &c, 128, &[1e-3, 1e3], &budget(20), 1).unwrap();
    let (lo, hi) = (t.rows()[0], t.rows()[1]);
    assert_eq!(lo.ber, 0.0);
    assert!(lo.v_x < 1e-12);
    assert!((hi.ber - 0.5).abs() < 0.05, "{}", hi.ber);
    assert!((hi.v_x - 1.0).abs() < 0.01, "{}", hi.v_x);
}

#[test]
fn mid_point_is_reproducible_across_seeds() {
    let c = Constellation::qpsk();
    let spec = CodeSpec::default();
    let a = build_g_table(&spec, &c, 256, &[0.5], &budget(200), 11).unwrap().rows()[0];
    let b = build_g_table(&spec, &c, 256, &[0.5], &budget(200), 12).unwrap().rows()[0];
    let bits = (a.trials * 254) as f64;
    let p = 0.5 * (a.ber + b.ber);
    let sigma = (2.0 * p * (1.0 - p) / bits).sqrt();
    // Errors within a frame are bursty; allow for that with a 3x widening.
    assert!((a.ber - b.ber).abs() <= 2.0 * 3.0 * sigma, "{} vs {}", a.ber, b.ber);
    assert!((a.v_x - b.v_x).abs() < 0.1 * a.v_x.max(b.v_x));
}

#[test]
fn prediction_is_monotone_and_settles() {
    let c = Constellation::qpsk();
    let grid: Vec<f64> = otfs_core::state_evolution::geometric_grid(0.05, 5.0, 12);
    let t = build_g_table(&CodeSpec::default(), &c, 128, &grid, &budget(30), 2).unwrap().regularized();
    let lambda: Vec<f64> = (0..256).map(|j| 0.2 + (j % 7) as f64 * 0.3).collect();
    let p = se_predict(&lambda, 10f64.powf(0.5), &t, 15).unwrap();
    for w in p.tau.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
    assert_eq!(p.ber[13], p.ber[14]);
    let eps = 10f64.powf(-1.5);
    let p = se_predict(&lambda, eps, &t, 3).unwrap();
    assert!(p.clamped > 0);
}

#[test]
fn regularized_table_is_monotone() {
    let c = Constellation::qpsk();
    let grid: Vec<f64> = otfs_core::state_evolution::geometric_grid(0.05, 5.0, 10);
    let t = build_g_table(&CodeSpec::default(), &c, 64, &grid, &budget(5), 3).unwrap().regularized();
    for w in t.rows().windows(2) {
        assert!(w[1].ber >= w[0].ber && w[1].v_x >= w[0].v_x);
    }
}
