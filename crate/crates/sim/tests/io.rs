use otfs_core::coding::CodeSpec;
use otfs_core::dd_channel::{LinkModel, Waveform};
use otfs_core::modem::Constellation;
use otfs_core::state_evolution::{build_g_table, geometric_grid, GTableBudget};
use otfs_sim::config::ExperimentConfig;
use otfs_sim::harness::{channel_for_trial, lambda_for_trial};
use otfs_sim::io::{read_channel, read_gtable, write_channel, write_gtable};

#[test]
fn dumped_channel_rebuilds_identical_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json("{}", &["P=8".into()]).unwrap();
    let path = dir.path().join("ch.json");
    for t in 0..5 {
        let ch = channel_for_trial(&cfg, t).unwrap();
        write_channel(&path, &ch).unwrap();
        let back = read_channel(&path).unwrap();
        assert_eq!(back, ch);
        for w in [Waveform::Biorthogonal, Waveform::Rectangular] {
            let a = LinkModel::new(ch.clone(), w, 8).unwrap();
            let b = LinkModel::new(back.clone(), w, 8).unwrap();
            assert_eq!(a.sparse(), b.sparse());
            assert_eq!(a.lambda(), b.lambda());
        }
    }
}

#[test]
fn fixed_channel_file_replaces_random_draws() {
    let dir = tempfile::tempdir().unwrap();
    let base = ExperimentConfig::default();
    let ch = channel_for_trial(&base, 3).unwrap();
    let path = dir.path().join("ch.json");
    write_channel(&path, &ch).unwrap();
    let set = format!("channel_file={}", path.display());
    let cfg = ExperimentConfig::from_json("{}", &[set.clone()]).unwrap();
    assert_eq!(channel_for_trial(&cfg, 0).unwrap(), ch);
    assert_eq!(lambda_for_trial(&cfg, 9).unwrap(), lambda_for_trial(&base, 3).unwrap());
    let err = ExperimentConfig::from_json("{}", &[set, "M=32".into()]).unwrap_err();
    assert!(err.to_string().contains("channel_file"));
}

#[test]
fn gtable_round_trips() {
    let c = Constellation::qpsk();
    let budget = GTableBudget {
        min_trials: 2,
        max_trials: 2,
        target_errors: 1,
    };
    let t = build_g_table(&CodeSpec::default(), &c, 32, &geometric_grid(0.05, 2.0, 5), &budget, 4).unwrap();
    let mut buf = Vec::new();
    write_gtable(&mut buf, &t).unwrap();
    let back = read_gtable(buf.as_slice()).unwrap();
    assert_eq!(back.info_bits, t.info_bits);
    assert_eq!(back.rows(), t.rows());
    assert!(read_gtable("tau,ber,v_x,trials,errors\n".as_bytes()).is_err());
}
