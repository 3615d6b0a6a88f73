use std::process::Command;

fn otfs(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_otfs")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn missing_config_names_the_path() {
    let (code, _, err) = otfs(&["simulate", "--config", "/no/such/cfg.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("/no/such/cfg.json"), "{err}");
}

#[test]
fn unknown_key_and_bad_value_are_config_errors() {
    let (code, _, err) = otfs(&["simulate", "--set", "speed=3"]);
    assert_eq!(code, 1);
    assert!(err.contains("`speed`"), "{err}");
    let (code, _, err) = otfs(&["simulate", "--set", "trials=0"]);
    assert_eq!(code, 1);
    assert!(err.contains("trials"), "{err}");
}

#[test]
fn runtime_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("g.csv");
    std::fs::write(&bad, "tau,ber\n1,2\n").unwrap();
    let (code, _, _) = otfs(&["se-predict", "--gtable", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn simulate_writes_results_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let (code, _, err) = otfs(&[
        "simulate", "--set", "M=16", "--set", "N=8", "--set", "P=3", "--set", "k_max=2", "--set", "l_max=4",
        "--set", "trials=4", "--set", "snr_db=[6,9]", "-o", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let header = otfs_sim::io::csv_header(&out).unwrap();
    assert_eq!(header, otfs_sim::io::RESULTS_HEADER);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 5);
}

#[test]
fn channel_dump_round_trips_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ch.json");
    let (code, _, _) = otfs(&["channel-dump", "--trial", "2", "-o", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, again, _) = otfs(&["channel-dump", "--input", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(again, std::fs::read_to_string(&p).unwrap());
}

#[test]
fn se_predict_out_of_table_warns_and_completes() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.csv");
    let small = [
        "--set", "M=16", "--set", "N=8", "--set", "P=3", "--set", "k_max=2", "--set", "l_max=4",
    ];
    let mut args = vec!["gtable"];
    args.extend(small);
    args.extend([
        "--set", "tau_min=0.2", "--set", "tau_max=0.5", "--set", "tau_points=3", "--set", "gtable_min_trials=1", "--set", "gtable_max_trials=3",
        "-o", g.to_str().unwrap(),
    ]);
    assert_eq!(otfs(&args).0, 0);
    let mut args = vec!["se-predict", "--gtable", g.to_str().unwrap(), "--set", "trials=3", "--set", "snr_db=[0, 30]"];
    args.extend(small);
    let (code, out, err) = otfs(&args);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("outside"), "{err}");
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 15);
}

#[test]
fn trace_emits_one_row_per_iteration() {
    let (code, out, err) = otfs(&["trace", "--set", "max_iter=5", "--snr", "12"]);
    assert_eq!(code, 0, "{err}");
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("trial,iter,eps_hat,mean_nu_x,ser_vs_truth"));
    assert_eq!(lines.count(), 5);
    let (code, out, _) = otfs(&["trace", "--set", "coded=true", "--set", "outer_iterations=3", "--detector", "uamp"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("iter,ber_info,ber_coded,eps_hat\n"));
}
