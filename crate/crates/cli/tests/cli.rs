use std::process::{Command, Output};

fn mmba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmba")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: [&str; 4] = ["--trials", "4", "--tmax", "5"];

#[test]
fn run_writes_csv_to_stdout() {
    let out = mmba(&[&["run"], &SMALL[..]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "axis,T,P_D,stderr,trials,config_hash,estimator,time_ms,mean_detect_slots,censored");
    assert_eq!(lines.count(), 5);
}

#[test]
fn same_seed_same_bytes_and_seed_matters() {
    let a = mmba(&[&["run", "--seed", "5"], &SMALL[..]].concat());
    let b = mmba(&[&["run", "--seed", "5"], &SMALL[..]].concat());
    let c = mmba(&[&["run", "--seed", "6"], &SMALL[..]].concat());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn sweep_json_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.json");
    let out = mmba(
        &[&["sweep", "--axis", "kappa", "--values", "2;4,2", "--format", "json", "--out", path.to_str().unwrap()], &SMALL[..]]
            .concat(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curves = mmba::harness::read_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let axes: Vec<&str> = curves.iter().map(|c| c.axis.as_str()).collect();
    assert_eq!(axes, ["kappa=2,2", "kappa=4,2"]);
    assert!(curves.iter().all(|c| c.trials == 4 && c.t.len() == 5));
}

#[test]
fn figure_nine_adds_bisection_curves() {
    let out = mmba(&[&["figure", "9"], &SMALL[..]].concat());
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.contains(",bisection,")).count(), 10);
}

#[test]
fn config_file_overrides_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, "bs_antennas = 8\nue_antennas = 8\nkappa_u = 2\nkappa_v = 2\n").unwrap();
    let out = mmba(&["config", "--config", good.to_str().unwrap(), "--trials", "9"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("bs_antennas = 8"));
    assert!(text.contains("trials = 9"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "antennas = 8\n").unwrap();
    let out = mmba(&["run", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("antennas"));
}

#[test]
fn errors_exit_nonzero() {
    for args in [
        vec!["figure", "3"],
        vec!["sweep", "--axis", "nope", "--values", "1"],
        vec!["sweep", "--axis", "kappa", "--values", "99"],
        vec!["run", "--format", "xml"],
        vec!["run", "--profile", "huge"],
        vec!["run", "--config", "/nonexistent/cfg.toml"],
        vec!["run", "--trials", "2", "--tmax", "2", "--out", "/nonexistent/dir/out.csv"],
        vec!["run", "--tmax", "0"],
    ] {
        let out = mmba(&args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty());
    }
}
