use std::process::{Command, Output};

fn ringmod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringmod")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn modulus_writes_a_report() {
    let o = ringmod(&["modulus", "--curves", "256", "--res", "64", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().count() >= 2);
}

#[test]
fn ring_check_exit_codes() {
    let common = ["verify-ring", "--map", "stretch", "--alpha", "0.5", "--curves", "1024", "--res", "128"];
    let pass = ringmod(&[&common[..], &["--q", "2"]].concat());
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stderr));
    let fail = ringmod(&[&common[..], &["--q", "1.5"]].concat());
    assert_eq!(fail.status.code(), Some(2));
}

#[test]
fn classifiers() {
    let fmo = ringmod(&["check-fmo", "--half", "1", "--q", "1/r"]);
    assert_eq!(fmo.status.code(), Some(2));
    let div = ringmod(&["check-divergence", "--half", "1", "--q", "1"]);
    assert_eq!(div.status.code(), Some(0));
    let ls = ringmod(&["check-ls", "--half", "1", "--q", "1/r", "--s", "4", "--res", "64"]);
    assert_eq!(ls.status.code(), Some(3));
}

#[test]
fn csv_goes_to_the_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("growth.csv");
    let o = ringmod(&["theorem1-growth", "--half", "1", "--q", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("eps"));
}

#[test]
fn config_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("chart.toml");
    std::fs::write(&cfg, "kind = \"euclidean\"\ndim = 2\nhalf = 1.0\nq = \"1\"\n").unwrap();
    let o = ringmod(&["check-divergence", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    std::fs::write(&cfg, "kind = \"hexagonal\"\ndim = 2\n").unwrap();
    assert_eq!(ringmod(&["check-divergence", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(ringmod(&["modulus", "--p", "1"]).status.code(), Some(1));
    let crossing = ringmod(&["loewner", "--pair", "-0.5,0;0.5,0|0,-0.5;0,0.5"]);
    assert_eq!(crossing.status.code(), Some(1));
}
