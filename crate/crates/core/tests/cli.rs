use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "n_points = 64\nhalf_width = 8.0\ntau0 = 0.125\nladder_levels = 3\nfinal_time = 0.5\ntau_ref = 0.0001220703125\nprobe_lambdas = [4.0, 8.0]\nprobe_times = [0.5, 0.25]\nprobe_trials = 2\n";

fn cli(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("exp.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_gpe-split"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn run_writes_trajectory_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), SMALL, &["run", "--stride", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/trajectory.txt")).unwrap();
    assert!(!text.is_empty());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/trajectory.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["n_points"], 64);
    assert_eq!(json["snapshot_steps"], serde_json::json!([0, 2, 4]));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn spectrum_and_probe_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), SMALL, &["spectrum"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let spectrum = std::fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 65);

    let out = cli(dir.path(), SMALL, &["probe", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["probe_dispersive.csv", "probe_bernstein.csv", "probe_strichartz.csv", "probe_summary.json"] {
        assert!(dir.path().join("out").join(name).is_file(), "{name}");
    }
}

#[test]
fn convergence_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), SMALL, &["convergence"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    // header plus τ0 and three halvings
    assert_eq!(csv.lines().count(), 1 + 4);
    assert!(dir.path().join("out/convergence.json").is_file());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), "n_pionts = 64\n", &["spectrum"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_pionts"));
}

#[test]
fn invalid_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), "n_points = 63\n", &["spectrum"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn focusing_blow_up_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}sigma = 2.0\nepsilon = -1.0\ninitial_data = \"eigen_mix\"\neigen_mix = [1e200]\n");
    let out = cli(dir.path(), &config, &["run"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}
