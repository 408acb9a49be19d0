use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn quarton(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quarton"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("QUARTON_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("error record on stderr");
    serde_json::from_str(line).expect("error record is JSON")
}

#[test]
fn spectrum_output_embeds_version_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = quarton(dir.path(), &["spectrum"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("spectrum/spectrum.json")).unwrap()).unwrap();
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert!(doc["config"].as_str().unwrap().contains("[circuit]"));
    let chi = doc["result"]["metrics"]["cross_kerr_2chi"].as_f64().unwrap();
    assert!((chi / 252.0 - 1.0).abs() < 0.05, "2chi {chi}");
    let levels = fs::read_to_string(dir.path().join("spectrum/levels.csv")).unwrap();
    assert!(levels.starts_with("# quarton "));
    assert!(levels.contains("# e_ja = 538 GHz"));
    assert!(dir.path().join("spectrum/config.cfg").exists());
}

#[test]
fn malformed_config_reports_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "seed = 3\n[circuit]\ne_ja = 538 GHz\ne_qq = 1 GHz\n").unwrap();
    let o = quarton(dir.path(), &["--config", cfg.to_str().unwrap(), "spectrum"]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"], "config");
    assert_eq!(e["line"], 4);
    assert!(e["message"].as_str().unwrap().contains("circuit.e_qq"));
}

#[test]
fn labeling_failure_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = quarton(dir.path(), &["--set", "solver.fock_levels=5", "spectrum"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["exit_code"], 3);
}

#[test]
fn config_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let first = quarton(dir.path(), &["--set", "readout.pulse_len=4000 ps", "--set", "environment.temperature=0.03 K", "config"]);
    assert!(first.status.success());
    let path = dir.path().join("resolved.cfg");
    fs::write(&path, &first.stdout).unwrap();
    let second = quarton(dir.path(), &["--config", path.to_str().unwrap(), "config"]);
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("pulse_len = 4 ns"));
    assert!(text.contains("temperature = 30 mK"));
}

#[test]
fn flags_override_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "seed = 3\n").unwrap();
    let o = quarton(dir.path(), &["--config", cfg.to_str().unwrap(), "--seed", "11", "config"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("seed = 11"));
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_quarton"))
        .arg("validate")
        .env("QUARTON_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(dir.path().join("validate/validate.json").exists());
    let baths = fs::read_to_string(dir.path().join("validate/baths.csv")).unwrap();
    assert!(baths.contains("bath,monitored,upper,lower"));
}

#[test]
fn sweep_keeps_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = quarton(dir.path(), &["sweep", "--points1", "3", "--axis2", "e_ja_eff", "--min2", "250", "--max2", "290", "--points2", "2", "--fixed-resonator-frequency"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep/sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("i,j,value1"));
    assert_eq!(rows.len(), 1 + 6);
}

#[test]
fn trajectories_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = quarton(out, &["trajectories", "--n-traj", "1000", "--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["iq.csv", "trajectories.json", "config.cfg"] {
        let x = fs::read(a.join("trajectories").join(name)).unwrap();
        let y = fs::read(b.join("trajectories").join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}
