use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use oseen_spectral::output::{verify_manifest, RunManifest, MANIFEST_NAME, SPECTRUM_HEADER, SWEEP_HEADER};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oseen-spectral")).args(args).output().expect("binary runs")
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_NAME)).unwrap()).unwrap()
}

fn listed_all(dir: &Path, m: &RunManifest) {
    let mut on_disk: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != MANIFEST_NAME)
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = m.files.iter().map(|f| f.path.clone()).collect();
    listed.sort();
    assert_eq!(on_disk, listed);
    assert!(verify_manifest(dir, m).unwrap().is_empty());
}

#[test]
fn spectrum_of_the_wave_reduced_operator() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["spectrum", "--k", "1", "--alpha", "0", "--n", "200", "--n-eigs", "3", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SPECTRUM_HEADER));
    for (line, want) in lines.zip([-1.5, -2.5, -3.5]) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 6);
        let re: f64 = cells[2].parse().unwrap();
        assert!((re - want).abs() < 1e-4, "{re}");
    }
    let m = manifest(dir.path());
    assert_eq!(m.config["grid"]["n"], 200);
    assert!(m.gates.iter().all(|g| g.pass));
    listed_all(dir.path(), &m);
}

#[test]
fn negative_grid_size_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["spectrum", "--n", "-5", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.n"));
    assert!(!dir.path().join(MANIFEST_NAME).exists());
}

#[test]
fn unknown_command_and_keys_are_config_errors() {
    assert_eq!(run(&["transmogrify"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "command = \"spectrum\"\ncolour = 3\n").unwrap();
    let out = run(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["sweep", "--alpha-grid", "100,200", "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha_grid"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out_dir = dir.path().join("o");
    fs::write(&cfg, format!("command = \"spectrum\"\nn_eigs = 2\nout_dir = {:?}\n[grid]\nn = 80\nr_max = 10.0\n", out_dir.to_str().unwrap())).unwrap();
    let out = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--n", "60"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    assert_eq!(m.config["grid"]["n"], 60);
    assert_eq!(m.config["grid"]["r_max"], 10.0);
    assert_eq!(m.config["n_eigs"], 2);
}

#[test]
fn sweep_outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "sweep".to_string(),
            "--n".into(),
            "60".into(),
            "--k-max".into(),
            "3".into(),
            "--n-coarse".into(),
            "8".into(),
            "--out-dir".into(),
            d.to_str().unwrap().to_string(),
        ]
    };
    for d in [a.path(), b.path()] {
        let v = args(d);
        let out = run(&v.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma.files, mb.files);
    listed_all(a.path(), &ma);
    let csv = fs::read_to_string(a.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(SWEEP_HEADER));
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn figure_regions_are_json_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["figure-data", "--k", "2", "--alpha", "100", "--n", "80", "--delta", "0.05", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
    let regions: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(dir.path().join("regions.json")).unwrap()).unwrap();
    assert_eq!(regions.len(), 3);
    for r in &regions {
        for key in ["k", "j", "center_re", "center_im", "radius", "delta"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
        assert_eq!(r["delta"], 0.05);
    }
    listed_all(dir.path(), &manifest(dir.path()));
}

#[test]
fn semigroup_reports_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["semigroup", "--k", "1", "--alpha", "0", "--n", "80", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("tau,norm"));
    assert_eq!(traj.lines().count(), 242);
}
