use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_caloric-mhd"));
    for (k, _) in std::env::vars() {
        if k.starts_with("CALORIC_MHD") {
            c.env_remove(k);
        }
    }
    c
}

fn write_config(dir: &Path, preset: &str, amplitude: f64) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let text = format!(
        r#"{{
  "grid": {{"n": 8}},
  "scheme": {{"epsilon": 0.5, "dt": 0.03125, "horizon": 0.125}},
  "initial": {{"preset": "{preset}", "seed": 11, "amplitude": {amplitude}}}
}}"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, out: &Path, jobs: &str) -> std::process::Output {
    bin().args(["--jobs", jobs, "run", "--config"]).arg(config).arg("--out-dir").arg(out).output().unwrap()
}

#[test]
fn repeated_runs_write_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "random", 0.05);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&cfg, &a, "1").status.code(), Some(0));
    assert_eq!(run(&cfg, &b, "2").status.code(), Some(0));
    for f in ["energy.csv", "summary.json", "audits/global_energy.json", "trajectory/manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn aligned_data_passes_with_zero_perturbation_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "elsasser_aligned", 0.1);
    let out = dir.path().join("out");
    let o = run(&cfg, &out, "1");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.join("energy.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(&rec[1], "0.0");
        assert_eq!(&rec[2], "0.0");
    }
}

#[test]
fn zero_amplitude_gives_zero_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "random", 0.0);
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, "1").status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(out.join("energy.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert!(rec.iter().skip(1).take(9).all(|x| x.parse::<f64>().unwrap() == 0.0), "{rec:?}");
    }
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"grid": {"n": 8, "typo": 1}}"#).unwrap();
    assert_eq!(run(&cfg, &dir.path().join("out"), "1").status.code(), Some(2));
    assert_eq!(run(&dir.path().join("missing.json"), &dir.path().join("out"), "1").status.code(), Some(2));
    let good = write_config(dir.path(), "random", 0.01);
    let o = bin().env("CALORIC_MHD__SCHEME__DT", "-1").args(["run", "--config"]).arg(&good).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["run", "--config"]).arg(&good).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "no output dir");
}

#[test]
fn report_renders_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "taylor_green", 0.05);
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, "1").status.code(), Some(0));
    let o = bin().arg("report").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("| oscillation |"));
    assert!(out.join("report.md").exists());
}
