//! End-to-end behaviour of the `twinosc` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn twinosc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinosc"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TWINOSC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Small amplitude sweep used where runtime matters.
const SMALL_SWEEP: &str = r#"{
  "version": 1,
  "name": "small",
  "experiment": "lzsm-amp",
  "system": {"units": "reduced", "delta": 1.0, "gamma": 0.05},
  "drive": {"omega": 2.0},
  "sweep": {
    "x": {"start": -6, "stop": 6, "points": 9},
    "y": [0.5, 3.0, 6.0],
    "window": {"drive-periods": 5}
  },
  "seed": 3
}"#;

#[test]
fn unknown_preset_exits_2_without_files() {
    let dir = tempdir().unwrap();
    let o = twinosc(&["run", "--preset", "fig9", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn validate_echoes_resonant_parameters() {
    let dir = tempdir().unwrap();
    let o = twinosc(&["validate", "--preset", "fig2-rabi"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("eps0       = 5 Δ"), "{text}");
    assert!(text.contains("= 0.7 ω"), "{text}");
    assert!(text.contains("= 0.006 ω"), "{text}");
    assert!(text.contains("splitting  = 5.0990195135927845 Δ = 1 ω"), "{text}");
}

#[test]
fn validate_physical_units() {
    let dir = tempdir().unwrap();
    let o = twinosc(&["validate", "--preset", "faust12-like"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("Hz*2pi") && text.contains("rad/s"), "{text}");
    assert!(text.contains("8.000000e1 Hz*2pi"), "{text}");
}

#[test]
fn invalid_configs_exit_2() {
    let dir = tempdir().unwrap();
    let negative_mass = r#"{"experiment": "lzsm-amp",
        "system": {"units": "physical", "m": -1e-15, "k0": 3, "kc": 0.003, "gamma": "80 Hz*2pi"},
        "sweep": {"x": [0, 1], "y": [1, 2], "window": {"time": 1}}}"#;
    let no_jumps = r#"{"experiment": "motional", "system": {"units": "reduced", "gamma": 0.01},
        "drive": {"amplitude": 5},
        "sweep": {"x": [-1, 0, 1], "y": [0, 1], "window": {"time": 10}}}"#;
    for (name, text) in [("mass.json", negative_mass), ("chi.json", no_jumps), ("bad.json", "{not json")] {
        fs::write(dir.path().join(name), text).unwrap();
        let o = twinosc(&["validate", name], dir.path());
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn rabi_writes_three_models_and_sidecar() {
    let dir = tempdir().unwrap();
    let o = twinosc(&["rabi", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("fig2-rabi: rabi 4001 samples"));
    let csv = fs::read_to_string(dir.path().join("o/fig2-rabi.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    for col in ["t", "eps", "exact_occupation", "schrodinger_occupation", "analytic_occupation"] {
        assert!(header.split(',').any(|c| c == col), "{header}");
    }
    assert!(!csv.contains('\r'));
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/fig2-rabi.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 0);
    assert!(meta["rng_algorithm"].as_str().unwrap().starts_with("pcg64"));
    assert_eq!(meta["config"]["experiment"], "rabi");
}

#[test]
fn exact_model_regime_check() {
    let dir = tempdir().unwrap();
    let cfg = r#"{"experiment": "rabi", "model": "exact",
        "system": {"units": "reduced", "gamma": 0.01, "carrier": 20},
        "drive": {"eps0": 1, "amplitude": 0.5, "omega": 4},
        "trajectory": {"t_end": 1}}"#;
    fs::write(dir.path().join("c.json"), cfg).unwrap();
    let o = twinosc(&["run", "--config", "c.json", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(!dir.path().join("o").exists());
    let o = twinosc(&["run", "--config", "c.json", "--out", "o", "--force"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/rabi.json")).unwrap()).unwrap();
    assert!(meta["warnings"][0].as_str().unwrap().contains("forced"));
}

#[test]
fn failure_budget_exits_4() {
    let dir = tempdir().unwrap();
    let mut cfg: Value = serde_json::from_str(SMALL_SWEEP).unwrap();
    cfg["integrator"] = serde_json::json!({"max_steps": 3});
    fs::write(dir.path().join("c.json"), cfg.to_string()).unwrap();
    let o = twinosc(&["run", "--config", "c.json", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_outputs_and_rerun_from_sidecar() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("c.json"), SMALL_SWEEP).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_twinosc"))
        .args(["lzsm-amp", "--config", "c.json", "--parallelism", "2"])
        .current_dir(dir.path())
        .env("TWINOSC_OUT_DIR", "env-out")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("9x3 cells, 0 failed"));
    let first = fs::read(dir.path().join("env-out/small.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("amplitude\\eps0,-6,-4.5,-3,"));
    assert_eq!(text.lines().count(), 4);

    // the sidecar's config alone reproduces the CSV
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("env-out/small.json")).unwrap()).unwrap();
    fs::write(dir.path().join("again.json"), meta["config"].to_string()).unwrap();
    let o = twinosc(&["run", "--config", "again.json", "--out", "again", "--parallelism", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("again/small.csv")).unwrap(), first);

    let o = twinosc(
        &["run", "--config", "c.json", "--out", "long", "--format", "long-csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let long = fs::read_to_string(dir.path().join("long/small.long.csv")).unwrap();
    assert_eq!(long.lines().next(), Some("x,y,value,n_failures"));
    assert_eq!(long.lines().count(), 1 + 27);
}

#[test]
fn toml_config_matches_json() {
    let dir = tempdir().unwrap();
    let o = twinosc(&["presets", "--show", "lz-sweep", "--toml"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    fs::write(dir.path().join("lz.toml"), stdout(&o)).unwrap();
    let o = twinosc(&["run", "--config", "lz.toml", "--out", "t"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o2 = twinosc(&["lz-single", "--out", "j"], dir.path());
    assert_eq!(o2.status.code(), Some(0));
    assert_eq!(
        fs::read(dir.path().join("t/lz-sweep.csv")).unwrap(),
        fs::read(dir.path().join("j/lz-sweep.csv")).unwrap()
    );
    assert!(stdout(&o).contains("lz_probability"));
}

#[test]
fn telegraph_switch_times() {
    let dir = tempdir().unwrap();
    let args = ["realize", "--shape", "telegraph", "--chi", "2", "--seed", "5", "--t-max", "10"];
    let a = twinosc(&args, dir.path());
    let b = twinosc(&args, dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let times: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(text.lines().next(), Some("t_switch"));
    assert!(times.len() > 5 && times.windows(2).all(|w| w[1] > w[0]));
    assert!(times.iter().all(|&t| t > 0.0 && t <= 10.0));
}

#[test]
fn analytic_subcommands() {
    let dir = tempdir().unwrap();
    let o = twinosc(&["analytic-lorentzian", "--preset", "fig3b", "--out", "a"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = twinosc(&["analytic-rabi", "--out", "a"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("a/fig2-rabi.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,eps,analytic_occupation"));
    // a trajectory preset has no grid for a sweep experiment
    let o = twinosc(&["latching", "--preset", "fig2-rabi", "--out", "a"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
