use std::path::Path;
use std::process::{Command, Output};

use qpiston_cli::presets;
use qpiston_cli::scenario::{OutputKind, Scenario};
use qpiston_cli::sweep::with_value;
use qpiston_core::bath::spectral_separation_report;
use qpiston_core::lindblad::reduce_to_piston;
use qpiston_core::trajectory::Backend;

fn qpiston(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpiston")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Engine preset cut down to eleven reduced-model records.
fn small() -> Scenario {
    let mut s = presets::preset("engine-coherent").unwrap();
    s.name = Some("small".into());
    s.machine.fock_cutoff = 24;
    s.run.backend = Backend::Reduced;
    s.run.t_max = 3000.0;
    s.run.record_every = 3000;
    s.run.snapshots = 2;
    s
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = small().to_toml().replace("[machine]\n", "[machine]\nomega_zero = 1.0\n");
    let path = write(dir.path(), "bad.toml", &text);
    let o = qpiston(&["run", &path, "-o", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error[config]") && stderr(&o).contains("omega_zero"), "{}", stderr(&o));
}

#[test]
fn coarse_dt_is_rejected() {
    let mut s = small();
    s.run.dt = 0.5;
    let err = s.validate().unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("does not resolve"), "{err}");
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "coarse.toml", &s.to_toml());
    assert_eq!(qpiston(&["run", &path]).status.code(), Some(2));
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "small.toml", &small().to_toml());
    let mut csvs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        let o = qpiston(&["run", &path, "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        csvs.push(std::fs::read(out.join("thermo.csv")).unwrap());
        assert!(out.join("report.json").exists());
        assert!(out.join("distribution_000.csv").exists() && out.join("distribution_001.csv").exists());
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    assert!(text.starts_with("# name=small\n"));
    assert!(text.contains(&format!("# config_hash={}\n", small().hash())));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 11);
}

#[test]
fn outputs_can_be_restricted() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = small();
    s.run.outputs = vec![OutputKind::Report];
    let (report, written) = qpiston_cli::run::run(&s, dir.path()).unwrap();
    assert_eq!(written, vec![dir.path().join("report.json")]);
    assert_eq!(report.records, 11);
    assert_eq!(report.spohn_violations, 0);
}

#[test]
fn hash_ignores_formatting() {
    let s = small();
    let spaced = s.to_toml().replace(" = ", "   =   ");
    assert_eq!(Scenario::from_toml(&spaced).unwrap().hash(), s.hash());
    let mut t = s.clone();
    t.machine.g *= 1.01;
    assert_ne!(t.hash(), s.hash());
}

#[test]
fn sweep_writes_an_index() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "small.toml", &small().to_toml());
    let out = dir.path().join("sweep");
    let o = qpiston(&["sweep", &path, "--axis", "machine.g", "--values", "0.012,0.015,-1", "-o", out.to_str().unwrap()]);
    // The negative coupling fails on its own; the other runs still complete.
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let index = std::fs::read_to_string(out.join("index.csv")).unwrap();
    let lines: Vec<&str> = index.lines().collect();
    assert_eq!(lines[0], "# axis=machine.g");
    assert_eq!(lines.len(), 2 + 3);
    assert!(lines[2].starts_with("1.2e-2,run_000,ok,"));
    assert!(lines[3].starts_with("1.5e-2,run_001,ok,"));
    assert!(lines[4].contains(",failed,config,"), "{}", lines[4]);
    assert!(out.join("run_001").join("thermo.csv").exists());
}

#[test]
fn sweep_rejects_bad_axes() {
    let s = small();
    assert!(with_value(&s, "machine.omega_zero", 1.0).is_err());
    assert!(with_value(&s, "machine.fock_cutoff", 2.5).is_err());
    assert!(with_value(&s, "piston.kind", 1.0).is_err());
    assert_eq!(with_value(&s, "machine.fock_cutoff", 30.0).unwrap().machine.fock_cutoff, 30);
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "small.toml", &s.to_toml());
    let o = qpiston(&["sweep", &path, "--axis", "machine.nope", "--values", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn presets_round_trip() {
    let o = qpiston(&["presets", "list"]);
    let listing = String::from_utf8(o.stdout).unwrap();
    for name in presets::NAMES {
        assert!(listing.contains(name));
        let shown = qpiston(&["presets", "show", name]);
        assert!(shown.status.success());
        let s = Scenario::from_toml(&String::from_utf8(shown.stdout).unwrap()).unwrap();
        assert_eq!(s, presets::preset(name).unwrap());
    }
    assert_eq!(presets::preset("fig2-engine-coherent").unwrap().name.as_deref(), Some("engine-coherent"));
    assert_eq!(qpiston(&["presets", "show", "nope"]).status.code(), Some(2));
}

#[test]
fn presets_are_separated_and_signed() {
    for name in presets::NAMES {
        let cfg = presets::preset(name).unwrap().machine_config().unwrap();
        let rep = spectral_separation_report(&cfg.hot, &cfg.cold, cfg.frequencies()).unwrap();
        let gamma = reduce_to_piston(&cfg).unwrap().gamma;
        if name.starts_with("engine") {
            assert!(rep.engine_ok() && gamma < 0.0, "{name}");
        } else {
            assert!(rep.refrigerator_ok() && gamma > 0.0, "{name}");
        }
    }
}

#[test]
fn validate_rejects_unknown_criteria() {
    let o = qpiston(&["validate", "--only", "13"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qpiston(&["validate", "--only", "x"]);
    assert_eq!(o.status.code(), Some(2));
}
