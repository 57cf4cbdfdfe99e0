use std::path::Path;
use std::process::{Command, Output};

use flagstab::Outcome;
use flagstab_cli::classify::flag_report;
use flagstab_cli::runner::{run_scenario, select_builtin};
use flagstab_cli::{builtin, CliError, DensityInput, Overrides, Scenario};

fn flagstab(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flagstab")).args(args).env("FLAGSTAB_OUT_DIR", out_dir).output().unwrap()
}

fn short() -> Overrides {
    Overrides { t_final: Some(5.0), ..Overrides::default() }
}

#[test]
fn builtin_battery_covers_the_case_matrix() {
    let all = builtin::all();
    assert!(all.len() >= 14);
    let mut names: Vec<_> = all.iter().map(|s| s.name.as_str()).collect();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), all.len(), "duplicate names");
    for levels in [2, 3, 4] {
        assert!(all.iter().any(|s| s.levels == levels));
    }
    for s in &all {
        let p = s.validate(&Overrides::default()).unwrap();
        assert!(p.expected.is_some(), "{}", s.name);
        assert!(p.warnings.is_empty(), "{}: {:?}", s.name, p.warnings);
    }
}

#[test]
fn filter_selects_by_glob() {
    let two = select_builtin(Some("ex1-*")).unwrap();
    assert!(!two.is_empty());
    assert!(two.iter().all(|s| s.levels == 2));
    assert_eq!(two.len(), builtin::all().iter().filter(|s| s.levels == 2).count());
    match select_builtin(Some("nothing-*")) {
        Err(CliError::NoMatch(f)) => assert_eq!(f, "nothing-*"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(select_builtin(Some("[")), Err(CliError::Config(_))));
}

#[test]
fn scenario_json_round_trips() {
    for s in builtin::all() {
        let text = s.to_json();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json(), text);
    }
}

#[test]
fn verdict_json_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let s = builtin::by_name("ex2-generic-full").unwrap();
    let first = run_scenario(&s, &short(), &dir.path().join("a")).unwrap();
    let second = run_scenario(&s, &short(), &dir.path().join("b")).unwrap();
    let a = std::fs::read(&first.verdict_path).unwrap();
    let b = std::fs::read(&second.verdict_path).unwrap();
    assert_eq!(a, b);
    assert_eq!(std::fs::read(&first.traj_path).unwrap(), std::fs::read(&second.traj_path).unwrap());
    // 17 significant digits: every float round-trips.
    let text = String::from_utf8(a).unwrap();
    let final_v = text.lines().find_map(|l| l.trim().strip_prefix("\"final_V\": ")).unwrap();
    assert_eq!(final_v.trim_end_matches(',').parse::<f64>().unwrap(), first.report.simulation.final_v);
    // Fixed field order.
    let at = |k: &str| text.find(&format!("\"{k}\":")).unwrap();
    assert!(at("outcome") < at("cond_antipodal") && at("cond_antipodal") < at("rank_w"));
    assert!(at("verdict") < at("simulation") && at("simulation") < at("check"));
}

#[test]
fn trajectory_csv_has_header_and_recorded_rows() {
    let dir = tempfile::tempdir().unwrap();
    let s = builtin::by_name("ex1-diagonal-target").unwrap();
    let out =
        run_scenario(&s, &Overrides { t_final: Some(1.0), stride: Some(100), ..Overrides::default() }, dir.path())
            .unwrap();
    let csv = std::fs::read_to_string(&out.traj_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,u,V,eig_drift,varrho_0,varrho_1,varrho_2,ref_0,ref_1,ref_2");
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), out.trajectory.len());
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.split(',').count() == 10));
    // No temporary files are left behind.
    let mut entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    entries.sort();
    assert_eq!(entries, ["ex1-diagonal-target.traj.csv", "ex1-diagonal-target.verdict.json"]);
}

#[test]
fn seed_moves_only_unseeded_orbit_inputs() {
    let mut s = builtin::by_name("ex2-middle-level").unwrap();
    let fixed = |seed| s.validate(&Overrides { seed: Some(seed), ..Overrides::default() }).unwrap().rho0;
    assert_eq!(fixed(1).matrix(), fixed(2).matrix());
    let DensityInput::Orbit(o) = &mut s.rho0 else { panic!() };
    o.seed = None;
    let free = |seed| s.validate(&Overrides { seed: Some(seed), ..Overrides::default() }).unwrap().rho0;
    assert_ne!(free(1).matrix(), free(2).matrix());
    assert_eq!(free(3).matrix(), free(3).matrix());
}

fn config_error(text: &str) -> String {
    match Scenario::from_json(text).and_then(|s| s.validate(&Overrides::default()).map(|_| ())) {
        Err(CliError::Config(msg)) => msg,
        other => panic!("expected a config error, got {other:?}"),
    }
}

fn minimal(patch: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v = serde_json::json!({
        "name": "t",
        "N": 2,
        "energies": [0.5, -0.5],
        "hB_terms": [{"kind": "re", "j": 1, "l": 2, "value": 0.5}],
        "rho_d": {"diagonal": [1.0, 0.0]},
        "rho0": {"diagonal": [0.5, 0.5]},
        "T": 1.0
    });
    patch(&mut v);
    v.to_string()
}

#[test]
fn config_errors_name_the_field() {
    assert!(config_error(&minimal(|v| v["hB_terms"][0]["l"] = 3.into())).starts_with("hB_terms[0]"));
    assert!(config_error(&minimal(|v| v["energies"] = serde_json::json!([1.0]))).starts_with("energies"));
    assert!(config_error(&minimal(|v| v["rho0"] = serde_json::json!({"diagonal": [0.5, 0.6]}))).starts_with("rho0"));
    assert!(config_error(&minimal(|v| v["rho_d"] = serde_json::json!({"diagonal": [1.0]}))).starts_with("rho_d"));
    assert!(config_error(&minimal(|v| v["dt"] = (-1.0).into())).starts_with("dt"));
    assert!(config_error(&minimal(|v| v["tolerances"] = serde_json::json!({"support": 1.0}))).starts_with("tolerances"));
    assert!(config_error(&minimal(|v| v["hB_terms"][0]["kind"] = "x".into())).starts_with("hB_terms[0].kind"));
    assert!(config_error(&minimal(|v| v["expect"] = serde_json::json!({"outcome": "Nope"}))).starts_with("expect"));
}

#[test]
fn energies_are_centered_with_a_warning() {
    let text = minimal(|v| v["energies"] = serde_json::json!([1.5, 0.5]));
    let p = Scenario::from_json(&text).unwrap().validate(&Overrides::default()).unwrap();
    assert_eq!(p.plant.energies(), [0.5, -0.5]);
    assert_eq!(p.warnings.len(), 1);
}

#[test]
fn classify_examples() {
    let generic = flag_report(&DensityInput::Diagonal(vec![0.6, 0.3, 0.1]), 3, 1e-8, 0).unwrap();
    assert_eq!((generic.chi, generic.m, generic.antipodal.len()), (6, 6, 5));
    let two = flag_report(&DensityInput::Diagonal(vec![1.0, 0.0]), 2, 1e-8, 0).unwrap();
    assert_eq!(two.chi, 2);
    let third = 1.0 / 3.0;
    let mixed = flag_report(&DensityInput::Diagonal(vec![third; 3]), 3, 1e-8, 0).unwrap();
    assert_eq!((mixed.chi, mixed.m), (1, 0));
    assert!(mixed.antipodal.is_empty());
    assert_eq!(
        generic.to_json(),
        flag_report(&DensityInput::Diagonal(vec![0.6, 0.3, 0.1]), 3, 1e-8, 0).unwrap().to_json()
    );
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = flagstab(&["simulate", "ex1-antipodal", "--T", "2"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("AntipodalObstruction") && stdout.contains("final_V"));
    assert!(dir.path().join("ex1-antipodal.verdict.json").exists());

    // A file whose expectation disagrees with the verdict.
    let mut s = builtin::by_name("ex1-antipodal").unwrap();
    s.expect.as_mut().unwrap().outcome = Outcome::ExpectedConvergence.to_string();
    let path = dir.path().join("wrong.json");
    std::fs::write(&path, s.to_json()).unwrap();
    let mismatch = flagstab(&["verdict", path.to_str().unwrap()], dir.path());
    assert_eq!(mismatch.status.code(), Some(1));
    let json: serde_json::Value = serde_json::from_slice(&mismatch.stdout).unwrap();
    assert_eq!(json["outcome"], "AntipodalObstruction");

    let missing = flagstab(&["simulate", "no-such-scenario"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    let empty = flagstab(&["battery", "--filter", "zz*"], dir.path());
    assert_eq!(empty.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&empty.stderr).contains("zz*"));
    std::fs::write(dir.path().join("bad.json"), "{\"name\": 3}").unwrap();
    let bad = flagstab(&["verdict", dir.path().join("bad.json").to_str().unwrap()], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn export_then_simulate_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        flagstab(&["scenarios", "export", "--dir", dir.path().to_str().unwrap(), "--filter", "ex1-*"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let file = dir.path().join("ex1-offdiag-equatorial.json");
    let loaded = Scenario::load(&file).unwrap();
    assert_eq!(loaded, builtin::by_name("ex1-offdiag-equatorial").unwrap());
    let run = flagstab(&["simulate", file.to_str().unwrap(), "--T", "3"], dir.path());
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    let classify = flagstab(&["flag", "classify", "--diagonal", "0.6,0.3,0.1"], dir.path());
    let json: serde_json::Value = serde_json::from_slice(&classify.stdout).unwrap();
    assert_eq!(json["chi"], 6);
    assert_eq!(json["antipodal"].as_array().unwrap().len(), 5);
}
