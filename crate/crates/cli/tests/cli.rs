use std::path::Path;
use std::process::{Command, Output};

fn solsym(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solsym")).args(args).current_dir(cwd).env_remove("SOLSYM_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let header = rd.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rd.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (h, rows) = read_csv(path);
    let i = h.iter().position(|c| c == name).unwrap();
    rows.into_iter().map(|r| r[i].clone()).collect()
}

#[test]
fn unknown_experiment_exits_one_with_listing() {
    let tmp = tempfile::tempdir().unwrap();
    let o = solsym(&["run", "unknown"], tmp.path());
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bowl-profile") && err.contains("density-table"), "{err}");
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn bowl_profile_defaults_pass_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bowl");
    let o = solsym(&["run", "bowl-profile", "--out", out.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    for n in [3, 4, 5] {
        let p = out.join(format!("profile_n{n}.csv"));
        assert!(column(&p, "dphi_ge_r_over_n").iter().all(|v| v == "true"));
        assert!(column(&p, "phi_ge_r2_over_2n").iter().all(|v| v == "true"));
    }
    for f in ["manifest.json", "config.json", "assertions.csv", "profiles.svg"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let r = solsym(&["report", out.to_str().unwrap()], tmp.path());
    assert_eq!(code(&r), 0);
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.contains("0 failed") && !text.contains("FAIL"), "{text}");
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    // Every summary number is a verbatim assertions.csv cell.
    let measured = column(&out.join("assertions.csv"), "measured");
    let rows = summary["assertions"].as_array().unwrap();
    assert_eq!(rows.len(), measured.len());
    for (row, cell) in rows.iter().zip(&measured) {
        assert_eq!(row["measured"].as_str().unwrap(), cell);
    }
}

#[test]
fn kernel_oracle_records_the_deviation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("k");
    let o = solsym(&["run", "kernel-oracle", "--out", out.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0);
    let (_, rows) = read_csv(&out.join("assertions.csv"));
    let row = rows.iter().find(|r| r[0] == "max_abs_difference").unwrap();
    assert!(row[1].parse::<f64>().unwrap() <= 1e-8);
    assert_eq!(column(&out.join("queries.csv"), "t").len(), 1000);
}

#[test]
fn failed_assertion_exits_two_and_report_marks_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("strict.json");
    // No floating-point evaluation matches the series to 1e-30.
    std::fs::write(&cfg, r#"{"queries": 10, "max_deviation": 1e-30}"#).unwrap();
    let out = tmp.path().join("strict");
    let o = solsym(&["run", "kernel-oracle", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL max_abs_difference"));
    let r = solsym(&["report", out.to_str().unwrap()], tmp.path());
    assert_eq!(code(&r), 2);
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.lines().any(|l| l.starts_with("max_abs_difference") && l.ends_with("FAIL")), "{text}");
}

#[test]
fn report_needs_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = solsym(&["report", tmp.path().to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 1);
    let o = solsym(&["report", tmp.path().join("absent").to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn configuration_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = [
        r#"{"no_such_key": 1}"#,
        r#"{"ns": {"a": 1}}"#,
        r#"{"ns": "three"}"#,
        r#"not json"#,
        r#"{"experiment": "diameters", "parameters": {}}"#,
    ];
    for (i, text) in bad.iter().enumerate() {
        let p = tmp.path().join(format!("bad{i}.json"));
        std::fs::write(&p, text).unwrap();
        let o = solsym(&["run", "bowl-profile", "--config", p.to_str().unwrap()], tmp.path());
        assert_eq!(code(&o), 1, "{text}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = solsym(&["run", "bowl-profile", "--config", "missing.json"], tmp.path());
    assert_eq!(code(&o), 1);
    // Deterministic experiments take no seed.
    let o = solsym(&["run", "bowl-profile", "--seed", "3"], tmp.path());
    assert_eq!(code(&o), 1);
    let o = Command::new(env!("CARGO_BIN_EXE_solsym"))
        .args(["run", "bowl-profile"])
        .current_dir(tmp.path())
        .env("SOLSYM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn default_directory_and_manifest_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_solsym"))
        .args(["run", "fit-rigidity", "--seed", "11"])
        .current_dir(tmp.path())
        .env("SOLSYM_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let runs: Vec<_> = std::fs::read_dir(tmp.path().join("runs")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(runs.len(), 1);
    let first = &runs[0];
    assert!(first.file_name().unwrap().to_str().unwrap().starts_with("fit-rigidity-"));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(first.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["parameters"]["seed"], 11);
    assert_eq!(manifest["threads"], 2);

    let again = tmp.path().join("again");
    let m = first.join("manifest.json");
    let o = solsym(&["run", "fit-rigidity", "--config", m.to_str().unwrap(), "--out", again.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0);
    for f in ["fits.csv", "assertions.csv", "config.json"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
    // A different seed changes the starts.
    let other = tmp.path().join("other");
    solsym(&["run", "fit-rigidity", "--seed", "12", "--out", other.to_str().unwrap()], tmp.path());
    assert_ne!(std::fs::read(first.join("fits.csv")).unwrap(), std::fs::read(other.join("fits.csv")).unwrap());
}

#[test]
fn list_and_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let o = solsym(&["list"], tmp.path());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 11);
    let o = solsym(&["defaults", "kernel-oracle"], tmp.path());
    let d: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(d["seed"], 2024);
    assert_eq!(code(&solsym(&["defaults", "nope"], tmp.path())), 1);
}
