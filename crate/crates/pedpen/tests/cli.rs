//! End-to-end checks of the command-line interface and its exit codes.

use std::process::Command;

fn pedpen() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pedpen"))
}

const GOOD_CSV: &str = "\
PedigreeID,ID,Sex,MotherID,FatherID,isProband,CurAge,isAff,Age,Geno
1,1,0,NA,NA,0,70,0,NA,NA
1,2,1,NA,NA,0,72,0,NA,NA
1,3,0,1,2,1,45,1,40,1
1,4,1,1,2,0,50,1,44,NA
2,1,0,NA,NA,0,60,1,55,NA
2,2,1,NA,NA,0,64,0,NA,NA
2,3,1,1,2,1,38,1,33,1
";

const BAD_CSV: &str = "\
PedigreeID,ID,Sex,MotherID,FatherID,isProband,CurAge,isAff,Age,Geno
1,1,0,NA,NA,0,70,0,NA,NA
1,3,0,1,99,1,45,1,40,1
";

#[test]
fn validate_reports_errors_with_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, BAD_CSV).unwrap();
    let out = pedpen()
        .args(["validate", "--pedigrees"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("does not exist"), "{stderr}");
}

#[test]
fn validate_passes_clean_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("good.csv");
    std::fs::write(&path, GOOD_CSV).unwrap();
    let out = pedpen()
        .args(["validate", "--pedigrees"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn estimate_smoke_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let peds = dir.path().join("peds.csv");
    std::fs::write(&peds, GOOD_CSV).unwrap();
    let out_dir = dir.path().join("out");
    let out = pedpen()
        .args([
            "estimate",
            "--n-iter-per-chain",
            "1",
            "--seed",
            "3",
            "--pedigrees",
        ])
        .arg(&peds)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "samples.csv",
        "curves_female.csv",
        "curves_male.csv",
        "diagnostics.json",
        "config_echo.json",
    ] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
}

#[test]
fn estimate_aborts_on_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let peds = dir.path().join("bad.csv");
    std::fs::write(&peds, BAD_CSV).unwrap();
    let out = pedpen()
        .args(["estimate", "--n-iter-per-chain", "1", "--pedigrees"])
        .arg(&peds)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn priors_echoes_elicited_betas() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("study.json");
    std::fs::write(
        &data,
        r#"{"distribution_data": {"age": {"min": 20, "first_quartile": 35, "median": 45, "max": 85}, "sample_size": 100}}"#,
    )
    .unwrap();
    let out = pedpen()
        .args(["priors", "--data"])
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let echoed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let median = &echoed["base"]["median"];
    let a = median["a"].as_f64().unwrap();
    let b = median["b"].as_f64().unwrap();
    assert!((a - 23.936170212765958).abs() < 1e-9, "a = {a}");
    assert!((b - 26.063829787234042).abs() < 1e-9, "b = {b}");
}

#[test]
fn simulate_writes_study_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = pedpen()
        .args(["simulate", "--n-probands", "3", "--seed", "5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("pedigrees.csv").exists());
    assert!(dir.path().join("truth.json").exists());
    // The generated file feeds straight back into validate.
    let check = pedpen()
        .args(["validate", "--pedigrees"])
        .arg(dir.path().join("pedigrees.csv"))
        .output()
        .unwrap();
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn unknown_flag_is_reported() {
    let out = pedpen()
        .args(["estimate", "--no-such-flag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--no-such-flag"));
}

const MISSING_AGES_CSV: &str = "\
PedigreeID,ID,Sex,MotherID,FatherID,isProband,CurAge,isAff,Age,Geno
1,1,0,NA,NA,0,70,0,NA,NA
1,2,1,NA,NA,0,72,0,NA,NA
1,3,0,1,2,1,45,1,40,1
1,4,1,1,2,0,NA,0,NA,NA
2,1,0,NA,NA,0,60,1,NA,NA
2,2,1,NA,NA,0,64,0,NA,NA
2,3,1,1,2,1,38,1,33,1
";

#[test]
fn debug_imputation_embeds_log_in_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let peds = dir.path().join("peds.csv");
    std::fs::write(&peds, MISSING_AGES_CSV).unwrap();
    let out_dir = dir.path().join("out");
    let out = pedpen()
        .args([
            "estimate",
            "--n-iter-per-chain",
            "20",
            "--imp-interval",
            "5",
            "--age-imputation",
            "--debug-imputation",
            "--seed",
            "6",
            "--pedigrees",
        ])
        .arg(&peds)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let diag: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("diagnostics.json")).unwrap()).unwrap();
    let log = diag["chains"][0]["imputation_log"].as_array().unwrap();
    assert!(!log.is_empty());
    assert!(log[0]["member_id"].is_number());
    assert!(log[0]["iteration"].is_number());
    assert!(log[0]["value"].is_number());
}
