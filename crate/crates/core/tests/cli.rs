//! The `bxi` binary: exit codes, output files and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn bxi(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bxi"));
    cmd.args(args).env_remove("BXI_WORKERS");
    if let Some(w) = workers {
        cmd.env("BXI_WORKERS", w);
    }
    cmd.output().expect("bxi runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn b_series_config(dir: &Path, out: &str) -> String {
    let out = dir.join(out);
    write_config(
        dir,
        &format!("{}.json", out.file_name().unwrap().to_str().unwrap()),
        &format!(
            r#"{{"experiment":"B_SERIES","r_values":[1,2,3],"lambda_values":[1],
                "n_samples":60,"dt":0.001,"h":0.05,"seed":17,"output_dir":{:?}}}"#,
            out.to_str().unwrap()
        ),
    )
}

#[test]
fn run_is_reproducible_across_reruns_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for (name, workers) in [("a", None), ("b", None), ("c", Some("3"))] {
        let cfg = b_series_config(dir.path(), name);
        let out = bxi(&["run", "--config", &cfg], workers);
        let code = out.status.code().unwrap();
        assert!(code == 0 || code == 2, "exit {code}: {}", String::from_utf8_lossy(&out.stderr));
        let run_dir = dir.path().join(name);
        for f in ["results.csv", "summary.json", "report.txt"] {
            assert!(run_dir.join(f).exists(), "{f} missing");
        }
        csvs.push(std::fs::read(run_dir.join("results.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);
    let text = String::from_utf8(csvs[0].clone()).unwrap();
    assert!(text.starts_with("experiment,quantity,r,lambda,value,stderr,n,seed,config_hash\n"));

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "B_SERIES");

    let a = dir.path().join("a/results.csv");
    let b = dir.path().join("b/results.csv");
    let out = bxi(&["report", a.to_str().unwrap(), b.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("B_SERIES"));
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(
        dir.path(),
        "unknown.json",
        r#"{"experiment":"B_SERIES","r_values":[1,2,3],"lambda_values":[1],"n_samples":10,
            "dt":0.001,"h":0.05,"seed":1,"output_dir":"x","bogus":1}"#,
    );
    let invalid = write_config(
        dir.path(),
        "invalid.json",
        r#"{"experiment":"B_SERIES","r_values":[1,2,3],"lambda_values":[1],"n_samples":10,
            "dt":-0.001,"h":0.05,"seed":1,"output_dir":"x"}"#,
    );
    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "not,a,results,file\n").unwrap();
    for args in [
        vec!["run", "--config", unknown.as_str()],
        vec!["run", "--config", invalid.as_str()],
        vec!["run", "--config", "/nonexistent/config.json"],
        vec!["report"],
        vec!["report", garbage.to_str().unwrap()],
        vec!["verify", "--suite", "everything"],
        vec!["frobnicate"],
    ] {
        let out = bxi(&args, None);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let cfg = b_series_config(dir.path(), "w");
    assert_eq!(bxi(&["run", "--config", &cfg], Some("zero")).status.code(), Some(1));
}

#[test]
fn verify_exponents_passes() {
    let out = bxi(&["verify", "--suite", "exponents"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().all(|l| l.starts_with("[PASS]")), "{text}");
}

#[test]
fn failed_checks_exit_with_two() {
    // Two radii cannot support a fit, so the run completes with a failed check.
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "short.json",
        &format!(
            r#"{{"experiment":"B_SERIES","r_values":[1,2],"lambda_values":[1],"n_samples":20,
                "dt":0.001,"h":0.05,"seed":4,"output_dir":{:?}}}"#,
            out_dir.to_str().unwrap()
        ),
    );
    let out = bxi(&["run", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("results.csv").exists());
}
