//! End-to-end tests driving the compiled `findworld` binary: every
//! subcommand, the artifact layout, exit classes, and the machine-readable
//! error output.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_findworld"))
}

fn write_file(path: &Path, value: &Value) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().unwrap();
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

/// Run a command expected to fail; return (exit code, parsed error JSON).
fn run_err(cmd: &mut Command) -> (i32, Value) {
    let output = cmd.output().unwrap();
    assert!(!output.status.success(), "command unexpectedly succeeded");
    let stderr = String::from_utf8_lossy(&output.stderr);
    let parsed: Value = serde_json::from_str(stderr.trim())
        .unwrap_or_else(|e| panic!("stderr is not one JSON object ({e}): {stderr}"));
    (output.status.code().unwrap(), parsed)
}

fn small_params() -> Value {
    json!({
        "eta": 0.2,
        "depth": 3,
        "rounds": 40,
        "lambda_fair": 0.0,
        "min_leaf_weight": 1.0,
        "seed": 0
    })
}

fn small_search() -> Value {
    json!({
        "grid": [0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0],
        "epsilon": 0.15,
        "refine_steps": 2
    })
}

fn small_curve() -> Value {
    json!({
        "steps": 1,
        "bootstrap_replicates": 40,
        "confidence_level": 0.95,
        "seed": 0
    })
}

/// Simulate a small dataset into `dir` and return the CSV path.
fn simulate_into(dir: &Path, world: &str, n: u64, seed: u64) -> PathBuf {
    let config = dir.join(format!("simulate_{world}.json"));
    write_file(&config, &json!({ "n": n, "seed": seed, "out_dir": dir }));
    run_ok(bin().args(["simulate", "--config"]).arg(&config).args(["--world", world]));
    dir.join(format!("{world}.csv"))
}

#[test]
fn simulate_writes_csv_and_schema_for_both_worlds() {
    let dir = tempfile::tempdir().unwrap();
    let real = simulate_into(dir.path(), "real", 300, 9);
    let find = simulate_into(dir.path(), "find", 300, 9);

    for path in [&real, &find] {
        assert!(path.is_file(), "{} missing", path.display());
        let sidecar = path.with_extension("schema.json");
        assert!(sidecar.is_file(), "{} missing", sidecar.display());
    }
    let real_text = std::fs::read_to_string(&real).unwrap();
    let find_text = std::fs::read_to_string(&find).unwrap();
    assert_eq!(real_text.lines().count(), 301, "header plus 300 rows");
    assert!(real_text != find_text, "the two worlds must differ");
    assert!(real_text.starts_with("a,x_c,x_a,x_d,y"), "{}", real_text.lines().next().unwrap());
}

#[test]
fn preprocess_train_and_tradeoff_chain_on_simulated_data() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = simulate_into(dir.path(), "real", 400, 3);
    let test_csv = simulate_into(&dir.path().join("test"), "real", 200, 4);

    // the built-in credit graph, via an SCM spec file
    let scm_path = dir.path().join("scm.json");
    findworld::jsonio::write_json(&scm_path, &findworld::scm::default_credit_spec()).unwrap();

    for method in ["warp", "adapt"] {
        let out_dir = dir.path().join(method);
        let config = dir.path().join(format!("{method}.json"));
        write_file(
            &config,
            &json!({
                "train_csv": train_csv,
                "method": method,
                "scm_spec": scm_path,
                "seed": 1,
                "out_dir": out_dir
            }),
        );
        run_ok(bin().args(["preprocess", "--config"]).arg(&config));
        assert!(out_dir.join(format!("{method}ed.csv")).is_file());
        assert!(out_dir.join(format!("{method}ed.schema.json")).is_file());
        assert!(out_dir.join(format!("{method}_model.json")).is_file());
    }

    let train_out = dir.path().join("trained");
    let train_config = dir.path().join("train.json");
    write_file(
        &train_config,
        &json!({
            "train_csv": dir.path().join("warp/warped.csv"),
            "test_csv": test_csv,
            "params": small_params(),
            "bootstrap_replicates": 40,
            "out_dir": train_out
        }),
    );
    run_ok(bin().args(["train", "--config"]).arg(&train_config));
    assert!(train_out.join("model.json").is_file());
    let metrics: Value =
        serde_json::from_str(&std::fs::read_to_string(train_out.join("metrics.json")).unwrap())
            .unwrap();
    let auc = metrics["auc"].as_f64().unwrap();
    assert!((0.5..=1.0).contains(&auc), "auc {auc}");

    let tradeoff_out = dir.path().join("tradeoff");
    let tradeoff_config = dir.path().join("tradeoff.json");
    write_file(
        &tradeoff_config,
        &json!({
            "train_csv": train_csv,
            "test_csv": test_csv,
            "extra_worlds": [{"name": "warped", "path": dir.path().join("warp/warped.csv")}],
            "params": small_params(),
            "search": small_search(),
            "curve": small_curve(),
            "out_dir": tradeoff_out
        }),
    );
    run_ok(bin().args(["tradeoff", "--config"]).arg(&tradeoff_config));
    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(tradeoff_out.join("lambda_star.json")).unwrap(),
    )
    .unwrap();
    assert!(report["lambda_star"].as_f64().unwrap() >= 0.0);
    assert_eq!(report["relations"].as_array().unwrap().len(), 2, "test + warped");
    let curves = std::fs::read_to_string(tradeoff_out.join("curves.csv")).unwrap();
    assert!(curves.starts_with("world,w,lambda,fairness,auc,ci_lo,ci_hi"));
    // 2 worlds x 3 sweep points
    assert_eq!(curves.lines().count(), 1 + 2 * 3);
}

fn study_config(out_dir: &Path, jobs: u64) -> Value {
    json!({
        "n": 400,
        "iterations": 2,
        "train_fraction": 0.7,
        "params": small_params(),
        "tune": null,
        "search": small_search(),
        "curve": small_curve(),
        "threshold": 0.5,
        "bins": 10,
        "master_seed": 5,
        "out_dir": out_dir,
        "jobs": jobs
    })
}

#[test]
fn study_writes_artifacts_and_reruns_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let config_a = dir.path().join("study_a.json");
    write_file(&config_a, &study_config(&out_a, 1));
    run_ok(bin().args(["study", "--config"]).arg(&config_a));

    for file in ["summary.json", "table.csv", "curves.csv", "iterations/iter_000.json"] {
        assert!(out_a.join(file).is_file(), "{file} missing");
    }

    // second run: different out_dir, parallel workers via the flag override
    let out_b = dir.path().join("b");
    let config_b = dir.path().join("study_b.json");
    write_file(&config_b, &study_config(&out_b, 1));
    run_ok(bin().args(["study", "--config"]).arg(&config_b).args(["--jobs", "2"]));

    let a = std::fs::read(out_a.join("summary.json")).unwrap();
    let b = std::fs::read(out_b.join("summary.json")).unwrap();
    assert_eq!(a, b, "same master seed must give byte-identical summaries");

    // report renders the per-world table from the summary
    let output = run_ok(bin()
        .args(["report", "--in"])
        .arg(out_a.join("summary.json"))
        .args(["--format", "md"]));
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("| World |"), "{text}");
    for world in ["real", "find", "adapted", "warped"] {
        assert!(text.contains(&format!("| {world} |")), "missing row for {world}: {text}");
    }
}

#[test]
fn hmda_prepare_synthesizes_and_encodes_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hmda");
    let config = dir.path().join("prepare.json");
    write_file(&config, &json!({ "out_dir": out, "keep_raw": true }));
    run_ok(bin().args(["hmda-prepare", "--config"]).arg(&config));

    for file in ["encoded.csv", "encoded.schema.json", "encode_report.json", "rules.json", "raw_fixture.csv"] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("encode_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["kept_rows"].as_u64().unwrap(), 83_808);
    assert_eq!(report["input_rows"].as_u64().unwrap(), 87_808);
}

#[test]
fn errors_are_machine_readable_with_exit_classes() {
    let dir = tempfile::tempdir().unwrap();

    // missing config file: data class (3)
    let (code, err) = run_err(bin().args(["study", "--config", "/nonexistent/c.json"]));
    assert_eq!(code, 3);
    assert_eq!(err["error"]["kind"], "io");
    assert_eq!(err["error"]["exit_class"], 3);

    // malformed JSON: config class (2)
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ not json").unwrap();
    let (code, err) = run_err(bin().args(["simulate", "--config"]).arg(&broken));
    assert_eq!(code, 2);
    assert_eq!(err["error"]["kind"], "json");

    // structurally valid config missing a required path: config class (2)
    let empty = dir.path().join("empty.json");
    write_file(&empty, &json!({}));
    let (code, err) = run_err(bin().args(["preprocess", "--config"]).arg(&empty));
    assert_eq!(code, 2);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("train_csv"));

    // a validation failure inside the library: bad epsilon (2)
    let bad_eps = dir.path().join("bad_eps.json");
    let mut cfg = study_config(&dir.path().join("out"), 1);
    cfg["search"]["epsilon"] = json!(0.0);
    write_file(&bad_eps, &cfg);
    let (code, err) = run_err(bin().args(["study", "--config"]).arg(&bad_eps));
    assert_eq!(code, 2);
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let output = bin().arg("frobnicate").output().unwrap();
    assert_eq!(output.status.code(), Some(2), "clap usage errors use the config class");
}
