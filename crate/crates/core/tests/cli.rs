//! Drives the `dca-lab` binary end to end.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dca_lab::cli::{config_from_json, EXIT_BAD_ARGS, EXIT_CONFIG, EXIT_DATASET, EXIT_IO};
use dca_lab::engine::SimConfig;

fn dca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dca-lab"))
        .args(args)
        .env_remove("DCA_LAB_OUT")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_config_matches_defaults_and_runs_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    let out = dca(&["gen-config", "--out", path_str(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let parsed = config_from_json(&fs::read_to_string(&cfg).unwrap()).unwrap();
    assert_eq!(parsed, SimConfig::default());

    let data = common::wbc_path();
    let with_cfg = dir.path().join("with");
    let without = dir.path().join("without");
    let a = dca(&[
        "run",
        "--data",
        path_str(&data),
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&with_cfg),
    ]);
    let b = dca(&[
        "run",
        "--data",
        path_str(&data),
        "--out",
        path_str(&without),
    ]);
    assert!(a.status.success() && b.status.success());
    for name in ["results.csv", "histogram.csv", "report.json"] {
        assert_eq!(
            fs::read(with_cfg.join(name)).unwrap(),
            fs::read(without.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn gen_config_unwritable_path_names_the_path() {
    let out = dca(&["gen-config", "--out", "/nonexistent-dir/sub/config.json"]);
    assert_eq!(out.status.code(), Some(EXIT_IO as i32));
    assert!(stderr(&out).contains("/nonexistent-dir/sub/config.json"));
}

#[test]
fn run_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("nested/out");
    let data = common::wbc_path();
    let out = dca(&[
        "run",
        "--data",
        path_str(&data),
        "--out",
        path_str(&out_dir),
        "--trace",
        "--seed",
        "7",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let results = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let mut lines = results.lines();
    assert_eq!(lines.next(), Some("antigen_id,mcav,predicted,actual"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 683);
    for row in &rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 4);
        assert_eq!(f[1].split('.').nth(1).map(str::len), Some(6));
        assert!(["normal", "anomalous"].contains(&f[2]) && ["normal", "anomalous"].contains(&f[3]));
    }

    let histogram = fs::read_to_string(out_dir.join("histogram.csv")).unwrap();
    assert!(histogram.starts_with("bin_lo,bin_hi,count\n"));
    let total: usize = histogram
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 683);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["config"]["seed"], 7);
    assert_eq!(report["config"]["population_size"], 100);
    assert_eq!(report["dataset"]["records_produced"], 683);
    let acc = report["metrics"]["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert_eq!(report["histogram"]["edges"].as_array().unwrap().len(), 11);
    assert!(report["confusion"]["fn"].is_u64());

    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("tick,event_kind,ids,values\n"));
    assert_eq!(
        trace.lines().filter(|l| l.contains(",classified,")).count(),
        683
    );
}

#[test]
fn report_config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::wbc_path();
    let first = dir.path().join("first");
    assert!(dca(&[
        "run",
        "--data",
        path_str(&data),
        "--seed",
        "123",
        "--out",
        path_str(&first)
    ])
    .status
    .success());

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(first.join("report.json")).unwrap()).unwrap();
    let echoed = dir.path().join("echo.json");
    fs::write(&echoed, serde_json::to_string(&report["config"]).unwrap()).unwrap();

    let second = dir.path().join("second");
    assert!(dca(&[
        "run",
        "--data",
        path_str(&data),
        "--config",
        path_str(&echoed),
        "--out",
        path_str(&second)
    ])
    .status
    .success());
    assert_eq!(
        fs::read(first.join("results.csv")).unwrap(),
        fs::read(second.join("results.csv")).unwrap()
    );
}

#[test]
fn out_dir_defaults_to_env_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("from-env");
    let flag_out = dir.path().join("from-flag");
    let data = common::wbc_path();

    let run = |extra: &[&str]| {
        let mut args = vec!["run", "--data", path_str(&data)];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_dca-lab"))
            .args(&args)
            .env("DCA_LAB_OUT", &env_out)
            .output()
            .unwrap()
    };
    assert!(run(&[]).status.success());
    assert!(env_out.join("results.csv").exists());

    fs::remove_dir_all(&env_out).unwrap();
    assert!(run(&["--out", path_str(&flag_out)]).status.success());
    assert!(flag_out.join("results.csv").exists());
    assert!(!env_out.exists());
}

#[test]
fn missing_data_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dca(&[
        "run",
        "--data",
        "/no/such/file.data",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_IO as i32));
    assert!(stderr(&out).contains("/no/such/file.data"));
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");

    let bad_args = dca(&["run"]);
    assert_eq!(bad_args.status.code(), Some(EXIT_BAD_ARGS as i32));

    let bad_data = dir.path().join("bad.data");
    fs::write(&bad_data, "1000025,5,1,1,1,2,1,3,1,1,2\n1,2,3\n").unwrap();
    let out = dca(&[
        "run",
        "--data",
        path_str(&bad_data),
        "--out",
        path_str(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_DATASET as i32));
    assert!(stderr(&out).contains("line 2"));

    let bad_cfg = dir.path().join("bad.json");
    let cfg = SimConfig {
        dcs_per_antigen: SimConfig::default().population_size + 1,
        ..SimConfig::default()
    };
    fs::write(&bad_cfg, serde_json::to_string(&cfg).unwrap()).unwrap();
    let data = common::wbc_path();
    let out = dca(&[
        "run",
        "--data",
        path_str(&data),
        "--config",
        path_str(&bad_cfg),
        "--out",
        path_str(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG as i32));

    fs::write(&bad_cfg, "{ not json").unwrap();
    let out = dca(&[
        "run",
        "--data",
        path_str(&data),
        "--config",
        path_str(&bad_cfg),
        "--out",
        path_str(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG as i32));
    assert!(!out_dir.join("results.csv").exists());
}
