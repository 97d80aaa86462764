//! Integration tests against the installed binary: exit codes, artifact
//! layout, and the stdout metrics protocol.

use std::path::Path;
use std::process::Command;

fn simopt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simopt"))
}

fn write_surrogate_config(dir: &Path, out: &Path) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        format!(
            r#"
seed = 3
out_dir = "{}"
resource_sample_ms = 50

[[parameter]]
name = "x"
role = "optimization"
min = 0.0
max = 1.0

[[objective]]
name = "sphere"
direction = "minimize"

[optimizer]
algorithm = "pso"
population = 6
max_iter = 10

[evaluator]
kind = "surrogate"
"#,
            out.display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn simulate_output_is_deterministic_and_protocol_clean() {
    let run = || {
        simopt()
            .args(["simulate", "--seed", "5", "--blocks", "30", "--nodes", "120"])
            .output()
            .unwrap()
    };
    let a = run();
    let b = run();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same flags and seed must print the same bytes");
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.lines().count() >= 2);
    for line in text.lines() {
        assert!(line.starts_with("metric:"), "stray stdout line: {line}");
    }
}

#[test]
fn optimize_writes_fixed_artifact_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_surrogate_config(dir.path(), &out);
    let status = simopt()
        .args(["optimize", "--config"])
        .arg(&config)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for name in ["trace.csv", "resources.csv", "report.txt", "warmstart-appended.txt"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
}

#[test]
fn invalid_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        r#"
[[parameter]]
name = "x"
role = "sideways"
min = 0.0
max = 1.0

[[objective]]
name = "y"
direction = "minimize"

[optimizer]
algorithm = "pso"

[evaluator]
kind = "surrogate"
"#,
    )
    .unwrap();
    let output = simopt()
        .args(["optimize", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("parameter[0].role"), "stderr: {stderr}");
}

#[test]
fn missing_config_file_exits_with_one() {
    let output = simopt()
        .args(["optimize", "--config", "/definitely/not/there.toml"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn unwritable_output_directory_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_surrogate_config(dir.path(), &out);
    let output = simopt()
        .args(["optimize", "--config"])
        .arg(&config)
        .args(["--out", "/dev/null/nested"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_flag_exits_with_one() {
    let output = simopt().args(["simulate", "--bogus"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn warmstart_db_list_on_missing_store_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let output = simopt()
        .args(["warmstart-db", "--warmstart-db"])
        .arg(dir.path().join("none.jsonl"))
        .arg("list")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&output.stdout).contains("0 record(s)"));
}

#[test]
fn ablate_smoke_emits_parseable_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ablation");
    let config = dir.path().join("ablate.toml");
    std::fs::write(
        &config,
        format!(
            r#"
seed = 17
out_dir = "{}"
resource_sample_ms = 20

[[parameter]]
name = "x"
role = "optimization"
min = 0.0
max = 1.0

[[objective]]
name = "sphere"
direction = "minimize"

[optimizer]
algorithm = "pso"
population = 6
max_iter = 20

[evaluator]
kind = "surrogate"
delay_ms = 0.2

[cmp]
enabled = true
workers = 2
"#,
            out.display()
        ),
    )
    .unwrap();
    let output = simopt()
        .args(["ablate", "--config"])
        .arg(&config)
        .args(["--replications", "1"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let csv = std::fs::read_to_string(out.join("ablation.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "replication,test,group,algorithm,ws,cmp,toc_s,acru,converged,iterations"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12, "one row per optimization test");
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 10);
        fields[6].parse::<f64>().unwrap();
        assert!(fields[8] == "true" || fields[8] == "false");
    }
    assert!(out.join("ablation.txt").exists());
    let table = String::from_utf8_lossy(&output.stdout);
    assert!(table.contains("group  ws   cmp"), "stdout: {table}");
}
