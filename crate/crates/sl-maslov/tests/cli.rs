use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sl_maslov::report::csv_body;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sl-maslov"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SL_MASLOV_OUT")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let body = csv_body(&fs::read_to_string(path).unwrap());
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let mut rows = vec![r.headers().unwrap().iter().map(str::to_string).collect()];
    rows.extend(
        r.records()
            .map(|rec| rec.unwrap().iter().map(str::to_string).collect()),
    );
    rows
}

#[test]
fn solve_free_problem_lists_squares() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "--problem",
            "bundled:free1d",
            "--command",
            "solve",
            "--count",
            "3",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = csv_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(
        rows[0],
        ["j", "lambda", "multiplicity", "method", "residual"]
    );
    let values: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(values.len(), 3);
    for (v, want) in values.iter().zip([1.0, 4.0, 9.0]) {
        assert!((v - want).abs() < 1e-8 * want, "{v} vs {want}");
    }
    let rep = json(&dir.path().join("report.json"));
    assert_eq!(rep["schema"], "sl-maslov/report/v1");
    assert_eq!(rep["status"], "ok");
    assert_eq!(rep["seed"], 0);
    assert_eq!(rep["config_hash"].as_str().unwrap().len(), 64);
    let text = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(text.contains(&format!(
        "# config_hash={}\n",
        rep["config_hash"].as_str().unwrap()
    )));
    assert!(text.contains("# seed=0\n") && text.contains("# tolerances=rank:"));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = [
        "--problem",
        "bundled:coupled2d",
        "--command",
        "solve",
        "--bc",
        "periodic",
        "--seed",
        "4",
    ];
    assert_eq!(run(a.path(), &args).status.code(), Some(0));
    assert_eq!(run(b.path(), &args).status.code(), Some(0));
    for f in ["spectrum.csv", "report.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn limit_emits_distance_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "--problem",
            "bundled:free1d",
            "--command",
            "limit",
            "--floor",
            "-1e4",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = csv_rows(&dir.path().join("dist_curve.csv"));
    assert_eq!(rows[0], ["lambda", "dist"]);
    assert!(rows.len() > 5);
    assert!(rows[1..].iter().all(|r| r.len() == 2));
    let last: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert_eq!(last, -1e4);
    assert_eq!(
        json(&dir.path().join("report.json"))["result"]["report"]["maslov_on_tail"],
        2
    );
}

#[test]
fn incompatible_range_exits_with_case_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "--problem",
            "bundled:free1d",
            "--command",
            "range",
            "--j",
            "1",
            "--r",
            "3",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let err = json(&dir.path().join("error.json"));
    assert_eq!(err["schema"], "sl-maslov/error/v1");
    assert_eq!(err["kind"], "check");
    assert_eq!(err["exit_code"], 2);
    let msg = err["message"].as_str().unwrap();
    assert!(
        msg.contains("r <= 2n = 2") && msg.contains("Case4"),
        "{msg}"
    );
    let stderr: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(stderr, err);
}

#[test]
fn range_check_passes_on_free_problem() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "--problem",
            "bundled:free1d",
            "--command",
            "range",
            "--j",
            "2",
            "--r",
            "1",
            "--samples",
            "20",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rep = json(&dir.path().join("report.json"));
    assert_eq!(rep["result"]["case"], "Case4");
    // Random samples followed by the tan-path sweep values.
    assert!(csv_rows(&dir.path().join("samples.csv")).len() > 20);
}

#[test]
fn maslov_reports_tan_path_indices() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "--problem",
            "bundled:double2d",
            "--command",
            "maslov",
            "--bc",
            "periodic",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rep = json(&dir.path().join("report.json"));
    let r = rep["result"]["r"].as_i64().unwrap();
    assert_eq!(rep["result"]["upper"]["index"].as_i64().unwrap(), -(4 - r));
    assert_eq!(rep["result"]["lower"]["index"], 0);
    assert_eq!(
        csv_rows(&dir.path().join("angles_upper.csv"))[0],
        ["t", "theta_1", "theta_2", "theta_3", "theta_4"]
    );
}

#[test]
fn jump_on_dirichlet_loop() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "--problem",
            "bundled:free1d",
            "--command",
            "jump",
            "--bc",
            "neumann",
            "--j-max",
            "3",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rep = json(&dir.path().join("report.json"));
    assert_eq!(rep["result"]["k_plus"], 2);
    assert_eq!(rep["result"]["k_minus"], 0);
    assert_eq!(csv_rows(&dir.path().join("limits.csv")).len(), 7);
}

#[test]
fn axioms_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "--problem",
            "bundled:free1d",
            "--command",
            "axioms",
            "--trials",
            "12",
            "--seed",
            "9",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(json(&dir.path().join("report.json"))["seed"], 9);
}

#[test]
fn malformed_problem_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    fs::write(&p, r#"{"n": 1, "T": "long"}"#).unwrap();
    let o = run(
        &dir.path().join("out"),
        &["--problem", p.to_str().unwrap(), "--command", "solve"],
    );
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["kind"], "parse");
    assert!(err["message"].as_str().unwrap().contains("`T`"));
}

#[test]
fn solver_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    fs::write(
        &p,
        r#"{"n": 1, "T": 1.0, "P": {"kind": "constant", "data": [[-1.0]]}}"#,
    )
    .unwrap();
    let o = run(
        &dir.path().join("out"),
        &["--problem", p.to_str().unwrap(), "--command", "solve"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&dir.path().join("out/error.json"))["kind"], "solver");
}

#[test]
fn flag_beats_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"problem": "bundled:free1d", "command": "solve", "count": 5, "bc": "neumann"}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&out, &["--config", cfg.to_str().unwrap(), "--count", "2"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = csv_rows(&out.join("spectrum.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows[1][1].parse::<f64>().unwrap().abs() < 1e-8);
}

#[test]
fn help_exits_zero() {
    let o = Command::new(env!("CARGO_BIN_EXE_sl-maslov"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("--problem"));
}
