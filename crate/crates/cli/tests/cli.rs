use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lss-eval")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn golden(file: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/golden")
        .join(file)
        .display()
        .to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_zero_violations() {
    let o = run(&["validate", "--data", &golden("test.jsonl")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0 violations");
}

#[test]
fn validate_flags_bad_lss_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(
        dir.path(),
        "bad.jsonl",
        r#"{"id":"x","reference":"r","claim":"the queen died","lss":"died queen","split":"test"}"#,
    );
    let o = run(&["validate", "--data", &data]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).ends_with("1 violations\n"));
}

#[test]
fn score_conventions() {
    assert_eq!(
        stdout(&run(&["score", "--claim", "The Queen died.", "--lss", ""])).trim(),
        "0.0"
    );
    assert_eq!(
        stdout(&run(&[
            "score",
            "--claim",
            "The Queen died.",
            "--lss",
            "the queen died ."
        ]))
        .trim(),
        "1.0"
    );
}

#[test]
fn exit_codes_for_usage_and_data_errors() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["score", "--claim", "x"]).status.code(), Some(1));
    assert_eq!(
        run(&["score", "--claim", "x", "--lss", "x", "--bleu-max-n", "7"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["validate", "--data", "/definitely/missing.jsonl"])
            .status
            .code(),
        Some(2)
    );
    let o = run(&[
        "generate",
        "--data",
        &golden("test.jsonl"),
        "--out",
        "/tmp/unused.jsonl",
        "--generator",
        "remote",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--endpoint"));
}

#[test]
fn help_for_every_command() {
    let commands: &[&[&str]] = &[
        &[],
        &["dataset"],
        &["dataset", "clean"],
        &["dataset", "balance"],
        &["dataset", "adjudicate"],
        &["dataset", "stats"],
        &["dataset", "filter-length"],
        &["score"],
        &["generate"],
        &["eval"],
        &["eval", "generation"],
        &["eval", "correlation"],
        &["eval", "compare-models"],
        &["validate"],
    ];
    for c in commands {
        let mut args = c.to_vec();
        args.push("--help");
        let o = run(&args);
        assert!(o.status.success(), "{c:?}");
        assert!(stdout(&o).contains("Usage"), "{c:?}");
    }
}

#[test]
fn output_never_overwrites_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    std::fs::copy(golden("test.jsonl"), &data).unwrap();
    let before = std::fs::read(&data).unwrap();
    let o = run(&["dataset", "clean", "--data", s(&data), "--out", s(&data)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(std::fs::read(&data).unwrap(), before);
}

#[test]
fn dataset_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let raw = write(
        dir.path(),
        "raw.jsonl",
        concat!(
            r#"{"id":"1","reference":"Paris\tis  in France.","claim":"Paris is in France​.","lss":"Paris is in France.","split":"test"}"#,
            "\n",
            r#"{"id":"2","reference":"continued from before.","claim":"X.","lss":"","split":"test"}"#,
            "\n",
            r#"{"id":"3","reference":"Rome is in Italy.","claim":"Rome is Spanish.","lss":"Rome is","split":"train"}"#,
            "\n",
        ),
    );
    let cleaned = dir.path().join("clean.jsonl");
    let o = run(&["dataset", "clean", "--data", &raw, "--out", s(&cleaned)]);
    assert!(o.status.success());
    let report = stdout(&o);
    assert!(report.contains("dropped_mid_sentence: 1"), "{report}");
    let text = std::fs::read_to_string(&cleaned).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains(r#""reference":"Paris is in France.""#));

    let o = run(&["dataset", "stats", "--data", s(&cleaned)]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("examples\t2\n"));

    let balanced = dir.path().join("balanced.jsonl");
    let o = run(&[
        "dataset",
        "balance",
        "--data",
        s(&cleaned),
        "--out",
        s(&balanced),
        "--target",
        "0",
    ]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read_to_string(&balanced).unwrap().lines().count(),
        1
    );

    let short = dir.path().join("short.jsonl");
    let o = run(&[
        "dataset",
        "filter-length",
        "--data",
        s(&cleaned),
        "--out",
        s(&short),
        "--max-tokens",
        "9",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("removed: 1"));
}

#[test]
fn adjudicate_writes_consensus_and_unresolved() {
    let dir = tempfile::tempdir().unwrap();
    let ann = |l: [&str; 3]| {
        l.iter()
            .enumerate()
            .map(|(i, x)| serde_json::json!({"annotator_id": format!("a{i}"), "lss": x, "rating": 3 + i}))
            .collect::<Vec<_>>()
    };
    let records = [
        serde_json::json!({"id":"1","reference":"r","claim":"the queen died","annotations": ann(["the queen", "The Queen", "queen"])}),
        serde_json::json!({"id":"2","reference":"r","claim":"the queen died","annotations": ann(["the", "queen", "died"])}),
    ];
    let input = write(
        dir.path(),
        "raw.jsonl",
        &records.iter().map(|r| format!("{r}\n")).collect::<String>(),
    );
    let out = dir.path().join("out.jsonl");
    let unresolved = dir.path().join("todo.jsonl");
    let o = run(&[
        "dataset",
        "adjudicate",
        "--data",
        &input,
        "--out",
        s(&out),
        "--unresolved",
        s(&unresolved),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.contains("consensus: 1") && text.contains("two_same: 50.00"),
        "{text}"
    );
    let consensus: Value =
        serde_json::from_str(std::fs::read_to_string(&out).unwrap().trim()).unwrap();
    assert_eq!(consensus["lss"], "the queen");
    assert_eq!(consensus["rating"], 4);
    assert!(std::fs::read_to_string(&unresolved)
        .unwrap()
        .contains(r#""id":"2""#));
}

#[test]
fn generate_replay_and_missing_ids() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gen.jsonl");
    let o = run(&[
        "generate",
        "--data",
        &golden("test.jsonl"),
        "--generator",
        "replay",
        "--replay-file",
        &golden("t5.jsonl"),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<Value> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 20);
    assert_eq!(lines[1]["was_repaired"], true);

    let partial = write(
        dir.path(),
        "partial.jsonl",
        "{\"id\":\"g01\",\"raw_output\":\"x\"}\n",
    );
    let o = run(&[
        "generate",
        "--data",
        &golden("test.jsonl"),
        "--generator",
        "replay",
        "--replay-file",
        &partial,
        "--out",
        s(&dir.path().join("p.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("failed: 19"));
}

#[test]
fn unreachable_remote_is_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    let o = run(&[
        "generate",
        "--data",
        &golden("test.jsonl"),
        "--generator",
        "remote",
        "--endpoint",
        &endpoint,
        "--retries",
        "0",
        "--out",
        s(&dir.path().join("r.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn pairs_mode_speaks_the_scorer_protocol() {
    let mut child = Command::new(bin())
        .args(["score", "--pairs", "--metric", "ROUGE-L"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"{\"id\":\"p1\",\"text_a\":\"the queen\",\"text_b\":\"the queen died\"}\n\n{\"id\":\"p2\",\"text_a\":\"\",\"text_b\":\"x\"}\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    let lines: Vec<Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["id"], "p1");
    assert!((lines[0]["score"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(lines[1]["score"], 0.0);
}

/// The binary's own pair mode, plugged in as an external scorer, must
/// reproduce the built-in BLEU row exactly.
#[test]
fn external_scorer_self_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let scorer = format!("selfbleu={} score --pairs --metric bleu", bin());
    let o = run(&[
        "eval",
        "correlation",
        "--data",
        &golden("test.jsonl"),
        "--generator",
        "replay",
        "--replay-file",
        &golden("t5.jsonl"),
        "--scorer",
        &scorer,
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("correlation.json")).unwrap(),
    )
    .unwrap();
    let rows = report["rows"].as_array().unwrap();
    let row = |name: &str| rows.iter().find(|r| r["metric"] == name).unwrap()["cells"].clone();
    assert_eq!(row("selfbleu"), row("BLEU"));

    let bad = format!("broken={} score --pairs --metric no-such-metric", bin());
    let o = run(&[
        "eval",
        "correlation",
        "--data",
        &golden("test.jsonl"),
        "--scorer",
        &bad,
        "--out",
        s(&dir.path().join("b")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn correlation_replay_of_gold_matches_human_columns() {
    let dir = tempfile::tempdir().unwrap();
    let lines: String = std::fs::read_to_string(golden("test.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            format!(
                "{}\n",
                serde_json::json!({"id": v["id"], "raw_output": v["lss"]})
            )
        })
        .collect();
    let replay = write(dir.path(), "gold.jsonl", &lines);
    let out = dir.path().join("rep");
    let o = run(&[
        "eval",
        "correlation",
        "--data",
        &golden("test.jsonl"),
        "--generator",
        "replay",
        "--replay-file",
        &replay,
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("correlation.json")).unwrap())
            .unwrap();
    for row in report["rows"].as_array().unwrap() {
        assert_eq!(row["cells"][1], row["cells"][2], "{}", row["metric"]);
    }
    for ext in ["md", "csv", "json"] {
        assert!(out.join(format!("correlation.{ext}")).is_file());
    }
}

#[test]
fn eval_generation_and_compare_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gen");
    let t5 = format!("t5=replay:{}", golden("t5.jsonl"));
    let o = run(&[
        "eval",
        "generation",
        "--data",
        &golden("test.jsonl"),
        "--system",
        &t5,
        "--system",
        "lcs=extractive",
        "--system",
        "none=empty",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("generation.csv")).unwrap();
    assert!(csv.starts_with("system,variant,n,failed,repaired,rouge1,"));
    assert_eq!(csv.lines().count(), 7);

    let corpus = write(
        dir.path(),
        "news.jsonl",
        &[
            serde_json::json!({"id":"d1","document":"The council approved the budget on Monday.","summaries":{"copy":"The council approved the budget.","wild":"Aliens approved a budget."}}),
            serde_json::json!({"id":"d2","document":"Rain is expected this weekend.","summaries":{"copy":"Rain is expected.","wild":"Snow fell all year."}}),
        ]
        .iter()
        .map(|v| format!("{v}\n"))
        .collect::<String>(),
    );
    let out = dir.path().join("cmp");
    let news = format!("news={corpus}");
    let o = run(&[
        "eval",
        "compare-models",
        "--corpus",
        &news,
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("compare-models.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(
        rows[0],
        "corpus,model,size,scored,length_filtered,failed,mean,min,median,max"
    );
    assert!(rows[1].starts_with("news,copy,2,2,0,0,1,"), "{}", rows[1]);
    assert!(rows[2].starts_with("news,wild,2,2,0,0,"), "{}", rows[2]);
}
