use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lddpo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lddpo")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/curation").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Synthesizes and curates a small corpus under `dir`.
fn prepare(dir: &Path, seed: &str, queries: &str) -> PathBuf {
    let data = dir.join("data");
    let o = lddpo(&["synth", "--seed", seed, "--queries", queries, "--eval-tasks", "40", "--out-dir", s(&data)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pairs = dir.join("pairs.jsonl");
    let o = lddpo(&[
        "curate",
        "--input",
        s(&data.join("queries.jsonl")),
        "--arbiter",
        s(&data.join("arbiter.jsonl")),
        "--output",
        s(&pairs),
        "--report",
        s(&dir.join("report.json")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    pairs
}

#[test]
fn curate_reproduces_golden_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = (dir.path().join("pairs.jsonl"), dir.path().join("report.json"));
    let o = lddpo(&[
        "curate",
        "--input",
        s(&fixture("queries.jsonl")),
        "--arbiter",
        s(&fixture("arbiter.jsonl")),
        "--output",
        s(&out),
        "--report",
        s(&report),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&out).unwrap(), fs::read(fixture("expected_pairs.jsonl")).unwrap());
    assert_eq!(fs::read(&report).unwrap(), fs::read(fixture("expected_report.json")).unwrap());
    assert!(stderr(&o).contains("6 queries in, 1 pairs out"));
}

#[test]
fn curate_empty_input_gives_empty_output_and_zero_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.jsonl");
    fs::write(&input, "").unwrap();
    let (out, report) = (dir.path().join("pairs.jsonl"), dir.path().join("report.json"));
    let o = lddpo(&["curate", "--input", s(&input), "--output", s(&out), "--report", s(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["input"], 0);
    assert_eq!(r["emitted"], 0);
    for stage in r["stages"].as_array().unwrap() {
        assert_eq!(stage["input"], 0);
        assert_eq!(stage["removed"], 0);
    }
}

#[test]
fn curate_duplicate_id_fails_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let line = fs::read_to_string(fixture("queries.jsonl")).unwrap().lines().next().unwrap().to_string();
    let input = dir.path().join("dup.jsonl");
    fs::write(&input, format!("{line}\n{line}\n")).unwrap();
    let o = lddpo(&[
        "curate",
        "--input",
        s(&input),
        "--output",
        s(&dir.path().join("p.jsonl")),
        "--report",
        s(&dir.path().join("r.json")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("q6_flip"), "{}", stderr(&o));
}

#[test]
fn curate_malformed_line_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let good = fs::read_to_string(fixture("queries.jsonl")).unwrap().lines().next().unwrap().to_string();
    let input = dir.path().join("bad.jsonl");
    fs::write(&input, format!("{good}\n{{\"id\": 3\n")).unwrap();
    let o = lddpo(&["curate", "--input", s(&input), "--output", "/dev/null", "--report", "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(lddpo(&["train", "--pairs", "x.jsonl"]).status.code(), Some(1));
    assert_eq!(lddpo(&["train", "--seed", "1", "--pairs", "x", "--beta", "-1"]).status.code(), Some(1));
    assert_eq!(lddpo(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lddpo(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_pairs_file_is_a_data_error() {
    let o = lddpo(&["train", "--seed", "1", "--pairs", "/nonexistent/pairs.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn diverging_run_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = prepare(dir.path(), "3", "200");
    let o = lddpo(&["train", "--seed", "3", "--pairs", s(&pairs), "--peak-lr", "1e308", "--warmup-frac", "0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = prepare(dir.path(), "4", "300");
    let config = dir.path().join("run.cfg");
    fs::write(&config, format!("# toy run\npairs = {}\nvariant = dpo\nbatch-size = 1000\n", s(&pairs))).unwrap();
    let m1 = dir.path().join("m1.csv");
    let o = lddpo(&["train", "--seed", "4", "--config", s(&config), "--metrics-out", s(&m1)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&m1).unwrap().lines().count(), 2);
    let m2 = dir.path().join("m2.csv");
    let o = lddpo(&["train", "--seed", "4", "--config", s(&config), "--batch-size", "32", "--metrics-out", s(&m2)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(&m2).unwrap().lines().count() > 2);
}

#[test]
fn zero_lr_checkpoint_equals_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = prepare(dir.path(), "5", "200");
    let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    for (lr, out) in [("0", &a), ("0", &b)] {
        let o = lddpo(&["train", "--seed", "5", "--pairs", s(&pairs), "--peak-lr", lr, "--checkpoint-out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ck = lddpo_core::checkpoint::Checkpoint::load(&a).unwrap();
    let init = lddpo_core::tinylm::init_params(5, ck.params.vocab, 16, 0.1).unwrap();
    assert_eq!(ck.params, init);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn alpha_one_metrics_match_dpo() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = prepare(dir.path(), "6", "300");
    let (a, b) = (dir.path().join("dpo.csv"), dir.path().join("ld.csv"));
    let base = ["train", "--seed", "6", "--pairs", s(&pairs)];
    let o = lddpo(&[&base[..], &["--variant", "dpo", "--metrics-out", s(&a)]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = lddpo(&[&base[..], &["--variant", "lddpo", "--alpha", "1", "--metrics-out", s(&b)]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn eval_and_compare_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = prepare(dir.path(), "7", "300");
    let data = dir.path().join("data");
    let tasks = data.join("eval_tasks.jsonl");
    let base = dir.path().join("base.bin");
    let o = lddpo(&["sft", "--seed", "7", "--tasks", s(&data.join("train_tasks.jsonl")), "--out", s(&base)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let report = dir.path().join("eval.json");
    let o = lddpo(&["eval", "--checkpoint", s(&base), "--tasks", s(&tasks), "--report", s(&report)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("pass@1 "));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["outcomes"].as_array().unwrap().len(), 40);

    let common = ["compare", "--seed", "7", "--pairs", s(&pairs), "--tasks", s(&tasks), "--init-checkpoint", s(&base)];
    let same = dir.path().join("same.json");
    let o = lddpo(&[&common[..], &["--a", "variant=lddpo", "--report", s(&same)]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&same).unwrap()).unwrap();
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for key in ["pass_at_1", "mean_generation_length", "delta_pass_at_1", "delta_length"] {
        assert_eq!(rows[1][key], rows[2][key], "{key}");
    }

    let o = lddpo(&common);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("A: dpo") && table.contains("B: lddpo(alpha=0.3)"), "{table}");

    assert_eq!(lddpo(&["compare", "--pairs", s(&pairs), "--tasks", s(&tasks)]).status.code(), Some(1));
}
