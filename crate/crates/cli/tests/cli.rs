use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn eventaug(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eventaug"))
        .arg("--config")
        .arg(fixtures().join("demo.toml"))
        .arg("--output-dir")
        .arg(out)
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "status {}: {}", o.status, String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn missing_corpus_exits_2_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let o = eventaug(dir.path(), &["index", "--corpus", p(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8(o.stderr).unwrap();
    let line: Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(line["stage"], "index");
    assert_eq!(line["path"], p(&missing));
    assert!(line["error"].as_str().unwrap().contains("nope.txt"));
}

#[test]
fn malformed_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_eventaug")).arg("--config").arg(&cfg).arg("pipeline").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let line: Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().lines().last().unwrap()).unwrap();
    assert_eq!(line["stage"], "config");
    assert!(line["path"].is_null());
}

#[test]
fn agent_flag_takes_stub_or_configured_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = eventaug(dir.path(), &["--agent", "gpt-x", "pipeline"]);
    assert_eq!(o.status.code(), Some(1));
    let line: Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().lines().last().unwrap()).unwrap();
    assert!(line["error"].as_str().unwrap().contains("`gpt-x`"), "{line}");
    // The configured chat endpoint has no URL, so selecting it fails at generation.
    let o = eventaug(dir.path(), &["--agent", "chat", "--retries", "0", "pipeline"]);
    assert_eq!(o.status.code(), Some(1));
    let line: Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().lines().last().unwrap()).unwrap();
    assert_eq!(line["stage"], "generate", "{line}");
}

#[test]
fn score_reports_table_and_machine() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.jsonl");
    let pred = dir.path().join("pred.jsonl");
    std::fs::write(
        &gold,
        r#"{"sentence_id":"s1","text":"The court clear him.","mentions":[{"event_type":"Justice:Pardon","trigger":{"text":"clear","start":10,"end":15},"arguments":[{"role":"Adjudicator","text":"court","start":4,"end":9}]}]}
"#,
    )
    .unwrap();
    std::fs::write(
        &pred,
        r#"{"sentence_id":"s1","mentions":[{"event_type":"Justice:Pardon","trigger":{"text":"clear","start":10,"end":15},"arguments":[{"role":"Defendant","text":"court","start":4,"end":9}]},{"event_type":"Justice:Pardon","trigger":{"text":"him","start":16,"end":19},"arguments":[]}]}
"#,
    )
    .unwrap();
    let table = ok(&eventaug(dir.path(), &["score", "--gold", p(&gold), "--pred", p(&pred)]));
    assert_eq!(table, "Tri-I\tTri-C\tArg-I\tArg-C\n66.7\t66.7\t100.0\t0.0\n");
    let machine = ok(&eventaug(dir.path(), &["score", "--gold", p(&gold), "--pred", p(&pred), "--format", "machine"]));
    let s = eventaug::eval::parse_machine_report(&machine).unwrap();
    assert_eq!((s.tri_i.matched, s.tri_i.gold, s.tri_i.predicted), (1, 1, 2));
    assert_eq!(s.arg_c.f1, 0.0);

    let stray = dir.path().join("stray.jsonl");
    std::fs::write(&stray, "{\"sentence_id\":\"zz\",\"mentions\":[]}\n").unwrap();
    let o = eventaug(dir.path(), &["score", "--gold", p(&gold), "--pred", p(&stray)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sample_fewshot_respects_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("few.jsonl");
    let stdout = ok(&eventaug(dir.path(), &["sample-fewshot", "--output", p(&out), "--n", "3", "--k", "2"]));
    assert_eq!(stdout.lines().count(), 3);
    assert!(stdout.starts_with("Justice:Convict\t7 in data\t2 sampled"), "{stdout}");
    let mut counts = std::collections::BTreeMap::new();
    for l in std::fs::read_to_string(&out).unwrap().lines() {
        let v: Value = serde_json::from_str(l).unwrap();
        for m in v["mentions"].as_array().unwrap() {
            *counts.entry(m["event_type"].as_str().unwrap().to_owned()).or_insert(0) += 1;
        }
    }
    assert_eq!(counts.len(), 3);
    assert!(counts.values().all(|&c| c <= 2));
}

#[test]
fn stages_chain_like_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let f = |n: &str| d.join(n);
    let fewshot = f("fewshot.jsonl");
    ok(&eventaug(d, &["sample-fewshot", "--output", p(&fewshot)]));
    let indexed = ok(&eventaug(d, &["index"]));
    assert!(indexed.starts_with("50 sentences indexed (lemmatized)"), "{indexed}");
    assert!(f("corpus.idx").exists());
    ok(&eventaug(d, &["retrieve", "--input", p(&fewshot), "--output", p(&f("retrieved.jsonl"))]));
    ok(&eventaug(d, &["enrich", "--input", p(&f("retrieved.jsonl")), "--output", p(&f("enriched.jsonl"))]));
    ok(&eventaug(d, &["generate", "--input", p(&f("enriched.jsonl")), "--output", p(&f("raw.jsonl"))]));
    let summary = ok(&eventaug(
        d,
        &[
            "validate",
            "--input",
            p(&f("raw.jsonl")),
            "--output",
            p(&f("generated.jsonl")),
            "--passed",
            p(&f("passed.jsonl")),
            "--pairs",
            p(&f("validator_pairs.jsonl")),
        ],
    ));
    assert!(summary.contains("positive\t"), "{summary}");
    ok(&eventaug(d, &["curate", "--input", p(&f("generated.jsonl")), "--novel", p(&fewshot)]));
    let audit = ok(&eventaug(d, &["audit", "--before", p(&fewshot), "--generated", p(&f("passed.jsonl")), "--format", "json"]));
    let report: Value = serde_json::from_str(&audit).unwrap();
    assert!(report["unique_fillers_after"].as_u64() > report["unique_fillers_before"].as_u64());

    let plans = std::fs::read_to_string(f("epoch_plans.jsonl")).unwrap();
    assert_eq!(plans.lines().count(), 3);
    for (epoch, line) in plans.lines().enumerate() {
        let plan: Value = serde_json::from_str(line).unwrap();
        assert_eq!(plan["epoch"], epoch);
    }

    // The same stages run as one command produce the same files.
    let whole = tempfile::tempdir().unwrap();
    ok(&eventaug(whole.path(), &["pipeline"]));
    for name in ["fewshot.jsonl", "retrieved.jsonl", "enriched.jsonl", "generated.jsonl", "gen_validated.jsonl", "discarded.jsonl", "epoch_plans.jsonl", "validator_pairs.jsonl"] {
        assert_eq!(
            std::fs::read(d.join(name)).unwrap(),
            std::fs::read(whole.path().join(name)).unwrap(),
            "{name} differs between staged and whole runs"
        );
    }
}
