use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qgkit::report::{AnalysisFile, Comparison, CurvesFile, ReportDocument, ScoresFile};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn qgkit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgkit"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = qgkit(args, dir);
    assert!(
        out.status.success(),
        "qgkit {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn sample() -> String {
    fixture("squad_sample.json").to_string_lossy().into_owned()
}

#[test]
fn format_reproduces_goldens() {
    let dir = tempfile::tempdir().unwrap();
    let squad = sample();
    let cases = [
        (vec!["--qpl", "oqpl", "--delim", "artificial"], "golden/oqpl_artificial.txt"),
        (vec!["--qpl", "aqpl", "--delim", "artificial"], "golden/aqpl_artificial.txt"),
        (vec!["--qpl", "oqpl", "--delim", "artificial", "--answer-aware"], "golden/oqpl_artificial_answer_aware.txt"),
    ];
    for (flags, golden) in cases {
        let mut args = vec!["format", "--input", &squad, "--output", "out.txt"];
        args.extend(flags);
        ok(&args, dir.path());
        let text = fs::read_to_string(dir.path().join("out.txt")).unwrap();
        let first = text.split_inclusive('\n').next().unwrap();
        assert_eq!(first, fs::read_to_string(fixture(golden)).unwrap(), "{golden}");
    }
}

#[test]
fn format_line_counts_and_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let squad = sample();
    let stdout = ok(
        &["format", "--input", &squad, "--qpl", "aqpl", "--delim", "number", "--output", "a.txt", "--warnings", "w.json"],
        dir.path(),
    );
    assert!(stdout.starts_with("5 lines"), "{stdout}");
    assert_eq!(fs::read_to_string(dir.path().join("a.txt")).unwrap().lines().count(), 5);
    assert_eq!(fs::read_to_string(dir.path().join("w.json")).unwrap().trim(), "[]");
}

#[test]
fn format_rejects_answer_aware_aqpl() {
    let dir = tempfile::tempdir().unwrap();
    let squad = sample();
    let out = qgkit(
        &["format", "--input", &squad, "--qpl", "aqpl", "--delim", "artificial", "--answer-aware", "--output", "x.txt"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("OQPL"));
    assert!(!dir.path().join("x.txt").exists());
}

#[test]
fn malformed_input_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\"data\": [\n  {\"title\": }\n]}").unwrap();
    let out = qgkit(
        &["format", "--input", "bad.json", "--qpl", "oqpl", "--delim", "artificial", "--output", "x.txt"],
        dir.path(),
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn full_pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let squad = sample();
    ok(&["format", "--input", &squad, "--qpl", "oqpl", "--delim", "artificial", "--output", "train.txt", "--references", "refs.jsonl"], d);
    for out in ["p1.jsonl", "p2.jsonl"] {
        ok(&["generate", "--contexts", &squad, "--backend", "mock", "--seed", "17", "--output", out], d);
    }
    let p1 = fs::read(d.join("p1.jsonl")).unwrap();
    assert_eq!(p1, fs::read(d.join("p2.jsonl")).unwrap());
    assert_eq!(p1.iter().filter(|&&b| b == b'\n').count(), 13);
    assert!(d.join("p1.jsonl.manifest.json").exists());

    ok(&["evaluate", "--predictions", "p1.jsonl", "--references", "refs.jsonl", "--output", "scores.json"], d);
    ok(&["analyze", "--predictions", "p1.jsonl", "--contexts", &squad, "--output", "analysis.json"], d);
    ok(&["report", "--scores", "scores.json", "--analysis", "analysis.json", "--out", "report.json"], d);

    let scores: ScoresFile = read_json(&d.join("scores.json"));
    assert_eq!(scores.scores.prediction_count, 13);
    let analysis: AnalysisFile = read_json(&d.join("analysis.json"));
    assert_eq!(analysis.records.len(), 13);
    let report: ReportDocument = read_json(&d.join("report.json"));
    assert!(report.verify_hash());
    assert_eq!(report.paper_reference.as_ref().unwrap().label, "OQPL Artificial");

    ok(&["report", "compare", "--a", "report.json", "--b", "report.json", "--out", "cmp.json"], d);
    let cmp: Comparison = read_json(&d.join("cmp.json"));
    assert_eq!(cmp.deltas.len(), 6);
    assert!(cmp.deltas.iter().all(|x| x.delta == 0.0));
}

#[test]
fn self_references_score_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let squad = sample();
    ok(&["format", "--input", &squad, "--qpl", "oqpl", "--delim", "artificial", "--output", "t.txt", "--references", "refs.jsonl"], d);
    ok(&["generate", "--contexts", &squad, "--output", "p.jsonl"], d);
    // Replace each generated question with its reference.
    let refs: Vec<serde_json::Value> = fs::read_to_string(d.join("refs.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let preds: String = fs::read_to_string(d.join("p.jsonl"))
        .unwrap()
        .lines()
        .zip(&refs)
        .map(|(l, r)| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["generated"] = r["question"].clone();
            format!("{v}\n")
        })
        .collect();
    fs::write(d.join("p.jsonl"), preds).unwrap();
    ok(&["evaluate", "--predictions", "p.jsonl", "--references", "refs.jsonl", "--output", "s.json"], d);
    let s: ScoresFile = read_json(&d.join("s.json"));
    for (name, v) in s.scores.values() {
        if name == "meteor" {
            assert!(v > 99.0, "{name} {v}");
        } else {
            assert!((v - 100.0).abs() < 1e-9, "{name} {v}");
        }
    }
}

#[test]
fn evaluate_rejects_misaligned_references() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let squad = sample();
    ok(&["format", "--input", &squad, "--qpl", "oqpl", "--delim", "artificial", "--output", "t.txt", "--references", "refs.jsonl"], d);
    ok(&["generate", "--contexts", &squad, "--output", "p.jsonl"], d);
    let refs = fs::read_to_string(d.join("refs.jsonl")).unwrap();
    let mut lines: Vec<&str> = refs.lines().collect();
    lines.reverse();
    fs::write(d.join("rev.jsonl"), lines.join("\n")).unwrap();
    let out = qgkit(&["evaluate", "--predictions", "p.jsonl", "--references", "rev.jsonl", "--output", "s.json"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("aligned"));

    fs::remove_file(d.join("p.jsonl.manifest.json")).unwrap();
    let out = qgkit(&["evaluate", "--predictions", "p.jsonl", "--references", "refs.jsonl", "--output", "s.json"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest"));
}

#[test]
fn reduction_curves_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let squad = sample();
    ok(&["reduce-context", "--contexts", &squad, "--min-sentences", "3", "--max-sentences", "30", "--seed", "1", "--output", "curves.json"], d);
    let curves: CurvesFile = read_json(&d.join("curves.json"));
    assert!(!curves.skipped.is_empty(), "the two-sentence paragraph should be skipped");
    assert!(curves.curves.iter().all(|c| c.points.first().map(|p| p.sentence_count) == Some(1)));
    let stdout = ok(&["report", "curves", "--in", "curves.json", "--out", "curves.csv"], d);
    let csv = fs::read_to_string(d.join("curves.csv")).unwrap();
    let points: usize = curves.curves.iter().map(|c| c.points.len()).sum();
    let distinct: std::collections::BTreeSet<usize> =
        curves.curves.iter().flat_map(|c| c.points.iter().map(|p| p.sentence_count)).collect();
    assert_eq!(csv.lines().count(), 1 + points + distinct.len());
    assert!(stdout.starts_with(&format!("{} rows", points + distinct.len())));
}

#[test]
fn text_contexts_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("ctx.txt"), "Paris is the capital of France.\n\nThe Nile flows north. It is long. [SEP]\n").unwrap();
    ok(&["generate", "--contexts", "ctx.txt", "--seed", "2", "--output", "p.jsonl"], d);
    let lines: Vec<serde_json::Value> = fs::read_to_string(d.join("p.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["paragraph_id"], "line/1");
    assert_eq!(lines[1]["paragraph_id"], "line/3");
}

#[test]
fn http_backend_requires_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let squad = sample();
    let out = qgkit(&["generate", "--contexts", &squad, "--backend", "http", "--output", "p.jsonl"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--endpoint"));
}
