use serde_json::Value;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use xkbqa_core::verbalizer::{ObjectMention, VerbalizedUnit};
use xkbqa_core::{KbObject, Question, Triple};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

fn xkbqa(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_xkbqa"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let mut pipe = child.stdin.take().unwrap();
        if let Some(s) = stdin {
            // A command that fails before reading stdin closes the pipe early.
            if let Err(e) = pipe.write_all(s.as_bytes()) {
                assert_eq!(e.kind(), std::io::ErrorKind::BrokenPipe, "{e}");
            }
        }
    }
    child.wait_with_output().unwrap()
}

fn ok(args: &[&str], stdin: Option<&str>) -> String {
    let out = xkbqa(args, stdin);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn lines(s: &str) -> Vec<Value> {
    s.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn snapshot(dir: &Path) -> String {
    let snap = dir.join("toy.kb");
    let kb = data("toy_kb.nt");
    let out = ok(
        &[
            "kb",
            "load",
            "--input",
            kb.to_str().unwrap(),
            "--out",
            snap.to_str().unwrap(),
            "--preset",
            "freebase",
        ],
        None,
    );
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["stats"]["triples"], 58);
    assert_eq!(v["stats"]["cvt_nodes"], 2);
    snap.to_str().unwrap().to_string()
}

#[test]
fn help_and_bad_flags() {
    assert_eq!(xkbqa(&["--help"], None).status.code(), Some(0));
    assert_eq!(xkbqa(&["e2e", "--no-such-flag"], None).status.code(), Some(2));
    assert_eq!(xkbqa(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn load_stats_and_e2e_report() {
    let dir = tempfile::tempdir().unwrap();
    let snap = snapshot(dir.path());
    let stats: Value = serde_json::from_str(&ok(&["kb", "stats", "--kb", &snap], None)).unwrap();
    assert_eq!(stats["triples"], 58);

    let dataset = data("toy_questions.jsonl");
    let report: Value = serde_json::from_str(&ok(
        &["e2e", "--kb", &snap, "--dataset", dataset.to_str().unwrap()],
        None,
    ))
    .unwrap();
    assert_eq!(report["hits_at_1"], 0.85);
    assert_eq!(report["n"], 20);
    assert_eq!(report["diagnostics"]["no_candidates"], 0);

    // Reading the N-Triples file directly gives the same report.
    let nt = data("toy_kb.nt");
    let direct: Value = serde_json::from_str(&ok(
        &[
            "e2e",
            "--kb",
            nt.to_str().unwrap(),
            "--preset",
            "freebase",
            "--cvt",
            "heuristic",
            "--dataset",
            dataset.to_str().unwrap(),
        ],
        None,
    ))
    .unwrap();
    assert_eq!(direct, report);
}

#[test]
fn stages_compose_to_the_e2e_trace() {
    let dir = tempfile::tempdir().unwrap();
    let snap = snapshot(dir.path());
    let dataset = std::fs::read_to_string(data("toy_questions.jsonl")).unwrap();
    let kb = ["--kb", snap.as_str()];

    let linked = ok(&[&["link"][..], &kb].concat(), Some(&dataset));
    let sub = ok(&[&["subgraph", "dump"][..], &kb].concat(), Some(&linked));
    let verb = ok(&[&["verbalize"][..], &kb].concat(), Some(&sub));
    let passages = ok(&["passage", "build"], Some(&verb));
    let answers = ok(&["answer"], Some(&passages));

    let trace = dir.path().join("trace.jsonl");
    let dataset_path = data("toy_questions.jsonl");
    ok(
        &[
            "e2e",
            "--kb",
            &snap,
            "--dataset",
            dataset_path.to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
        ],
        None,
    );
    let staged = lines(&answers);
    let traced = lines(&std::fs::read_to_string(&trace).unwrap());
    assert_eq!(staged.len(), 20);
    for (a, b) in staged.iter().zip(&traced) {
        assert_eq!(a["prediction"], b["prediction"], "{}", a["question"]["id"]);
        assert_eq!(a["passage"], b["passage"]);
    }

    let report: Value = serde_json::from_str(&ok(&["evaluate"], Some(&answers))).unwrap();
    assert_eq!(report["hits_at_1"], 0.85);
}

#[test]
fn passage_build_on_the_ford_fixture() {
    let unit = |text: &str, id: &str, surface: &str| VerbalizedUnit {
        text: text.into(),
        sources: vec![Triple::new("m.ford", "r.r", KbObject::entity(id))],
        objects: vec![ObjectMention {
            object: KbObject::entity(id),
            surface: surface.into(),
        }],
    };
    let record = serde_json::json!({
        "question": Question::new("ford", "Who was the vice president of Gerald Ford?", "en"),
        "question_id": "ford",
        "units": [
            unit(
                "David Gergen was appointed as the White House Communications Director by President Gerald Ford .",
                "m.gergen",
                "David Gergen",
            ),
            unit("The vice president of Gerald Ford was Nelson Rockefeller .", "m.rockefeller", "Nelson Rockefeller"),
        ],
    });
    let out = ok(&["passage", "build"], Some(&format!("{record}\n")));
    let passage = &lines(&out)[0]["passage"];
    let spans: Vec<(String, u64, u64)> = passage["spans"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            (
                s["surface"].as_str().unwrap().to_string(),
                s["start"].as_u64().unwrap(),
                s["end"].as_u64().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        spans,
        [
            ("Nelson Rockefeller".to_string(), 38, 56),
            ("David Gergen".to_string(), 59, 71)
        ]
    );

    let answered = ok(&["answer"], Some(&out));
    assert_eq!(lines(&answered)[0]["prediction"]["top"]["id"], "m.rockefeller");
}

#[test]
fn stage_errors_exit_1_but_keep_records() {
    let dataset = std::fs::read_to_string(data("toy_questions.jsonl")).unwrap();
    let out = xkbqa(&["passage", "build"], Some(&dataset));
    assert_eq!(out.status.code(), Some(1));
    let records = lines(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(records.len(), 20);
    assert!(records.iter().all(|r| r["error"]["message"].is_string()));

    let missing_kb = xkbqa(&["link"], Some(&dataset));
    assert_eq!(missing_kb.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing_kb.stderr).contains("--kb"));

    let bad_config = xkbqa(&["e2e", "--kb", "x", "--dataset", "y", "--reader", "oracle"], None);
    assert_eq!(bad_config.status.code(), Some(1));
}

#[test]
fn qald_format_is_validated() {
    let bad =
        r#"{"id": "1", "question": "q", "language": "klingon", "topic_entities": [], "answers": [{"name": "x"}]}"#;
    let kb = data("toy_kb.nt");
    let args = [
        "link",
        "--kb",
        kb.to_str().unwrap(),
        "--preset",
        "freebase",
        "--format",
        "qald-m",
    ];
    let out = xkbqa(&args, Some(bad));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("klingon"));
    let good = bad
        .replace("klingon", "de")
        .replace("[]", r#"[{"id": "m.ford", "name": "Gerald Ford"}]"#);
    assert!(xkbqa(&args, Some(&good)).status.success());
}
