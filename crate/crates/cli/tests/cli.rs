use std::path::Path;
use std::process::{Command, Output};

fn drawseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drawseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = drawseg(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn synth_twice_gives_identical_directories() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["synth", "--count", "5", "--seed", "7", "--out", p(&a)]);
    ok(&["synth", "--count", "5", "--seed", "7", "--out", p(&b)]);
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    assert_eq!(fa.len(), 11);
    assert_eq!(fa, fb);
}

#[test]
fn vectorized_drawing_has_19_features_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c");
    ok(&["synth", "--count", "1", "--seed", "3", "--out", p(&corpus)]);
    let graph = dir.path().join("g.json");
    let svg = dir.path().join("g.svg");
    let (draw, gt) = (corpus.join("0000_draw.png"), corpus.join("0000_gt.png"));
    let args = [
        "vectorize",
        p(&draw),
        "--gt",
        p(&gt),
        "--out",
        p(&graph),
        "--svg",
        p(&svg),
    ];
    ok(&args);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&graph).unwrap()).unwrap();
    let nodes = v["nodes"].as_array().unwrap();
    assert!(!nodes.is_empty());
    assert!(nodes.iter().all(|n| n["features"].as_array().unwrap().len() == 19));
    assert_eq!(v["labels"].as_array().unwrap().len(), nodes.len());
    assert_eq!(v["version"], 1);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<path"));

    let first = std::fs::read(&graph).unwrap();
    ok(&args);
    assert_eq!(std::fs::read(&graph).unwrap(), first);
}

#[test]
fn eval_scores_a_confusion_matrix_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("table.json");
    std::fs::write(&fixture, "[[4238,130,710],[105,9229,273],[761,352,9589]]").unwrap();
    let report = dir.path().join("report.json");
    let text = ok(&["eval", "--confusion", p(&fixture), "--out", p(&report)]);
    assert!(text.contains("Accuracy: 90.82%"), "{text}");
    assert!(text.contains("83.03%") && text.contains("96.07%"));
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert!((r["metrics"]["accuracy"].as_f64().unwrap() - 0.9082).abs() < 5e-5);
}

#[test]
fn corpus_round_trip_train_predict_eval_render() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (corpus, graphs, preds) = (d.join("corpus"), d.join("graphs"), d.join("preds"));
    ok(&["synth", "--count", "4", "--seed", "20", "--out", p(&corpus)]);
    ok(&["vectorize", p(&corpus), "--out", p(&graphs)]);
    assert_eq!(read_dir_sorted(&graphs).len(), 4);

    let cfg = d.join("run.cfg");
    std::fs::write(&cfg, "max_epochs = 3\npreset = gs3\nseed = 5\n").unwrap();
    let model = d.join("model.json");
    ok(&["train", p(&graphs), "--out", p(&model), "--config", p(&cfg)]);
    let history: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("model.history.json")).unwrap()).unwrap();
    assert_eq!(history["epochs"].as_array().unwrap().len(), 3);
    assert_eq!(history["config"]["seed"], 5);

    // training straight from the corpus gives the same model
    let again = d.join("again.json");
    ok(&["train", p(&corpus), "--out", p(&again), "--config", p(&cfg)]);
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&again).unwrap());

    ok(&["predict", p(&graphs), "--model", p(&model), "--out", p(&preds)]);
    for task in ["three", "text", "contour"] {
        let text = ok(&["eval", "--pred", p(&preds), "--truth", p(&graphs), "--task", task]);
        assert!(text.contains("Accuracy:"), "{text}");
    }

    let one = graphs.join("0000.graph.json");
    let labels = d.join("one.labels.json");
    let overlay = d.join("one.svg");
    ok(&["predict", p(&one), "--model", p(&model), "--out", p(&labels), "--svg", p(&overlay)]);
    let rendered = d.join("render.svg");
    ok(&["render", p(&one), "--labels", p(&labels), "--out", p(&rendered)]);
    assert!(!std::fs::read(&overlay).unwrap().is_empty());
    assert!(std::fs::read_to_string(&rendered).unwrap().matches("<path").count() > 0);
}

#[test]
fn failures_exit_with_category_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| {
        let out = drawseg(args);
        let err = String::from_utf8_lossy(&out.stderr).into_owned();
        (out.status.code().unwrap(), err)
    };

    assert_eq!(code(&["vectorize"]).0, 1);
    let (c, err) = code(&["vectorize", "x.png", "--out", "g.json", "--n", "3"]);
    assert_eq!(c, 1, "{err}");

    let missing = d.join("missing.json");
    let (c, err) = code(&["render", p(&missing), "--out", p(&d.join("o.svg"))]);
    assert_eq!(c, 2, "{err}");
    assert_eq!(err.lines().count(), 1, "{err}");

    let bad = d.join("bad.json");
    std::fs::write(&bad, r#"{"version": 1, "n": 4, "scheme": "text_nontext", "nodes": [], "edges": []}"#).unwrap();
    let (c, err) = code(&["render", p(&bad), "--out", p(&d.join("o.svg"))]);
    assert_eq!(c, 3, "{err}");
    assert!(err.contains("empty graph"));
}

#[test]
fn every_help_lists_config_keys_with_defaults() {
    for cmd in ["synth", "vectorize", "train", "predict", "eval", "render"] {
        let text = ok(&[cmd, "--help"]);
        for key in ["threshold", "spike_threshold", "merge_radius", "preset", "max_epochs", "seed"] {
            assert!(text.contains(key), "{cmd} help lacks {key}");
        }
        assert!(text.contains("default 2000"), "{cmd}");
    }
}
