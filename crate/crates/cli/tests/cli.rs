use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use seqrisk::features::SliceTensor;
use seqrisk::io::encode_tensor;

const CONFIG: &str = "\
cohort.n_patients = 300
cohort.case_fraction = 0.3
cohort.splits = 0.6,0.2,0.2
cohort.seed = 7
signal.background_codes = 10
signal.risk_codes = 5
model.emb_dim = 4
model.hidden = 8
model.rf_grid = 5,10
train.max_epochs = 3
train.batch_size = 32
";

fn seqrisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqrisk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let o = seqrisk(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn error_line(o: &Output) -> serde_json::Value {
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    serde_json::from_str(err.trim_end()).expect("json error line")
}

/// Lines after the `#` preamble and the column header.
fn data_rows(tsv: &str) -> usize {
    tsv.lines().filter(|l| !l.starts_with('#')).count() - 1
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// generate, prepare, train, evaluate under `dir`.
fn pipeline(dir: &Path, config: &Path, model: &str) {
    let data = dir.join("data");
    ok(&["generate", "--config", s(config), "--out-dir", s(&data)]);
    let t = dir.join("tensors/w");
    ok(&[
        "prepare",
        "--events",
        s(&data.join("events.tsv")),
        "--patients",
        s(&data.join("patients.tsv")),
        "--window",
        "24,18",
        "--config",
        s(config),
        "--out",
        s(&t),
    ]);
    ok(&[
        "train",
        "--model",
        model,
        "--train",
        s(&dir.join("tensors/w.train.srsk")),
        "--val",
        s(&dir.join("tensors/w.validation.srsk")),
        "--seed",
        "3",
        "--config",
        s(config),
        "--out",
        s(&dir.join("model.ckpt")),
    ]);
    ok(&[
        "evaluate",
        "--model",
        s(&dir.join("model.ckpt")),
        "--test",
        s(&dir.join("tensors/w.test.srsk")),
        "--out",
        s(&dir.join("report.tsv")),
    ]);
}

#[test]
fn pipeline_is_byte_reproducible() {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("c.conf");
    fs::write(&config, CONFIG).unwrap();
    for model in ["lstm", "rf"] {
        let (a, b) = (root.path().join(format!("{model}-a")), root.path().join(format!("{model}-b")));
        pipeline(&a, &config, model);
        pipeline(&b, &config, model);
        for f in ["data/events.tsv", "tensors/w.train.srsk", "model.ckpt", "model.ckpt.trace.tsv", "report.tsv"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{model}: {f}");
        }
        let report = fs::read_to_string(a.join("report.tsv")).unwrap();
        assert!(report.starts_with("#schema=seqrisk.report/1\n"));
        assert!(report.contains("\tmicro_auroc\t"));
    }
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.path().join("lstm-a/tensors/w.manifest.json")).unwrap()).unwrap();
    let d = &m["details"];
    let v = d["vocabulary_size"].as_u64().unwrap();
    assert_eq!(d["steps"], 2);
    assert_eq!(d["per_step_width"].as_u64().unwrap(), 12 + 4 * v);
    assert_eq!(d["head_width"], 16);
    assert_eq!(d["max_epochs"], 3);
}

#[test]
fn errors_are_single_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let e = error_line(&seqrisk(&["train", "--bogus"]));
    assert_eq!(e["error"], "usage");

    let e = error_line(&seqrisk(&["generate", "--config", "/nonexistent.conf", "--out-dir", s(dir.path())]));
    assert_eq!(e["error"], "io");

    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "cohort.n_patients = 10\nnot_a_key = 1\n").unwrap();
    let e = error_line(&seqrisk(&["generate", "--config", s(&bad), "--out-dir", s(dir.path())]));
    assert_eq!(e["error"], "config");

    let events = dir.path().join("events.tsv");
    fs::write(&events, "#schema=seqrisk.events/9\npatient_id\tdate\tcode\tcode_type\n").unwrap();
    let patients = dir.path().join("patients.tsv");
    fs::write(&patients, "#schema=seqrisk.patients/1\npatient_id\tgender\tbirth_year\trace\tlabel\tindex_date\n").unwrap();
    let e = error_line(&seqrisk(&[
        "prepare", "--events", s(&events), "--patients", s(&patients), "--window", "24", "--out", s(&dir.path().join("t")),
    ]));
    assert_eq!(e["error"], "schema");
    assert!(e["message"].as_str().unwrap().contains("unsupported version"));
}

#[test]
fn evaluate_rejects_empty_test_set() {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("c.conf");
    fs::write(&config, CONFIG).unwrap();
    pipeline(root.path(), &config, "lr");
    let empty = SliceTensor::from_parts(2, 3, vec![], vec![], vec![]).unwrap();
    let path = root.path().join("empty.srsk");
    fs::write(&path, encode_tensor(&empty).unwrap()).unwrap();
    let e = error_line(&seqrisk(&[
        "evaluate",
        "--model",
        s(&root.path().join("model.ckpt")),
        "--test",
        s(&path),
        "--out",
        s(&root.path().join("r.tsv")),
    ]));
    assert_eq!(e["error"], "schema");
}

#[test]
fn delta_study_feeds_projection() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("delta.conf");
    fs::write(
        &config,
        "cohort.n_patients = 800\ncohort.case_fraction = 0.5\ncohort.splits = 0.6,0.2,0.2\n\
         signal.background_codes = 20\nsignal.case_multiplier = 1\nsignal.trend_slope = 3\n\
         signal.total_matched_slices = 2\nsignal.demographic_shift = false\n\
         model.emb_dim = 4\nmodel.hidden = 8\ntrain.max_epochs = 10\ntrain.batch_size = 32\n\
         experiment.runs = 1\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&["experiment", "temporal-delta", "--config", s(&config), "--out-dir", s(&out)]);
    let acts = out.join("temporal-delta.activations.tsv");
    let table = fs::read_to_string(&acts).unwrap();
    let rows = data_rows(&table);
    assert!(rows > 0);
    assert!(table.contains("FN->TP"));
    let proj = dir.path().join("proj.tsv");
    ok(&[
        "project",
        "--activations",
        s(&acts),
        "--perplexity",
        "5",
        "--iterations",
        "300",
        "--out",
        s(&proj),
    ]);
    assert_eq!(data_rows(&fs::read_to_string(&proj).unwrap()), rows);
    assert!(dir.path().join("proj.tsv.kl.tsv").exists());
}
