use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = "[model]
embedding_dim = 4
hidden_dim = 8
vector_dim = 8
epochs = 4
batch_size = 8
learning_rate = 0.003
[eval]
folds = 3
labels = 3
[hybrid.ga]
population_size = 10
generations = 3
[flag_ga]
population_size = 10
generations = 3
";

fn irtune(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irtune")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = irtune(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn corpus(dir: &Path, static_fraction: &str) {
    fs::write(dir.join("cfg.toml"), CONFIG).unwrap();
    ok(dir, &["--seed", "5", "synth-corpus", "--regions", "18", "--labels", "3", "--static-fraction", static_fraction, "--out-dir", "corpus"]);
    ok(dir, &["--seed", "5", "augment", "--count", "1", "--in-dir", "corpus/ir", "--out-dir", "aug"]);
    ok(dir, &["build-graphs", "--in-dir", "aug", "--vocab", "vocab.txt", "--out-dir", "graphs"]);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(irtune(d.path(), &[]).status.code(), Some(1));
    assert_eq!(irtune(d.path(), &["evaluate", "--nonsense"]).status.code(), Some(1));
    assert_eq!(irtune(d.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(irtune(d.path(), &["label", "--timings", "missing.csv", "--out", "l.csv"]).status.code(), Some(2));
    assert_eq!(irtune(d.path(), &["--machine", "nowhere", "label", "--timings", "t.csv", "--out", "l.csv"]).status.code(), Some(2));
    fs::write(d.path().join("bad.toml"), "[model]\nepochs = \"many\"\n").unwrap();
    assert_eq!(irtune(d.path(), &["--config", "bad.toml", "label", "--timings", "t", "--out", "l"]).status.code(), Some(1));

    ok(d.path(), &["synth-corpus", "--regions", "6", "--labels", "2", "--out-dir", "c"]);
    let failing = irtune(d.path(), &["augment", "--count", "1", "--driver", "false {in} {passes}", "--in-dir", "c/ir", "--out-dir", "a"]);
    assert_eq!(failing.status.code(), Some(3), "{}", String::from_utf8_lossy(&failing.stderr));
    let bad_ir = d.path().join("broken");
    fs::create_dir_all(&bad_ir).unwrap();
    fs::write(bad_ir.join("x.ll"), "define void @f( {\n").unwrap();
    assert_eq!(irtune(d.path(), &["augment", "--count", "1", "--in-dir", "broken", "--out-dir", "a2"]).status.code(), Some(2));
}

#[test]
fn extract_writes_one_file_per_region() {
    let d = tempfile::tempdir().unwrap();
    let text = "; ModuleID = 'prog'\n\
        define void @main() {\nentry:\n  ret void\n}\n\
        define internal void @.omp_outlined.0(ptr %a) {\nentry:\n  ret void\n}\n\
        define internal void @.omp_outlined.1(ptr %a) {\nentry:\n  ret void\n}\n";
    fs::write(d.path().join("prog.ll"), text).unwrap();
    ok(d.path(), &["extract", "--in", "prog.ll", "--out-dir", "regions"]);
    let mut names: Vec<String> =
        fs::read_dir(d.path().join("regions")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["prog__.omp_outlined.0.ll", "prog__.omp_outlined.1.ll"]);
}

#[test]
fn evaluation_is_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    corpus(d.path(), "1.0");
    ok(d.path(), &["--config", "cfg.toml", "label", "--timings", "corpus/timings.csv", "--out", "labels.csv"]);
    ok(d.path(), &["--config", "cfg.toml", "train-static", "--graphs", "graphs", "--labels", "labels.csv", "--out", "model.st"]);
    for run in ["a", "b"] {
        ok(d.path(), &["--config", "cfg.toml", "--seed", "2", "evaluate", "--graphs", "graphs", "--timings", "corpus/timings.csv", "--out-dir", run]);
    }
    for f in ["report.csv", "summary.txt"] {
        assert_eq!(fs::read(d.path().join("a").join(f)).unwrap(), fs::read(d.path().join("b").join(f)).unwrap());
    }
    ok(d.path(), &["--config", "cfg.toml", "report", "--report", "a/report.csv", "--emit-plot-data", "plots", "--timings", "corpus/timings.csv"]);
    let sweep = fs::read_to_string(d.path().join("plots/label_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 4);
}

#[test]
fn hybrid_prediction_writes_profiling_requests() {
    let d = tempfile::tempdir().unwrap();
    corpus(d.path(), "0.5");
    let c = |args: &[&str]| {
        let mut v = vec!["--config", "cfg.toml"];
        v.extend_from_slice(args);
        ok(d.path(), &v);
    };
    c(&["label", "--timings", "corpus/timings.csv", "--out", "labels.csv"]);
    c(&["train-static", "--graphs", "graphs", "--labels", "labels.csv", "--out", "model.st"]);
    c(&["train-hybrid", "--graphs", "graphs", "--model", "model.st", "--timings", "corpus/timings.csv", "--labels", "labels.csv", "--threshold", "0", "--out", "router.txt"]);
    c(&["train-dynamic", "--counters", "corpus/counters.csv", "--labels", "labels.csv", "--out", "dynamic.txt"]);
    c(&["select-flags", "--graphs", "graphs", "--model", "model.st", "--timings", "corpus/timings.csv", "--out", "selection.txt"]);
    c(&["train-flag-model", "--graphs", "graphs", "--model", "model.st", "--timings", "corpus/timings.csv", "--selection", "selection.txt", "--sequences", "aug/sequences.txt", "--out", "flag.txt"]);
    let base = ["predict", "--regions", "corpus/ir", "--model", "model.st", "--vocab", "vocab.txt", "--sequences", "aug/sequences.txt"];
    let mut hybrid = base.to_vec();
    hybrid.extend_from_slice(&["--mode", "hybrid", "--router", "router.txt", "--dynamic", "dynamic.txt", "--counters", "corpus/counters.csv", "--profiling-requests", "requests.txt", "--out", "pred.csv"]);
    c(&hybrid);
    let pred = fs::read_to_string(d.path().join("pred.csv")).unwrap();
    assert_eq!(pred.lines().count(), 19);
    let requests = fs::read_to_string(d.path().join("requests.txt")).unwrap();
    let flagged = pred.lines().skip(1).filter(|l| l.split(',').nth(8) == Some("true")).count();
    // a zero threshold sends every region to the dynamic model
    assert_eq!(flagged, 18);
    assert_eq!(requests.lines().count(), flagged);
    // every profiled region had counters, so each one is answered dynamically
    assert_eq!(pred.lines().filter(|l| l.contains(",dynamic,")).count(), flagged);

    let mut predicted = base.to_vec();
    predicted.extend_from_slice(&["--flag-mode", "predicted", "--flag-model", "flag.txt", "--out", "pred2.csv"]);
    c(&predicted);
    let mut strict = base.to_vec();
    strict.extend_from_slice(&["--mode", "hybrid", "--router", "router.txt", "--strict", "--out", "pred3.csv"]);
    let mut v = vec!["--config", "cfg.toml"];
    v.extend_from_slice(&strict);
    let out = irtune(d.path(), &v);
    assert_eq!(out.status.code(), Some(2));
}
