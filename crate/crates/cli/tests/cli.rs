use std::path::Path;
use std::process::{Command, Output};

fn protoilp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_protoilp"))
        .args(args)
        .current_dir(dir)
        .env("PROTOILP_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_task_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = protoilp(&["gen-task", "--task", "grandparent", "--n", "6", "--seed", "2", "--out", "g.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("g.json")).unwrap();
    assert!(text.contains("\"father\""));
    assert!(stdout(&out).contains("6 constants"));
}

#[test]
fn train_extract_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("quick.cfg"), "iterations = 300\n").unwrap();
    let out = protoilp(
        &["train", "--task", "predecessor", "--config", "quick.cfg", "--seed", "0", "--out", "m.json", "--log", "log.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("target(X,Y) :- succ(Y,X)."));
    assert_eq!(std::fs::read_to_string(dir.path().join("log.csv")).unwrap().lines().count(), 301);

    let ex = protoilp(&["extract", "--checkpoint", "m.json"], dir.path());
    assert_eq!(stdout(&ex).trim(), "target(X,Y) :- succ(Y,X).");
    let json = protoilp(&["extract", "--checkpoint", "m.json", "--json"], dir.path());
    assert!(stdout(&json).contains("\"slot_assignments\""));

    for extra in [&[][..], &["--symbolic"][..]] {
        let mut args = vec!["eval", "--checkpoint", "m.json"];
        args.extend_from_slice(extra);
        let ev = protoilp(&args, dir.path());
        assert!(ev.status.success(), "{}", stdout(&ev));
        assert!(stdout(&ev).contains("success"));
    }
}

#[test]
fn failing_gate_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.cfg"), "iterations = 1\nmax-depth = 1\n").unwrap();
    let out = protoilp(
        &["experiment", "--task", "adjacent-to-red", "--seeds", "1", "--config", "tiny.cfg", "--gate", "100"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("| adjacent_to_red | 1 |"));
    let ungated = protoilp(&["experiment", "--task", "adjacent-to-red", "--seeds", "1", "--config", "tiny.cfg"], dir.path());
    assert!(ungated.status.success());
}

#[test]
fn check_grad_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = protoilp(&["check-grad", "--task", "son", "--n", "5", "--coordinates", "10"], dir.path());
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("pass"));
}

#[test]
fn sweep_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.cfg"), "iterations = 2\n").unwrap();
    let out = protoilp(
        &["sweep", "--task", "undirected-edge", "--grid", "similarity=cosine,l2", "--seeds", "1", "--config", "tiny.cfg"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = stdout(&out);
    assert!(csv.starts_with("task,settings,fingerprint,seeds,train,soft,symbolic"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = protoilp(&["extract", "--checkpoint", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = protoilp(&["gen-task", "--task", "nonsense", "--n", "4", "--out", "x.json"], dir.path());
    assert!(!out.status.success());
}
