use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stftkan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stftkan")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&stftkan(&["params", "--variant", "resnet"])), 1);
    assert_eq!(code(&stftkan(&["frobnicate"])), 1);
    assert_eq!(code(&stftkan(&["params", "--classes", "0"])), 1);
    assert_eq!(code(&stftkan(&["--help"])), 0);
}

#[test]
fn missing_data_exits_2_and_bad_checkpoint_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing.stpc");
    assert_eq!(code(&stftkan(&["train", "--data", path(&missing)])), 2);
    let junk = dir.path().join("junk.skck");
    fs::write(&junk, b"not a model").unwrap();
    let out = stftkan(&["eval", "--ckpt", path(&junk), "--data", path(&missing)]);
    assert_eq!(code(&out), 4);
    let garbage = dir.path().join("bad.stpc");
    fs::write(&garbage, b"STPX....").unwrap();
    assert_eq!(code(&stftkan(&["train", "--data", path(&garbage)])), 2);
}

#[test]
fn params_table() {
    let out = stftkan(&["params", "--variant", "stft-kan", "--classes", "7"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("stft-kan: 77391 (0.08 M)"), "{text}");
    assert!(text.contains("fel     128 -> 1024     58368"), "{text}");
}

#[test]
fn synth_preprocess_train_eval() {
    let dir = tempfile::tempdir().unwrap();
    let (raw, cache, run) = (dir.path().join("raw"), dir.path().join("shapes.stpc"), dir.path().join("run"));
    assert_eq!(code(&stftkan(&["synth", "--output", path(&raw), "--per-class", "5", "--points", "300"])), 0);
    assert_eq!(fs::read_dir(raw.join("disc")).unwrap().count(), 5);

    let out = stftkan(&["preprocess", "--input", path(&raw), "--output", path(&cache), "--seed", "0"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("total                12      3"), "{}", stdout(&out));

    let config = dir.path().join("run.cfg");
    fs::write(&config, "# short run\nepochs = 5\nbatch_size = 4\ncl.window = hann\n").unwrap();
    let out = stftkan(&[
        "train",
        "--data",
        path(&cache),
        "--variant",
        "stft-kan",
        "--scaled",
        "--config",
        path(&config),
        "--epochs",
        "2",
        "--out",
        path(&run),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let saved = fs::read_to_string(run.join("config.txt")).unwrap();
    assert!(
        saved.contains("epochs = 2\n") && saved.contains("batch_size = 4\n") && saved.contains("cl.window = hann\n")
    );
    let csv = fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("epoch,lr,train_loss,test_oa,test_ba,epoch_time_s\n"));

    let final_line = stdout(&out).lines().find(|l| l.starts_with("final")).unwrap().to_string();
    let oa = final_line.split("OA ").nth(1).unwrap().split_whitespace().next().unwrap().to_string();
    let out = stftkan(&["eval", "--ckpt", path(&run.join("final.skck")), "--data", path(&cache)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains(&format!("OA {oa}")), "{} vs {final_line}", stdout(&out));
}

#[test]
fn search_writes_a_ranked_table() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    assert_eq!(code(&stftkan(&["synth", "--output", path(&raw), "--per-class", "4", "--points", "64"])), 0);
    let space = dir.path().join("space.cfg");
    fs::write(&space, "cl.window_size = 10..30\nfel.window_size = 4..12\nfel.stride = 2..4\necl2.window_size = 2..6\n")
        .unwrap();
    let table = dir.path().join("trials.csv");
    let out = stftkan(&[
        "search",
        "--data",
        path(&raw),
        "--points",
        "64",
        "--scaled",
        "--space",
        path(&space),
        "--trials",
        "2",
        "--epochs",
        "1",
        "--out",
        path(&table),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("rank,trial,final_oa"));
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("2,"));
}
