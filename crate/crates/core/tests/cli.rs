use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
seed = 3
dataset.synthetic.num_windows = 40
model.hidden_size = 6
train.epochs = 2
attribution.fp_repetitions = 2
attribution.ig_steps = 4
eval.max_test_windows = 4
";

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saliency-audit"))
        .current_dir(dir)
        .args(args)
        .env_remove("SAUDIT_SEED")
        .output()
        .unwrap()
}

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    [base, extra].concat()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn subcommands_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.txt"), SMALL).unwrap();
    let base = ["--config", "c.txt", "--out", "o", "-q"];

    let o = cli(dir.path(), &with(&base, &["ingest", "--frames", "1"]));
    assert!(o.status.success(), "{o:?}");
    let frame = stdout(&o).lines().find(|l| l.ends_with("_middle.txt")).unwrap().to_string();

    let o = cli(dir.path(), &with(&base, &["train"]));
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    let ckpt = out.lines().find(|l| l.contains("\trecurrent\t")).unwrap().split('\t').nth(5).unwrap().to_string();

    let o = cli(dir.path(), &with(&base, &["explain", "--checkpoint", &ckpt, "--frame", &frame, "--explainer", "ig"]));
    assert!(o.status.success(), "{o:?}");
    let map = stdout(&o).trim().to_string();
    assert!(map.ends_with("_IG.txt"));

    let o = cli(dir.path(), &["report", "--from-map", &map]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("total="));

    let o = cli(dir.path(), &with(&base, &["--format", "md", "eval-consistency"]));
    assert!(o.status.success(), "{o:?}");
    assert!(dir.path().join("o/reports/consistency_table.md").exists());
    let records = std::fs::read_to_string(dir.path().join("o/records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 3 * 3 * 4 * 3);
    assert!(!records.contains("swap-"));

    let o = cli(dir.path(), &with(&base, &["report", "--records", "o/records.csv"]));
    assert!(o.status.success());
    assert!(stdout(&o).contains("consistency_table.csv"));
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("bad.txt"), "train.epoch = 3\n").unwrap();
    std::fs::write(p.join("records.csv"), "not,a,records,file\n").unwrap();
    std::fs::write(p.join("diverge.txt"), format!("{SMALL}train.learning_rate = 1e300\n")).unwrap();

    assert_eq!(cli(p, &["--config", "bad.txt", "run"]).status.code(), Some(1));
    assert_eq!(cli(p, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(cli(p, &["--config", "missing.txt", "run"]).status.code(), Some(2));
    assert_eq!(cli(p, &["report", "--records", "records.csv"]).status.code(), Some(2));
    assert_eq!(cli(p, &["--help"]).status.code(), Some(0));

    let o = cli(p, &["--config", "diverge.txt", "--out", "d", "-q", "run"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = std::fs::read_to_string(p.join("d/manifest.txt")).unwrap();
    assert!(manifest.contains("status: failed"));
    assert!(p.join("d/records.csv").exists());
}

#[test]
fn environment_overrides_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.txt"), SMALL).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_saliency-audit"))
        .current_dir(dir.path())
        .args(["--config", "c.txt", "--out", "o", "-q", "ingest", "--frames", "0"])
        .env("SAUDIT_DATASET__SYNTHETIC__NUM_WINDOWS", "10")
        .output()
        .unwrap();
    assert!(o.status.success(), "{o:?}");
    let train = std::fs::read_to_string(dir.path().join("o/data/synthetic_TRAIN.csv")).unwrap();
    assert_eq!(train.lines().count(), 1 + 7);
}
