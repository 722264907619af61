use std::path::Path;
use std::process::{Command, Output};

fn cobert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cobert")).args(args).output().expect("spawn cobert")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 14] = [
    "--set", "n_train=60", "--set", "n_valid=20", "--set", "n_test=20", "--set", "d_model=8", "--set", "ff_width=16",
    "--set", "neg=4", "--set", "valid_candidates=5",
];

fn trained(dir: &Path) {
    let data = dir.join("data");
    let ckpt = dir.join("model.ckpt");
    let mut args = vec!["synth", "--seed", "4", "--out", s(&data)];
    args.extend(SMALL);
    let o = cobert(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut args = vec!["train", "--seed", "4", "--epochs", "1", "--data", s(&data), "--checkpoint", s(&ckpt), "--out", s(dir)];
    args.extend(SMALL);
    let o = cobert(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_usage_exits_two() {
    assert_eq!(cobert(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cobert(&["eval", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(cobert(&["synth", "--set", "nonsense"]).status.code(), Some(2));
}

#[test]
fn respond_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path());
    let ckpt = dir.path().join("model.ckpt");
    let ctx = dir.path().join("ctx.txt");
    let persona = dir.path().join("persona.txt");
    let one = dir.path().join("one.txt");
    let many = dir.path().join("many.txt");
    let empty = dir.path().join("empty.txt");
    std::fs::write(&ctx, "what do you think about topic3 .\n> i like topic3 .\n").unwrap();
    std::fs::write(&persona, "i really like style1\n").unwrap();
    std::fs::write(&one, "the only answer .\n").unwrap();
    std::fs::write(&many, "topic3 style1 .\nno idea .\ntopic4 style2 .\n").unwrap();
    std::fs::write(&empty, "").unwrap();
    let base = ["respond", "--checkpoint", s(&ckpt), "--context", s(&ctx), "--persona", s(&persona)];

    let o = cobert(&[&base[..], &["--pool", s(&one)]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].ends_with("\tthe only answer ."));

    let a = cobert(&[&base[..], &["--pool", s(&many)]].concat());
    let b = cobert(&[&base[..], &["--pool", s(&many)]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap().lines().count(), 4);

    assert_eq!(cobert(&[&base[..], &["--pool", s(&empty)]].concat()).status.code(), Some(2));
}

#[test]
fn eval_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path());
    let out = dir.path().join("eval");
    let (data, ckpt) = (dir.path().join("data"), dir.path().join("model.ckpt"));
    let mut args = vec![
        "eval", "--seed", "4", "--data", s(&data), "--checkpoint", s(&ckpt),
        "--candidates", "10", "--out", s(&out),
    ];
    args.extend(SMALL);
    let o = cobert(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = std::fs::read_to_string(out.join("metrics.txt")).unwrap();
    assert!(metrics.contains("r1"), "{metrics}");
    assert!(out.join("metrics.json").exists());
    assert!(out.join("run_config.txt").exists());
}

#[test]
fn flags_override_set_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# base\nseed = 1\nn_train = 10\nn_valid = 2\nn_test = 2\ntopics = 7\n").unwrap();
    let out = dir.path().join("o");
    let run = |extra: &[&str]| {
        let mut args = vec!["synth", "--config", s(&conf), "--out", s(&out), "--set", "seed=2", "--set", "topics=9"];
        args.extend(extra);
        let o = cobert(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read_to_string(out.join("run_config.txt")).unwrap(), o.stderr)
    };
    let (text, err1) = run(&["--seed", "3"]);
    assert!(text.lines().any(|l| l == "seed=3"), "{text}");
    assert!(text.lines().any(|l| l == "topics=9"));
    assert!(text.lines().any(|l| l == "n_train=10"));
    let (_, err2) = run(&["--seed", "3", "--jobs", "1"]);
    assert_eq!(err1, err2);
    let (_, err3) = run(&[]);
    assert_ne!(err1, err3);
}
