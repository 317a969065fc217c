use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn garl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_garl"))
        .current_dir(dir)
        .env_remove("GARL_SEED")
        .args(args)
        .output()
        .expect("spawn garl")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

const CONFIG: &str = r#"
method = "garl"
map = "court"
sut = "mm-mls"
budget = 6
repetitions = 2
seed = 11
out = "runs"
jobs = 2
weights = "w/weights.bin"

[train]
episodes = 30

[ga]
population_size = 2
generations = 3
"#;

#[test]
fn train_run_report_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("exp.toml"), CONFIG).unwrap();

    let o = garl(d, &["run", "--config", "exp.toml"]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(text(&o).contains("garl train"), "{}", text(&o));

    let o = garl(d, &["train", "--config", "exp.toml"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(d.join("w/weights.bin").exists() && d.join("w/reward_curve.csv").exists());

    let o = garl(d, &["run", "--config", "exp.toml"]);
    assert!(o.status.success(), "{}", text(&o));
    for rep in ["rep_0", "rep_1"] {
        assert!(d.join("runs").join(rep).join("manifest.json").exists());
    }

    // --jobs must not change any byte of the outputs
    let o = garl(d, &["run", "--config", "exp.toml", "--jobs", "1", "--out", "serial"]);
    assert!(o.status.success(), "{}", text(&o));
    for rep in ["rep_0", "rep_1"] {
        let a = fs::read(d.join("runs").join(rep).join("manifest.json")).unwrap();
        let b = fs::read(d.join("serial").join(rep).join("manifest.json")).unwrap();
        assert_eq!(a, b);
    }

    let o = garl(d, &["report", "runs", "--out", "rep"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("garl,mm-mls,court,2"), "{}", text(&o));
    assert!(d.join("rep/comparison.csv").exists());

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(d.join("runs/rep_0/manifest.json")).unwrap()).unwrap();
    for e in manifest["episodes"].as_array().unwrap() {
        let trace = d.join("runs/rep_0").join(e["trace"].as_str().unwrap());
        let o = garl(d, &["replay", trace.to_str().unwrap()]);
        let expected = if e["violation"].is_null() { 0 } else { 1 };
        assert_eq!(o.status.code(), Some(expected), "{}", text(&o));
        assert!(text(&o).contains("outcome"), "{}", text(&o));
    }

    fs::write(d.join("junk.jsonl"), "not a trace\n").unwrap();
    assert_eq!(garl(d, &["replay", "junk.jsonl"]).status.code(), Some(2));
}

#[test]
fn seed_environment_variable_wins() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let run = |out: &str, seed_flag: &str, env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_garl"));
        c.current_dir(d).env_remove("GARL_SEED");
        if let Some(s) = env {
            c.env("GARL_SEED", s);
        }
        let o = c
            .args(["run", "--method", "random", "--budget", "4", "--reps", "1", "--jobs", "1"])
            .args(["--seed", seed_flag, "--out", out])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", text(&o));
        fs::read(d.join(out).join("rep_0/manifest.json")).unwrap()
    };
    let env_seeded = run("a", "1", Some("5"));
    let flag_seeded = run("b", "5", None);
    let other = run("c", "1", None);
    assert_eq!(env_seeded, flag_seeded);
    assert_ne!(env_seeded, other);
}

#[test]
fn bad_configs_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("typo.toml"), "budgett = 5\n").unwrap();
    let o = garl(d, &["run", "--config", "typo.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("budgett"), "{}", text(&o));

    let o = garl(d, &["run", "--method", "nope", "--budget", "2"]);
    assert_eq!(o.status.code(), Some(1));

    let o = garl(d, &["run", "--method", "random", "--sut", "nope", "--budget", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("nope"), "{}", text(&o));
}
