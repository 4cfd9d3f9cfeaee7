use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use manlp::{parse_program, render_program, LatticeKind};
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "core", "tests", "fixtures", name].iter().collect()
}

fn manlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manlp")).args(args).env_remove("MANLP_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn check_model_on_example1() {
    let dir = TempDir::new().unwrap();
    let out_json = dir.path().join("r.json");
    let o = manlp(&[
        "check-model",
        p(&fixture("example1.mnlp")),
        "--interp",
        p(&fixture("example1_I.json")),
        "--json",
        p(&out_json),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("model: yes"));
    assert!(text.contains("0.8333333333333334"));
    let doc = json(&out_json);
    assert_eq!(doc["verdict"], Value::Bool(true));
    let values: Vec<f64> = doc["rules"].as_array().unwrap().iter().map(|r| r["value"].as_f64().unwrap()).collect();
    assert!((values[0] - 0.5 / 0.6).abs() < 1e-12);
    assert_eq!(values[1..], [0.4, 0.7]);
    assert_eq!(doc["program"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn check_model_negative_verdict() {
    let dir = TempDir::new().unwrap();
    let i = write(&dir, "i.json", r#"{"p": 0.1, "q": 0.7, "r": 0.4}"#);
    let o = manlp(&["check-model", p(&fixture("example1.mnlp")), "--interp", p(&i)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("model: no"));
}

#[test]
fn stable_check_on_example3() {
    for m in ["example3_M.json", "example3_M2.json"] {
        let o = manlp(&["stable", p(&fixture("example3.mnlp")), "--check", p(&fixture(m))]);
        assert_eq!(code(&o), 0, "{m}");
        assert!(stdout(&o).contains("stable: yes"));
    }
    let dir = TempDir::new().unwrap();
    let bottom = write(&dir, "b.json", r#"{"p": 0, "q": 0, "s": 0, "t": 0}"#);
    let o = manlp(&["stable", p(&fixture("example3.mnlp")), "--check", p(&bottom)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("stable: no"));
}

#[test]
fn cert_solve_reproduces_the_final_table() {
    let dir = TempDir::new().unwrap();
    let out_json = dir.path().join("c.json");
    let o = manlp(&["cert", p(&fixture("final_example.mnlp")), "--solve", "--json", p(&out_json)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("verdict: unique stable model"));
    assert!(stdout(&o).contains("[0.05488,0.405]"));
    let doc = json(&out_json);
    assert_eq!(doc["verdict"], Value::Bool(true));
    assert_eq!(doc["certificate"]["per_rule"].as_array().unwrap().len(), 4);
    let model = &doc["models"][0];
    assert_eq!(model["p"], serde_json::json!([0.7, 0.9]));
    assert_eq!(model["q"], serde_json::json!([0.0, 0.0]));
    let s: Vec<f64> = model["s"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((s[0] - 0.05488).abs() < 1e-9 && (s[1] - 0.405).abs() < 1e-9);
    assert_eq!(doc["trace"]["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn cert_negative_and_ineligible() {
    let dir = TempDir::new().unwrap();
    let selfneg = write(&dir, "n.mnlp", "p <-ei(1,1,1,1) not p ; [1,1]\n");
    let o = manlp(&["cert", p(&selfneg), "--solve"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("not certified"));

    let out_json = dir.path().join("v.json");
    let o = manlp(&["cert", p(&fixture("example1.mnlp")), "--json", p(&out_json)]);
    assert_eq!(code(&o), 1);
    assert!(json(&out_json)["violations"][0]["reason"].as_str().unwrap().contains("unit"));
}

#[test]
fn search_output_round_trips_into_check() {
    let dir = TempDir::new().unwrap();
    for (prog, extra) in [("example3.mnlp", vec!["--relax", "0.5"]), ("final_example.mnlp", vec![])] {
        let out_json = dir.path().join("s.json");
        let mut args: Vec<String> =
            vec!["stable".into(), p(&fixture(prog)).to_owned(), "--search".into(), "--json".into()];
        args.push(p(&out_json).to_owned());
        args.extend(extra.iter().map(|s| s.to_string()));
        let o = manlp(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code(&o), 0, "{prog}: {}", stdout(&o));
        let doc = json(&out_json);
        let models = doc["models"].as_array().unwrap();
        assert!(!models.is_empty());
        for (k, m) in models.iter().enumerate() {
            let path = write(&dir, &format!("m{k}.json"), &serde_json::to_string(m).unwrap());
            let o = manlp(&["stable", p(&fixture(prog)), "--check", p(&path)]);
            assert_eq!(code(&o), 0, "{prog} model {k}: {}", stdout(&o));
        }
    }
}

#[test]
fn structured_output_is_deterministic_and_seed_env_wins() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, seed: &str, env: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_manlp"));
        cmd.args([
            "stable",
            p(&fixture("example3.mnlp")),
            "--search",
            "--relax",
            "0.5",
            "--seed",
            seed,
            "--json",
            p(&out),
        ]);
        cmd.env_remove("MANLP_SEED");
        if let Some(v) = env {
            cmd.env("MANLP_SEED", v);
        }
        assert_eq!(cmd.output().unwrap().status.code(), Some(0));
        fs::read(out).unwrap()
    };
    let a = run("a.json", "3", None);
    let b = run("b.json", "3", None);
    assert_eq!(a, b);
    let c = run("c.json", "9", Some("3"));
    assert_eq!(a, c);
    let d = run("d.json", "9", None);
    assert_ne!(a, d);
}

#[test]
fn reduct_renders_a_parseable_positive_program() {
    let o = manlp(&["reduct", p(&fixture("example3.mnlp")), "--interp", p(&fixture("example3_M.json"))]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let prog = parse_program(&text, LatticeKind::Unit).unwrap();
    assert!(prog.is_positive());
    assert_eq!(render_program(&prog), text);
    assert!(text.starts_with("p <-G 0.4 ; 0.6\n"));
}

#[test]
fn tp_single_step_and_trace() {
    let dir = TempDir::new().unwrap();
    let out_json = dir.path().join("t.json");
    let o = manlp(&["tp", p(&fixture("final_example.mnlp")), "--iterate", "--json", p(&out_json)]);
    assert_eq!(code(&o), 0);
    let doc = json(&out_json);
    assert_eq!(doc["trace"]["symbols"], serde_json::json!(["p", "q", "s", "t"]));
    assert_eq!(doc["trace"]["rows"][1][0], serde_json::json!([0.7, 0.9]));

    let o = manlp(&[
        "tp",
        p(&fixture("example1.mnlp")),
        "--interp",
        p(&fixture("example1_I.json")),
        "--json",
        p(&out_json),
    ]);
    assert_eq!(code(&o), 0);
    let doc = json(&out_json);
    // p: 0.7 * min(0.7, 0.6); q: 0.6; r: min(0.2, 0.5, 0.7)
    assert!((doc["result"]["p"].as_f64().unwrap() - 0.42).abs() < 1e-12);
    assert_eq!(doc["result"]["q"].as_f64().unwrap(), 0.6);
    assert_eq!(doc["result"]["r"].as_f64().unwrap(), 0.2);
}

#[test]
fn failure_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.mnlp", "q <-P 1 ; 0.6\np <-P q &&G r ; 0.5\n");
    let o = manlp(&["tp", p(&bad), "--iterate"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2, column 9"));

    assert_eq!(code(&manlp(&["tp", "/nonexistent/x.mnlp", "--iterate"])), 2);
    assert_eq!(code(&manlp(&[])), 2);
    assert_eq!(code(&manlp(&["stable", p(&fixture("example3.mnlp")), "--search", "--brute", "3"])), 2);

    let o = manlp(&["stable", p(&fixture("final_example.mnlp")), "--brute", "10", "--max-points", "100"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("287496"));

    let flip = write(&dir, "flip.mnlp", "p <-G not p ; 1\n");
    let o = manlp(&["stable", p(&flip), "--search", "--max", "50"]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));
    let o = manlp(&["stable", p(&flip), "--search", "--relax", "0.5"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("p        0.5"));
}

#[test]
fn brute_force_lists_clusters() {
    let dir = TempDir::new().unwrap();
    let out_json = dir.path().join("b.json");
    let o = manlp(&["stable", p(&fixture("final_example.mnlp")), "--brute", "10", "--json", p(&out_json)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("1 clusters"));
    let doc = json(&out_json);
    assert_eq!(doc["models"].as_array().unwrap().len(), 1);
    assert_eq!(doc["oracle"]["points_scanned"], serde_json::json!(287496));
}
