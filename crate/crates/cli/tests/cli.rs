use std::io::{BufRead, BufReader};
use std::process::{Command, Output, Stdio};

use mealy_pac::analysis::read_table_csv;

const BIN: &str = env!("CARGO_BIN_EXE_mealy-pac");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("MEALY_PAC_MODELS")
        .output()
        .expect("spawn mealy-pac")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(stdout(out).trim()).unwrap()
}

#[test]
fn analyze_alks_without_n3() {
    let v = json(&run(&[
        "analyze",
        "--model",
        "alks_without",
        "-n",
        "3",
        "-L",
        "1000",
        "--seed",
        "7",
    ]));
    assert_eq!(v["x_s_exact"], "17");
    assert!((v["p_v"].as_f64().unwrap() - 0.63).abs() < 0.01);
    assert!((v["confidence"].as_f64().unwrap() - 0.96).abs() < 0.01);
    assert_eq!(v["format_version"], 1);
}

#[test]
fn analyze_alks_with_n4() {
    let v = json(&run(&[
        "analyze",
        "--model",
        "alks_with",
        "-n",
        "4",
        "-L",
        "1000",
    ]));
    assert_eq!(v["x_s_exact"], "71");
    assert!((v["p_v"].as_f64().unwrap() - 0.88).abs() < 0.01);
    assert!((v["confidence"].as_f64().unwrap() - 0.85).abs() < 0.01);
}

#[test]
fn analyze_all_safe() {
    let v = json(&run(&[
        "analyze", "--model", "all_safe", "-n", "2", "-L", "10",
    ]));
    assert_eq!(v["p_v"], 1.0);
    let k = v["alphabet_size"].as_u64().unwrap();
    assert_eq!(v["x_s"], (k * k).to_string());
}

#[test]
fn sample_size_and_confidence() {
    assert_eq!(
        stdout(&run(&["sample-size", "--h", "1.83", "-d", "272"])).trim(),
        "998"
    );
    assert_eq!(
        stdout(&run(&["sample-size", "--h", "2", "-d", "0"])).trim(),
        "3"
    );
    assert_eq!(
        stdout(&run(&["sample-size", "--h", "25", "-d", "17"])).trim(),
        "1011"
    );
    let c = stdout(&run(&["confidence", "-L", "1000", "-d", "17"]));
    assert!(c.contains("confidence=0.959"), "{c}");
    let p = stdout(&run(&[
        "confidence",
        "-L",
        "998",
        "-d",
        "272",
        "--alphabet-size",
        "4",
        "-n",
        "5",
    ]));
    assert!(p.contains("probability=0.265625"), "{p}");
}

#[test]
fn exact_methods_agree() {
    let dp = json(&run(&["exact", "--model", "alks_without", "-n", "10"]));
    let en = json(&run(&[
        "exact",
        "--model",
        "alks_without",
        "-n",
        "10",
        "--method",
        "enumerate",
    ]));
    assert_eq!(dp["safe_paths"], "8119");
    assert_eq!(dp, en);
}

#[test]
fn black_box_via_command_matches_white_box() {
    let cmd = format!("{BIN} serve-model --model alks_with");
    let remote = json(&run(&[
        "analyze", "--cmd", &cmd, "-n", "3", "-L", "300", "--seed", "4",
    ]));
    let local = json(&run(&[
        "analyze",
        "--model",
        "alks_with",
        "-n",
        "3",
        "-L",
        "300",
        "--seed",
        "4",
    ]));
    for key in [
        "x_s",
        "x_s_exact",
        "x_s_formula",
        "monomials",
        "p_v",
        "p_l",
        "confidence",
    ] {
        assert_eq!(remote[key], local[key], "{key}");
    }
    assert!(remote["p_exact"].is_null());
    assert_eq!(remote["model"], cmd.as_str());
}

#[test]
fn black_box_via_tcp() {
    let mut server = Command::new(BIN)
        .args([
            "serve-model",
            "--model",
            "alks_without",
            "--listen",
            "127.0.0.1:0",
        ])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut banner = String::new();
    BufReader::new(server.stderr.take().unwrap())
        .read_line(&mut banner)
        .unwrap();
    let addr = banner.trim().rsplit(' ').next().unwrap().to_string();
    let est = json(&run(&[
        "estimate",
        "--endpoint",
        &addr,
        "-n",
        "3",
        "-L",
        "500",
        "--seed",
        "1",
    ]));
    let local = json(&run(&[
        "estimate",
        "--model",
        "alks_without",
        "-n",
        "3",
        "-L",
        "500",
        "--seed",
        "1",
    ]));
    server.kill().unwrap();
    server.wait().unwrap();
    assert_eq!(est, local);
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, extra) in [(&a, None), (&b, Some("--sequential"))] {
        let mut args = vec![
            "reproduce-table",
            "--seed",
            "11",
            "--out",
            p.to_str().unwrap(),
        ];
        args.extend(extra);
        stdout(&run(&args));
    }
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    let rows = read_table_csv(a.as_slice()).unwrap();
    assert_eq!(rows.len(), 8);
    let d: Vec<String> = rows
        .iter()
        .filter(|r| r.n <= 5)
        .map(|r| r.d.to_string())
        .collect();
    assert_eq!(d, ["17", "41", "99", "23", "71", "207"]);
}

#[test]
fn table_prints_comparison_and_coffee_count() {
    let out = run(&["reproduce-table", "--strict"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "{err}");
    assert!(err.contains("coffee"));
    assert!(err.contains("30 of 30 cells within tolerance"), "{err}");
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| run(args).status.code().unwrap();
    // Unknown model and malformed arguments are validation errors.
    assert_eq!(
        code(&["analyze", "--model", "no_such_model", "-n", "3", "-L", "5"]),
        2
    );
    assert_eq!(code(&["analyze", "--model", "alks_with", "-n", "3"]), 2);
    assert_eq!(
        code(&["analyze", "--model", "alks_with", "-n", "0", "-L", "5"]),
        2
    );
    assert_eq!(code(&["sample-size", "--h", "0.5", "-d", "3"]), 2);
    // Nothing listens on port 1.
    assert_eq!(
        code(&[
            "estimate",
            "--endpoint",
            "127.0.0.1:1",
            "-n",
            "3",
            "-L",
            "5",
            "--retries",
            "0"
        ]),
        3
    );
    // A machine with no safe state never yields a positive example.
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("trap.machine");
    std::fs::write(
        &model,
        "inputs: a b\noutputs: o\nstates: S T\ninitial: S\nsafe: S\nS a -> T / o\nS b -> T / o\nT a -> T / o\nT b -> T / o\n",
    )
    .unwrap();
    let out = run(&[
        "analyze",
        "--model",
        model.to_str().unwrap(),
        "-n",
        "2",
        "-L",
        "5",
    ]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        code(&[
            "exact",
            "--model",
            "alks_with",
            "-n",
            "30",
            "--method",
            "enumerate"
        ]),
        4
    );
    // Output path that cannot be created.
    assert_eq!(
        code(&[
            "analyze",
            "--model",
            "alks_with",
            "-n",
            "2",
            "-L",
            "5",
            "--out",
            "/nonexistent/dir/r.json"
        ]),
        1
    );
}

#[test]
fn failed_run_writes_no_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let status = run(&[
        "analyze",
        "--model",
        "no_such_model",
        "-n",
        "3",
        "-L",
        "5",
        "--out",
        out.to_str().unwrap(),
    ])
    .status;
    assert!(!status.success());
    assert!(!out.exists());
}

#[test]
fn learned_set_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("set.txt");
    stdout(&run(&[
        "analyze",
        "--model",
        "alks_without",
        "-n",
        "3",
        "-L",
        "1000",
        "--set-out",
        set.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(set).unwrap();
    assert!(text.starts_with("n=3\n"), "{text}");
}

#[test]
fn model_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("tiny.machine"),
        "inputs: a\noutputs: o\nstates: S\ninitial: S\nsafe: S\nS a -> S / o\n",
    )
    .unwrap();
    let out = Command::new(BIN)
        .args(["exact", "--model", "tiny", "-n", "4"])
        .env("MEALY_PAC_MODELS", dir.path())
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["safe_paths"], "1");
}

#[test]
fn oracle_semantics_flag() {
    for (flag, reported) in [
        ("all-safe", "all-safe"),
        ("any-safe", "any-safe"),
        ("paper-literal", "any-safe"),
    ] {
        let v = json(&run(&[
            "analyze",
            "--model",
            "alks_with",
            "-n",
            "3",
            "-L",
            "200",
            "--oracle-semantics",
            flag,
        ]));
        assert_eq!(v["oracle_semantics"], reported);
    }
    assert_eq!(
        run(&[
            "analyze",
            "--model",
            "alks_with",
            "-n",
            "3",
            "-L",
            "5",
            "--oracle-semantics",
            "some"
        ])
        .status
        .code(),
        Some(2)
    );
}
