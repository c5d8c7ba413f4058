use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_sampled-card");
const REPRO: &str = env!("CARGO_BIN_EXE_sampled-card-repro");
const UNIFORM: &str = "uniform:100:10000";

fn run_with_stdin(args: &[&str], stdin: &[u8], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args)
        .env_remove("SAMPLED_CARD_SEED")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().expect("spawn cli");
    let mut pipe = child.stdin.take().unwrap();
    let data = stdin.to_vec();
    let writer = std::thread::spawn(move || {
        let _ = pipe.write_all(&data);
    });
    let out = child.wait_with_output().unwrap();
    writer.join().unwrap();
    out
}

fn run(args: &[&str], stdin: &[u8]) -> Output {
    run_with_stdin(args, stdin, &[])
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn lines<I: IntoIterator<Item = String>>(tokens: I) -> Vec<u8> {
    tokens
        .into_iter()
        .flat_map(|t| format!("{t}\n").into_bytes())
        .collect()
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(name);
    let text = std::fs::read_to_string(&path).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(validator: &jsonschema::Validator, doc: &Value) {
    if let Err(e) = validator.validate(doc) {
        panic!("schema violation: {e}\n{doc}");
    }
}

/// A skewed stream: token i repeated 1 + (i % 4) times, interleaved.
fn skewed_stream(distinct: usize) -> Vec<u8> {
    let mut tokens = Vec::new();
    for round in 0..4 {
        for i in 0..distinct {
            if i % 4 >= round {
                tokens.push(format!("t{i}"));
            }
        }
    }
    lines(tokens)
}

#[test]
fn hand_example() {
    let out = run(&["estimate", "--m", "16"], b"a\nb\na\nc\n");
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["p0_hat"], 0.5);
    assert_eq!(doc["singletons"], 2);
    assert_eq!(doc["sample_len"], 4);
    assert_eq!(doc["correction"], 2.0);
    assert_eq!(doc["storage"]["m"], 16);
}

#[test]
fn naive_on_distinct_tokens() {
    let input = lines((0..10_000).map(|i| format!("token-{i}")));
    let doc = json(&run(
        &["estimate", "--algorithm", "naive", "--m", "1024"],
        &input,
    ));
    let n_hat = doc["n_hat"].as_f64().unwrap();
    assert!((n_hat / 10_000.0 - 1.0).abs() < 0.1, "n_hat = {n_hat}");
    assert_eq!(doc["p0_hat"], 0.0);
}

#[test]
fn alg2_with_large_reservoir_matches_alg1() {
    let input = skewed_stream(3000);
    let a1 = json(&run(
        &["estimate", "--algorithm", "alg1", "--m", "256"],
        &input,
    ));
    let a2 = json(&run(
        &[
            "estimate",
            "--algorithm",
            "alg2",
            "--m",
            "256",
            "--u",
            "100000",
        ],
        &input,
    ));
    for field in [
        "n_s_hat",
        "p0_hat",
        "correction",
        "n_hat",
        "sample_len",
        "observed",
        "singletons",
    ] {
        assert_eq!(a1[field], a2[field], "{field}");
    }
    assert_eq!(a1["algorithm"], "alg1");
    assert_eq!(a2["algorithm"], "alg2");
    assert_eq!(a2["storage"]["u"], 100_000);
}

#[test]
fn text_and_ndjson_agree() {
    let tokens: Vec<String> = (0..500).map(|i| format!("k{}", i % 300)).collect();
    let text = lines(tokens.clone());
    let ndjson = lines(tokens.iter().map(|t| format!("\"{t}\"")));
    let a = run(&["estimate"], &text);
    let b = run(&["estimate", "--format", "ndjson"], &ndjson);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn binary_input() {
    let data: Vec<u8> = (0..20_000u64)
        .flat_map(|v| (v % 5000).to_le_bytes())
        .collect();
    let doc = json(&run(
        &["estimate", "--format", "binary-u64", "--algorithm", "naive"],
        &data,
    ));
    let n_hat = doc["n_hat"].as_f64().unwrap();
    assert!((n_hat / 5000.0 - 1.0).abs() < 0.1, "n_hat = {n_hat}");
    let out = run(&["estimate", "--format", "binary-u64"], &data[..13]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reads_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("in.txt");
    std::fs::write(&path, b"a\nb\na\nc\n").unwrap();
    let from_file = run(
        &["estimate", "--m", "16", "--input", path.to_str().unwrap()],
        b"",
    );
    let from_stdin = run(&["estimate", "--m", "16"], b"a\nb\na\nc\n");
    assert_eq!(from_file.stdout, from_stdin.stdout);
    let missing = run(
        &[
            "estimate",
            "--input",
            dir.path().join("nope").to_str().unwrap(),
        ],
        b"",
    );
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(
        run(&["estimate", "--m", "17"], b"a\n").status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["estimate", "--algorithm", "alg2", "--u", "5"], b"a\n")
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["estimate", "--sampling-rate", "0"], b"a\n")
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(
            &[
                "optimize",
                "--budget",
                "1",
                "--freq-model",
                UNIFORM,
                "--sampling-rate",
                "0.01"
            ],
            b""
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", "--table", "9z"], b"").status.code(),
        Some(2)
    );

    let degenerate = run(&["estimate"], b"a\nb\nc\n");
    assert_eq!(degenerate.status.code(), Some(3));
    let doc = json(&degenerate);
    assert_eq!(doc["error"], "degenerate_sample");
    assert_eq!(doc["observed"], 3);
    assert_eq!(doc["singletons"], 3);

    let empty = run(&["estimate"], b"\n\n");
    assert_eq!(empty.status.code(), Some(4));
    assert_eq!(json(&empty)["error"], "empty_sample");
}

#[test]
fn seed_precedence() {
    let input = skewed_stream(2000);
    let args = ["estimate", "--algorithm", "alg2", "--u", "500"];
    let flag5 = run(&[&args[..], &["--seed", "5"]].concat(), &input);
    let env5 = run_with_stdin(&args, &input, &[("SAMPLED_CARD_SEED", "5")]);
    assert_eq!(flag5.stdout, env5.stdout);
    let both = run_with_stdin(
        &[&args[..], &["--seed", "6"]].concat(),
        &input,
        &[("SAMPLED_CARD_SEED", "5")],
    );
    let flag6 = run(&[&args[..], &["--seed", "6"]].concat(), &input);
    assert_eq!(both.stdout, flag6.stdout);
    assert_ne!(flag5.stdout, flag6.stdout);
    let default = run(&args, &input);
    let zero = run(&[&args[..], &["--seed", "0"]].concat(), &input);
    assert_eq!(default.stdout, zero.stdout);
}

#[test]
fn analyze_examples() {
    let doc = json(&run(
        &[
            "analyze",
            "--freq-model",
            UNIFORM,
            "--sampling-rate",
            "0.01",
            "--m",
            "50",
        ],
        b"",
    ));
    let v = doc["rel_variance"].as_f64().unwrap();
    assert!((v - 0.0200).abs() < 5e-5, "{v}");
    assert_eq!(doc["l"], 505_000.0);

    // almost nothing unseen at full rate: the sketch term dominates
    let doc = json(&run(
        &[
            "analyze",
            "--freq-model",
            UNIFORM,
            "--sampling-rate",
            "1",
            "--m",
            "1000",
            "--l",
            "1e7",
        ],
        b"",
    ));
    let v = doc["rel_variance"].as_f64().unwrap();
    assert!((v * 1000.0 - 1.0).abs() < 1e-3, "{v}");

    let doc = json(&run(
        &[
            "analyze",
            "--freq-model",
            "pareto:1.1:500",
            "--sampling-rate",
            "0.01",
            "--m",
            "1000",
            "--u",
            "1000",
        ],
        b"",
    ));
    let v = doc["rel_variance"].as_f64().unwrap();
    assert!((v - 0.0010).abs() < 5e-5, "{v}");
    assert_eq!(doc["algorithm"], "alg2");
}

#[test]
fn optimize_examples() {
    let doc = json(&run(
        &[
            "optimize",
            "--budget",
            "2",
            "--freq-model",
            UNIFORM,
            "--sampling-rate",
            "0.01",
        ],
        b"",
    ));
    assert_eq!((doc["m"].as_u64(), doc["u"].as_u64()), (Some(1), Some(1)));

    for budget in [100u64, 500, 1000] {
        let doc = json(&run(
            &[
                "optimize",
                "--budget",
                &budget.to_string(),
                "--freq-model",
                UNIFORM,
                "--sampling-rate",
                "0.01",
            ],
            b"",
        ));
        let (m, u) = (doc["m"].as_u64().unwrap(), doc["u"].as_u64().unwrap());
        assert_eq!(m + u, budget);
        assert!(
            m > u,
            "the sketch gets the larger share at P=0.01: ({m}, {u})"
        );
    }
    let a = run(
        &[
            "optimize",
            "--budget",
            "1000",
            "--freq-model",
            UNIFORM,
            "--sampling-rate",
            "0.001",
        ],
        b"",
    );
    let b = run(
        &[
            "optimize",
            "--budget",
            "1000",
            "--freq-model",
            UNIFORM,
            "--sampling-rate",
            "0.001",
        ],
        b"",
    );
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn outputs_match_schemas() {
    let estimate = schema("estimate.schema.json");
    let error = schema("error.schema.json");
    let analyze = schema("analyze.schema.json");
    let optimize = schema("optimize.schema.json");

    let input = skewed_stream(1000);
    for args in [
        vec!["estimate"],
        vec!["estimate", "--algorithm", "naive"],
        vec![
            "estimate",
            "--algorithm",
            "alg2",
            "--u",
            "64",
            "--sampling-rate",
            "0.1",
        ],
        vec![
            "estimate",
            "--sampling-rate",
            "0.01",
            "--freq-model",
            UNIFORM,
        ],
    ] {
        assert_valid(&estimate, &json(&run(&args, &input)));
    }
    assert_valid(&error, &json(&run(&["estimate"], b"x\ny\n")));
    assert_valid(&error, &json(&run(&["estimate"], b"")));
    assert!(!estimate.is_valid(&json(&run(&["estimate"], b""))));

    assert_valid(
        &analyze,
        &json(&run(
            &[
                "analyze",
                "--freq-model",
                UNIFORM,
                "--sampling-rate",
                "0.01",
                "--m",
                "50",
            ],
            b"",
        )),
    );
    assert_valid(
        &analyze,
        &json(&run(
            &[
                "analyze",
                "--freq-model",
                UNIFORM,
                "--sampling-rate",
                "0.01",
                "--m",
                "50",
                "--u",
                "150",
            ],
            b"",
        )),
    );
    assert_valid(
        &optimize,
        &json(&run(
            &[
                "optimize",
                "--budget",
                "500",
                "--freq-model",
                "pareto:1.1:500",
                "--sampling-rate",
                "0.01",
            ],
            b"",
        )),
    );
}

#[test]
fn simulate_prints_csv() {
    let out = run(
        &["simulate", "--table", "hll", "--fast", "--trials", "5"],
        b"",
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert!(header.contains(&"simulation_variance"));
    for row in rows {
        assert_eq!(row.split(',').count(), header.len());
    }
}

fn write_manifest(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("manifest.txt");
    std::fs::write(&path, body).unwrap();
    path
}

fn repro(manifest: &Path) -> Output {
    Command::new(REPRO)
        .args(["--manifest", manifest.to_str().unwrap(), "--cli", BIN])
        .output()
        .unwrap()
}

#[test]
fn repro_flags_only_the_wrong_row() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        &format!(
            "# id | invocation | selector | expected | lo | hi | source\n\
             good | optimize --budget 2 --freq-model {UNIFORM} --sampling-rate 0.01 | .m | 1 | 1 | 1 | trivial\n\
             wrong | optimize --budget 2 --freq-model {UNIFORM} --sampling-rate 0.01 | .u | 5 | 4 | 6 | deliberately wrong\n\
             ratio | analyze --freq-model {UNIFORM} --sampling-rate 0.01 --m 50 | .rel_variance/m | 0.0004 | 0.0003999 | 0.0004001 | ratio\n"
        ),
    );
    let out = repro(&manifest);
    assert_eq!(out.status.code(), Some(1));
    let report = String::from_utf8(out.stdout).unwrap();
    let status: Vec<(&str, &str)> = report
        .lines()
        .skip(1)
        .map(|l| {
            let mut cells = l.split(',');
            (cells.next().unwrap(), cells.next().unwrap())
        })
        .collect();
    assert_eq!(
        status,
        vec![("good", "pass"), ("wrong", "FAIL"), ("ratio", "pass")]
    );
}

#[test]
fn repro_passes_clean_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        &format!("only | optimize --budget 2 --freq-model {UNIFORM} --sampling-rate 0.01 | .u | 1 | 1 | 1 | trivial\n"),
    );
    assert_eq!(repro(&manifest).status.code(), Some(0));
    let bad = write_manifest(dir.path(), "only | optimize | .u | 1 | 1\n");
    assert_eq!(repro(&bad).status.code(), Some(2));
}

#[test]
fn shipped_manifests_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../repro");
    for name in ["manifest.txt", "manifest-fast.txt"] {
        let text = std::fs::read_to_string(root.join(name)).unwrap();
        let rows = sampled_card_cli::manifest::parse_manifest(&text).unwrap();
        assert!(!rows.is_empty(), "{name}");
        for row in &rows {
            assert!(
                row.lo <= row.hi,
                "{}: band [{}, {}]",
                row.id,
                row.lo,
                row.hi
            );
        }
    }
}

#[test]
fn long_stream_is_streamed() {
    // two million lines through a pipe; the reservoir keeps only u slots
    let input = lines((0..2_000_000u64).map(|i| (i % 700_000).to_string()));
    let out = run(
        &[
            "estimate",
            "--algorithm",
            "alg2",
            "--u",
            "1024",
            "--m",
            "4096",
        ],
        &input,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc = json(&out);
    assert_eq!(doc["sample_len"], 2_000_000);
    assert_eq!(doc["observed"], 1024);
}
