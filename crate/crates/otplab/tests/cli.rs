use std::path::{Path, PathBuf};
use std::process::Command;

use jsonschema::{Draft, JSONSchema};
use serde_json::{json, Value};

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn otplab(args: &[&str]) -> Output {
    otplab_env(args, None)
}

fn otplab_env(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_otplab"));
    cmd.args(args).env_remove("OTPLAB_SEED");
    if let Some(seed) = seed_env {
        cmd.env("OTPLAB_SEED", seed);
    }
    let out = cmd.output().expect("binary runs");
    Output {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

fn json_of(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = otplab(&full);
    let value = serde_json::from_str(&out.stdout)
        .unwrap_or_else(|e| panic!("{args:?}: {e}\n{}", out.stderr));
    (out.code, value)
}

fn schema(name: &str) -> JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(format!("{name}.schema.json"));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    JSONSchema::options()
        .with_draft(Draft::Draft7)
        .compile(&doc)
        .expect("schema compiles")
}

fn assert_valid(schema_name: &str, value: &Value) {
    let s = schema(schema_name);
    let msgs: Vec<String> = match s.validate(value) {
        Ok(()) => return,
        Err(errors) => errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect(),
    };
    panic!("{schema_name}: {msgs:?}\n{value:#}");
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn biased_spec(dir: &Path) -> PathBuf {
    write(
        dir,
        "biased.json",
        r#"{"m": 2, "n": 2, "g": [0, 0], "f": [[0, 0], [0, 1]], "key": "3/5"}"#,
    )
}

#[test]
fn box_eval_pr_preset() {
    let out = otplab(&["box", "eval", "--preset", "pr"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout.matches("P(").count(), 16);
    assert!(out.stdout.contains("alice_to_bob yes, bob_to_alice yes"));
    let (code, v) = json_of(&["box", "eval", "--preset", "pr"]);
    assert_eq!(code, 0);
    assert_eq!(v["table"]["entries"].as_object().unwrap().len(), 16);
    assert_eq!(v["ns"]["witnesses"], json!([]));
}

#[test]
fn box_eval_biased_spec_shows_witness() {
    let dir = tempfile::tempdir().unwrap();
    let spec = biased_spec(dir.path());
    let out = otplab(&["box", "eval", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.code, 0);
    assert!(
        out.stdout.contains("witness alice_to_bob"),
        "{}",
        out.stdout
    );
    let (_, v) = json_of(&["box", "eval", "--spec", spec.to_str().unwrap()]);
    assert_eq!(v["ns"]["alice_to_bob_ns"], false);
    assert_eq!(v["ns"]["bob_to_alice_ns"], true);
    assert_eq!(v["spec"]["key"], "3/5");
    // Bob at y = 1 sees 1/2 ± 1/10 depending on x
    let w = &v["ns"]["witnesses"][0];
    assert_eq!(w["direction"], "alice_to_bob");
    assert_eq!(w["local_input"], 1);
}

#[test]
fn isotropic_json_uses_rational_strings() {
    let (code, v) = json_of(&["box", "eval", "--preset", "iso:3/4"]);
    assert_eq!(code, 0);
    let values: Vec<&str> = v["table"]["entries"]
        .as_object()
        .unwrap()
        .values()
        .map(|e| e.as_str().unwrap())
        .collect();
    assert!(values.contains(&"3/8") && values.contains(&"1/8"));
    assert!(values.iter().all(|e| *e == "3/8" || *e == "1/8"));
}

#[test]
fn ns_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = biased_spec(dir.path());
    assert_eq!(otplab(&["ns-check", "--preset", "iso:1/3"]).code, 0);
    let out = otplab(&["ns-check", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.code, 4);
    assert!(out.stdout.contains("verdict: signaling"));
}

#[test]
fn chsh_reports() {
    let (code, v) = json_of(&["chsh", "--preset", "pr", "--variant", "chsh-neg-11"]);
    assert_eq!(code, 0);
    assert_eq!(
        v["values"],
        json!([{ "variant": "chsh-neg-11", "value": "4/1" }])
    );
    assert_eq!(v["locality"]["is_local"], false);
    let (_, v) = json_of(&["chsh", "--preset", "iso:1/2"]);
    assert_eq!(v["values"].as_array().unwrap().len(), 8);
    assert_eq!(v["locality"]["max_chsh"], "0/1");
    assert_eq!(
        otplab(&["chsh", "--preset", "pr", "--variant", "chsh-neg-22"]).code,
        2
    );
    let dir = tempfile::tempdir().unwrap();
    let spec = biased_spec(dir.path());
    let (code, v) = json_of(&["chsh", "--spec", spec.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["locality"], Value::Null);
    let big = write(
        dir.path(),
        "big.json",
        r#"{"m": 3, "n": 2, "g": [0, 0, 0], "f": [[0, 0], [0, 1], [1, 1]], "key": "1/2"}"#,
    );
    assert_eq!(otplab(&["chsh", "--spec", big.to_str().unwrap()]).code, 3);
}

#[test]
fn vertex_analyze_and_random() {
    let dir = tempfile::tempdir().unwrap();
    let (_, pr) = json_of(&["box", "eval", "--preset", "pr"]);
    let pr_file = write(dir.path(), "pr.json", &pr["table"].to_string());
    let (code, v) = json_of(&["vertex", "analyze", "--table", pr_file.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["h"], json!([[0, 0], [0, 1]]));
    assert_eq!(v["round_trip"], true);

    let (_, iso) = json_of(&["box", "eval", "--preset", "iso:9/10"]);
    let iso_file = write(dir.path(), "iso.json", &iso["table"].to_string());
    let out = otplab(&["vertex", "analyze", "--table", iso_file.to_str().unwrap()]);
    assert_eq!(out.code, 4);
    assert!(out.stdout.contains("entries not in {0,1/2}"));

    let random = otplab(&["vertex", "random", "--seed", "7"]);
    assert_eq!(random.code, 0);
    let rfile = write(dir.path(), "random.json", &random.stdout);
    let (code, v) = json_of(&["vertex", "analyze", "--table", rfile.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["accepted"], true);
    assert_eq!(v["round_trip"], true);
    assert_eq!(v["h"].as_array().unwrap().len(), 3);
}

#[test]
fn vandam_examples() {
    let (code, v) = json_of(&["vandam", "--fn", "IP2", "--exhaustive", "--seed", "1"]);
    assert_eq!(code, 0);
    assert_eq!(
        (v["runs"].as_u64(), v["successes"].as_u64()),
        (Some(16), Some(16))
    );
    assert_eq!(v["pool_size"], 4);
    assert_eq!(v["bits_alice_to_bob"], json!({ "min": 1, "max": 1 }));
    assert_eq!(v["bits_bob_to_alice"]["max"], 0);

    let (code, v) = json_of(&[
        "vandam",
        "--fn",
        "RANDOM:42",
        "--m",
        "3",
        "--n",
        "3",
        "--exhaustive",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["success_rate"], "1/1");
    assert_eq!(v["runs"], 64);

    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("out.jsonl");
    let (code, v) = json_of(&[
        "vandam",
        "--fn",
        "AND",
        "--x",
        "1",
        "--y",
        "1",
        "--seed",
        "9",
        "--transcript",
        transcript.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["run"]["result"], 1);
    let text = std::fs::read_to_string(&transcript).unwrap();
    let events: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(events.len(), 4);
    assert_eq!(events.last().unwrap()["result"], 1);
}

#[test]
fn vandam_from_truth_table_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "ip2.hex",
        "# inner product on two bits\n2 2\n0536\n",
    );
    let (code, v) = json_of(&[
        "vandam",
        "--fn-file",
        file.to_str().unwrap(),
        "--exhaustive",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["function"]["file"], file.to_str().unwrap());
    assert_eq!(v["successes"], 16);
    let (_, v) = json_of(&[
        "vandam",
        "--fn-file",
        file.to_str().unwrap(),
        "--x",
        "11",
        "--y",
        "01",
    ]);
    assert_eq!(v["run"]["expected"], 1);
    assert_eq!(v["run"]["result"], 1);
    let bad = write(dir.path(), "bad.hex", "2 2\n053\n");
    assert_eq!(
        otplab(&["vandam", "--fn-file", bad.to_str().unwrap(), "--exhaustive"]).code,
        2
    );
}

#[test]
fn vandam_guard_and_mismatches() {
    let out = otplab(&[
        "vandam",
        "--fn",
        "RANDOM:1",
        "--m",
        "11",
        "--n",
        "10",
        "--exhaustive",
    ]);
    assert_eq!(out.code, 3, "{}", out.stderr);
    assert!(out.stderr.contains("20-bit"));
    assert_eq!(
        otplab(&["vandam", "--fn", "AND", "--x", "10", "--y", "1"]).code,
        3
    );
    assert_eq!(
        otplab(&["vandam", "--fn", "AND", "--x", "2", "--y", "1"]).code,
        2
    );
    assert_eq!(
        otplab(&["vandam", "--fn", "IP2", "--m", "3", "--exhaustive"]).code,
        3
    );
    assert_eq!(otplab(&["vandam", "--fn", "XOR", "--exhaustive"]).code, 3);
}

#[test]
fn simulate_otp_needs_seed() {
    let out = otplab(&["simulate-otp", "--preset", "pr", "--trials", "1000"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("OTPLAB_SEED"));
    let from_env = otplab_env(
        &[
            "simulate-otp",
            "--preset",
            "pr",
            "--trials",
            "1000",
            "--format",
            "json",
        ],
        Some("5"),
    );
    let from_flag = otplab(&[
        "simulate-otp",
        "--preset",
        "pr",
        "--trials",
        "1000",
        "--format",
        "json",
        "--seed",
        "5",
    ]);
    assert_eq!(from_env.code, 0);
    assert_eq!(from_env.stdout, from_flag.stdout);
    assert_eq!(
        otplab_env(&["simulate-otp", "--preset", "pr"], Some("abc")).code,
        2
    );
}

#[test]
fn simulate_otp_reports() {
    let (code, v) = json_of(&[
        "simulate-otp",
        "--preset",
        "anti-pr",
        "--trials",
        "20000",
        "--seed",
        "11",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["matches_direct_evaluation"], true);
    assert_eq!(v["fit"]["support_violations"], 0);
    assert_eq!(v["empirical"]["counts"]["0,1|1,1"], 0);
    assert_eq!(v["exact"]["entries"]["0,1|1,1"], "0/1");
    assert_eq!(
        otplab(&["simulate-otp", "--preset", "iso:1/2", "--seed", "1"]).code,
        3
    );
    let dir = tempfile::tempdir().unwrap();
    let spec = biased_spec(dir.path());
    assert_eq!(
        otplab(&[
            "simulate-otp",
            "--spec",
            spec.to_str().unwrap(),
            "--seed",
            "1"
        ])
        .code,
        3
    );
}

#[test]
fn ic_examples() {
    let (code, v) = json_of(&["ic", "--family", "notp", "--grid", "0.5:1.0:51"]);
    assert_eq!(code, 0);
    let i2: Vec<f64> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["I2_simulated"].as_f64().unwrap())
        .collect();
    assert_eq!(i2.len(), 51);
    assert!(i2[0].abs() < 1e-12 && (i2[50] - 2.0).abs() < 1e-12);
    assert!(i2.windows(2).all(|w| w[0] <= w[1]));
    let mu_star = v["threshold"]["mu_star"].as_f64().unwrap();
    assert!((mu_star - 0.88997).abs() < 1e-5);

    let (_, v) = json_of(&["ic", "--family", "noisy-ontic", "--grid", "0.5:0.5:1"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    assert_eq!(v["rows"][0]["I2_simulated"], 1.0);

    let (_, v) = json_of(&["ic", "--family", "notp", "--grid", "1:1:1"]);
    assert_eq!(v["rows"][0]["I2_simulated"], 2.0);
    assert_eq!(v["rows"][0]["ic_satisfied"], false);

    let out = otplab(&[
        "ic", "--family", "notp", "--grid", "0:1:3", "--format", "csv",
    ]);
    assert_eq!(out.code, 0);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert!(lines[0].starts_with("# mu_star=0.8899"));
    assert_eq!(
        lines[1],
        "mu,I2_simulated,I2_closed_form,discrepancy,ic_satisfied"
    );
    assert!(lines[3].starts_with("1/2,0,"));
    assert_eq!(lines.len(), 5);

    assert_eq!(
        otplab(&["ic", "--family", "notp", "--grid", "0.5:1.5:3"]).code,
        3
    );
    assert_eq!(
        otplab(&["ic", "--family", "notp", "--grid", "a:b:c"]).code,
        2
    );
    assert_eq!(otplab(&["ic", "--family", "quantum"]).code, 2);
}

#[test]
fn parse_and_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let partial = write(
        dir.path(),
        "partial.json",
        r#"{"m": 2, "n": 2, "g": [0, 0], "f": [[0, 0], [0]], "key": "1/2"}"#,
    );
    let garbage = write(dir.path(), "garbage.json", "{ not json");
    let bad_key = write(
        dir.path(),
        "bad_key.json",
        r#"{"m": 1, "n": 1, "g": [0], "f": [[1]], "key": "7/5"}"#,
    );
    for (args, code) in [
        (vec!["box", "eval", "--spec", partial.to_str().unwrap()], 2),
        (vec!["box", "eval", "--spec", garbage.to_str().unwrap()], 2),
        (vec!["box", "eval", "--spec", "/nonexistent/spec.json"], 2),
        (vec!["box", "eval", "--spec", bad_key.to_str().unwrap()], 3),
        (vec!["box", "eval", "--preset", "iso:5/4"], 3),
        (vec!["box", "eval", "--preset", "nope"], 2),
        (vec!["box", "frobnicate"], 2),
        (
            vec!["vertex", "analyze", "--preset", "pr", "--format", "csv"],
            2,
        ),
        (vec!["vertex", "random", "--m", "0", "--seed", "1"], 2),
    ] {
        let out = otplab(&args);
        assert_eq!(out.code, code, "{args:?}: {}", out.stderr);
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = otplab(&[
        "version",
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(
        otplab(&["version", "--output", "/nonexistent/dir/x"]).code,
        3
    );
}

#[test]
fn every_json_output_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let spec = biased_spec(dir.path());
    let notp = write(
        dir.path(),
        "notp.json",
        r#"{"m": 2, "n": 2, "g": [0, 0], "f": [[0, 0], [0, 1]], "keys": [["3/8", "1/8"], ["1/8", "3/8"]]}"#,
    );
    let spec = spec.to_str().unwrap();
    let notp = notp.to_str().unwrap();
    let transcript = dir.path().join("t.jsonl");
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("box-eval", vec!["box", "eval", "--preset", "pr"]),
        ("box-eval", vec!["box", "eval", "--spec", spec]),
        ("box-eval", vec!["box", "eval", "--spec", notp]),
        ("ns-check", vec!["ns-check", "--preset", "noisy-ontic:1/3"]),
        ("ns-check", vec!["ns-check", "--spec", spec]),
        ("chsh", vec!["chsh", "--preset", "anti-pr"]),
        ("chsh", vec!["chsh", "--spec", spec]),
        (
            "vertex-analyze",
            vec!["vertex", "analyze", "--preset", "pr"],
        ),
        (
            "vertex-analyze",
            vec!["vertex", "analyze", "--preset", "iso:9/10"],
        ),
        ("vertex-analyze", vec!["vertex", "analyze", "--spec", spec]),
        (
            "table",
            vec!["vertex", "random", "--m", "4", "--n", "2", "--seed", "3"],
        ),
        (
            "vandam",
            vec![
                "vandam",
                "--fn",
                "IP3",
                "--exhaustive",
                "--seed",
                "2",
                "--transcript",
                transcript.to_str().unwrap(),
            ],
        ),
        (
            "vandam",
            vec!["vandam", "--fn", "AND", "--x", "0", "--y", "1"],
        ),
        (
            "simulate-otp",
            vec![
                "simulate-otp",
                "--preset",
                "pr",
                "--trials",
                "5000",
                "--seed",
                "4",
            ],
        ),
        ("ic", vec!["ic", "--family", "notp", "--grid", "0:1:11"]),
        (
            "ic",
            vec!["ic", "--family", "noisy-ontic", "--grid", "0:1:11"],
        ),
        ("version", vec!["version"]),
    ];
    for (schema_name, args) in cases {
        let (_, v) = json_of(&args);
        assert_valid(schema_name, &v);
    }
    let (_, spec_doc) = json_of(&["box", "eval", "--spec", notp]);
    assert_valid("box-spec", &spec_doc["spec"]);
    assert_valid("table", &spec_doc["table"]);
    let text = std::fs::read_to_string(&transcript).unwrap();
    assert_eq!(
        text.lines().filter(|l| l.contains("\"result\"")).count(),
        64
    );
    for line in text.lines() {
        assert_valid("transcript-event", &serde_json::from_str(line).unwrap());
    }
}

#[test]
fn schemas_reject_malformed_documents() {
    let bad_table = json!({ "m": 1, "n": 1, "entries": { "0,0|0,0": "0.5" } });
    assert!(!schema("table").is_valid(&bad_table));
    let bad_spec = json!({ "m": 1, "n": 1, "g": [2], "f": [[0]], "key": "1/2" });
    assert!(!schema("box-spec").is_valid(&bad_spec));
}

#[test]
fn csv_outputs() {
    let out = otplab(&["box", "eval", "--preset", "iso:3/4", "--format", "csv"]);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines[0], "x,y,a,b,p");
    assert_eq!(lines[1], "0,0,0,0,3/8");
    assert_eq!(lines.len(), 17);
    let out = otplab(&["chsh", "--preset", "pr", "--format", "csv"]);
    assert!(out.stdout.contains("chsh-neg-11,4/1"));
}
