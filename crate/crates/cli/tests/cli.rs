use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_poisrec");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run_raw(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn poisrec")
}

fn run(cmd: &str, spec: &Path, extra: &[&str]) -> (i32, Value) {
    let mut args = vec![cmd, "--spec", spec.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run_raw(&args);
    let code = out.status.code().unwrap();
    let value = if out.stdout.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&out.stdout).expect("stdout is JSON")
    };
    (code, value)
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(v.clone()).unwrap()
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn exit_codes_follow_verdicts() {
    let cases = [
        ("check", "so3.json", 0, Some("EXISTS_CONSTRUCTED")),
        (
            "check",
            "orthogonal_planes.json",
            1,
            Some("REFUSED_DISTRIBUTION_MISMATCH"),
        ),
        ("check", "rank_mismatch.json", 1, Some("REFUSED_RANK_MISMATCH")),
        ("check", "non_poisson.json", 1, Some("FAILED_JACOBI")),
        ("build", "rank_mismatch.json", 1, Some("REFUSED_RANK_MISMATCH")),
        ("leafwise", "non_poisson.json", 1, Some("FAILED_JACOBI")),
        ("verify", "identity_r.json", 0, None),
        ("verify", "identity_r_scaled.json", 1, None),
    ];
    for (cmd, name, code, verdict) in cases {
        let (got, report) = run(cmd, &fixture(name), &[]);
        assert_eq!(got, code, "{cmd} {name}");
        if let Some(v) = verdict {
            assert_eq!(report["verdict"], v, "{cmd} {name}");
        }
    }
}

#[test]
fn rank_not_constant_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_temp(
        &dir,
        "drop.json",
        r#"{"dim": 3, "coords": ["x", "y", "z"],
            "w": [{"i": 1, "j": 2, "expr": "x"}],
            "samples": {"mode": "explicit", "points": [[1, 0, 0], [0, 1, 0]]}}"#,
    );
    let (code, report) = run("check", &spec, &[]);
    assert_eq!(code, 1);
    assert_eq!(report["verdict"], "REFUSED_RANK_NOT_CONSTANT");
}

#[test]
fn refusal_emits_no_partial_results() {
    let (code, report) = run("build", &fixture("orthogonal_planes.json"), &[]);
    assert_eq!(code, 1);
    assert!(report.get("results").is_none());
    assert!(report.get("max_residual_p0").is_none());
    assert!(report["failure"]["detail"].as_str().unwrap().contains("distributions"));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let malformed = write_temp(&dir, "bad.json", "{\"dim\": 3,,}");
    let unknown = write_temp(
        &dir,
        "z9.json",
        r#"{"dim": 3, "coords": ["z1", "z2", "z3"], "w": [{"i": 1, "j": 2, "expr": "z9"}],
            "samples": {"mode": "explicit", "points": [[0, 0, 0]]}}"#,
    );
    let no_seed = write_temp(
        &dir,
        "seed.json",
        r#"{"dim": 1, "coords": ["x"], "w": [],
            "samples": {"mode": "random", "box": [[0, 1]], "count": 2}}"#,
    );
    let odd = write_temp(
        &dir,
        "odd.json",
        r#"{"dim": 2, "coords": ["x", "y"], "w": [{"i": 1, "j": 2, "expr": "1 / x"}],
            "samples": {"mode": "explicit", "points": [[0, 1]]}}"#,
    );
    for (spec, needle) in [
        (&malformed, "line 1"),
        (&unknown, "w[1][2]"),
        (&no_seed, "samples.seed"),
        (&odd, "division by zero"),
        (&dir.path().join("missing.json"), "cannot read"),
    ] {
        let out = run_raw(&["check", "--spec", spec.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{}", spec.display());
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(needle), "{stderr}");
        assert!(out.stdout.is_empty());
    }

    let so3 = fixture("so3.json");
    let so3 = so3.to_str().unwrap();
    for args in [
        vec!["verify", "--spec", so3],
        vec!["check"],
        vec!["frobnicate", "--spec", so3],
        vec!["check", "--spec", so3, "--tol-rank", "-1"],
        vec!["check", "--spec", so3, "--jobs", "0"],
        vec!["check", "--spec", so3, "--tol-residual", "abc"],
    ] {
        assert_eq!(run_raw(&args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(run_raw(&["--help"]).status.code(), Some(0));
}

#[test]
fn skip_flag_turns_domain_errors_into_skipped_samples() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"dim": 3, "coords": ["x", "y", "z"],
        "w": [{"i": 1, "j": 2, "expr": "1 / z"}],
        "samples": {"mode": "explicit", "points": [[0, 0, 1], [0, 0, 0], [0, 0, 2]]}FLAGS}"#;
    let plain = write_temp(&dir, "plain.json", &text.replace("FLAGS", ""));
    let skip = write_temp(
        &dir,
        "skip.json",
        &text.replace("FLAGS", r#", "flags": {"skip_singular_samples": true}"#),
    );
    assert_eq!(run("check", &plain, &[]).0, 2);
    let stderr = run_raw(&["check", "--spec", skip.to_str().unwrap()]).stderr;
    assert!(String::from_utf8_lossy(&stderr).contains("warning: skipped sample 1"));
    let (code, report) = run("build", &skip, &[]);
    assert_eq!(code, 0);
    assert_eq!(report["skipped"].as_array().unwrap().len(), 1);
    assert_eq!(report["skipped"][0]["index"], 1);
    let idx: Vec<u64> = report["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["index"].as_u64().unwrap())
        .collect();
    assert_eq!(idx, vec![0, 2]);
}

#[test]
fn reports_echo_tolerances_and_seed() {
    let (_, report) = run("check", &fixture("so3.json"), &["--tol-subspace", "1e-7"]);
    assert_eq!(report["tolerances"]["subspace"].as_f64(), Some(1e-7));
    assert_eq!(report["tolerances"]["rank"].as_f64(), Some(1e-9));
    assert_eq!(report["tolerances"]["residual"].as_f64(), Some(1e-8));
    assert_eq!(report["sampling"]["seed"], 20240917);
    assert_eq!(report["sampling"]["mode"], "random");
    assert_eq!(report["sampling"]["count"], 50);
    assert_eq!(report["common_rank"], 2);
    assert_eq!(report["samples"].as_array().unwrap().len(), 50);
}

#[test]
fn output_is_independent_of_jobs_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixture("so3.json");
    let out = dir.path().join("build.json");
    let one = run_raw(&["build", "--spec", spec.to_str().unwrap(), "--jobs", "1"]);
    let four = run_raw(&["build", "--spec", spec.to_str().unwrap(), "--jobs", "4"]);
    let file = run_raw(&[
        "build",
        "--spec",
        spec.to_str().unwrap(),
        "--jobs",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(file.stdout.is_empty());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, fs::read(&out).unwrap());
}

#[test]
fn constant_pair_builds_globally_from_one_point() {
    let (code, report) = run("build", &fixture("constant_scaling.json"), &[]);
    assert_eq!(code, 0);
    assert_eq!(report["globally_valid"], true);
    let results = report["results"].as_array().unwrap();
    assert_eq!(results.len(), 1);
    assert_eq!(
        matrix(&results[0]["R"]),
        vec![vec![2.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]]
    );

    let (_, report) = run("build", &fixture("so3.json"), &[]);
    assert_eq!(report["globally_valid"], false);
}

#[test]
fn equal_structures_build_identity() {
    let (code, report) = run("build", &fixture("identity_r.json"), &[]);
    assert_eq!(code, 0);
    for r in report["results"].as_array().unwrap() {
        let m = matrix(&r["R"]);
        for (i, row) in m.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((x - want).abs() <= 1e-12, "{m:?}");
            }
        }
    }
}

#[test]
fn verify_reports_torsion_without_failing_on_it() {
    let (code, report) = run("verify", &fixture("exp_scaling.json"), &[]);
    assert_eq!(code, 0);
    let oracle = (std::f64::consts::E - std::f64::consts::E.powi(2)).abs();
    for s in report["samples"].as_array().unwrap() {
        let z3 = s["point"][2].as_f64().unwrap();
        let want = (z3.exp() - (2.0 * z3).exp()).abs();
        assert!((s["torsion_max"].as_f64().unwrap() - want).abs() <= 1e-9 * (1.0 + want));
    }
    assert!((report["max_torsion"].as_f64().unwrap() - oracle).abs() <= 1e-9 * oracle);

    let (code, report) = run("verify", &fixture("identity_r_scaled.json"), &[]);
    assert_eq!(code, 1);
    assert_eq!(report["passed"], false);
    assert_eq!(report["max_residual_p0"].as_f64(), Some(1.0));

    let (code, report) = run("verify", &fixture("identity_r.json"), &[]);
    assert_eq!(code, 0);
    assert_eq!(report["max_torsion"].as_f64(), Some(0.0));
}

#[test]
fn leafwise_forms_are_leaf_inverses() {
    let (code, report) = run("leafwise", &fixture("constant_scaling.json"), &[]);
    assert_eq!(code, 0);
    let r = &report["results"][0];
    // Pivoted Gram-Schmidt on the columns of W picks B = [-e2, e1], a proper
    // rotation of [e1, e2], so the 2x2 form is the same in either basis.
    assert_eq!(matrix(&r["B"]), vec![vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, 0.0]]);
    assert_eq!(matrix(&r["omega_leaf"]), vec![vec![0.0, -1.0], vec![1.0, 0.0]]);
    assert_eq!(matrix(&r["omega_leaf_prime"]), vec![vec![0.0, -0.5], vec![0.5, 0.0]]);

    let dir = tempfile::tempdir().unwrap();
    let spec = write_temp(
        &dir,
        "so3_pole.json",
        r#"{"dim": 3, "coords": ["z1", "z2", "z3"],
            "w": [{"i": 1, "j": 2, "expr": "z3"}, {"i": 1, "j": 3, "expr": "-z2"}, {"i": 2, "j": 3, "expr": "z1"}],
            "samples": {"mode": "explicit", "points": [[0, 0, 1]]}}"#,
    );
    let (code, report) = run("leafwise", &spec, &[]);
    assert_eq!(code, 0);
    let r = &report["results"][0];
    // M = BᵀWB in whatever leaf basis was chosen; Ω_F must invert it.
    let b = matrix(&r["B"]);
    let w = [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
    let omega = matrix(&r["omega_leaf"]);
    let mut m = [[0.0; 2]; 2];
    for (a, row) in m.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    *slot += b[i][a] * w[i][j] * b[j][c];
                }
            }
        }
    }
    for (a, m_row) in m.iter().enumerate() {
        for c in 0..2 {
            let prod: f64 = m_row.iter().zip(&omega).map(|(x, o)| x * o[c]).sum();
            let want = if a == c { 1.0 } else { 0.0 };
            assert!((prod - want).abs() <= 1e-12);
        }
    }
    // The leaf here is the z1-z2 plane.
    for row in &b {
        assert!(row.len() == 2);
    }
    assert!(b[2].iter().all(|x| x.abs() <= 1e-15));
}

fn collect_keys(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                out.push(k.clone());
                collect_keys(x, out);
            }
        }
        Value::Array(xs) => xs.iter().for_each(|x| collect_keys(x, out)),
        _ => {}
    }
}

#[test]
fn every_report_key_is_documented_in_the_schema() {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(schema_path).unwrap()).unwrap();
    let mut documented = Vec::new();
    fn property_names(v: &Value, out: &mut Vec<String>) {
        match v {
            Value::Object(map) => {
                if let Some(Value::Object(props)) = map.get("properties") {
                    out.extend(props.keys().cloned());
                }
                map.values().for_each(|x| property_names(x, out));
            }
            Value::Array(xs) => xs.iter().for_each(|x| property_names(x, out)),
            _ => {}
        }
    }
    property_names(&schema, &mut documented);

    for (cmd, name) in [
        ("check", "so3.json"),
        ("build", "so3.json"),
        ("build", "rank_mismatch.json"),
        ("verify", "exp_scaling.json"),
        ("leafwise", "exp_scaling.json"),
    ] {
        let (_, report) = run(cmd, &fixture(name), &[]);
        let mut keys = Vec::new();
        collect_keys(&report, &mut keys);
        for k in keys {
            assert!(documented.contains(&k), "{cmd}: key {k:?} missing from schema");
        }
    }
}
