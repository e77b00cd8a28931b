//! Acceptance suite. Runs every criterion, prints one `[PASS]`/`[FAIL]` line
//! each, and exits non-zero if any failed.

use std::f64::consts::E;
use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::Command;

use poisson_recursion::fields::nijenhuis_torsion_numeric;
use poisson_recursion::recursion::{
    build_leaf, build_r_point, effective_samples, recursion_operator_at, splitting_independence_check,
};
use poisson_recursion::{Chart, Matrix, ScalarExpr, SplitMix64, TensorField11};
use poisson_recursion_cli::{parse_spec, ProblemSpec};
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

const BIN: &str = env!("CARGO_BIN_EXE_poisrec");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn load(name: &str) -> ProblemSpec {
    parse_spec(&fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

/// Runs the binary with `--out` and returns (exit code, raw bytes, parsed report).
fn cli(cmd: &str, name: &str, out: &Path) -> (i32, Vec<u8>, Value) {
    let status = Command::new(BIN)
        .args([
            cmd,
            "--spec",
            fixture(name).to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .expect("spawn poisrec");
    let bytes = fs::read(out).unwrap_or_default();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status.code().unwrap_or(-1), bytes, value)
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(v.clone()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            assert_eq!(x.len(), y.len());
            x.iter().zip(y).map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

fn mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            assert_eq!(row.len(), inner);
            (0..cols).map(|j| (0..inner).map(|t| row[t] * b[t][j]).sum()).collect()
        })
        .collect()
}

fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

fn ac1() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut worst = 0.0_f64;
    for name in ["constant_scaling.json", "exp_scaling.json", "so3.json"] {
        let (code, _, report) = cli("build", name, &dir.path().join("out.json"));
        ensure(code == 0, format!("{name}: exit {code}"))?;
        ensure(
            report["verdict"] == "EXISTS_CONSTRUCTED",
            format!("{name}: {}", report["verdict"]),
        )?;
        let reported = num(&report["max_residual_p0"]);
        ensure(reported <= 1e-10, format!("{name}: reported residual {reported:e}"))?;
        let spec = load(name);
        for r in report["results"].as_array().unwrap() {
            let point: Vec<f64> = serde_json::from_value(r["point"].clone()).unwrap();
            let w = rows(&spec.w.eval(&point).unwrap());
            let wp = rows(&spec.w_prime.eval(&point).unwrap());
            let res = max_abs_diff(&mul(&matrix(&r["R"]), &w), &wp);
            ensure(res <= 1e-10, format!("{name} at {point:?}: |RW - W'| = {res:e}"))?;
            worst = worst.max(res).max(reported);
        }
    }
    Ok(format!("max residual_p0 {worst:.2e} <= 1e-10 on fixtures a, b, c"))
}

fn ac2() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, report) = cli("build", "orthogonal_planes.json", &dir.path().join("a.json"));
    ensure(code == 1, format!("orthogonal planes: exit {code}"))?;
    ensure(
        report["verdict"] == "REFUSED_DISTRIBUTION_MISMATCH",
        format!("orthogonal planes: {}", report["verdict"]),
    )?;
    let defect = num(&report["max_subspace_defect"]);
    ensure(defect >= 0.99, format!("defect {defect}"))?;
    ensure(report.get("results").is_none(), "partial results emitted")?;

    let (code, _, report) = cli("build", "rank_mismatch.json", &dir.path().join("b.json"));
    ensure(code == 1, format!("rank mismatch: exit {code}"))?;
    ensure(
        report["verdict"] == "REFUSED_RANK_MISMATCH",
        format!("rank mismatch: {}", report["verdict"]),
    )?;
    Ok(format!(
        "REFUSED_DISTRIBUTION_MISMATCH (defect {defect:.4}) and REFUSED_RANK_MISMATCH, exit 1"
    ))
}

fn ac3() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, report) = cli("build", "exp_scaling.json", &dir.path().join("out.json"));
    ensure(code == 0, format!("exit {code}"))?;
    let results = report["results"].as_array().unwrap();
    ensure(results.len() == 20, format!("{} samples", results.len()))?;
    let mut worst = 0.0_f64;
    for r in results {
        let z3 = num(&r["point"][2]);
        let f = z3.exp();
        let oracle = vec![vec![f, 0.0, 0.0], vec![0.0, f, 0.0], vec![0.0, 0.0, 1.0]];
        worst = worst.max(max_abs_diff(&matrix(&r["R"]), &oracle));
    }
    ensure(worst <= 1e-9, format!("max |R - diag(e^z3, e^z3, 1)| = {worst:e}"))?;
    Ok(format!("R = diag(e^z3, e^z3, 1) to {worst:.2e} at 20 samples"))
}

fn ac4() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, report) = cli("check", "non_poisson.json", &dir.path().join("a.json"));
    ensure(code == 1, format!("non-Poisson: exit {code}"))?;
    ensure(
        report["verdict"] == "FAILED_JACOBI",
        format!("non-Poisson: {}", report["verdict"]),
    )?;
    let samples = report["samples"].as_array().unwrap();
    ensure(samples.len() == 20, format!("{} samples", samples.len()))?;
    let mut worst = 0.0_f64;
    for s in samples {
        // Only l = 2 contributes to the (1, 2, 3) triple: w^12 * d2(w^23) = 1.
        worst = worst.max((num(&s["jacobi_w"]) - 1.0).abs());
    }
    ensure(worst <= 1e-12, format!("|jacobi - 1| = {worst:e}"))?;

    let (code, _, report) = cli("check", "so3.json", &dir.path().join("b.json"));
    ensure(code == 0, format!("so3: exit {code}"))?;
    let so3 = num(&report["max_jacobi_w"]).max(num(&report["max_jacobi_w_prime"]));
    ensure(so3 <= 1e-10, format!("so3 Jacobi residual {so3:e}"))?;
    Ok(format!(
        "non-Poisson residual 1 +- {worst:.1e} at 20 points (FAILED_JACOBI); so3 residual {so3:.2e}"
    ))
}

fn ac5() -> Outcome {
    let mut worst = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut count = 0;
    for name in [
        "constant_scaling.json",
        "exp_scaling.json",
        "so3.json",
        "identity_r.json",
        "identity_r_scaled.json",
    ] {
        let spec = load(name);
        let (samples, _) = effective_samples(&spec.w, &spec.w_prime, &spec.samples.points);
        for p in samples {
            let leaf = build_leaf(&spec.w, &spec.w_prime, p, &spec.tolerances).map_err(|e| e.to_string())?;
            let res = build_r_point(&leaf);
            let w = rows(&spec.w.eval(p).unwrap());
            let wp = rows(&spec.w_prime.eval(p).unwrap());
            let b = rows(&res.basis);
            let bt = transpose(&b);
            let m = mul(&mul(&bt, &w), &b);
            let mp = mul(&mul(&bt, &wp), &b);
            let k = m.len();

            let duality = max_abs_diff(&rows(&res.r_star), &transpose(&rows(&res.r)));
            let leaf_id = max_abs_diff(&mul(&rows(&res.r_leaf), &m), &mp);
            let inv = max_abs_diff(&mul(&m, &rows(&res.omega_leaf)), &identity(k));
            let inv_bound = 1e-10 * res.condition;
            ensure(duality <= 1e-11, format!("{name} at {p:?}: |R* - R^T| = {duality:e}"))?;
            ensure(leaf_id <= 1e-10, format!("{name} at {p:?}: |R_F M - M'| = {leaf_id:e}"))?;
            ensure(
                inv <= inv_bound,
                format!("{name} at {p:?}: |M Omega - I| = {inv:e} > {inv_bound:e}"),
            )?;
            worst = (
                worst.0.max(duality),
                worst.1.max(leaf_id),
                worst.2.max(inv / res.condition),
            );
            count += 1;
        }
    }
    Ok(format!(
        "{count} samples: |R*-R^T| {:.1e}, |R_F M-M'| {:.1e}, |M Omega-I|/cond {:.1e}",
        worst.0, worst.1, worst.2
    ))
}

fn ac6() -> Outcome {
    let spec = load("so3.json");
    let mut worst = 0.0_f64;
    for p in &spec.samples.points {
        let leaf = build_leaf(&spec.w, &spec.w_prime, p, &spec.tolerances).map_err(|e| e.to_string())?;
        worst = worst.max(splitting_independence_check(&leaf, 25, 42));
    }
    ensure(worst <= 1e-10, format!("max change {worst:e}"))?;
    Ok(format!(
        "25 leaf-basis rotations (seed 42) change R by <= {worst:.2e} on fixture c"
    ))
}

fn ac7() -> Outcome {
    let chart = Chart::new(["z1", "z2", "z3"]).unwrap();
    let r = TensorField11::from_rows(
        &chart,
        &[
            vec!["exp(z3)", "0", "0"],
            vec!["0", "exp(z3)", "0"],
            vec!["0", "0", "1"],
        ],
    )
    .unwrap();
    let point = [0.0, 0.0, 1.0];
    let symbolic = r.nijenhuis_torsion(&point).unwrap();
    // N^1_{31} = R^l_3 d_l R^1_1 - R^1_l d_3 R^l_1 = e - e^2.
    let n131 = symbolic.get(0, 2, 0);
    let err = (n131 - (E - E * E)).abs();
    ensure(err <= 1e-9, format!("N^1_31 = {n131}, off by {err:e}"))?;

    let numeric = nijenhuis_torsion_numeric(|p| r.eval(p), &point, 1e-5).unwrap();
    let sym_vs_num = symbolic
        .as_slice()
        .iter()
        .zip(numeric.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(sym_vs_num <= 1e-6, format!("symbolic vs numeric {sym_vs_num:e}"))?;

    // The operator produced by the builder on fixture b has the same torsion.
    let spec = load("exp_scaling.json");
    let built = nijenhuis_torsion_numeric(
        |p| recursion_operator_at(&spec.w, &spec.w_prime, p, &spec.tolerances),
        &point,
        1e-5,
    )
    .map_err(|e| e.to_string())?;
    let built_vs_sym = symbolic
        .as_slice()
        .iter()
        .zip(built.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(
        built_vs_sym <= 1e-6,
        format!("built R torsion differs by {built_vs_sym:e}"),
    )?;
    Ok(format!(
        "N^1_31 = e - e^2 to {err:.1e}; numeric agreement {sym_vs_num:.1e} (symbolic R), {built_vs_sym:.1e} (built R)"
    ))
}

const CORPUS: [&str; 30] = [
    "x + y * z",
    "x * y * z",
    "x^2 + y^3 - z^4",
    "sin(x) * cos(y)",
    "exp(x * y) - z",
    "log(x + y + z)",
    "sqrt(x^2 + y^2 + z^2)",
    "x / (y + z)",
    "(x - y) / (1 + z^2)",
    "x^y",
    "2^x * z",
    "x^(-1.5) + y^0.5",
    "exp(-x^2 - y^2) * sin(z)",
    "log(x) * log(y) + log(z)",
    "sin(x + y + z)^2",
    "cos(x * y * z)",
    "-x^3 + 3 * x * y^2",
    "(x + y + z)^5",
    "1 / (x * y * z)",
    "sqrt(x * y) / z",
    "exp(sin(x)) + cos(exp(y - z))",
    "x^z + z^x",
    "sin(x) / cos(y)",
    "log(sqrt(x) + y^2) * z",
    "(x^2 - y^2) / (x^2 + y^2 + z^2)",
    "exp(x) * exp(-y) * exp(z / 2)",
    "-(-x)^2 * y",
    "sqrt(1 + sin(x * y)^2) - z^(1/3)",
    "x^(y * z) - log(x * y * z)",
    "((x + 1) * (y - 2) * (z + 3))^2 / 100",
];

fn ac8() -> Outcome {
    let chart = Chart::new(["x", "y", "z"]).unwrap();
    let mut rng = SplitMix64::new(8);
    let h = 1e-6;
    let mut worst = 0.0_f64;
    for text in CORPUS {
        let e = ScalarExpr::parse(text, &chart).map_err(|err| format!("{text}: {err}"))?;
        for _ in 0..10 {
            let p: Vec<f64> = (0..3).map(|_| rng.uniform(0.5, 1.5)).collect();
            let grad = e.gradient(&p).map_err(|err| format!("{text}: {err}"))?;
            for (l, ad) in grad.iter().enumerate() {
                let mut plus = p.clone();
                let mut minus = p.clone();
                plus[l] += h;
                minus[l] -= h;
                let fd = (e.eval(&plus).unwrap() - e.eval(&minus).unwrap()) / (2.0 * h);
                let rel = (ad - fd).abs() / (1.0 + fd.abs());
                ensure(rel <= 1e-6, format!("{text} d/d{l} at {p:?}: AD {ad} vs FD {fd}"))?;
                worst = worst.max(rel);
            }
        }
    }
    Ok(format!(
        "30 expressions x 10 points: max |AD - FD| / (1 + |FD|) = {worst:.1e}"
    ))
}

fn ac9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (c1, first, _) = cli("build", "so3.json", &dir.path().join("run1.json"));
    let (c2, second, _) = cli("build", "so3.json", &dir.path().join("run2.json"));
    ensure(c1 == 0 && c2 == 0, format!("exit codes {c1}, {c2}"))?;
    ensure(!first.is_empty(), "empty output")?;
    ensure(first == second, "outputs differ")?;
    Ok(format!(
        "two builds of fixture c are byte-identical ({} bytes)",
        first.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("AC1", "round-trip", ac1),
        ("AC2", "refusal", ac2),
        ("AC3", "closed form", ac3),
        ("AC4", "Jacobi detector", ac4),
        ("AC5", "duality and leaf identities", ac5),
        ("AC6", "splitting independence", ac6),
        ("AC7", "torsion oracle", ac7),
        ("AC8", "AD vs finite differences", ac8),
        ("AC9", "determinism", ac9),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, title, run) in criteria {
        let outcome = panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("[PASS] {id} {title}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {title}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
