use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sle-wedge"));
    c.env_remove("SLE_WEDGE_SEED")
        .env_remove("SLE_WEDGE_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let o = run(args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn replay_into(m: &Value, dir: &Path) -> Output {
    let mut args: Vec<String> = m["replay"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    args.extend(["--out".into(), dir.display().to_string()]);
    bin().args(&args).output().unwrap()
}

#[test]
fn exponent_examples() {
    assert_eq!(
        stdout(&["exponent", "wedge-gamma", "--n", "1", "--theta", "1"]).trim(),
        "-0.046875"
    );
    assert_eq!(
        stdout(&[
            "exponent",
            "wedge-gamma",
            "--n",
            "1",
            "--theta",
            "1",
            "--exact"
        ])
        .trim(),
        "-3/64"
    );
    assert_eq!(
        stdout(&[
            "exponent",
            "hiding-sigma",
            "--alpha",
            "0.625",
            "--beta",
            "0.625"
        ])
        .trim(),
        "0.75"
    );
    assert_eq!(
        stdout(&["exponent", "alpha-from-rho", "--rho", "0"]).trim(),
        "0.625"
    );
    assert_eq!(
        stdout(&[
            "exponent",
            "wedge-hiding",
            "--alpha",
            "5/8",
            "--beta",
            "5/8",
            "--theta",
            "1/2"
        ])
        .trim(),
        "2.75"
    );
}

#[test]
fn exponent_matches_library_bit_for_bit() {
    use sle_wedge::exponents::{wedge_gamma, WedgeAngle};
    let text = stdout(&[
        "exponent",
        "wedge-gamma",
        "--n",
        "3",
        "--sweep",
        "theta=0.1:1:7",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,gamma"));
    for line in lines {
        let (t, g) = line.split_once(',').unwrap();
        let lib = wedge_gamma(3, WedgeAngle::new(t.parse::<f64>().unwrap()).unwrap())
            .unwrap()
            .value();
        assert_eq!(g.parse::<f64>().unwrap(), lib);
    }
}

#[test]
fn exponent_errors_have_distinct_codes() {
    assert_eq!(run(&["exponent", "no-such-law"]).status.code(), Some(1));
    assert_eq!(run(&["exponent", "alpha-from-rho"]).status.code(), Some(1));
    assert_eq!(
        run(&["exponent", "alpha-from-rho", "--rho", "0", "--beta", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&[
            "exponent",
            "hiding-sigma",
            "--alpha",
            "1",
            "--beta",
            "1",
            "--exact"
        ])
        .status
        .code(),
        Some(1)
    );
    let o = run(&["exponent", "alpha-from-rho", "--rho", "-3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho must exceed -2"));
    assert!(o.stdout.is_empty());
}

#[test]
fn wedge_map_rows_and_fit() {
    let text = stdout(&["wedge-map", "--theta", "0.5", "--r-grid", "1"]);
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((row[1] + 0.118034).abs() < 1e-6);
    assert!((row[2] - 0.894427).abs() < 1e-6);

    let flat = stdout(&["wedge-map", "--theta", "1", "--r-grid", "1,10,1000"]);
    assert!(flat
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(2) == Some("1")));

    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "wedge-map",
        "--theta",
        "0.5",
        "--r-min",
        "100",
        "--r-max",
        "1e6",
        "--points",
        "9",
        "--out",
    ])
    .status;
    assert_eq!(o.code(), Some(1), "--out needs a value");
    let d = dir.path().to_str().unwrap();
    stdout(&[
        "wedge-map",
        "--theta",
        "0.5",
        "--r-min",
        "100",
        "--r-max",
        "1e6",
        "--points",
        "9",
        "--out",
        d,
    ]);
    let m = manifest(dir.path());
    assert!((m["results"]["c_hat"].as_f64().unwrap() - 1.0).abs() < 0.01);
    assert_eq!(m["command"], "wedge-map");
}

#[test]
fn manifests_replay_exactly() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o = run(&[
        "sle-avoid",
        "--trials",
        "200",
        "--seed",
        "17",
        "--R",
        "2",
        "--out",
        a.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(
        o.stdout.is_empty(),
        "data goes to files when --out is given"
    );
    let m = manifest(a.path());
    assert_eq!(m["seeds"][0], 17);
    assert!(replay_into(&m, b.path()).status.success());
    assert_eq!(m["outputs"], manifest(b.path())["outputs"]);
    let first = std::fs::read(a.path().join("sle_avoid.json")).unwrap();
    assert_eq!(
        first,
        std::fs::read(b.path().join("sle_avoid.json")).unwrap()
    );

    let (c, d) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    stdout(&[
        "saw",
        "pivot",
        "--n",
        "20,40",
        "--sweeps",
        "20",
        "--seed",
        "3",
        "--out",
        c.path().to_str().unwrap(),
    ]);
    let m = manifest(c.path());
    assert!(replay_into(&m, d.path()).status.success());
    assert_eq!(m["outputs"], manifest(d.path())["outputs"]);
}

#[test]
fn sle_avoid_is_independent_of_workers() {
    let hits = |w: &str| {
        let v: Value = serde_json::from_str(&stdout(&[
            "sle-avoid",
            "--trials",
            "200",
            "--seed",
            "5",
            "--workers",
            w,
        ]))
        .unwrap();
        assert!(v["predicted_p"].as_f64().is_some());
        v["estimate"]["hits"].as_u64().unwrap()
    };
    assert_eq!(hits("1"), hits("8"));
}

#[test]
fn sle_avoid_usage_and_domain_errors() {
    assert_eq!(run(&["sle-avoid", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(run(&["sle-avoid", "--trials", "10"]).status.code(), Some(2));
    assert_eq!(
        run(&["sle-avoid", "--trials", "200", "--dump-trace", "3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["sle-avoid", "--R", "1", "--length", "1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn trace_dump_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&[
        "sle-avoid",
        "--trials",
        "100",
        "--dump-trace",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("trace_0.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,re,im"));
    assert!(csv.lines().count() > 10);
    assert!(manifest(dir.path())["outputs"]["trace_0.csv"].is_string());
}

#[test]
fn config_file_then_env_seed_then_flag() {
    let dir = tempfile::tempdir().unwrap();
    let ini = dir.path().join("run.ini");
    std::fs::write(&ini, "seed = 1\n\n[sle-avoid]\ntrials = 150\nseed = 2\n").unwrap();
    let params = |extra: &[&str], env_seed: Option<&str>| {
        let out = tempfile::tempdir().unwrap();
        let mut c = bin();
        c.env("SLE_WEDGE_CONFIG", &ini);
        if let Some(s) = env_seed {
            c.env("SLE_WEDGE_SEED", s);
        }
        let o = c
            .args(["sle-avoid", "--out", out.path().to_str().unwrap()])
            .args(extra)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m = manifest(out.path());
        (
            m["results"]["trials"].as_u64().unwrap(),
            m["seeds"][0].as_u64().unwrap(),
        )
    };
    assert_eq!(params(&[], None), (150, 2));
    assert_eq!(params(&[], Some("9")), (150, 9));
    assert_eq!(
        params(&["--seed", "4", "--trials", "120"], Some("9")),
        (120, 4)
    );

    std::fs::write(&ini, "[sle-avoid]\ntrials = many\n").unwrap();
    let o = bin()
        .env("SLE_WEDGE_CONFIG", &ini)
        .args(["sle-avoid"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn saw_examples() {
    let counts = stdout(&["saw", "enumerate", "--mask", "quarter", "--nmax", "10"]);
    assert_eq!(counts.lines().nth(2), Some("1,2"));
    assert_eq!(counts.lines().count(), 12);

    let pivot: Value =
        serde_json::from_str(&stdout(&["saw", "pivot", "--n", "1", "--sweeps", "5"])).unwrap();
    assert_eq!(pivot["runs"][0]["mean_r2"], 1.0);

    let ratio: Value = serde_json::from_str(&stdout(&[
        "saw", "ratio", "--a", "quarter", "--b", "half", "--nmax", "14",
    ]))
    .unwrap();
    assert_eq!(ratio["predicted"], -0.46875);
    assert!(ratio["series"]["extrapolated"].as_f64().unwrap() < 0.0);

    assert_eq!(
        run(&["saw", "enumerate", "--nmax", "40"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["saw", "enumerate", "--mask", "cone"]).status.code(),
        Some(1)
    );
}

#[test]
fn verify_quick_passes_and_catches_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "quick", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let m = manifest(dir.path());
    let criteria = m["results"]["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 5);
    assert!(criteria
        .iter()
        .all(|c| c["measured"].is_string() && c["target"].is_string()));

    let o = run(&["verify", "quick", "--tamper-hiding-sign"]);
    assert_eq!(o.status.code(), Some(3));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(
        text.lines().any(|l| l.starts_with("[FAIL] criterion  1")),
        "{text}"
    );
}
