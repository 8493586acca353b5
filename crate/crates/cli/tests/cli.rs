use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn erflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erflab"))
        .args(args)
        .env("ERFLAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn value(out: &Output) -> f64 {
    json(out)["value"].as_f64().unwrap()
}

#[test]
fn measure_named_states() {
    assert_eq!(
        value(&erflab(&[
            "measure",
            "--state",
            &fixture("ghz.json"),
            "--kind",
            "srt"
        ])),
        1.0
    );
    assert_eq!(
        value(&erflab(&[
            "measure",
            "--state",
            &fixture("bell.json"),
            "--kind",
            "concurrence"
        ])),
        1.0
    );
    let v = json(&erflab(&[
        "measure",
        "--state",
        &fixture("product000.json"),
        "--kind",
        "srt",
    ]));
    assert_eq!(v["value"].as_f64().unwrap(), 0.0);
    assert_eq!(v["pure"], true);
    assert_eq!(v["kind"], "srt");
}

#[test]
fn erf_of_channel_files() {
    let id = value(&erflab(&["erf", "--channel", &fixture("identity.json")]));
    assert!((id - 1.0).abs() < 1e-12);
    let ad = value(&erflab(&[
        "erf",
        "--channel",
        &fixture("ad_gamma_0.36.json"),
    ]));
    assert!((ad - 0.8).abs() < 2e-4);
    let dep = value(&erflab(&["erf", "--channel", &fixture("depol_p1.json")]));
    assert!(dep.abs() < 1e-6);
    let direct = erflab(&[
        "erf",
        "--channel",
        &fixture("ad_kraus_0.36.json"),
        "--method",
        "minimize",
        "--restarts",
        "4",
    ]);
    let report = json(&direct);
    assert_eq!(report["method"], "minimize");
    assert!((report["value"].as_f64().unwrap() - 0.8).abs() < 2e-4);
}

#[test]
fn exit_codes() {
    let parse = erflab(&[
        "measure",
        "--state",
        &fixture("broken.json"),
        "--kind",
        "srt",
    ]);
    assert_eq!(parse.status.code(), Some(2));
    let missing = erflab(&["measure", "--state", &fixture("nope.json"), "--kind", "srt"]);
    assert_eq!(missing.status.code(), Some(2));
    let mismatch = erflab(&[
        "measure",
        "--state",
        &fixture("ghz.json"),
        "--kind",
        "concurrence",
    ]);
    assert_eq!(mismatch.status.code(), Some(3));
    let method = erflab(&[
        "erf",
        "--channel",
        &fixture("identity.json"),
        "--method",
        "bogus",
    ]);
    assert_eq!(method.status.code(), Some(3));
    let perm = erflab(&[
        "symmetry",
        "--state",
        &fixture("qubit_qutrit.json"),
        "--perm",
        "2,1",
        "--kind",
        "g_concurrence",
    ]);
    assert_eq!(perm.status.code(), Some(5));
    let short = erflab(&["symmetry", "--state", &fixture("ghz.json"), "--perm", "2,1"]);
    assert_eq!(short.status.code(), Some(5));
    let vanishing = erflab(&[
        "evolve",
        "--state",
        &fixture("w.json"),
        "--channel",
        &fixture("identity.json"),
        "--kind",
        "srt",
    ]);
    assert_eq!(vanishing.status.code(), Some(4));
}

#[test]
fn verify_amplitude_damping_sweep() {
    let out = erflab(&[
        "verify",
        "--kind",
        "srt",
        "--trials",
        "5",
        "--family",
        "amplitude_damping",
        "--param",
        "0:1:0.25",
        "--restarts",
        "4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# erflab-csv-v1");
    assert_eq!(
        lines[1],
        "seed,dims,channel_family,param,E_before,E_after,ratio,erf,gap,pass"
    );
    let rows: Vec<&str> = lines
        .iter()
        .copied()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 25);
    for row in &rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 10);
        assert!(cols[8].parse::<f64>().unwrap() <= 5e-3);
        assert_eq!(cols[9], "true");
    }
    assert!(lines.last().unwrap().starts_with("# rows=25 passed=25"));
}

#[test]
fn verify_identity_and_empty() {
    let out = erflab(&[
        "verify",
        "--kind",
        "srt",
        "--trials",
        "3",
        "--family",
        "identity",
        "--restarts",
        "2",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    for row in text.lines().skip(2).filter(|l| !l.starts_with('#')) {
        let ratio: f64 = row.split(',').nth(6).unwrap().parse().unwrap();
        assert!((ratio - 1.0).abs() < 1e-9);
    }
    let out = erflab(&[
        "verify", "--kind", "srt", "--trials", "0", "--family", "identity",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1);
}

#[test]
fn bad_range_is_a_parse_error() {
    let out = erflab(&[
        "verify", "--kind", "srt", "--family", "identity", "--param", "1:0:0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = erflab(&["verify", "--kind", "srt", "--family", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn symmetry_verdicts() {
    let v = json(&erflab(&[
        "symmetry",
        "--state",
        &fixture("ghz.json"),
        "--perm",
        "2,3,1",
        "--kind",
        "srt",
    ]));
    assert_eq!(v["status"], "symmetric_via_unitary");
    assert_eq!(v["perm"], "2,3,1");
    let v = json(&erflab(&[
        "symmetry",
        "--state",
        &fixture("tilted-ghz.json"),
        "--perm",
        "2,1,3",
        "--kind",
        "srt",
    ]));
    assert_eq!(v["status"], "asymmetric_by_entropy");
    assert!(v["product_unitary"].is_null());
}

#[test]
fn normal_form_reports() {
    let v = json(&erflab(&["normal-form", "--state", &fixture("w.json")]));
    assert_eq!(v["null_cone"], true);
    let v = json(&erflab(&["normal-form", "--state", &fixture("ghz.json")]));
    assert_eq!(v["converged"], true);
    assert_eq!(v["iterations"], 0);
    let v = json(&erflab(&[
        "normal-form",
        "--state",
        &fixture("tilted-ghz.json"),
    ]));
    assert_eq!(v["converged"], true);
    let norms = v["norm_trajectory"].as_array().unwrap();
    assert!(norms.last().unwrap().as_f64().unwrap() < 1.0);
}

#[test]
fn evolve_ghz_through_damping() {
    let v = json(&erflab(&[
        "evolve",
        "--state",
        &fixture("ghz.json"),
        "--channel",
        &fixture("ad_gamma_0.36.json"),
        "--kind",
        "srt",
        "--restarts",
        "4",
    ]));
    assert!((v["ratio"].as_f64().unwrap() - 0.8).abs() < 2e-3);
    assert_eq!(v["pass"], true);
}

#[test]
fn sweep_csv_and_json() {
    let out = erflab(&[
        "sweep",
        "--family",
        "amplitude_damping",
        "--param",
        "0:1:0.5",
        "--restarts",
        "4",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# erflab-csv-v1");
    assert_eq!(lines[1], "param,srt,erf,gap");
    assert_eq!(lines.len(), 5);
    let out = erflab(&[
        "sweep",
        "--family",
        "depolarizing",
        "--param",
        "0:1:0.5",
        "--format",
        "json",
        "--restarts",
        "4",
    ]);
    let v = json(&out);
    for p in v.as_array().unwrap() {
        assert!(p["gap"].as_f64().unwrap() < 2e-3);
    }
}

#[test]
fn output_is_deterministic_and_can_go_to_a_file() {
    let args = [
        "verify",
        "--kind",
        "srt",
        "--trials",
        "2",
        "--family",
        "random",
        "--param",
        "1:3:1",
        "--seed",
        "7",
        "--restarts",
        "3",
    ];
    let a = erflab(&args);
    let b = erflab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let dir = std::env::temp_dir().join(format!("erflab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ghz.json");
    let out = erflab(&[
        "measure",
        "--state",
        &fixture("ghz.json"),
        "--kind",
        "srt",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["value"].as_f64().unwrap(), 1.0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn numbers_have_twelve_significant_digits() {
    let out = erflab(&[
        "verify",
        "--kind",
        "srt",
        "--trials",
        "1",
        "--family",
        "amplitude_damping",
        "--param",
        "0.3",
        "--restarts",
        "2",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(2).unwrap();
    for col in row.split(',').skip(3).take(6) {
        let mantissa = col
            .split('e')
            .next()
            .unwrap()
            .trim_start_matches('-')
            .replace('.', "");
        assert!(mantissa.trim_start_matches('0').len() <= 12, "{col}");
    }
}
