use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn macexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macexp"))
        .args(args)
        .env_remove("MACEXP_JOBS")
        .output()
        .expect("binary runs")
}

fn example_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.json")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

// Binary 2x2 MAC with two inputs per user; small enough for every oracle.
const SMALL: &str = r#"{
    "source": [[0.4, 0.1], [0.1, 0.4]],
    "channel": [[[0.9, 0.1], [0.6, 0.4]], [[0.4, 0.6], [0.1, 0.9]]],
    "bank": [[[0.5, 0.5], [0.8, 0.2]], [[0.5, 0.5], [0.3, 0.7]]]
}"#;

const SINGLE_BANK: &str = r#"{
    "source": [[0.4, 0.1], [0.1, 0.4]],
    "channel": [[[0.9, 0.1], [0.6, 0.4]], [[0.4, 0.6], [0.1, 0.9]]],
    "bank": [[[0.5, 0.5], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]]]
}"#;

#[test]
fn example_exponent_json() {
    let o = macexp(&["exponent", example_config().to_str().unwrap(), "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let e = v["exponent"]["value"].as_f64().unwrap();
    assert!((e - 0.261121).abs() < 5e-6, "E = {e}");
    let lb = v["lower_bound"]["value"].as_f64().unwrap();
    assert!((lb - 0.250320).abs() < 5e-6, "LB = {lb}");
    assert!((v["gamma"]["gamma1"].as_f64().unwrap() - 0.846928).abs() < 1e-4);
    assert!((v["gamma"]["gamma2"].as_f64().unwrap() - 0.658062).abs() < 1e-4);
}

#[test]
fn tables_are_written_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = macexp(&["tables", example_config().to_str().unwrap(), "--out", out]);
    assert!(o.status.success());
    let t1 = std::fs::read_to_string(dir.path().join("tableI.csv")).unwrap();
    let t2 = std::fs::read_to_string(dir.path().join("tableII.csv")).unwrap();
    assert_eq!(t1.lines().next(), Some("tau,f11,f12,f21,f22"));
    assert_eq!(t1.lines().nth(3), Some("both,0.261121,0.297155,0.262985,0.288268"));
    assert_eq!(t2.lines().nth(3), Some("both,0.209746,0.209746,0.262985,0.236029"));

    let again = tempfile::tempdir().unwrap();
    let o = macexp(&["tables", example_config().to_str().unwrap(), "--out", again.path().to_str().unwrap(), "--jobs", "2"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(again.path().join("tableI.csv")).unwrap(), t1.as_bytes());
    assert_eq!(std::fs::read(again.path().join("tableII.csv")).unwrap(), t2.as_bytes());
}

#[test]
fn bits_rescale_presentation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let run = |bits: bool| {
        let out = dir.path().join(if bits { "bits" } else { "nats" });
        let mut args = vec!["sweep", cfg.to_str().unwrap(), "gamma", "--grid", "4", "--out", out.to_str().unwrap()];
        if bits {
            args.push("--bits");
        }
        assert!(macexp(&args).status.success());
        std::fs::read_to_string(out.join("sweep_gamma.csv")).unwrap()
    };
    let (nats, bits) = (run(false), run(true));
    for (a, b) in nats.lines().zip(bits.lines()).skip(1) {
        let a: f64 = a.rsplit(',').next().unwrap().parse().unwrap();
        let b: f64 = b.rsplit(',').next().unwrap().parse().unwrap();
        assert!((a / std::f64::consts::LN_2 - b).abs() < 2e-6);
    }
}

#[test]
fn gamma_sweep_has_grid_squared_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = macexp(&["sweep", example_config().to_str().unwrap(), "gamma", "--grid", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("sweep_gamma.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "gamma1,gamma2,min_f");
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[1], "0.000000,0.000000,0.209746");
    assert_eq!(lines[9], "1.000000,1.000000,0.087942");
}

#[test]
fn rho_sweep_rows_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let o = macexp(&[
        "sweep", cfg.to_str().unwrap(), "rho", "--grid", "5", "--gamma1", "0.5", "--gamma2", "0.5", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("sweep_rho.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').filter_map(|x| x.parse().ok()).collect())
        .collect();
    assert_eq!(rows.len(), 15);
    for r in &rows {
        // es_corr never exceeds the unconstrained source function
        for v in &r[2..] {
            assert!(*v <= r[1] + 1e-9);
        }
    }
    let o = macexp(&["sweep", cfg.to_str().unwrap(), "rho", "--gamma1", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"source": [[0.5, 0.5]"#);
    let o = macexp(&["exponent", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed"));
    let o = macexp(&["exponent", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupted_channel_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &SMALL.replace("[0.9, 0.1]", "[0.9, 0.0]"));
    for cmd in ["exponent", "tables", "validate"] {
        let o = macexp(&[cmd, bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
    }
}

#[test]
fn single_bank_matches_iid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "single.json", SINGLE_BANK);
    let o = macexp(&["exponent", cfg.to_str().unwrap(), "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let e = v["exponent"]["value"].as_f64().unwrap();
    let iid = v["lower_bound"]["iid"][0].as_f64().unwrap();
    assert!((e - iid).abs() < 1e-6, "E {e} vs iid {iid}");
}

#[test]
fn validate_small_instance_exercises_superchannels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let o = macexp(&["validate", cfg.to_str().unwrap(), "--samples", "20"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert!(text.contains("12 instance superchannels"), "{text}");
    assert_eq!(text.lines().filter(|l| l.trim_start().starts_with("ok")).count(), 4);
}

#[test]
fn impossible_tolerance_fails_validation() {
    let o = macexp(&["validate", example_config().to_str().unwrap(), "--samples", "10", "--tol-exp", "1e-15"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho="));
}

#[test]
fn exponent_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let a = macexp(&["exponent", cfg.to_str().unwrap(), "--grid", "11"]);
    let b = macexp(&["exponent", cfg.to_str().unwrap(), "--grid", "11", "--jobs", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
