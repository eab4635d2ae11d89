use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polykin_cli::config::{ConfigError, Resolved, RunConfig};
use serde_json::{json, Value};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_polykin");

/// Cheap check sizes so that each run takes seconds.
fn light(mut cfg: Value) -> Value {
    cfg["checks"] = json!({
        "symmetry_samples": 500,
        "kinematic_samples": 2000,
        "distributions": 2,
        "entropy_distributions": 4,
        "kernel_pairs": 10
    });
    cfg["mass_ratio"] = json!({ "samples": 10000 });
    cfg["mc"] = json!({ "samples": 10000, "points": 2, "nu_points": 2 });
    cfg
}

fn monatomic(points: usize) -> Value {
    light(json!({
        "schema": 1,
        "mixture": { "species": [{ "mass": 1.0, "levels": [0.0], "weights": [1.0], "density": 1.0 }] },
        "cross_section": { "model": "hard_sphere", "c": [[1.0]] },
        "grid": { "points": points, "refinement": [4, 6] }
    }))
}

fn mixture(c: [[f64; 2]; 2]) -> Value {
    light(json!({
        "schema": 1,
        "mixture": { "species": [
            { "mass": 1.0, "levels": [0.0, 1.0], "weights": [1.0, 1.0], "density": 1.0 },
            { "mass": 2.0, "levels": [0.0, 0.5], "weights": [1.0, 2.0], "density": 1.0 }
        ] },
        "cross_section": { "model": "hard_sphere", "c": c },
        "grid": { "points": 4, "refinement": [4, 6] }
    }))
}

struct Run {
    dir: TempDir,
    config: PathBuf,
}

impl Run {
    fn new(cfg: &Value) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("run.json");
        std::fs::write(&config, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
        Self { dir, config }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn exec(&self, args: &[&str]) -> Output {
        self.exec_into(&self.out(), args)
    }

    fn exec_into(&self, out: &Path, args: &[&str]) -> Output {
        Command::new(BIN)
            .args(args)
            .arg("--config")
            .arg(&self.config)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.out().join(name)).unwrap()).unwrap()
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_keys_are_rejected_with_a_position() {
    let mut cfg = monatomic(4);
    cfg["grid"]["pionts"] = json!(6);
    match RunConfig::from_json(&serde_json::to_string_pretty(&cfg).unwrap()) {
        Err(ConfigError::Parse { line, message, .. }) => {
            assert!(line > 1);
            assert!(message.contains("pionts"), "{message}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn empty_species_list_is_rejected() {
    let mut cfg = monatomic(4);
    cfg["mixture"]["species"] = json!([]);
    let err = Resolved::from_json(&cfg.to_string()).unwrap_err();
    assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "mixture.species"), "{err}");

    let run = Run::new(&cfg);
    let o = run.exec(&["validate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mixture.species"), "{}", stderr(&o));
}

#[test]
fn unsupported_schema_is_rejected() {
    let mut cfg = monatomic(4);
    cfg["schema"] = json!(2);
    assert!(matches!(Resolved::from_json(&cfg.to_string()), Err(ConfigError::Schema(2))));
}

#[test]
fn shipped_configs_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["monatomic-unit", "desk-mixture", "equal-mass"] {
        let cfg = Resolved::load(&dir.join(format!("{name}.json"))).unwrap();
        assert_eq!(cfg.config.name, name);
    }
}

#[test]
fn validate_passes_on_a_symmetric_model() {
    let run = Run::new(&mixture([[1.0, 1.0], [1.0, 1.0]]));
    let o = run.exec(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(run.json("validate.json")["status"], "pass");
}

#[test]
fn asymmetric_interaction_matrix_fails_partner_exchange() {
    let run = Run::new(&mixture([[1.0, 1.0], [0.5, 1.0]]));
    let o = run.exec(&["validate"]);
    assert_eq!(o.status.code(), Some(1));
    let rep = run.json("validate.json");
    assert_eq!(rep["status"], "fail");
    let failed: Vec<&str> = rep["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.iter().any(|n| n.starts_with("symmetry_partner_exchange")), "{failed:?}");
    assert!(!failed.iter().any(|n| n.starts_with("kinematic")), "{failed:?}");
}

#[test]
fn nu_sweep_writes_a_csv() {
    let run = Run::new(&monatomic(4));
    let o = run.exec(&["nu", "--speeds", "0,20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(run.out().join("nu.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("speed,species,level,nu,nu_over_1_plus_speed"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert!((rows[0][3] - 8.0 * (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-6, "{:?}", rows[0]);
    let fast = 4.0 * std::f64::consts::PI * (20.0 + 1.0 / 20.0);
    assert!((rows[1][3] - fast).abs() < 1e-6 * fast, "{:?}", rows[1]);
}

#[test]
fn nu_rejects_out_of_range_species() {
    let run = Run::new(&monatomic(4));
    let o = run.exec(&["nu", "--species", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("out of range"));
}

#[test]
fn kernel_command_reports_all_kernels() {
    let run = Run::new(&mixture([[1.0, 1.0], [1.0, 1.0]]));
    let o = run.exec(&["kernel", "--alpha", "0", "--beta", "1", "--i", "1", "--j", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = run.json("kernel.json");
    for key in ["k1", "k2", "kb"] {
        assert!(v[key].as_f64().unwrap().is_finite(), "{v}");
    }
}

#[test]
fn assembly_is_symmetric_and_reproducible() {
    let run = Run::new(&monatomic(8));
    let o = run.exec(&["assemble"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = run.json("assembly.json");
    assert_eq!(rep["report"]["dim"], 512);
    assert!(rep["report"]["asymmetry"].as_f64().unwrap() <= 1e-10);

    let again = run.dir.path().join("again");
    let o = run.exec_into(&again, &["assemble", "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["lambda.bin", "k.bin", "l.bin"] {
        let a = std::fs::read(run.out().join(name)).unwrap();
        let b = std::fs::read(again.join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
}

#[test]
fn zero_interaction_gives_zero_matrices() {
    let run = Run::new(&mixture([[0.0, 0.0], [0.0, 0.0]]));
    let o = run.exec(&["assemble"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["lambda.bin", "k.bin", "l.bin"] {
        let bytes = std::fs::read(run.out().join(name)).unwrap();
        // payload after the 17-byte header
        assert!(bytes[17..].chunks(8).all(|c| f64::from_le_bytes(c.try_into().unwrap()) == 0.0), "{name}");
    }
}

#[test]
fn spectrum_from_dumps_checks_the_dimension() {
    let small = Run::new(&monatomic(4));
    assert_eq!(small.exec(&["assemble"]).status.code(), Some(0));
    let big = Run::new(&monatomic(6));
    let dumps = small.out();
    let o = big.exec(&["spectrum", "--from-dumps", dumps.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dimension mismatch"), "{}", stderr(&o));

    let o = small.exec(&["spectrum", "--from-dumps", dumps.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = small.json("spectrum.json");
    assert_eq!(rep["report"]["null_space"]["expected_dim"], 5);
}

#[test]
fn lambda_only_spectrum_has_unit_coercivity() {
    let run = Run::new(&monatomic(4));
    let o = run.exec(&["spectrum", "--lambda-only"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = run.json("spectrum.json");
    assert_eq!(rep["source"], "lambda_only");
    assert_eq!(rep["report"]["lambda_coercivity"].as_f64(), Some(1.0));
}

#[test]
fn corrupted_dump_is_reported() {
    let run = Run::new(&monatomic(4));
    assert_eq!(run.exec(&["assemble"]).status.code(), Some(0));
    let k = run.out().join("k.bin");
    let mut bytes = std::fs::read(&k).unwrap();
    bytes[0] ^= 0xff;
    std::fs::write(&k, bytes).unwrap();
    let o = run.exec(&["spectrum", "--from-dumps", run.out().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("magic"), "{}", stderr(&o));
}

#[test]
fn oracle_runs_are_reproducible() {
    let run = Run::new(&mixture([[1.0, 1.0], [1.0, 1.0]]));
    let first = run.exec(&["oracle", "--target", "kernel_k1", "--seed", "9"]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let a = run.json("oracle-kernel_k1.json");
    let other = run.dir.path().join("other");
    let second = run.exec_into(&other, &["oracle", "--target", "kernel_k1", "--seed", "9", "--workers", "1"]);
    assert_eq!(second.status.code(), Some(0));
    let b: Value = serde_json::from_str(&std::fs::read_to_string(other.join("oracle-kernel_k1.json")).unwrap()).unwrap();
    assert_eq!(a["points"], b["points"]);
    assert_eq!(a["seed"], 9);
}

#[test]
fn quick_verify_passes() {
    let run = Run::new(&mixture([[1.0, 1.0], [1.0, 1.0]]));
    let o = run.exec(&["verify", "--quick"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}{}", stderr(&o));
    let rep = run.json("verify.json");
    assert_eq!(rep["command"], "verify --quick");
    let criteria: Vec<u64> = rep["checks"].as_array().unwrap().iter().map(|c| c["criterion"].as_u64().unwrap()).collect();
    for c in [1, 2, 3, 4, 5, 6, 8, 13] {
        assert!(criteria.contains(&c), "criterion {c} missing");
    }
    assert!(!criteria.contains(&10));
}
