use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ldlab::convex::{Grid, GridFunction};

fn ldlab(dir: &Path, command: &str, config: &str, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{command}.toml"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("{command}-out"));
    let output = Command::new(env!("CARGO_BIN_EXE_ldlab"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (output, out)
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn column(path: &Path, name: &str) -> usize {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().position(|h| h == name).unwrap()
}

#[test]
fn gaussian_pressure_matches_mgf() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, dir) = ldlab(
        tmp.path(),
        "pressure",
        "seed = 21\nout = \"x\"\nmodel = \"gaussian\"\nroute = \"mc\"\nreplicas = 100000\nn = [1]\nlambda_min = -1\nlambda_max = 1\nlambda_points = 21\n",
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.join("pressure.csv");
    let rows = csv_rows(&path);
    assert_eq!(rows.len(), 21);
    let (l, v, s, n) = (
        column(&path, "lambda"),
        column(&path, "value"),
        column(&path, "std_error"),
        column(&path, "samples"),
    );
    for row in rows {
        let lambda: f64 = row[l].parse().unwrap();
        let value: f64 = row[v].parse().unwrap();
        let sigma: f64 = row[s].parse().unwrap();
        assert_eq!(&row[n], "100000");
        if lambda == 0.0 {
            assert_eq!(value, 0.0);
        } else {
            assert!((value - lambda * lambda / 2.0).abs() < 3.0 * sigma, "lambda {lambda}: {value} ± {sigma}");
        }
    }
}

#[test]
fn conjugate_of_tabulated_function() {
    let tmp = tempfile::tempdir().unwrap();
    let f = GridFunction::from_fn(Grid::uniform_1d(-2.0, 2.0, 401).unwrap(), |x| x[0].powi(4) + x[0]).unwrap();
    let input = tmp.path().join("f.csv");
    f.write_csv(std::fs::File::create(&input).unwrap()).unwrap();
    let (out, dir) = ldlab(
        tmp.path(),
        "conjugate",
        &format!("seed = 0\nout = \"x\"\ninput = {:?}\ntolerance = 1e-2\n", input.to_str().unwrap()),
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("conjugate.csv").exists());
    assert!(dir.join("biconjugate.csv").exists());
    let summary = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
    assert!(summary.contains("biconjugate gap"));
    assert!(summary.contains("checks: 1 pass, 0 fail"));
    let read = |key: &str| -> f64 {
        let line = summary.lines().find(|l| l.starts_with(key)).unwrap();
        line.rsplit(' ').next().unwrap().parse().unwrap()
    };
    assert!(read("biconjugate gap") <= read("grid tolerance"));
}

#[test]
fn nonconvex_input_fails_tolerance_with_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, dir) = ldlab(
        tmp.path(),
        "conjugate",
        "seed = 0\nout = \"x\"\nfunction = \"double_well\"\nx_min = -2\nx_max = 2\nx_points = 201\ntolerance = 1e-3\n",
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let summary = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
    assert!(summary.contains("status: FAILED"));
}

#[test]
fn fekete_demo_states_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, dir) = ldlab(
        tmp.path(),
        "fekete-demo",
        "seed = 0\nout = \"x\"\nsequence = \"linear\"\nslope = 2\nn_max = 64\n",
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let summary = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
    assert!(summary.contains("limit u(n)/n = inf u(n)/n = 2.0"), "{summary}");
    assert_eq!(csv_rows(&dir.join("fekete.csv")).len(), 64);
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, dir) = ldlab(
        tmp.path(),
        "entropy",
        "out = \"x\"\nmodel = \"bernoulli\"\np = 0.5\nn = [0, 4]\nx = [0.5]\neps = [-1]\n",
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("seed: required"), "{err}");
    assert!(err.contains("n:"), "{err}");
    assert!(err.contains("eps:"), "{err}");
    assert!(!dir.exists());
}

#[test]
fn seed_flag_supplies_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, dir) = ldlab(
        tmp.path(),
        "largest-term-demo",
        "out = \"x\"\nrates = [-1, -2]\ncorrections = [1, 4]\nn_max = 50\n",
        &["--seed", "9"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["seed"], 9);
    assert_eq!(manifest["command"], "largest-term-demo");
    assert!(manifest["version"].is_string());
    assert!(manifest["timestamp_unix"].is_u64());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "seed = 1\nout = \"x\"\nsequence = \"log\"\nn_max = 10\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ldlab"))
        .args(["fekete-demo", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("file/sub"));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_ldlab"))
        .args(["pressure", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn json_tables_and_identical_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let config = "seed = 5\nout = \"x\"\nmodel = \"ising1d\"\nbeta = 0.4\nroute = \"mc\"\nreplicas = 3000\nn = [8, 16]\nlambda = [-0.5, 0.5]\n";
    let (first, dir) = ldlab(tmp.path(), "pressure", config, &["--format", "json", "--threads", "1"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let a = std::fs::read(dir.join("pressure.json")).unwrap();
    let rows: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
    assert!(rows[0]["std_error"].as_f64().unwrap() > 0.0);
    assert_eq!(rows[0]["samples"], 3000);
    let (_, dir) = ldlab(tmp.path(), "pressure", config, &["--format", "json", "--threads", "2"]);
    assert_eq!(a, std::fs::read(dir.join("pressure.json")).unwrap());
}

#[test]
fn decoupling_table_carries_sigma_and_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, dir) = ldlab(
        tmp.path(),
        "check-decoupling",
        "seed = 3\nout = \"x\"\nmodel = \"spin\"\nreplicas = 20000\nm = 4\ngap = 2\nradius = 0.5\ncenter_a = [0]\ncenter_b = [0]\n",
        &[],
    );
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    let path = dir.join("decoupling.csv");
    let row = &csv_rows(&path)[0];
    assert_eq!(&row[column(&path, "samples")], "20000");
    assert!(row[column(&path, "sigma")].parse::<f64>().unwrap() > 0.0);
    assert_eq!(&row[column(&path, "cost_status")], "exact");
}

#[test]
fn shipped_experiment_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let config = ldlab::expcli::ExperimentConfig::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let diagnostics = ldlab::expcli::validate(&config);
        assert!(diagnostics.is_empty(), "{}: {diagnostics:?}", path.display());
        seen += 1;
    }
    assert!(seen >= 9);
}
