use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn sflab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sflab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SFLAB_THREADS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const HELICAL: &str = "
scenario = helical
seed = 1
[grid]
M = 64
L = 2pi
[flow]
eps = 1e-3
dt = 1e-3
t_end = 0.05
record_every = 5
snapshot_every = 25
[initial]
theta = pi/3
k = 2
";

fn write_cfg(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Header names and numeric rows of a diagnostics file.
fn read_diag(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let head = lines
        .next()
        .unwrap()
        .strip_prefix("# ")
        .unwrap()
        .split(',')
        .map(String::from)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (head, rows)
}

fn column(head: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let i = head.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i]).collect()
}

#[test]
fn constant_map_has_constant_diagnostics() {
    let d = TempDir::new().unwrap();
    let cfg = write_cfg(&d, "c.cfg", "scenario = constant\n[grid]\nn = 2\nM = 16\n[flow]\neps = 1e-2\ndt = 1e-2\nt_end = 0.1\nrecord_every = 2\n[initial]\nvalue = 0, 0.6, 0.8\n");
    let o = sflab(&["simulate", cfg.to_str().unwrap(), "--out", "o", "-q"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (head, rows) = read_diag(&d.path().join("o/diagnostics.csv"));
    assert_eq!(rows.len(), 6);
    for name in ["E", "G", "dH1", "dH4", "sup_rho", "l2_rho"] {
        let c = column(&head, &rows, name);
        assert!(c.iter().all(|x| x.abs() < 1e-13), "{name}: {c:?}");
    }
    assert!(d.path().join("o/run.json").exists());
    assert!(d.path().join("o/checkpoints/snap_0001.bin").exists());
}

#[test]
fn helical_stays_on_sphere() {
    let d = TempDir::new().unwrap();
    let cfg = write_cfg(&d, "h.cfg", &HELICAL.replace("t_end = 0.05", "t_end = 0.2"));
    let o = sflab(&["simulate", cfg.to_str().unwrap(), "--out", "o", "-q"], d.path());
    assert_eq!(code(&o), 0);
    let (head, rows) = read_diag(&d.path().join("o/diagnostics.csv"));
    let sup = column(&head, &rows, "sup_rho");
    assert_eq!(rows.len(), 41);
    assert!(sup.iter().all(|x| *x <= 1e-6), "{sup:?}");
}

#[test]
fn malformed_key_leaves_no_output() {
    let d = TempDir::new().unwrap();
    let cfg = write_cfg(&d, "bad.cfg", &HELICAL.replace("k = 2", "kay = 2"));
    let o = sflab(&["simulate", cfg.to_str().unwrap(), "--out", "o"], d.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("kay"));
    assert!(!d.path().join("o").exists());
    let o = sflab(&["simulate", "missing.cfg", "--out", "o"], d.path());
    assert_eq!(code(&o), 1);
    assert!(!d.path().join("o").exists());
}

#[test]
fn usage_errors_exit_one() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&sflab(&["frobnicate"], d.path())), 1);
    assert_eq!(code(&sflab(&["--help"], d.path())), 0);
    assert_eq!(code(&sflab(&["verify", "nope", "--out", "o"], d.path())), 1);
    let o = Command::new(env!("CARGO_BIN_EXE_sflab"))
        .args(["verify", "spectral", "-q"])
        .current_dir(d.path())
        .env("SFLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn numerical_failure_exits_two_with_partial_diagnostics() {
    let d = TempDir::new().unwrap();
    // a single Picard iteration at this step cannot meet the tolerance
    let cfg = write_cfg(
        &d,
        "f.cfg",
        &HELICAL
            .replace("dt = 1e-3", "dt = 1e-2\npicard_max = 1\nmax_halvings = 0")
            .replace("record_every = 5", "record_every = 1"),
    );
    let o = sflab(&["simulate", cfg.to_str().unwrap(), "--out", "o", "-q"], d.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_diag(&d.path().join("o/diagnostics.csv"));
    assert!(!rows.is_empty());
    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("o/run.json")).unwrap()).unwrap();
    assert_eq!(run["status"], "failed");
    assert!(run["error"].is_string());
}

#[test]
fn identical_runs_give_identical_csv() {
    let d = TempDir::new().unwrap();
    let cfg = write_cfg(&d, "r.cfg", "scenario = random\nseed = 9\n[grid]\nn = 2\nM = 16\n[flow]\neps = 1e-2\ndt = 1e-3\nt_end = 0.02\nrecord_every = 2\n[initial]\nmodes = 2\namplitude = 0.4\n");
    for out in ["a", "b"] {
        assert_eq!(
            code(&sflab(
                &["simulate", cfg.to_str().unwrap(), "--out", out, "-q"],
                d.path()
            )),
            0
        );
    }
    let (a, b) = (
        fs::read(d.path().join("a/diagnostics.csv")).unwrap(),
        fs::read(d.path().join("b/diagnostics.csv")).unwrap(),
    );
    assert_eq!(a, b);
    assert_eq!(
        code(&sflab(
            &["simulate", cfg.to_str().unwrap(), "--out", "c", "--seed", "10", "-q"],
            d.path()
        )),
        0
    );
    assert_ne!(a, fs::read(d.path().join("c/diagnostics.csv")).unwrap());
}

#[test]
fn run_json_reproduces_the_run() {
    let d = TempDir::new().unwrap();
    let cfg = write_cfg(&d, "h.cfg", HELICAL);
    assert_eq!(
        code(&sflab(
            &["simulate", cfg.to_str().unwrap(), "--out", "a", "-q"],
            d.path()
        )),
        0
    );
    assert_eq!(
        code(&sflab(&["simulate", "a/run.json", "--out", "b", "-q"], d.path())),
        0
    );
    assert_eq!(
        fs::read(d.path().join("a/diagnostics.csv")).unwrap(),
        fs::read(d.path().join("b/diagnostics.csv")).unwrap()
    );
    let cfg_of = |dir: &str| -> serde_json::Value {
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(d.path().join(dir).join("run.json")).unwrap()).unwrap();
        v["config"]["out"] = serde_json::Value::Null;
        v["config"].clone()
    };
    assert_eq!(cfg_of("a"), cfg_of("b"));
}

#[test]
fn file_scenario_reads_a_checkpoint() {
    let d = TempDir::new().unwrap();
    let cfg = write_cfg(&d, "h.cfg", HELICAL);
    assert_eq!(
        code(&sflab(
            &["simulate", cfg.to_str().unwrap(), "--out", "a", "-q"],
            d.path()
        )),
        0
    );
    let f = write_cfg(
        &d,
        "f.cfg",
        &HELICAL
            .replace("scenario = helical", "scenario = file")
            .replace("theta = pi/3\nk = 2", "path = a/checkpoints/snap_0002.bin")
            .replace("t_end = 0.05", "t_end = 0"),
    );
    assert_eq!(
        code(&sflab(&["simulate", f.to_str().unwrap(), "--out", "b", "-q"], d.path())),
        0
    );
    let (_, a) = read_diag(&d.path().join("a/diagnostics.csv"));
    let (_, b) = read_diag(&d.path().join("b/diagnostics.csv"));
    assert_eq!(a.last().unwrap()[1..6], b[0][1..6]);
    let wrong = write_cfg(
        &d,
        "w.cfg",
        &fs::read_to_string(&f).unwrap().replace("M = 64", "M = 32"),
    );
    assert_eq!(
        code(&sflab(
            &["simulate", wrong.to_str().unwrap(), "--out", "c", "-q"],
            d.path()
        )),
        1
    );
    assert!(!d.path().join("c").exists());
}

#[test]
fn single_eps_sweep_equals_simulate() {
    let d = TempDir::new().unwrap();
    let cfg = write_cfg(&d, "h.cfg", &format!("{HELICAL}\n[sweep]\neps = 1e-3\n"));
    assert_eq!(
        code(&sflab(
            &["simulate", cfg.to_str().unwrap(), "--out", "a", "-q"],
            d.path()
        )),
        0
    );
    assert_eq!(
        code(&sflab(
            &["sweep-eps", cfg.to_str().unwrap(), "--out", "b", "-q"],
            d.path()
        )),
        0
    );
    assert_eq!(
        fs::read(d.path().join("a/diagnostics.csv")).unwrap(),
        fs::read(d.path().join("b/diagnostics.csv")).unwrap()
    );
}

#[test]
fn four_point_sweep_converges_to_baseline() {
    let d = TempDir::new().unwrap();
    let cfg = write_cfg(
        &d,
        "s.cfg",
        &format!("{HELICAL}\n[sweep]\neps = 1e-1, 1e-2, 1e-3, 1e-4\nbaseline = true\n"),
    );
    let o = sflab(&["sweep-eps", cfg.to_str().unwrap(), "--out", "o", "-q"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (head, rows) = read_diag(&d.path().join("o/convergence.csv"));
    assert_eq!(rows.len(), 4);
    for name in ["l2_baseline", "hs_prime_baseline"] {
        let c = column(&head, &rows, name);
        assert!(c.windows(2).all(|w| w[1] < w[0]), "{name}: {c:?}");
    }
    let (head, rows) = read_diag(&d.path().join("o/pairwise.csv"));
    assert_eq!(head, ["eps_a", "eps_b", "t", "l2", "hs_prime"]);
    assert_eq!(rows.len(), 3 * 3);
    for e in ["1e-1", "1e-2", "1e-3", "1e-4"] {
        assert!(d.path().join(format!("o/eps_{e}/diagnostics.csv")).exists());
    }
}

#[test]
fn verify_spectral_passes() {
    let d = TempDir::new().unwrap();
    let o = sflab(&["verify", "spectral", "--out", "o", "-q"], d.path());
    assert_eq!(code(&o), 0);
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("o/report.json")).unwrap()).unwrap();
    assert_eq!(r["passed"], true);
}

#[test]
fn verify_all_lists_every_check() {
    let d = TempDir::new().unwrap();
    let o = sflab(&["verify", "all", "--out", "o", "-q"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("o/report.json")).unwrap()).unwrap();
    let entries = r["entries"].as_array().unwrap();
    assert!(entries.len() >= 25);
    for e in entries {
        assert!(e["measured"].is_number() && e["tolerance"].is_number(), "{e}");
    }
}

#[test]
fn mutation_fails_operators_suite() {
    let d = TempDir::new().unwrap();
    let o = sflab(
        &[
            "verify",
            "operators",
            "--mutation",
            "flip-hessian-sign",
            "--out",
            "o",
            "-q",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 3);
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("o/report.json")).unwrap()).unwrap();
    let failed: Vec<&str> = r["entries"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["passed"] == false)
        .map(|e| e["id"].as_str().unwrap())
        .collect();
    assert!(
        failed.iter().any(|id| id.contains("normal_part_identity")),
        "{failed:?}"
    );
}
