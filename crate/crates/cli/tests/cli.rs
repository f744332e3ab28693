use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wkb_core::harness::{acceptance_scenario, CaseContext, ScenarioModel};

fn wkb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wkb"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing in\n{text}"))
        .to_string()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

const SMALL: &str = "grid.n = \"32, 32\"\nepsilon = \"0.25, 0.125, 0.0625, 0.03125\"\n";

#[test]
fn info_reports_selected_m_and_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let o = wkb(dir.path(), &["info"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let m: f64 = value(&text, "M").parse().unwrap();
    let t: f64 = value(&text, "T").parse().unwrap();
    let ctx = CaseContext::prepare(acceptance_scenario(ScenarioModel::Hyperbolic, 64).unwrap()).unwrap();
    assert_eq!(m, ctx.selection.unwrap().m);
    assert!((t - 0.8 * (1.0 / m).min(0.5)).abs() <= 1e-15 * t);
}

#[test]
fn sweep_writes_rows_and_rates() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let o = wkb(dir.path(), &["sweep", "--config", "small.toml", "--out", "res"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_lines(&dir.path().join("res/sweep.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("epsilon,err_phi_1st,err_a_1st,err_phi_2nd,err_a_2nd,err_u_L2"));
    let rates = data_lines(&dir.path().join("res/rates.csv"));
    let first = rates.iter().find(|l| l.starts_with("first_order,")).unwrap();
    let slope: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    assert!((0.85..=1.15).contains(&slope), "{slope}");
    let header = fs::read_to_string(dir.path().join("res/sweep.csv")).unwrap();
    assert!(header.contains("# resolved.M = "));
    assert!(header.contains("# grid.n = \"32, 32\""));
}

#[test]
fn identical_config_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let args = ["sweep", "--config", "small.toml", "--out", "res", "--epsilon-override", "0.25, 0.125, 0.0625"];
    assert!(wkb(dir.path(), &args).status.success());
    let first = fs::read(dir.path().join("res/sweep.csv")).unwrap();
    assert!(wkb(dir.path(), &args).status.success());
    let second = fs::read(dir.path().join("res/sweep.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn check_spaces_passes_and_prints_counts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "spaces.tame_trials = 300\nspaces.field_trials = 100\n").unwrap();
    let o = wkb(dir.path(), &["check-spaces", "--config", "c.toml", "--seed", "11"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(value(&text, "passed"), "true");
    assert!(value(&text, "tame_d1_l2_s2").starts_with("300 trials, 0 violations"));
}

#[test]
fn picard_converges_on_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.toml"), "grid.n = \"32, 32\"\n").unwrap();
    let o = wkb(dir.path(), &["picard", "--config", "p.toml"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(value(&text, "converged"), "true");
    let gap: f64 = value(&text, "final_gap_to_direct").parse().unwrap();
    assert!(gap <= 1e-6);
    let rows = data_lines(&dir.path().join("out/picard.csv"));
    assert_eq!(rows[0], "iterate,delta_phi,delta_a,ratio,phi_sq,a_sq");
}

#[test]
fn run_then_observables_from_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("n.toml"), "grid.n = \"32, 32\"\nrun.system = \"nls\"\n").unwrap();
    let o = wkb(dir.path(), &["run", "--config", "n.toml"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = data_lines(&dir.path().join("out/diagnostics.csv"));
    assert_eq!(diag[0], "t,phi_norm,a_norm,mass,radius");
    let mass0: f64 = diag[1].split(',').nth(3).unwrap().parse().unwrap();
    let mass1: f64 = diag.last().unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!((mass1 - mass0).abs() <= 1e-8 * mass0);

    fs::write(dir.path().join("o.toml"), "observables.snapshot = \"out/final_u.wkbf\"\n").unwrap();
    let o = wkb(dir.path(), &["observables", "--config", "o.toml", "--out", "obs"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mass: f64 = value(&stdout(&o), "mass").parse().unwrap();
    // Parseval: the quadrature mass of the density equals the coefficient energy.
    assert!((mass - mass1).abs() <= 1e-10 * mass, "{mass} vs {mass1}");
    let rows = data_lines(&dir.path().join("obs/observables.csv"));
    assert_eq!(rows[0], "x1,x2,density,momentum_1,momentum_2");
    assert_eq!(rows.len(), 1 + 32 * 32);
}

#[test]
fn failures_exit_nonzero_with_machine_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "model.alpha = \"x\"\nbogus = 1\n").unwrap();
    let o = wkb(dir.path(), &["info", "--config", "bad.toml"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    let line = err.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["error"], "config");
    assert_eq!(v["issues"].as_array().unwrap().len(), 2);
    assert_eq!(v["issues"][1]["line"], 2);

    let o = wkb(dir.path(), &["sweep", "--epsilon-override", "0.1, 0.2"]);
    assert!(!o.status.success());
    let line = String::from_utf8_lossy(&o.stderr).lines().last().unwrap().to_string();
    assert!(line.contains("\"error\":\"config\""), "{line}");
}
