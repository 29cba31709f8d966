use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kiss_control::model::{BoundaryCondition, PatchLayout, ScalarZone};
use kiss_control_cli::args::GlobalArgs;
use kiss_control_cli::commands;
use kiss_control_cli::scenario;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kiss-control"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

/// Value after `key = ` on the first line containing it.
fn field(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no '{key}' in\n{text}"));
    let rest = line[key.len()..].trim_start().trim_start_matches('=').trim_start();
    rest.split_whitespace().next().unwrap().parse().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn preset_list_names_every_preset() {
    let o = run(&["preset", "list"]);
    assert_eq!(code(&o), 0);
    for name in ["lone-star", "taiga-one-stage", "taiga-two-stage"] {
        assert!(stdout(&o).contains(name));
    }
}

#[test]
fn critical_size_presets() {
    let o = run(&["critical-size", "--preset", "lone-star"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "R_c = 15.91\n");

    let o = run(&["critical-size", "--preset", "taiga-two-stage"]);
    let text = stdout(&o);
    assert!((field(&text, "R_c") - 46.9).abs() < 0.2, "{text}");
    assert!((field(&text, "R_c^sym") - 3.64).abs() < 0.02, "{text}");
}

#[test]
fn negative_growth_is_a_validation_error() {
    let o = run(&["critical-size", "--preset", "lone-star", "--lambda", "-0.5"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("NonpositiveGrowth"));
}

#[test]
fn missing_scenario_and_bad_values_exit_2() {
    assert_eq!(code(&run(&["verdict"])), 2);
    assert_eq!(code(&run(&["verdict", "--preset", "lone-star", "--r", "-1"])), 2);
    assert_eq!(code(&run(&["verdict", "--preset", "lone-star", "--bc", "robin"])), 2);
    assert_eq!(code(&run(&["verdict", "--preset", "taiga-two-stage", "--mu", "3"])), 2);
}

#[test]
fn lone_star_verdict_survival_both_methods() {
    let o = run(&["verdict", "--preset", "lone-star", "--mu", "10"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("closed-form: Survival"), "{text}");
    assert!(text.contains("oracle: Survival"), "{text}");
    assert!(text.contains("agreement: agree"), "{text}");
}

#[test]
fn clause_i_survival_regardless_of_method() {
    for method in ["closed", "oracle", "both"] {
        let o = run(&["verdict", "--preset", "lone-star", "--R", "20", "--method", method]);
        assert_eq!(code(&o), 0);
        let text = stdout(&o);
        assert!(text.contains("Survival") && !text.contains("Eradication"), "{text}");
    }
}

#[test]
fn staged_preset_certified_and_confirmed() {
    let o = run(&["verdict", "--preset", "taiga-two-stage"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("two-stage: Eradication"), "{text}");
    assert!(text.contains("certified"), "{text}");
    assert!(text.contains("oracle: Eradication"), "{text}");
}

#[test]
fn min_mortality_reports_both_values_and_note() {
    let o = run(&["min-mortality", "--preset", "lone-star"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let closed = field(&text, "mu* closed-form");
    let oracle = field(&text, "mu* oracle");
    assert!((closed - oracle).abs() <= 0.05 * closed, "{text}");
    assert!(text.contains("note:") && text.contains("1958"), "{text}");
}

#[test]
fn min_mortality_uncontrollable_and_no_control_needed() {
    let o = run(&["min-mortality", "--preset", "lone-star", "--R", "20"]);
    assert_eq!(code(&o), 4);
    let o = run(&["min-zone", "--preset", "lone-star", "--R", "20"]);
    assert_eq!(code(&o), 4);

    let o = run(&["min-mortality", "--preset", "lone-star", "--R", "5", "--bc", "dirichlet"]);
    assert_eq!(code(&o), 0);
    assert_eq!(field(&stdout(&o), "mu* closed-form"), 0.0);
}

#[test]
fn min_zone_agrees_with_oracle() {
    let o = run(&["min-zone", "--preset", "lone-star"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let closed = field(&text, "r* closed-form");
    let oracle = field(&text, "r* oracle");
    assert!((closed - oracle).abs() <= 0.05 * closed, "{text}");
}

#[test]
fn sweep_mu_top_eigenvalue_nonincreasing() {
    let o = run(&["sweep", "--preset", "lone-star", "--vary", "mu", "--from", "1", "--to", "100", "--steps", "12"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("param,value,margin,top_eigenvalue,status"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 12);
    let tops: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(tops.windows(2).all(|w| w[1] <= w[0]), "{text}");
}

#[test]
fn sweep_single_step_and_unknown_param() {
    let o = run(&["sweep", "--preset", "lone-star", "--vary", "r", "--from", "0.5", "--to", "2", "--steps", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv_rows(&stdout(&o)).len(), 1);
    let o = run(&["sweep", "--preset", "lone-star", "--vary", "K", "--from", "1", "--to", "3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_across_critical_size_flips_once() {
    let o = run(&["sweep", "--preset", "lone-star", "--mu", "100", "--vary", "R", "--from", "5", "--to", "30", "--steps", "26"]);
    let rows = csv_rows(&stdout(&o));
    let statuses: Vec<&str> = rows.iter().map(|r| r[4].as_str()).collect();
    let flips = statuses.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 1, "{statuses:?}");
    assert_eq!(statuses[0], "Eradication");
}

#[test]
fn sweep_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["sweep", "--preset", "taiga-two-stage", "--vary", "R", "--from", "20", "--to", "60", "--steps", "5", "--out", out];
    let first = run(&args);
    let file = fs::read(dir.path().join("sweep.csv")).unwrap();
    let second = run(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(file, first.stdout);
}

#[test]
fn scenario_file_matches_preset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("taiga.json");
    let show = run(&["preset", "show", "taiga-two-stage"]);
    fs::write(&path, &show.stdout).unwrap();
    let from_file = run(&["verdict", "--scenario", path.to_str().unwrap()]);
    let from_preset = run(&["verdict", "--preset", "taiga-two-stage"]);
    assert_eq!(code(&from_file), 0);
    assert_eq!(from_file.stdout, from_preset.stdout);
}

fn simulate_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["simulate", "--out", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

#[test]
fn simulate_lone_star_above_threshold_decays() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate_in(dir.path(), &["--preset", "lone-star", "--mu", "45", "--snapshots", "1,2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(field(&stdout(&o), "growth exponent") < 0.0);
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("t,log_l2_norm,total_mass"));
    let snap = fs::read_to_string(dir.path().join("snapshot_001.csv")).unwrap();
    assert_eq!(snap.lines().next(), Some("x,stage_index,density"));

    let again = tempfile::tempdir().unwrap();
    simulate_in(again.path(), &["--preset", "lone-star", "--mu", "45", "--snapshots", "1,2"]);
    assert_eq!(traj, fs::read_to_string(again.path().join("trajectory.csv")).unwrap());
}

#[test]
fn simulate_staged_beyond_critical_size_grows() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate_in(dir.path(), &["--preset", "taiga-two-stage", "--r", "0", "--R", "60", "--T", "40"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(field(&stdout(&o), "growth exponent") > 0.0);
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(
        traj.lines().next(),
        Some("t,log_l2_norm,total_mass,log_l2_norm_stage0,log_l2_norm_stage1")
    );
}

#[test]
fn simulate_short_horizon_reports_unresolved_transient() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate_in(dir.path(), &["--preset", "taiga-two-stage", "--r", "0", "--R", "60", "--T", "8"]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("TransientNotResolved"));
}

#[test]
fn simulate_conserves_mass_without_reaction() {
    let layout = PatchLayout::scalar(
        ScalarZone::new(1.0, 0.0),
        ScalarZone::control(2.0, 0.0),
        3.0,
        1.0,
        1,
        BoundaryCondition::Neumann,
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("conserve.json");
    fs::write(&path, layout.to_json()).unwrap();
    let global = GlobalArgs {
        scenario: Some(path),
        ..GlobalArgs::default()
    };
    let s = scenario::load(&global).unwrap();
    let out = commands::simulate(&s, None, Some(40.0), &[], dir.path()).unwrap();
    let m0 = out.trajectory.total_mass[0];
    for m in &out.trajectory.total_mass {
        assert!((m - m0).abs() <= 1e-10 * m0);
    }
}
