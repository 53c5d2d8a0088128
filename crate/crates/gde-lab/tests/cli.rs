//! End-to-end runs of the gde-lab binary: exit codes, report schema,
//! determinism, and the documented example configurations.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gde-lab"))
}

fn run(scenario: &str, config: &Path, out: &Path) -> Output {
    bin()
        .arg(scenario)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn report(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("report.json")).expect("report written");
    serde_json::from_str(&text).expect("report parses")
}

const EQUIVALENCE: &str = r#"
scenario = "equivalence"
seed = 42

[basis]
dimension = 8
start = 0.0
spacing = 0.5

[interaction]
kind = "instantaneous"
strength = 0.25
"#;

#[test]
fn equivalence_ladder_passes_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("equiv.toml");
    fs::write(&config, EQUIVALENCE).unwrap();
    let out_dir = tmp.path().join("out");

    let out = run("equivalence", &config, &out_dir);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let rep = report(&out_dir);
    assert_eq!(rep["schema_version"], 1);
    assert_eq!(rep["scenario"], "equivalence");
    assert_eq!(rep["seed"], 42);
    let checks = rep["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    assert!(checks.iter().all(|c| c["passed"] == true));
    let max_dev = rep["results"]["max_t_deviation"].as_f64().unwrap();
    assert!(max_dev <= 1e-6, "max deviation {max_dev:e}");

    // every artifact in the manifest exists and CSVs lead with a header
    for name in rep["artifacts"].as_array().unwrap() {
        let path = out_dir.join(name.as_str().unwrap());
        assert!(path.exists(), "missing artifact {}", path.display());
    }
    let csv = fs::read_to_string(out_dir.join("deviation.csv")).unwrap();
    assert!(csv.starts_with("re_z,im_z,deviation\n"));
}

#[test]
fn identical_config_and_seed_reproduce_byte_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("equiv.toml");
    fs::write(&config, EQUIVALENCE).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));

    assert_eq!(code(&run("equivalence", &config, &a)), 0);
    assert_eq!(code(&run("equivalence", &config, &b)), 0);

    let strip = |dir: &Path| -> String {
        fs::read_to_string(dir.join("report.json"))
            .unwrap()
            .lines()
            .filter(|l| !l.contains("wall_clock_seconds"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b), "reports differ beyond the clock");
    assert_eq!(
        fs::read(a.join("deviation.csv")).unwrap(),
        fs::read(b.join("deviation.csv")).unwrap(),
        "artifact bytes differ"
    );
}

#[test]
fn seed_flag_overrides_config_and_changes_the_model() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("equiv.toml");
    fs::write(&config, EQUIVALENCE).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));

    assert_eq!(code(&run("equivalence", &config, &a)), 0);
    let out = bin()
        .args(["equivalence", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&b)
        .args(["--seed", "43"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);

    let (ra, rb) = (report(&a), report(&b));
    assert_eq!(rb["seed"], 43);
    assert_ne!(
        ra["results"]["max_t_deviation"], rb["results"]["max_t_deviation"],
        "different seeds produced the same coupling"
    );
}

#[test]
fn two_level_bound_state_finds_the_perturbed_energy() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("coupling.csv"),
        "row,col,re,im\n0,1,0.1,0\n1,0,0.1,0\n",
    )
    .unwrap();
    let config = tmp.path().join("bound.toml");
    fs::write(
        &config,
        r#"
scenario = "bound-state"

[basis]
energies = [0.0, 1.0]

[interaction]
kind = "instantaneous"
coupling_csv = "coupling.csv"

[solver]
level = 0
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");

    let out = run("bound-state", &config, &out_dir);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let rep = report(&out_dir);
    let energy = rep["results"]["pole_energy_re"].as_f64().unwrap();
    let exact = 0.5 * (1.0 - 1.04_f64.sqrt());
    assert!(
        (energy - exact).abs() < 1e-6,
        "pole at {energy}, expected {exact}"
    );
    assert!(out_dir.join("pole.json").exists());
    assert!(fs::read_to_string(out_dir.join("channel.csv"))
        .unwrap()
        .starts_with("re_z,im_z,re_c,im_c\n"));
}

#[test]
fn negative_memory_width_is_rejected_before_any_output() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    fs::write(
        &config,
        r#"
[basis]
energies = [0.0, 1.0]

[interaction]
kind = "exponential"
strength = 0.2
theta = -0.5
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");

    let out = run("bound-state", &config, &out_dir);
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("interaction.theta"), "stderr: {stderr}");
    assert!(!out_dir.exists(), "invalid config still produced outputs");
}

#[test]
fn unknown_scenario_and_malformed_config_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("equiv.toml");
    fs::write(&config, EQUIVALENCE).unwrap();

    let out = run("resonance", &config, &tmp.path().join("o1"));
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));

    let broken = tmp.path().join("broken.toml");
    fs::write(&broken, "basis = [unclosed").unwrap();
    let out = run("equivalence", &broken, &tmp.path().join("o2"));
    assert_eq!(code(&out), 2);
    assert!(!tmp.path().join("o2").exists());
}

#[test]
fn failed_check_exits_one_with_the_report_written() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("weak.toml");
    // a contour seeded this close in carries a visible boundary truncation,
    // so the equivalence gate must fail honestly
    fs::write(
        &config,
        r#"
scenario = "equivalence"
seed = 42

[basis]
dimension = 8
start = 0.0
spacing = 0.5

[interaction]
kind = "instantaneous"
strength = 0.25

[solver]
radius_scale = 100.0
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");

    let out = run("equivalence", &config, &out_dir);
    assert_eq!(code(&out), 1);

    let rep = report(&out_dir);
    let checks = rep["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["passed"] == false));
    for c in checks {
        assert!(c["measured"].is_number(), "measured must stay numeric");
    }
}

#[test]
fn runtime_failure_exits_one_and_names_the_module() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bound.toml");
    fs::write(
        &config,
        r#"
[basis]
energies = [0.0, 1.0]

[interaction]
kind = "instantaneous"
coupling_csv = "missing.csv"
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");

    let out = run("bound-state", &config, &out_dir);
    assert_eq!(code(&out), 1);
    let rep = report(&out_dir);
    let checks = rep["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0]["name"], "execution");
    assert_eq!(checks[0]["passed"], false);
    let detail = checks[0]["detail"].as_str().unwrap();
    assert!(detail.contains("missing.csv"), "detail: {detail}");
}

#[test]
fn shift_scenario_emits_the_scaling_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("shift.toml");
    fs::write(
        &config,
        r#"
scenario = "shift"

[self_energy]
family = "regulated"
alpha = 0.0072973525693
mass = 1.0
lambda = 100.0
e0 = 0.5
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");

    let out = run("shift", &config, &out_dir);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let rep = report(&out_dir);
    assert!(rep["results"]["delta0_re"].as_f64().unwrap() != 0.0);
    let scaling: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out_dir.join("shift_report.json")).unwrap(),
    )
    .expect("scaling report parses");
    assert!(scaling["lambda_sweep"].as_array().unwrap().len() == 3);
    let sweep = fs::read_to_string(out_dir.join("lambda_sweep.csv")).unwrap();
    assert!(sweep.starts_with("lambda,re_delta_d,im_delta_d\n"));
    assert_eq!(sweep.lines().count(), 4);
}

#[test]
fn divergence_scenario_measures_the_log_growth() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("div.toml");
    fs::write(
        &config,
        r#"
scenario = "divergence"

[self_energy]
family = "unregulated"
alpha = 0.0072973525693
mass = 1.0
e0 = 0.5
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");

    let out = run("divergence", &config, &out_dir);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&out_dir);
    let slope = rep["results"]["log_slope"].as_f64().unwrap();
    let expected = 0.0072973525693 / (4.0 * std::f64::consts::PI);
    assert!((slope / expected - 1.0).abs() < 0.05, "slope {slope:e}");
}

#[test]
fn scenario_name_mismatch_is_a_config_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("equiv.toml");
    fs::write(&config, EQUIVALENCE).unwrap();

    let out = run("evolve", &config, &tmp.path().join("out"));
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("equivalence"), "stderr: {stderr}");
}
