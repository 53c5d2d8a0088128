use clap::Parser;
use gde_lab::config::{Scenario, ScenarioConfig};
use gde_lab::report::{Check, RunReport, SCHEMA_VERSION};
use gde_lab::scenario::run_scenario;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Exit codes: 0 all checks passed, 1 a check failed or the run aborted
/// (report still written), 2 invalid config or usage (nothing written).
#[derive(Parser)]
#[command(name = "gde-lab", version, about = "Scenario runner for the gde-core pipelines")]
struct Cli {
    /// equivalence | bound-state | evolve | shift | divergence | crosscheck
    scenario: String,

    /// TOML scenario configuration.
    #[arg(long)]
    config: PathBuf,

    /// Directory for report.json and the scenario artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Overrides the seed given in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let scenario: Scenario = match cli.scenario.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match ScenarioConfig::from_toml(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let violations = cfg.validate(scenario);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("config invalid: {v}");
        }
        return ExitCode::from(2);
    }

    let config_dir = cli
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));

    let clock = Instant::now();
    let (checks, results, files) = match run_scenario(scenario, &cfg, &config_dir) {
        Ok(outcome) => (outcome.checks, outcome.results, outcome.artifacts),
        Err(e) => (
            vec![Check::failure("execution", format!("{scenario}: {e}"))],
            BTreeMap::new(),
            Vec::new(),
        ),
    };

    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("cannot create {}: {e}", cli.out.display());
        return ExitCode::from(2);
    }
    let mut manifest = Vec::with_capacity(files.len() + 1);
    manifest.push("report.json".to_string());
    for (name, content) in &files {
        if let Err(e) = std::fs::write(cli.out.join(name), content) {
            eprintln!("cannot write {name}: {e}");
            return ExitCode::from(2);
        }
        manifest.push(name.clone());
    }

    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.name().into(),
        seed: cfg.seed,
        checks,
        results,
        artifacts: manifest,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
    };
    if let Err(e) = std::fs::write(cli.out.join("report.json"), report.to_json()) {
        eprintln!("cannot write report.json: {e}");
        return ExitCode::from(2);
    }

    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        match &c.detail {
            Some(d) => println!(
                "{verdict} {}: measured={:e} tol={:e} ({d})",
                c.name, c.measured, c.tolerance
            ),
            None => println!(
                "{verdict} {}: measured={:e} tol={:e}",
                c.name, c.measured, c.tolerance
            ),
        }
    }
    if report.all_passed() {
        println!("all checks passed; report in {}", cli.out.display());
        ExitCode::SUCCESS
    } else {
        println!("run failed; report in {}", cli.out.display());
        ExitCode::from(1)
    }
}
