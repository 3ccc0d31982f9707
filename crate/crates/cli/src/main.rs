use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use twotime::scenario::{exit, list_checks, load_scenario, run, RunOptions, RunReport, ScenarioError};

#[derive(Parser)]
#[command(name = "twotime", version, about = "Two-time conditional current simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory (overrides `outputs.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario's checks without writing artifacts.
    Check {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the verifiable identities and their default tolerances.
    ListChecks {
        #[arg(long)]
        json: bool,
        /// Only checks belonging to this module.
        #[arg(long)]
        module: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Seed for sampled final families (overrides `numeric.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Reject unknown configuration keys; `--strict false` only warns.
    #[arg(long, action = ArgAction::Set, default_value_t = true, num_args = 0..=1, default_missing_value = "true")]
    strict: bool,
    /// Print the report as JSON on stdout.
    #[arg(long)]
    json: bool,
}

fn print_report(report: &RunReport, wall: f64, json: bool) {
    if json {
        let mut v = report.to_json();
        v["wall_time_s"] = serde_json::json!(wall);
        println!("{}", serde_json::to_string_pretty(&v).expect("report serializes"));
        return;
    }
    println!("scenario {} ({})", report.scenario, report.task);
    for c in &report.checks {
        let ratio = c.convergence_ratio.map(|r| format!("  ratio {r:.3}")).unwrap_or_default();
        println!(
            "  {:<4} {:<28} residual {:.3e}  tol {:.1e}{ratio}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance
        );
    }
    for a in &report.artifacts {
        println!("  wrote {a}");
    }
    println!("wall time {wall:.3} s");
}

fn execute(config: &PathBuf, out: Option<PathBuf>, write: bool, common: &Common) -> Result<i32, ScenarioError> {
    let loaded = load_scenario(config, common.strict)?;
    let out_dir = write.then(|| out.unwrap_or_else(|| loaded.scenario.outputs.dir.clone()));
    let start = Instant::now();
    let report = run(&loaded, &RunOptions { out_dir, seed: common.seed })?;
    print_report(&report, start.elapsed().as_secs_f64(), common.json);
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, common } => execute(&config, out, true, &common),
        Command::Check { config, common } => execute(&config, None, false, &common),
        Command::ListChecks { json, module } => {
            let checks = list_checks(module.as_deref());
            if json {
                println!("{}", serde_json::to_string_pretty(&checks).expect("descriptors serialize"));
            } else {
                println!("{:<24} {:<13} {:<8} {:>9}  identity", "id", "module", "rule", "tolerance");
                for c in &checks {
                    let tol = match c.expected {
                        Some(e) => format!("{e}±{:.0}%", 100.0 * c.tolerance),
                        None => format!("{:.0e}", c.tolerance),
                    };
                    println!("{:<24} {:<13} {:<8} {:>9}  {}", c.id, c.module, c.rule, tol, c.identity);
                }
            }
            Ok(exit::PASS)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
