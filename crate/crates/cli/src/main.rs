use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mventropy::scenario::{builtin, run_scenario_text, ExitStatus, Overrides, BUILTINS};
use mventropy::suite::{run_suite, SUITES};

/// Exact entropy computations for multivalued maps.
#[derive(Parser)]
#[command(name = "mventropy", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a built-in scenario by name).
    Run {
        scenario: String,
        /// Write report.json and CSV tables here instead of printing the report.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        /// Comma-separated radii, e.g. `1/2,1/4`.
        #[arg(long, value_delimiter = ',')]
        eps_ladder: Option<Vec<String>>,
        #[arg(long)]
        exact_threshold: Option<usize>,
    },
    /// Run a seeded property suite.
    Suite {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// List built-in scenarios and suites.
    List,
}

fn exit(status: ExitStatus) -> ExitCode {
    ExitCode::from(status.code() as u8)
}

fn run(scenario: &str, out: Option<PathBuf>, overrides: Overrides) -> ExitCode {
    let text = match std::fs::read_to_string(scenario) {
        Ok(t) => t,
        Err(e) => match builtin(scenario) {
            Some(t) => t.to_string(),
            None => {
                eprintln!("cannot read {scenario}: {e} (and it is not a built-in scenario)");
                return exit(ExitStatus::ParseError);
            }
        },
    };
    let outcome = match run_scenario_text(&text, &overrides) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return exit(ExitStatus::of_error(&e));
        }
    };
    match out {
        Some(dir) => {
            if let Err(e) = outcome.write_to(&dir) {
                eprintln!("cannot write to {}: {e}", dir.display());
                return exit(ExitStatus::ParseError);
            }
            for c in &outcome.report.checks {
                let status = serde_json::to_value(c.status).expect("status serializes");
                let line = format!("{:<6} {} ({})", status.as_str().unwrap_or("?").to_uppercase(), c.id, c.kind);
                match &c.message {
                    Some(m) => println!("{line}: {m}"),
                    None => println!("{line}"),
                }
            }
            println!("report written to {}", dir.join("report.json").display());
        }
        None => print!("{}", outcome.report_json()),
    }
    exit(outcome.exit_status())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            scenario,
            out,
            max_n,
            grid,
            eps_ladder,
            exact_threshold,
        } => run(
            &scenario,
            out,
            Overrides {
                max_n,
                grid,
                eps_ladder,
                exact_threshold,
            },
        ),
        Command::Suite { name, seed, count } => match run_suite(&name, seed, count) {
            Ok(report) => {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                exit(if report.ok() { ExitStatus::Pass } else { ExitStatus::AssertionFailure })
            }
            Err(e) => {
                eprintln!("{e}");
                exit(ExitStatus::of_error(&e))
            }
        },
        Command::List => {
            println!("scenarios:");
            for (name, text) in BUILTINS {
                let description = mventropy::scenario::parse_scenario(text)
                    .map(|s| s.description)
                    .unwrap_or_default();
                println!("  {name:<28} {description}");
            }
            println!("suites:");
            for s in SUITES {
                println!("  {:<28} seed {:<4} count {:<5} {}", s.name, s.seed, s.count, s.description);
            }
            ExitCode::SUCCESS
        }
    }
}
