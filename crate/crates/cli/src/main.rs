use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use brpl_cli::{output_root, plan, resolve, run_all, Sweep, PRESETS};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "brpl", version, about = "BRPL routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or preset.
    Run {
        /// Scenario file or preset name.
        scenario: String,
        /// First seed; defaults to the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of consecutive seeds.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Parameter sweep `key=v1,v2,...`.
        #[arg(long)]
        sweep: Option<Sweep>,
        /// Output root (overrides BRPL_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file or preset without running it.
    Validate { scenario: String },
    /// Preset operations.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List built-in presets.
    List,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            seed,
            seeds,
            sweep,
            out,
        } => {
            let (scenario, name) = resolve(&scenario).with_context(|| format!("loading {scenario}"))?;
            let first = seed.unwrap_or(scenario.run.seed);
            let seeds: Vec<u64> = (0..seeds.max(1)).map(|i| first + i).collect();
            let root = output_root(out.as_deref());
            let jobs = plan(&scenario, &name, &root, &seeds, sweep.as_ref())?;
            let mut failed = 0;
            for outcome in run_all(&jobs) {
                match outcome.result {
                    Ok(s) => println!(
                        "{}: generated {} delivered {} loss {}",
                        outcome.dir.display(),
                        s.generated,
                        s.delivered,
                        s.loss.map_or("NA".to_string(), |l| format!("{l:.4}"))
                    ),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{}: FAILED: {e}", outcome.dir.display());
                    }
                }
            }
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Validate { scenario } => {
            let (s, _) = resolve(&scenario)?;
            let cfg = s.to_sim_config()?;
            println!("ok: {} nodes, {} slots", cfg.topology.len(), cfg.slots);
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets {
            action: PresetAction::List,
        } => {
            for p in PRESETS {
                println!("{:<18} {}", p.name, p.description);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
