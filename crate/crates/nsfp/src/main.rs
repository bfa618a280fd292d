use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nsfp::{check_energy, parse_config, run_simulation};

#[derive(Parser)]
#[command(name = "nsfp", version, about = "Navier-Stokes-Fokker-Planck FENE chain solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a TOML configuration.
    Simulate {
        config: PathBuf,
        /// Output directory (defaults to the configuration's stem).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides output.pass_threshold.
        #[arg(long)]
        pass_threshold: Option<f64>,
    },
    /// Run the invariant suite.
    Selftest {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Re-verify the diagnostics of a run directory from its dumps.
    CheckEnergy { run_dir: PathBuf },
}

fn simulate(config: PathBuf, out: Option<PathBuf>, threshold: Option<f64>) -> Result<bool> {
    let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = parse_config(&text)?;
    let out = out.unwrap_or_else(|| PathBuf::from(config.file_stem().unwrap_or_default()));
    let threshold = threshold.unwrap_or(cfg.output.pass_threshold);
    if !(0.0..=1.0).contains(&threshold) {
        bail!("--pass-threshold requires a fraction in [0, 1], got {threshold}");
    }
    let summary = run_simulation(&cfg, &out)?;
    println!(
        "{} steps, {} passed the energy check ({:.2}%), output in {}",
        summary.steps,
        summary.passed,
        100.0 * summary.pass_fraction,
        out.display()
    );
    Ok(summary.meets(threshold))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            out,
            pass_threshold,
        } => simulate(config, out, pass_threshold),
        Command::Selftest { seed } => {
            log::info!("selftest seed {seed}");
            Ok(nsfp::selftest::run_selftest(seed).iter().all(|c| c.pass))
        }
        Command::CheckEnergy { run_dir } => check_energy(&run_dir).map(|r| {
            for m in &r.mismatches {
                println!("step {}: {}", m.step, m.what);
            }
            println!(
                "{} rows checked, {} against dumps, {} mismatches",
                r.rows,
                r.dumped_rows,
                r.mismatches.len()
            );
            r.ok()
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
