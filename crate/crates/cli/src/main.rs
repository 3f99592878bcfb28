use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use twophoton_cli::commands::{self, CheckFailed};
use twophoton_cli::{parse_config, RunConfig};

/// Two-photon Airy disk simulator.
#[derive(Parser)]
#[command(name = "twophoton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalized two-photon coincidence pattern along r1 = r2.
    Pattern(Common),
    /// Monte Carlo coincidence scan with the configured detector.
    Scan(Common),
    /// Fit the Airy model to a scan CSV.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Scan CSV to fit (overrides fit.input).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Classical vs two-photon patterns and spot-size summary.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV (overrides output.path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides detector.seed).
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let text = std::fs::read_to_string(&self.config)
            .with_context(|| format!("reading {}", self.config.display()))?;
        let mut cfg =
            parse_config(&text).with_context(|| format!("in {}", self.config.display()))?;
        if let (Some(seed), Some(det)) = (self.seed, cfg.detector.as_mut()) {
            det.model.rng_seed = seed;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
            .context("no output path: set output.path or pass --out")?;
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pattern(common) => {
            let (cfg, out) = common.load()?;
            let profile = commands::run_pattern(&cfg)?;
            commands::write_profile_csv(&profile, &out)
        }
        Command::Scan(common) => {
            let (cfg, out) = common.load()?;
            let records = commands::run_scan(&cfg)?;
            commands::write_scan_csv(&records, &out)
        }
        Command::Fit { common, input } => {
            let (cfg, out) = common.load()?;
            match commands::run_fit(&cfg, input.as_deref()) {
                Ok(fit) => {
                    for (name, value) in commands::fit_rows(&fit) {
                        println!("{name} = {value:e}");
                    }
                    commands::write_fit_csv(&fit, &out)
                }
                Err(e) => {
                    if let Some(twophoton::Error::FitDiverged { last, .. }) = e.downcast_ref() {
                        eprintln!("last iterate:");
                        for (name, value) in commands::fit_rows(last) {
                            eprintln!("  {name} = {value:e}");
                        }
                        let _ = commands::write_fit_csv(last, Path::new(&out));
                    }
                    Err(e)
                }
            }
        }
        Command::Compare(common) => {
            let (cfg, out) = common.load()?;
            let report = commands::run_compare(&cfg)?;
            report.write_csv(&out)?;
            print!("{}", report.summary());
            if !report.passed() {
                return Err(CheckFailed(format!(
                    "numeric profile deviates from the closed form by {:.3e} RMS (tolerance {:.3e})",
                    report.numeric_rms, report.rms_tolerance
                ))
                .into());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let check = e.downcast_ref::<CheckFailed>().is_some()
                || matches!(e.downcast_ref(), Some(twophoton::Error::FitDiverged { .. }));
            ExitCode::from(if check { 2 } else { 1 })
        }
    }
}
