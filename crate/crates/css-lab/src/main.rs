use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use css_lab::cli::{self, all_pass};
use css_lab::config::RunConfig;
use css_lab::error::Error;

/// Batch front end for the periodic-box gauge-covariant Schroedinger
/// laboratory. Simulations and verification suites write CSV/JSON files
/// for offline plotting; stdout carries a short summary.
///
/// Exit codes: 0 success, 2 configuration error, 3 integration failure,
/// 4 audit failure (a requested check missed its threshold).
#[derive(Parser)]
#[command(name = "css-lab", version, about, long_about = None, after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const CONFIG_HELP: &str = "\
Config files are flat `key = value` text with `#` comments. Keys and
defaults:
  n = 256                 grid points per axis (power of two, >= 8)
  box_length = 40         box side length
  dt = 1e-3               time step
  t_end = 10              final time
  g = 1                   self-interaction coupling
  data = gaussian         gaussian | plane_wave | ring | file
  amplitude = 0.05        datum amplitude
  width = 1               gaussian / ring width
  momentum_x = 3          plane-wave momentum (lattice units)
  momentum_y = 0
  phase_twist = 1         ring winding number
  input_file =            checkpoint path for data = file
  checkpoint_stride = 250 steps between checkpoints
  dealias = on            two-thirds-rule dealiasing
  free = off              disable the gauge terms
  seed = 7                seed for generated verification fields
  out_dir =               output directory (--out wins)

CSS_LAB_THREADS caps internal parallelism (default 1, reproducible).";

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured problem; writes checkpoints,
    /// diagnostics.csv and summary.json.
    Run(CommonArgs),
    /// Operator-identity suites: commutators, Leibniz rules,
    /// interpolation ratios, free-space Biot-Savart comparison.
    /// Runs on a 128^2 grid unless --n overrides it.
    VerifyIdentities(CommonArgs),
    /// Trilinear-sum-versus-physical-space oracle, symbol identities and
    /// the integration-by-parts refinement check. The direct sums run on
    /// an 8^2 grid unless --n overrides it (16 at most).
    NullformOracle(CommonArgs),
    /// Decay surrogates over the checkpoints of a finished run
    /// (requires --out pointing at the run directory).
    DecayReport(CommonArgs),
    /// Scattering Cauchy table over the checkpoints of a finished run.
    ScatteringReport(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file path (defaults apply when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. --set dt=5e-4 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Grid size shorthand (overrides the config's n).
    #[arg(long)]
    n: Option<usize>,
    /// Seed shorthand for generated verification fields.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path, &[])?,
            None => RunConfig::default(),
        };
        config.apply_overrides(&self.set)?;
        if let Some(n) = self.n {
            config.apply_overrides(&[format!("n={n}")])?;
        }
        if let Some(seed) = self.seed {
            config.apply_overrides(&[format!("seed={seed}")])?;
        }
        config.validate()?;
        Ok(config)
    }

    fn out_dir(&self, config: &RunConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("cssl_out"))
    }
}

fn dispatch(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run(args) => {
            let config = args.config()?;
            let out = args.out_dir(&config);
            let output = cli::run_to_dir(&config, &out)?;
            let records = &output.artifacts.records;
            let last = records.last().expect("at least the initial record");
            println!(
                "run finished: t = {}, {} checkpoints, charge drift {:.3e}",
                last.t,
                records.len(),
                (last.charge - output.artifacts.initial_charge).abs()
                    / output.artifacts.initial_charge.max(1e-300),
            );
            if let Some(err) = output.plane_wave_error {
                println!("plane-wave exact-solution relative L2 error: {err:.6e}");
            }
            println!("artifacts in {}", out.display());
            Ok(true)
        }
        Command::VerifyIdentities(args) => {
            let config = args.config()?;
            let n = if args.n.is_some() { config.n } else { 128 };
            let rows = cli::identity_suite(n, config.box_length, config.seed)?;
            for row in &rows {
                row.print();
            }
            Ok(all_pass(&rows))
        }
        Command::NullformOracle(args) => {
            let config = args.config()?;
            let n = if args.n.is_some() { config.n } else { 8 };
            let rows = cli::nullform_suite(n, config.seed)?;
            for row in &rows {
                row.print();
            }
            Ok(all_pass(&rows))
        }
        Command::DecayReport(args) => {
            let config = args.config()?;
            let out = args.out_dir(&config);
            let states = cli::load_run_states(&out)?;
            let rows = cli::decay_report(&states, &out)?;
            for row in &rows {
                row.print();
            }
            Ok(all_pass(&rows))
        }
        Command::ScatteringReport(args) => {
            let config = args.config()?;
            let out = args.out_dir(&config);
            let states = cli::load_run_states(&out)?;
            let rows = cli::scattering_report(&states, &out)?;
            for row in &rows {
                row.print();
            }
            Ok(all_pass(&rows))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => {
            eprintln!("audit failure: at least one check missed its threshold");
            ExitCode::from(4)
        }
        Err(err @ Error::IntegrationFailure { .. }) => {
            eprintln!("error: {err}");
            ExitCode::from(3)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
