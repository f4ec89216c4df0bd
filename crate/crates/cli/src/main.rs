use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use qthermo::scenarios::{
    run_checks, run_heatmap, run_steady_sweep, run_transient, write_heatmap_csv, write_sweep_csv,
    write_transient_csv, Scenario, ScenarioKind,
};

#[derive(Parser)]
#[command(name = "qthermo", version, about = "Qubit thermometry with local and common thermal baths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transient QFI along a time grid.
    Simulate(RunArgs),
    /// Steady-state QFI over an inverse-temperature sweep.
    Steady(RunArgs),
    /// Steady-state QFI over a grid of local inverse temperatures.
    Heatmap(RunArgs),
    /// Run the built-in acceptance checks.
    Validate {
        /// Only run checks whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file in TOML.
    config: PathBuf,
    /// Directory for the CSV output.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the approximation variant of the config.
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    /// Drop the Lamb-shift Hamiltonian.
    #[arg(long)]
    no_lamb_shift: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Partial,
    Full,
    Unified,
}

impl Variant {
    fn as_str(self) -> &'static str {
        match self {
            Variant::Partial => "partial",
            Variant::Full => "full",
            Variant::Unified => "unified",
        }
    }
}

fn load(args: &RunArgs, kind: ScenarioKind) -> Result<Scenario> {
    let mut s = Scenario::load(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    if s.kind != kind {
        bail!(
            "{} is a `{}` scenario, not `{}`",
            args.config.display(),
            s.kind.as_str(),
            kind.as_str()
        );
    }
    if let Some(v) = args.variant {
        s.set_variant(v.as_str())?;
    }
    if args.no_lamb_shift {
        s.set_lamb_shift(false);
    }
    Ok(s)
}

fn output(dir: &Path, s: &Scenario) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(&s.output_file);
    info!("writing {}", path.display());
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(args) => {
            let s = load(&args, ScenarioKind::Transient)?;
            let series = run_transient(&s)?;
            let (t, f) = series.peak();
            println!("{}: peak QFI {f:.6e} at t = {t:.4}", s.name);
            write_transient_csv(output(&args.out, &s)?, &series)?;
        }
        Command::Steady(args) => {
            let s = load(&args, ScenarioKind::Steady)?;
            let sweep = run_steady_sweep(&s)?;
            let best = sweep.points.iter().map(|p| p.qfi).fold(f64::NEG_INFINITY, f64::max);
            println!("{}: {} points, max QFI {best:.6e}", s.name, sweep.points.len());
            write_sweep_csv(output(&args.out, &s)?, &sweep)?;
        }
        Command::Heatmap(args) => {
            let s = load(&args, ScenarioKind::Heatmap)?;
            let map = run_heatmap(&s)?;
            println!("{}: {} cells, threshold {:.6e}", s.name, map.cells.len(), map.threshold);
            write_heatmap_csv(output(&args.out, &s)?, &map)?;
        }
        Command::Validate { filter } => {
            let outcomes = run_checks(filter.as_deref());
            if outcomes.is_empty() {
                bail!("no check matches the filter");
            }
            for o in &outcomes {
                let verdict = if o.passed { "PASS" } else { "FAIL" };
                println!("{verdict} [{}] {}: {}", o.criterion, o.name, o.detail);
            }
            return Ok(outcomes.iter().all(|o| o.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
