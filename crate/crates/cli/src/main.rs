//! Command-line driver: configures a run, executes it, and writes the
//! trace/summary files.

mod config;

use anyhow::{Context, Result};
use clap::Parser;
use config::{parse_config_file, parse_constraint, parse_mode_spec, parse_scheme, PartialConfig};
use pfqmc::driver::{format_summary, run, validate_config, write_outputs};
use pfqmc::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Stochastic ground-state projection for cavity-coupled electrons.
///
/// Systems come from an FCIDUMP file or a built-in fixture
/// (hubbard_dimer:t,U | single_level:h,u | photon_only:omega); cavity modes
/// from a cavity file or inline --mode specs. Results land in
/// <out-dir>/trace.csv and <out-dir>/summary.txt.
#[derive(Debug, Parser)]
#[command(name = "pfqmc", version, max_term_width = 100)]
struct Cli {
    /// Path to an FCIDUMP file with the electronic integrals
    #[arg(long, value_name = "PATH")]
    fcidump: Option<PathBuf>,

    /// Path to a cavity-mode file
    #[arg(long, value_name = "PATH")]
    cavity: Option<PathBuf>,

    /// Built-in fixture, e.g. hubbard_dimer:1,4
    #[arg(long, value_name = "NAME[:PARAMS]")]
    fixture: Option<String>,

    /// Inline cavity mode "omega=<w> gdiag=<g> nmax=<n> [dnuc=<d>]"; repeatable
    #[arg(long = "mode", value_name = "SPEC")]
    modes: Vec<String>,

    /// Flat key=value run configuration file (flags given here win)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,

    /// Walker population size
    #[arg(long)]
    walkers: Option<usize>,

    /// Imaginary-time step
    #[arg(long)]
    dtau: Option<f64>,

    /// Total imaginary time
    #[arg(long = "total-time")]
    total_time: Option<f64>,

    /// Bilinear decoupling scheme
    #[arg(long, value_parser = ["two", "three"])]
    scheme: Option<String>,

    /// Weight constraint
    #[arg(long, value_parser = ["free", "phaseless"])]
    constraint: Option<String>,

    /// Drop the dipole self-energy from the Hamiltonian
    #[arg(long = "no-dse")]
    no_dse: bool,

    /// Run the dense diagonalization oracle and report the discrepancy
    #[arg(long)]
    oracle: bool,

    /// Fraction of the trace discarded as equilibration
    #[arg(long)]
    equilibration: Option<f64>,

    /// Output directory for trace.csv and summary.txt
    #[arg(long = "out-dir", value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

impl Cli {
    fn as_partial(&self) -> Result<PartialConfig> {
        let modes = if self.modes.is_empty() {
            None
        } else {
            Some(
                self.modes
                    .iter()
                    .map(|s| parse_mode_spec(s))
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        Ok(PartialConfig {
            fcidump: self.fcidump.clone(),
            cavity: self.cavity.clone(),
            fixture: self.fixture.clone(),
            modes,
            dtau: self.dtau,
            total_time: self.total_time,
            walkers: self.walkers,
            scheme: self.scheme.as_deref().map(parse_scheme).transpose()?,
            constraint: self
                .constraint
                .as_deref()
                .map(parse_constraint)
                .transpose()?,
            no_dse: if self.no_dse { Some(true) } else { None },
            seed: self.seed,
            oracle: if self.oracle { Some(true) } else { None },
            equilibration_fraction: self.equilibration,
            out_dir: self.out_dir.clone(),
            ..Default::default()
        })
    }
}

/// Which pipeline stage an error came from, for the exit message.
fn stage_of(err: &Error) -> &'static str {
    match err {
        Error::Parse { .. }
        | Error::Io(_)
        | Error::InvalidInput(_)
        | Error::DimensionMismatch(_) => "ingest",
        Error::NotPositiveSemiDefinite { .. } => "factorization",
        Error::ScfNonConvergence(_) => "trial",
        Error::DimensionOverLimit { .. } | Error::OrthogonalTrial(_) => "oracle",
        Error::WalkerDead(_) | Error::PopulationCollapse(_) => "propagation",
        Error::TooFewSamples { .. } => "statistics",
    }
}

fn execute() -> Result<()> {
    let cli = Cli::parse();

    let mut merged = PartialConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        merged = merged
            .overlay(parse_config_file(&text).with_context(|| format!("in {}", path.display()))?);
    }
    merged = merged.overlay(cli.as_partial()?);
    let (config, out_dir) = merged.into_run_config()?;

    let diagnostics = validate_config(&config);
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            eprintln!("config: {d}");
        }
        anyhow::bail!("invalid configuration ({} problem(s))", diagnostics.len());
    }

    let output = run(&config).map_err(|e| anyhow::anyhow!("{} stage failed: {e}", stage_of(&e)))?;
    let (trace_path, summary_path) = write_outputs(&output, &out_dir)?;

    print!("{}", format_summary(&output.summary));
    eprintln!(
        "wrote {} and {}",
        trace_path.display(),
        summary_path.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match execute() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
