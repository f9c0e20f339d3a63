//! End-to-end runs: ingest, factorize, propagate, estimate, analyze.
//!
//! The step loop parallelizes over walkers between synchronization points
//! (population control, estimation); every walker draws from a substream keyed
//! by (seed, slot, step), so a run is a pure function of its configuration.

use crate::error::{Error, Result};
use crate::estimators::{
    autocorrelation_error, local_energy, stochastic_reconfiguration, EnergyTrace, TraceSample,
};
use crate::hamiltonian::{
    assemble_mc_hamiltonian, cholesky_decompose, fold_dse, without_dse, DecouplingScheme,
    DEFAULT_CHOLESKY_TOL,
};
use crate::model::{build_fixture, parse_cavity, parse_fcidump, CavitySpec, IntegralSet, ModeSpec};
use crate::oracle::{fci_ground_state, FciSpace, DEFAULT_DENSE_LIMIT};
use crate::rng::{substream, STREAM_RECONFIGURE};
use crate::walker::{
    build_propagator, build_trial, propagate_step, reorthogonalize, Constraint, Walker,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Where the electronic integrals come from.
#[derive(Debug, Clone)]
pub enum SystemSource {
    FcidumpPath(PathBuf),
    Fixture { name: String, params: Vec<f64> },
}

/// A cavity mode given on the command line or in a config file:
/// coupling g = gdiag·I on the diagonal.
#[derive(Debug, Clone, Copy)]
pub struct InlineMode {
    pub omega: f64,
    pub gdiag: f64,
    pub n_max: usize,
    pub dnuc: f64,
}

/// Where the cavity modes come from.
#[derive(Debug, Clone)]
pub enum CavitySource {
    Path(PathBuf),
    Inline(Vec<InlineMode>),
    None,
}

/// Full configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemSource,
    pub cavity: CavitySource,
    pub dtau: f64,
    pub total_time: f64,
    pub n_walkers: usize,
    pub estimator_stride: usize,
    pub sr_stride: usize,
    pub orth_stride: usize,
    pub scheme: DecouplingScheme,
    pub constraint: Constraint,
    pub include_dse: bool,
    pub seed: u64,
    pub oracle: bool,
    pub equilibration_fraction: f64,
    pub cholesky_tolerance: f64,
    pub photon_occupation: Vec<usize>,
}

impl RunConfig {
    pub fn new(system: SystemSource, cavity: CavitySource) -> Self {
        RunConfig {
            system,
            cavity,
            dtau: 0.005,
            total_time: 20.0,
            n_walkers: 256,
            estimator_stride: 10,
            sr_stride: 10,
            orth_stride: 10,
            scheme: DecouplingScheme::TwoField,
            constraint: Constraint::Phaseless,
            include_dse: true,
            seed: 1,
            oracle: false,
            equilibration_fraction: 0.25,
            cholesky_tolerance: DEFAULT_CHOLESKY_TOL,
            photon_occupation: Vec::new(),
        }
    }

    pub fn total_steps(&self) -> usize {
        (self.total_time / self.dtau).round() as usize
    }
}

/// Human-readable configuration diagnostics; empty means valid. Never mutates.
pub fn validate_config(config: &RunConfig) -> Vec<String> {
    let mut out = Vec::new();
    if !(config.dtau > 0.0) {
        out.push("dtau must be positive".into());
    }
    if !(config.total_time > 0.0) {
        out.push("total_time must be positive".into());
    }
    if config.n_walkers == 0 {
        out.push("n_walkers must be positive".into());
    }
    if !(0.0..1.0).contains(&config.equilibration_fraction) {
        out.push("equilibration_fraction must lie in [0, 1)".into());
    }
    if !(config.cholesky_tolerance > 0.0) {
        out.push("cholesky_tolerance must be positive".into());
    }
    if config.dtau > 0.0 && config.total_time > 0.0 {
        let steps = config.total_steps();
        if steps == 0 {
            out.push("total_time/dtau rounds to zero steps".into());
        }
        for (name, stride) in [
            ("estimator_stride", config.estimator_stride),
            ("sr_stride", config.sr_stride),
            ("orth_stride", config.orth_stride),
        ] {
            if stride == 0 {
                out.push(format!("{name} must be positive"));
            } else if steps > 0 && steps % stride != 0 {
                out.push(format!(
                    "{name} {stride} does not divide the {steps} total steps evenly"
                ));
            }
        }
    }
    if let SystemSource::FcidumpPath(p) = &config.system {
        if !p.exists() {
            out.push(format!("fcidump file {} does not exist", p.display()));
        }
    }
    if let CavitySource::Path(p) = &config.cavity {
        if !p.exists() {
            out.push(format!("cavity file {} does not exist", p.display()));
        }
    }
    // dimension cap, for the sources that are cheap to inspect
    if config.oracle {
        if let (SystemSource::Fixture { name, params }, CavitySource::Inline(modes)) =
            (&config.system, &config.cavity)
        {
            if let Ok((set, _)) = build_fixture(name, params) {
                let d_el = binomial(set.n_orb, set.n_alpha) * binomial(set.n_orb, set.n_beta);
                let ph: usize = modes.iter().map(|m| m.n_max + 1).product();
                let dim = d_el * ph;
                if dim > DEFAULT_DENSE_LIMIT {
                    out.push(format!(
                        "oracle requires a dense space of dimension {dim}, above the cap {DEFAULT_DENSE_LIMIT}"
                    ));
                }
            }
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out = 1usize;
    for i in 0..k {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// Summary statistics of a finished run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub e_mean: f64,
    pub e_error: f64,
    pub tau_int: f64,
    pub n_samples_used: usize,
    pub e_fci: Option<f64>,
    pub sigma_distance: Option<f64>,
    pub wall_time_seconds: f64,
    pub seed: u64,
    pub scheme: DecouplingScheme,
    pub constraint: Constraint,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: EnergyTrace,
    pub summary: RunSummary,
}

fn load_system(config: &RunConfig) -> Result<(IntegralSet, CavitySpec)> {
    let (integrals, fixture_cavity) = match &config.system {
        SystemSource::FcidumpPath(path) => (
            parse_fcidump(&std::fs::read_to_string(path)?)?,
            CavitySpec::empty(),
        ),
        SystemSource::Fixture { name, params } => build_fixture(name, params)?,
    };
    let cavity = match &config.cavity {
        CavitySource::Path(path) => parse_cavity(&std::fs::read_to_string(path)?)?,
        CavitySource::Inline(modes) => CavitySpec {
            modes: modes
                .iter()
                .map(|m| ModeSpec {
                    omega: m.omega,
                    coupling: DMatrix::from_diagonal_element(
                        integrals.n_orb,
                        integrals.n_orb,
                        m.gdiag,
                    ),
                    nuclear_projection: m.dnuc,
                    n_max: m.n_max,
                })
                .collect(),
        },
        CavitySource::None => fixture_cavity,
    };
    integrals.validate()?;
    cavity.validate(integrals.n_orb)?;
    Ok((integrals, cavity))
}

/// Executes the full pipeline and returns the trace plus summary.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let start = std::time::Instant::now();
    let diagnostics = validate_config(config);
    if !diagnostics.is_empty() {
        return Err(Error::InvalidInput(diagnostics.join("; ")));
    }

    let (integrals, raw_cavity) = load_system(config)?;
    let cavity = raw_cavity.fold_nuclear(integrals.n_elec())?;
    let dse = if config.include_dse {
        fold_dse(&integrals, &cavity)?
    } else {
        without_dse(&integrals)
    };
    let chol = cholesky_decompose(&dse.v_tilde, config.cholesky_tolerance)?;
    let mc = assemble_mc_hamiltonian(&dse, &chol, &cavity, config.scheme)?;
    let trial = build_trial(&dse, &cavity, &config.photon_occupation)?;
    let propagator = build_propagator(&mc, config.dtau);

    let mut population: Vec<Walker> = (0..config.n_walkers)
        .map(|_| Walker::from_trial(&trial))
        .collect();
    let mut trace = EnergyTrace {
        samples: Vec::new(),
        stride: config.estimator_stride,
    };

    let total_steps = config.total_steps();
    let seed = config.seed;
    let constraint = config.constraint;

    for step in 1..=total_steps {
        population
            .par_iter_mut()
            .enumerate()
            .for_each(|(slot, walker)| {
                let mut rng = substream(seed, slot as u64, step as u64);
                let _ = propagate_step(walker, &propagator, &trial, &mut rng, constraint);
            });

        if step % config.orth_stride == 0 {
            population.par_iter_mut().for_each(|walker| {
                let _ = reorthogonalize(walker, &trial);
            });
        }

        if step % config.estimator_stride == 0 {
            let energies: Vec<Option<Complex64>> = population
                .par_iter()
                .map(|walker| {
                    if !walker.is_alive() {
                        return None;
                    }
                    local_energy(walker, &trial, &dse, &chol, &cavity)
                        .ok()
                        .map(|e| e.total)
                })
                .collect();
            let mut numerator = Complex64::ZERO;
            let mut denominator = Complex64::ZERO;
            let mut total_weight = 0.0;
            let mut n_alive = 0usize;
            for (walker, energy) in population.iter_mut().zip(energies) {
                match energy {
                    Some(e) if walker.is_alive() => {
                        let w = walker.complex_weight();
                        numerator += w * e;
                        denominator += w;
                        total_weight += walker.weight;
                        n_alive += 1;
                    }
                    _ => walker.kill(),
                }
            }
            if !(denominator.re > 0.0) {
                return Err(Error::PopulationCollapse(denominator.re));
            }
            trace.samples.push(TraceSample {
                step,
                tau: step as f64 * config.dtau,
                numerator,
                denominator: denominator.re,
                total_weight,
                n_alive,
            });
        }

        if step % config.sr_stride == 0 {
            let mut rng = substream(seed, STREAM_RECONFIGURE, step as u64);
            stochastic_reconfiguration(&mut population, &mut rng)?;
        }
    }

    let estimate = autocorrelation_error(&trace, config.equilibration_fraction)?;

    let (e_fci, sigma_distance) = if config.oracle {
        match FciSpace::with_limit(&dse, &cavity, DEFAULT_DENSE_LIMIT) {
            Ok(_) => {
                let (e, _) = fci_ground_state(&dse, &cavity)?;
                let distance = if estimate.error > 0.0 {
                    (estimate.mean - e).abs() / estimate.error
                } else {
                    f64::INFINITY
                };
                (Some(e), Some(distance))
            }
            Err(Error::DimensionOverLimit { dim, limit }) => {
                eprintln!("oracle skipped: dimension {dim} exceeds dense limit {limit}");
                (None, None)
            }
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };

    Ok(RunOutput {
        trace,
        summary: RunSummary {
            e_mean: estimate.mean,
            e_error: estimate.error,
            tau_int: estimate.tau_int,
            n_samples_used: estimate.n_used,
            e_fci,
            sigma_distance,
            wall_time_seconds: start.elapsed().as_secs_f64(),
            seed: config.seed,
            scheme: config.scheme,
            constraint: config.constraint,
        },
    })
}

/// Trace CSV, one row per estimator sample, full double precision.
pub fn format_trace_csv(trace: &EnergyTrace) -> String {
    let mut out = String::from(
        "step,tau,e_numerator_re,e_numerator_im,weight_denominator,e_mixed_re,e_mixed_im,total_weight,n_alive\n",
    );
    for s in &trace.samples {
        let mixed = s.mixed_energy();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.step,
            s.tau,
            s.numerator.re,
            s.numerator.im,
            s.denominator,
            mixed.re,
            mixed.im,
            s.total_weight,
            s.n_alive
        ));
    }
    out
}

/// Summary as key=value lines.
pub fn format_summary(summary: &RunSummary) -> String {
    let mut out = String::new();
    out.push_str(&format!("e_mean={}\n", summary.e_mean));
    out.push_str(&format!("e_error={}\n", summary.e_error));
    out.push_str(&format!("tau_int={}\n", summary.tau_int));
    out.push_str(&format!("n_samples_used={}\n", summary.n_samples_used));
    if let Some(e_fci) = summary.e_fci {
        out.push_str(&format!("e_fci={e_fci}\n"));
    }
    if let Some(d) = summary.sigma_distance {
        out.push_str(&format!("sigma_distance={d}\n"));
    }
    out.push_str(&format!(
        "wall_time_seconds={}\n",
        summary.wall_time_seconds
    ));
    out.push_str(&format!("seed={}\n", summary.seed));
    out.push_str(&format!("scheme={}\n", summary.scheme));
    out.push_str(&format!("constraint={}\n", summary.constraint));
    out
}

pub fn write_outputs(output: &RunOutput, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir)?;
    let trace_path = out_dir.join("trace.csv");
    let summary_path = out_dir.join("summary.txt");
    let mut trace_file = std::fs::File::create(&trace_path)?;
    trace_file.write_all(format_trace_csv(&output.trace).as_bytes())?;
    let mut summary_file = std::fs::File::create(&summary_path)?;
    summary_file.write_all(format_summary(&output.summary).as_bytes())?;
    Ok((trace_path, summary_path))
}
