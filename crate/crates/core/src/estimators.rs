//! Mixed estimators, population control, and error analysis.
//!
//! The energy is always evaluated against the dressed physical operator
//! (modified integrals + photon + bilinear terms), never the decoupled MC
//! form, so estimates are independent of the decoupling scheme.

use crate::error::{Error, Result};
use crate::hamiltonian::{CholeskyFactors, DseModifiedIntegrals};
use crate::math::to_complex;
use crate::model::CavitySpec;
use crate::walker::{TrialState, Walker};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngExt};

/// Mixed one-body densities G_pq = ⟨Ψ_T|c†_p c_q|φ⟩ / ⟨Ψ_T|φ⟩ per spin.
#[derive(Debug, Clone)]
pub struct GreensFunction {
    pub g_alpha: DMatrix<Complex64>,
    pub g_beta: DMatrix<Complex64>,
}

impl GreensFunction {
    pub fn total(&self) -> DMatrix<Complex64> {
        &self.g_alpha + &self.g_beta
    }
}

/// G = [φ (Ψ_Tᵀ φ)⁻¹ Ψ_Tᵀ]ᵀ per spin; trace(G^σ) = N_σ by construction.
pub fn greens_function(walker: &Walker, trial: &TrialState) -> Result<GreensFunction> {
    Ok(GreensFunction {
        g_alpha: spin_green(&trial.orbitals_alpha, &walker.slater_alpha)?,
        g_beta: spin_green(&trial.orbitals_beta, &walker.slater_beta)?,
    })
}

fn spin_green(trial: &DMatrix<f64>, slater: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let m = trial.nrows();
    let n = trial.ncols();
    if n == 0 {
        return Ok(DMatrix::zeros(m, m));
    }
    let t = to_complex(trial);
    let s = t.transpose() * slater;
    let inv = s
        .lu()
        .try_inverse()
        .filter(|inv| inv.iter().all(|z| z.is_finite()))
        .ok_or_else(|| Error::WalkerDead("singular trial-walker overlap matrix".into()))?;
    let theta = slater * inv * t.transpose();
    Ok(theta.transpose())
}

/// Mixed photon moments for one mode: (⟨a†a⟩, ⟨a†+a⟩) against a real trial
/// Fock vector.
pub fn photon_moments(
    trial_amp: &DVector<f64>,
    vec: &DVector<Complex64>,
) -> Result<(Complex64, Complex64)> {
    let d = trial_amp.len();
    let mut den = Complex64::ZERO;
    let mut number = Complex64::ZERO;
    let mut quad = Complex64::ZERO;
    for n in 0..d {
        let t = trial_amp[n];
        if t == 0.0 {
            continue;
        }
        den += t * vec[n];
        number += t * (n as f64) * vec[n];
        if n + 1 < d {
            quad += t * ((n + 1) as f64).sqrt() * vec[n + 1];
        }
        if n > 0 {
            quad += t * (n as f64).sqrt() * vec[n - 1];
        }
    }
    if !den.is_finite() || den.norm() < 1e-280 {
        return Err(Error::WalkerDead("vanishing photon overlap".into()));
    }
    Ok((number / den, quad / den))
}

/// Mixed energy split into its physical pieces; `total` is their sum.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBreakdown {
    pub e_one_body: Complex64,
    pub e_two_body: Complex64,
    pub e_photon: Complex64,
    pub e_bilinear: Complex64,
    pub e_constant: Complex64,
    pub total: Complex64,
}

/// Mixed energy estimator. The two-body piece contracts through the Cholesky
/// factors: ½ Σ_γ [ (Σ L_γ G)² − Σ_σ tr((L_γ G^σ)²) ]; photon and bilinear
/// pieces use the per-mode mixed expectations.
pub fn local_energy(
    walker: &Walker,
    trial: &TrialState,
    dse: &DseModifiedIntegrals,
    chol: &CholeskyFactors,
    cavity: &CavitySpec,
) -> Result<EnergyBreakdown> {
    let green = greens_function(walker, trial)?;
    let g_total = green.total();
    let m = dse.n_orb;

    let mut e_one = Complex64::ZERO;
    for p in 0..m {
        for q in 0..m {
            e_one += dse.h_tilde[(p, q)] * g_total[(p, q)];
        }
    }

    let mut e_two = Complex64::ZERO;
    for l in &chol.vectors {
        let l_c = to_complex(l);
        let mut direct = Complex64::ZERO;
        for p in 0..m {
            for q in 0..m {
                direct += l[(p, q)] * g_total[(p, q)];
            }
        }
        let mut exchange = Complex64::ZERO;
        for g_spin in [&green.g_alpha, &green.g_beta] {
            let x = &l_c * g_spin;
            for i in 0..m {
                for j in 0..m {
                    exchange += x[(i, j)] * x[(j, i)];
                }
            }
        }
        e_two += 0.5 * (direct * direct - exchange);
    }

    let mut e_photon = Complex64::ZERO;
    let mut e_bilinear = Complex64::ZERO;
    for (alpha, mode) in cavity.modes.iter().enumerate() {
        let (number, quad) = photon_moments(
            &trial.photon_amplitudes[alpha],
            &walker.photon_vectors[alpha],
        )?;
        e_photon += mode.omega * (number + 0.5);
        let mut dipole = Complex64::ZERO;
        for p in 0..m {
            for q in 0..m {
                dipole += mode.coupling[(p, q)] * g_total[(p, q)];
            }
        }
        e_bilinear += (mode.omega / 2.0).sqrt() * dipole * quad;
    }

    let e_constant = Complex64::new(dse.core_energy, 0.0);
    let total = e_one + e_two + e_photon + e_bilinear + e_constant;
    Ok(EnergyBreakdown {
        e_one_body: e_one,
        e_two_body: e_two,
        e_photon,
        e_bilinear,
        e_constant,
        total,
    })
}

/// Comb (systematic) resampling over the cumulative weights with one uniform
/// offset: returns exactly N walkers of equal weight W/N, preserving the total
/// weight exactly and each walker's phase. Expected copy count is N·w_i/W.
pub fn stochastic_reconfiguration<R: Rng>(population: &mut Vec<Walker>, rng: &mut R) -> Result<()> {
    let n = population.len();
    let total: f64 = population.iter().map(|w| w.weight).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::PopulationCollapse(total));
    }
    let step = total / n as f64;
    let offset: f64 = rng.random::<f64>() * step;

    let mut selected = Vec::with_capacity(n);
    let mut cumulative = 0.0;
    let mut source = 0usize;
    for k in 0..n {
        let position = offset + k as f64 * step;
        while cumulative + population[source].weight <= position {
            cumulative += population[source].weight;
            source += 1;
        }
        selected.push(source);
    }

    let mut out = Vec::with_capacity(n);
    for &i in &selected {
        let mut w = population[i].clone();
        w.weight = step;
        out.push(w);
    }
    *population = out;
    Ok(())
}

/// One estimator sample: weighted numerator Σ w·E and real denominator Σ w.
#[derive(Debug, Clone, Copy)]
pub struct TraceSample {
    pub step: usize,
    pub tau: f64,
    pub numerator: Complex64,
    pub denominator: f64,
    pub total_weight: f64,
    pub n_alive: usize,
}

impl TraceSample {
    pub fn mixed_energy(&self) -> Complex64 {
        self.numerator / self.denominator
    }
}

/// Time series of mixed-estimator samples feeding the error analysis.
#[derive(Debug, Clone, Default)]
pub struct EnergyTrace {
    pub samples: Vec<TraceSample>,
    pub stride: usize,
}

/// Result of the autocorrelation analysis.
#[derive(Debug, Clone, Copy)]
pub struct AutocorrEstimate {
    pub mean: f64,
    pub error: f64,
    pub tau_int: f64,
    pub n_used: usize,
    /// Set when the post-equilibration variance was not positive.
    pub zero_variance_warning: bool,
}

const MIN_SAMPLES: usize = 20;
const WINDOW_FACTOR: f64 = 6.0;

/// Weighted mean and statistical error of the energy trace.
///
/// Discards the first `equilibration_fraction` of samples, then estimates the
/// integrated autocorrelation time by the self-consistent windowing rule
/// (τ_int = ½ + Σ_{t≤W} ρ(t) at the smallest W ≥ 6·τ_int(W)) and returns
/// error = std · sqrt(2 τ_int / N).
pub fn autocorrelation_error(
    trace: &EnergyTrace,
    equilibration_fraction: f64,
) -> Result<AutocorrEstimate> {
    let total = trace.samples.len();
    let skip = (equilibration_fraction * total as f64).floor() as usize;
    let kept = &trace.samples[skip.min(total)..];
    let n = kept.len();
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            have: n,
            need: MIN_SAMPLES,
        });
    }

    let num: f64 = kept.iter().map(|s| s.numerator.re).sum();
    let den: f64 = kept.iter().map(|s| s.denominator).sum();
    if !(den > 0.0) {
        return Err(Error::PopulationCollapse(den));
    }
    let mean = num / den;

    let values: Vec<f64> = kept
        .iter()
        .map(|s| s.numerator.re / s.denominator)
        .collect();
    let sample_mean: f64 = values.iter().sum::<f64>() / n as f64;
    let deviations: Vec<f64> = values.iter().map(|v| v - sample_mean).collect();
    let var0: f64 = deviations.iter().map(|d| d * d).sum::<f64>() / (n - 1) as f64;
    if var0 <= 0.0 || !var0.is_finite() {
        return Ok(AutocorrEstimate {
            mean,
            error: 0.0,
            tau_int: 0.5,
            n_used: n,
            zero_variance_warning: true,
        });
    }

    let rho = |lag: usize| -> f64 {
        let mut sum = 0.0;
        for i in 0..n - lag {
            sum += deviations[i] * deviations[i + lag];
        }
        sum / (n - lag) as f64 / (var0 * (n - 1) as f64 / n as f64)
    };

    let max_window = n / 2;
    let mut tau_int = 0.5;
    let mut running = 0.5;
    for window in 1..=max_window {
        running += rho(window);
        tau_int = running.max(0.5);
        if (window as f64) >= WINDOW_FACTOR * tau_int {
            break;
        }
    }

    let error = (var0 * 2.0 * tau_int / n as f64).sqrt();
    Ok(AutocorrEstimate {
        mean,
        error,
        tau_int,
        n_used: n,
        zero_variance_warning: false,
    })
}

/// Blocking analysis over the same trace, as an independent cross-check of
/// the autocorrelation error: the error estimate at each doubling block size,
/// which should plateau near the autocorrelation value once blocks exceed the
/// correlation time.
pub fn blocking_error(
    trace: &EnergyTrace,
    equilibration_fraction: f64,
) -> Result<Vec<(usize, f64)>> {
    let total = trace.samples.len();
    let skip = (equilibration_fraction * total as f64).floor() as usize;
    let kept = &trace.samples[skip.min(total)..];
    if kept.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            have: kept.len(),
            need: MIN_SAMPLES,
        });
    }
    let values: Vec<f64> = kept
        .iter()
        .map(|s| s.numerator.re / s.denominator)
        .collect();

    let mut out = Vec::new();
    let mut size = 1usize;
    while values.len() / size >= 4 {
        let block_means: Vec<f64> = values
            .chunks_exact(size)
            .map(|c| c.iter().sum::<f64>() / size as f64)
            .collect();
        let n = block_means.len() as f64;
        let mean = block_means.iter().sum::<f64>() / n;
        let var = block_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        out.push((size, (var / n).sqrt()));
        size *= 2;
    }
    Ok(out)
}
