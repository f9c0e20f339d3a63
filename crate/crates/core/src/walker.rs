//! Walkers and their imaginary-time propagation.
//!
//! One step applies the symmetric splitting: half-step one-body and photon
//! factors, then one Gaussian-sampled one-body propagator per auxiliary field
//! (fermionic factor on the Slater blocks, bosonic factor on the photon vector
//! of the field's mode), then the second half-steps. The weight carries the
//! hybrid importance ratio; the phaseless constraint projects its phase.

use crate::error::{Error, Result};
use crate::estimators::{greens_function, photon_moments};
use crate::hamiltonian::{DseModifiedIntegrals, McHamiltonian};
use crate::math::{exp_symmetric_scaled, symmetric_eigen_sorted, to_complex};
use crate::model::CavitySpec;
use crate::oracle::dense::ladder_sum;
use crate::oracle::restricted_hartree_fock;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

/// Per-component cap on the force-bias magnitude.
pub const FORCE_BIAS_CAP: f64 = 1.0;

/// Walkers whose trial overlap drops below this are flagged dead.
const OVERLAP_FLOOR: f64 = 1e-280;

/// How the walker weights handle the phase of the importance ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Exact projection: the complex ratio multiplies a complex weight.
    Free,
    /// Weight <- weight·|ratio|·max(0, cos Δθ) with Δθ the phase of the
    /// hybrid importance ratio.
    Phaseless,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::Free => write!(f, "free"),
            Constraint::Phaseless => write!(f, "phaseless"),
        }
    }
}

/// Product trial state: one Hartree-Fock determinant block per spin and one
/// real unit Fock vector per cavity mode (default: vacuum).
#[derive(Debug, Clone)]
pub struct TrialState {
    pub orbitals_alpha: DMatrix<f64>,
    pub orbitals_beta: DMatrix<f64>,
    pub photon_amplitudes: Vec<DVector<f64>>,
}

/// Electronic trial from the self-consistent field on the modified integrals,
/// photon trial the requested Fock states (empty list means all vacuum).
pub fn build_trial(
    dse: &DseModifiedIntegrals,
    cavity: &CavitySpec,
    photon_occupation: &[usize],
) -> Result<TrialState> {
    let (_, orbitals) = restricted_hartree_fock(dse, dse.n_alpha, dse.n_beta)?;
    let orbitals_alpha = orbitals.columns(0, dse.n_alpha).into_owned();
    let orbitals_beta = orbitals.columns(0, dse.n_beta).into_owned();
    let mut photon_amplitudes = Vec::with_capacity(cavity.n_modes());
    for (alpha, mode) in cavity.modes.iter().enumerate() {
        let occ = photon_occupation.get(alpha).copied().unwrap_or(0);
        if occ > mode.n_max {
            return Err(Error::InvalidInput(format!(
                "photon occupation {occ} exceeds n_max {} of mode {alpha}",
                mode.n_max
            )));
        }
        let mut amp = DVector::zeros(mode.fock_dim());
        amp[occ] = 1.0;
        photon_amplitudes.push(amp);
    }
    Ok(TrialState {
        orbitals_alpha,
        orbitals_beta,
        photon_amplitudes,
    })
}

/// One member of the stochastic population.
#[derive(Debug, Clone)]
pub struct Walker {
    pub slater_alpha: DMatrix<Complex64>,
    pub slater_beta: DMatrix<Complex64>,
    pub photon_vectors: Vec<DVector<Complex64>>,
    /// Non-negative magnitude of the walker weight.
    pub weight: f64,
    /// Unit-modulus phase of the weight; stays 1 under the phaseless constraint.
    pub phase: Complex64,
    /// Cached ⟨Ψ_T|φ⟩ (electronic determinants times photon overlaps).
    pub overlap: Complex64,
    pub steps_since_orth: u32,
}

impl Walker {
    pub fn from_trial(trial: &TrialState) -> Walker {
        let mut w = Walker {
            slater_alpha: to_complex(&trial.orbitals_alpha),
            slater_beta: to_complex(&trial.orbitals_beta),
            photon_vectors: trial
                .photon_amplitudes
                .iter()
                .map(|a| a.map(|x| Complex64::new(x, 0.0)))
                .collect(),
            weight: 1.0,
            phase: Complex64::ONE,
            overlap: Complex64::ONE,
            steps_since_orth: 0,
        };
        w.overlap = overlap(trial, &w);
        w
    }

    pub fn is_alive(&self) -> bool {
        self.weight > 0.0
    }

    pub fn kill(&mut self) {
        self.weight = 0.0;
    }

    /// weight·phase, the effective complex weight entering estimators.
    pub fn complex_weight(&self) -> Complex64 {
        self.phase * self.weight
    }
}

/// ⟨Ψ_T|φ⟩: product of the per-spin determinant overlaps and per-mode photon
/// overlaps.
pub fn overlap(trial: &TrialState, walker: &Walker) -> Complex64 {
    let mut total = spin_overlap(&trial.orbitals_alpha, &walker.slater_alpha)
        * spin_overlap(&trial.orbitals_beta, &walker.slater_beta);
    for (amp, vec) in trial.photon_amplitudes.iter().zip(&walker.photon_vectors) {
        let mut dot = Complex64::ZERO;
        for (t, v) in amp.iter().zip(vec.iter()) {
            dot += t * v;
        }
        total *= dot;
    }
    total
}

fn spin_overlap(trial: &DMatrix<f64>, slater: &DMatrix<Complex64>) -> Complex64 {
    let n = trial.ncols();
    if n == 0 {
        return Complex64::ONE;
    }
    (to_complex(&trial.transpose()) * slater).determinant()
}

/// Eigen-factorized real symmetric base with a complex prefactor:
/// exp(s·scale·base) = U·diag(exp(s·scale·λ))·Uᵀ for any complex s.
#[derive(Debug, Clone)]
struct EigenFactor {
    basis: DMatrix<Complex64>,
    basis_t: DMatrix<Complex64>,
    eigenvalues: DVector<f64>,
}

impl EigenFactor {
    fn new(base: &DMatrix<f64>) -> Self {
        let (vals, vecs) = symmetric_eigen_sorted(base);
        let basis = to_complex(&vecs);
        let basis_t = basis.transpose();
        EigenFactor {
            basis,
            basis_t,
            eigenvalues: vals,
        }
    }

    fn apply(&self, exponent: Complex64, target: &mut DMatrix<Complex64>) {
        let mut work = &self.basis_t * &*target;
        for (i, &lambda) in self.eigenvalues.iter().enumerate() {
            let factor = (exponent * lambda).exp();
            for j in 0..work.ncols() {
                work[(i, j)] *= factor;
            }
        }
        *target = &self.basis * work;
    }

    fn apply_vec(&self, exponent: Complex64, target: &mut DVector<Complex64>) {
        let mut work = &self.basis_t * &*target;
        for (i, &lambda) in self.eigenvalues.iter().enumerate() {
            work[i] *= (exponent * lambda).exp();
        }
        *target = &self.basis * work;
    }
}

#[derive(Debug, Clone)]
struct FermionFactor {
    eigen: EigenFactor,
    scale: Complex64,
    base: DMatrix<f64>,
}

#[derive(Debug, Clone)]
struct BosonFactor {
    mode: usize,
    scale: Complex64,
}

/// One auxiliary-field operator with its cached exponentiation data.
#[derive(Debug, Clone)]
struct FieldOp {
    fermion: Option<FermionFactor>,
    boson: Option<BosonFactor>,
}

/// All propagation factors for one time step, precomputed once.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub exp_half_t: DMatrix<Complex64>,
    /// Per mode, diag exp(-Δτ/2·ω(n+½)).
    pub photon_half_decay: Vec<DVector<f64>>,
    /// Per mode, the eigen-factorized truncated (a†+a).
    quadrature: Vec<EigenFactor>,
    fields: Vec<FieldOp>,
    pub dtau: f64,
    pub constant_factor: f64,
    pub sqrt_minus_dtau: Complex64,
}

impl Propagator {
    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    /// Reconstruction of the truncated (a†+a) from the cached factorization.
    pub fn quadrature_reconstruction_error(&self, mode: usize) -> f64 {
        let q = &self.quadrature[mode];
        let d = DMatrix::from_diagonal(&q.eigenvalues.map(|x| Complex64::new(x, 0.0)));
        let rec = &q.basis * d * &q.basis_t;
        let n_max = q.eigenvalues.len() - 1;
        crate::math::max_abs_diff_c(&rec, &to_complex(&ladder_sum(n_max)))
    }
}

/// Caches the matrix exponentials, photon decays, boson quadrature
/// factorizations, and the ordered field list (electronic Cholesky fields
/// first, then mixed fields grouped by mode).
pub fn build_propagator(mc: &McHamiltonian, dtau: f64) -> Propagator {
    assert!(dtau > 0.0, "dtau must be positive");
    let exp_half_t = exp_symmetric_scaled(&mc.t_eff, Complex64::new(-0.5 * dtau, 0.0));

    let photon_half_decay: Vec<DVector<f64>> = mc
        .photon_energies
        .iter()
        .map(|energies| energies.map(|e| (-0.5 * dtau * e).exp()))
        .collect();

    let quadrature: Vec<EigenFactor> = mc
        .photon_energies
        .iter()
        .map(|energies| EigenFactor::new(&ladder_sum(energies.len() - 1)))
        .collect();

    let mut fields = Vec::new();
    for l in &mc.electronic_fields.vectors {
        fields.push(FieldOp {
            fermion: Some(FermionFactor {
                eigen: EigenFactor::new(l),
                scale: Complex64::ONE,
                base: l.clone(),
            }),
            boson: None,
        });
    }
    for mixed in &mc.mixed_fields {
        let fermion = if mixed.fermion_scale.norm() * mixed.fermion_base.amax() > 0.0 {
            Some(FermionFactor {
                eigen: EigenFactor::new(&mixed.fermion_base),
                scale: mixed.fermion_scale,
                base: mixed.fermion_base.clone(),
            })
        } else {
            None
        };
        let boson = if mixed.boson_scale.norm() > 0.0 {
            Some(BosonFactor {
                mode: mixed.boson_mode,
                scale: mixed.boson_scale,
            })
        } else {
            None
        };
        fields.push(FieldOp { fermion, boson });
    }

    Propagator {
        exp_half_t,
        photon_half_decay,
        quadrature,
        fields,
        dtau,
        constant_factor: (-dtau * mc.constant).exp(),
        sqrt_minus_dtau: Complex64::new(0.0, dtau.sqrt()),
    }
}

/// The fields sampled in one propagation step.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub draws: Vec<Complex64>,
    pub force_bias: Vec<Complex64>,
    /// Accumulated log of the Gaussian reweighting from the shifted draws.
    pub log_importance: Complex64,
}

impl FieldSample {
    fn empty() -> Self {
        FieldSample {
            draws: Vec::new(),
            force_bias: Vec::new(),
            log_importance: Complex64::ZERO,
        }
    }
}

/// Force bias per field: x̄_γ = √(−Δτ)·⟨𝓛_γ⟩_mixed, clamped to `FORCE_BIAS_CAP`
/// in magnitude. The mixed expectation combines the walker Green's function
/// for the fermionic part with the per-mode photon expectation ⟨a†+a⟩.
pub fn compute_force_bias(
    walker: &Walker,
    trial: &TrialState,
    propagator: &Propagator,
) -> Result<Vec<Complex64>> {
    let green = greens_function(walker, trial)?;
    let g_total = &green.g_alpha + &green.g_beta;

    let mut quad_mixed = Vec::with_capacity(walker.photon_vectors.len());
    for (amp, vec) in trial.photon_amplitudes.iter().zip(&walker.photon_vectors) {
        quad_mixed.push(photon_moments(amp, vec)?.1);
    }

    let mut biases = Vec::with_capacity(propagator.fields.len());
    for field in &propagator.fields {
        let mut expectation = Complex64::ZERO;
        if let Some(f) = &field.fermion {
            let mut contraction = Complex64::ZERO;
            for p in 0..f.base.nrows() {
                for q in 0..f.base.ncols() {
                    contraction += f.base[(p, q)] * g_total[(p, q)];
                }
            }
            expectation += f.scale * contraction;
        }
        if let Some(b) = &field.boson {
            expectation += b.scale * quad_mixed[b.mode];
        }
        let mut bias = propagator.sqrt_minus_dtau * expectation;
        let norm = bias.norm();
        if norm > FORCE_BIAS_CAP {
            bias *= FORCE_BIAS_CAP / norm;
        }
        biases.push(bias);
    }
    Ok(biases)
}

fn apply_half_step(walker: &mut Walker, propagator: &Propagator) {
    if walker.slater_alpha.ncols() > 0 {
        walker.slater_alpha = &propagator.exp_half_t * &walker.slater_alpha;
    }
    if walker.slater_beta.ncols() > 0 {
        walker.slater_beta = &propagator.exp_half_t * &walker.slater_beta;
    }
    for (vec, decay) in walker
        .photon_vectors
        .iter_mut()
        .zip(&propagator.photon_half_decay)
    {
        for (v, d) in vec.iter_mut().zip(decay.iter()) {
            *v *= d;
        }
    }
}

/// One Trotterized, HS-sampled imaginary-time step. On any numerical failure
/// the walker is killed (weight 0) and the error returned.
pub fn propagate_step<R: Rng>(
    walker: &mut Walker,
    propagator: &Propagator,
    trial: &TrialState,
    rng: &mut R,
    constraint: Constraint,
) -> Result<FieldSample> {
    if !walker.is_alive() {
        return Ok(FieldSample::empty());
    }

    let overlap_before = overlap(trial, walker);
    if !overlap_before.is_finite() || overlap_before.norm() < OVERLAP_FLOOR {
        walker.kill();
        return Err(Error::WalkerDead(format!(
            "vanishing trial overlap {:.3e}",
            overlap_before.norm()
        )));
    }

    apply_half_step(walker, propagator);

    let force_bias = match compute_force_bias(walker, trial, propagator) {
        Ok(b) => b,
        Err(e) => {
            walker.kill();
            return Err(e);
        }
    };

    let mut draws = Vec::with_capacity(force_bias.len());
    let mut log_gauss = Complex64::ZERO;
    for (field, &bias) in propagator.fields.iter().zip(&force_bias) {
        let normal: f64 = rng.sample(StandardNormal);
        let x = bias + normal;
        draws.push(x);
        log_gauss += 0.5 * bias * bias - x * bias;

        let s = x * propagator.sqrt_minus_dtau;
        if let Some(f) = &field.fermion {
            let exponent = s * f.scale;
            if walker.slater_alpha.ncols() > 0 {
                f.eigen.apply(exponent, &mut walker.slater_alpha);
            }
            if walker.slater_beta.ncols() > 0 {
                f.eigen.apply(exponent, &mut walker.slater_beta);
            }
        }
        if let Some(b) = &field.boson {
            propagator.quadrature[b.mode]
                .apply_vec(s * b.scale, &mut walker.photon_vectors[b.mode]);
        }
    }

    apply_half_step(walker, propagator);

    let overlap_after = overlap(trial, walker);
    let ratio = overlap_after / overlap_before * log_gauss.exp() * propagator.constant_factor;
    if !ratio.is_finite() || !overlap_after.is_finite() {
        walker.kill();
        return Err(Error::WalkerDead("non-finite importance ratio".into()));
    }

    match constraint {
        Constraint::Free => {
            let norm = ratio.norm();
            walker.weight *= norm;
            if norm > 0.0 {
                walker.phase *= ratio / norm;
            } else {
                walker.kill();
            }
        }
        Constraint::Phaseless => {
            // The phase of the full hybrid ratio: the Gaussian factor cancels
            // the O(x sqrt(dtau) <L>) drift of the bare overlap phase, which
            // would otherwise dominate the projection.
            let delta_theta = ratio.arg();
            walker.weight *= ratio.norm() * delta_theta.cos().max(0.0);
        }
    }
    if !walker.weight.is_finite() {
        walker.kill();
        return Err(Error::WalkerDead("non-finite weight".into()));
    }

    walker.overlap = overlap_after;
    walker.steps_since_orth += 1;
    Ok(FieldSample {
        draws,
        force_bias,
        log_importance: log_gauss,
    })
}

/// Replaces each Slater block with the orthonormal factor of its column
/// decomposition (triangular factor absorbed into the overlap bookkeeping) and
/// renormalizes the photon vectors. The walker's physical state — the
/// projector onto its column span and every mixed estimator — is unchanged.
pub fn reorthogonalize(walker: &mut Walker, trial: &TrialState) -> Result<()> {
    if !walker.is_alive() {
        return Ok(());
    }
    let result = (|| {
        orthonormalize_block(&mut walker.slater_alpha)?;
        orthonormalize_block(&mut walker.slater_beta)?;
        for vec in &mut walker.photon_vectors {
            let norm = vec.norm();
            if norm < 1e-280 {
                return Err(Error::WalkerDead("photon vector collapsed to zero".into()));
            }
            *vec /= Complex64::new(norm, 0.0);
        }
        Ok(())
    })();
    if result.is_err() {
        walker.kill();
        return result;
    }
    walker.overlap = overlap(trial, walker);
    walker.steps_since_orth = 0;
    Ok(())
}

fn orthonormalize_block(block: &mut DMatrix<Complex64>) -> Result<()> {
    if block.ncols() == 0 {
        return Ok(());
    }
    let qr = block.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let norm = d.norm();
        if norm < 1e-280 {
            return Err(Error::WalkerDead(format!(
                "rank-deficient Slater block (|r_{j}{j}| = {norm:.3e})"
            )));
        }
        // positive-real diagonal convention for the implicit triangular factor
        let phase = d / norm;
        for i in 0..q.nrows() {
            q[(i, j)] *= phase;
        }
    }
    *block = q;
    Ok(())
}
