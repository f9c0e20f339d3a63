//! Ground truth on small instances: restricted Hartree-Fock on the modified
//! integrals (trial generator and mean-field baseline) and dense full
//! configuration interaction on the electron ⊗ photon product space.

pub mod dense;

pub use dense::{
    mc_dense_matrix, mc_dense_matrix_naive, mc_field_matrices, pf_dense_matrix, trial_dense_vector,
    DeterminantSpace,
};

use crate::error::{Error, Result};
use crate::hamiltonian::DseModifiedIntegrals;
use crate::math::symmetric_eigen_sorted;
use crate::model::CavitySpec;
use nalgebra::{DMatrix, DVector};

/// Hard cap on the dense product-space dimension.
pub const DEFAULT_DENSE_LIMIT: usize = 20_000;

const SCF_TOL: f64 = 1e-8;
const SCF_MAX_ITER: usize = 200;
const DIIS_HISTORY: usize = 8;

/// The enumerated electron ⊗ photon basis backing a dense diagonalization.
#[derive(Debug, Clone)]
pub struct FciSpace {
    pub determinants: DeterminantSpace,
    pub photon_dims: Vec<usize>,
    pub dense_limit: usize,
}

impl FciSpace {
    pub fn new(dse: &DseModifiedIntegrals, cavity: &CavitySpec) -> Result<Self> {
        Self::with_limit(dse, cavity, DEFAULT_DENSE_LIMIT)
    }

    pub fn with_limit(
        dse: &DseModifiedIntegrals,
        cavity: &CavitySpec,
        dense_limit: usize,
    ) -> Result<Self> {
        let determinants = DeterminantSpace::new(dse.n_orb, dse.n_alpha, dse.n_beta);
        let photon_dims: Vec<usize> = cavity.modes.iter().map(|m| m.fock_dim()).collect();
        let space = FciSpace {
            determinants,
            photon_dims,
            dense_limit,
        };
        let dim = space.dim();
        if dim > dense_limit {
            return Err(Error::DimensionOverLimit {
                dim,
                limit: dense_limit,
            });
        }
        Ok(space)
    }

    pub fn dim(&self) -> usize {
        self.determinants.dim() * self.photon_dims.iter().product::<usize>()
    }
}

/// Closed-shell self-consistent field on the DSE-modified integrals with DIIS
/// acceleration on the commutator residual FD - DF. Returns the total energy
/// (core included) and the full orbital matrix, occupied columns first by
/// ascending orbital energy.
pub fn restricted_hartree_fock(
    dse: &DseModifiedIntegrals,
    n_alpha: usize,
    n_beta: usize,
) -> Result<(f64, DMatrix<f64>)> {
    let m = dse.n_orb;
    if n_alpha + n_beta == 0 {
        return Ok((dse.core_energy, DMatrix::identity(m, m)));
    }
    if n_alpha != n_beta {
        return Err(Error::InvalidInput(format!(
            "restricted SCF needs a closed shell, got n_alpha {n_alpha} != n_beta {n_beta}"
        )));
    }
    let n_occ = n_alpha;

    let orbitals_of = |f: &DMatrix<f64>| symmetric_eigen_sorted(f).1;
    let density_of = |c: &DMatrix<f64>| {
        let occ = c.columns(0, n_occ);
        2.0 * &occ * occ.transpose()
    };

    let mut density = density_of(&orbitals_of(&dse.h_tilde));
    let mut fock_history: Vec<DMatrix<f64>> = Vec::new();
    let mut residual_history: Vec<DMatrix<f64>> = Vec::new();

    for _ in 0..SCF_MAX_ITER {
        let mut fock = dse.h_tilde.clone();
        for p in 0..m {
            for q in 0..m {
                let mut j = 0.0;
                let mut k = 0.0;
                for r in 0..m {
                    for s in 0..m {
                        j += density[(r, s)] * dse.v_tilde.get(p, q, r, s);
                        k += density[(r, s)] * dse.v_tilde.get(p, r, s, q);
                    }
                }
                fock[(p, q)] += j - 0.5 * k;
            }
        }

        let residual = &fock * &density - &density * &fock;
        if residual.amax() <= SCF_TOL {
            let orbitals = orbitals_of(&fock);
            let energy =
                0.5 * (density.component_mul(&(&dse.h_tilde + &fock))).sum() + dse.core_energy;
            return Ok((energy, orbitals));
        }

        fock_history.push(fock);
        residual_history.push(residual);
        if fock_history.len() > DIIS_HISTORY {
            fock_history.remove(0);
            residual_history.remove(0);
        }
        let fock_mixed = diis_extrapolate(&fock_history, &residual_history);
        density = density_of(&orbitals_of(&fock_mixed));
    }
    Err(Error::ScfNonConvergence(SCF_MAX_ITER))
}

/// Pulay mixing: minimize |Σ c_i R_i| subject to Σ c_i = 1. Falls back to the
/// latest Fock matrix while the history is too short or the system is singular.
fn diis_extrapolate(focks: &[DMatrix<f64>], residuals: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = focks.len();
    if n < 2 {
        return focks[n - 1].clone();
    }
    let mut b = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = residuals[i].dot(&residuals[j]);
        }
        b[(i, n)] = -1.0;
        b[(n, i)] = -1.0;
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = -1.0;
    match b.lu().solve(&rhs) {
        Some(coeff) if coeff.iter().all(|c| c.is_finite()) => {
            let mut out = DMatrix::zeros(focks[0].nrows(), focks[0].ncols());
            for (c, f) in coeff.iter().take(n).zip(focks) {
                out += *c * f;
            }
            out
        }
        _ => focks[n - 1].clone(),
    }
}

/// Lowest eigenpair of the coupled Hamiltonian materialized on the full
/// product space. The returned energy includes the core constant and photon
/// zero-point terms.
pub fn fci_ground_state(
    dse: &DseModifiedIntegrals,
    cavity: &CavitySpec,
) -> Result<(f64, DVector<f64>)> {
    let space = FciSpace::new(dse, cavity)?;
    let h = pf_dense_matrix(dse, cavity);
    let (vals, vecs) = symmetric_eigen_sorted(&h);
    let _ = space;
    Ok((vals[0], vecs.column(0).into_owned()))
}

/// E(tau) = <T|H e^{-tau H}|T> / <T|e^{-tau H}|T> through the dense spectrum.
/// Monotonically approaches the ground energy from above.
pub fn exact_imaginary_time_curve(
    dse: &DseModifiedIntegrals,
    cavity: &CavitySpec,
    trial: &crate::walker::TrialState,
    taus: &[f64],
) -> Result<Vec<f64>> {
    FciSpace::new(dse, cavity)?;
    let det = DeterminantSpace::new(dse.n_orb, dse.n_alpha, dse.n_beta);
    let t = trial_dense_vector(
        &det,
        &trial.orbitals_alpha,
        &trial.orbitals_beta,
        &trial.photon_amplitudes,
    )?;
    let h = pf_dense_matrix(dse, cavity);
    let (vals, vecs) = symmetric_eigen_sorted(&h);
    let coeff = vecs.transpose() * &t;

    let ground_overlap = coeff[0].abs();
    if ground_overlap < 1e-12 {
        return Err(Error::OrthogonalTrial(ground_overlap));
    }
    if ground_overlap < 1e-8 {
        eprintln!(
            "warning: trial-ground overlap is only {ground_overlap:.3e}; projection will be slow"
        );
    }

    let e0 = vals[0];
    let curve = taus
        .iter()
        .map(|&tau| {
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..vals.len() {
                let w = coeff[k] * coeff[k] * (-(vals[k] - e0) * tau).exp();
                num += w * vals[k];
                den += w;
            }
            num / den
        })
        .collect();
    Ok(curve)
}
