//! Shared setup for the criterion benchmarks.

use nalgebra::DMatrix;
use pfqmc::hamiltonian::{
    assemble_mc_hamiltonian, cholesky_decompose, fold_dse, CholeskyFactors, DecouplingScheme,
    DseModifiedIntegrals, McHamiltonian,
};
use pfqmc::model::{build_fixture, CavitySpec, EriTensor, IntegralSet, ModeSpec};
use pfqmc::walker::{build_propagator, build_trial, Propagator, TrialState, Walker};

/// Coupled Hubbard dimer: the smallest end-to-end system.
pub struct DimerSetup {
    pub dse: DseModifiedIntegrals,
    pub chol: CholeskyFactors,
    pub cavity: CavitySpec,
    pub mc: McHamiltonian,
    pub trial: TrialState,
    pub propagator: Propagator,
}

pub fn coupled_dimer(dtau: f64) -> DimerSetup {
    let (set, _) = build_fixture("hubbard_dimer", &[1.0, 4.0]).unwrap();
    let cavity = CavitySpec {
        modes: vec![ModeSpec {
            omega: 1.0,
            coupling: DMatrix::from_diagonal_element(2, 2, 0.1),
            nuclear_projection: 0.0,
            n_max: 5,
        }],
    };
    let dse = fold_dse(&set, &cavity).unwrap();
    let chol = cholesky_decompose(&dse.v_tilde, 1e-8).unwrap();
    let mc = assemble_mc_hamiltonian(&dse, &chol, &cavity, DecouplingScheme::TwoField).unwrap();
    let trial = build_trial(&dse, &cavity, &[]).unwrap();
    let propagator = build_propagator(&mc, dtau);
    DimerSetup {
        dse,
        chol,
        cavity,
        mc,
        trial,
        propagator,
    }
}

pub fn walker_population(trial: &TrialState, n: usize) -> Vec<Walker> {
    (0..n).map(|_| Walker::from_trial(trial)).collect()
}

/// A synthetic positive-semidefinite two-body tensor of rank `rank`.
pub fn synthetic_psd_tensor(n_orb: usize, rank: usize) -> EriTensor {
    let mats: Vec<DMatrix<f64>> = (0..rank)
        .map(|k| {
            let raw = DMatrix::from_fn(n_orb, n_orb, |i, j| {
                (((i * 31 + j * 17 + k * 7) % 23) as f64 / 23.0 - 0.5) * 0.8
            });
            (&raw + raw.transpose()) * 0.5
        })
        .collect();
    let mut v = EriTensor::zeros(n_orb);
    for p in 0..n_orb {
        for q in 0..n_orb {
            for r in 0..n_orb {
                for s in 0..n_orb {
                    let val: f64 = mats.iter().map(|a| a[(p, q)] * a[(r, s)]).sum();
                    v.set_symmetric(p, q, r, s, val);
                }
            }
        }
    }
    v
}

/// Four-site chain with on-site repulsion, for oracle-scale benches.
pub fn chain4() -> IntegralSet {
    let m = 4;
    let mut oei = DMatrix::zeros(m, m);
    for i in 0..m - 1 {
        oei[(i, i + 1)] = -1.0;
        oei[(i + 1, i)] = -1.0;
    }
    let mut eri = EriTensor::zeros(m);
    for i in 0..m {
        eri.set_symmetric(i, i, i, i, 4.0);
    }
    IntegralSet {
        n_orb: m,
        n_alpha: 2,
        n_beta: 2,
        core_energy: 0.0,
        oei,
        eri,
        basis_is_orthonormal: true,
    }
}
