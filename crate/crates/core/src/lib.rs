//! Auxiliary-field quantum Monte Carlo for cavity-coupled electrons.
//!
//! The library factorizes an electron-photon Hamiltonian (electronic integrals
//! plus quantized cavity modes with bilinear dipole coupling and dipole
//! self-energy) into a Monte Carlo form whose two-body content is a sum of
//! squared one-body operators, then projects the polaritonic ground state by
//! stochastic imaginary-time evolution over walkers. A dense
//! exact-diagonalization oracle validates every stage on small systems.
//!
//! Modules:
//! * [`model`] — integral/cavity ingestion and built-in fixtures
//! * [`hamiltonian`] — DSE folding, pivoted Cholesky, bilinear decoupling
//! * [`walker`] — trial states, propagators, the Trotterized HS step
//! * [`estimators`] — mixed energy, population control, error analysis
//! * [`oracle`] — restricted Hartree-Fock and dense FCI ground truth
//! * [`driver`] — end-to-end runs with trace/summary output

pub mod driver;
pub mod error;
pub mod estimators;
pub mod hamiltonian;
pub mod math;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod walker;

pub use error::{Error, Result};
pub use estimators::{
    autocorrelation_error, greens_function, local_energy, stochastic_reconfiguration,
};
pub use estimators::{AutocorrEstimate, EnergyBreakdown, EnergyTrace, GreensFunction};
pub use hamiltonian::{
    assemble_mc_hamiltonian, cholesky_decompose, fold_dse, CholeskyFactors, DecouplingScheme,
    DseModifiedIntegrals, McHamiltonian, MixedFieldDescriptor,
};
pub use model::{
    build_fixture, parse_cavity, parse_fcidump, CavitySpec, EriTensor, IntegralSet, ModeSpec,
};
pub use oracle::{exact_imaginary_time_curve, fci_ground_state, restricted_hartree_fock, FciSpace};
pub use walker::{
    build_propagator, build_trial, compute_force_bias, propagate_step, reorthogonalize, Constraint,
    FieldSample, Propagator, TrialState, Walker,
};
