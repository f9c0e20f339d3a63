//! Built-in analytic model systems, addressable by name from the CLI.

use super::{CavitySpec, EriTensor, IntegralSet, ModeSpec};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Default Fock truncation for fixture cavities (five photon number states).
pub const DEFAULT_N_MAX: usize = 4;

/// Constructs a named fixture.
///
/// * `hubbard_dimer(t, U)` — two sites at half filling, hopping −t, on-site U.
/// * `single_level(h, u)` — one orbital, two electrons.
/// * `photon_only(omega)` — empty electronic problem plus one uncoupled mode
///   (zero electrons; oracle/boson tests only).
///
/// Electronic fixtures return an empty cavity; the caller attaches modes.
pub fn build_fixture(name: &str, params: &[f64]) -> Result<(IntegralSet, CavitySpec)> {
    match name {
        "hubbard_dimer" => {
            let [t, u] = expect_params::<2>(name, params)?;
            if t <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "hubbard_dimer needs t > 0, got {t}"
                )));
            }
            let oei = DMatrix::from_row_slice(2, 2, &[0.0, -t, -t, 0.0]);
            let mut eri = EriTensor::zeros(2);
            eri.set_symmetric(0, 0, 0, 0, u);
            eri.set_symmetric(1, 1, 1, 1, u);
            let set = IntegralSet {
                n_orb: 2,
                n_alpha: 1,
                n_beta: 1,
                core_energy: 0.0,
                oei,
                eri,
                basis_is_orthonormal: true,
            };
            Ok((set, CavitySpec::empty()))
        }
        "single_level" => {
            let [h, u] = expect_params::<2>(name, params)?;
            let mut eri = EriTensor::zeros(1);
            eri.set_symmetric(0, 0, 0, 0, u);
            let set = IntegralSet {
                n_orb: 1,
                n_alpha: 1,
                n_beta: 1,
                core_energy: 0.0,
                oei: DMatrix::from_element(1, 1, h),
                eri,
                basis_is_orthonormal: true,
            };
            Ok((set, CavitySpec::empty()))
        }
        "photon_only" => {
            let [omega] = expect_params::<1>(name, params)?;
            if omega <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "photon_only needs omega > 0, got {omega}"
                )));
            }
            let set = IntegralSet {
                n_orb: 1,
                n_alpha: 0,
                n_beta: 0,
                core_energy: 0.0,
                oei: DMatrix::zeros(1, 1),
                eri: EriTensor::zeros(1),
                basis_is_orthonormal: true,
            };
            let cavity = CavitySpec {
                modes: vec![ModeSpec {
                    omega,
                    coupling: DMatrix::zeros(1, 1),
                    nuclear_projection: 0.0,
                    n_max: DEFAULT_N_MAX,
                }],
            };
            Ok((set, cavity))
        }
        other => Err(Error::InvalidInput(format!(
            "unknown fixture name {other:?}"
        ))),
    }
}

fn expect_params<const N: usize>(name: &str, params: &[f64]) -> Result<[f64; N]> {
    params.try_into().map_err(|_| {
        Error::InvalidInput(format!(
            "fixture {name} takes {N} parameter(s), got {}",
            params.len()
        ))
    })
}
