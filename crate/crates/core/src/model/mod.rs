//! System ingestion: electronic integrals, cavity specifications, built-in fixtures.

mod cavity;
mod fcidump;
mod fixtures;

pub use cavity::{parse_cavity, serialize_cavity};
pub use fcidump::{parse_fcidump, serialize_fcidump};
pub use fixtures::build_fixture;

use crate::error::{Error, Result};
use nalgebra::DMatrix;

const SYM_TOL: f64 = 1e-12;

/// Two-electron repulsion integrals in chemists' (pq|rs) indexing, stored dense
/// with the full 8-fold permutational symmetry (pq<->qp, rs<->sr, pq<->rs).
#[derive(Debug, Clone, PartialEq)]
pub struct EriTensor {
    n_orb: usize,
    data: Vec<f64>,
}

impl EriTensor {
    pub fn zeros(n_orb: usize) -> Self {
        EriTensor {
            n_orb,
            data: vec![0.0; n_orb.pow(4)],
        }
    }

    pub fn n_orb(&self) -> usize {
        self.n_orb
    }

    #[inline]
    fn idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.n_orb + q) * self.n_orb + r) * self.n_orb + s
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.data[self.idx(p, q, r, s)]
    }

    /// Writes one value into all 8 symmetry-equivalent slots.
    pub fn set_symmetric(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            let i = self.idx(a, b, c, d);
            self.data[i] = value;
        }
    }

    /// Adds a value into all distinct symmetry-equivalent slots.
    pub fn add_symmetric(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        let mut slots = [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ]
        .to_vec();
        slots.sort_unstable();
        slots.dedup();
        for (a, b, c, d) in slots {
            let i = self.idx(a, b, c, d);
            self.data[i] += value;
        }
    }

    pub fn max_symmetry_violation(&self) -> f64 {
        let m = self.n_orb;
        let mut worst = 0.0f64;
        for p in 0..m {
            for q in 0..m {
                for r in 0..m {
                    for s in 0..m {
                        let v = self.get(p, q, r, s);
                        for w in [
                            self.get(q, p, r, s),
                            self.get(p, q, s, r),
                            self.get(r, s, p, q),
                        ] {
                            worst = worst.max((v - w).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
    }
}

/// One- and two-electron integrals plus particle counts for one system.
#[derive(Debug, Clone)]
pub struct IntegralSet {
    pub n_orb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub core_energy: f64,
    pub oei: DMatrix<f64>,
    pub eri: EriTensor,
    pub basis_is_orthonormal: bool,
}

impl IntegralSet {
    pub fn n_elec(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    /// Checks the stored-tensor invariants (symmetries, occupation bounds).
    /// Zero electrons are tolerated; parsers enforce n_elec >= 1 themselves.
    pub fn validate(&self) -> Result<()> {
        if self.oei.nrows() != self.n_orb || self.oei.ncols() != self.n_orb {
            return Err(Error::DimensionMismatch(format!(
                "oei is {}x{}, expected {0}x{0} with n_orb {}",
                self.oei.nrows(),
                self.oei.ncols(),
                self.n_orb
            )));
        }
        if self.eri.n_orb() != self.n_orb {
            return Err(Error::DimensionMismatch(
                "eri n_orb differs from oei".into(),
            ));
        }
        let asym = (self.oei.transpose() - &self.oei).amax();
        if asym > SYM_TOL {
            return Err(Error::InvalidInput(format!(
                "oei not symmetric: max violation {asym:.3e}"
            )));
        }
        let vsym = self.eri.max_symmetry_violation();
        if vsym > SYM_TOL {
            return Err(Error::InvalidInput(format!(
                "eri violates 8-fold symmetry: {vsym:.3e}"
            )));
        }
        if self.n_alpha > self.n_orb || self.n_beta > self.n_orb {
            return Err(Error::InvalidInput(format!(
                "cannot place {} alpha / {} beta electrons in {} orbitals",
                self.n_alpha, self.n_beta, self.n_orb
            )));
        }
        Ok(())
    }
}

/// One cavity mode: frequency, projected-dipole coupling matrix g_pq (all
/// prefactors folded in), the nuclear-dipole projection scalar, and the Fock
/// truncation n_max (highest photon number state retained).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub omega: f64,
    pub coupling: DMatrix<f64>,
    pub nuclear_projection: f64,
    pub n_max: usize,
}

impl ModeSpec {
    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "mode frequency must be positive, got {}",
                self.omega
            )));
        }
        let asym = (self.coupling.transpose() - &self.coupling).amax();
        if asym > SYM_TOL {
            return Err(Error::InvalidInput(format!(
                "coupling not symmetric: max violation {asym:.3e}"
            )));
        }
        Ok(())
    }
}

/// Ordered list of cavity modes paired with one IntegralSet.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CavitySpec {
    pub modes: Vec<ModeSpec>,
}

impl CavitySpec {
    pub fn empty() -> Self {
        CavitySpec { modes: Vec::new() }
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn validate(&self, n_orb: usize) -> Result<()> {
        for (i, mode) in self.modes.iter().enumerate() {
            mode.validate()?;
            if mode.coupling.nrows() != n_orb {
                return Err(Error::DimensionMismatch(format!(
                    "mode {} coupling is {}x{} but the integral set has {} orbitals",
                    i,
                    mode.coupling.nrows(),
                    mode.coupling.ncols(),
                    n_orb
                )));
            }
        }
        Ok(())
    }

    /// Folds each mode's nuclear-dipole projection scalar d into the coupling
    /// matrix as g_pq += (d / N_e) delta_pq, exact in the fixed-particle-number
    /// sector, and zeroes the scalar. Must run before any downstream use.
    pub fn fold_nuclear(&self, n_elec: usize) -> Result<CavitySpec> {
        let mut out = self.clone();
        for mode in &mut out.modes {
            if mode.nuclear_projection == 0.0 {
                continue;
            }
            if n_elec == 0 {
                return Err(Error::InvalidInput(
                    "nonzero nuclear projection with zero electrons cannot be folded".into(),
                ));
            }
            let shift = mode.nuclear_projection / n_elec as f64;
            for p in 0..mode.coupling.nrows() {
                mode.coupling[(p, p)] += shift;
            }
            mode.nuclear_projection = 0.0;
        }
        Ok(out)
    }

    /// Total photon Hilbert dimension, prod_alpha (n_max + 1).
    pub fn photon_dim(&self) -> usize {
        self.modes.iter().map(|m| m.fock_dim()).product()
    }
}
