//! From ingested integrals to the Monte Carlo Hamiltonian.
//!
//! The dipole self-energy is purely electronic and folds into modified one- and
//! two-electron integrals. The modified two-body tensor is factorized by a
//! pivoted incomplete Cholesky decomposition, and the bilinear electron-photon
//! coupling F̂·B̂ is rewritten as squares of one-body field operators, so the
//! whole Hamiltonian takes the form T̂ + ½ Σ_γ 𝓛̂²_γ + Ĥ_ph + C.

use crate::error::{Error, Result};
use crate::model::{CavitySpec, EriTensor, IntegralSet};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Couplings below this magnitude emit no auxiliary fields.
pub const FIELD_PRUNE_TOL: f64 = 1e-14;

/// Default truncation threshold for the two-body Cholesky factorization.
pub const DEFAULT_CHOLESKY_TOL: f64 = 1e-8;

/// Electronic integrals with the dipole self-energy folded in.
///
/// `h_tilde = oei - ½ Σ_α Q^α` with `Q^α_pq = -Σ_s g^α_ps g^α_sq`, and the
/// two-body tensor gains `g^α_pq g^α_rs` in stored (pq|rs) indexing. Particle
/// counts and the scalar core energy are carried through for downstream use.
#[derive(Debug, Clone)]
pub struct DseModifiedIntegrals {
    pub h_tilde: DMatrix<f64>,
    pub v_tilde: EriTensor,
    pub q_alpha_sum: DMatrix<f64>,
    pub core_energy: f64,
    pub n_orb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
}

/// Folds the dipole self-energy of every cavity mode into the integrals.
/// Couplings must already include the folded nuclear projection.
/// The output depends only on the coupling matrices, not on omega or n_max.
pub fn fold_dse(integrals: &IntegralSet, cavity: &CavitySpec) -> Result<DseModifiedIntegrals> {
    cavity.validate(integrals.n_orb)?;
    let m = integrals.n_orb;

    let mut q_sum = DMatrix::zeros(m, m);
    let mut v_tilde = integrals.eri.clone();
    for mode in &cavity.modes {
        let g = &mode.coupling;
        q_sum -= g * g;
        for p in 0..m {
            for q in p..m {
                for r in 0..m {
                    let s_min = if r == p { q } else { r };
                    for s in s_min..m {
                        // canonical slot of the 8-fold orbit: p<=q, r<=s, (p,q)<=(r,s)
                        if (p, q) > (r, s) {
                            continue;
                        }
                        let add = g[(p, q)] * g[(r, s)];
                        if add != 0.0 {
                            v_tilde.add_symmetric(p, q, r, s, add);
                        }
                    }
                }
            }
        }
    }
    let h_tilde = &integrals.oei - 0.5 * &q_sum;

    Ok(DseModifiedIntegrals {
        h_tilde,
        v_tilde,
        q_alpha_sum: q_sum,
        core_energy: integrals.core_energy,
        n_orb: m,
        n_alpha: integrals.n_alpha,
        n_beta: integrals.n_beta,
    })
}

/// The identity transform, for runs with the dipole self-energy switched off.
pub fn without_dse(integrals: &IntegralSet) -> DseModifiedIntegrals {
    let m = integrals.n_orb;
    DseModifiedIntegrals {
        h_tilde: integrals.oei.clone(),
        v_tilde: integrals.eri.clone(),
        q_alpha_sum: DMatrix::zeros(m, m),
        core_energy: integrals.core_energy,
        n_orb: m,
        n_alpha: integrals.n_alpha,
        n_beta: integrals.n_beta,
    }
}

/// Cholesky factors of the two-body tensor: real symmetric M×M matrices L_γ
/// with (pq|rs) ≈ Σ_γ L_γ[p][q]·L_γ[r][s] to within `tolerance`.
#[derive(Debug, Clone)]
pub struct CholeskyFactors {
    pub vectors: Vec<DMatrix<f64>>,
    pub tolerance: f64,
}

impl CholeskyFactors {
    pub fn count(&self) -> usize {
        self.vectors.len()
    }

    /// max |v[pqrs] - Σ_γ L_γ[pq] L_γ[rs]| over all index tuples.
    pub fn reconstruction_error(&self, v: &EriTensor) -> f64 {
        let m = v.n_orb();
        let mut worst = 0.0f64;
        for p in 0..m {
            for q in 0..m {
                for r in 0..m {
                    for s in 0..m {
                        let rec: f64 = self.vectors.iter().map(|l| l[(p, q)] * l[(r, s)]).sum();
                        worst = worst.max((v.get(p, q, r, s) - rec).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Pivoted incomplete Cholesky of the two-body tensor viewed as the M²×M²
/// matrix A[(pq),(rs)]. Terminates when the largest remaining diagonal
/// residual drops to `tolerance`; a residual below -10·tolerance means the
/// tensor is not positive semi-definite.
pub fn cholesky_decompose(v: &EriTensor, tolerance: f64) -> Result<CholeskyFactors> {
    assert!(tolerance > 0.0, "tolerance must be positive");
    let m = v.n_orb();
    let n = m * m;

    let mut diag: Vec<f64> = (0..n).map(|i| v.get(i / m, i % m, i / m, i % m)).collect();
    let mut factors: Vec<Vec<f64>> = Vec::new();

    loop {
        let (pivot, &d_max) = diag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .expect("non-empty diagonal");
        if let Some((bad, &d_min)) = diag
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .filter(|&(_, &d)| d < -10.0 * tolerance)
        {
            return Err(Error::NotPositiveSemiDefinite {
                pivot: bad,
                value: d_min,
            });
        }
        if d_max <= tolerance {
            break;
        }

        let (pp, pq) = (pivot / m, pivot % m);
        let norm = d_max.sqrt();
        let mut column: Vec<f64> = (0..n).map(|i| v.get(i / m, i % m, pp, pq)).collect();
        for prev in &factors {
            let head = prev[pivot];
            for (c, l) in column.iter_mut().zip(prev.iter()) {
                *c -= head * l;
            }
        }
        for c in column.iter_mut() {
            *c /= norm;
        }
        for (d, c) in diag.iter_mut().zip(column.iter()) {
            *d -= c * c;
        }
        factors.push(column);
    }

    let vectors = factors
        .into_iter()
        .map(|col| DMatrix::from_fn(m, m, |p, q| col[p * m + q]))
        .collect();
    Ok(CholeskyFactors { vectors, tolerance })
}

/// Which operator-square identity decouples the bilinear coupling F̂·B̂.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecouplingScheme {
    /// F̂B̂ = [(F̂+B̂)² − (F̂−B̂)²]/4, two auxiliary fields per mode.
    TwoField,
    /// F̂B̂ = [(F̂+B̂)² − F̂² − B̂²]/2, three auxiliary fields per mode.
    ThreeField,
}

impl std::fmt::Display for DecouplingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecouplingScheme::TwoField => write!(f, "two_field"),
            DecouplingScheme::ThreeField => write!(f, "three_field"),
        }
    }
}

/// One mixed fermion-boson field operator
/// 𝓛 = fermion_scale·(Σ_pq g_pq c†_p c_q) + boson_scale·(a†_α + a_α).
///
/// `fermion_base` is the real symmetric coupling matrix; `fermion_part`
/// (= fermion_scale·fermion_base) is kept as the materialized complex matrix.
#[derive(Debug, Clone)]
pub struct MixedFieldDescriptor {
    pub fermion_part: DMatrix<Complex64>,
    pub fermion_base: DMatrix<f64>,
    pub fermion_scale: Complex64,
    pub boson_mode: usize,
    pub boson_scale: Complex64,
    pub source_scheme: DecouplingScheme,
    pub field_sign: i8,
}

/// The Hamiltonian in Monte Carlo form: T̂ + ½ Σ 𝓛̂²_γ + Ĥ_ph + C, with the
/// field list split into purely electronic Cholesky operators and mixed
/// fermion-boson operators.
#[derive(Debug, Clone)]
pub struct McHamiltonian {
    pub t_eff: DMatrix<f64>,
    pub electronic_fields: CholeskyFactors,
    pub mixed_fields: Vec<MixedFieldDescriptor>,
    /// Per mode, the diagonal photon energies omega·(n + ½) for n = 0..n_max.
    pub photon_energies: Vec<DVector<f64>>,
    pub constant: f64,
    pub n_orb: usize,
}

/// Rewrites the Hamiltonian in MC form for the chosen decoupling scheme.
///
/// The one-body part absorbs the reordering correction of the Cholesky
/// squares: T_pq = h̃_pq − ½ Σ_{γ,r} L_γ[p][r]·L_γ[q][r]. Each electronic
/// field is then mean-field shifted, L → L − (tr L/M)·I, with the exact
/// fixed-particle-number compensation N Σ s_γ L'_γ going into t_eff and
/// ½ N² Σ s_γ² into the constant; sampling the shifted operators removes the
/// static drift the weights would otherwise have to undo every step. Modes
/// with negligible coupling emit no mixed fields.
pub fn assemble_mc_hamiltonian(
    dse: &DseModifiedIntegrals,
    chol: &CholeskyFactors,
    cavity: &CavitySpec,
    scheme: DecouplingScheme,
) -> Result<McHamiltonian> {
    cavity.validate(dse.n_orb)?;
    let m = dse.n_orb;

    let mut t_eff = dse.h_tilde.clone();
    for l in &chol.vectors {
        t_eff -= 0.5 * l * l.transpose();
    }

    let n_elec = (dse.n_alpha + dse.n_beta) as f64;
    let mut electronic = chol.clone();
    let mut constant = dse.core_energy;
    for l in &mut electronic.vectors {
        let shift = l.trace() / m as f64;
        if shift == 0.0 {
            continue;
        }
        for p in 0..m {
            l[(p, p)] -= shift;
        }
        t_eff += (n_elec * shift) * &*l;
        constant += 0.5 * (n_elec * shift).powi(2);
    }

    let one = Complex64::new(1.0, 0.0);
    let im = Complex64::new(0.0, 1.0);
    let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);

    let mut mixed_fields = Vec::new();
    for (alpha, mode) in cavity.modes.iter().enumerate() {
        if mode.coupling.amax() < FIELD_PRUNE_TOL {
            continue;
        }
        let b_scale = Complex64::new((mode.omega / 2.0).sqrt(), 0.0);
        let combos: Vec<(Complex64, Complex64, i8)> = match scheme {
            // (F̂ ± B̂)/√2, the minus combination carrying the factor i so both
            // enter the Hamiltonian as +½𝓛².
            DecouplingScheme::TwoField => vec![
                (inv_sqrt2, inv_sqrt2 * b_scale, 1),
                (im * inv_sqrt2, -im * inv_sqrt2 * b_scale, -1),
            ],
            // F̂+B̂ plus the compensating squares iF̂ and iB̂.
            DecouplingScheme::ThreeField => vec![
                (one, b_scale, 1),
                (im, Complex64::ZERO, -1),
                (Complex64::ZERO, im * b_scale, -1),
            ],
        };
        for (f_scale, boson_scale, sign) in combos {
            let fermion_negligible = f_scale.norm() * mode.coupling.amax() < FIELD_PRUNE_TOL;
            if fermion_negligible && boson_scale.norm() < FIELD_PRUNE_TOL {
                continue;
            }
            mixed_fields.push(MixedFieldDescriptor {
                fermion_part: mode.coupling.map(|x| f_scale * x),
                fermion_base: mode.coupling.clone(),
                fermion_scale: f_scale,
                boson_mode: alpha,
                boson_scale,
                source_scheme: scheme,
                field_sign: sign,
            });
        }
    }

    let photon_energies = cavity
        .modes
        .iter()
        .map(|mode| DVector::from_fn(mode.fock_dim(), |n, _| mode.omega * (n as f64 + 0.5)))
        .collect();

    Ok(McHamiltonian {
        t_eff,
        electronic_fields: electronic,
        mixed_fields,
        photon_energies,
        constant,
        n_orb: m,
    })
}
