//! Dense many-body operator materialization on determinant ⊗ Fock spaces.
//!
//! Determinants are bit-encoded spin strings enumerated in lexicographic bit
//! order; the combined electronic index is alpha-major. The full product index
//! is electronic-major, then mode 0, mode 1, ...

use crate::error::{Error, Result};
use crate::hamiltonian::McHamiltonian;
use crate::math::to_complex;
use crate::model::EriTensor;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// All determinants of both spin sectors for M orbitals.
#[derive(Debug, Clone)]
pub struct DeterminantSpace {
    pub n_orb: usize,
    pub alpha_dets: Vec<u64>,
    pub beta_dets: Vec<u64>,
    alpha_index: std::collections::HashMap<u64, usize>,
    beta_index: std::collections::HashMap<u64, usize>,
}

/// Ascending bit patterns with `k` bits set among `m`.
pub fn enumerate_strings(m: usize, k: usize) -> Vec<u64> {
    assert!(m < 64 && k <= m);
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let limit = 1u64 << m;
    let mut v: u64 = (1 << k) - 1;
    while v < limit {
        out.push(v);
        // Gosper's hack: next larger integer with the same popcount.
        let t = v | (v - 1);
        v = (t + 1) | (((!t & t.wrapping_add(1)) - 1) >> (v.trailing_zeros() + 1));
    }
    out
}

impl DeterminantSpace {
    pub fn new(n_orb: usize, n_alpha: usize, n_beta: usize) -> Self {
        let alpha_dets = enumerate_strings(n_orb, n_alpha);
        let beta_dets = enumerate_strings(n_orb, n_beta);
        let alpha_index = alpha_dets
            .iter()
            .enumerate()
            .map(|(i, &d)| (d, i))
            .collect();
        let beta_index = beta_dets.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        DeterminantSpace {
            n_orb,
            alpha_dets,
            beta_dets,
            alpha_index,
            beta_index,
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha_dets.len() * self.beta_dets.len()
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize) -> usize {
        a * self.beta_dets.len() + b
    }

    /// All (p, q, target string, sign) with c†_p c_q |string> = sign |target>.
    /// Includes the diagonal p == q entries for occupied p.
    fn excitations(&self, string: u64) -> Vec<(usize, usize, u64, f64)> {
        let m = self.n_orb;
        let mut out = Vec::new();
        for q in 0..m {
            if string & (1 << q) == 0 {
                continue;
            }
            let sign_q = parity_below(string, q);
            let removed = string & !(1 << q);
            for p in 0..m {
                if removed & (1 << p) != 0 {
                    continue;
                }
                let sign = sign_q * parity_below(removed, p);
                out.push((p, q, removed | (1 << p), sign));
            }
        }
        out
    }

    fn alpha_excitations(&self) -> Vec<Vec<(usize, usize, usize, f64)>> {
        self.alpha_dets
            .iter()
            .map(|&d| {
                self.excitations(d)
                    .into_iter()
                    .map(|(p, q, t, s)| (p, q, self.alpha_index[&t], s))
                    .collect()
            })
            .collect()
    }

    fn beta_excitations(&self) -> Vec<Vec<(usize, usize, usize, f64)>> {
        self.beta_dets
            .iter()
            .map(|&d| {
                self.excitations(d)
                    .into_iter()
                    .map(|(p, q, t, s)| (p, q, self.beta_index[&t], s))
                    .collect()
            })
            .collect()
    }

    /// Spin-summed one-body operator Σ_pq h_pq Ê_pq as a dense matrix.
    pub fn one_body_matrix(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let dim = self.dim();
        let mut out = DMatrix::zeros(dim, dim);
        let a_exc = self.alpha_excitations();
        let b_exc = self.beta_excitations();
        for a in 0..self.alpha_dets.len() {
            for b in 0..self.beta_dets.len() {
                let col = self.index(a, b);
                for &(p, q, a2, s) in &a_exc[a] {
                    out[(self.index(a2, b), col)] += s * h[(p, q)];
                }
                for &(p, q, b2, s) in &b_exc[b] {
                    out[(self.index(a, b2), col)] += s * h[(p, q)];
                }
            }
        }
        out
    }

    /// Two-body operator ½ Σ (ij|kl) Σ_στ c†_iσ c†_kτ c_lτ c_jσ, built by double
    /// application of spin-summed single substitutions:
    /// ½ Σ (ij|kl) Ê_ij Ê_kl − ½ Σ_il [Σ_j (ij|jl)] Ê_il.
    pub fn two_body_matrix(&self, v: &EriTensor) -> DMatrix<f64> {
        let m = self.n_orb;
        let dim = self.dim();
        let n_b = self.beta_dets.len();
        let a_exc = self.alpha_excitations();
        let b_exc = self.beta_excitations();
        let mut out = DMatrix::zeros(dim, dim);

        // Spin-summed substitution lists per combined determinant.
        let mut combined: Vec<Vec<(usize, usize, usize, f64)>> = Vec::with_capacity(dim);
        for a in 0..self.alpha_dets.len() {
            for b in 0..n_b {
                let mut list = Vec::with_capacity(a_exc[a].len() + b_exc[b].len());
                for &(p, q, a2, s) in &a_exc[a] {
                    list.push((p, q, self.index(a2, b), s));
                }
                for &(p, q, b2, s) in &b_exc[b] {
                    list.push((p, q, self.index(a, b2), s));
                }
                combined.push(list);
            }
        }

        for (col, first) in combined.iter().enumerate() {
            for &(k, l, mid, s1) in first {
                for &(i, j, row, s2) in &combined[mid] {
                    out[(row, col)] += 0.5 * s1 * s2 * v.get(i, j, k, l);
                }
            }
        }

        let mut correction = DMatrix::zeros(m, m);
        for i in 0..m {
            for l in 0..m {
                let mut sum = 0.0;
                for j in 0..m {
                    sum += v.get(i, j, j, l);
                }
                correction[(i, l)] = sum;
            }
        }
        out - 0.5 * self.one_body_matrix(&correction)
    }
}

#[inline]
fn parity_below(string: u64, p: usize) -> f64 {
    if (string & ((1u64 << p) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// (a† + a) on a Fock space truncated at n_max.
pub fn ladder_sum(n_max: usize) -> DMatrix<f64> {
    let d = n_max + 1;
    let mut q = DMatrix::zeros(d, d);
    for n in 0..n_max {
        let v = ((n + 1) as f64).sqrt();
        q[(n, n + 1)] = v;
        q[(n + 1, n)] = v;
    }
    q
}

/// Embeds a single-mode operator into the photon product space (mode-0 major).
pub fn embed_mode(op: &DMatrix<f64>, dims: &[usize], mode: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(1, 1);
    for (i, &d) in dims.iter().enumerate() {
        let factor = if i == mode {
            op.clone()
        } else {
            DMatrix::identity(d, d)
        };
        out = out.kronecker(&factor);
    }
    out
}

/// Assembles the coupled Hamiltonian directly from the modified integrals:
/// electronic one- and two-body parts, photon ladders omega(n+½), and the
/// bilinear term sqrt(omega/2)·g ⊗ (a†+a) per mode, plus the scalar core.
pub fn pf_dense_matrix(
    dse: &crate::hamiltonian::DseModifiedIntegrals,
    cavity: &crate::model::CavitySpec,
) -> DMatrix<f64> {
    let det = DeterminantSpace::new(dse.n_orb, dse.n_alpha, dse.n_beta);
    let dims: Vec<usize> = cavity.modes.iter().map(|m| m.fock_dim()).collect();
    let ph_dim: usize = dims.iter().product();
    let d_el = det.dim();
    let dim = d_el * ph_dim;

    let h_el = det.one_body_matrix(&dse.h_tilde) + det.two_body_matrix(&dse.v_tilde);
    let i_ph = DMatrix::identity(ph_dim, ph_dim);
    let i_el = DMatrix::identity(d_el, d_el);

    let mut h = h_el.kronecker(&i_ph);
    for (alpha, mode) in cavity.modes.iter().enumerate() {
        let number = DMatrix::from_fn(mode.fock_dim(), mode.fock_dim(), |i, j| {
            if i == j {
                mode.omega * (i as f64 + 0.5)
            } else {
                0.0
            }
        });
        h += i_el.kronecker(&embed_mode(&number, &dims, alpha));
        let g_many = det.one_body_matrix(&mode.coupling);
        let q = ladder_sum(mode.n_max);
        h += (mode.omega / 2.0).sqrt() * g_many.kronecker(&embed_mode(&q, &dims, alpha));
    }
    for i in 0..dim {
        h[(i, i)] += dse.core_energy;
    }
    h
}

/// Every field operator of the MC Hamiltonian materialized on the product
/// space, in propagation order (electronic Cholesky fields first, then mixed
/// fields grouped by mode).
pub fn mc_field_matrices(
    mc: &McHamiltonian,
    det: &DeterminantSpace,
    dims: &[usize],
) -> Vec<DMatrix<Complex64>> {
    let ph_dim: usize = dims.iter().product();
    let i_ph = to_complex(&DMatrix::identity(ph_dim, ph_dim));
    let i_el = to_complex(&DMatrix::identity(det.dim(), det.dim()));
    let mut out = Vec::new();
    for l in &mc.electronic_fields.vectors {
        out.push(to_complex(&det.one_body_matrix(l)).kronecker(&i_ph));
    }
    for field in &mc.mixed_fields {
        let f_many =
            to_complex(&det.one_body_matrix(&field.fermion_base)).map(|z| z * field.fermion_scale);
        let q = to_complex(&embed_mode(
            &ladder_sum(dims[field.boson_mode] - 1),
            dims,
            field.boson_mode,
        ));
        out.push(f_many.kronecker(&i_ph) + i_el.kronecker(&q.map(|z| z * field.boson_scale)));
    }
    out
}

/// Materializes T̂ + ½ Σ 𝓛̂² + Ĥ_ph + C. The squares use the exact Kronecker
/// block algebra (A⊗I + I⊗B)² = A²⊗I + 2A⊗B + I⊗B², so no full-dimension
/// matrix product is needed.
pub fn mc_dense_matrix(
    mc: &McHamiltonian,
    det: &DeterminantSpace,
    dims: &[usize],
) -> DMatrix<Complex64> {
    let ph_dim: usize = dims.iter().product();
    let d_el = det.dim();
    let dim = d_el * ph_dim;
    let i_ph = DMatrix::identity(ph_dim, ph_dim);
    let i_el = DMatrix::identity(d_el, d_el);

    let mut h = to_complex(&det.one_body_matrix(&mc.t_eff).kronecker(&i_ph));

    for l in &mc.electronic_fields.vectors {
        let l_many = det.one_body_matrix(l);
        h += to_complex(&(0.5 * (&l_many * &l_many)).kronecker(&i_ph));
    }

    for field in &mc.mixed_fields {
        let f_many = det.one_body_matrix(&field.fermion_base);
        let q = embed_mode(
            &ladder_sum(dims[field.boson_mode] - 1),
            dims,
            field.boson_mode,
        );
        let cf = field.fermion_scale;
        let cb = field.boson_scale;
        let ff = to_complex(&(&f_many * &f_many).kronecker(&i_ph)).map(|z| 0.5 * cf * cf * z);
        let cross = to_complex(&f_many.kronecker(&q)).map(|z| cf * cb * z);
        let bb = to_complex(&i_el.kronecker(&(&q * &q))).map(|z| 0.5 * cb * cb * z);
        h += ff + cross + bb;
    }

    for (alpha, energies) in mc.photon_energies.iter().enumerate() {
        let diag = DMatrix::from_diagonal(energies);
        h += to_complex(&i_el.kronecker(&embed_mode(&diag, dims, alpha)));
    }

    for i in 0..dim {
        h[(i, i)] += Complex64::new(mc.constant, 0.0);
    }
    h
}

/// Same operator as [`mc_dense_matrix`] but with every field squared by a
/// straight dense matrix product. Quadratic-cost cross-check for small spaces.
pub fn mc_dense_matrix_naive(
    mc: &McHamiltonian,
    det: &DeterminantSpace,
    dims: &[usize],
) -> DMatrix<Complex64> {
    let ph_dim: usize = dims.iter().product();
    let dim = det.dim() * ph_dim;
    let i_ph = DMatrix::identity(ph_dim, ph_dim);
    let i_el = DMatrix::identity(det.dim(), det.dim());

    let mut h = to_complex(&det.one_body_matrix(&mc.t_eff).kronecker(&i_ph));
    for field in mc_field_matrices(mc, det, dims) {
        h += (&field * &field).map(|z| 0.5 * z);
    }
    for (alpha, energies) in mc.photon_energies.iter().enumerate() {
        let diag = DMatrix::from_diagonal(energies);
        h += to_complex(&i_el.kronecker(&embed_mode(&diag, dims, alpha)));
    }
    for i in 0..dim {
        h[(i, i)] += Complex64::new(mc.constant, 0.0);
    }
    h
}

/// Expands a product trial state (orbital blocks ⊗ photon amplitudes) onto the
/// determinant ⊗ Fock basis.
pub fn trial_dense_vector(
    det: &DeterminantSpace,
    orbitals_alpha: &DMatrix<f64>,
    orbitals_beta: &DMatrix<f64>,
    photon_amplitudes: &[nalgebra::DVector<f64>],
) -> Result<nalgebra::DVector<f64>> {
    let n_alpha = orbitals_alpha.ncols();
    let n_beta = orbitals_beta.ncols();
    let a_amp: Vec<f64> = det
        .alpha_dets
        .iter()
        .map(|&d| string_amplitude(d, orbitals_alpha, n_alpha))
        .collect();
    let b_amp: Vec<f64> = det
        .beta_dets
        .iter()
        .map(|&d| string_amplitude(d, orbitals_beta, n_beta))
        .collect();

    let mut ph = nalgebra::DVector::from_element(1, 1.0);
    for amp in photon_amplitudes {
        ph = ph.kronecker(amp);
    }

    let d_el = det.dim();
    let mut out = nalgebra::DVector::zeros(d_el * ph.len());
    for a in 0..a_amp.len() {
        for b in 0..b_amp.len() {
            let el = a_amp[a] * b_amp[b];
            if el == 0.0 {
                continue;
            }
            let base = det.index(a, b) * ph.len();
            for k in 0..ph.len() {
                out[base + k] = el * ph[k];
            }
        }
    }
    let norm = out.norm();
    if norm == 0.0 {
        return Err(Error::InvalidInput(
            "trial state expands to the zero vector".into(),
        ));
    }
    Ok(out / norm)
}

/// ⟨string|det-expansion⟩ of an orbital block: the minor over occupied rows.
fn string_amplitude(string: u64, orbitals: &DMatrix<f64>, n_occ: usize) -> f64 {
    if n_occ == 0 {
        return 1.0;
    }
    let rows: Vec<usize> = (0..64).filter(|&p| string & (1 << p) != 0).collect();
    let sub = DMatrix::from_fn(n_occ, n_occ, |i, j| orbitals[(rows[i], j)]);
    sub.determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_fixture;

    #[test]
    fn string_enumeration_is_lexicographic() {
        assert_eq!(
            enumerate_strings(4, 2),
            vec![0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]
        );
        assert_eq!(enumerate_strings(3, 0), vec![0]);
        assert_eq!(enumerate_strings(2, 2), vec![0b11]);
    }

    #[test]
    fn one_body_trace_counts_electrons() {
        let det = DeterminantSpace::new(3, 2, 1);
        assert_eq!(det.dim(), 9);
        let id = DMatrix::identity(3, 3);
        let n_op = det.one_body_matrix(&id);
        for i in 0..det.dim() {
            assert!((n_op[(i, i)] - 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn one_body_matrix_is_symmetric_for_symmetric_input() {
        let det = DeterminantSpace::new(3, 1, 2);
        let h = DMatrix::from_row_slice(3, 3, &[0.1, -0.4, 0.2, -0.4, 0.3, 0.0, 0.2, 0.0, -0.7]);
        let m = det.one_body_matrix(&h);
        assert!((m.transpose() - &m).amax() < 1e-14);
    }

    // Half-filled dimer in the site basis: the 4x4 block structure is the
    // textbook matrix with ground energy (U - sqrt(U² + 16t²))/2.
    #[test]
    fn dimer_ground_energy_closed_form() {
        let (set, _) = build_fixture("hubbard_dimer", &[1.0, 4.0]).unwrap();
        let det = DeterminantSpace::new(2, 1, 1);
        let h = det.one_body_matrix(&set.oei) + det.two_body_matrix(&set.eri);
        let (vals, _) = crate::math::symmetric_eigen_sorted(&h);
        let want = (4.0 - (16.0f64 + 16.0).sqrt()) / 2.0;
        assert!(
            (vals[0] - want).abs() < 1e-12,
            "got {} want {}",
            vals[0],
            want
        );
    }

    #[test]
    fn two_body_diagonal_of_single_level() {
        let (set, _) = build_fixture("single_level", &[-1.0, 0.5]).unwrap();
        let det = DeterminantSpace::new(1, 1, 1);
        let h2 = det.two_body_matrix(&set.eri);
        // one doubly occupied orbital: ½·(ii|ii)·<n(n-1)+...> = U for n_up=n_down=1
        assert_eq!(h2.nrows(), 1);
        assert!((h2[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn ladder_sum_squares_to_position_squared() {
        let q = ladder_sum(3);
        // (a†+a)² diagonal on truncated space: 2n+1 except the top level
        let q2 = &q * &q;
        assert!((q2[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((q2[(1, 1)] - 3.0).abs() < 1e-14);
        assert!((q2[(2, 2)] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn embed_mode_places_operator_at_the_right_slot() {
        let op = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let full = embed_mode(&op, &[2, 3], 0);
        assert_eq!(full.nrows(), 6);
        assert_eq!(full[(0, 3)], 1.0); // (n0=0,n1=0) <-> (n0=1,n1=0)
        assert_eq!(full[(0, 1)], 0.0);
    }

    #[test]
    fn trial_vector_of_single_determinant_is_a_basis_state() {
        let det = DeterminantSpace::new(2, 1, 1);
        // occupy orbital 0 for both spins
        let orb = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let v = trial_dense_vector(&det, &orb, &orb, &[]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14);
        assert!(v.iter().skip(1).all(|&x| x.abs() < 1e-14));
    }
}
