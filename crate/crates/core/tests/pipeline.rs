//! Cross-module checks: dense operator identities, kernel-level propagator
//! accuracy, exact-state estimators, and stationarity of converged runs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use pfqmc::driver::{run, CavitySource, InlineMode, RunConfig, SystemSource};
use pfqmc::estimators::local_energy;
use pfqmc::hamiltonian::{
    assemble_mc_hamiltonian, cholesky_decompose, fold_dse, without_dse, DecouplingScheme,
    DseModifiedIntegrals,
};
use pfqmc::math::{exp_symmetric_scaled, max_abs_c, symmetric_eigen_sorted, to_complex};
use pfqmc::model::{build_fixture, CavitySpec, EriTensor, IntegralSet, ModeSpec};
use pfqmc::oracle::dense::{embed_mode, mc_dense_matrix, mc_dense_matrix_naive, mc_field_matrices};
use pfqmc::oracle::{fci_ground_state, pf_dense_matrix, DeterminantSpace};
use pfqmc::rng::substream;
use pfqmc::walker::{build_propagator, build_trial, propagate_step, Constraint, Walker};

fn diag_mode(m: usize, omega: f64, g: f64, n_max: usize) -> ModeSpec {
    ModeSpec {
        omega,
        coupling: DMatrix::from_diagonal_element(m, m, g),
        nuclear_projection: 0.0,
        n_max,
    }
}

/// Four-site Hubbard chain with general symmetric couplings; the largest
/// dense test system.
fn hubbard_chain4() -> IntegralSet {
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
        core_energy: 0.1,
        oei,
        eri,
        basis_is_orthonormal: true,
    }
}

fn chain4_cavity() -> CavitySpec {
    let g0 = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.12 } else { 0.02 });
    let g1 = DMatrix::from_fn(4, 4, |i, j| {
        0.015 * ((i + 2 * j) as f64).cos() + if i == j { 0.05 } else { 0.0 }
    });
    let g1 = (&g1 + g1.transpose()) * 0.5;
    CavitySpec {
        modes: vec![
            ModeSpec {
                omega: 1.0,
                coupling: g0,
                nuclear_projection: 0.0,
                n_max: 7,
            },
            ModeSpec {
                omega: 1.8,
                coupling: g1,
                nuclear_projection: 0.0,
                n_max: 7,
            },
        ],
    }
}

struct IdentityCase {
    label: &'static str,
    dse: DseModifiedIntegrals,
    cavity: CavitySpec,
}

fn identity_cases() -> Vec<IdentityCase> {
    let mut cases = Vec::new();

    let (set, _) = build_fixture("single_level", &[-1.0, 0.5]).unwrap();
    let cavity = CavitySpec {
        modes: vec![diag_mode(1, 1.0, 0.1, 4)],
    };
    cases.push(IdentityCase {
        label: "single_level x Fock(4)",
        dse: fold_dse(&set, &cavity).unwrap(),
        cavity,
    });

    let (set, _) = build_fixture("hubbard_dimer", &[1.0, 4.0]).unwrap();
    let cavity = CavitySpec {
        modes: vec![diag_mode(2, 1.0, 0.1, 5)],
    };
    cases.push(IdentityCase {
        label: "dimer x Fock(5)",
        dse: fold_dse(&set, &cavity).unwrap(),
        cavity,
    });

    let (set, _) = build_fixture("hubbard_dimer", &[1.0, 4.0]).unwrap();
    let off_diag = ModeSpec {
        omega: 0.7,
        coupling: DMatrix::from_row_slice(2, 2, &[0.08, -0.03, -0.03, 0.11]),
        nuclear_projection: 0.0,
        n_max: 5,
    };
    let cavity = CavitySpec {
        modes: vec![off_diag, diag_mode(2, 1.6, 0.06, 3)],
    };
    cases.push(IdentityCase {
        label: "dimer x 2 modes",
        dse: fold_dse(&set, &cavity).unwrap(),
        cavity,
    });

    let set = hubbard_chain4();
    let cavity = chain4_cavity();
    cases.push(IdentityCase {
        label: "chain4 x 2 modes (dim 2304)",
        dse: fold_dse(&set, &cavity).unwrap(),
        cavity,
    });

    cases
}

#[test]
fn mc_form_equals_physical_hamiltonian_densely() {
    for case in identity_cases() {
        let det = DeterminantSpace::new(case.dse.n_orb, case.dse.n_alpha, case.dse.n_beta);
        let dims: Vec<usize> = case.cavity.modes.iter().map(|m| m.fock_dim()).collect();
        let pf = to_complex(&pf_dense_matrix(&case.dse, &case.cavity));
        let chol = cholesky_decompose(&case.dse.v_tilde, 1e-12).unwrap();
        let mut dense = Vec::new();
        for scheme in [DecouplingScheme::TwoField, DecouplingScheme::ThreeField] {
            let mc = assemble_mc_hamiltonian(&case.dse, &chol, &case.cavity, scheme).unwrap();
            let h_mc = mc_dense_matrix(&mc, &det, &dims);
            let dev = max_abs_c(&(&h_mc - &pf));
            assert!(
                dev <= 1e-9,
                "{} / {scheme}: MC vs physical deviation {dev:.3e}",
                case.label
            );
            dense.push(h_mc);
        }
        let scheme_gap = max_abs_c(&(&dense[0] - &dense[1]));
        assert!(
            scheme_gap <= 1e-9,
            "{}: scheme assemblies differ by {scheme_gap:.3e}",
            case.label
        );
    }
}

#[test]
fn structured_and_naive_squares_agree() {
    for case in identity_cases() {
        let det = DeterminantSpace::new(case.dse.n_orb, case.dse.n_alpha, case.dse.n_beta);
        let dims: Vec<usize> = case.cavity.modes.iter().map(|m| m.fock_dim()).collect();
        if det.dim() * dims.iter().product::<usize>() > 128 {
            continue;
        }
        let chol = cholesky_decompose(&case.dse.v_tilde, 1e-12).unwrap();
        for scheme in [DecouplingScheme::TwoField, DecouplingScheme::ThreeField] {
            let mc = assemble_mc_hamiltonian(&case.dse, &chol, &case.cavity, scheme).unwrap();
            let a = mc_dense_matrix(&mc, &det, &dims);
            let b = mc_dense_matrix_naive(&mc, &det, &dims);
            assert!(max_abs_c(&(&a - &b)) < 1e-10, "{} / {scheme}", case.label);
        }
    }
}

#[test]
fn fci_of_mc_form_matches_fci_of_physical_form() {
    let (set, _) = build_fixture("hubbard_dimer", &[1.0, 4.0]).unwrap();
    let cavity = CavitySpec {
        modes: vec![diag_mode(2, 1.0, 0.1, 5)],
    };
    let dse = fold_dse(&set, &cavity).unwrap();
    let (e_pf, _) = fci_ground_state(&dse, &cavity).unwrap();

    let det = DeterminantSpace::new(2, 1, 1);
    let dims = [6usize];
    let chol = cholesky_decompose(&dse.v_tilde, 1e-12).unwrap();
    let mc = assemble_mc_hamiltonian(&dse, &chol, &cavity, DecouplingScheme::TwoField).unwrap();
    let h_mc = mc_dense_matrix(&mc, &det, &dims);
    // the MC form materializes real symmetric once the squares recombine
    let max_imag = h_mc.iter().map(|z| z.im.abs()).fold(0.0f64, f64::max);
    assert!(max_imag < 1e-10, "imaginary residue {max_imag:.3e}");
    let h_re = h_mc.map(|z| z.re);
    let (vals, _) = symmetric_eigen_sorted(&h_re);
    assert!(
        (vals[0] - e_pf).abs() <= 1e-9,
        "MC FCI {} vs physical FCI {}",
        vals[0],
        e_pf
    );
}

/// Symmetric one-step kernel with the auxiliary fields integrated out
/// analytically (each field contributes exactly exp(-dtau 𝓛²/2)).
fn dense_one_step_kernel(
    dse: &DseModifiedIntegrals,
    cavity: &CavitySpec,
    scheme: DecouplingScheme,
    dtau: f64,
) -> DMatrix<Complex64> {
    let det = DeterminantSpace::new(dse.n_orb, dse.n_alpha, dse.n_beta);
    let dims: Vec<usize> = cavity.modes.iter().map(|m| m.fock_dim()).collect();
    let ph_dim: usize = dims.iter().product();
    let chol = cholesky_decompose(&dse.v_tilde, 1e-12).unwrap();
    let mc = assemble_mc_hamiltonian(dse, &chol, cavity, scheme).unwrap();

    let t_many = det.one_body_matrix(&mc.t_eff);
    let i_ph = DMatrix::identity(ph_dim, ph_dim);
    let i_el = DMatrix::identity(det.dim(), det.dim());
    let mut h_ph = DMatrix::zeros(ph_dim, ph_dim);
    for (alpha, energies) in mc.photon_energies.iter().enumerate() {
        h_ph += embed_mode(&DMatrix::from_diagonal(energies), &dims, alpha);
    }
    let half_t = exp_symmetric_scaled(&t_many.kronecker(&i_ph), Complex64::new(-0.5 * dtau, 0.0));
    let half_ph = exp_symmetric_scaled(&i_el.kronecker(&h_ph), Complex64::new(-0.5 * dtau, 0.0));

    let mut kernel = &half_t * &half_ph;
    for field in mc_field_matrices(&mc, &det, &dims) {
        let square = &field * &field;
        let max_imag = square.iter().map(|z| z.im.abs()).fold(0.0f64, f64::max);
        assert!(max_imag < 1e-10, "field square not real: {max_imag:.3e}");
        kernel *= exp_symmetric_scaled(&square.map(|z| z.re), Complex64::new(-0.5 * dtau, 0.0));
    }
    kernel *= &half_ph * &half_t;
    kernel.map(|z| z * (-dtau * mc.constant).exp())
}

#[test]
fn one_step_kernel_has_cubic_error_per_step() {
    let (set, _) = build_fixture("single_level", &[-1.0, 0.5]).unwrap();
    let cavity = CavitySpec {
        modes: vec![diag_mode(1, 1.0, 0.1, 4)],
    };
    let dse = fold_dse(&set, &cavity).unwrap();
    let h = pf_dense_matrix(&dse, &cavity);

    let error_at = |dtau: f64| -> f64 {
        let exact = exp_symmetric_scaled(&h, Complex64::new(-dtau, 0.0));
        let kernel = dense_one_step_kernel(&dse, &cavity, DecouplingScheme::TwoField, dtau);
        max_abs_c(&(&kernel - &exact))
    };
    let e1 = error_at(0.02);
    let e2 = error_at(0.01);
    let shrink = e1 / e2;
    assert!(
        (5.0..12.0).contains(&shrink),
        "halving dtau shrank the one-step error by {shrink:.2}x (e1 {e1:.3e}, e2 {e2:.3e})"
    );
}

#[test]
fn free_projection_single_step_matches_dense_propagation() {
    let (set, _) = build_fixture("single_level", &[-1.0, 0.5]).unwrap();
    let cavity = CavitySpec {
        modes: vec![diag_mode(1, 1.0, 0.1, 4)],
    };
    let dse = fold_dse(&set, &cavity).unwrap();
    let chol = cholesky_decompose(&dse.v_tilde, 1e-12).unwrap();
    let mc = assemble_mc_hamiltonian(&dse, &chol, &cavity, DecouplingScheme::TwoField).unwrap();
    let trial = build_trial(&dse, &cavity, &[]).unwrap();
    let dtau = 0.005;
    let propagator = build_propagator(&mc, dtau);

    // dense reference: <T|H e^{-dtau H}|T> / <T|e^{-dtau H}|T>
    let det = DeterminantSpace::new(1, 1, 1);
    let h = pf_dense_matrix(&dse, &cavity);
    let t_vec = pfqmc::oracle::trial_dense_vector(
        &det,
        &trial.orbitals_alpha,
        &trial.orbitals_beta,
        &trial.photon_amplitudes,
    )
    .unwrap();
    let prop_dense = exp_symmetric_scaled(&h, Complex64::new(-dtau, 0.0)).map(|z| z.re);
    let projected = &prop_dense * &t_vec;
    let reference = t_vec.dot(&(&h * &projected)) / t_vec.dot(&projected);

    let n_walkers = 100_000usize;
    let n_batches = 100usize;
    let per_batch = n_walkers / n_batches;
    let mut batch_means = Vec::with_capacity(n_batches);
    for batch in 0..n_batches {
        let mut num = Complex64::ZERO;
        let mut den = Complex64::ZERO;
        for i in 0..per_batch {
            let slot = (batch * per_batch + i) as u64;
            let mut walker = Walker::from_trial(&trial);
            let mut rng = substream(2024, slot, 1);
            propagate_step(&mut walker, &propagator, &trial, &mut rng, Constraint::Free).unwrap();
            let e = local_energy(&walker, &trial, &dse, &chol, &cavity).unwrap();
            num += walker.complex_weight() * e.total;
            den += walker.complex_weight();
        }
        batch_means.push((num / den).re);
    }
    let mean = batch_means.iter().sum::<f64>() / n_batches as f64;
    let var = batch_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    let sigma = (var / n_batches as f64).sqrt();
    assert!(
        (mean - reference).abs() <= 3.0 * sigma,
        "one-step energy {mean} vs dense {reference} (sigma {sigma:.2e})"
    );
}

// The mixed estimator is exact when the walker holds the exact ground state.
// On single_level ⊗ one mode the ground state is a determinant ⊗ photon
// vector, so it is representable.
#[test]
fn local_energy_of_exact_ground_state_reproduces_eigenvalue() {
    let (set, _) = build_fixture("single_level", &[-1.0, 0.5]).unwrap();
    let cavity = CavitySpec {
        modes: vec![diag_mode(1, 1.0, 0.3, 12)],
    };
    let dse = fold_dse(&set, &cavity).unwrap();
    let chol = cholesky_decompose(&dse.v_tilde, 1e-12).unwrap();
    let (e_exact, ground) = fci_ground_state(&dse, &cavity).unwrap();

    // electronic space is one-dimensional: the vector IS the photon amplitudes
    let mut amplitudes = DVector::zeros(13);
    for n in 0..13 {
        amplitudes[n] = ground[n];
    }
    let sign = if amplitudes[0] < 0.0 { -1.0 } else { 1.0 };
    let amplitudes = amplitudes.map(|x| sign * x / ground.norm());

    let mut trial = build_trial(&dse, &cavity, &[]).unwrap();
    trial.photon_amplitudes[0] = amplitudes.clone();
    let mut walker = Walker::from_trial(&trial);
    walker.photon_vectors[0] = amplitudes.map(|x| Complex64::new(x, 0.0));
    let e = local_energy(&walker, &trial, &dse, &chol, &cavity).unwrap();
    assert!(
        (e.total.re - e_exact).abs() <= 1e-8,
        "mixed {} vs exact {}",
        e.total.re,
        e_exact
    );
    assert!(e.total.im.abs() < 1e-10);
}

#[test]
fn imaginary_time_curve_monotone_to_ground_state() {
    let (set, _) = build_fixture("hubbard_dimer", &[1.0, 4.0]).unwrap();
    let cavity = CavitySpec {
        modes: vec![diag_mode(2, 1.0, 0.1, 5)],
    };
    let dse = fold_dse(&set, &cavity).unwrap();
    let trial = build_trial(&dse, &cavity, &[]).unwrap();
    let taus: Vec<f64> = (0..60).map(|i| i as f64 * 0.5).collect();
    let curve = pfqmc::oracle::exact_imaginary_time_curve(&dse, &cavity, &trial, &taus).unwrap();
    let (e_fci, _) = fci_ground_state(&dse, &cavity).unwrap();
    let (e_hf, _) = pfqmc::oracle::restricted_hartree_fock(&dse, 1, 1).unwrap();

    // tau = 0 is the variational energy of the trial (HF plus photon zero point)
    assert!(
        (curve[0] - (e_hf + 0.5)).abs() < 1e-8,
        "curve[0] {} vs {}",
        curve[0],
        e_hf + 0.5
    );
    for pair in curve.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-10,
            "curve not monotone: {} -> {}",
            pair[0],
            pair[1]
        );
    }
    assert!((curve.last().unwrap() - e_fci).abs() < 1e-9);
    for e in &curve {
        assert!(*e >= e_fci - 1e-10, "curve dipped below the ground energy");
    }
}

#[test]
fn converged_phaseless_run_is_stationary() {
    let mut config = RunConfig::new(
        SystemSource::Fixture {
            name: "hubbard_dimer".into(),
            params: vec![1.0, 4.0],
        },
        CavitySource::Inline(vec![InlineMode {
            omega: 1.0,
            gdiag: 0.1,
            n_max: 5,
            dnuc: 0.0,
        }]),
    );
    config.total_time = 10.0;
    config.n_walkers = 128;
    config.seed = 99;
    let output = run(&config).unwrap();
    let samples = &output.trace.samples;
    let skip = samples.len() / 4;
    let kept = &samples[skip..];
    let half = kept.len() / 2;
    let stats = |part: &[pfqmc::estimators::TraceSample]| {
        let n = part.len() as f64;
        let mean = part.iter().map(|s| s.mixed_energy().re).sum::<f64>() / n;
        let var = part
            .iter()
            .map(|s| (s.mixed_energy().re - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (m1, s1) = stats(&kept[..half]);
    let (m2, s2) = stats(&kept[half..]);
    let combined = (s1 * s1 + s2 * s2).sqrt();
    assert!(
        (m1 - m2).abs() <= 2.0 * combined * 3.0, // generous: sigma ignores autocorrelation
        "halves differ: {m1} vs {m2} (sigma {combined:.2e})"
    );
}

#[test]
fn nuclear_projection_folding_is_exact_in_the_number_sector() {
    // folding d into the diagonal must reproduce the same spectrum as adding
    // the scalar d·sqrt(omega/2)(a+a†) to the bilinear term by hand
    let (set, _) = build_fixture("single_level", &[-0.6, 0.4]).unwrap();
    let d_nuc = 0.17;
    let cavity_raw = CavitySpec {
        modes: vec![ModeSpec {
            omega: 1.1,
            coupling: DMatrix::from_diagonal_element(1, 1, 0.09),
            nuclear_projection: d_nuc,
            n_max: 10,
        }],
    };
    let folded = cavity_raw.fold_nuclear(set.n_elec()).unwrap();
    assert_eq!(folded.modes[0].nuclear_projection, 0.0);
    let shift = folded.modes[0].coupling[(0, 0)] - cavity_raw.modes[0].coupling[(0, 0)];
    assert!((shift - d_nuc / 2.0).abs() < 1e-15);

    let dse = fold_dse(&set, &folded).unwrap();
    let (e_folded, _) = fci_ground_state(&dse, &folded).unwrap();

    // by-hand reference on the 1x11 space: g_eff = g + d/N acting on N = 2
    let n_elec = 2.0;
    let omega = 1.1;
    let g_eff = 0.09 + d_nuc / n_elec;
    let c = g_eff * n_elec;
    let e_elec_dse =
        2.0 * (-0.6) + 0.4 + g_eff * g_eff + 0.5 * g_eff * g_eff * (n_elec * n_elec - n_elec) - 0.0;
    // DSE one-body: +(1/2)g² per electron → g² total; two-body: ½ g² <N(N-1)> = g²
    let want = e_elec_dse + omega / 2.0 - c * c / 2.0;
    assert!(
        (e_folded - want).abs() < 1e-9,
        "folded energy {e_folded} vs analytic {want}"
    );
}

// At weak coupling the constraint bias is below the statistical resolution;
// the full default protocol must agree with the exact energy.
#[test]
fn phaseless_weak_coupling_dimer_matches_exact() {
    let mut config = RunConfig::new(
        SystemSource::Fixture {
            name: "hubbard_dimer".into(),
            params: vec![1.0, 1.0],
        },
        CavitySource::None,
    );
    config.total_time = 10.0;
    config.n_walkers = 1024;
    config.seed = 3;
    let output = run(&config).unwrap();
    let exact = (1.0 - 17.0f64.sqrt()) / 2.0;
    let gap = (output.summary.e_mean - exact).abs();
    assert!(
        gap <= 2.5 * output.summary.e_error,
        "weak-coupling run {} +- {} vs exact {exact}",
        output.summary.e_mean,
        output.summary.e_error
    );
}

// Full spec protocol (256 walkers, dtau 0.005, T=20, phaseless, oracle on)
// on the coupled single-level fixture: the in-run oracle comparison lands
// within 2 sigma at millihartree resolution.
#[test]
fn oracle_comparison_single_level_protocol() {
    let mut config = RunConfig::new(
        SystemSource::Fixture {
            name: "single_level".into(),
            params: vec![-0.5, 0.3],
        },
        CavitySource::Inline(vec![InlineMode {
            omega: 1.0,
            gdiag: 0.1,
            n_max: 5,
            dnuc: 0.0,
        }]),
    );
    config.seed = 11;
    config.oracle = true;
    let output = run(&config).unwrap();
    let sigma_distance = output.summary.sigma_distance.unwrap();
    assert!(
        sigma_distance <= 2.0,
        "AFQMC {} +- {} vs FCI {}: {sigma_distance:.2} sigma",
        output.summary.e_mean,
        output.summary.e_error,
        output.summary.e_fci.unwrap()
    );
    assert!(
        output.summary.e_error <= 2e-3,
        "sigma {} above 2 mHa",
        output.summary.e_error
    );
}

#[test]
fn photon_only_fixture_reaches_zero_point_energy() {
    let (set, cavity) = build_fixture("photon_only", &[2.0]).unwrap();
    let dse = without_dse(&set);
    let (e, _) = fci_ground_state(&dse, &cavity).unwrap();
    assert!((e - 1.0).abs() < 1e-12);
}
