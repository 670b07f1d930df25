use proptest::prelude::*;
use vnm_core::hilbert::{c64, hermitian_eigen, max_abs, random_hermitian, trace};
use vnm_core::tomography::{
    conditioning_report, diagonal_from_correlations, reconstruct, reconstruct_n2_minimal, recover_y,
    simulate_correlations, transform_observable, w11_forward, w11_table, CorrelationSet, LambdaPair,
};
use vnm_core::{make_basis_pair, random_density, BasisPair, CMatrix, CVector, Error, GaussianProbe, ProbeState};

fn random_basis(n: usize, seed: u64) -> Vec<CVector> {
    let (_, v) = hermitian_eigen(&random_hermitian(n, seed));
    (0..n).map(|j| v.column(j).into_owned()).collect()
}

fn random_pair(n: usize, seed: u64) -> BasisPair {
    make_basis_pair(random_basis(n, seed), random_basis(n, seed ^ 0x5eed)).unwrap()
}

/// `Tr(rho P_k P_mu P_k) + lambda sum_{k' != k} Tr(rho P_k' P_mu P_k)` by
/// plain matrix products.
fn w11_oracle(rho: &CMatrix, bp: &BasisPair, k: usize, mu: usize, lambda: num_complex::Complex64) -> num_complex::Complex64 {
    let pm = bp.mu_projector(mu);
    let pk = bp.k_projector(k);
    (0..bp.dim())
        .map(|kp| {
            let t = trace(&(rho * bp.k_projector(kp) * &pm * &pk));
            if kp == k {
                t
            } else {
                lambda * t
            }
        })
        .sum()
}

#[test]
fn w11_matches_raw_traces() {
    let bp = random_pair(4, 3);
    let rho = random_density(4, 8);
    let lam = c64(0.37, -0.21);
    let table = w11_table(&rho, &bp, lam);
    for k in 0..4 {
        for mu in 0..4 {
            let want = w11_oracle(rho.matrix(), &bp, k, mu, lam);
            assert!((table[(mu, k)] - want).norm() < 1e-13);
            assert!((w11_forward(&rho, &bp, k, mu, lam) - want).norm() < 1e-13);
        }
    }
}

#[test]
fn w11_sums_to_one_and_columns_give_the_diagonal() {
    let bp = BasisPair::computational_fourier(3);
    let rho = random_density(3, 21);
    for lam in [c64(0.0, 0.0), c64(0.5, 0.0), c64(1.0, 0.0), c64(0.2, 0.4)] {
        let w = w11_table(&rho, &bp, lam);
        let total: num_complex::Complex64 = w.iter().sum();
        assert!((total - 1.0).norm() < 1e-13);
        for k in 0..3 {
            let col: num_complex::Complex64 = w.column(k).iter().sum();
            assert!((col - rho.matrix()[(k, k)]).norm() < 1e-13);
        }
    }
}

#[test]
fn reconstruction_does_not_depend_on_the_coupling() {
    let bp = random_pair(3, 12);
    let rho = random_density(3, 13);
    let probe = ProbeState::gaussian(1.0).unwrap();
    let mut results = Vec::new();
    for eps in [0.4, 1.0, 2.5] {
        let cs = simulate_correlations(&rho, &bp, &probe, eps).unwrap();
        let lp = LambdaPair::from_probe(&probe, eps).unwrap();
        let rec = reconstruct(&cs, &lp).unwrap();
        assert!(rec.warnings.is_empty());
        assert!(rec.pre_repair_hermiticity_residual < 1e-12);
        assert!(rec.trace_residual < 1e-12);
        results.push(rec.matrix);
    }
    for m in &results {
        assert!(max_abs(&(m - rho.matrix())) < 1e-11);
    }
}

#[test]
fn complex_lambda_recovers_y() {
    let bp = BasisPair::computational_fourier(3);
    let rho = random_density(3, 5);
    let lp = LambdaPair::new(c64(0.6, 0.25), c64(0.55, -0.1));
    let cs = CorrelationSet {
        basis_pair: bp.clone(),
        epsilon1: 1.0,
        sigma_q1: 1.0,
        x: w11_table(&rho, &bp, lp.lambda).map(|z| z.re),
        y_tilde: w11_table(&rho, &bp, lp.lambda_tilde).map(|z| z.im),
    };
    let y = recover_y(&cs, &lp).unwrap();
    let want = w11_table(&rho, &bp, lp.lambda).map(|z| z.im);
    for (a, b) in y.iter().zip(want.iter()) {
        assert!((a - b).abs() < 1e-13);
    }
    let rec = reconstruct(&cs, &lp).unwrap();
    assert!(max_abs(&(rec.matrix - rho.matrix())) < 1e-12);
}

#[test]
fn singular_pair_is_rejected() {
    let bp = BasisPair::computational_fourier(2);
    let rho = random_density(2, 1);
    let probe = ProbeState::gaussian(1.0).unwrap();
    let cs = simulate_correlations(&rho, &bp, &probe, 1.0).unwrap();
    let lp = LambdaPair::new(c64(0.0, 0.5), c64(0.5, 0.0));
    assert!(matches!(recover_y(&cs, &lp), Err(Error::SingularInversion(_))));
}

#[test]
fn strong_coupling_still_gives_the_diagonal() {
    let bp = random_pair(4, 30);
    let rho = random_density(4, 31);
    let probe = ProbeState::gaussian(1.0).unwrap();
    let cs = simulate_correlations(&rho, &bp, &probe, 40.0).unwrap();
    cs.check_consistency().unwrap();
    for (k, d) in diagonal_from_correlations(&cs).iter().enumerate() {
        let want = bp.k_element(rho.matrix(), k, k).re;
        assert!((d - want).abs() < 1e-13);
    }
}

#[test]
fn small_lambda_raises_a_conditioning_warning() {
    let bp = BasisPair::computational_fourier(2);
    let rho = random_density(2, 4);
    let probe = ProbeState::gaussian(1.0).unwrap();
    // lambda = e^{-eps^2/8}: about 0.044 at eps = 5 and 3.4e-4 at eps = 8
    let lp = LambdaPair::from_probe(&probe, 5.0).unwrap();
    let rec = reconstruct(&simulate_correlations(&rho, &bp, &probe, 5.0).unwrap(), &lp).unwrap();
    assert!(rec.warnings.is_empty());
    let lp = LambdaPair::from_probe(&probe, 8.0).unwrap();
    let rec = reconstruct(&simulate_correlations(&rho, &bp, &probe, 8.0).unwrap(), &lp).unwrap();
    assert_eq!(rec.warnings.len(), 1);
    assert!((rec.warnings[0].lambda_abs - (-8.0f64).exp()).abs() < 1e-15);
    assert!(max_abs(&(rec.matrix - rho.matrix())) < 1e-10);
}

#[test]
fn minimal_n2_path() {
    // rho = (I + 0.3 X + 0.4 Y + 0.5 Z) / 2 in the computational/Fourier pair
    let m = CMatrix::from_row_slice(2, 2, &[c64(0.75, 0.), c64(0.15, -0.2), c64(0.15, 0.2), c64(0.25, 0.)]);
    let rho = vnm_core::DensityOperator::new(m).unwrap();
    let bp = BasisPair::computational_fourier(2);
    let g = (-1.0f64 / 8.0).exp();
    let lam = c64(g, 0.0);
    let w = w11_table(&rho, &bp, lam);
    let rec = reconstruct_n2_minimal(w[(0, 0)].re, w[(1, 0)].re, w[(1, 0)].im, g).unwrap();
    assert!(max_abs(&(rec.matrix() - rho.matrix())) < 1e-12);
}

#[test]
fn transform_of_identity_and_projectors() {
    let bp = random_pair(3, 44);
    for lam in [c64(0.3, 0.0), c64(0.8, 0.1)] {
        let t = transform_observable(&CMatrix::identity(3, 3), &bp, lam).unwrap();
        assert!(max_abs(&(t - CMatrix::from_element(3, 3, c64(1., 0.)))) < 1e-12);
        for k in 0..3 {
            let t = transform_observable(&bp.k_projector(k), &bp, lam).unwrap();
            for mu in 0..3 {
                for j in 0..3 {
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!((t[(mu, j)] - want).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn conditioning_grows_past_unit_coupling() {
    let bp = BasisPair::computational_fourier(2);
    let probe = GaussianProbe::new(1.0).unwrap();
    let rows = conditioning_report(&bp, &probe, &[0.1, 1.0, 3.0, 5.0], 1e-4, 100, 9).unwrap();
    assert!(rows.windows(2).skip(1).all(|w| w[1].mean_error >= w[0].mean_error));
    assert!(rows[3].mean_error > 10.0 * rows[1].mean_error);
    assert!(rows.iter().all(|r| r.mean_error.is_finite()));
    let again = conditioning_report(&bp, &probe, &[0.1, 1.0, 3.0, 5.0], 1e-4, 100, 9).unwrap();
    assert_eq!(rows, again);
    let clean = conditioning_report(&bp, &probe, &[0.5, 2.0], 0.0, 10, 1).unwrap();
    assert!(clean.iter().all(|r| r.mean_error < 1e-10));
    assert!(conditioning_report(&bp, &probe, &[1.0], -1.0, 10, 1).is_err());
    assert!(conditioning_report(&bp, &probe, &[1.0], 0.0, 0, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_round_trip(n in 2usize..=5, s1 in any::<u64>(), s2 in any::<u64>(), eps in 0.2f64..3.0) {
        let bp = random_pair(n, s1);
        let rho = random_density(n, s2);
        let probe = ProbeState::gaussian(1.0).unwrap();
        let cs = simulate_correlations(&rho, &bp, &probe, eps).unwrap();
        let lp = LambdaPair::from_probe(&probe, eps).unwrap();
        let rec = reconstruct(&cs, &lp).unwrap();
        // errors scale as 1/lambda times the smallest overlap
        let min_overlap = bp.overlaps().iter().map(|o| o.norm()).fold(f64::INFINITY, f64::min);
        prop_assume!(min_overlap > 1e-3);
        prop_assert!(max_abs(&(rec.matrix - rho.matrix())) < 1e-9 / min_overlap);
    }

    #[test]
    fn x_sums_to_the_diagonal(n in 2usize..=5, s in any::<u64>(), eps in 0.0f64..20.0) {
        let bp = BasisPair::computational_fourier(n);
        let rho = random_density(n, s);
        let probe = ProbeState::gaussian(0.7).unwrap();
        let cs = simulate_correlations(&rho, &bp, &probe, eps).unwrap();
        prop_assert!(cs.check_consistency().is_ok());
        for (k, d) in cs.diagonal().iter().enumerate() {
            prop_assert!((d - rho.matrix()[(k, k)].re).abs() < 1e-13);
        }
    }
}
