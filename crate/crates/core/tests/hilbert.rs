use proptest::prelude::*;
use vnm_core::hilbert::{
    c64, computational_basis, fourier_basis, max_abs, min_eigenvalue, pauli_x, random_hermitian, trace, ViolationKind,
};
use vnm_core::{
    born_probability, make_basis_pair, random_density, spectral_decompose, validate_density, CMatrix, CVector,
    DensityOperator, Error, Observable,
};

fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|v| c64(*v, 0.))))
}

#[test]
fn sigma_x_projectors_multiply_out() {
    let obs = spectral_decompose(&pauli_x(), 1e-8).unwrap();
    assert_eq!(obs.eigenvalues(), &[-1.0, 1.0]);
    // expected projectors (I -+ sigma_x) / 2 written out by hand
    let minus = CMatrix::from_row_slice(2, 2, &[c64(0.5, 0.), c64(-0.5, 0.), c64(-0.5, 0.), c64(0.5, 0.)]);
    let plus = CMatrix::from_row_slice(2, 2, &[c64(0.5, 0.), c64(0.5, 0.), c64(0.5, 0.), c64(0.5, 0.)]);
    assert!(max_abs(&(obs.projector(0) - &minus)) < 1e-12);
    assert!(max_abs(&(obs.projector(1) - &plus)) < 1e-12);
    let p = obs.projector(1);
    assert!(max_abs(&(p * p - p)) < 1e-12);
    assert!(max_abs(&(obs.matrix() - pauli_x())) < 1e-12);
}

#[test]
fn identity_merges_into_one_projector() {
    let obs = spectral_decompose(&CMatrix::identity(3, 3), 1e-8).unwrap();
    assert_eq!(obs.len(), 1);
    assert_eq!(obs.eigenvalues(), &[1.0]);
    assert!(max_abs(&(obs.projector(0) - CMatrix::identity(3, 3))) < 1e-12);
}

#[test]
fn non_hermitian_input_is_rejected() {
    let m = CMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(1., 0.), c64(0., 0.), c64(1., 0.)]);
    assert!(matches!(spectral_decompose(&m, 1e-8), Err(Error::NonHermitianInput { .. })));
}

#[test]
fn born_examples() {
    let p0 = diag(&[1.0, 0.0]);
    let mixed = DensityOperator::maximally_mixed(2);
    assert!((born_probability(&mixed, &p0).unwrap() - 0.5).abs() < 1e-15);
    let d = DensityOperator::new(diag(&[0.3, 0.7])).unwrap();
    assert!((born_probability(&d, &p0).unwrap() - 0.3).abs() < 1e-15);
    let plus = CVector::from_vec(vec![c64(1., 0.), c64(1., 0.)]);
    let rho = DensityOperator::pure(&plus).unwrap();
    assert!((born_probability(&rho, &p0).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn validation_reports() {
    assert!(validate_density(DensityOperator::maximally_mixed(2).matrix(), 1e-12).is_empty());

    let v = validate_density(&diag(&[0.6, 0.6]), 1e-12);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::Trace);
    assert!((v[0].measured - 0.2).abs() < 1e-12);

    let m = CMatrix::from_row_slice(2, 2, &[c64(0.5, 0.), c64(0.6, 0.), c64(0.6, 0.), c64(0.5, 0.)]);
    let v = validate_density(&m, 1e-12);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::Positivity);
    // eigenvalues 1.1 and -0.1
    assert!((v[0].measured + 0.1).abs() < 1e-12);
}

#[test]
fn random_density_examples() {
    let one = random_density(1, 99);
    assert!((one.matrix()[(0, 0)] - c64(1., 0.)).norm() < 1e-15);
    assert_eq!(random_density(4, 7), random_density(4, 7));
    let r = random_density(3, 42);
    assert!(validate_density(r.matrix(), 1e-12).is_empty());
}

#[test]
fn random_density_passes_validation_for_many_seeds() {
    for seed in 0..1000 {
        let n = 1 + (seed % 6) as usize;
        let r = random_density(n, seed);
        assert!(validate_density(r.matrix(), 1e-10).is_empty(), "seed {seed}");
    }
}

#[test]
fn basis_pair_examples() {
    let bp = make_basis_pair(computational_basis(2), fourier_basis(2)).unwrap();
    for o in bp.overlaps().iter() {
        assert!((o.norm_sqr() - 0.5).abs() < 1e-15);
    }
    assert!(matches!(
        make_basis_pair(computational_basis(2), computational_basis(2)),
        Err(Error::MutuallyOrthogonalPair { k: 0, mu: 1, .. })
    ));
    let bp3 = make_basis_pair(computational_basis(3), fourier_basis(3)).unwrap();
    for o in bp3.overlaps().iter() {
        assert!((o.norm_sqr() - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn non_orthonormal_basis_is_rejected() {
    let mut k = computational_basis(2);
    k[1] = CVector::from_vec(vec![c64(0.6, 0.), c64(0.8, 0.)]);
    assert!(matches!(make_basis_pair(k, fourier_basis(2)), Err(Error::NotOrthonormal { .. })));
}

#[test]
fn density_json_round_trip() {
    let r = random_density(3, 5);
    let json = serde_json::to_string(&r).unwrap();
    let back: DensityOperator = serde_json::from_str(&json).unwrap();
    assert!(max_abs(&(back.matrix() - r.matrix())) < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn spectral_algebra_holds(n in 2usize..=6, seed in any::<u64>()) {
        let h = random_hermitian(n, seed);
        let obs = Observable::from_hermitian(&h).unwrap();
        let r = obs.residuals();
        prop_assert!(r.idempotence < 1e-10 && r.orthogonality < 1e-10 && r.completeness < 1e-10);
        prop_assert!(max_abs(&(obs.matrix() - &h)) < 1e-10);
        prop_assert!(obs.eigenvalues().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn born_weights_sum_to_one(n in 2usize..=6, s1 in any::<u64>(), s2 in any::<u64>()) {
        let rho = random_density(n, s1);
        let obs = Observable::from_hermitian(&random_hermitian(n, s2)).unwrap();
        let total: f64 = obs.projectors().iter().map(|p| born_probability(&rho, p).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn random_density_is_a_state(n in 1usize..=8, seed in any::<u64>()) {
        let r = random_density(n, seed);
        prop_assert!((trace(r.matrix()).re - 1.0).abs() < 1e-12);
        prop_assert!(min_eigenvalue(r.matrix()) >= -1e-10);
    }
}
