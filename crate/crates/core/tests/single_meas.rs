use num_complex::Complex64;
use proptest::prelude::*;
use vnm_core::hilbert::{c64, hermitian_eigen, max_abs, min_eigenvalue, pauli_z, random_hermitian, random_unit_vector, trace};
use vnm_core::probe::{linspace, trapezoid};
use vnm_core::single::{
    luders, pointer_charfn, pointer_density, pointer_moments, projector_yes_probability, qnd_check, reduced_state_after,
    ProbeVariable,
};
use vnm_core::{random_density, CMatrix, CVector, DensityOperator, Error, Observable, ProbeState};

fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|v| c64(*v, 0.))))
}

fn sz() -> Observable {
    Observable::from_hermitian(&pauli_z()).unwrap()
}

fn plus_state() -> DensityOperator {
    DensityOperator::pure(&CVector::from_vec(vec![c64(1., 0.), c64(1., 0.)])).unwrap()
}

/// Seven-level observable `a_n = n - 3` with the given Born weights in a
/// diagonal state.
fn seven_levels() -> (DensityOperator, Observable) {
    let weights = [0.1, 0.2, 0.2, 0.15, 0.2, 0.05, 0.1];
    let rho = DensityOperator::new(diag(&weights)).unwrap();
    let a = Observable::from_hermitian(&diag(&[-3., -2., -1., 0., 1., 2., 3.])).unwrap();
    (rho, a)
}

#[test]
fn seven_peaks_resolve_at_strong_coupling() {
    let (rho, a) = seven_levels();
    let probe = ProbeState::gaussian(0.05).unwrap();
    let grid = linspace(-4.0, 4.0, 8001);
    let pd = pointer_density(&rho, &a, &probe, 1.0, &grid).unwrap();
    assert!((pd.integral() - 1.0).abs() < 1e-6);
    let weights = [0.1, 0.2, 0.2, 0.15, 0.2, 0.05, 0.1];
    for (n, w) in weights.iter().enumerate() {
        let center = n as f64 - 3.0;
        let (x, y): (Vec<f64>, Vec<f64>) = grid
            .iter()
            .zip(&pd.values)
            .filter(|(q, _)| (**q - center).abs() <= 0.5)
            .map(|(q, p)| (*q, *p))
            .unzip();
        assert!((trapezoid(&x, &y) - w).abs() < 1e-6, "peak {n}");
    }
}

#[test]
fn seven_levels_blur_at_weak_coupling() {
    let (rho, a) = seven_levels();
    let probe = ProbeState::gaussian(1.0).unwrap();
    let grid = linspace(-10.0, 10.0, 2001);
    let pd = pointer_density(&rho, &a, &probe, 1.0, &grid).unwrap();
    let central: Vec<f64> = grid
        .iter()
        .zip(&pd.values)
        .filter(|(q, _)| q.abs() <= 1.0)
        .map(|(_, p)| *p)
        .collect();
    let max = central.iter().copied().fold(f64::MIN, f64::max);
    let min = central.iter().copied().fold(f64::MAX, f64::min);
    assert!(max / min < 2.0);
}

#[test]
fn eigenstate_gives_single_peak() {
    let rho = DensityOperator::new(diag(&[0.0, 1.0])).unwrap();
    let probe = ProbeState::gaussian(0.3).unwrap();
    let grid = linspace(-5.0, 5.0, 101);
    let pd = pointer_density(&rho, &sz(), &probe, 2.0, &grid).unwrap();
    // eigenvalue -1 of sigma_z sits on |1>
    for (q, p) in grid.iter().zip(&pd.values) {
        assert!((p - probe.density(q + 2.0)).abs() < 1e-15);
    }
}

#[test]
fn narrow_grid_is_rejected() {
    let probe = ProbeState::gaussian(0.3).unwrap();
    let grid = linspace(-1.0, 1.0, 11);
    assert!(matches!(
        pointer_density(&plus_state(), &sz(), &probe, 2.0, &grid),
        Err(Error::GridTooNarrow { .. })
    ));
}

#[test]
fn moment_examples() {
    let probe = ProbeState::gaussian(0.5).unwrap();
    let d = DensityOperator::new(diag(&[0.3, 0.7])).unwrap();
    assert!((pointer_moments(&d, &sz(), &probe, 2.0).unwrap().mean_q + 0.8).abs() < 1e-15);
    let mixed = DensityOperator::maximally_mixed(2);
    let m = pointer_moments(&mixed, &sz(), &probe, 1.0).unwrap();
    assert_eq!(m.mean_q, 0.0);
    assert!((m.second_moment_q - 1.25).abs() < 1e-15);
}

#[test]
fn charfn_matches_numerical_transform() {
    let rho = random_density(3, 4);
    let a = Observable::from_hermitian(&random_hermitian(3, 5)).unwrap();
    let probe = ProbeState::gaussian(0.7).unwrap();
    let grid = linspace(-15.0, 15.0, 6001);
    let pd = pointer_density(&rho, &a, &probe, 1.5, &grid).unwrap();
    assert!((pointer_charfn(&rho, &a, &probe, 1.5, 0.0).unwrap() - 1.0).norm() < 1e-15);
    for k in [0.1, 0.5, 1.0] {
        let re: Vec<f64> = grid.iter().zip(&pd.values).map(|(q, p)| p * (k * q).cos()).collect();
        let im: Vec<f64> = grid.iter().zip(&pd.values).map(|(q, p)| p * (k * q).sin()).collect();
        let numeric = c64(trapezoid(&grid, &re), trapezoid(&grid, &im));
        assert!((pointer_charfn(&rho, &a, &probe, 1.5, k).unwrap() - numeric).norm() < 1e-5);
    }
}

#[test]
fn eigenstate_charfn_is_a_phase_times_probe() {
    let rho = DensityOperator::new(diag(&[1.0, 0.0])).unwrap();
    let probe = ProbeState::gaussian(0.5).unwrap();
    let (eps, k) = (0.8, 1.3);
    let expected = Complex64::from_polar(1.0, k * eps) * probe.position_charfn(k);
    assert!((pointer_charfn(&rho, &sz(), &probe, eps, k).unwrap() - expected).norm() < 1e-15);
}

#[test]
fn reduced_state_examples() {
    let probe = ProbeState::gaussian(0.5).unwrap();
    let rho = random_density(3, 8);
    let a = Observable::from_hermitian(&random_hermitian(3, 9)).unwrap();
    let same = reduced_state_after(&rho, &a, &probe, 0.0).unwrap();
    assert!(max_abs(&(same.matrix() - rho.matrix())) < 1e-15);

    let plus = plus_state();
    for eps in [0.1, 0.5, 1.0] {
        let after = reduced_state_after(&plus, &sz(), &probe, eps).unwrap();
        let expected = 0.5 * (-eps * eps * 4.0 / (8.0 * 0.25)).exp();
        assert!((after.matrix()[(0, 1)].re - expected).abs() < 1e-15);
    }
    let strong = reduced_state_after(&plus, &sz(), &probe, 5.0).unwrap();
    assert!(max_abs(&(strong.matrix() - DensityOperator::maximally_mixed(2).matrix())) < 1e-15);
}

#[test]
fn projected_state_is_an_eigenvector_at_strong_coupling() {
    let probe = ProbeState::gaussian(1.0).unwrap();
    let psi = random_unit_vector(3, 21);
    let rho = DensityOperator::pure(&psi).unwrap();
    let a = Observable::from_hermitian(&diag(&[-1.0, 0.0, 1.0])).unwrap();
    let residual_at = |eps: f64| -> f64 {
        let after = reduced_state_after(&rho, &a, &probe, eps).unwrap();
        a.projectors()
            .iter()
            .map(|p| {
                let v = p * &psi;
                let value = psi.dotc(&v).re;
                (after.matrix() * &v - &v * c64(value, 0.)).norm()
            })
            .fold(0.0, f64::max)
    };
    assert!(residual_at(100.0) < 1e-12);
    // cross terms g(eps (a_n - a_nu)) spoil it at weak coupling
    assert!(residual_at(0.5) > 1e-2);
}

#[test]
fn luders_examples() {
    let d = DensityOperator::new(diag(&[0.2, 0.8])).unwrap();
    assert!(max_abs(&(luders(&d, &sz()).unwrap().matrix() - d.matrix())) < 1e-15);
    let mixed = DensityOperator::maximally_mixed(2);
    assert!(max_abs(&(luders(&plus_state(), &sz()).unwrap().matrix() - mixed.matrix())) < 1e-15);
}

#[test]
fn yes_probability_is_coupling_independent() {
    let probe = ProbeState::gaussian(0.5).unwrap();
    let rho = random_density(3, 30);
    let v = random_unit_vector(3, 31);
    let proj = &v * v.adjoint();
    let direct = rho.expectation(&proj).re;
    for eps in [0.01, 1.0, 100.0] {
        let p = projector_yes_probability(&rho, &proj, &probe, eps).unwrap();
        assert!((p - direct).abs() < 1e-12);
    }
    let id = CMatrix::identity(3, 3);
    assert!((projector_yes_probability(&rho, &id, &probe, 1.0).unwrap() - 1.0).abs() < 1e-12);
    let mixed = DensityOperator::maximally_mixed(2);
    let p0 = diag(&[1.0, 0.0]);
    assert!((projector_yes_probability(&mixed, &p0, &probe, 1.0).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn qnd_examples() {
    let r = qnd_check(&pauli_z(), ProbeVariable::Position, 1.0).unwrap();
    assert!(r.info_gain && r.nondemolition);
    let h = random_hermitian(4, 40);
    let r = qnd_check(&h, ProbeVariable::Position, -1.0).unwrap();
    assert!(r.nondemolition);
    assert!(r.residuals.coupling_system < 1e-12);
    assert!(r.residuals.hamiltonian_system < 1e-12);
}

fn random_case(n: usize, seed: u64) -> (DensityOperator, Observable) {
    (
        random_density(n, seed),
        Observable::from_hermitian(&random_hermitian(n, seed ^ 0x5eed)).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn mean_is_linear_in_coupling(n in 2usize..=5, seed in any::<u64>(), eps in 0.01f64..50.0) {
        let (rho, a) = random_case(n, seed);
        let probe = ProbeState::gaussian(0.7).unwrap();
        let m1 = pointer_moments(&rho, &a, &probe, eps).unwrap().mean_q;
        let m2 = pointer_moments(&rho, &a, &probe, 2.0 * eps).unwrap().mean_q;
        prop_assert!((m2 - 2.0 * m1).abs() < 1e-12 * (1.0 + m1.abs()));
    }

    #[test]
    fn grid_moments_match_closed_form(
        n in prop::sample::select(vec![2usize, 3, 5]),
        seed in any::<u64>(),
        eps in 0.1f64..5.0,
        sigma in 0.2f64..2.0,
    ) {
        let (rho, a) = random_case(n, seed);
        let probe = ProbeState::gaussian(sigma).unwrap();
        let amax = a.eigenvalues().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let half = eps * amax + 8.0 * sigma;
        let grid = linspace(-half, half, 4001);
        let pd = pointer_density(&rho, &a, &probe, eps, &grid).unwrap();
        let m = pointer_moments(&rho, &a, &probe, eps).unwrap();
        prop_assert!((pd.moment(1) - m.mean_q).abs() < 1e-5);
        prop_assert!((pd.moment(2) - m.second_moment_q).abs() < 1e-5);
        prop_assert!(pd.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn reduced_state_stays_a_state(n in 2usize..=5, seed in any::<u64>(), eps in 0.0f64..10.0) {
        let (rho, a) = random_case(n, seed);
        let probe = ProbeState::gaussian(1.0).unwrap();
        let after = reduced_state_after(&rho, &a, &probe, eps).unwrap();
        let m = after.matrix();
        prop_assert!(max_abs(&(m - m.adjoint())) < 1e-12);
        prop_assert!((trace(m).re - 1.0).abs() < 1e-12);
        prop_assert!(min_eigenvalue(m) >= -1e-10);
        // diagonal blocks untouched
        for p in a.projectors() {
            prop_assert!(max_abs(&(p * m * p - p * rho.matrix() * p)) < 1e-12);
        }
    }

    #[test]
    fn luders_is_idempotent(n in 2usize..=5, seed in any::<u64>()) {
        let (rho, a) = random_case(n, seed);
        let once = luders(&rho, &a).unwrap();
        let twice = luders(&once, &a).unwrap();
        prop_assert!(max_abs(&(twice.matrix() - once.matrix())) < 1e-12);
    }

    #[test]
    fn off_diagonal_damping_is_monotone(n in 2usize..=4, seed in any::<u64>()) {
        let (rho, a) = random_case(n, seed);
        let probe = ProbeState::gaussian(1.0).unwrap();
        let (_, vecs) = hermitian_eigen(&a.matrix());
        let mut prev: Option<CMatrix> = None;
        for eps in linspace(0.0, 6.0, 13) {
            let after = reduced_state_after(&rho, &a, &probe, eps).unwrap();
            let inbasis = vecs.adjoint() * after.matrix() * &vecs;
            if let Some(p) = &prev {
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            prop_assert!(inbasis[(i, j)].norm() <= p[(i, j)].norm() + 1e-12);
                        }
                    }
                }
            }
            prev = Some(inbasis);
        }
    }
}

#[test]
fn gaussian_off_diagonal_decay_matches_closed_form() {
    // |+> under sigma_z: off-diagonal 1/2 exp(-eps^2 / (2 sigma^2))
    let probe = ProbeState::gaussian(1.0).unwrap();
    let after = reduced_state_after(&plus_state(), &sz(), &probe, 10.0).unwrap();
    let expected = 0.5 * (-50.0f64).exp();
    assert!((after.matrix()[(0, 1)].norm() - expected).abs() < 1e-12 * expected);
}
