use num_complex::Complex64;
use proptest::prelude::*;
use vnm_core::probe::{linspace, trapezoid};
use vnm_core::{Error, GaussianProbe, GridProbe, ProbeState};

fn grid_gaussian(sigma: f64) -> GridProbe {
    GridProbe::gaussian(sigma, 0.0, -8.0, 8.0, 1024).unwrap()
}

/// Five centered grid probes of different shapes.
fn grid_family() -> Vec<GridProbe> {
    let sample = |f: fn(f64) -> Complex64| GridProbe::sample(-16.0, 16.0, 1024, f).unwrap();
    vec![
        grid_gaussian(0.5),
        sample(|q| Complex64::new(1.0 / q.cosh(), 0.0)),
        sample(|q| Complex64::new((1.0 + q * q).powi(-2), 0.0)),
        sample(|q| Complex64::new((-(q - 2.0).powi(2)).exp() + (-(q + 2.0).powi(2)).exp(), 0.0)),
        sample(|q| Complex64::from_polar((-q * q / 2.0).exp(), 0.3 * q * q)),
    ]
}

#[test]
fn gaussian_examples() {
    let g = GaussianProbe::new(0.5).unwrap();
    assert!((g.char_g(1.0) - (-0.5f64).exp()).abs() < 1e-15);
    assert!((g.sigma_p() - 1.0).abs() < 1e-15);
    let unit = GaussianProbe::new(1.0).unwrap();
    assert!((unit.density(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    assert_eq!(unit.density(1.3), unit.density(-1.3));
    assert!(matches!(GaussianProbe::new(-1.0), Err(Error::InvalidProbe(_))));
    assert!(GaussianProbe::new(0.0).is_err());
}

#[test]
fn grid_gaussian_matches_closed_form() {
    let grid = ProbeState::grid(grid_gaussian(0.5)).unwrap();
    let closed = (-0.5f64).exp();
    assert!((grid.char_g(1.0) - closed).norm() < 1e-6);
    assert!((grid.lambda(1.0) - closed).norm() < 1e-6);
    assert!((grid.lambda_tilde(1.0).unwrap() - closed).norm() < 1e-5);
    let q = linspace(-8.0, 8.0, 2049);
    let d: Vec<f64> = q.iter().map(|x| grid.density(*x)).collect();
    assert!((trapezoid(&q, &d) - 1.0).abs() < 1e-8);
}

#[test]
fn off_center_grid_probe_is_rejected() {
    let shifted = GridProbe::gaussian(0.5, 1.0, -8.0, 8.0, 1024).unwrap();
    assert!(matches!(ProbeState::grid(shifted), Err(Error::ProbeNotCentered { .. })));
}

#[test]
fn grid_size_must_be_power_of_two() {
    assert!(GridProbe::gaussian(0.5, 0.0, -8.0, 8.0, 1000).is_err());
}

#[test]
fn characteristic_functions_are_one_at_zero() {
    let mut probes: Vec<ProbeState> = grid_family().into_iter().map(|g| ProbeState::grid(g).unwrap()).collect();
    probes.push(ProbeState::gaussian(0.7).unwrap());
    for p in &probes {
        assert!((p.char_g(0.0) - 1.0).norm() < 1e-12);
        assert!((p.lambda(0.0) - 1.0).norm() < 1e-12);
        assert!((p.lambda_tilde(0.0).unwrap() - 1.0).norm() < 1e-12);
    }
    // continuity just off zero holds for real wavefunctions
    for g in grid_family().into_iter().take(4) {
        let p = ProbeState::grid(g).unwrap();
        assert!((p.lambda(1e-6) - 1.0).norm() < 1e-8);
        assert!((p.lambda_tilde(1e-6).unwrap() - 1.0).norm() < 1e-8);
    }
}

#[test]
fn chirped_probe_lambda_jumps_at_zero() {
    // chi ~ e^{-q^2/2} e^{i a q^2}: <QP + PQ> = 4 a <Q^2> = 2 a, and
    // lambda(0+) = 1 - i <QP + PQ> while lambda(0) = 1 by definition
    let a = 0.3;
    let g = GridProbe::sample(-16.0, 16.0, 1024, |q| Complex64::from_polar((-q * q / 2.0).exp(), a * q * q)).unwrap();
    let p = ProbeState::grid(g).unwrap();
    assert_eq!(p.lambda(0.0), Complex64::new(1.0, 0.0));
    assert!((p.lambda(1e-6) - Complex64::new(1.0, -2.0 * a)).norm() < 1e-8);
}

#[test]
fn char_g_is_bounded_and_hermitian_symmetric() {
    for g in grid_family() {
        let p = ProbeState::grid(g).unwrap();
        let s = p.sigma_q();
        for beta in linspace(-10.0 * s, 10.0 * s, 100) {
            let v = p.char_g(beta);
            assert!(v.norm() <= 1.0 + 1e-12);
            assert!((p.char_g(-beta) - v.conj()).norm() < 1e-12);
        }
    }
}

#[test]
fn gaussian_lambdas_coincide() {
    let closed = ProbeState::gaussian(0.5).unwrap();
    let grid = ProbeState::grid(grid_gaussian(0.5)).unwrap();
    for beta in linspace(-3.0, 3.0, 61) {
        let g = closed.char_g(beta);
        assert_eq!(closed.lambda(beta), g);
        assert_eq!(closed.lambda_tilde(beta).unwrap(), g);
        assert!((grid.lambda(beta) - g).norm() < 1e-6);
        assert!((grid.lambda_tilde(beta).unwrap() - g).norm() < 1e-6);
    }
}

#[test]
fn boosts_compose_and_move_the_momentum_peak() {
    let g = grid_gaussian(0.5);
    assert_eq!(g.boost(0.0), g);
    let twice = g.boost(1.0).boost(1.0);
    let once = g.boost(2.0);
    for (a, b) in twice.amplitudes().iter().zip(once.amplitudes()) {
        assert!((a - b).norm() < 1e-12);
    }
    let (p, w) = once.momentum_distribution();
    let peak = w.iter().enumerate().fold((0, 0.0), |a, (i, v)| if *v > a.1 { (i, *v) } else { a }).0;
    assert!((p[peak] - 2.0).abs() < 0.2);
    assert!((once.mean_p() - 2.0).abs() < 1e-8);
}

#[test]
fn free_evolution_spreads_and_translates() {
    let sigma = 0.5;
    let g = GridProbe::gaussian(sigma, 0.0, -20.0, 20.0, 1024).unwrap();
    let (same, _) = g.free_evolve(1.0, 0.0).unwrap();
    for (a, b) in same.amplitudes().iter().zip(g.amplitudes()) {
        assert!((a - b).norm() < 1e-14);
    }
    let (mass, t) = (1.3, 1.7);
    let (evolved, leak) = g.free_evolve(mass, t).unwrap();
    assert!(leak.is_none());
    let expected = sigma * (1.0 + (t / (2.0 * mass * sigma * sigma)).powi(2)).sqrt();
    assert!((evolved.sigma_q() - expected).abs() < 1e-8);

    let (moved, _) = g.boost(2.0).free_evolve(1.0, 1.0).unwrap();
    assert!((moved.mean_q() - 2.0).abs() < 1e-8);

    let (back, _) = evolved.free_evolve(mass, -t).unwrap();
    for (a, b) in back.amplitudes().iter().zip(g.amplitudes()) {
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn free_evolution_reports_boundary_leaks() {
    let g = GridProbe::gaussian(0.5, 0.0, -4.0, 4.0, 256).unwrap();
    let (_, leak) = g.free_evolve(1.0, 5.0).unwrap();
    assert!(leak.is_some());
}

#[test]
fn probe_json_dispatches_on_shape() {
    let p: ProbeState = serde_json::from_str(r#"{"sigma_q": 0.25}"#).unwrap();
    assert_eq!(p, ProbeState::gaussian(0.25).unwrap());
    let grid = ProbeState::grid(grid_gaussian(0.5)).unwrap();
    let back: ProbeState = serde_json::from_str(&serde_json::to_string(&grid).unwrap()).unwrap();
    assert_eq!(back, grid);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaussian_char_g_closed_form(sigma in 0.05f64..5.0, beta in -20.0f64..20.0) {
        let g = GaussianProbe::new(sigma).unwrap();
        let closed = (-beta * beta / (8.0 * sigma * sigma)).exp();
        prop_assert!((g.char_g(beta) - closed).abs() < 1e-15);
        prop_assert!(g.char_g(beta) <= 1.0);
    }

    #[test]
    fn gaussian_density_normalized(sigma in 0.1f64..3.0) {
        let g = GaussianProbe::new(sigma).unwrap();
        let q = linspace(-10.0 * sigma, 10.0 * sigma, 4001);
        let d: Vec<f64> = q.iter().map(|x| g.density(*x)).collect();
        prop_assert!((trapezoid(&q, &d) - 1.0).abs() < 1e-10);
    }
}
