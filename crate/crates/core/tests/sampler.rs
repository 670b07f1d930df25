use vnm_core::hilbert::{c64, trace};
use vnm_core::probe::linspace;
use vnm_core::sampler::{
    ensemble_tomography, ensemble_tomography_with, estimate_correlation, sample_correlation_coefficient,
    sample_joint_density, sample_joint_density_with, CorrelationMode, EnsembleSpec, Samples,
};
use vnm_core::successive::{joint_pointer_density, JointDensity, TwoProbeSetup};
use vnm_core::tomography::w11_table;
use vnm_core::{random_density, BasisPair, CMatrix, Error, Execution, GaussianProbe, Observable, ProbeState};

/// `(Q1, Q2)` density for measuring `A = diag(-1, 0.5, 2)` twice in a row.
fn repeated_density(eps1: f64, eps2: f64) -> (JointDensity, f64) {
    let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(-1.0, 0.), c64(0.5, 0.), c64(2.0, 0.)]));
    let rho = random_density(3, 17);
    let obs = Observable::from_hermitian(&a).unwrap();
    let p = ProbeState::gaussian(1.0).unwrap();
    let setup = TwoProbeSetup {
        probe1: &p,
        probe2: &p,
        epsilon1: eps1,
        epsilon2: eps2,
    };
    let q1 = linspace(-2.0 * eps1 - 8.0, 2.0 * eps1 + 8.0, 400);
    let q2 = linspace(-2.0 * eps2 - 8.0, 2.0 * eps2 + 8.0, 400);
    let d = joint_pointer_density(&rho, &obs, &obs, &setup, &q1, &q2).unwrap();
    // <A^2> straight from the matrix
    let a2 = trace(&(rho.matrix() * &a * &a)).re;
    (d, eps1 * eps2 * a2)
}

#[test]
fn repeated_measurement_mean_matches_second_moment() {
    let (d, exact) = repeated_density(1.0, 2.0);
    let s = sample_joint_density(&d, 200_000, 1).unwrap();
    let r = estimate_correlation(&s, CorrelationMode::Q1Q2).unwrap();
    assert_eq!(r.n_samples, 200_000);
    assert!((r.mean - exact).abs() < 3.0 * r.std_error, "{} vs {exact} ({})", r.mean, r.std_error);
}

#[test]
fn sample_mean_is_unbiased_over_seeds() {
    let (d, exact) = repeated_density(1.0, 1.0);
    let means: Vec<f64> = (0..50)
        .map(|seed| estimate_correlation(&sample_joint_density(&d, 4000, seed).unwrap(), CorrelationMode::Q1Q2).unwrap().mean)
        .collect();
    let m = means.iter().sum::<f64>() / 50.0;
    let sd = (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 49.0).sqrt();
    assert!((m - exact).abs() < 3.0 * sd / 50f64.sqrt());
}

#[test]
fn standard_error_scales_as_inverse_root_n() {
    let (d, _) = repeated_density(1.0, 1.0);
    let se = |n| estimate_correlation(&sample_joint_density(&d, n, 3).unwrap(), CorrelationMode::Q1Q2).unwrap().std_error;
    let ratio = se(1000) / se(4000);
    assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn single_axis_means() {
    let (d, _) = repeated_density(1.0, 2.0);
    let s = sample_joint_density(&d, 100_000, 4).unwrap();
    let r1 = estimate_correlation(&s, CorrelationMode::Q1).unwrap();
    let r2 = estimate_correlation(&s, CorrelationMode::Q2).unwrap();
    // both pointers carry <A>, scaled by their coupling
    let e1 = d.expectation(|x, _| x);
    let e2 = d.expectation(|_, y| y);
    assert!((r1.mean - e1).abs() < 4.0 * r1.std_error);
    assert!((r2.mean - e2).abs() < 4.0 * r2.std_error);
    assert!((e2 - 2.0 * e1).abs() < 1e-8);
    // strongly correlated pointers
    assert!(sample_correlation_coefficient(&s).unwrap() > 0.3);
}

#[test]
fn draws_do_not_depend_on_the_execution_policy() {
    let (d, _) = repeated_density(1.0, 1.0);
    // several chunks' worth
    let n = 3 * 65_536 + 17;
    let par = sample_joint_density_with(Execution::Parallel, &d, n, 8).unwrap();
    let seq = sample_joint_density_with(Execution::Sequential, &d, n, 8).unwrap();
    assert_eq!(par, seq);
    assert_ne!(par, sample_joint_density(&d, n, 9).unwrap());
    assert_eq!(par.seed, 8);
}

#[test]
fn constant_samples_have_no_correlation_coefficient() {
    let s = Samples {
        pairs: vec![(1.0, 2.0); 5],
        seed: 0,
    };
    assert_eq!(sample_correlation_coefficient(&s), Err(Error::ZeroVariance));
}

#[test]
fn csv_has_header_and_full_precision() {
    let s = Samples {
        pairs: vec![(0.1, -2.5), (1.0 / 3.0, 1e-300)],
        seed: 0,
    };
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "q1,q2");
    assert_eq!(lines.len(), 3);
    for (line, (a, b)) in lines[1..].iter().zip(&s.pairs) {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!((v[0], v[1]), (*a, *b));
    }
}

#[test]
fn ensemble_tomography_converges_to_exact_correlations() {
    let bp = BasisPair::computational_fourier(2);
    let rho = random_density(2, 61);
    let probe = GaussianProbe::new(1.0).unwrap();
    let spec = EnsembleSpec {
        grid_points: 512,
        ..EnsembleSpec::new(probe, probe, 1.0, 1.0, 50_000, 5)
    };
    let et = ensemble_tomography(&rho, &bp, &spec).unwrap();
    let lam = c64((-1.0f64 / 8.0).exp(), 0.0);
    let w = w11_table(&rho, &bp, lam);
    for mu in 0..2 {
        for k in 0..2 {
            let (x, se) = (et.correlations.x[(mu, k)], et.x_std_error[(mu, k)]);
            assert!((x - w[(mu, k)].re).abs() < 5.0 * se, "x[{mu}][{k}]");
            let (y, se) = (et.correlations.y_tilde[(mu, k)], et.y_tilde_std_error[(mu, k)]);
            assert!((y - w[(mu, k)].im).abs() < 5.0 * se, "y[{mu}][{k}]");
        }
    }
    let seq = ensemble_tomography_with(Execution::Sequential, &rho, &bp, &spec).unwrap();
    assert_eq!(seq, et);
}

#[test]
fn ensemble_tomography_rejects_bad_specs() {
    let bp = BasisPair::computational_fourier(2);
    let rho = random_density(2, 1);
    let probe = GaussianProbe::new(1.0).unwrap();
    let small = EnsembleSpec::new(probe, probe, 1.0, 1.0, 50, 0);
    assert!(matches!(ensemble_tomography(&rho, &bp, &small), Err(Error::InvalidArgument(_))));
    let zero = EnsembleSpec::new(probe, probe, 0.0, 1.0, 1000, 0);
    assert!(ensemble_tomography(&rho, &bp, &zero).is_err());
    let spec = EnsembleSpec::new(probe, probe, 1.0, 1.0, 1000, 0);
    assert!(matches!(
        ensemble_tomography(&random_density(3, 1), &bp, &spec),
        Err(Error::DimensionMismatch { .. })
    ));
}
