use std::f64::consts::SQRT_2;
use std::fmt;
use std::io::{self, Write};

use serde_json::json;
use vnm_core::format::fmt_f64;
use vnm_core::hilbert::{c64, hermitian_eigen, max_abs, random_hermitian, trace};
use vnm_core::probe::linspace;
use vnm_core::rng::stream_id;
use vnm_core::sampler::{ensemble_tomography, EnsembleSpec};
use vnm_core::single::{luders, pointer_density, pointer_moments, reduced_state_after};
use vnm_core::stern_gerlach::{bloch_spinor, simulate, SternGerlachParams};
use vnm_core::successive::{
    joint_momentum_position_density, joint_pointer_density, kirkwood, margenau_hill, negativity_witness,
    s_operator, w_fn, w_tilde_fn, wigner_joint, QuasiDistribution, TwoProbeSetup,
};
use vnm_core::tomography::{
    conditioning_report, expectation_via_quasi, reconstruct, reconstruct_n2_minimal, recover_y,
    simulate_correlations, LambdaPair,
};
use vnm_core::{random_density, BasisPair, CMatrix, CVector, DensityOperator, GaussianProbe, Observable, ProbeState};

use crate::config::*;
use crate::output::Outputs;

#[derive(Debug)]
pub enum RunError {
    Core(vnm_core::Error),
    Io(io::Error),
    Input(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
            RunError::Input(s) => write!(f, "{s}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<vnm_core::Error> for RunError {
    fn from(e: vnm_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

type Result<T> = std::result::Result<T, RunError>;

fn load_state(spec: &StateSpec, dim: usize, seed: u64) -> Result<DensityOperator> {
    let rho = match spec {
        StateSpec::Random => random_density(dim, stream_id(&[seed, 0])),
        StateSpec::Matrix(m) => DensityOperator::from_approx(m.to_matrix()?, 1e-8)?,
        StateSpec::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Input(format!("state file {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| RunError::Input(format!("state file {}: {e}", path.display())))?
        }
    };
    if rho.dim() != dim {
        return Err(RunError::Input(format!("state has dimension {}, expected {dim}", rho.dim())));
    }
    Ok(rho)
}

fn load_basis(spec: &BasisSpec, dim: usize) -> Result<BasisPair> {
    let bp = match spec {
        BasisSpec::ComputationalFourier => BasisPair::computational_fourier(dim),
        BasisSpec::Inline(bp) => bp.clone(),
        BasisSpec::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Input(format!("basis file {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| RunError::Input(format!("basis file {}: {e}", path.display())))?
        }
    };
    if bp.dim() != dim {
        return Err(RunError::Input(format!("basis pair has dimension {}, expected {dim}", bp.dim())));
    }
    Ok(bp)
}

/// Observable with the given spectrum in an eigenbasis drawn from `seed`.
fn observable(values: &[f64], seed: u64) -> Result<Observable> {
    let (_, v) = hermitian_eigen(&random_hermitian(values.len(), seed));
    let vectors: Vec<CVector> = (0..values.len()).map(|j| v.column(j).into_owned()).collect();
    Ok(Observable::from_eigenbasis(values, &vectors)?)
}

fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|v| c64(*v, 0.0))))
}

fn spread(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn quasi_max_diff(a: &QuasiDistribution, b: &QuasiDistribution) -> f64 {
    max_abs(&(&a.values - &b.values))
}

pub fn run_scenario(config: &ScenarioConfig, out: &mut Outputs) -> Result<()> {
    match config {
        ScenarioConfig::SternGerlach(p) => stern_gerlach(p, out),
        ScenarioConfig::PointerDensity(p) => pointer(p, out),
        ScenarioConfig::ReducedState(p) => reduced(p, out),
        ScenarioConfig::Successive(p) => successive(p, out),
        ScenarioConfig::QuasiDistributions(p) => quasi(p, out),
        ScenarioConfig::Tomography(p) => tomography(p, out),
        ScenarioConfig::EnsembleTomography(p) => ensemble(p, out),
        ScenarioConfig::ConditioningSweep(p) => conditioning(p, out),
        ScenarioConfig::TransformCheck(p) => transform(p, out),
    }
}

fn stern_gerlach(p: &SternGerlachConfig, out: &mut Outputs) -> Result<()> {
    let params = SternGerlachParams {
        mass: p.mass,
        t1: p.t1,
        epsilon: p.epsilon,
        sigma: p.sigma_q,
        z_min: p.z_min,
        z_max: p.z_max,
        n_points: p.n_points,
    };
    for (i, s) in p.spinors.iter().enumerate() {
        let run = simulate(&params, &bloch_spinor(s.theta, s.phi))?;
        for f in &run.frames {
            out.csv(
                &format!("spinor{i}_{}_position.csv", f.label),
                &format!("position density p(z) at {} (t = {})", f.label, fmt_f64(f.t)),
                |w| f.write_position_csv(w),
            )?;
            out.csv(
                &format!("spinor{i}_{}_momentum.csv", f.label),
                &format!("momentum density at {} (t = {})", f.label, fmt_f64(f.t)),
                |w| f.write_momentum_csv(w),
            )?;
        }
        let m = run.masses;
        out.value(&format!("spinor{i}"), json!({"theta": s.theta, "phi": s.phi, "masses": m, "boundary_leaks": run.leaks.len()}));
        out.check_close(&format!("spinor{i}.branch_plus_equals_born"), m.branch_plus, m.born_plus, 1e-6);
        out.check_close(&format!("spinor{i}.branch_minus_equals_born"), m.branch_minus, m.born_minus, 1e-6);
        out.check_close(&format!("spinor{i}.mean_p_plus"), m.mean_p_plus, p.epsilon, 1e-6);
        out.check_close(&format!("spinor{i}.mean_p_minus"), m.mean_p_minus, -p.epsilon, 1e-6);
    }
    Ok(())
}

fn pointer(p: &PointerDensityConfig, out: &mut Outputs) -> Result<()> {
    let rho = DensityOperator::new(diag(&p.weights))?;
    let a = Observable::from_hermitian(&diag(&p.eigenvalues))?;
    let (lo, hi) = spread(&p.eigenvalues);
    let mut sorted = p.eigenvalues.clone();
    sorted.sort_by(f64::total_cmp);
    let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    for (i, &sigma) in p.sigma_q.iter().enumerate() {
        let probe = ProbeState::gaussian(sigma)?;
        let grid = linspace(p.epsilon * lo - p.margin_sigmas * sigma, p.epsilon * hi + p.margin_sigmas * sigma, p.n_points);
        let pd = pointer_density(&rho, &a, &probe, p.epsilon, &grid)?;
        out.csv(
            &format!("pointer_density_sigma{i}.csv"),
            &format!("final pointer density at sigma_q = {}", fmt_f64(sigma)),
            |w| pd.write_csv(w),
        )?;
        let closed = pointer_moments(&rho, &a, &probe, p.epsilon)?;
        let resolution = p.epsilon * gap / sigma;
        out.value(
            &format!("sigma{i}"),
            json!({"sigma_q": sigma, "resolution": resolution, "closed_form": closed}),
        );
        out.check_close(&format!("sigma{i}.integral"), pd.integral(), 1.0, 1e-6);
        out.check_close(&format!("sigma{i}.mean"), pd.moment(1), closed.mean_q, 1e-8);
        let m2 = closed.second_moment_q;
        out.check_close(&format!("sigma{i}.second_moment"), pd.moment(2), m2, 1e-8 * m2.max(1.0));
        // well-separated peaks integrate to the Born weights
        if resolution >= 12.0 {
            for (n, (&x, &w)) in p.eigenvalues.iter().zip(&p.weights).enumerate() {
                let c = p.epsilon * x;
                let (q, d): (Vec<f64>, Vec<f64>) = grid
                    .iter()
                    .zip(&pd.values)
                    .filter(|(q, _)| (**q - c).abs() <= 0.5 * p.epsilon * gap)
                    .map(|(q, d)| (*q, *d))
                    .unzip();
                out.check_close(&format!("sigma{i}.peak{n}"), vnm_core::probe::trapezoid(&q, &d), w, 1e-6);
            }
        }
    }
    Ok(())
}

fn reduced(p: &ReducedStateConfig, out: &mut Outputs) -> Result<()> {
    let n = p.eigenvalues.len();
    let rho = load_state(&p.state, n, p.seed)?;
    let a = observable(&p.eigenvalues, stream_id(&[p.seed, 1]))?;
    let probe = ProbeState::gaussian(p.sigma_q)?;
    let proj = luders(&rho, &a)?;
    out.json("initial_state.json", "initial system state", &rho)?;
    out.json("observable.json", "measured observable", &vnm_core::format::MatrixJson::from_matrix(&a.matrix()))?;
    out.json("luders_state.json", "projective-measurement (Luders) state", &proj)?;
    let mut rows = Vec::new();
    for (i, &eps) in p.epsilons.iter().enumerate() {
        let rf = reduced_state_after(&rho, &a, &probe, eps)?;
        out.json(&format!("reduced_state_eps{i}.json"), &format!("reduced state at epsilon = {}", fmt_f64(eps)), &rf)?;
        // P_n rho_f P_n' = g(eps (a_n - a_n')) P_n rho P_n'
        let mut damping: f64 = 0.0;
        for (pn, an) in a.projectors().iter().zip(a.eigenvalues()) {
            for (pm, am) in a.projectors().iter().zip(a.eigenvalues()) {
                let g = if an == am { 1.0 } else { (-(eps * (an - am)).powi(2) / (8.0 * p.sigma_q * p.sigma_q)).exp() };
                let lhs = pn * rf.matrix() * pm;
                let rhs = (pn * rho.matrix() * pm).scale(g);
                damping = damping.max(max_abs(&(lhs - rhs)));
            }
        }
        let to_luders = max_abs(&(rf.matrix() - proj.matrix()));
        out.check_below(&format!("eps{i}.block_damping_residual"), damping, 1e-12);
        out.check_close(&format!("eps{i}.trace"), trace(rf.matrix()).re, 1.0, 1e-12);
        if eps / p.sigma_q >= 1e3 {
            out.check_below(&format!("eps{i}.luders_distance"), to_luders, 1e-12);
        }
        rows.push([eps, eps / p.sigma_q, to_luders]);
    }
    out.csv("luders_distance.csv", "max-entry distance of the reduced state from the Luders state", |w| {
        vnm_core::format::write_csv_rows(w, "epsilon,epsilon_over_sigma,luders_distance", rows)
    })?;
    Ok(())
}

fn successive(p: &SuccessiveConfig, out: &mut Outputs) -> Result<()> {
    let n = p.eigenvalues_a.len();
    let rho = load_state(&p.state, n, p.seed)?;
    let a = observable(&p.eigenvalues_a, stream_id(&[p.seed, 1]))?;
    let b = observable(&p.eigenvalues_b, stream_id(&[p.seed, 2]))?;
    let probe1 = ProbeState::gaussian(p.sigma_q1)?;
    let probe2 = ProbeState::gaussian(p.sigma_q2)?;
    let kirk = kirkwood(&rho, &a, &b)?;
    let wig = wigner_joint(&rho, &a, &b)?;
    let born_a = a.born_weights(&rho)?;
    let (alo, ahi) = spread(&p.eigenvalues_a);
    let (blo, bhi) = spread(&p.eigenvalues_b);

    for (i, &eps1) in p.epsilon1s.iter().enumerate() {
        let ratio = eps1 / p.sigma_q1;
        let w = w_fn(&rho, &a, &b, &probe1, eps1)?;
        let wt = w_tilde_fn(&rho, &a, &b, &probe1, eps1)?;
        out.csv(&format!("w_eps{i}.csv"), &format!("W table at epsilon1 = {}", fmt_f64(eps1)), |f| w.write_csv(f))?;
        out.csv(&format!("w_tilde_eps{i}.csv"), &format!("W~ table at epsilon1 = {}", fmt_f64(eps1)), |f| {
            wt.write_csv(f)
        })?;
        let qq = w.weighted_sum().re;
        let pq = 2.0 * probe1.second_moment_p() * wt.weighted_sum().im;
        out.value(
            &format!("eps{i}"),
            json!({"epsilon1": eps1, "corr_qq": qq, "corr_pq": pq,
                   "kirkwood_distance": quasi_max_diff(&w, &kirk), "wigner_distance": quasi_max_diff(&w, &wig)}),
        );
        out.check_close(&format!("eps{i}.w_total"), w.total().re, 1.0, 1e-12);
        let marg = w.marginal_a();
        let worst = marg.iter().zip(&born_a).map(|(m, b)| (m - b).norm()).fold(0.0, f64::max);
        out.check_below(&format!("eps{i}.w_marginal_a_is_born"), worst, 1e-12);
        if ratio <= 1e-3 {
            out.check_below(&format!("eps{i}.w_near_kirkwood"), quasi_max_diff(&w, &kirk), 1e-6);
        }
        if ratio >= 1e3 {
            out.check_below(&format!("eps{i}.w_near_wigner"), quasi_max_diff(&w, &wig), 1e-5);
        }
        // tabulate the joint densities only while both pointers resolve on the grid
        if eps1 * (ahi - alo) <= 20.0 * p.sigma_q1 {
            let setup = TwoProbeSetup {
                probe1: &probe1,
                probe2: &probe2,
                epsilon1: eps1,
                epsilon2: p.epsilon2,
            };
            let m1 = 8.0 * p.sigma_q1;
            let m2 = 8.0 * p.sigma_q2;
            let q1 = linspace(eps1 * alo - m1, eps1 * ahi + m1, p.grid_points);
            let q2 = linspace(p.epsilon2 * blo - m2, p.epsilon2 * bhi + m2, p.grid_points);
            let sp = 8.0 / (2.0 * p.sigma_q1);
            let p1 = linspace(-sp, sp, p.grid_points);
            let jq = joint_pointer_density(&rho, &a, &b, &setup, &q1, &q2)?;
            let jp = joint_momentum_position_density(&rho, &a, &b, &setup, &p1, &q2)?;
            out.csv(&format!("joint_q1q2_eps{i}.csv"), "joint density of the two pointer positions", |f| {
                jq.write_csv(f, "q1,q2,p")
            })?;
            out.csv(&format!("joint_p1q2_eps{i}.csv"), "joint density of the first pointer momentum and second position", |f| {
                jp.write_csv(f, "p1,q2,p")
            })?;
            let scale = eps1 * p.epsilon2;
            out.check_close(&format!("eps{i}.joint_q1q2_integral"), jq.integral(), 1.0, 1e-8);
            out.check_close(&format!("eps{i}.grid_q1q2_vs_corr_qq"), jq.expectation(|x, y| x * y) / scale, qq, 1e-6);
            out.check_close(&format!("eps{i}.grid_p1q2_vs_corr_pq"), jp.expectation(|x, y| x * y) / scale, pq, 1e-6);
        }
    }
    Ok(())
}

fn quasi(p: &QuasiConfig, out: &mut Outputs) -> Result<()> {
    let e0 = CVector::from_vec(vec![c64(1., 0.), c64(0., 0.)]);
    let e1 = CVector::from_vec(vec![c64(0., 0.), c64(1., 0.)]);
    let plus = CVector::from_vec(vec![c64(1., 0.), c64(1., 0.)]).unscale(SQRT_2);
    let minus = CVector::from_vec(vec![c64(1., 0.), c64(-1., 0.)]).unscale(SQRT_2);
    // A = |0><0|, B = |+)(+|
    let a = Observable::from_eigenbasis(&[0.0, 1.0], &[e1, e0])?;
    let b = Observable::from_eigenbasis(&[0.0, 1.0], &[minus, plus])?;
    let psi = CVector::from_vec(vec![c64(p.theta.sin(), 0.), c64(-p.theta.cos(), 0.)]);
    let rho = DensityOperator::pure(&psi)?;
    let probe = ProbeState::gaussian(p.sigma_q)?;

    let kirk = kirkwood(&rho, &a, &b)?;
    let mh = margenau_hill(&rho, &a, &b)?;
    let wig = wigner_joint(&rho, &a, &b)?;
    out.csv("kirkwood.csv", "Kirkwood quasi-probability", |f| kirk.write_csv(f))?;
    out.csv("margenau_hill.csv", "Margenau-Hill quasi-probability", |f| mh.write_csv(f))?;
    out.csv("wigner.csv", "strong-coupling joint probability", |f| wig.write_csv(f))?;
    let (min_eig, _) = negativity_witness(&a, &b, 1, 1)?;
    let s_expect = rho.expectation(&s_operator(&a, &b, 1, 1)).re;
    let mh_min = mh.values.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    out.value("negativity_witness_min_eigenvalue", min_eig);
    out.value("s_expectation", s_expect);
    out.value("margenau_hill_min", mh_min);
    out.value("margenau_hill_negative", mh_min < 0.0);
    out.check_close("witness_min_eigenvalue", min_eig, 0.25 * (1.0 - SQRT_2), 1e-12);
    out.check_close("margenau_hill_11_is_s_expectation", mh.get(1, 1).re, s_expect, 1e-12);
    out.check_at_least("s_expectation_above_witness", s_expect, min_eig - 1e-12);
    let wmin = wig.values.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    out.check_at_least("wigner_nonnegative", wmin, -1e-15);

    for (i, &eps) in p.epsilon1s.iter().enumerate() {
        let w = w_fn(&rho, &a, &b, &probe, eps)?;
        out.csv(&format!("w_eps{i}.csv"), &format!("W table at epsilon1 = {}", fmt_f64(eps)), |f| w.write_csv(f))?;
        let qq = w.weighted_sum().re;
        out.value(&format!("eps{i}"), json!({"epsilon1": eps, "corr_qq": qq}));
        if eps / p.sigma_q <= 1e-6 {
            out.check_close(&format!("eps{i}.weak_corr_qq_is_margenau_hill"), qq, mh.weighted_sum().re, 1e-12);
        }
    }
    Ok(())
}

fn tomography(p: &TomographyConfig, out: &mut Outputs) -> Result<()> {
    let rho = load_state(&p.state, p.dim, p.seed)?;
    let bp = load_basis(&p.basis, p.dim)?;
    let probe = ProbeState::gaussian(p.sigma_q)?;
    let cs = simulate_correlations(&rho, &bp, &probe, p.epsilon1)?;
    let lp = LambdaPair::from_probe(&probe, p.epsilon1)?;
    let rec = reconstruct(&cs, &lp)?;
    out.json("state.json", "true state", &rho)?;
    out.json("correlations.json", "exact x and y~ tables indexed [mu][k]", &cs)?;
    out.json("reconstruction.json", "reconstructed state", &rec)?;
    out.value("lambda", json!({"re": lp.lambda.re, "im": lp.lambda.im}));
    out.value("conditioning_warnings", rec.warnings.len());
    let err = max_abs(&(&rec.matrix - rho.matrix()));
    out.check_below("round_trip_max_error", err, 1e-10);
    let consistent = cs.check_consistency().is_ok();
    out.check_close("correlations_consistent", consistent as u8 as f64, 1.0, 0.0);
    if p.dim == 2 && p.basis == BasisSpec::ComputationalFourier {
        let y = recover_y(&cs, &lp)?;
        let minimal = reconstruct_n2_minimal(cs.x[(0, 0)], cs.x[(1, 0)], y[(1, 0)], lp.lambda.re)?;
        out.json("reconstruction_minimal.json", "two-level state from three correlations", &minimal)?;
        out.check_below("minimal_vs_full", max_abs(&(minimal.matrix() - &rec.matrix)), 1e-12);
    }
    Ok(())
}

fn ensemble(p: &EnsembleConfig, out: &mut Outputs) -> Result<()> {
    let rho = load_state(&p.state, p.dim, p.seed)?;
    let bp = load_basis(&p.basis, p.dim)?;
    let probe1 = GaussianProbe::new(p.sigma_q1)?;
    let probe2 = GaussianProbe::new(p.sigma_q2)?;
    let spec = EnsembleSpec {
        grid_points: p.grid_points,
        ..EnsembleSpec::new(probe1, probe2, p.epsilon1, p.epsilon2, p.n_per_setting, stream_id(&[p.seed, 3]))
    };
    let et = ensemble_tomography(&rho, &bp, &spec)?;
    let state1 = ProbeState::Gaussian(probe1);
    let exact = simulate_correlations(&rho, &bp, &state1, p.epsilon1)?;
    let lp = LambdaPair::from_probe(&state1, p.epsilon1)?;
    let rec = reconstruct(&et.correlations, &lp)?;
    let cs = &et.correlations;

    let mut rows = Vec::new();
    let (mut covered, mut total) = (0usize, 0usize);
    for k in 0..p.dim {
        for mu in 0..p.dim {
            let r = [
                mu as f64,
                k as f64,
                cs.x[(mu, k)],
                et.x_std_error[(mu, k)],
                exact.x[(mu, k)],
                cs.y_tilde[(mu, k)],
                et.y_tilde_std_error[(mu, k)],
                exact.y_tilde[(mu, k)],
            ];
            for (est, se, ex) in [(r[2], r[3], r[4]), (r[5], r[6], r[7])] {
                total += 1;
                if (est - ex).abs() <= 4.0 * se {
                    covered += 1;
                }
            }
            rows.push(r);
        }
    }
    out.csv("correlations.csv", "sampled and exact correlations with standard errors", |w| {
        vnm_core::format::write_csv_rows(w, "mu,k,x,x_std_error,x_exact,y_tilde,y_tilde_std_error,y_tilde_exact", rows)
    })?;
    out.json("state.json", "true state", &rho)?;
    out.json("correlations.json", "sampled x and y~ tables indexed [mu][k]", cs)?;
    out.json("reconstruction.json", "state reconstructed from the sampled correlations", &rec)?;
    let frob = (&rec.matrix - rho.matrix()).norm();
    out.value("n_per_setting", p.n_per_setting);
    out.value("frobenius_error", frob);
    out.value("pre_repair_hermiticity_residual", rec.pre_repair_hermiticity_residual);
    out.check_below("frobenius_error", frob, 0.05);
    out.check_at_least("four_sigma_coverage", covered as f64 / total as f64, 0.95);
    Ok(())
}

fn conditioning(p: &ConditioningConfig, out: &mut Outputs) -> Result<()> {
    let bp = BasisPair::computational_fourier(p.dim);
    let probe = GaussianProbe::new(p.sigma_q)?;
    let grid: Vec<f64> = p.epsilon_over_sigma.iter().map(|r| r * p.sigma_q).collect();
    let rows = conditioning_report(&bp, &probe, &grid, p.noise_level, p.trials, p.seed)?;
    out.csv("conditioning.csv", "mean reconstruction error against coupling", |w| {
        vnm_core::format::write_csv_rows(
            w,
            "epsilon1,epsilon_over_sigma,lambda,mean_error,std_error",
            rows.iter().map(|r| [r.epsilon1, r.epsilon_over_sigma, r.lambda, r.mean_error, r.std_error]),
        )
    })?;
    out.value("rows", &rows);
    if p.noise_level > 0.0 {
        let lo = rows.iter().find(|r| r.epsilon_over_sigma >= 0.5);
        let hi = rows.iter().max_by(|a, b| a.epsilon_over_sigma.total_cmp(&b.epsilon_over_sigma));
        if let (Some(lo), Some(hi)) = (lo, hi) {
            if hi.epsilon_over_sigma > lo.epsilon_over_sigma {
                // error grows at least like 1/lambda, halved for the diagonal share
                let bound = ((hi.epsilon_over_sigma.powi(2) - lo.epsilon_over_sigma.powi(2)) / 8.0).exp() / 2.0;
                out.value("amplification_bound", bound);
                out.check_at_least("error_amplification", hi.mean_error / lo.mean_error, bound);
            }
        }
        let mut strong: Vec<_> = rows.iter().filter(|r| r.epsilon_over_sigma >= 1.0).collect();
        strong.sort_by(|a, b| a.epsilon_over_sigma.total_cmp(&b.epsilon_over_sigma));
        let drops = strong.windows(2).filter(|w| w[1].mean_error < w[0].mean_error).count();
        out.check_below("error_decreases_past_unit_coupling", drops as f64, 0.0);
    }
    Ok(())
}

fn transform(p: &TransformConfig, out: &mut Outputs) -> Result<()> {
    let bp = load_basis(&p.basis, p.dim)?;
    let probe = ProbeState::gaussian(p.sigma_q)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..p.instances {
        let rho = random_density(p.dim, stream_id(&[p.seed, i as u64, 0]));
        let o = random_hermitian(p.dim, stream_id(&[p.seed, i as u64, 1]));
        let direct = rho.expectation(&o).re;
        for &eps in &p.epsilon1s {
            let q = expectation_via_quasi(&rho, &o, &bp, &probe, eps)?;
            let residual = (q.value - direct).abs().max(q.imaginary_residual);
            worst = worst.max(residual);
            rows.push([i as f64, eps, direct, q.value, q.imaginary_residual]);
        }
    }
    out.csv("transform_check.csv", "Tr(rho O) directly and through the W11 quasi-probability", |w| {
        vnm_core::format::write_csv_rows(w, "instance,epsilon1,direct,via_quasi,imaginary_residual", rows)
    })?;
    out.check_below("worst_residual", worst, 1e-9);
    Ok(())
}

/// Writes a one-line machine-readable error document.
pub fn write_error_json(mut w: impl Write, kind: &str, message: &str, errors: &[ConfigError]) -> io::Result<()> {
    let doc = json!({"status": "error", "kind": kind, "message": message, "errors": errors});
    writeln!(w, "{doc}")
}
