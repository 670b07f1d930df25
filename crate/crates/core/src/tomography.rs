//! State reconstruction from successive projector measurements over a pair
//! of mutually non-orthogonal bases, and the generalized observable
//! transform built on the same quasi-probability.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hilbert::{
    BasisPair, CMatrix, DensityOperator, INPUT_HERMITIAN_TOL, hermitian_part, hermiticity_residual,
    random_density, trace,
};
use crate::probe::{GaussianProbe, ProbeState};
use crate::rng::{stream_id, stream_rng};

pub type RMatrix = DMatrix<f64>;

/// Below this `|lambda|` off-diagonal noise is amplified by more than `1e3`.
pub const CONDITIONING_THRESHOLD: f64 = 1e-3;
const SINGULAR_TOL: f64 = 1e-12;
const CONSISTENCY_TOL: f64 = 1e-8;

/// `lambda(eps1)` and `lambda~(eps1)` of the first probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaPair {
    pub lambda: Complex64,
    pub lambda_tilde: Complex64,
}

impl LambdaPair {
    pub fn new(lambda: Complex64, lambda_tilde: Complex64) -> Self {
        LambdaPair { lambda, lambda_tilde }
    }

    pub fn from_probe(probe: &ProbeState, epsilon1: f64) -> Result<Self> {
        Ok(LambdaPair {
            lambda: probe.lambda(epsilon1),
            lambda_tilde: probe.lambda_tilde(epsilon1)?,
        })
    }

    /// `lambda lambda~*`, whose real part is the inversion determinant.
    pub fn cross(&self) -> Complex64 {
        self.lambda * self.lambda_tilde.conj()
    }
}

/// Measured tables `x[(mu, k)]` and `y~[(mu, k)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet {
    pub basis_pair: BasisPair,
    pub epsilon1: f64,
    pub sigma_q1: f64,
    pub x: RMatrix,
    pub y_tilde: RMatrix,
}

impl CorrelationSet {
    pub fn dim(&self) -> usize {
        self.basis_pair.dim()
    }

    /// `sum_mu x[(mu, k)]`, which equals `<k|rho|k>`.
    pub fn diagonal(&self) -> Vec<f64> {
        self.x.column_iter().map(|c| c.sum()).collect()
    }

    /// Checks that each diagonal sum lies in `[0, 1]` and that they add to
    /// one, within `1e-8`. Finite-ensemble estimates are not expected to pass.
    pub fn check_consistency(&self) -> Result<()> {
        let diag = self.diagonal();
        if let Some((k, d)) = diag
            .iter()
            .enumerate()
            .find(|(_, d)| **d < -CONSISTENCY_TOL || **d > 1.0 + CONSISTENCY_TOL)
        {
            return Err(Error::InvalidArgument(format!("sum_mu x[mu][{k}] = {d} is not in [0, 1]")));
        }
        let total: f64 = diag.iter().sum();
        if (total - 1.0).abs() > CONSISTENCY_TOL {
            return Err(Error::InvalidArgument(format!("sum of x = {total}, expected 1")));
        }
        Ok(())
    }
}

fn rows_of(m: &RMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], n: usize, name: &str) -> std::result::Result<RMatrix, String> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!("{name} must be a {n}x{n} table"));
    }
    Ok(RMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrelationSetJson {
    epsilon1: f64,
    sigma_q1: f64,
    x: Vec<Vec<f64>>,
    y_tilde: Vec<Vec<f64>>,
    basis_pair: BasisPair,
}

impl Serialize for CorrelationSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CorrelationSetJson {
            epsilon1: self.epsilon1,
            sigma_q1: self.sigma_q1,
            x: rows_of(&self.x),
            y_tilde: rows_of(&self.y_tilde),
            basis_pair: self.basis_pair.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CorrelationSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = CorrelationSetJson::deserialize(d)?;
        let n = raw.basis_pair.dim();
        Ok(CorrelationSet {
            x: from_rows(&raw.x, n, "x").map_err(D::Error::custom)?,
            y_tilde: from_rows(&raw.y_tilde, n, "y_tilde").map_err(D::Error::custom)?,
            basis_pair: raw.basis_pair,
            epsilon1: raw.epsilon1,
            sigma_q1: raw.sigma_q1,
        })
    }
}

/// `G_kk' = 1` for `k = k'`, `lambda` otherwise.
pub fn g_factor(lambda: Complex64, k: usize, k_prime: usize) -> Complex64 {
    if k == k_prime {
        Complex64::new(1.0, 0.0)
    } else {
        lambda
    }
}

/// `<k|rho|k'>` for every pair.
fn k_elements(rho: &DensityOperator, bp: &BasisPair) -> CMatrix {
    let n = bp.dim();
    CMatrix::from_fn(n, n, |k, kp| bp.k_element(rho.matrix(), k, kp))
}

fn w11_from_elements(elements: &CMatrix, bp: &BasisPair, k: usize, mu: usize, lambda: Complex64) -> Complex64 {
    // Tr(rho P_k' P_mu P_k) = <k|rho|k'> <k'|mu) (mu|k>
    let mu_k = bp.overlap(mu, k);
    (0..bp.dim())
        .map(|kp| g_factor(lambda, k, kp) * elements[(k, kp)] * bp.overlap(mu, kp).conj() * mu_k)
        .sum()
}

/// `W11(mu <- k) = Tr(rho P_k P_mu P_k) + lambda sum_{k' != k} Tr(rho P_k' P_mu P_k)`.
pub fn w11_forward(rho: &DensityOperator, bp: &BasisPair, k: usize, mu: usize, lambda: Complex64) -> Complex64 {
    w11_from_elements(&k_elements(rho, bp), bp, k, mu, lambda)
}

/// The full `W11` table indexed `(mu, k)`.
pub fn w11_table(rho: &DensityOperator, bp: &BasisPair, lambda: Complex64) -> CMatrix {
    let elements = k_elements(rho, bp);
    let n = bp.dim();
    CMatrix::from_fn(n, n, |mu, k| w11_from_elements(&elements, bp, k, mu, lambda))
}

fn check_dim(rho: &DensityOperator, bp: &BasisPair) -> Result<()> {
    if rho.dim() != bp.dim() {
        return Err(Error::DimensionMismatch {
            expected: bp.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// Exact-expectation forward model: `x = Re W11(lambda)`,
/// `y~ = Im W11(lambda~)`.
pub fn simulate_correlations(
    rho: &DensityOperator,
    bp: &BasisPair,
    probe1: &ProbeState,
    epsilon1: f64,
) -> Result<CorrelationSet> {
    check_dim(rho, bp)?;
    let lp = LambdaPair::from_probe(probe1, epsilon1)?;
    Ok(correlations_for(rho, bp, &lp, epsilon1, probe1.sigma_q()))
}

fn correlations_for(rho: &DensityOperator, bp: &BasisPair, lp: &LambdaPair, epsilon1: f64, sigma_q1: f64) -> CorrelationSet {
    let w = w11_table(rho, bp, lp.lambda);
    let wt = w11_table(rho, bp, lp.lambda_tilde);
    CorrelationSet {
        basis_pair: bp.clone(),
        epsilon1,
        sigma_q1,
        x: w.map(|z| z.re),
        y_tilde: wt.map(|z| z.im),
    }
}

/// `Im W11` recovered from the measured `x` and `y~`.
pub fn recover_y(cs: &CorrelationSet, lp: &LambdaPair) -> Result<RMatrix> {
    let cross = lp.cross();
    if cross.re.abs() <= SINGULAR_TOL {
        return Err(Error::SingularInversion(format!(
            "Re(lambda lambda~*) = {:e}",
            cross.re
        )));
    }
    let n = cs.dim();
    let diag = cs.diagonal();
    let a = cross.im / cross.re;
    let c = lp.lambda.norm_sqr() / cross.re;
    Ok(RMatrix::from_fn(n, n, |mu, k| {
        let strong = cs.basis_pair.overlap(mu, k).norm_sqr() * diag[k];
        a * (cs.x[(mu, k)] - strong) + c * cs.y_tilde[(mu, k)]
    }))
}

/// Off-diagonal reconstruction divides by `|lambda|` below the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditioningWarning {
    pub lambda_abs: f64,
}

/// Reconstructed matrix after Hermitization and trace normalization.
/// Positivity is not enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub matrix: CMatrix,
    pub pre_repair_hermiticity_residual: f64,
    pub trace_residual: f64,
    pub warnings: Vec<ConditioningWarning>,
}

impl Reconstruction {
    /// Validates as a density operator at `tol`.
    pub fn into_density(self, tol: f64) -> Result<DensityOperator> {
        DensityOperator::from_approx(self.matrix, tol)
    }
}

#[derive(Serialize)]
struct ReconstructionJson<'a> {
    #[serde(flatten)]
    matrix: crate::format::MatrixJson,
    pre_repair_hermiticity_residual: f64,
    trace_residual: f64,
    warnings: &'a [ConditioningWarning],
}

impl Serialize for Reconstruction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReconstructionJson {
            matrix: crate::format::MatrixJson::from_matrix(&self.matrix),
            pre_repair_hermiticity_residual: self.pre_repair_hermiticity_residual,
            trace_residual: self.trace_residual,
            warnings: &self.warnings,
        }
        .serialize(s)
    }
}

/// `<k|rho|k'> = sum_mu W11(mu, k) (mu|k') / (mu|k> / G_kk'`, with
/// `W11 = x + i y`.
pub fn reconstruct(cs: &CorrelationSet, lp: &LambdaPair) -> Result<Reconstruction> {
    let y = recover_y(cs, lp)?;
    let n = cs.dim();
    let bp = &cs.basis_pair;
    let w = CMatrix::from_fn(n, n, |mu, k| Complex64::new(cs.x[(mu, k)], y[(mu, k)]));

    let mut warnings = Vec::new();
    if n > 1 && lp.lambda.norm() < CONDITIONING_THRESHOLD {
        warnings.push(ConditioningWarning {
            lambda_abs: lp.lambda.norm(),
        });
    }

    // matrix in the k basis, then rotated to the computational basis
    let in_k = CMatrix::from_fn(n, n, |k, kp| {
        let s: Complex64 = (0..n)
            .map(|mu| w[(mu, k)] * bp.overlap(mu, kp) / bp.overlap(mu, k))
            .sum();
        s / g_factor(lp.lambda, k, kp)
    });
    let u = CMatrix::from_fn(n, n, |r, k| bp.basis_k()[k][r]);
    let raw = &u * in_k * u.adjoint();

    let pre_repair_hermiticity_residual = hermiticity_residual(&raw);
    let trace_residual = (trace(&raw) - 1.0).norm();
    let h = hermitian_part(&raw);
    let tr = trace(&h).re;
    Ok(Reconstruction {
        matrix: h.unscale(tr),
        pre_repair_hermiticity_residual,
        trace_residual,
        warnings,
    })
}

/// `<k|rho|k> = sum_mu x[(mu, k)]`, available at any coupling strength.
pub fn diagonal_from_correlations(cs: &CorrelationSet) -> Vec<f64> {
    cs.diagonal()
}

/// Two-level reconstruction from three correlations, with `|0>, |1>` the
/// `k` basis and `|+), |-)` the `mu` basis (`mu = 0` is `+`):
/// `rho00 = x+0 + x-0`, `rho01 = (x+0 - x-0 - 2i y-0) / g`.
pub fn reconstruct_n2_minimal(x_plus0: f64, x_minus0: f64, y_minus0: f64, g_eps: f64) -> Result<DensityOperator> {
    if g_eps.abs() <= SINGULAR_TOL {
        return Err(Error::SingularInversion(format!("g(eps1) = {g_eps:e}")));
    }
    let r00 = x_plus0 + x_minus0;
    let r01 = Complex64::new(x_plus0 - x_minus0, -2.0 * y_minus0) / g_eps;
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(r00, 0.0), r01, r01.conj(), Complex64::new(1.0 - r00, 0.0)],
    );
    DensityOperator::new(m)
}

/// `O(mu, k) = sum_k' (mu|k') / (mu|k> <k'|O|k> / G_k'k`.
pub fn transform_observable(o: &CMatrix, bp: &BasisPair, lambda: Complex64) -> Result<CMatrix> {
    let n = bp.dim();
    if o.nrows() != n || o.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: o.nrows(),
        });
    }
    let residual = hermiticity_residual(o);
    if residual > INPUT_HERMITIAN_TOL {
        return Err(Error::NonHermitianInput { residual });
    }
    if n > 1 && lambda.norm() <= SINGULAR_TOL {
        return Err(Error::SingularInversion(format!("|lambda| = {:e}", lambda.norm())));
    }
    let elements = CMatrix::from_fn(n, n, |kp, k| bp.k_element(o, kp, k));
    Ok(CMatrix::from_fn(n, n, |mu, k| {
        (0..n)
            .map(|kp| bp.overlap(mu, kp) / bp.overlap(mu, k) * elements[(kp, k)] / g_factor(lambda, kp, k))
            .sum()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiExpectation {
    pub value: f64,
    pub imaginary_residual: f64,
}

/// `sum_{k mu} W11(mu, k) O(mu, k)`, which equals `Tr(rho O)`.
pub fn expectation_via_quasi(
    rho: &DensityOperator,
    o: &CMatrix,
    bp: &BasisPair,
    probe1: &ProbeState,
    epsilon1: f64,
) -> Result<QuasiExpectation> {
    check_dim(rho, bp)?;
    let lambda = probe1.lambda(epsilon1);
    let t = transform_observable(o, bp, lambda)?;
    let w = w11_table(rho, bp, lambda);
    let s: Complex64 = w.iter().zip(t.iter()).map(|(a, b)| a * b).sum();
    Ok(QuasiExpectation {
        value: s.re,
        imaginary_residual: s.im.abs(),
    })
}

/// Mean reconstruction error at one coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditioningRow {
    pub epsilon1: f64,
    pub epsilon_over_sigma: f64,
    pub lambda: f64,
    /// Mean Frobenius error over trials; infinite when the inversion is
    /// singular.
    pub mean_error: f64,
    pub std_error: f64,
}

/// Noise sensitivity of the reconstruction across couplings. Each trial
/// draws a random state (the same state at every coupling), perturbs its
/// exact correlations with i.i.d. Gaussian noise of the given level and
/// records the Frobenius error of the reconstruction.
pub fn conditioning_report(
    bp: &BasisPair,
    probe1: &GaussianProbe,
    epsilon1_grid: &[f64],
    noise_level: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<ConditioningRow>> {
    conditioning_report_with(Execution::default(), bp, probe1, epsilon1_grid, noise_level, trials, seed)
}

pub fn conditioning_report_with(
    exec: Execution,
    bp: &BasisPair,
    probe1: &GaussianProbe,
    epsilon1_grid: &[f64],
    noise_level: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<ConditioningRow>> {
    if !(noise_level >= 0.0) {
        return Err(Error::InvalidArgument("noise_level must be >= 0".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let probe = ProbeState::Gaussian(*probe1);
    let pairs = epsilon1_grid
        .iter()
        .map(|&e| LambdaPair::from_probe(&probe, e))
        .collect::<Result<Vec<_>>>()?;
    let n = bp.dim();

    // errors[trial][eps]
    let errors: Vec<Vec<f64>> = exec
        .map(trials, |trial| {
            let rho = random_density(n, stream_id(&[seed, trial as u64]));
            pairs
                .iter()
                .zip(epsilon1_grid)
                .enumerate()
                .map(|(e_idx, (lp, &eps))| {
                    let mut cs = correlations_for(&rho, bp, lp, eps, probe1.sigma_q());
                    let mut rng = stream_rng(seed, &[trial as u64, e_idx as u64]);
                    for v in cs.x.iter_mut().chain(cs.y_tilde.iter_mut()) {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *v += noise_level * z;
                    }
                    match reconstruct(&cs, lp) {
                        Ok(r) => Ok((r.matrix - rho.matrix()).norm()),
                        Err(Error::SingularInversion(_)) => Ok(f64::INFINITY),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .into_iter()
        .collect::<Result<_>>()?;

    Ok(epsilon1_grid
        .iter()
        .enumerate()
        .map(|(e_idx, &eps)| {
            let col: Vec<f64> = errors.iter().map(|row| row[e_idx]).collect();
            let mean = col.iter().sum::<f64>() / trials as f64;
            let std_error = if trials > 1 && mean.is_finite() {
                let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
                (var / trials as f64).sqrt()
            } else {
                0.0
            };
            ConditioningRow {
                epsilon1: eps,
                epsilon_over_sigma: eps / probe1.sigma_q(),
                lambda: pairs[e_idx].lambda.re,
                mean_error: mean,
                std_error,
            }
        })
        .collect())
}
