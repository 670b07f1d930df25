//! Two successive measurements: the auxiliary `W` and `W~` tables, the two
//! detectable pointer correlations, their strong and weak coupling limits,
//! joint pointer densities and weak values.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::format::{fmt_f64, write_csv_rows};
use crate::hilbert::{
    CMatrix, CVector, DensityOperator, Observable, hermitian_eigen, projector,
};
use crate::probe::{GaussianProbe, ProbeState};
use crate::single::{check_span, reduced_state_after};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuasiKind {
    W,
    WTilde,
    Wigner,
    Kirkwood,
    MargenauHill,
}

/// Complex table indexed `(m, n)` by the eigenvalues `(b_m, a_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiDistribution {
    pub kind: QuasiKind,
    pub values: CMatrix,
    pub eigenvalues_a: Vec<f64>,
    pub eigenvalues_b: Vec<f64>,
    pub epsilon1: Option<f64>,
}

impl QuasiDistribution {
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.values[(m, n)]
    }

    pub fn total(&self) -> Complex64 {
        self.values.iter().sum()
    }

    /// `sum_m W_mn` for each `a_n`.
    pub fn marginal_a(&self) -> Vec<Complex64> {
        self.values.column_iter().map(|c| c.iter().sum()).collect()
    }

    /// `sum_n W_mn` for each `b_m`.
    pub fn marginal_b(&self) -> Vec<Complex64> {
        self.values.row_iter().map(|r| r.iter().sum()).collect()
    }

    /// `sum_{mn} a_n b_m W_mn`.
    pub fn weighted_sum(&self) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (m, b) in self.eigenvalues_b.iter().enumerate() {
            for (n, a) in self.eigenvalues_a.iter().enumerate() {
                s += self.values[(m, n)] * (a * b);
            }
        }
        s
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "m,n,b_m,a_n,re,im")?;
        for (m, b) in self.eigenvalues_b.iter().enumerate() {
            for (n, a) in self.eigenvalues_a.iter().enumerate() {
                let z = self.values[(m, n)];
                let cols = [*b, *a, z.re, z.im].map(fmt_f64);
                writeln!(w, "{m},{n},{}", cols.join(","))?;
            }
        }
        Ok(())
    }
}

/// `T[n'][m][n] = Tr(rho P_{a_n'} P_{b_m} P_{a_n})`.
struct TripleTraces {
    na: usize,
    nb: usize,
    t: Vec<Complex64>,
}

impl TripleTraces {
    fn new(rho: &DensityOperator, a: &Observable, b: &Observable) -> Result<Self> {
        for d in [a.dim(), b.dim()] {
            if d != rho.dim() {
                return Err(Error::DimensionMismatch {
                    expected: rho.dim(),
                    found: d,
                });
            }
        }
        let (na, nb) = (a.len(), b.len());
        let mut t = vec![Complex64::new(0.0, 0.0); na * nb * na];
        for (m, pb) in b.projectors().iter().enumerate() {
            for (n, pa) in a.projectors().iter().enumerate() {
                // Tr(P_n' X) with X = P_m P_n rho
                let x = pb * pa * rho.matrix();
                for (np, pap) in a.projectors().iter().enumerate() {
                    t[(np * nb + m) * na + n] = trace_product(pap, &x);
                }
            }
        }
        Ok(TripleTraces { na, nb, t })
    }

    fn get(&self, np: usize, m: usize, n: usize) -> Complex64 {
        self.t[(np * self.nb + m) * self.na + n]
    }
}

/// `Tr(A B)` without forming the product.
fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

fn weighted_table(
    rho: &DensityOperator,
    a: &Observable,
    b: &Observable,
    kind: QuasiKind,
    epsilon1: f64,
    weight: impl Fn(f64) -> Result<Complex64>,
) -> Result<QuasiDistribution> {
    let tt = TripleTraces::new(rho, a, b)?;
    let ea = a.eigenvalues();
    let mut factors = vec![Complex64::new(0.0, 0.0); tt.na * tt.na];
    for n in 0..tt.na {
        for np in 0..tt.na {
            factors[n * tt.na + np] = weight(epsilon1 * (ea[n] - ea[np]))?;
        }
    }
    let values = CMatrix::from_fn(tt.nb, tt.na, |m, n| {
        (0..tt.na)
            .map(|np| factors[n * tt.na + np] * tt.get(np, m, n))
            .sum()
    });
    Ok(QuasiDistribution {
        kind,
        values,
        eigenvalues_a: ea.to_vec(),
        eigenvalues_b: b.eigenvalues().to_vec(),
        epsilon1: Some(epsilon1),
    })
}

/// `W_{b_m a_n}(eps1) = sum_n' lambda(eps1 (a_n - a_n')) Tr(rho P_n' P_m P_n)`.
pub fn w_fn(
    rho: &DensityOperator,
    a: &Observable,
    b: &Observable,
    probe1: &ProbeState,
    epsilon1: f64,
) -> Result<QuasiDistribution> {
    weighted_table(rho, a, b, QuasiKind::W, epsilon1, |beta| Ok(probe1.lambda(beta)))
}

/// As [`w_fn`] with `lambda~` in place of `lambda`.
pub fn w_tilde_fn(
    rho: &DensityOperator,
    a: &Observable,
    b: &Observable,
    probe1: &ProbeState,
    epsilon1: f64,
) -> Result<QuasiDistribution> {
    weighted_table(rho, a, b, QuasiKind::WTilde, epsilon1, |beta| probe1.lambda_tilde(beta))
}

/// `<Q1 Q2> / (eps1 eps2) = Re sum a_n b_m W_{b_m a_n}(eps1)`.
pub fn corr_qq(
    rho: &DensityOperator,
    a: &Observable,
    b: &Observable,
    probe1: &ProbeState,
    epsilon1: f64,
) -> Result<f64> {
    Ok(w_fn(rho, a, b, probe1, epsilon1)?.weighted_sum().re)
}

/// `<P1 Q2> / (eps1 eps2) = 2 <P1^2> Im sum a_n b_m W~_{b_m a_n}(eps1)`;
/// the prefactor is `1 / (2 sigma_Q^2)` for a Gaussian probe.
pub fn corr_pq(
    rho: &DensityOperator,
    a: &Observable,
    b: &Observable,
    probe1: &ProbeState,
    epsilon1: f64,
) -> Result<f64> {
    let wt = w_tilde_fn(rho, a, b, probe1, epsilon1)?;
    Ok(2.0 * probe1.second_moment_p() * wt.weighted_sum().im)
}

fn limit_table(
    rho: &DensityOperator,
    a: &Observable,
    b: &Observable,
    kind: QuasiKind,
    f: impl Fn(&TripleTraces, usize, usize) -> Complex64,
) -> Result<QuasiDistribution> {
    let tt = TripleTraces::new(rho, a, b)?;
    let values = CMatrix::from_fn(tt.nb, tt.na, |m, n| f(&tt, m, n));
    Ok(QuasiDistribution {
        kind,
        values,
        eigenvalues_a: a.eigenvalues().to_vec(),
        eigenvalues_b: b.eigenvalues().to_vec(),
        epsilon1: None,
    })
}

/// Strong-coupling limit `Tr(rho P_n P_m P_n)`.
pub fn wigner_joint(rho: &DensityOperator, a: &Observable, b: &Observable) -> Result<QuasiDistribution> {
    limit_table(rho, a, b, QuasiKind::Wigner, |tt, m, n| {
        Complex64::new(tt.get(n, m, n).re, 0.0)
    })
}

/// Weak-coupling limit `Tr(rho P_m P_n)`.
pub fn kirkwood(rho: &DensityOperator, a: &Observable, b: &Observable) -> Result<QuasiDistribution> {
    limit_table(rho, a, b, QuasiKind::Kirkwood, |tt, m, n| {
        (0..tt.na).map(|np| tt.get(np, m, n)).sum()
    })
}

/// `Re Tr(rho P_m P_n) = Tr(rho S_mn)`, `S_mn = (P_m P_n + P_n P_m) / 2`.
pub fn margenau_hill(rho: &DensityOperator, a: &Observable, b: &Observable) -> Result<QuasiDistribution> {
    let mut k = kirkwood(rho, a, b)?;
    k.values.iter_mut().for_each(|z| z.im = 0.0);
    k.kind = QuasiKind::MargenauHill;
    Ok(k)
}

/// `S_mn = (P_{b_m} P_{a_n} + P_{a_n} P_{b_m}) / 2`.
pub fn s_operator(a: &Observable, b: &Observable, m: usize, n: usize) -> CMatrix {
    let (pa, pb) = (a.projector(n), b.projector(m));
    (pb * pa + pa * pb).scale(0.5)
}

/// Smallest eigenvalue of `S_mn` and its eigenvector. A negative value
/// means the Margenau-Hill entry `(m, n)` is negative for that state.
pub fn negativity_witness(a: &Observable, b: &Observable, m: usize, n: usize) -> Result<(f64, CVector)> {
    if m >= b.len() || n >= a.len() {
        return Err(Error::InvalidArgument(format!(
            "index (m={m}, n={n}) out of range ({}, {})",
            b.len(),
            a.len()
        )));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (values, vectors) = hermitian_eigen(&s_operator(a, b, m, n));
    Ok((values[0], vectors.column(0).into_owned()))
}

// ---------------------------------------------------------------------------
// Joint pointer densities
// ---------------------------------------------------------------------------

/// The two probes and couplings of a successive measurement.
#[derive(Debug, Clone, Copy)]
pub struct TwoProbeSetup<'a> {
    pub probe1: &'a ProbeState,
    pub probe2: &'a ProbeState,
    pub epsilon1: f64,
    pub epsilon2: f64,
}

/// Density on a rectangular grid, `values[i * y.len() + j]` at `(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensity {
    pub x_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl JointDensity {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.y_grid.len() + j]
    }

    fn trapezoid_weights(g: &[f64]) -> Vec<f64> {
        let n = g.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { g[i] - g[i - 1] } else { 0.0 };
                let right = if i + 1 < n { g[i + 1] - g[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    /// `int int f(x, y) p(x, y) dx dy` by the product trapezoid rule.
    pub fn expectation(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let wx = Self::trapezoid_weights(&self.x_grid);
        let wy = Self::trapezoid_weights(&self.y_grid);
        let ny = self.y_grid.len();
        let mut s = 0.0;
        for (i, (&x, &ax)) in self.x_grid.iter().zip(&wx).enumerate() {
            for (j, (&y, &ay)) in self.y_grid.iter().zip(&wy).enumerate() {
                s += ax * ay * f(x, y) * self.values[i * ny + j];
            }
        }
        s
    }

    pub fn integral(&self) -> f64 {
        self.expectation(|_, _| 1.0)
    }

    /// Integrates out `y`.
    pub fn marginal_x(&self) -> Vec<f64> {
        let wy = Self::trapezoid_weights(&self.y_grid);
        self.values
            .chunks(self.y_grid.len())
            .map(|row| row.iter().zip(&wy).map(|(p, w)| p * w).sum())
            .collect()
    }

    /// Integrates out `x`.
    pub fn marginal_y(&self) -> Vec<f64> {
        let wx = Self::trapezoid_weights(&self.x_grid);
        let ny = self.y_grid.len();
        (0..ny)
            .map(|j| {
                wx.iter()
                    .enumerate()
                    .map(|(i, w)| w * self.values[i * ny + j])
                    .sum()
            })
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W, header: &str) -> std::io::Result<()> {
        let ny = self.y_grid.len();
        write_csv_rows(
            w,
            header,
            self.values
                .iter()
                .enumerate()
                .map(|(k, &p)| [self.x_grid[k / ny], self.y_grid[k % ny], p]),
        )
    }
}

/// Probe-1 factor of the joint density: for each `m` and grid point `x`,
/// `f_m(x) = sum_{n n'} T[n'][m][n] c_n(x) conj(c_n'(x))`.
fn first_probe_factor(tt: &TripleTraces, columns: &[Vec<Complex64>], len: usize) -> Vec<Vec<f64>> {
    (0..tt.nb)
        .map(|m| {
            (0..len)
                .map(|i| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for n in 0..tt.na {
                        for np in 0..tt.na {
                            let t = tt.get(np, m, n);
                            if t.norm_sqr() == 0.0 {
                                continue;
                            }
                            s += t * columns[n][i] * columns[np][i].conj();
                        }
                    }
                    s.re
                })
                .collect()
        })
        .collect()
}

fn assemble(
    exec: Execution,
    factor1: &[Vec<f64>],
    factor2: &[Vec<f64>],
    x_grid: &[f64],
    y_grid: &[f64],
) -> JointDensity {
    let ny = y_grid.len();
    let mut values = vec![0.0; x_grid.len() * ny];
    exec.for_each_chunk(&mut values, ny, |i, row| {
        for (f1, f2) in factor1.iter().zip(factor2) {
            let w = f1[i];
            if w == 0.0 {
                continue;
            }
            row.iter_mut().zip(f2).for_each(|(p, d)| *p += w * d);
        }
    });
    JointDensity {
        x_grid: x_grid.to_vec(),
        y_grid: y_grid.to_vec(),
        values,
    }
}

fn second_probe_factor(b: &Observable, probe2: &ProbeState, epsilon2: f64, q2_grid: &[f64]) -> Vec<Vec<f64>> {
    b.eigenvalues()
        .iter()
        .map(|bm| q2_grid.iter().map(|&q| probe2.density(q - epsilon2 * bm)).collect())
        .collect()
}

/// Joint density of the two pointer positions after measuring `A` then `B`:
/// `p(Q1, Q2) = sum_m f_m(Q1) |chi2(Q2 - eps2 b_m)|^2` with
/// `f_m(Q1) = sum_{n n'} Tr(rho P_n' P_m P_n) chi1(Q1 - eps1 a_n) chi1*(Q1 - eps1 a_n')`.
/// For `B = A` this reduces to `sum_n W_n |chi1(Q1 - eps1 a_n)|^2 |chi2(Q2 - eps2 a_n)|^2`.
pub fn joint_pointer_density(
    rho: &DensityOperator,
    a: &Observable,
    b: &Observable,
    setup: &TwoProbeSetup,
    q1_grid: &[f64],
    q2_grid: &[f64],
) -> Result<JointDensity> {
    joint_pointer_density_with(Execution::default(), rho, a, b, setup, q1_grid, q2_grid)
}

pub fn joint_pointer_density_with(
    exec: Execution,
    rho: &DensityOperator,
    a: &Observable,
    b: &Observable,
    setup: &TwoProbeSetup,
    q1_grid: &[f64],
    q2_grid: &[f64],
) -> Result<JointDensity> {
    let tt = TripleTraces::new(rho, a, b)?;
    let shifts1: Vec<f64> = a.eigenvalues().iter().map(|x| setup.epsilon1 * x).collect();
    let shifts2: Vec<f64> = b.eigenvalues().iter().map(|x| setup.epsilon2 * x).collect();
    check_span(q1_grid, &shifts1, setup.probe1.support_radius())?;
    check_span(q2_grid, &shifts2, setup.probe2.support_radius())?;

    let columns: Vec<Vec<Complex64>> = shifts1
        .iter()
        .map(|s| q1_grid.iter().map(|&q| setup.probe1.amplitude(q - s)).collect())
        .collect();
    let f1 = first_probe_factor(&tt, &columns, q1_grid.len());
    let f2 = second_probe_factor(b, setup.probe2, setup.epsilon2, q2_grid);
    Ok(assemble(exec, &f1, &f2, q1_grid, q2_grid))
}

/// Joint density of the first probe's momentum and the second probe's
/// position: `p(P1, Q2) = sum_m |chi1~(P1)|^2 sum_{n n'} T[n'][m][n]
/// e^{-i eps1 (a_n - a_n') P1} |chi2(Q2 - eps2 b_m)|^2`.
pub fn joint_momentum_position_density(
    rho: &DensityOperator,
    a: &Observable,
    b: &Observable,
    setup: &TwoProbeSetup,
    p1_grid: &[f64],
    q2_grid: &[f64],
) -> Result<JointDensity> {
    joint_momentum_position_density_with(Execution::default(), rho, a, b, setup, p1_grid, q2_grid)
}

pub fn joint_momentum_position_density_with(
    exec: Execution,
    rho: &DensityOperator,
    a: &Observable,
    b: &Observable,
    setup: &TwoProbeSetup,
    p1_grid: &[f64],
    q2_grid: &[f64],
) -> Result<JointDensity> {
    let tt = TripleTraces::new(rho, a, b)?;
    let shifts2: Vec<f64> = b.eigenvalues().iter().map(|x| setup.epsilon2 * x).collect();
    let sigma_p = setup.probe1.second_moment_p().sqrt();
    check_span(p1_grid, &[0.0], 6.0 * sigma_p)?;
    check_span(q2_grid, &shifts2, setup.probe2.support_radius())?;

    let columns: Vec<Vec<Complex64>> = a
        .eigenvalues()
        .iter()
        .map(|an| {
            p1_grid
                .iter()
                .map(|&p| {
                    setup.probe1.momentum_amplitude(p)
                        * Complex64::from_polar(1.0, -setup.epsilon1 * an * p)
                })
                .collect()
        })
        .collect();
    let f1 = first_probe_factor(&tt, &columns, p1_grid.len());
    let f2 = second_probe_factor(b, setup.probe2, setup.epsilon2, q2_grid);
    Ok(assemble(exec, &f1, &f2, p1_grid, q2_grid))
}

/// Born variance of `A`.
pub fn variance(rho: &DensityOperator, a: &Observable) -> Result<f64> {
    let m1 = a.moment(rho, 1)?;
    let m2 = a.moment(rho, 2)?;
    Ok((m2 - m1 * m1).max(0.0))
}

/// Correlation coefficient of `Q1`, `Q2` for `B = A`:
/// `Var / sqrt((Var + (s1/e1)^2) (Var + (s2/e2)^2))`.
pub fn corr_coefficient(
    rho: &DensityOperator,
    a: &Observable,
    probe1: &ProbeState,
    probe2: &ProbeState,
    epsilon1: f64,
    epsilon2: f64,
) -> Result<f64> {
    let var = variance(rho, a)?;
    let r1 = (probe1.sigma_q() / epsilon1).powi(2);
    let r2 = (probe2.sigma_q() / epsilon2).powi(2);
    let den = ((var + r1) * (var + r2)).sqrt();
    if den == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(var / den)
}

// ---------------------------------------------------------------------------
// Weak values
// ---------------------------------------------------------------------------

const POSTSELECTION_TOL: f64 = 1e-12;

/// `Tr(rho P_phi A) / Tr(rho P_phi)`.
pub fn weak_value(rho: &DensityOperator, a: &Observable, phi: &CVector) -> Result<Complex64> {
    if phi.len() != rho.dim() || a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: phi.len(),
        });
    }
    let p = projector(phi);
    let den = rho.expectation(&p).re;
    if den < POSTSELECTION_TOL {
        return Err(Error::OrthogonalPostselection { overlap: den });
    }
    Ok(rho.expectation(&(p * a.matrix())) / den)
}

/// Per-coupling correlation ratios and their zero-coupling extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakValueReport {
    pub epsilons: Vec<f64>,
    /// `<Q1 Q2> / (eps1 <Q2>)` at each coupling.
    pub re_ratios: Vec<f64>,
    /// `<P1 Q2> / (eps1 <Q2>)` at each coupling.
    pub im_ratios: Vec<f64>,
    pub re_residuals: Vec<f64>,
    /// Residuals of `im_ratio / (2 sigma_P^2)` against `Im A_W`.
    pub im_residuals: Vec<f64>,
    pub extrapolated_re_residual: f64,
    pub extrapolated_im_residual: f64,
    /// `max eps ||A|| / sigma_Q < 1`.
    pub linear_regime: bool,
    pub weak_value_re: f64,
    pub weak_value_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakValueEstimate {
    pub re_estimate: f64,
    /// Extrapolated `<P1 Q2> / (eps1 <Q2>)`, which tends to `2 sigma_P^2 Im A_W`.
    pub im_estimate: f64,
    pub sigma_p: f64,
    pub report: WeakValueReport,
}

impl WeakValueEstimate {
    pub fn estimate(&self) -> Complex64 {
        Complex64::new(self.re_estimate, self.im_estimate / (2.0 * self.sigma_p.powi(2)))
    }
}

/// Value at `x = 0` of the polynomial through `(xs[i], ys[i])` (Neville).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    p.first().copied().unwrap_or(f64::NAN)
}

/// Weak value read off the two pointer correlations with postselection on
/// `phi`, extrapolated in `eps1^2` to zero coupling.
pub fn weak_value_from_probes(
    rho: &DensityOperator,
    a: &Observable,
    phi: &CVector,
    probe1: &GaussianProbe,
    epsilons: &[f64],
) -> Result<WeakValueEstimate> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("couplings must be positive and nonempty".into()));
    }
    let target = weak_value(rho, a, phi)?;
    let probe = ProbeState::Gaussian(*probe1);
    let b = Observable::two_outcome(&projector(phi))?;
    let sigma_p = probe1.sigma_p();
    let two_sp2 = 2.0 * sigma_p * sigma_p;

    let mut re_ratios = Vec::with_capacity(epsilons.len());
    let mut im_ratios = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let after = reduced_state_after(rho, a, &probe, eps)?;
        let den = after.expectation(b.projector(1)).re;
        if den < POSTSELECTION_TOL {
            return Err(Error::OrthogonalPostselection { overlap: den });
        }
        re_ratios.push(corr_qq(rho, a, &b, &probe, eps)? / den);
        im_ratios.push(corr_pq(rho, a, &b, &probe, eps)? / den);
    }
    let xs: Vec<f64> = epsilons.iter().map(|e| e * e).collect();
    let re_estimate = extrapolate_to_zero(&xs, &re_ratios);
    let im_estimate = extrapolate_to_zero(&xs, &im_ratios);

    let a_norm = a.eigenvalues().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let max_eps = epsilons.iter().copied().fold(0.0, f64::max);
    let report = WeakValueReport {
        epsilons: epsilons.to_vec(),
        re_residuals: re_ratios.iter().map(|r| (r - target.re).abs()).collect(),
        im_residuals: im_ratios.iter().map(|r| (r / two_sp2 - target.im).abs()).collect(),
        re_ratios,
        im_ratios,
        extrapolated_re_residual: (re_estimate - target.re).abs(),
        extrapolated_im_residual: (im_estimate / two_sp2 - target.im).abs(),
        linear_regime: max_eps * a_norm / probe1.sigma_q() < 1.0,
        weak_value_re: target.re,
        weak_value_im: target.im,
    };
    Ok(WeakValueEstimate {
        re_estimate,
        im_estimate,
        sigma_p,
        report,
    })
}
