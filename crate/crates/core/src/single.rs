//! Single-probe measurements: pointer densities and moments, the
//! post-measurement system state and the projector-measurement shortcut.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::write_csv_rows;
use crate::hilbert::{
    CMatrix, DensityOperator, Observable, born_probability, commutator, hermitian_eigen, max_abs,
};
use crate::probe::{ProbeState, trapezoid};

/// Final pointer position density for one observable and coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerDensity {
    pub q_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub epsilon: f64,
    pub observable_tag: String,
}

impl PointerDensity {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.q_grid, &self.values)
    }

    /// `int q^k p(q) dq` by the trapezoid rule.
    pub fn moment(&self, k: i32) -> f64 {
        let y: Vec<f64> = self
            .q_grid
            .iter()
            .zip(&self.values)
            .map(|(q, p)| q.powi(k) * p)
            .collect();
        trapezoid(&self.q_grid, &y)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        write_csv_rows(
            w,
            "q,p",
            self.q_grid.iter().zip(&self.values).map(|(&q, &p)| [q, p]),
        )
    }
}

/// Fails with `GridTooNarrow` unless `grid` reaches `radius` beyond both
/// extreme shifts.
pub(crate) fn check_span(grid: &[f64], shifts: &[f64], radius: f64) -> Result<()> {
    let lo = shifts.iter().copied().fold(f64::INFINITY, f64::min) - radius;
    let hi = shifts.iter().copied().fold(f64::NEG_INFINITY, f64::max) + radius;
    let gmin = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let gmax = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if grid.is_empty() || gmin > lo || gmax < hi {
        return Err(Error::GridTooNarrow {
            grid_min: gmin,
            grid_max: gmax,
            required_min: lo,
            required_max: hi,
        });
    }
    Ok(())
}

/// `p_f(Q) = sum_n W_n p_0(Q - eps a_n)`.
pub fn pointer_density(
    rho: &DensityOperator,
    a: &Observable,
    probe: &ProbeState,
    epsilon: f64,
    q_grid: &[f64],
) -> Result<PointerDensity> {
    let weights = a.born_weights(rho)?;
    let shifts: Vec<f64> = a.eigenvalues().iter().map(|x| epsilon * x).collect();
    check_span(q_grid, &shifts, probe.support_radius())?;
    let values = q_grid
        .iter()
        .map(|&q| {
            weights
                .iter()
                .zip(&shifts)
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, s)| w * probe.density(q - s))
                .sum()
        })
        .collect();
    Ok(PointerDensity {
        q_grid: q_grid.to_vec(),
        values,
        epsilon,
        observable_tag: String::new(),
    })
}

/// Closed-form first and second pointer moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointerMoments {
    pub mean_q: f64,
    pub second_moment_q: f64,
    pub epsilon: f64,
}

/// `<Q> = eps Tr(rho A)` and `<Q^2> = eps^2 Tr(rho A^2) + <Q^2>_probe`.
pub fn pointer_moments(
    rho: &DensityOperator,
    a: &Observable,
    probe: &ProbeState,
    epsilon: f64,
) -> Result<PointerMoments> {
    let mean_a = a.moment(rho, 1)?;
    let mean_a2 = a.moment(rho, 2)?;
    Ok(PointerMoments {
        mean_q: epsilon * mean_a,
        second_moment_q: epsilon * epsilon * mean_a2 + probe.sigma_q().powi(2),
        epsilon,
    })
}

/// `p~_f(k) = <e^{i k eps A}> p~_0(k)`, the characteristic function of the
/// final pointer density.
pub fn pointer_charfn(
    rho: &DensityOperator,
    a: &Observable,
    probe: &ProbeState,
    epsilon: f64,
    k: f64,
) -> Result<Complex64> {
    let weights = a.born_weights(rho)?;
    let system: Complex64 = weights
        .iter()
        .zip(a.eigenvalues())
        .map(|(w, x)| Complex64::from_polar(*w, k * epsilon * x))
        .sum();
    Ok(system * probe.position_charfn(k))
}

/// Reduced system state after the interaction:
/// `sum_{n n'} g(eps (a_n - a_n')) P_n rho P_n'`.
pub fn reduced_state_after(
    rho: &DensityOperator,
    a: &Observable,
    probe: &ProbeState,
    epsilon: f64,
) -> Result<DensityOperator> {
    check_dims(rho, a)?;
    let n = rho.dim();
    let blocks: Vec<CMatrix> = a.projectors().iter().map(|p| p * rho.matrix()).collect();
    let mut out = CMatrix::zeros(n, n);
    for (i, (ai, left)) in a.eigenvalues().iter().zip(&blocks).enumerate() {
        for (j, (aj, pj)) in a.eigenvalues().iter().zip(a.projectors()).enumerate() {
            let factor = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                probe.char_g(epsilon * (ai - aj))
            };
            if factor.norm() == 0.0 {
                continue;
            }
            out += (left * pj) * factor;
        }
    }
    Ok(DensityOperator::repaired(out))
}

/// Non-selective projective measurement `sum_n P_n rho P_n`.
pub fn luders(rho: &DensityOperator, a: &Observable) -> Result<DensityOperator> {
    check_dims(rho, a)?;
    let n = rho.dim();
    let out = a
        .projectors()
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, p| acc + p * rho.matrix() * p);
    Ok(DensityOperator::repaired(out))
}

/// `<Q>_f / eps` for the two-outcome observable `{0, 1}` of a projector,
/// which equals `Tr(rho P)` for every coupling and probe.
pub fn projector_yes_probability(
    rho: &DensityOperator,
    proj: &CMatrix,
    probe: &ProbeState,
    epsilon: f64,
) -> Result<f64> {
    let obs = Observable::two_outcome(proj)?;
    if epsilon == 0.0 {
        return born_probability(rho, proj);
    }
    Ok(pointer_moments(rho, &obs, probe, epsilon)?.mean_q / epsilon)
}

fn check_dims(rho: &DensityOperator, a: &Observable) -> Result<()> {
    if rho.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: a.dim(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Non-demolition conditions
// ---------------------------------------------------------------------------

/// Canonical probe variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVariable {
    Position,
    Momentum,
}

/// How the detected probe variable acquires information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoPathway {
    /// `[V, A_probe] != 0`: the coupling shifts the detected variable.
    Coupling,
    /// `[V, A_probe] = 0` but the coupling shifts the conjugate momentum and
    /// the kinetic energy converts that into a displacement.
    KineticEnergy,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QndResiduals {
    /// `||[V, A_s]||` on the system factor.
    pub coupling_system: f64,
    /// `||[H_s, A_s]||` with `H_s = 0`.
    pub hamiltonian_system: f64,
    /// `||[V, A_probe]||`, the static information-gain commutator.
    pub coupling_probe: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QndReport {
    pub info_gain: bool,
    pub nondemolition: bool,
    pub pathway: InfoPathway,
    pub residuals: QndResiduals,
}

const QND_TOL: f64 = 1e-12;

/// Non-demolition analysis of the impulsive coupling `V = c A_s (x) P`.
pub fn qnd_check(a_s: &CMatrix, tag: ProbeVariable, coupling_sign: f64) -> Result<QndReport> {
    qnd_check_with(a_s, tag, coupling_sign, ProbeVariable::Momentum)
}

/// Non-demolition analysis of `V = c A_s (x) X` with `X` the given probe
/// variable (`Momentum` for the pointer model, `Position` for a
/// Stern-Gerlach field gradient). The probe Hamiltonian is the free kinetic
/// energy and `H_s = 0`.
pub fn qnd_check_with(
    a_s: &CMatrix,
    tag: ProbeVariable,
    coupling_sign: f64,
    coupled: ProbeVariable,
) -> Result<QndReport> {
    let residual = crate::hilbert::hermiticity_residual(a_s);
    if residual > crate::hilbert::INPUT_HERMITIAN_TOL {
        return Err(Error::NonHermitianInput { residual });
    }
    let v_sys = a_s.scale(coupling_sign);
    let coupling_system = max_abs(&commutator(&v_sys, a_s));
    let h_s = CMatrix::zeros(a_s.nrows(), a_s.ncols());
    let hamiltonian_system = max_abs(&commutator(&h_s, a_s));

    // [X, Y] is i (or -i) for conjugate canonical variables, 0 otherwise;
    // the operator norm of the system factor is its largest |eigenvalue|.
    let (eig, _) = hermitian_eigen(a_s);
    let op_norm = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let spread = eig.last().copied().unwrap_or(0.0) - eig.first().copied().unwrap_or(0.0);
    let conjugate = if tag != coupled { 1.0 } else { 0.0 };
    let coupling_probe = coupling_sign.abs() * op_norm * conjugate;

    // A multiple of the identity shifts every branch equally and carries no
    // information about the system.
    let distinguishes = coupling_sign != 0.0 && spread > QND_TOL;
    let pathway = if !distinguishes {
        InfoPathway::None
    } else if coupling_probe > QND_TOL {
        InfoPathway::Coupling
    } else if coupled == ProbeVariable::Position && tag == ProbeVariable::Position {
        InfoPathway::KineticEnergy
    } else {
        // momentum coupled and momentum detected: neither V nor the kinetic
        // energy ever moves the momentum distribution
        InfoPathway::None
    };

    Ok(QndReport {
        info_gain: pathway != InfoPathway::None,
        nondemolition: coupling_system <= QND_TOL && hamiltonian_system <= QND_TOL,
        pathway,
        residuals: QndResiduals {
            coupling_system,
            hamiltonian_system,
            coupling_probe,
        },
    })
}
