//! Stern-Gerlach wavepacket dynamics: a spin-1/2 particle whose position is
//! the probe, kicked at `t1` by `exp(i eps sigma_z z)` and otherwise moving
//! freely.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::CVector;
use crate::probe::{BoundaryLeak, GridProbe};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SternGerlachParams {
    pub mass: f64,
    pub t1: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n_points: usize,
}

impl Default for SternGerlachParams {
    fn default() -> Self {
        SternGerlachParams {
            mass: 1.0,
            t1: 1.0,
            epsilon: 4.0,
            sigma: 0.5,
            z_min: -32.0,
            z_max: 32.0,
            n_points: 1024,
        }
    }
}

/// Position and momentum densities at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub label: String,
    pub t: f64,
    pub z_grid: Vec<f64>,
    pub position_density: Vec<f64>,
    /// Ascending momentum grid.
    pub p_grid: Vec<f64>,
    pub momentum_density: Vec<f64>,
}

impl Frame {
    pub fn write_position_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        crate::format::write_csv_rows(
            w,
            "z,p",
            self.z_grid.iter().zip(&self.position_density).map(|(&z, &p)| [z, p]),
        )
    }

    pub fn write_momentum_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        crate::format::write_csv_rows(
            w,
            "p_z,p",
            self.p_grid.iter().zip(&self.momentum_density).map(|(&q, &p)| [q, p]),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchMasses {
    /// Born weights of `sigma = +1` and `sigma = -1`.
    pub born_plus: f64,
    pub born_minus: f64,
    /// Momentum-space quadrature of each spin branch after the kick.
    pub branch_plus: f64,
    pub branch_minus: f64,
    /// Mean momentum of each branch, expected at `+eps` and `-eps`.
    pub mean_p_plus: f64,
    pub mean_p_minus: f64,
    /// Total momentum density on `p > 0` and `p < 0`; differs from the
    /// branch masses by the Gaussian tails crossing `p = 0`.
    pub half_line_positive: f64,
    pub half_line_negative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SternGerlachRun {
    pub params: SternGerlachParams,
    pub frames: Vec<Frame>,
    pub masses: BranchMasses,
    pub leaks: Vec<BoundaryLeak>,
}

fn validate(params: &SternGerlachParams) -> Result<()> {
    let positive = [
        ("mass", params.mass),
        ("sigma", params.sigma),
    ];
    for (name, v) in positive {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} must be > 0")));
        }
    }
    if !(params.t1 >= 0.0) || !params.epsilon.is_finite() {
        return Err(Error::InvalidArgument("t1 must be >= 0 and epsilon finite".into()));
    }
    Ok(())
}

/// Momentum grid and density of a grid probe, ascending in momentum.
fn momentum_density(g: &GridProbe) -> (Vec<f64>, Vec<f64>) {
    let (p, w) = g.momentum_distribution();
    let dp = 2.0 * std::f64::consts::PI / (g.q_max() - g.q_min());
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    (
        order.iter().map(|&i| p[i]).collect(),
        order.iter().map(|&i| w[i] / dp).collect(),
    )
}

/// Runs the two spin branches through free flight, the kick at `t1` and
/// free flight to `2 t1`, recording frames at `0`, `t1-`, `t1+` and `2 t1`.
/// `spinor` is `(c_up, c_down)` in the `sigma_z` basis.
pub fn simulate(params: &SternGerlachParams, spinor: &CVector) -> Result<SternGerlachRun> {
    validate(params)?;
    if spinor.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: spinor.len(),
        });
    }
    let norm = spinor.norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("spinor must be nonzero".into()));
    }
    let w_plus = spinor[0].norm_sqr() / (norm * norm);
    let w_minus = spinor[1].norm_sqr() / (norm * norm);
    let weights = [w_plus, w_minus];
    let signs = [1.0, -1.0];

    let chi0 = GridProbe::gaussian(params.sigma, 0.0, params.z_min, params.z_max, params.n_points)?;
    let mut leaks = Vec::new();
    let (before, leak) = chi0.free_evolve(params.mass, params.t1)?;
    leaks.extend(leak);
    let kicked: Vec<GridProbe> = signs.iter().map(|s| before.boost(s * params.epsilon)).collect();
    let mut after = Vec::with_capacity(2);
    for k in &kicked {
        let (g, leak) = k.free_evolve(params.mass, params.t1)?;
        leaks.extend(leak);
        after.push(g);
    }

    let z_grid = chi0.q_grid();
    let frame = |label: &str, t: f64, branches: [&GridProbe; 2]| -> Frame {
        let mut position_density = vec![0.0; z_grid.len()];
        let mut momentum = vec![0.0; z_grid.len()];
        let mut p_grid = Vec::new();
        for (g, w) in branches.iter().zip(weights) {
            position_density
                .iter_mut()
                .zip(g.densities())
                .for_each(|(acc, d)| *acc += w * d);
            let (p, d) = momentum_density(g);
            momentum.iter_mut().zip(d).for_each(|(acc, d)| *acc += w * d);
            p_grid = p;
        }
        Frame {
            label: label.to_string(),
            t,
            z_grid: z_grid.clone(),
            position_density,
            p_grid,
            momentum_density: momentum,
        }
    };

    let frames = vec![
        frame("t0", 0.0, [&chi0, &chi0]),
        frame("t1_minus", params.t1, [&before, &before]),
        frame("t1_plus", params.t1, [&kicked[0], &kicked[1]]),
        frame("t2", 2.0 * params.t1, [&after[0], &after[1]]),
    ];

    let (p_plus, w_p_plus) = kicked[0].momentum_distribution();
    let (p_minus, w_p_minus) = kicked[1].momentum_distribution();
    let branch_plus = w_plus * w_p_plus.iter().sum::<f64>();
    let branch_minus = w_minus * w_p_minus.iter().sum::<f64>();
    let mean = |p: &[f64], w: &[f64]| p.iter().zip(w).map(|(p, w)| p * w).sum::<f64>();
    let half = |positive: bool| -> f64 {
        [(p_plus, w_p_plus, w_plus), (p_minus, w_p_minus, w_minus)]
            .iter()
            .map(|(p, w, born)| {
                born * p
                    .iter()
                    .zip(w.iter())
                    .filter(|(p, _)| if positive { **p > 0.0 } else { **p < 0.0 })
                    .map(|(_, w)| w)
                    .sum::<f64>()
            })
            .sum()
    };
    let masses = BranchMasses {
        born_plus: w_plus,
        born_minus: w_minus,
        branch_plus,
        branch_minus,
        mean_p_plus: mean(p_plus, w_p_plus),
        mean_p_minus: mean(p_minus, w_p_minus),
        half_line_positive: half(true),
        half_line_negative: half(false),
    };

    Ok(SternGerlachRun {
        params: *params,
        frames,
        masses,
        leaks,
    })
}

/// Convenience spinor `cos(theta/2) |up> + e^{i phi} sin(theta/2) |down>`.
pub fn bloch_spinor(theta: f64, phi: f64) -> CVector {
    CVector::from_vec(vec![
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ])
}
