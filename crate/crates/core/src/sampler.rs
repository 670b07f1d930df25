//! Finite-ensemble emulation of the detection procedure: draw pointer
//! readings from tabulated joint densities, average products of readings
//! and feed the estimates to the reconstruction.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hilbert::{BasisPair, DensityOperator, Observable};
use crate::probe::{GaussianProbe, ProbeState, linspace};
use crate::rng::{stream_id, stream_rng};
use crate::successive::{
    JointDensity, TwoProbeSetup, joint_momentum_position_density_with, joint_pointer_density_with,
};
use crate::tomography::{CorrelationSet, RMatrix};

/// Draws per random stream. Chunks are fixed so the draws do not depend on
/// how many threads run them.
const CHUNK: usize = 1 << 16;
const NEGATIVE_TOL: f64 = 1e-9;

/// Sampled `(x, y)` readings and the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub pairs: Vec<(f64, f64)>,
    pub seed: u64,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        crate::format::write_csv_rows(w, "q1,q2", self.pairs.iter().map(|&(a, b)| [a, b]))
    }
}

/// Width of the cell around each grid point (half the distance to each
/// neighbour, a full spacing at the ends).
fn cell_widths(g: &[f64]) -> Vec<f64> {
    let n = g.len();
    if n < 2 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|i| match i {
            0 => g[1] - g[0],
            _ if i == n - 1 => g[n - 1] - g[n - 2],
            _ => 0.5 * (g[i + 1] - g[i - 1]),
        })
        .collect()
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Index of the first cumulative weight above `u * total`.
fn pick(cdf: &[f64], u: f64) -> usize {
    let target = u * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

/// Tabulated 2D density prepared for inverse-CDF sampling.
struct CellSampler<'a> {
    density: &'a JointDensity,
    wx: Vec<f64>,
    wy: Vec<f64>,
    row_cdf: Vec<f64>,
    /// Cumulative weights within each row, row-major.
    col_cdf: Vec<f64>,
}

impl<'a> CellSampler<'a> {
    fn new(density: &'a JointDensity) -> Result<Self> {
        let (nx, ny) = (density.x_grid.len(), density.y_grid.len());
        if nx == 0 || ny == 0 || density.values.len() != nx * ny {
            return Err(Error::InvalidArgument("density table shape does not match its grids".into()));
        }
        if let Some((index, &value)) = density
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| **v < -NEGATIVE_TOL || v.is_nan())
        {
            return Err(Error::NegativeDensity { index, value });
        }
        let wx = cell_widths(&density.x_grid);
        let wy = cell_widths(&density.y_grid);
        let mut col_cdf = Vec::with_capacity(nx * ny);
        for row in density.values.chunks(ny) {
            col_cdf.extend(cumulative(row.iter().zip(&wy).map(|(p, w)| p.max(0.0) * w)));
        }
        let row_cdf = cumulative((0..nx).map(|i| col_cdf[i * ny + ny - 1] * wx[i]));
        if !(row_cdf[nx - 1] > 0.0) {
            return Err(Error::InvalidArgument("density has no mass".into()));
        }
        Ok(CellSampler {
            density,
            wx,
            wy,
            row_cdf,
            col_cdf,
        })
    }

    fn draw(&self, rng: &mut impl Rng) -> (f64, f64) {
        let ny = self.density.y_grid.len();
        let i = pick(&self.row_cdf, rng.random());
        let j = pick(&self.col_cdf[i * ny..(i + 1) * ny], rng.random());
        let jx: f64 = rng.random::<f64>() - 0.5;
        let jy: f64 = rng.random::<f64>() - 0.5;
        (
            self.density.x_grid[i] + jx * self.wx[i],
            self.density.y_grid[j] + jy * self.wy[j],
        )
    }
}

/// Draws `n` readings: a cell by its cumulative weight, then a uniform
/// point within the cell. Deterministic in `seed`.
pub fn sample_joint_density(density: &JointDensity, n: usize, seed: u64) -> Result<Samples> {
    sample_joint_density_with(Execution::default(), density, n, seed)
}

pub fn sample_joint_density_with(exec: Execution, density: &JointDensity, n: usize, seed: u64) -> Result<Samples> {
    let sampler = CellSampler::new(density)?;
    let mut pairs = vec![(0.0, 0.0); n];
    exec.for_each_chunk(&mut pairs, CHUNK, |c, out| {
        let mut rng = stream_rng(seed, &[c as u64]);
        out.iter_mut().for_each(|p| *p = sampler.draw(&mut rng));
    });
    Ok(Samples { pairs, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    Q1Q2,
    Q1,
    Q2,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleResult {
    #[serde(rename = "n")]
    pub n_samples: usize,
    pub mean: f64,
    pub std_error: f64,
    pub seed: u64,
}

fn mean_and_error(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Sample mean of `q1 q2`, `q1` or `q2`; `std_error` is the sample standard
/// deviation over `sqrt(n)`.
pub fn estimate_correlation(samples: &Samples, mode: CorrelationMode) -> Result<EnsembleResult> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let f = match mode {
        CorrelationMode::Q1Q2 => |&(a, b): &(f64, f64)| a * b,
        CorrelationMode::Q1 => |&(a, _): &(f64, f64)| a,
        CorrelationMode::Q2 => |&(_, b): &(f64, f64)| b,
    };
    let (mean, std_error) = mean_and_error(samples.pairs.iter().map(f), n);
    Ok(EnsembleResult {
        n_samples: n,
        mean,
        std_error,
        seed: samples.seed,
    })
}

/// Pearson correlation coefficient of the sampled pairs.
pub fn sample_correlation_coefficient(samples: &Samples) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let nf = n as f64;
    let (mx, my) = samples
        .pairs
        .iter()
        .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (mx / nf, my / nf);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in &samples.pairs {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Probes, couplings and sampling parameters of a simulated tomography run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub probe1: GaussianProbe,
    pub probe2: GaussianProbe,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub n_per_setting: usize,
    /// Points per axis of the tabulated densities.
    pub grid_points: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(probe1: GaussianProbe, probe2: GaussianProbe, epsilon1: f64, epsilon2: f64, n_per_setting: usize, seed: u64) -> Self {
        EnsembleSpec {
            probe1,
            probe2,
            epsilon1,
            epsilon2,
            n_per_setting,
            grid_points: 1024,
            seed,
        }
    }
}

/// Finite-ensemble correlation tables with their standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleTomography {
    pub correlations: CorrelationSet,
    pub x_std_error: RMatrix,
    pub y_tilde_std_error: RMatrix,
}

const WHICH_QQ: u64 = 0;
const WHICH_PQ: u64 = 1;
const GRID_MARGIN: f64 = 7.0;

/// Grid spanning both shifts `0` and `shift` plus `GRID_MARGIN` widths.
fn shifted_grid(shift: f64, width: f64, n: usize) -> Vec<f64> {
    let lo = shift.min(0.0) - GRID_MARGIN * width;
    let hi = shift.max(0.0) + GRID_MARGIN * width;
    linspace(lo, hi, n)
}

/// For each setting `(k, mu)`, samples `(Q1, Q2)` and `(P1, Q2)` after
/// measuring `P_k` then `P_mu`, and converts the sample means to `x` and
/// `y~`. Every setting and correlation uses an independent ensemble.
pub fn ensemble_tomography(rho: &DensityOperator, bp: &BasisPair, spec: &EnsembleSpec) -> Result<EnsembleTomography> {
    ensemble_tomography_with(Execution::default(), rho, bp, spec)
}

pub fn ensemble_tomography_with(
    exec: Execution,
    rho: &DensityOperator,
    bp: &BasisPair,
    spec: &EnsembleSpec,
) -> Result<EnsembleTomography> {
    if spec.n_per_setting < 100 {
        return Err(Error::InvalidArgument(format!(
            "n_per_setting must be >= 100, got {}",
            spec.n_per_setting
        )));
    }
    if spec.grid_points < 2 {
        return Err(Error::InvalidArgument("grid_points must be >= 2".into()));
    }
    if !(spec.epsilon1 > 0.0) || !(spec.epsilon2 > 0.0) {
        return Err(Error::InvalidArgument("couplings must be > 0".into()));
    }
    if rho.dim() != bp.dim() {
        return Err(Error::DimensionMismatch {
            expected: bp.dim(),
            found: rho.dim(),
        });
    }
    let n = bp.dim();
    let probe1 = ProbeState::Gaussian(spec.probe1);
    let probe2 = ProbeState::Gaussian(spec.probe2);
    let setup = TwoProbeSetup {
        probe1: &probe1,
        probe2: &probe2,
        epsilon1: spec.epsilon1,
        epsilon2: spec.epsilon2,
    };
    let q1 = shifted_grid(spec.epsilon1, spec.probe1.sigma_q(), spec.grid_points);
    let q2 = shifted_grid(spec.epsilon2, spec.probe2.sigma_q(), spec.grid_points);
    let p1 = shifted_grid(0.0, spec.probe1.sigma_p(), spec.grid_points);
    let scale = spec.epsilon1 * spec.epsilon2;
    let two_sq2 = 2.0 * spec.probe1.sigma_q().powi(2);

    // settings in (k, mu, which) order
    let jobs: Vec<(usize, usize, u64)> = (0..n)
        .flat_map(|k| (0..n).flat_map(move |mu| [(k, mu, WHICH_QQ), (k, mu, WHICH_PQ)]))
        .collect();
    let results = exec.map(jobs.len(), |j| -> Result<EnsembleResult> {
        let (k, mu, which) = jobs[j];
        let a = Observable::two_outcome(&bp.k_projector(k))?;
        let b = Observable::two_outcome(&bp.mu_projector(mu))?;
        // sampling inside a job stays sequential; the jobs are the parallel unit
        let density = if which == WHICH_QQ {
            joint_pointer_density_with(Execution::Sequential, rho, &a, &b, &setup, &q1, &q2)?
        } else {
            joint_momentum_position_density_with(Execution::Sequential, rho, &a, &b, &setup, &p1, &q2)?
        };
        let seed = stream_id(&[spec.seed, k as u64, mu as u64, which]);
        let samples = sample_joint_density_with(Execution::Sequential, &density, spec.n_per_setting, seed)?;
        estimate_correlation(&samples, CorrelationMode::Q1Q2)
    });

    let mut x = RMatrix::zeros(n, n);
    let mut y = RMatrix::zeros(n, n);
    let mut x_se = RMatrix::zeros(n, n);
    let mut y_se = RMatrix::zeros(n, n);
    for (&(k, mu, which), r) in jobs.iter().zip(results) {
        let r = r?;
        if which == WHICH_QQ {
            x[(mu, k)] = r.mean / scale;
            x_se[(mu, k)] = r.std_error / scale;
        } else {
            y[(mu, k)] = r.mean * two_sq2 / scale;
            y_se[(mu, k)] = r.std_error * two_sq2 / scale;
        }
    }
    Ok(EnsembleTomography {
        correlations: CorrelationSet {
            basis_pair: bp.clone(),
            epsilon1: spec.epsilon1,
            sigma_q1: spec.probe1.sigma_q(),
            x,
            y_tilde: y,
        },
        x_std_error: x_se,
        y_tilde_std_error: y_se,
    })
}
