//! One-dimensional pointer states and their characteristic functions.
//!
//! A probe is either a centered minimum-uncertainty Gaussian, handled in
//! closed form, or a complex wavefunction sampled on a uniform power-of-two
//! grid. Grid probes keep their discrete Fourier spectrum so that momentum
//! averages, shifts and free evolution are evaluated spectrally.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Below this `|beta|` the characteristic functions take their `beta = 0`
/// limits instead of being evaluated.
pub const BETA_ZERO: f64 = 1e-10;

const NORMALIZATION_TOL: f64 = 1e-8;
const CENTERING_TOL: f64 = 1e-8;
const DEGENERATE_TOL: f64 = 1e-12;
const LEAK_THRESHOLD: f64 = 1e-6;
const LEAK_EDGE_POINTS: usize = 5;

// ---------------------------------------------------------------------------
// Gaussian
// ---------------------------------------------------------------------------

/// Centered Gaussian pointer `chi(Q) = (2 pi s^2)^(-1/4) exp(-Q^2 / 4 s^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianProbe {
    sigma_q: f64,
}

impl GaussianProbe {
    pub fn new(sigma_q: f64) -> Result<Self> {
        if !(sigma_q > 0.0) || !sigma_q.is_finite() {
            return Err(Error::InvalidProbe(format!("sigma_q must be > 0, got {sigma_q}")));
        }
        Ok(GaussianProbe { sigma_q })
    }

    pub fn sigma_q(&self) -> f64 {
        self.sigma_q
    }

    /// `sigma_P = 1 / (2 sigma_Q)`.
    pub fn sigma_p(&self) -> f64 {
        0.5 / self.sigma_q
    }

    pub fn amplitude(&self, q: f64) -> f64 {
        let s2 = self.sigma_q * self.sigma_q;
        (2.0 * PI * s2).powf(-0.25) * (-q * q / (4.0 * s2)).exp()
    }

    pub fn density(&self, q: f64) -> f64 {
        let s2 = self.sigma_q * self.sigma_q;
        (-q * q / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt()
    }

    /// Momentum-space amplitude `(2 s^2 / pi)^(1/4) exp(-s^2 p^2)`.
    pub fn momentum_amplitude(&self, p: f64) -> f64 {
        let s2 = self.sigma_q * self.sigma_q;
        (2.0 * s2 / PI).powf(0.25) * (-s2 * p * p).exp()
    }

    pub fn char_g(&self, beta: f64) -> f64 {
        (-beta * beta / (8.0 * self.sigma_q * self.sigma_q)).exp()
    }
}

impl<'de> Deserialize<'de> for GaussianProbe {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            sigma_q: f64,
        }
        let raw = Raw::deserialize(d)?;
        GaussianProbe::new(raw.sigma_q).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

/// Wavefunction on `q_j = q_min + j dq`, `dq = (q_max - q_min) / n`.
#[derive(Clone)]
pub struct GridProbe {
    q_min: f64,
    q_max: f64,
    amplitudes: Vec<Complex64>,
    /// Unnormalized DFT of `amplitudes`.
    spectrum: Vec<Complex64>,
    /// Angular momentum of each DFT bin.
    momenta: Vec<f64>,
    /// `|spectrum|^2`, normalized to sum 1.
    weights: Vec<f64>,
}

impl std::fmt::Debug for GridProbe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridProbe")
            .field("q_min", &self.q_min)
            .field("q_max", &self.q_max)
            .field("n_points", &self.amplitudes.len())
            .finish()
    }
}

impl PartialEq for GridProbe {
    fn eq(&self, other: &Self) -> bool {
        self.q_min == other.q_min && self.q_max == other.q_max && self.amplitudes == other.amplitudes
    }
}

/// Density near the grid edges after free evolution exceeded the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLeak {
    pub max_edge_density: f64,
}

fn planner_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

fn fft(data: &[Complex64]) -> Vec<Complex64> {
    let mut buf = data.to_vec();
    planner_pair(data.len()).0.process(&mut buf);
    buf
}

fn ifft(data: &[Complex64]) -> Vec<Complex64> {
    let mut buf = data.to_vec();
    planner_pair(data.len()).1.process(&mut buf);
    let n = data.len() as f64;
    buf.iter_mut().for_each(|z| *z /= n);
    buf
}

fn grid_momenta(n: usize, dq: f64) -> Vec<f64> {
    let dp = 2.0 * PI / (n as f64 * dq);
    (0..n)
        .map(|j| {
            let k = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
            k * dp
        })
        .collect()
}

impl GridProbe {
    /// Takes amplitudes as given; they must already be normalized.
    pub fn new(q_min: f64, q_max: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = amplitudes.len();
        if !(q_max > q_min) || !q_min.is_finite() || !q_max.is_finite() {
            return Err(Error::InvalidProbe(format!("need q_min < q_max, got [{q_min}, {q_max}]")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidProbe(format!("n_points must be a power of two >= 2, got {n}")));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidProbe("amplitudes must be finite".into()));
        }
        let dq = (q_max - q_min) / n as f64;
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * dq;
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidProbe(format!("sum |chi|^2 dq = {norm}, expected 1")));
        }
        Ok(Self::build(q_min, q_max, amplitudes))
    }

    fn build(q_min: f64, q_max: f64, amplitudes: Vec<Complex64>) -> Self {
        let n = amplitudes.len();
        let dq = (q_max - q_min) / n as f64;
        let spectrum = fft(&amplitudes);
        let total: f64 = spectrum.iter().map(|z| z.norm_sqr()).sum();
        let weights = spectrum.iter().map(|z| z.norm_sqr() / total).collect();
        GridProbe {
            q_min,
            q_max,
            amplitudes,
            spectrum,
            momenta: grid_momenta(n, dq),
            weights,
        }
    }

    /// Samples `f` on the grid and normalizes the result.
    pub fn sample(q_min: f64, q_max: f64, n_points: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        if !(q_max > q_min) || n_points < 2 {
            return Err(Error::InvalidProbe("invalid grid".into()));
        }
        let dq = (q_max - q_min) / n_points as f64;
        let raw: Vec<Complex64> = (0..n_points).map(|j| f(q_min + j as f64 * dq)).collect();
        let norm = (raw.iter().map(|z| z.norm_sqr()).sum::<f64>() * dq).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidProbe("sampled wavefunction has zero or infinite norm".into()));
        }
        GridProbe::new(q_min, q_max, raw.into_iter().map(|z| z / norm).collect())
    }

    /// Gaussian of spread `sigma_q` centered at `center`, sampled on the grid.
    pub fn gaussian(sigma_q: f64, center: f64, q_min: f64, q_max: f64, n_points: usize) -> Result<Self> {
        let g = GaussianProbe::new(sigma_q)?;
        GridProbe::sample(q_min, q_max, n_points, |q| Complex64::new(g.amplitude(q - center), 0.0))
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn n_points(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.amplitudes.len() as f64
    }

    pub fn q(&self, j: usize) -> f64 {
        self.q_min + j as f64 * self.dq()
    }

    pub fn q_grid(&self) -> Vec<f64> {
        (0..self.n_points()).map(|j| self.q(j)).collect()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `|chi_j|^2` at the grid points.
    pub fn densities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Momentum of each DFT bin and its probability, in DFT order.
    pub fn momentum_distribution(&self) -> (&[f64], &[f64]) {
        (&self.momenta, &self.weights)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dq()
    }

    pub fn mean_q(&self) -> f64 {
        let dq = self.dq();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(j, z)| self.q(j) * z.norm_sqr())
            .sum::<f64>()
            * dq
    }

    pub fn sigma_q(&self) -> f64 {
        let dq = self.dq();
        let mean = self.mean_q();
        let var = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, z)| (self.q(j) - mean).powi(2) * z.norm_sqr())
            .sum::<f64>()
            * dq;
        var.sqrt()
    }

    pub fn mean_p(&self) -> f64 {
        self.momenta.iter().zip(&self.weights).map(|(p, w)| p * w).sum()
    }

    /// `<P^2>`.
    pub fn second_moment_p(&self) -> f64 {
        self.momenta.iter().zip(&self.weights).map(|(p, w)| p * p * w).sum()
    }

    /// Band-limited (trigonometric) interpolation of the amplitude; zero
    /// outside `[q_min, q_max)`.
    pub fn amplitude_at(&self, q: f64) -> Complex64 {
        if q < self.q_min || q >= self.q_max {
            return Complex64::new(0.0, 0.0);
        }
        let x = q - self.q_min;
        let n = self.n_points() as f64;
        self.spectrum
            .iter()
            .zip(&self.momenta)
            .map(|(s, p)| s * Complex64::from_polar(1.0, p * x))
            .sum::<Complex64>()
            / n
    }

    /// Continuum momentum amplitude `(2 pi)^(-1/2) int chi(q) e^{-ipq} dq`.
    pub fn momentum_amplitude(&self, p: f64) -> Complex64 {
        let dq = self.dq();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(j, z)| z * Complex64::from_polar(1.0, -p * self.q(j)))
            .sum::<Complex64>()
            * dq
            / (2.0 * PI).sqrt()
    }

    /// `<e^{-i beta P}> = int chi*(Q) chi(Q - beta) dQ`, summed over the
    /// discrete momentum spectrum.
    pub fn char_g(&self, beta: f64) -> Complex64 {
        self.momenta
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| Complex64::from_polar(*w, -beta * p))
            .sum()
    }

    /// `d g / d beta`.
    pub fn char_g_derivative(&self, beta: f64) -> Complex64 {
        self.momenta
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| Complex64::new(0.0, -p * w) * Complex64::from_polar(1.0, -beta * p))
            .sum()
    }

    /// Amplitudes of `chi(q - s)` on the grid, by a spectral phase shift.
    pub fn shifted_amplitudes(&self, s: f64) -> Vec<Complex64> {
        let shifted: Vec<Complex64> = self
            .spectrum
            .iter()
            .zip(&self.momenta)
            .map(|(z, p)| z * Complex64::from_polar(1.0, -p * s))
            .collect();
        ifft(&shifted)
    }

    /// `h(beta) = (1/beta) int chi*(Q + beta/2) Q chi(Q - beta/2) dQ`.
    /// `Q` is measured from the grid mean, so the residual centering error
    /// of a sampled probe is not amplified by `1/beta` near zero.
    pub fn char_h(&self, beta: f64) -> Complex64 {
        if beta.abs() < BETA_ZERO {
            return Complex64::new(0.0, 0.0);
        }
        let right = self.shifted_amplitudes(beta / 2.0);
        let left = self.shifted_amplitudes(-beta / 2.0);
        let dq = self.dq();
        let mean = self.mean_q();
        let sum: Complex64 = left
            .iter()
            .zip(&right)
            .enumerate()
            .map(|(j, (l, r))| l.conj() * r * (self.q(j) - mean))
            .sum();
        sum * dq / beta
    }

    /// Multiplies the amplitudes by `e^{i p0 q}`.
    pub fn boost(&self, p0: f64) -> GridProbe {
        let amps = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, z)| z * Complex64::from_polar(1.0, p0 * self.q(j)))
            .collect();
        GridProbe::build(self.q_min, self.q_max, amps)
    }

    /// Free evolution `exp(-i t P^2 / 2m)` applied in momentum space.
    /// Reports a [`BoundaryLeak`] when density within a few points of either
    /// edge exceeds `1e-6`, a sign the grid is too small.
    pub fn free_evolve(&self, mass: f64, t: f64) -> Result<(GridProbe, Option<BoundaryLeak>)> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidArgument(format!("mass must be > 0, got {mass}")));
        }
        if !t.is_finite() {
            return Err(Error::InvalidArgument("t must be finite".into()));
        }
        let spectrum: Vec<Complex64> = self
            .spectrum
            .iter()
            .zip(&self.momenta)
            .map(|(z, p)| z * Complex64::from_polar(1.0, -t * p * p / (2.0 * mass)))
            .collect();
        let evolved = GridProbe::build(self.q_min, self.q_max, ifft(&spectrum));
        let leak = evolved.edge_density();
        let leak = (leak > LEAK_THRESHOLD).then_some(BoundaryLeak { max_edge_density: leak });
        Ok((evolved, leak))
    }

    fn edge_density(&self) -> f64 {
        let n = self.n_points();
        let k = LEAK_EDGE_POINTS.min(n / 2);
        self.amplitudes[..k]
            .iter()
            .chain(&self.amplitudes[n - k..])
            .map(|z| z.norm_sqr())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridProbeJson {
    q_min: f64,
    q_max: f64,
    n_points: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for GridProbe {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridProbeJson {
            q_min: self.q_min,
            q_max: self.q_max,
            n_points: self.n_points(),
            re: self.amplitudes.iter().map(|z| z.re).collect(),
            im: self.amplitudes.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridProbe {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = GridProbeJson::deserialize(d)?;
        if raw.re.len() != raw.n_points || raw.im.len() != raw.n_points {
            return Err(D::Error::custom("re and im must have n_points entries"));
        }
        let amps = raw
            .re
            .iter()
            .zip(&raw.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        GridProbe::new(raw.q_min, raw.q_max, amps).map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// ProbeState
// ---------------------------------------------------------------------------

/// A centered pure pointer state.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ProbeState {
    Gaussian(GaussianProbe),
    Grid(GridProbe),
}

impl ProbeState {
    pub fn gaussian(sigma_q: f64) -> Result<Self> {
        Ok(ProbeState::Gaussian(GaussianProbe::new(sigma_q)?))
    }

    /// Wraps a grid probe after checking it is centered, which is what makes
    /// `lambda(0) = 1`.
    pub fn grid(probe: GridProbe) -> Result<Self> {
        let mean = probe.mean_q();
        if mean.abs() >= CENTERING_TOL * probe.sigma_q().max(f64::MIN_POSITIVE) {
            return Err(Error::ProbeNotCentered { mean });
        }
        Ok(ProbeState::Grid(probe))
    }

    pub fn sigma_q(&self) -> f64 {
        match self {
            ProbeState::Gaussian(g) => g.sigma_q(),
            ProbeState::Grid(g) => g.sigma_q(),
        }
    }

    /// `<P^2>`, equal to `sigma_P^2` for a centered momentum distribution.
    pub fn second_moment_p(&self) -> f64 {
        match self {
            ProbeState::Gaussian(g) => g.sigma_p().powi(2),
            ProbeState::Grid(g) => g.second_moment_p(),
        }
    }

    pub fn amplitude(&self, q: f64) -> Complex64 {
        match self {
            ProbeState::Gaussian(g) => Complex64::new(g.amplitude(q), 0.0),
            ProbeState::Grid(g) => g.amplitude_at(q),
        }
    }

    pub fn momentum_amplitude(&self, p: f64) -> Complex64 {
        match self {
            ProbeState::Gaussian(g) => Complex64::new(g.momentum_amplitude(p), 0.0),
            ProbeState::Grid(g) => g.momentum_amplitude(p),
        }
    }

    /// `g(beta) = <e^{-i beta P}>`.
    pub fn char_g(&self, beta: f64) -> Complex64 {
        if beta.abs() < BETA_ZERO {
            return Complex64::new(1.0, 0.0);
        }
        match self {
            ProbeState::Gaussian(g) => Complex64::new(g.char_g(beta), 0.0),
            ProbeState::Grid(g) => g.char_g(beta),
        }
    }

    /// `lambda(beta) = g(beta) + 2 h(beta)`, with `lambda(0) = 1`.
    pub fn lambda(&self, beta: f64) -> Complex64 {
        if beta.abs() < BETA_ZERO {
            return Complex64::new(1.0, 0.0);
        }
        match self {
            // h vanishes for a real centered Gaussian
            ProbeState::Gaussian(g) => Complex64::new(g.char_g(beta), 0.0),
            ProbeState::Grid(g) => g.char_g(beta) + 2.0 * g.char_h(beta),
        }
    }

    /// `lambda_bar(0) = g''(0) = -<P^2>`.
    pub fn lambda_bar_zero(&self) -> f64 {
        -self.second_moment_p()
    }

    /// `lambda_tilde(beta) = lambda_bar(beta) / lambda_bar(0)` with
    /// `lambda_bar(beta) = g'(beta) / beta`.
    pub fn lambda_tilde(&self, beta: f64) -> Result<Complex64> {
        let bar0 = self.lambda_bar_zero();
        if bar0.abs() < DEGENERATE_TOL {
            return Err(Error::DegenerateProbe { value: bar0.abs() });
        }
        if beta.abs() < BETA_ZERO {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(match self {
            ProbeState::Gaussian(g) => Complex64::new(g.char_g(beta), 0.0),
            ProbeState::Grid(g) => g.char_g_derivative(beta) / beta / bar0,
        })
    }

    /// Characteristic function of the position density,
    /// `int |chi(Q)|^2 e^{ikQ} dQ`.
    pub fn position_charfn(&self, k: f64) -> Complex64 {
        match self {
            ProbeState::Gaussian(g) => {
                Complex64::new((-0.5 * k * k * g.sigma_q().powi(2)).exp(), 0.0)
            }
            ProbeState::Grid(g) => {
                let dq = g.dq();
                g.amplitudes
                    .iter()
                    .enumerate()
                    .map(|(j, z)| Complex64::from_polar(z.norm_sqr(), k * g.q(j)))
                    .sum::<Complex64>()
                    * dq
            }
        }
    }

    /// Half-width beyond which the position density is negligible, used for
    /// grid-span checks.
    pub fn support_radius(&self) -> f64 {
        6.0 * self.sigma_q()
    }

    pub fn density(&self, q: f64) -> f64 {
        match self {
            ProbeState::Gaussian(g) => g.density(q),
            ProbeState::Grid(g) => g.amplitude_at(q).norm_sqr(),
        }
    }
}

/// `|chi(q)|^2` on an arbitrary set of points.
pub fn position_density(probe: &ProbeState, q_grid: &[f64]) -> Vec<f64> {
    q_grid.iter().map(|&q| probe.density(q)).collect()
}

impl<'de> Deserialize<'de> for ProbeState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let value = serde_json::Value::deserialize(d)?;
        let is_grid = value.get("n_points").is_some();
        if is_grid {
            let g = GridProbe::deserialize(value).map_err(D::Error::custom)?;
            ProbeState::grid(g).map_err(D::Error::custom)
        } else {
            let g = GaussianProbe::deserialize(value).map_err(D::Error::custom)?;
            Ok(ProbeState::Gaussian(g))
        }
    }
}

/// Trapezoid rule on a (possibly non-uniform) grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n).map(|i| a + i as f64 * step).collect()
        }
    }
}
