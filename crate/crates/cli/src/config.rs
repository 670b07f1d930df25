//! Scenario configuration: `{"scenario": <name>, "params": {...}}`.
//!
//! Every parameter has a default, so `{"scenario": "tomography"}` is a
//! complete config. Unknown keys are rejected at every level.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use vnm_core::format::MatrixJson;
use vnm_core::BasisPair;

pub const SCENARIOS: [(&str, &str); 9] = [
    ("stern-gerlach", "spin-1/2 packet split by a momentum kick; position/momentum frames and branch masses"),
    ("pointer-density", "final pointer position density for a multi-level observable at several probe widths"),
    ("reduced-state", "system state after the interaction, its coherence damping and the projective limit"),
    ("successive", "W and W~ tables, pointer correlations and joint densities of two successive measurements"),
    ("quasi-distributions", "Kirkwood, Margenau-Hill and Wigner tables of a two-level example with negativity"),
    ("tomography", "state reconstruction from exact successive-measurement correlations"),
    ("ensemble-tomography", "state reconstruction from sampled pointer readings"),
    ("conditioning-sweep", "reconstruction error under additive noise across coupling strengths"),
    ("transform-check", "expectation values recovered from the W11 quasi-probability and transformed observables"),
];

/// One validation failure, located by a dotted path into the config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Density operator source. `random` draws from the scenario seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    #[default]
    Random,
    Matrix(MatrixJson),
    File(PathBuf),
}

/// Basis-pair source for the tomography scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum BasisSpec {
    /// Computational `k` basis and discrete Fourier `mu` basis.
    #[default]
    ComputationalFourier,
    Inline(BasisPair),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spinor {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SternGerlachConfig {
    pub mass: f64,
    pub t1: f64,
    pub epsilon: f64,
    pub sigma_q: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n_points: usize,
    pub spinors: Vec<Spinor>,
}

impl Default for SternGerlachConfig {
    fn default() -> Self {
        SternGerlachConfig {
            mass: 1.0,
            t1: 1.0,
            epsilon: 4.0,
            sigma_q: 0.5,
            z_min: -32.0,
            z_max: 32.0,
            n_points: 1024,
            spinors: vec![
                Spinor { theta: 0.0, phi: 0.0 },
                Spinor { theta: PI / 2.0, phi: 0.0 },
                Spinor {
                    theta: 2.0 * PI / 3.0,
                    phi: PI / 4.0,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointerDensityConfig {
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
    pub epsilon: f64,
    pub sigma_q: Vec<f64>,
    /// Grid reaches this many probe widths beyond the extreme shifts.
    pub margin_sigmas: f64,
    pub n_points: usize,
}

impl Default for PointerDensityConfig {
    fn default() -> Self {
        PointerDensityConfig {
            eigenvalues: vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
            weights: vec![0.1, 0.2, 0.2, 0.15, 0.2, 0.05, 0.1],
            epsilon: 1.0,
            sigma_q: vec![0.05, 1.0],
            margin_sigmas: 10.0,
            n_points: 8001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReducedStateConfig {
    pub seed: u64,
    pub state: StateSpec,
    /// Observable spectrum; the eigenbasis is drawn from the seed.
    pub eigenvalues: Vec<f64>,
    pub sigma_q: f64,
    pub epsilons: Vec<f64>,
}

impl Default for ReducedStateConfig {
    fn default() -> Self {
        ReducedStateConfig {
            seed: 1,
            state: StateSpec::Random,
            eigenvalues: vec![-1.0, 0.0, 1.0],
            sigma_q: 1.0,
            epsilons: vec![0.1, 1.0, 10.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuccessiveConfig {
    pub seed: u64,
    pub state: StateSpec,
    pub eigenvalues_a: Vec<f64>,
    pub eigenvalues_b: Vec<f64>,
    pub sigma_q1: f64,
    pub sigma_q2: f64,
    pub epsilon1s: Vec<f64>,
    pub epsilon2: f64,
    /// Points per axis of the tabulated joint densities.
    pub grid_points: usize,
}

impl Default for SuccessiveConfig {
    fn default() -> Self {
        SuccessiveConfig {
            seed: 3,
            state: StateSpec::Random,
            eigenvalues_a: vec![-1.0, 0.0, 1.0],
            eigenvalues_b: vec![-1.0, 0.5, 1.0],
            sigma_q1: 1.0,
            sigma_q2: 1.0,
            epsilon1s: vec![1e-3, 1.0, 1e3],
            epsilon2: 1.0,
            grid_points: 257,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasiConfig {
    /// State `sin(theta)|0> - cos(theta)|1>`; `pi/8` minimizes the
    /// Margenau-Hill entry.
    pub theta: f64,
    pub sigma_q: f64,
    pub epsilon1s: Vec<f64>,
}

impl Default for QuasiConfig {
    fn default() -> Self {
        QuasiConfig {
            theta: PI / 8.0,
            sigma_q: 1.0,
            epsilon1s: vec![1e-7, 1.0, 1e3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    pub dim: usize,
    pub seed: u64,
    pub state: StateSpec,
    pub basis: BasisSpec,
    pub sigma_q: f64,
    pub epsilon1: f64,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        TomographyConfig {
            dim: 2,
            seed: 1,
            state: StateSpec::Random,
            basis: BasisSpec::ComputationalFourier,
            sigma_q: 1.0,
            epsilon1: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub dim: usize,
    pub seed: u64,
    pub state: StateSpec,
    pub basis: BasisSpec,
    pub sigma_q1: f64,
    pub sigma_q2: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub n_per_setting: usize,
    pub grid_points: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            dim: 2,
            seed: 1,
            state: StateSpec::Random,
            basis: BasisSpec::ComputationalFourier,
            sigma_q1: 1.0,
            sigma_q2: 1.0,
            epsilon1: 1.0,
            epsilon2: 1.0,
            n_per_setting: 1_000_000,
            grid_points: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditioningConfig {
    pub dim: usize,
    pub seed: u64,
    pub sigma_q: f64,
    pub epsilon_over_sigma: Vec<f64>,
    pub noise_level: f64,
    pub trials: usize,
}

impl Default for ConditioningConfig {
    fn default() -> Self {
        ConditioningConfig {
            dim: 2,
            seed: 42,
            sigma_q: 1.0,
            epsilon_over_sigma: vec![0.1, 0.5, 1.0, 2.0, 3.0, 5.0],
            noise_level: 1e-4,
            trials: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    pub dim: usize,
    pub seed: u64,
    pub instances: usize,
    pub basis: BasisSpec,
    pub sigma_q: f64,
    pub epsilon1s: Vec<f64>,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            dim: 3,
            seed: 11,
            instances: 100,
            basis: BasisSpec::ComputationalFourier,
            sigma_q: 1.0,
            epsilon1s: vec![0.1, 1.0, 10.0],
        }
    }
}

/// A validated scenario with every parameter filled in. Serializes back
/// to the config layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "scenario", content = "params", rename_all = "kebab-case")]
pub enum ScenarioConfig {
    SternGerlach(SternGerlachConfig),
    PointerDensity(PointerDensityConfig),
    ReducedState(ReducedStateConfig),
    Successive(SuccessiveConfig),
    QuasiDistributions(QuasiConfig),
    Tomography(TomographyConfig),
    EnsembleTomography(EnsembleConfig),
    ConditioningSweep(ConditioningConfig),
    TransformCheck(TransformConfig),
}

impl ScenarioConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioConfig::SternGerlach(_) => "stern-gerlach",
            ScenarioConfig::PointerDensity(_) => "pointer-density",
            ScenarioConfig::ReducedState(_) => "reduced-state",
            ScenarioConfig::Successive(_) => "successive",
            ScenarioConfig::QuasiDistributions(_) => "quasi-distributions",
            ScenarioConfig::Tomography(_) => "tomography",
            ScenarioConfig::EnsembleTomography(_) => "ensemble-tomography",
            ScenarioConfig::ConditioningSweep(_) => "conditioning-sweep",
            ScenarioConfig::TransformCheck(_) => "transform-check",
        }
    }

    /// The seed driving random draws, if the scenario has one.
    pub fn seed(&self) -> Option<u64> {
        match self {
            ScenarioConfig::SternGerlach(_)
            | ScenarioConfig::PointerDensity(_)
            | ScenarioConfig::QuasiDistributions(_) => None,
            ScenarioConfig::ReducedState(c) => Some(c.seed),
            ScenarioConfig::Successive(c) => Some(c.seed),
            ScenarioConfig::Tomography(c) => Some(c.seed),
            ScenarioConfig::EnsembleTomography(c) => Some(c.seed),
            ScenarioConfig::ConditioningSweep(c) => Some(c.seed),
            ScenarioConfig::TransformCheck(c) => Some(c.seed),
        }
    }

    /// Replaces the seed; scenarios without randomness are unchanged.
    pub fn override_seed(&mut self, seed: u64) {
        match self {
            ScenarioConfig::SternGerlach(_)
            | ScenarioConfig::PointerDensity(_)
            | ScenarioConfig::QuasiDistributions(_) => {}
            ScenarioConfig::ReducedState(c) => c.seed = seed,
            ScenarioConfig::Successive(c) => c.seed = seed,
            ScenarioConfig::Tomography(c) => c.seed = seed,
            ScenarioConfig::EnsembleTomography(c) => c.seed = seed,
            ScenarioConfig::ConditioningSweep(c) => c.seed = seed,
            ScenarioConfig::TransformCheck(c) => c.seed = seed,
        }
    }

    pub fn default_for(name: &str) -> Option<Self> {
        Some(match name {
            "stern-gerlach" => ScenarioConfig::SternGerlach(Default::default()),
            "pointer-density" => ScenarioConfig::PointerDensity(Default::default()),
            "reduced-state" => ScenarioConfig::ReducedState(Default::default()),
            "successive" => ScenarioConfig::Successive(Default::default()),
            "quasi-distributions" => ScenarioConfig::QuasiDistributions(Default::default()),
            "tomography" => ScenarioConfig::Tomography(Default::default()),
            "ensemble-tomography" => ScenarioConfig::EnsembleTomography(Default::default()),
            "conditioning-sweep" => ScenarioConfig::ConditioningSweep(Default::default()),
            "transform-check" => ScenarioConfig::TransformCheck(Default::default()),
            _ => return None,
        })
    }
}

fn parse_params<T: DeserializeOwned>(params: Value) -> Result<T, Vec<ConfigError>> {
    serde_path_to_error::deserialize(params).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { "params".to_string() } else { format!("params.{inner}") };
        vec![ConfigError::new(path, e.into_inner().to_string())]
    })
}

/// Parses and validates config text. All semantic errors are collected;
/// structural errors stop at the first one.
pub fn validate_config(raw: &str) -> Result<ScenarioConfig, Vec<ConfigError>> {
    let value: Value = if raw.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(raw).map_err(|e| vec![ConfigError::new("", format!("invalid JSON: {e}"))])?
    };
    let Value::Object(mut top) = value else {
        return Err(vec![ConfigError::new("", "config must be a JSON object")]);
    };
    let mut errors: Vec<ConfigError> = top
        .keys()
        .filter(|k| *k != "scenario" && *k != "params")
        .map(|k| ConfigError::new(k.as_str(), "unknown key"))
        .collect();
    let params = top.remove("params").unwrap_or_else(|| Value::Object(Map::new()));
    if !params.is_object() {
        errors.push(ConfigError::new("params", "must be an object"));
    }
    let name = match top.remove("scenario") {
        None => {
            errors.insert(0, ConfigError::new("scenario", "required"));
            None
        }
        Some(Value::String(s)) if ScenarioConfig::default_for(&s).is_some() => Some(s),
        Some(other) => {
            let names: Vec<&str> = SCENARIOS.iter().map(|(n, _)| *n).collect();
            errors.push(ConfigError::new(
                "scenario",
                format!("unknown scenario {other}; expected one of {}", names.join(", ")),
            ));
            None
        }
    };
    let Some(name) = name.filter(|_| errors.is_empty()) else {
        return Err(errors);
    };

    let config = match name.as_str() {
        "stern-gerlach" => ScenarioConfig::SternGerlach(parse_params(params)?),
        "pointer-density" => ScenarioConfig::PointerDensity(parse_params(params)?),
        "reduced-state" => ScenarioConfig::ReducedState(parse_params(params)?),
        "successive" => ScenarioConfig::Successive(parse_params(params)?),
        "quasi-distributions" => ScenarioConfig::QuasiDistributions(parse_params(params)?),
        "tomography" => ScenarioConfig::Tomography(parse_params(params)?),
        "ensemble-tomography" => ScenarioConfig::EnsembleTomography(parse_params(params)?),
        "conditioning-sweep" => ScenarioConfig::ConditioningSweep(parse_params(params)?),
        _ => ScenarioConfig::TransformCheck(parse_params(params)?),
    };
    let errors = check(&config);
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(errors)
    }
}

struct Checker(Vec<ConfigError>);

impl Checker {
    fn fail(&mut self, key: &str, message: String) {
        self.0.push(ConfigError::new(format!("params.{key}"), message));
    }

    fn positive(&mut self, key: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.fail(key, format!("{key} must be > 0"));
        }
    }

    fn finite(&mut self, key: &str, v: f64) {
        if !v.is_finite() {
            self.fail(key, format!("{key} must be finite"));
        }
    }

    fn all_positive(&mut self, key: &str, vs: &[f64]) {
        if vs.is_empty() {
            self.fail(key, format!("{key} must not be empty"));
        }
        for (i, v) in vs.iter().enumerate() {
            if !(*v > 0.0 && v.is_finite()) {
                self.fail(&format!("{key}[{i}]"), format!("{key} must be > 0"));
            }
        }
    }

    fn at_least(&mut self, key: &str, v: usize, min: usize) {
        if v < min {
            self.fail(key, format!("{key} must be >= {min}"));
        }
    }

    fn spectrum(&mut self, key: &str, vs: &[f64], dim: Option<usize>) {
        if vs.len() < 2 {
            self.fail(key, format!("{key} needs at least 2 entries"));
        }
        if vs.iter().any(|v| !v.is_finite()) {
            self.fail(key, format!("{key} must be finite"));
        }
        let mut sorted = vs.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            self.fail(key, format!("{key} must be distinct"));
        }
        if let Some(d) = dim {
            if vs.len() != d {
                self.fail(key, format!("{key} must have {d} entries"));
            }
        }
    }

    fn state(&mut self, spec: &StateSpec, dim: usize) {
        if let StateSpec::Matrix(m) = spec {
            if m.dim != dim {
                self.fail("state.matrix.dim", format!("state dimension must be {dim}"));
            }
        }
    }
}

fn check(config: &ScenarioConfig) -> Vec<ConfigError> {
    let mut c = Checker(Vec::new());
    match config {
        ScenarioConfig::SternGerlach(p) => {
            c.positive("mass", p.mass);
            c.positive("t1", p.t1);
            c.positive("epsilon", p.epsilon);
            c.positive("sigma_q", p.sigma_q);
            c.finite("z_min", p.z_min);
            c.finite("z_max", p.z_max);
            if !(p.z_max > p.z_min) {
                c.fail("z_max", "z_max must be > z_min".into());
            }
            if p.n_points < 8 || !p.n_points.is_power_of_two() {
                c.fail("n_points", "n_points must be a power of two >= 8".into());
            }
            if p.spinors.is_empty() {
                c.fail("spinors", "spinors must not be empty".into());
            }
            for (i, s) in p.spinors.iter().enumerate() {
                c.finite(&format!("spinors[{i}].theta"), s.theta);
                c.finite(&format!("spinors[{i}].phi"), s.phi);
            }
        }
        ScenarioConfig::PointerDensity(p) => {
            c.spectrum("eigenvalues", &p.eigenvalues, None);
            if p.weights.len() != p.eigenvalues.len() {
                c.fail("weights", "weights must match eigenvalues in length".into());
            }
            if p.weights.iter().any(|w| !(*w >= 0.0)) {
                c.fail("weights", "weights must be >= 0".into());
            }
            if (p.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                c.fail("weights", "weights must sum to 1".into());
            }
            c.positive("epsilon", p.epsilon);
            c.all_positive("sigma_q", &p.sigma_q);
            c.positive("margin_sigmas", p.margin_sigmas);
            if p.margin_sigmas <= 6.0 {
                c.fail("margin_sigmas", "margin_sigmas must be > 6".into());
            }
            c.at_least("n_points", p.n_points, 3);
        }
        ScenarioConfig::ReducedState(p) => {
            c.spectrum("eigenvalues", &p.eigenvalues, None);
            c.state(&p.state, p.eigenvalues.len());
            c.positive("sigma_q", p.sigma_q);
            c.all_positive("epsilons", &p.epsilons);
        }
        ScenarioConfig::Successive(p) => {
            c.spectrum("eigenvalues_a", &p.eigenvalues_a, None);
            c.spectrum("eigenvalues_b", &p.eigenvalues_b, Some(p.eigenvalues_a.len()));
            c.state(&p.state, p.eigenvalues_a.len());
            c.positive("sigma_q1", p.sigma_q1);
            c.positive("sigma_q2", p.sigma_q2);
            c.all_positive("epsilon1s", &p.epsilon1s);
            c.positive("epsilon2", p.epsilon2);
            c.at_least("grid_points", p.grid_points, 3);
        }
        ScenarioConfig::QuasiDistributions(p) => {
            c.finite("theta", p.theta);
            c.positive("sigma_q", p.sigma_q);
            c.all_positive("epsilon1s", &p.epsilon1s);
        }
        ScenarioConfig::Tomography(p) => {
            c.at_least("dim", p.dim, 2);
            c.state(&p.state, p.dim);
            c.positive("sigma_q", p.sigma_q);
            c.positive("epsilon1", p.epsilon1);
        }
        ScenarioConfig::EnsembleTomography(p) => {
            c.at_least("dim", p.dim, 2);
            c.state(&p.state, p.dim);
            c.positive("sigma_q1", p.sigma_q1);
            c.positive("sigma_q2", p.sigma_q2);
            c.positive("epsilon1", p.epsilon1);
            c.positive("epsilon2", p.epsilon2);
            c.at_least("n_per_setting", p.n_per_setting, 100);
            c.at_least("grid_points", p.grid_points, 16);
        }
        ScenarioConfig::ConditioningSweep(p) => {
            c.at_least("dim", p.dim, 2);
            c.positive("sigma_q", p.sigma_q);
            c.all_positive("epsilon_over_sigma", &p.epsilon_over_sigma);
            if !(p.noise_level >= 0.0 && p.noise_level.is_finite()) {
                c.fail("noise_level", "noise_level must be >= 0".into());
            }
            c.at_least("trials", p.trials, 1);
        }
        ScenarioConfig::TransformCheck(p) => {
            c.at_least("dim", p.dim, 2);
            c.at_least("instances", p.instances, 1);
            c.positive("sigma_q", p.sigma_q);
            c.all_positive("epsilon1s", &p.epsilon1s);
        }
    }
    c.0
}
