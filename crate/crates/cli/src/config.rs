//! Scenario configuration files.
//!
//! A config is a TOML document with a `scenario` name, an optional `seed`,
//! an `[environment]` table and one table named after the scenario:
//!
//! ```toml
//! scenario = "rates"
//!
//! [environment]
//! m_E = 1.0
//! g = 1.0
//! beta = inf
//!
//! [rates]
//! sigma = 5.0
//! omega_grid = { start = -4.0, stop = 4.0, points = 81 }
//! ```
//!
//! All quantities are plain numbers in units with `hbar = c = 1`, measured
//! in the same energy unit as `m_E`. Defaults that depend on the mass scale
//! (`sigma = 5 / m_E`, `cutoff = 40 m_E`) are filled in at parse time.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Scenario {
    Rates,
    LambShift,
    MarkovLimit,
    Kms,
    Gkls,
    Langevin,
    Unravel,
    Noise,
    Curl,
    Boost,
    Cq,
    Tradeoff,
}

impl Scenario {
    pub const ALL: [Scenario; 12] = [
        Self::Rates,
        Self::LambShift,
        Self::MarkovLimit,
        Self::Kms,
        Self::Gkls,
        Self::Langevin,
        Self::Unravel,
        Self::Noise,
        Self::Curl,
        Self::Boost,
        Self::Cq,
        Self::Tradeoff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rates => "rates",
            Self::LambShift => "lamb_shift",
            Self::MarkovLimit => "markov_limit",
            Self::Kms => "kms",
            Self::Gkls => "gkls",
            Self::Langevin => "langevin",
            Self::Unravel => "unravel",
            Self::Noise => "noise",
            Self::Curl => "curl",
            Self::Boost => "boost",
            Self::Cq => "cq",
            Self::Tradeoff => "tradeoff",
        }
    }

    /// Scenarios that draw random numbers and therefore need a seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Self::Unravel | Self::Noise)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ConfigError(format!("scenario: unknown scenario {s:?}")))
    }
}

/// A list of values, or `points` evenly spaced values from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![start],
                n => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
            },
        }
    }

    fn validate(&self, key: &str) -> Result<(), ConfigError> {
        let values = self.values();
        if values.is_empty() {
            return fail(format!("{key}: grid is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return fail(format!("{key}: grid values must be finite"));
        }
        Ok(())
    }
}

/// A real scalar or a real matrix given as rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RealMatrix {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl RealMatrix {
    pub fn rows(&self) -> Vec<Vec<f64>> {
        match self {
            RealMatrix::Scalar(v) => vec![vec![*v]],
            RealMatrix::Rows(r) => r.clone(),
        }
    }

    fn validate(&self, key: &str) -> Result<(), ConfigError> {
        let rows = self.rows();
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return fail(format!("{key}: matrix rows must be non-empty and of equal length"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return fail(format!("{key}: matrix entries must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    #[serde(rename = "m_E")]
    pub mass: f64,
    #[serde(rename = "g")]
    pub coupling: f64,
    #[serde(default = "infinite")]
    pub beta: f64,
    #[serde(default)]
    pub rapidity: f64,
    /// Energy cutoff for time-domain correlators.
    pub cutoff: Option<f64>,
}

fn infinite() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesParams {
    pub sigma: Option<f64>,
    pub omega_grid: Grid,
    /// Two-column `(s, w)` table replacing the Gaussian kernel.
    pub kernel_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambShiftParams {
    pub sigmas: Option<Vec<f64>>,
    pub cutoffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovLimitParams {
    pub omega: Option<f64>,
    pub sigmas: Option<Vec<f64>>,
    /// Largest relative error accepted at the widest kernel.
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KmsParams {
    pub omegas: Grid,
    pub sigmas: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
}

/// A qubit relaxing through rates computed from the environment, or a
/// model loaded from a GKLS model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub model_file: Option<PathBuf>,
    pub omega0: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma_down: Option<f64>,
    pub gamma_up: Option<f64>,
    /// Basis index of the initial pure state; the top level by default.
    pub initial_state: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GklsParams {
    pub model_file: Option<PathBuf>,
    pub omega0: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma_down: Option<f64>,
    pub gamma_up: Option<f64>,
    pub initial_state: Option<usize>,
    pub t_final: f64,
    pub n_times: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LangevinParams {
    pub energy: f64,
    pub gamma: Option<f64>,
    pub nbar: Option<f64>,
    pub tau_max: f64,
    pub n_points: Option<usize>,
    /// Initial coherent amplitude as `[re, im]`.
    pub alpha0: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnravelParams {
    pub model_file: Option<PathBuf>,
    pub omega0: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma_down: Option<f64>,
    pub gamma_up: Option<f64>,
    pub initial_state: Option<usize>,
    pub t_final: f64,
    pub dt: f64,
    pub n_traj: usize,
    pub record_intervals: Option<usize>,
    /// Also write every trajectory to `trajectories.bin`.
    pub raw_dump: Option<bool>,
    pub abs_tolerance: Option<f64>,
    pub sigma_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    pub sigma: Option<f64>,
    pub grid: Grid,
    pub n_real: usize,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurlRateMode {
    NormalSampled,
    NormalIndependent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurlParams {
    pub n_sites: Option<usize>,
    pub spacing: Option<f64>,
    pub tilt_rapidity: Option<f64>,
    /// Explicit slice heights; overrides `n_sites` and `tilt_rapidity`.
    pub heights: Option<Vec<f64>>,
    pub rate_mode: Option<CurlRateMode>,
    pub sigmas: Option<Vec<f64>>,
    pub sites: Option<[usize; 2]>,
    pub eps: Option<f64>,
    pub site_gap: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostSources {
    Comoving,
    Geometric,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostParams {
    pub sizes: Option<Vec<usize>>,
    pub rate_source: Option<BoostSources>,
    pub d_eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitOperator {
    SigmaZ,
    SigmaX,
    Lowering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitState {
    Ground,
    Excited,
    Plus,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CqParams {
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub lindblad: Option<QubitOperator>,
    /// Qubit splitting of the clock-independent Hamiltonian.
    pub omega0: Option<f64>,
    /// Coefficient of `z sigma_z` in the Hamiltonian.
    pub clock_coupling: Option<f64>,
    pub initial: Option<QubitState>,
    pub z_min: Option<f64>,
    pub z_max: Option<f64>,
    pub n_cells: Option<usize>,
    pub centre: Option<f64>,
    pub width: Option<f64>,
    pub t_final: f64,
    pub dt: f64,
    pub snapshots: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffParams {
    pub d0: RealMatrix,
    pub d1: RealMatrix,
    pub d2: RealMatrix,
}

/// Scenario-specific parameters with all defaults resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameters {
    Rates(RatesParams),
    LambShift(LambShiftParams),
    MarkovLimit(MarkovLimitParams),
    Kms(KmsParams),
    Gkls(GklsParams),
    Langevin(LangevinParams),
    Unravel(UnravelParams),
    Noise(NoiseParams),
    Curl(CurlParams),
    Boost(BoostParams),
    Cq(CqParams),
    Tradeoff(TradeoffParams),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    scenario: Option<String>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    environment: Option<Environment>,
    rates: Option<RatesParams>,
    lamb_shift: Option<LambShiftParams>,
    markov_limit: Option<MarkovLimitParams>,
    kms: Option<KmsParams>,
    gkls: Option<GklsParams>,
    langevin: Option<LangevinParams>,
    unravel: Option<UnravelParams>,
    noise: Option<NoiseParams>,
    curl: Option<CurlParams>,
    boost: Option<BoostParams>,
    cq: Option<CqParams>,
    tradeoff: Option<TradeoffParams>,
}

/// A validated scenario configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    pub environment: Environment,
    pub parameters: Parameters,
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<Scenario>,
    pub seed: Option<u64>,
}

fn positive(key: &str, value: f64) -> Result<f64, ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        fail(format!("{key} must be > 0"))
    }
}

fn nonnegative(key: &str, value: f64) -> Result<f64, ConfigError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        fail(format!("{key} must be >= 0"))
    }
}

fn finite(key: &str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() {
        Ok(value)
    } else {
        fail(format!("{key} must be finite"))
    }
}

fn at_least(key: &str, value: usize, min: usize) -> Result<usize, ConfigError> {
    if value >= min {
        Ok(value)
    } else {
        fail(format!("{key} must be >= {min}"))
    }
}

fn sigma_list(key: &str, given: Option<Vec<f64>>, default: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
    let values = given.unwrap_or(default);
    if values.is_empty() {
        return fail(format!("{key}: list is empty"));
    }
    for &s in &values {
        positive("sigma", s)?;
    }
    Ok(values)
}

impl Environment {
    fn validate(mut self) -> Result<Self, ConfigError> {
        positive("m_E", self.mass)?;
        nonnegative("g", self.coupling)?;
        if !(self.beta > 0.0) {
            return fail("beta must be > 0 (use inf for the vacuum)");
        }
        finite("rapidity", self.rapidity)?;
        self.cutoff = Some(positive("cutoff", self.cutoff.unwrap_or(40.0 * self.mass))?);
        Ok(self)
    }

    pub fn is_vacuum(&self) -> bool {
        self.beta.is_infinite()
    }

    pub fn default_sigma(&self) -> f64 {
        5.0 / self.mass
    }
}

macro_rules! model_accessors {
    ($($t:ty),*) => {$(
        impl $t {
            pub fn model(&self) -> ModelParams {
                ModelParams {
                    model_file: self.model_file.clone(),
                    omega0: self.omega0,
                    sigma: self.sigma,
                    gamma_down: self.gamma_down,
                    gamma_up: self.gamma_up,
                    initial_state: self.initial_state,
                }
            }

            fn set_model(&mut self, m: ModelParams) {
                self.model_file = m.model_file;
                self.omega0 = m.omega0;
                self.sigma = m.sigma;
                self.gamma_down = m.gamma_down;
                self.gamma_up = m.gamma_up;
                self.initial_state = m.initial_state;
            }
        }
    )*};
}

model_accessors!(GklsParams, UnravelParams);

fn section<T>(value: Option<T>, scenario: Scenario) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError(format!("{scenario}: missing required table [{scenario}]")))
}

fn resolve_model(mut m: ModelParams, env: &Environment) -> Result<ModelParams, ConfigError> {
    if m.model_file.is_some() {
        if m.omega0.is_some() || m.sigma.is_some() || m.gamma_down.is_some() || m.gamma_up.is_some() {
            return fail("model_file: cannot be combined with omega0, sigma, gamma_down or gamma_up");
        }
        return Ok(m);
    }
    m.omega0 = Some(positive("omega0", m.omega0.unwrap_or(2.0 * env.mass))?);
    m.sigma = Some(positive("sigma", m.sigma.unwrap_or(env.default_sigma()))?);
    if let Some(g) = m.gamma_down {
        nonnegative("gamma_down", g)?;
    }
    if let Some(g) = m.gamma_up {
        nonnegative("gamma_up", g)?;
    }
    Ok(m)
}

fn resolve(scenario: Scenario, file: ConfigFile, env: &Environment) -> Result<Parameters, ConfigError> {
    let m = env.mass;
    Ok(match scenario {
        Scenario::Rates => {
            let mut p = section(file.rates, scenario)?;
            if p.kernel_csv.is_some() && p.sigma.is_some() {
                return fail("kernel_csv: cannot be combined with sigma");
            }
            if p.kernel_csv.is_none() {
                p.sigma = Some(positive("sigma", p.sigma.unwrap_or(env.default_sigma()))?);
            }
            p.omega_grid.validate("omega_grid")?;
            Parameters::Rates(p)
        }
        Scenario::LambShift => {
            let mut p = file.lamb_shift.unwrap_or(LambShiftParams { sigmas: None, cutoffs: None });
            p.sigmas = Some(sigma_list("sigmas", p.sigmas, vec![env.default_sigma()])?);
            let cutoffs = p.cutoffs.unwrap_or(vec![env.cutoff.unwrap_or(40.0 * m)]);
            if cutoffs.is_empty() {
                return fail("cutoffs: list is empty");
            }
            for &c in &cutoffs {
                positive("cutoff", c)?;
            }
            p.cutoffs = Some(cutoffs);
            Parameters::LambShift(p)
        }
        Scenario::MarkovLimit => {
            let mut p = file.markov_limit.unwrap_or(MarkovLimitParams { omega: None, sigmas: None, tolerance: None });
            p.omega = Some(finite("omega", p.omega.unwrap_or(-3.0 * m))?);
            p.sigmas = Some(sigma_list("sigmas", p.sigmas, [2.0, 5.0, 10.0, 20.0].map(|s| s / m).to_vec())?);
            if p.sigmas.as_ref().is_some_and(|s| s.len() < 2) {
                return fail("sigmas: a convergence study needs at least two values");
            }
            p.tolerance = Some(positive("tolerance", p.tolerance.unwrap_or(1e-3))?);
            Parameters::MarkovLimit(p)
        }
        Scenario::Kms => {
            if env.is_vacuum() {
                return fail("beta: the kms scenario needs a finite inverse temperature");
            }
            let mut p = section(file.kms, scenario)?;
            p.omegas.validate("omegas")?;
            p.sigmas = Some(sigma_list("sigmas", p.sigmas, [2.0, 5.0, 10.0, 20.0].map(|s| s / m).to_vec())?);
            p.tolerance = Some(positive("tolerance", p.tolerance.unwrap_or(1e-12))?);
            Parameters::Kms(p)
        }
        Scenario::Gkls => {
            let mut p = section(file.gkls, scenario)?;
            p.set_model(resolve_model(p.model(), env)?);
            positive("t_final", p.t_final)?;
            p.n_times = Some(at_least("n_times", p.n_times.unwrap_or(101), 2)?);
            Parameters::Gkls(p)
        }
        Scenario::Langevin => {
            let mut p = section(file.langevin, scenario)?;
            finite("energy", p.energy)?;
            positive("tau_max", p.tau_max)?;
            if let Some(g) = p.gamma {
                nonnegative("gamma", g)?;
            }
            if let Some(n) = p.nbar {
                nonnegative("nbar", n)?;
            }
            if p.gamma.is_none() && p.energy < m {
                return fail("energy: rates from the environment need energy >= m_E");
            }
            p.n_points = Some(at_least("n_points", p.n_points.unwrap_or(101), 2)?);
            p.alpha0 = Some(p.alpha0.unwrap_or([1.0, 0.0]));
            Parameters::Langevin(p)
        }
        Scenario::Unravel => {
            let mut p = section(file.unravel, scenario)?;
            p.set_model(resolve_model(p.model(), env)?);
            positive("t_final", p.t_final)?;
            positive("dt", p.dt)?;
            at_least("n_traj", p.n_traj, 1)?;
            p.record_intervals = Some(at_least("record_intervals", p.record_intervals.unwrap_or(100), 1)?);
            p.raw_dump = Some(p.raw_dump.unwrap_or(false));
            p.abs_tolerance = Some(positive("abs_tolerance", p.abs_tolerance.unwrap_or(0.02))?);
            p.sigma_factor = Some(positive("sigma_factor", p.sigma_factor.unwrap_or(5.0))?);
            Parameters::Unravel(p)
        }
        Scenario::Noise => {
            let mut p = section(file.noise, scenario)?;
            p.sigma = Some(positive("sigma", p.sigma.unwrap_or(env.default_sigma()))?);
            p.grid.validate("grid")?;
            at_least("n_real", p.n_real, 2)?;
            p.tolerance = Some(positive("tolerance", p.tolerance.unwrap_or(0.05))?);
            Parameters::Noise(p)
        }
        Scenario::Curl => {
            let mut p = file.curl.unwrap_or(CurlParams {
                n_sites: None,
                spacing: None,
                tilt_rapidity: None,
                heights: None,
                rate_mode: None,
                sigmas: None,
                sites: None,
                eps: None,
                site_gap: None,
                tolerance: None,
            });
            if p.heights.is_some() && (p.n_sites.is_some() || p.tilt_rapidity.is_some()) {
                return fail("heights: cannot be combined with n_sites or tilt_rapidity");
            }
            match &p.heights {
                Some(h) => {
                    for &v in h {
                        finite("heights", v)?;
                    }
                }
                None => {
                    p.n_sites = Some(at_least("n_sites", p.n_sites.unwrap_or(4), 2)?);
                    p.tilt_rapidity = Some(finite("tilt_rapidity", p.tilt_rapidity.unwrap_or(0.0))?);
                }
            }
            p.spacing = Some(positive("spacing", p.spacing.unwrap_or(1.0 / m))?);
            p.rate_mode = Some(p.rate_mode.unwrap_or(CurlRateMode::NormalSampled));
            p.sigmas = Some(sigma_list("sigmas", p.sigmas, vec![env.default_sigma()])?);
            p.sites = Some(p.sites.unwrap_or([1, 2]));
            p.eps = Some(positive("eps", p.eps.unwrap_or(1e-4))?);
            p.site_gap = Some(positive("site_gap", p.site_gap.unwrap_or(3.0 * m))?);
            p.tolerance = Some(positive("tolerance", p.tolerance.unwrap_or(1e-12))?);
            Parameters::Curl(p)
        }
        Scenario::Boost => {
            let mut p = file.boost.unwrap_or(BoostParams { sizes: None, rate_source: None, d_eta: None });
            let sizes = p.sizes.unwrap_or(vec![16, 32, 64]);
            if sizes.is_empty() {
                return fail("sizes: list is empty");
            }
            p.sizes = Some(sizes);
            p.rate_source = Some(p.rate_source.unwrap_or(BoostSources::Both));
            p.d_eta = Some(positive("d_eta", p.d_eta.unwrap_or(1e-3))?);
            Parameters::Boost(p)
        }
        Scenario::Cq => {
            let mut p = section(file.cq, scenario)?;
            nonnegative("d0", p.d0)?;
            finite("d1", p.d1)?;
            nonnegative("d2", p.d2)?;
            p.lindblad = Some(p.lindblad.unwrap_or(QubitOperator::SigmaZ));
            p.omega0 = Some(finite("omega0", p.omega0.unwrap_or(0.0))?);
            p.clock_coupling = Some(finite("clock_coupling", p.clock_coupling.unwrap_or(0.0))?);
            p.initial = Some(p.initial.unwrap_or(QubitState::Plus));
            let z_min = finite("z_min", p.z_min.unwrap_or(-4.0))?;
            let z_max = finite("z_max", p.z_max.unwrap_or(4.0))?;
            if z_max <= z_min {
                return fail("z_max: must exceed z_min");
            }
            p.z_min = Some(z_min);
            p.z_max = Some(z_max);
            p.n_cells = Some(at_least("n_cells", p.n_cells.unwrap_or(64), 2)?);
            p.centre = Some(finite("centre", p.centre.unwrap_or(0.0))?);
            p.width = Some(positive("width", p.width.unwrap_or(0.25))?);
            positive("t_final", p.t_final)?;
            positive("dt", p.dt)?;
            p.snapshots = Some(at_least("snapshots", p.snapshots.unwrap_or(5), 1)?);
            Parameters::Cq(p)
        }
        Scenario::Tradeoff => {
            let p = section(file.tradeoff, scenario)?;
            p.d0.validate("d0")?;
            p.d1.validate("d1")?;
            p.d2.validate("d2")?;
            Parameters::Tradeoff(p)
        }
    })
}

/// Parse and validate a config document.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError(format!("config: {}", e.message())))?;
    let named = file.scenario.as_deref().map(Scenario::from_str).transpose()?;
    let scenario = match (overrides.scenario, named) {
        (Some(a), Some(b)) if a != b => {
            return fail(format!("scenario: the command line asks for {a} but the config describes {b}"));
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => return fail("scenario: missing required key"),
    };
    let present = [
        (Scenario::Rates, file.rates.is_some()),
        (Scenario::LambShift, file.lamb_shift.is_some()),
        (Scenario::MarkovLimit, file.markov_limit.is_some()),
        (Scenario::Kms, file.kms.is_some()),
        (Scenario::Gkls, file.gkls.is_some()),
        (Scenario::Langevin, file.langevin.is_some()),
        (Scenario::Unravel, file.unravel.is_some()),
        (Scenario::Noise, file.noise.is_some()),
        (Scenario::Curl, file.curl.is_some()),
        (Scenario::Boost, file.boost.is_some()),
        (Scenario::Cq, file.cq.is_some()),
        (Scenario::Tradeoff, file.tradeoff.is_some()),
    ];
    if let Some((other, _)) = present.iter().find(|(s, p)| *p && *s != scenario) {
        return fail(format!("{other}: table does not belong to scenario {scenario}"));
    }
    let seed = overrides.seed.or(file.seed);
    if scenario.is_stochastic() && seed.is_none() {
        return fail(format!("seed: required for the stochastic scenario {scenario}"));
    }
    let environment = match file.environment.clone() {
        Some(e) => e.validate()?,
        None => return fail("environment: missing required table [environment] with m_E and g"),
    };
    let output_path = file.output.clone();
    let parameters = resolve(scenario, file, &environment)?;
    Ok(ScenarioConfig { scenario, seed, environment, parameters, output_path })
}

impl ScenarioConfig {
    /// Canonical TOML rendering of the resolved config, defaults included.
    pub fn canonical_text(&self) -> String {
        toml::to_string(self).expect("resolved configs are serialisable")
    }
}
