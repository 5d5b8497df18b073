//! Simulation of `dX_t = b_t dt + σ_{t−} dZ_t` with a symmetric β-stable
//! driver and (by default) the two-factor square-root variance
//! `σ_t² = V₁ + V₂`. Time is measured in trading days.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::rng::{Channel, SeedStream};
use crate::stable::StableLaw;

/// Parameters of two independent CIR variance factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirParams {
    pub kappa1: f64,
    pub theta1: f64,
    pub xi1: f64,
    pub kappa2: f64,
    pub theta2: f64,
    pub xi2: f64,
}

impl Default for CirParams {
    fn default() -> Self {
        Self { kappa1: 0.0128, theta1: 0.4068, xi1: 0.0954, kappa2: 0.6930, theta2: 0.4068, xi2: 0.7023 }
    }
}

impl CirParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa1, self.theta1, self.xi1, self.kappa2, self.theta2, self.xi2];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(param("CIR parameters must be finite and positive"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "value")]
pub enum DriftSpec {
    Zero,
    Constant(f64),
    /// Built-in deterministic drift looked up by name (see [`DriftSpec::NAMES`]).
    Named(String),
}

impl DriftSpec {
    pub const NAMES: &'static [&'static str] = &["sine"];

    fn validate(&self) -> Result<()> {
        match self {
            DriftSpec::Constant(b) if !b.is_finite() => Err(param("drift must be finite")),
            DriftSpec::Named(n) if !Self::NAMES.contains(&n.as_str()) => {
                Err(param(format!("unknown drift function '{n}'")))
            }
            _ => Ok(()),
        }
    }

    fn at(&self, t: f64) -> f64 {
        match self {
            DriftSpec::Zero => 0.0,
            DriftSpec::Constant(b) => *b,
            // intraday oscillation with period one day
            DriftSpec::Named(_) => 0.05 * (2.0 * std::f64::consts::PI * t).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "value")]
pub enum VolSpec {
    TwoFactorCir(CirParams),
    Constant(f64),
    /// Built-in deterministic volatility curve looked up by name.
    Named(String),
}

impl VolSpec {
    pub const NAMES: &'static [&'static str] = &["u_shape"];

    fn validate(&self) -> Result<()> {
        match self {
            VolSpec::TwoFactorCir(c) => c.validate(),
            VolSpec::Constant(s) if !(*s >= 0.0 && s.is_finite()) => Err(param("constant volatility must be >= 0")),
            VolSpec::Named(n) if !Self::NAMES.contains(&n.as_str()) => {
                Err(param(format!("unknown volatility function '{n}'")))
            }
            _ => Ok(()),
        }
    }
}

fn u_shape(t: f64) -> f64 {
    let x = t.fract() - 0.5;
    0.6 + 1.6 * x * x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub beta: f64,
    pub horizon: f64,
    pub fine_dt: f64,
    pub obs_dt: f64,
    pub drift: DriftSpec,
    pub vol: VolSpec,
    pub seed: u64,
}

pub const SECONDS_PER_DAY: f64 = 23_400.0;
pub const MINUTES_PER_DAY: f64 = 390.0;

fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    let rounded = r.round();
    if rounded >= 1.0 && (r - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        Some(rounded as usize)
    } else {
        None
    }
}

impl ModelConfig {
    /// One trading day, 1-second Euler mesh, 1-minute returns, two-factor
    /// CIR variance and no drift.
    pub fn standard(beta: f64, seed: u64) -> Self {
        Self {
            beta,
            horizon: 1.0,
            fine_dt: 1.0 / SECONDS_PER_DAY,
            obs_dt: 1.0 / MINUTES_PER_DAY,
            drift: DriftSpec::Zero,
            vol: VolSpec::TwoFactorCir(CirParams::default()),
            seed,
        }
    }

    /// Constant volatility, zero drift, simulated directly on the observation mesh.
    pub fn constant_vol(beta: f64, sigma: f64, obs_dt: f64, n_obs: usize, seed: u64) -> Self {
        Self {
            beta,
            horizon: obs_dt * n_obs as f64,
            fine_dt: obs_dt,
            obs_dt,
            drift: DriftSpec::Zero,
            vol: VolSpec::Constant(sigma),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 2.0) {
            return Err(param(format!("beta must lie in (0, 2), got {}", self.beta)));
        }
        if !(self.fine_dt > 0.0 && self.obs_dt > 0.0 && self.horizon > 0.0) {
            return Err(param("meshes and horizon must be positive"));
        }
        self.steps_per_obs()?;
        self.n_obs()?;
        self.drift.validate()?;
        self.vol.validate()
    }

    pub fn steps_per_obs(&self) -> Result<usize> {
        integer_ratio(self.obs_dt, self.fine_dt)
            .ok_or_else(|| param("observation mesh must be a positive integer multiple of the fine mesh"))
    }

    pub fn n_obs(&self) -> Result<usize> {
        integer_ratio(self.horizon, self.obs_dt)
            .ok_or_else(|| param("horizon must be a positive integer multiple of the observation mesh"))
    }

    /// Copy with the horizon cut to the first `n_obs` observations.
    pub fn truncated(&self, n_obs: usize) -> Self {
        Self { horizon: self.obs_dt * n_obs as f64, ..self.clone() }
    }
}

/// Equally spaced increments of the observed process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    increments: Vec<f64>,
    delta_n: f64,
    horizon: f64,
}

impl ReturnSeries {
    pub fn new(increments: Vec<f64>, delta_n: f64) -> Result<Self> {
        if !(delta_n > 0.0 && delta_n.is_finite()) {
            return Err(param("delta_n must be positive"));
        }
        if increments.is_empty() {
            return Err(param("return series is empty"));
        }
        if increments.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format("non-finite increment".into()));
        }
        let horizon = delta_n * increments.len() as f64;
        Ok(Self { increments, delta_n, horizon })
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }
    pub fn delta_n(&self) -> f64 {
        self.delta_n
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn len(&self) -> usize {
        self.increments.len()
    }
    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// All increments multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { increments: self.increments.iter().map(|x| x * factor).collect(), ..*self }
    }

    /// Sums of adjacent pairs: the series on mesh `2Δₙ`. A trailing unpaired
    /// increment is dropped; the flag reports whether that happened.
    pub fn aggregated_pairs(&self) -> (Vec<f64>, bool) {
        let pairs = self.increments.chunks_exact(2).map(|c| c[0] + c[1]).collect();
        (pairs, self.increments.len() % 2 == 1)
    }
}

/// Fine-mesh ground truth together with the observed returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPath {
    pub config: ModelConfig,
    pub replicate: u64,
    pub fine_times: Vec<f64>,
    pub x_fine: Vec<f64>,
    pub sigma_fine: Vec<f64>,
    pub b_fine: Vec<f64>,
    pub returns: ReturnSeries,
    /// σ at observation times `0, Δₙ, …, nΔₙ`.
    pub sigma_at_obs: Vec<f64>,
}

impl SimulatedPath {
    /// Index of `t` on the observation grid.
    pub fn obs_index(&self, t: f64) -> Result<usize> {
        let d = self.returns.delta_n();
        let r = t / d;
        let i = r.round();
        if i < 0.0 || (r - i).abs() > 1e-6 || i as usize >= self.sigma_at_obs.len() {
            return Err(param(format!("t = {t} is not on the observation grid")));
        }
        Ok(i as usize)
    }

    /// `Δₙ^{1/β} σ_t` from the simulated truth.
    pub fn true_scaled_vol(&self, t: f64, beta: f64) -> Result<f64> {
        let i = self.obs_index(t)?;
        Ok(scaled_vol(self.sigma_at_obs[i], self.returns.delta_n(), beta))
    }
}

pub fn scaled_vol(sigma: f64, delta_n: f64, beta: f64) -> f64 {
    delta_n.powf(1.0 / beta) * sigma
}

/// Observed returns and σ on the observation grid, without fine-mesh storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedPath {
    pub returns: ReturnSeries,
    pub sigma_at_obs: Vec<f64>,
}

impl ObservedPath {
    pub fn true_scaled_vol_at(&self, obs_index: usize, beta: f64) -> f64 {
        scaled_vol(self.sigma_at_obs[obs_index], self.returns.delta_n(), beta)
    }
}

struct Sink<'a> {
    fine: Option<(&'a mut Vec<f64>, &'a mut Vec<f64>, &'a mut Vec<f64>)>,
}

/// Euler stepping shared by both simulation entry points. Returns
/// `(X at observation times, σ at observation times)`.
fn step_path(cfg: &ModelConfig, replicate: u64, mut sink: Sink<'_>) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let m = cfg.steps_per_obs()?;
    let n = cfg.n_obs()?;
    let dt = cfg.fine_dt;
    let sqrt_dt = dt.sqrt();
    let streams = SeedStream::new(cfg.seed);
    let mut z_rng = streams.substream(Channel::Driver, replicate);
    // ΔZ over dt has cf exp(−dt |u|^β / 2)
    let driver = StableLaw::symmetric(cfg.beta, (0.5 * dt).powf(1.0 / cfg.beta))?.sampler();

    let mut cir = match &cfg.vol {
        VolSpec::TwoFactorCir(p) => Some((
            *p,
            p.theta1,
            p.theta2,
            streams.substream(Channel::VolFactor1, replicate),
            streams.substream(Channel::VolFactor2, replicate),
        )),
        _ => None,
    };
    let sigma_of = |t: f64, cir: &Option<(CirParams, f64, f64, _, _)>| -> f64 {
        match (&cfg.vol, cir) {
            (VolSpec::TwoFactorCir(_), Some((_, v1, v2, _, _))) => (v1.max(0.0) + v2.max(0.0)).sqrt(),
            (VolSpec::Constant(s), _) => *s,
            (VolSpec::Named(_), _) => u_shape(t),
            _ => unreachable!(),
        }
    };

    let mut x = 0.0;
    let mut x_obs = Vec::with_capacity(n + 1);
    let mut sigma_obs = Vec::with_capacity(n + 1);
    x_obs.push(x);
    sigma_obs.push(sigma_of(0.0, &cir));
    for i in 0..n * m {
        let t = i as f64 * dt;
        let sigma = sigma_of(t, &cir);
        let b = cfg.drift.at(t);
        if let Some((xs, ss, bs)) = sink.fine.as_mut() {
            xs.push(x);
            ss.push(sigma);
            bs.push(b);
        }
        x += b * dt + sigma * driver.sample(&mut z_rng);
        if let Some((p, v1, v2, r1, r2)) = cir.as_mut() {
            let n1: f64 = r1.sample(StandardNormal);
            let n2: f64 = r2.sample(StandardNormal);
            let p1 = v1.max(0.0);
            let p2 = v2.max(0.0);
            *v1 = (p1 + p.kappa1 * (p.theta1 - p1) * dt + p.xi1 * p1.sqrt() * sqrt_dt * n1).max(0.0);
            *v2 = (p2 + p.kappa2 * (p.theta2 - p2) * dt + p.xi2 * p2.sqrt() * sqrt_dt * n2).max(0.0);
        }
        if (i + 1) % m == 0 {
            x_obs.push(x);
            sigma_obs.push(sigma_of((i + 1) as f64 * dt, &cir));
        }
    }
    if let Some((xs, ss, bs)) = sink.fine.as_mut() {
        let t = (n * m) as f64 * dt;
        xs.push(x);
        ss.push(sigma_of(t, &cir));
        bs.push(cfg.drift.at(t));
    }
    Ok((x_obs, sigma_obs))
}

fn returns_from(x_obs: &[f64], delta_n: f64) -> Result<ReturnSeries> {
    ReturnSeries::new(x_obs.windows(2).map(|w| w[1] - w[0]).collect(), delta_n)
}

/// Simulate replicate 0 of `cfg` with full fine-mesh output.
pub fn simulate_path(cfg: &ModelConfig) -> Result<SimulatedPath> {
    simulate_path_replicate(cfg, 0)
}

pub fn simulate_path_replicate(cfg: &ModelConfig, replicate: u64) -> Result<SimulatedPath> {
    let (mut xs, mut ss, mut bs) = (Vec::new(), Vec::new(), Vec::new());
    let (x_obs, sigma_at_obs) = step_path(cfg, replicate, Sink { fine: Some((&mut xs, &mut ss, &mut bs)) })?;
    let fine_times = (0..xs.len()).map(|i| i as f64 * cfg.fine_dt).collect();
    // observation times lie on the fine grid, so returns are exact differences of X_fine
    let m = cfg.steps_per_obs()?;
    debug_assert!(x_obs.iter().enumerate().all(|(i, v)| *v == xs[i * m]));
    Ok(SimulatedPath {
        config: cfg.clone(),
        replicate,
        fine_times,
        x_fine: xs,
        sigma_fine: ss,
        b_fine: bs,
        returns: returns_from(&x_obs, cfg.obs_dt)?,
        sigma_at_obs,
    })
}

/// Replicate `replicate` of `cfg`, keeping only the observation grid.
/// Identical to the corresponding fields of [`simulate_path_replicate`].
pub fn simulate_observed(cfg: &ModelConfig, replicate: u64) -> Result<ObservedPath> {
    let (x_obs, sigma_at_obs) = step_path(cfg, replicate, Sink { fine: None })?;
    Ok(ObservedPath { returns: returns_from(&x_obs, cfg.obs_dt)?, sigma_at_obs })
}
