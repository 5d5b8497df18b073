//! Coupling laws and Monte Carlo quantile tables.

use std::collections::HashMap;
use std::sync::Mutex;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::par;
use crate::rng::{Channel, SeedStream};
use crate::stable::{boundary_variance, moment_constant_c, moment_constant_c_tilde, StableLaw, StableLimitScale};

/// Tolerance deciding whether `p` sits on the `β/2` boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Minimum table size accepted by [`coupling_sample`].
pub const MIN_TABLE_SIZE: usize = 10_000;

/// Draws per independent substream when building a table.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    /// `S̄_k(p) = k⁻¹ Σ |Zᵢ|^p`, `Z ~ S(β, 0, 2^{-1/β}, 0)`.
    FixedKFirst,
    /// `S̃_k(p) = (2/k) Σ_{k/2 terms} |Z̃ᵢ|^p`, `Z̃ ~ S(β, 0, 1, 0)`.
    FixedKDiff,
    LargeKGauss,
    LargeKGaussDiff,
    LargeKStable,
    LargeKStableDiff,
    BoundaryGauss,
    BoundaryGaussDiff,
}

impl CouplingKind {
    pub fn is_fixed_k(&self) -> bool {
        matches!(self, CouplingKind::FixedKFirst | CouplingKind::FixedKDiff)
    }

    pub fn is_differenced(&self) -> bool {
        matches!(
            self,
            CouplingKind::FixedKDiff
                | CouplingKind::LargeKGaussDiff
                | CouplingKind::LargeKStableDiff
                | CouplingKind::BoundaryGaussDiff
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CouplingKind::FixedKFirst => "fixed_k_first",
            CouplingKind::FixedKDiff => "fixed_k_diff",
            CouplingKind::LargeKGauss => "largek_gauss",
            CouplingKind::LargeKGaussDiff => "largek_gauss_diff",
            CouplingKind::LargeKStable => "largek_stable",
            CouplingKind::LargeKStableDiff => "largek_stable_diff",
            CouplingKind::BoundaryGauss => "boundary_gauss",
            CouplingKind::BoundaryGaussDiff => "boundary_gauss_diff",
        }
    }
}

impl std::fmt::Display for CouplingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One draw of a coupling variable from a stream.
pub type DrawFn = Box<dyn Fn(&mut crate::rng::StreamRng) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingLaw {
    pub kind: CouplingKind,
    pub beta: f64,
    pub p: f64,
    /// Block size; only meaningful for the fixed-k kinds.
    pub k: Option<usize>,
}

impl CouplingLaw {
    pub fn fixed_k(differenced: bool, beta: f64, p: f64, k: usize) -> Result<Self> {
        let kind = if differenced { CouplingKind::FixedKDiff } else { CouplingKind::FixedKFirst };
        Self::new(kind, beta, p, Some(k))
    }

    pub fn new(kind: CouplingKind, beta: f64, p: f64, k: Option<usize>) -> Result<Self> {
        let law = Self { kind, beta, p, k: if kind.is_fixed_k() { k } else { None } };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 2.0) {
            return Err(param(format!("beta must lie in (0, 2), got {}", self.beta)));
        }
        if !(self.p > 0.0) {
            return Err(param("p must be positive"));
        }
        let half = 0.5 * self.beta;
        match self.kind {
            CouplingKind::FixedKFirst | CouplingKind::FixedKDiff => {
                let k = self.k.ok_or_else(|| param("fixed-k coupling law needs a block size"))?;
                if k == 0 {
                    return Err(param("block size must be >= 1"));
                }
                if self.kind == CouplingKind::FixedKDiff && k % 2 != 0 {
                    return Err(param("differenced coupling law needs an even block size"));
                }
            }
            CouplingKind::LargeKGauss | CouplingKind::LargeKGaussDiff => {
                if self.p >= half - BOUNDARY_TOL {
                    return Err(Error::Regime(format!(
                        "Gaussian limit needs p < beta/2 = {half}; use the stable or boundary interval"
                    )));
                }
            }
            CouplingKind::BoundaryGauss | CouplingKind::BoundaryGaussDiff => {
                if (self.p - half).abs() >= BOUNDARY_TOL {
                    return Err(Error::Regime(format!("boundary limit needs p = beta/2 = {half}")));
                }
            }
            CouplingKind::LargeKStable | CouplingKind::LargeKStableDiff => {
                if self.p <= half + BOUNDARY_TOL || self.p >= self.beta {
                    return Err(Error::Regime(format!(
                        "stable limit needs beta/2 < p < beta, got p = {} and beta = {}",
                        self.p, self.beta
                    )));
                }
            }
        }
        Ok(())
    }

    /// Variance of the Gaussian limit for the Gaussian and boundary kinds.
    pub fn gaussian_variance(&self) -> Result<f64> {
        match self.kind {
            CouplingKind::LargeKGauss => {
                let c = moment_constant_c(self.beta, self.p)?;
                Ok(moment_constant_c(self.beta, 2.0 * self.p)? / (c * c) - 1.0)
            }
            CouplingKind::LargeKGaussDiff => {
                let c = moment_constant_c_tilde(self.beta, self.p)?;
                Ok(moment_constant_c_tilde(self.beta, 2.0 * self.p)? / (c * c) - 1.0)
            }
            CouplingKind::BoundaryGauss => boundary_variance(self.beta, false),
            CouplingKind::BoundaryGaussDiff => boundary_variance(self.beta, true),
            _ => Err(param(format!("{} has no Gaussian limit", self.kind))),
        }
    }

    /// Limit law of the stable kinds.
    pub fn stable_limit(&self) -> Result<StableLaw> {
        let s = StableLimitScale::new(self.beta, self.p)?;
        match self.kind {
            CouplingKind::LargeKStable => s.limit_law(),
            CouplingKind::LargeKStableDiff => s.limit_law_diff(),
            _ => Err(param(format!("{} has no stable limit", self.kind))),
        }
    }

    /// Sampler for one realisation of the coupling variable.
    pub fn draw_fn(&self) -> Result<DrawFn> {
        self.validate()?;
        let p = self.p;
        Ok(match self.kind {
            CouplingKind::FixedKFirst => {
                let k = self.k.unwrap_or(1);
                let s = StableLaw::driver(self.beta)?.sampler();
                let inv_k = 1.0 / k as f64;
                Box::new(move |rng| (0..k).map(|_| s.sample(rng).abs().powf(p)).sum::<f64>() * inv_k)
            }
            CouplingKind::FixedKDiff => {
                let half = self.k.unwrap_or(2) / 2;
                let s = StableLaw::differenced_driver(self.beta)?.sampler();
                let inv = 1.0 / half as f64;
                Box::new(move |rng| (0..half).map(|_| s.sample(rng).abs().powf(p)).sum::<f64>() * inv)
            }
            CouplingKind::LargeKStable | CouplingKind::LargeKStableDiff => {
                let s = self.stable_limit()?.sampler();
                Box::new(move |rng| s.sample(rng))
            }
            _ => {
                let sd = self.gaussian_variance()?.sqrt();
                Box::new(move |rng| {
                    let z: f64 = StandardNormal.sample(rng);
                    sd * z
                })
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    /// Shortest window of consecutive order statistics.
    Hdi,
    EqualTail,
}

/// Sorted Monte Carlo sample of a coupling law.
#[derive(Debug)]
pub struct QuantileTable {
    pub law: CouplingLaw,
    pub mc_size: usize,
    pub seed: u64,
    sorted_sample: Vec<f64>,
    /// Sorted reciprocals, only for fixed-k laws.
    reciprocal: Option<Vec<f64>>,
    alpha_cache: Mutex<HashMap<(u64, BoundMethod), (f64, f64)>>,
}

impl QuantileTable {
    /// Wrap an already sorted sample.
    pub fn from_sorted(law: CouplingLaw, seed: u64, sorted_sample: Vec<f64>) -> Result<Self> {
        if sorted_sample.is_empty() {
            return Err(param("empty quantile table"));
        }
        if !sorted_sample.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::Format("quantile table sample is not sorted".into()));
        }
        let reciprocal = law.kind.is_fixed_k().then(|| sorted_sample.iter().rev().map(|x| 1.0 / x).collect());
        Ok(Self {
            law,
            mc_size: sorted_sample.len(),
            seed,
            sorted_sample,
            reciprocal,
            alpha_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn sorted_sample(&self) -> &[f64] {
        &self.sorted_sample
    }

    /// The sample bounds are taken over: `1/S` for fixed-k laws, the draw itself otherwise.
    pub fn bound_sample(&self) -> &[f64] {
        self.reciprocal.as_deref().unwrap_or(&self.sorted_sample)
    }

    /// Empirical `q`-quantile (lower order statistic) of the stored sample.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.sorted_sample.len();
        let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.sorted_sample[idx]
    }

    /// Bounds `(L, U)` holding `⌈(1−α)N⌉` consecutive order statistics of
    /// [`Self::bound_sample`].
    pub fn bounds(&self, alpha: f64, method: BoundMethod) -> Result<(f64, f64)> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(param(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let key = (alpha.to_bits(), method);
        if let Some(b) = self.alpha_cache.lock().expect("alpha cache poisoned").get(&key) {
            return Ok(*b);
        }
        let b = window_bounds(self.bound_sample(), alpha, method);
        self.alpha_cache.lock().expect("alpha cache poisoned").insert(key, b);
        Ok(b)
    }
}

/// Number of order statistics inside a `1−α` window of `n` points.
pub fn window_len(n: usize, alpha: f64) -> usize {
    // guard against 0.9 * 10 = 8.999…
    let m = ((1.0 - alpha) * n as f64 - 1e-9).ceil() as usize;
    m.clamp(1, n)
}

fn window_bounds(sorted: &[f64], alpha: f64, method: BoundMethod) -> (f64, f64) {
    let n = sorted.len();
    let m = window_len(n, alpha);
    let start = match method {
        BoundMethod::EqualTail => (((n - m) as f64) / 2.0).floor() as usize,
        BoundMethod::Hdi => {
            let mut best = 0;
            let mut width = f64::INFINITY;
            for i in 0..=n - m {
                let w = sorted[i + m - 1] - sorted[i];
                if w < width {
                    width = w;
                    best = i;
                }
            }
            best
        }
    };
    (sorted[start], sorted[start + m - 1])
}

/// `n` i.i.d. draws of the coupling variable, sorted ascending.
///
/// Draws are produced in chunks, each from its own substream of `seed`, so
/// the table does not depend on the thread count. Tables for different `β`
/// built from the same seed share their uniforms.
pub fn coupling_sample(law: CouplingLaw, n: usize, seed: u64) -> Result<QuantileTable> {
    if n < MIN_TABLE_SIZE {
        return Err(param(format!("quantile tables need at least {MIN_TABLE_SIZE} draws, got {n}")));
    }
    let draws = coupling_draws(&law, n, seed)?;
    QuantileTable::from_sorted(law, seed, crate::ks::sorted(draws))
}

/// Unsorted draws of the coupling variable (any `n ≥ 1`).
pub fn coupling_draws(law: &CouplingLaw, n: usize, seed: u64) -> Result<Vec<f64>> {
    let draw = law.draw_fn()?;
    let streams = SeedStream::new(seed);
    let chunks = n.div_ceil(CHUNK);
    let parts = par::map_indexed(chunks, |c| {
        let mut rng = streams.substream(Channel::Coupling, c as u64);
        let len = CHUNK.min(n - c * CHUNK);
        (0..len).map(|_| draw(&mut rng)).collect::<Vec<f64>>()
    });
    Ok(parts.concat())
}
