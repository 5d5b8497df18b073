use serde::{Deserialize, Serialize};

use super::derived_seed;
use crate::error::{param, Error, Result};
use crate::inference::coupling::BOUNDARY_TOL;
use crate::inference::intervals::normal_cdf;
use crate::inference::{coupling_draws, CouplingKind, CouplingLaw};
use crate::ks::{ks_distance, sorted, KsReference};
use crate::par;
use crate::rng::{Channel, SeedStream};
use crate::stable::{boundary_variance, moment_constant_c, moment_constant_c_tilde, StableLaw};

/// Centred, rescaled power sums of driver draws whose large-k limits are
/// known in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatistic {
    /// `k^{-1/2} Σ (|Zᵢ|^p/c − 1)`, `p < β/2`.
    Gaussian,
    /// `k^{-p/β} Σ (|Zᵢ|^p/c − 1)`, `β/2 < p < β`.
    Stable,
    /// `(k/2)^{-p/β} Σ_{k/2} (|Z̃ᵢ|^p/c̃ − 1)`, `β/2 < p < β`.
    StableDiff,
    /// `(k log k)^{-1/2} Σ (|Zᵢ|^p/c − 1)`, `p = β/2`.
    Boundary,
}

impl LimitStatistic {
    fn coupling_kind(&self) -> CouplingKind {
        match self {
            LimitStatistic::Gaussian => CouplingKind::LargeKGauss,
            LimitStatistic::Stable => CouplingKind::LargeKStable,
            LimitStatistic::StableDiff => CouplingKind::LargeKStableDiff,
            LimitStatistic::Boundary => CouplingKind::BoundaryGauss,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub statistic: LimitStatistic,
    pub beta: f64,
    pub p: f64,
    pub k: usize,
    pub replications: usize,
    /// Size of the Monte Carlo reference sample; 0 when the limit CDF is exact.
    pub reference_size: usize,
    pub ks: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
}

/// `replications` draws of the statistic at block size `k`.
pub fn limit_statistic_sample(
    stat: LimitStatistic,
    beta: f64,
    p: f64,
    k: usize,
    replications: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    CouplingLaw::new(stat.coupling_kind(), beta, p, None)?;
    if k < 2 || replications == 0 {
        return Err(param("limit statistics need k >= 2 and at least one replication"));
    }
    let (terms, law, c) = match stat {
        LimitStatistic::StableDiff => {
            if !k.is_multiple_of(2) {
                return Err(param("differenced statistic needs an even k"));
            }
            (k / 2, StableLaw::differenced_driver(beta)?, moment_constant_c_tilde(beta, p)?)
        }
        _ => (k, StableLaw::driver(beta)?, moment_constant_c(beta, p)?),
    };
    let m = terms as f64;
    let scale = match stat {
        LimitStatistic::Gaussian => m.sqrt(),
        LimitStatistic::Stable | LimitStatistic::StableDiff => m.powf(p / beta),
        LimitStatistic::Boundary => (m * m.ln()).sqrt(),
    };
    let sampler = law.sampler();
    let streams = SeedStream::new(seed);
    Ok(par::map_indexed(replications, |r| {
        let mut rng = streams.substream(Channel::Auxiliary, r as u64);
        let s: f64 = (0..terms).map(|_| sampler.sample(&mut rng).abs().powf(p) / c - 1.0).sum();
        s / scale
    }))
}

/// KS distance between the finite-k statistic and its limit law. Gaussian
/// limits use the exact CDF, stable limits a reference sample.
pub fn run_limit_check(
    stat: LimitStatistic,
    beta: f64,
    p: f64,
    k: usize,
    replications: usize,
    reference_size: usize,
    seed: u64,
) -> Result<LimitCheck> {
    let sample = sorted(limit_statistic_sample(stat, beta, p, k, replications, seed)?);
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let law = CouplingLaw::new(stat.coupling_kind(), beta, p, None)?;
    let (ks, reference_size) = match stat {
        LimitStatistic::Gaussian | LimitStatistic::Boundary => {
            if stat == LimitStatistic::Boundary && (p - 0.5 * beta).abs() >= BOUNDARY_TOL {
                return Err(Error::Regime("boundary statistic needs p = beta/2".into()));
            }
            let sd = match stat {
                LimitStatistic::Boundary => boundary_variance(beta, false)?,
                _ => law.gaussian_variance()?,
            }
            .sqrt();
            (ks_distance(&sample, KsReference::Cdf(&|x| normal_cdf(x / sd)))?, 0)
        }
        _ => {
            let reference = sorted(coupling_draws(&law, reference_size, derived_seed(seed, 0x5ab1e))?);
            (ks_distance(&sample, KsReference::Sample(&reference))?, reference_size)
        }
    };
    Ok(LimitCheck {
        statistic: stat,
        beta,
        p,
        k,
        replications,
        reference_size,
        ks,
        sample_mean: mean,
        sample_variance: var,
    })
}
