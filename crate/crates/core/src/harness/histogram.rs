use serde::{Deserialize, Serialize};

use super::{derived_seed, ExperimentConfig, TargetAnchor};
use crate::error::{Error, Result};
use crate::estimators::{estimate_large_k, BlockSpec};
use crate::inference::coupling::BOUNDARY_TOL;
use crate::inference::intervals::normal_cdf;
use crate::inference::{coupling_draws, CouplingKind, CouplingLaw};
use crate::ks::{ks_distance, sorted, KsReference};
use crate::par;
use crate::path::simulate_observed;
use crate::stable::{boundary_variance, moment_constant_c};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LargeKRegime {
    Gaussian,
    Boundary,
    Stable,
}

/// Finite-sample distribution of the normalised ratio `σ̂(p,β)/σ^p` next to
/// its fixed-k and large-k approximations, on shared bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramComparison {
    pub p: f64,
    pub k: usize,
    pub beta: f64,
    pub replications: usize,
    pub regime: LargeKRegime,
    /// Bin edges (one more than the number of bins).
    pub bins: Vec<f64>,
    pub finite_sample_density: Vec<f64>,
    pub fixed_k_limit_density: Vec<f64>,
    pub large_k_limit_density: Vec<f64>,
    pub ks_fixed: f64,
    pub ks_large: f64,
    /// Share of the pooled sample falling outside the binned window.
    pub outside_fraction: f64,
}

/// Large-k reference on the ratio scale: `1 + X / rate`.
enum LargeRef {
    Normal { sd: f64 },
    Sample(Vec<f64>),
}

impl LargeRef {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            LargeRef::Normal { sd } => normal_cdf((x - 1.0) / sd),
            LargeRef::Sample(s) => s.partition_point(|v| *v <= x) as f64 / s.len() as f64,
        }
    }
}

/// Freedman–Diaconis bin edges over `[lo, hi]`, between 10 and 400 bins.
pub fn freedman_diaconis_bins(sorted_sample: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let n = sorted_sample.len();
    let q = |f: f64| sorted_sample[((f * (n - 1) as f64).round() as usize).min(n - 1)];
    let iqr = q(0.75) - q(0.25);
    let width = 2.0 * iqr / (n as f64).cbrt();
    let nb = if width > 0.0 { ((hi - lo) / width).ceil() as usize } else { 10 };
    let nb = nb.clamp(10, 400);
    let step = (hi - lo) / nb as f64;
    (0..=nb).map(|i| if i == nb { hi } else { lo + i as f64 * step }).collect()
}

fn density_from_cdf(edges: &[f64], cdf: impl Fn(f64) -> f64) -> Vec<f64> {
    let mass: Vec<f64> = edges.windows(2).map(|w| (cdf(w[1]) - cdf(w[0])).max(0.0)).collect();
    let total: f64 = mass.iter().sum();
    mass.iter().zip(edges.windows(2)).map(|(m, w)| if total > 0.0 { m / (total * (w[1] - w[0])) } else { 0.0 }).collect()
}

fn empirical_cdf(sorted_sample: &[f64]) -> impl Fn(f64) -> f64 + '_ {
    move |x| sorted_sample.partition_point(|v| *v <= x) as f64 / sorted_sample.len() as f64
}

pub fn run_histogram_experiment(cfg: &ExperimentConfig) -> Result<Vec<HistogramComparison>> {
    cfg.validate()?;
    let beta = cfg.model.beta;
    let ks = cfg.block_sizes();
    let max_k = *ks.iter().max().expect("validated non-empty");
    let need = match cfg.anchor {
        TargetAnchor::BlockEnd => max_k,
        TargetAnchor::NextBlockStart => 2 * max_k,
    };
    let model = cfg.model_for(need);
    let pairs: Vec<(f64, usize)> = cfg.p_list.iter().flat_map(|p| ks.iter().map(move |k| (*p, *k))).collect();

    let rows: Vec<Result<Vec<f64>>> = par::map_indexed(cfg.replications, |r| {
        let path = simulate_observed(&model, cfg.replicate_offset + r as u64)?;
        pairs
            .iter()
            .map(|&(p, k)| {
                let j = match cfg.anchor {
                    TargetAnchor::BlockEnd => 1,
                    TargetAnchor::NextBlockStart => 2,
                };
                let est = estimate_large_k(&path.returns, BlockSpec { k, j }, p, beta)?;
                let truth = path.true_scaled_vol_at(k, beta).powf(p);
                Ok(est.value / truth)
            })
            .collect()
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;

    pairs
        .iter()
        .enumerate()
        .map(|(idx, &(p, k))| {
            let finite = sorted(rows.iter().map(|r| r[idx]).collect());
            let c = moment_constant_c(beta, p)?;
            let fixed_law = CouplingLaw::fixed_k(false, beta, p, k)?;
            let fixed = sorted(
                coupling_draws(&fixed_law, cfg.reference_size, derived_seed(cfg.seed, 2 * idx as u64 + 1))?
                    .into_iter()
                    .map(|s| s / c)
                    .collect(),
            );
            let half = 0.5 * beta;
            let kf = k as f64;
            let (regime, large) = if (p - half).abs() < BOUNDARY_TOL {
                if k < 2 {
                    return Err(Error::Regime("boundary limit needs k >= 2".into()));
                }
                (LargeKRegime::Boundary, LargeRef::Normal { sd: (boundary_variance(beta, false)? / (kf * kf.ln())).sqrt() })
            } else if p < half {
                let law = CouplingLaw::new(CouplingKind::LargeKGauss, beta, p, None)?;
                (LargeKRegime::Gaussian, LargeRef::Normal { sd: (law.gaussian_variance()? / kf).sqrt() })
            } else {
                let law = CouplingLaw::new(CouplingKind::LargeKStable, beta, p, None)?;
                let rate = kf.powf(1.0 - p / beta);
                let draws = coupling_draws(&law, cfg.reference_size, derived_seed(cfg.seed, 2 * idx as u64 + 2))?;
                (LargeKRegime::Stable, LargeRef::Sample(sorted(draws.into_iter().map(|z| 1.0 + z / rate).collect())))
            };

            let ks_fixed = ks_distance(&finite, KsReference::Sample(&fixed))?;
            let ks_large = match &large {
                LargeRef::Normal { .. } => ks_distance(&finite, KsReference::Cdf(&|x| large.cdf(x)))?,
                LargeRef::Sample(s) => ks_distance(&finite, KsReference::Sample(s))?,
            };

            let mut pooled: Vec<f64> = finite.iter().chain(fixed.iter()).copied().collect();
            if let LargeRef::Sample(s) = &large {
                pooled.extend_from_slice(s);
            }
            let pooled = sorted(pooled);
            let n = pooled.len();
            let lo = pooled[(0.001 * n as f64) as usize];
            let hi = pooled[((0.999 * n as f64) as usize).min(n - 1)];
            let outside = pooled.iter().filter(|x| **x < lo || **x > hi).count() as f64 / n as f64;
            let bins = freedman_diaconis_bins(&pooled, lo, hi);

            Ok(HistogramComparison {
                p,
                k,
                beta,
                replications: cfg.replications,
                regime,
                finite_sample_density: density_from_cdf(&bins, empirical_cdf(&finite)),
                fixed_k_limit_density: density_from_cdf(&bins, empirical_cdf(&fixed)),
                large_k_limit_density: density_from_cdf(&bins, |x| large.cdf(x)),
                bins,
                ks_fixed,
                ks_large,
                outside_fraction: outside,
            })
        })
        .collect()
}
