//! Monte Carlo experiments: finite-sample vs limit distributions of the
//! ratio `σ̂/σ^p`, interval coverage, and the large-k limit laws of the
//! coupling sums.
//!
//! Replicate `r` of an experiment always uses substream `offset + r` of the
//! experiment seed, so runs are reproducible bit for bit and can be split
//! into disjoint replicate ranges and pooled afterwards.

mod coverage;
mod histogram;
mod limits;
mod output;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::path::ModelConfig;

pub use coverage::{
    BETA_PV_POWER, THRESHOLD_MULTIPLIERS, THRESHOLD_VARPI,
    run_beta_experiment, run_coverage_experiment, run_feasible_experiment, BetaReport, CiMethod, CoverageReport,
    FeasibleReport,
};
pub use histogram::{freedman_diaconis_bins, run_histogram_experiment, HistogramComparison, LargeKRegime};
pub use limits::{limit_statistic_sample, run_limit_check, LimitCheck, LimitStatistic};
pub use output::{histogram_file_name, write_coverage, write_histograms, write_ks_table, write_manifest, RunManifest};

/// Which σ the ratio of the first block is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetAnchor {
    /// Block 1, truth at its right end `t = kΔₙ`.
    #[default]
    BlockEnd,
    /// Block 2, truth at its left end `t = kΔₙ`.
    NextBlockStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub p_list: Vec<f64>,
    pub k_list: Vec<usize>,
    pub alpha: f64,
    pub replications: usize,
    /// First replicate index; lets several runs cover disjoint ranges.
    #[serde(default)]
    pub replicate_offset: u64,
    #[serde(default)]
    pub methods: Vec<CiMethod>,
    pub seed: u64,
    /// Block-growth exponent: `kₙ = ⌈Δₙ^{-γ}⌉` when set.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub anchor: TargetAnchor,
    /// Size of the Monte Carlo reference samples of the limit laws.
    pub reference_size: usize,
    /// Size of the quantile tables used by interval methods.
    pub table_size: usize,
}

/// Default replication count (desk scale).
pub const DEFAULT_REPLICATIONS: usize = 10_000;
/// Replication count of the `--full` preset.
pub const FULL_REPLICATIONS: usize = 100_000;

impl ExperimentConfig {
    /// β = 1.6 with two-factor CIR variance, `p ∈ {0.6, 1}`, `k ∈ {5, 15, 30, 60}`.
    pub fn standard(seed: u64) -> Self {
        Self {
            model: ModelConfig::standard(1.6, seed),
            p_list: vec![0.6, 1.0],
            k_list: vec![5, 15, 30, 60],
            alpha: 0.1,
            replications: DEFAULT_REPLICATIONS,
            replicate_offset: 0,
            methods: Vec::new(),
            seed,
            gamma: None,
            anchor: TargetAnchor::BlockEnd,
            reference_size: 100_000,
            table_size: crate::inference::DEFAULT_TABLE_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.replications < 100 {
            return Err(param("experiments need at least 100 replications"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(param("alpha must lie in (0, 1)"));
        }
        if self.p_list.is_empty() || self.p_list.iter().any(|p| !(*p > 0.0 && *p < self.model.beta)) {
            return Err(param("every p must lie in (0, beta)"));
        }
        if self.k_list.is_empty() && self.gamma.is_none() {
            return Err(param("k_list is empty and no gamma rule is set"));
        }
        if self.k_list.contains(&0) {
            return Err(param("block sizes must be >= 1"));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(param("gamma must lie in (0, 1)"));
            }
        }
        if self.reference_size < 1000 {
            return Err(param("reference samples need at least 1000 draws"));
        }
        Ok(())
    }

    /// Block sizes of the experiment, including the `γ` rule when set.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut ks = self.k_list.clone();
        if let Some(g) = self.gamma {
            let k = self.model.obs_dt.powf(-g).ceil() as usize;
            if !ks.contains(&k) {
                ks.push(k);
            }
        }
        ks
    }

    pub(crate) fn model_for(&self, n_obs: usize) -> ModelConfig {
        ModelConfig { seed: self.seed, ..self.model.truncated(n_obs) }
    }
}

/// Seed of an auxiliary sample derived from the experiment seed.
pub(crate) fn derived_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
