use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, TargetAnchor};
use crate::activity::{adaptive_thresholds, beta_second_diff_pv, beta_threshold_count, beta_two_scale_pv, BetaMethod};
use crate::error::{param, Error, Result};
use crate::estimators::{estimate_fixed_k, estimate_fixed_k_diff, estimate_large_k, estimate_large_k_diff, BlockSpec};
use crate::inference::{
    beta_grid, ci_boundary_gauss, ci_fixed_k, ci_large_k_gauss, ci_large_k_stable, BoundMethod, ConfidenceInterval,
    CouplingKind, CouplingLaw, TableCache, Transform, DEFAULT_TABLE_SEED,
};
use crate::par;
use crate::path::{scaled_vol, simulate_observed, simulate_path_replicate, ModelConfig, ReturnSeries};

/// Interval construction evaluated by a coverage run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum CiMethod {
    FixedK { differenced: bool, bound: BoundMethod },
    LargeKGauss { differenced: bool },
    LargeKStable { differenced: bool, split: BoundMethod },
    Boundary { differenced: bool },
}

impl CiMethod {
    pub fn fixed_k() -> Self {
        CiMethod::FixedK { differenced: false, bound: BoundMethod::Hdi }
    }

    fn differenced(&self) -> bool {
        match *self {
            CiMethod::FixedK { differenced, .. }
            | CiMethod::LargeKGauss { differenced }
            | CiMethod::LargeKStable { differenced, .. }
            | CiMethod::Boundary { differenced } => differenced,
        }
    }

    fn coupling_kind(&self) -> CouplingKind {
        let d = self.differenced();
        match self {
            CiMethod::FixedK { .. } if d => CouplingKind::FixedKDiff,
            CiMethod::FixedK { .. } => CouplingKind::FixedKFirst,
            CiMethod::LargeKGauss { .. } if d => CouplingKind::LargeKGaussDiff,
            CiMethod::LargeKGauss { .. } => CouplingKind::LargeKGauss,
            CiMethod::LargeKStable { .. } if d => CouplingKind::LargeKStableDiff,
            CiMethod::LargeKStable { .. } => CouplingKind::LargeKStable,
            CiMethod::Boundary { .. } if d => CouplingKind::BoundaryGaussDiff,
            CiMethod::Boundary { .. } => CouplingKind::BoundaryGauss,
        }
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match self {
            CiMethod::FixedK { bound, .. } => format!("{}_{}", self.coupling_kind(), bound_label(*bound)),
            CiMethod::LargeKStable { split, .. } => format!("{}_{}", self.coupling_kind(), bound_label(*split)),
            _ => self.coupling_kind().to_string(),
        }
    }

    /// Check the method applies at `(β, p, k)`.
    pub fn check(&self, beta: f64, p: f64, k: usize) -> Result<()> {
        let kind = self.coupling_kind();
        CouplingLaw::new(kind, beta, p, Some(k))?;
        if self.differenced() && !k.is_multiple_of(2) {
            return Err(param(format!("differenced intervals need an even block size, got k={k}")));
        }
        Ok(())
    }

    /// Interval on the σ scale from the block's returns.
    pub fn interval(
        &self,
        r: &ReturnSeries,
        block: BlockSpec,
        p: f64,
        beta: f64,
        alpha: f64,
        cache: &TableCache,
    ) -> Result<ConfidenceInterval> {
        let d = self.differenced();
        match *self {
            CiMethod::FixedK { bound, .. } => {
                let est = if d { estimate_fixed_k_diff(r, block, p)? } else { estimate_fixed_k(r, block, p)? };
                ci_fixed_k(&est, beta, alpha, bound, cache)
            }
            _ => {
                let est = if d { estimate_large_k_diff(r, block, p, beta)? } else { estimate_large_k(r, block, p, beta)? };
                match *self {
                    CiMethod::LargeKGauss { .. } => ci_large_k_gauss(&est, Transform::Log, alpha),
                    CiMethod::Boundary { .. } => ci_boundary_gauss(&est, Transform::Log, alpha),
                    CiMethod::LargeKStable { split, .. } => {
                        ci_large_k_stable(&est, Transform::Log, alpha, split, cache)
                    }
                    CiMethod::FixedK { .. } => unreachable!(),
                }
            }
        }
    }
}

fn bound_label(b: BoundMethod) -> &'static str {
    match b {
        BoundMethod::Hdi => "hdi",
        BoundMethod::EqualTail => "equal_tail",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub method: CiMethod,
    pub p: f64,
    pub k: usize,
    pub nominal: f64,
    pub empirical: f64,
    pub mc_se: f64,
    /// Mean width on the σ scale.
    pub mean_width: f64,
    pub replications: usize,
}

impl CoverageReport {
    fn from_hits(method: CiMethod, p: f64, k: usize, nominal: f64, hits: &[(bool, f64)]) -> Self {
        let n = hits.len();
        let empirical = hits.iter().filter(|h| h.0).count() as f64 / n as f64;
        let mean_width = hits.iter().map(|h| h.1).sum::<f64>() / n as f64;
        Self {
            method,
            p,
            k,
            nominal,
            empirical,
            mc_se: (empirical * (1.0 - empirical) / n as f64).sqrt(),
            mean_width,
            replications: n,
        }
    }

    /// Distance from nominal in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.empirical - self.nominal) / self.mc_se.max(f64::MIN_POSITIVE)
    }
}

fn table_cache(cfg: &ExperimentConfig) -> TableCache {
    TableCache::new(cfg.table_size, DEFAULT_TABLE_SEED).with_env_dir()
}

fn anchored_block(anchor: TargetAnchor, k: usize) -> BlockSpec {
    match anchor {
        TargetAnchor::BlockEnd => BlockSpec { k, j: 1 },
        TargetAnchor::NextBlockStart => BlockSpec { k, j: 2 },
    }
}

/// Empirical coverage of `σ_{n,t}`, `t = kΔₙ`, for every method and `(p, k)`.
pub fn run_coverage_experiment(cfg: &ExperimentConfig) -> Result<Vec<CoverageReport>> {
    cfg.validate()?;
    if cfg.methods.is_empty() {
        return Err(param("coverage experiment needs at least one interval method"));
    }
    let beta = cfg.model.beta;
    let ks = cfg.block_sizes();
    let mut cells = Vec::new();
    for m in &cfg.methods {
        for &p in &cfg.p_list {
            for &k in &ks {
                m.check(beta, p, k)?;
                cells.push((*m, p, k));
            }
        }
    }
    let max_k = *ks.iter().max().expect("validated non-empty");
    let need = match cfg.anchor {
        TargetAnchor::BlockEnd => max_k,
        TargetAnchor::NextBlockStart => 2 * max_k,
    };
    let model = cfg.model_for(need);
    let cache = table_cache(cfg);
    // build tables up front so workers only read them
    for (m, p, k) in &cells {
        if matches!(m, CiMethod::FixedK { .. } | CiMethod::LargeKStable { .. }) {
            cache.get(&CouplingLaw::new(m.coupling_kind(), beta, *p, Some(*k))?)?;
        }
    }

    let rows: Vec<Result<Vec<(bool, f64)>>> = par::map_indexed(cfg.replications, |r| {
        let path = simulate_observed(&model, cfg.replicate_offset + r as u64)?;
        cells
            .iter()
            .map(|(m, p, k)| {
                let ci = m.interval(&path.returns, anchored_block(cfg.anchor, *k), *p, beta, cfg.alpha, &cache)?;
                let truth = path.true_scaled_vol_at(*k, beta);
                let (lo, hi) = ci.sigma_bounds();
                Ok((lo <= truth && truth <= hi, hi - lo))
            })
            .collect()
    });
    let rows: Vec<Vec<(bool, f64)>> = rows.into_iter().collect::<Result<_>>()?;
    Ok(cells
        .iter()
        .enumerate()
        .map(|(i, (m, p, k))| {
            let hits: Vec<(bool, f64)> = rows.iter().map(|r| r[i]).collect();
            CoverageReport::from_hits(*m, *p, *k, 1.0 - cfg.alpha, &hits)
        })
        .collect())
}

/// Effect of plugging an estimated activity index into the fixed-k interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleReport {
    pub p: f64,
    pub k: usize,
    pub beta: f64,
    /// Power used by the second-difference β estimator.
    pub beta_power: f64,
    pub replications: usize,
    pub median_beta_hat: f64,
    /// Share of replicates whose endpoints both move by less than `tolerance`
    /// relative to the known-β interval.
    pub stable_fraction: f64,
    pub tolerance: f64,
    pub known: CoverageReport,
    pub feasible: CoverageReport,
}

/// Known-β vs estimated-β fixed-k intervals on the first block of each path.
/// β̂ comes from the second-difference power variation on the fine-mesh
/// returns of the whole horizon.
pub fn run_feasible_experiment(cfg: &ExperimentConfig, beta_power: f64, tolerance: f64) -> Result<FeasibleReport> {
    cfg.validate()?;
    let (p, k) = match (cfg.p_list.as_slice(), cfg.k_list.as_slice()) {
        ([p], [k]) => (*p, *k),
        _ => return Err(param("feasible experiment takes exactly one p and one k")),
    };
    let beta = cfg.model.beta;
    let method = CiMethod::fixed_k();
    method.check(beta, p, k)?;
    let model = ModelConfig { seed: cfg.seed, ..cfg.model.clone() };
    let cache = table_cache(cfg);
    let block = anchored_block(cfg.anchor, k);

    struct Row {
        beta_hat: f64,
        known: (bool, f64),
        feasible: (bool, f64),
        stable: bool,
    }
    let rows: Vec<Result<Row>> = par::map_indexed(cfg.replications, |r| {
        let path = simulate_path_replicate(&model, cfg.replicate_offset + r as u64)?;
        let fine = ReturnSeries::new(path.x_fine.windows(2).map(|w| w[1] - w[0]).collect(), model.fine_dt)?;
        let beta_hat = beta_second_diff_pv(&fine, beta_power)?;
        let b = beta_grid(beta_hat.value);
        if !(b > p && b < 2.0) {
            return Err(Error::Domain(format!("estimated beta {b} leaves the admissible range")));
        }
        let est = estimate_fixed_k(&path.returns, block, p)?;
        let known = ci_fixed_k(&est, beta, cfg.alpha, BoundMethod::Hdi, &cache)?;
        let feas = ci_fixed_k(&est, b, cfg.alpha, BoundMethod::Hdi, &cache)?;
        let truth = scaled_vol(path.sigma_at_obs[k], model.obs_dt, beta);
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        let stable = rel(feas.lo, known.lo) < tolerance && rel(feas.hi, known.hi) < tolerance;
        Ok(Row {
            beta_hat: beta_hat.value,
            known: (known.contains(truth), known.width()),
            feasible: (feas.contains(truth), feas.width()),
            stable,
        })
    });
    let rows: Vec<_> = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let n = rows.len();
    let mut hats: Vec<f64> = rows.iter().map(|r| r.beta_hat).collect();
    let known: Vec<(bool, f64)> = rows.iter().map(|r| r.known).collect();
    let feas: Vec<(bool, f64)> = rows.iter().map(|r| r.feasible).collect();
    let nominal = 1.0 - cfg.alpha;
    Ok(FeasibleReport {
        p,
        k,
        beta,
        beta_power,
        replications: n,
        median_beta_hat: median(&mut hats),
        stable_fraction: rows.iter().filter(|r| r.stable).count() as f64 / n as f64,
        tolerance,
        known: CoverageReport::from_hits(method, p, k, nominal, &known),
        feasible: CoverageReport::from_hits(method, p, k, nominal, &feas),
    })
}

/// Sampling distribution of one β estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaReport {
    pub method: BetaMethod,
    pub beta: f64,
    pub replications: usize,
    pub median_estimate: f64,
    pub median_abs_error: f64,
    /// Share of replicates within 0.15 of the truth.
    pub within_015: f64,
    pub failures: usize,
}

/// Tuning of the threshold method: `ϖ` and the multipliers of the sample scale.
pub const THRESHOLD_VARPI: f64 = 0.2;
pub const THRESHOLD_MULTIPLIERS: (f64, f64) = (8.0, 32.0);
/// Power of both power-variation methods.
pub const BETA_PV_POWER: f64 = 0.5;

/// Runs all three β estimators on the observed returns of each replicate.
/// Replicates where an estimator is undefined count as failures.
pub fn run_beta_experiment(model: &ModelConfig, replications: usize, replicate_offset: u64) -> Result<Vec<BetaReport>> {
    model.validate()?;
    if replications == 0 {
        return Err(param("need at least one replication"));
    }
    let rows: Vec<Result<[Option<f64>; 3]>> = par::map_indexed(replications, |r| {
        let path = simulate_observed(model, replicate_offset + r as u64)?;
        let ret = &path.returns;
        let tc = adaptive_thresholds(ret, THRESHOLD_VARPI, THRESHOLD_MULTIPLIERS)
            .and_then(|(e, e2)| beta_threshold_count(ret, THRESHOLD_VARPI, e, e2))
            .ok()
            .map(|b| b.value);
        let ts = beta_two_scale_pv(ret, BETA_PV_POWER).ok().map(|b| b.value);
        let sd = beta_second_diff_pv(ret, BETA_PV_POWER).ok().map(|b| b.value);
        Ok([tc, ts, sd])
    });
    let rows: Vec<[Option<f64>; 3]> = rows.into_iter().collect::<Result<_>>()?;
    let methods = [BetaMethod::ThresholdCount, BetaMethod::TwoScalePv, BetaMethod::SecondDiffPv];
    Ok(methods
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut vals: Vec<f64> = rows.iter().filter_map(|r| r[i]).collect();
            let failures = replications - vals.len();
            let mut errs: Vec<f64> = vals.iter().map(|v| (v - model.beta).abs()).collect();
            let within = errs.iter().filter(|e| **e <= 0.15).count() as f64 / replications as f64;
            BetaReport {
                method: *m,
                beta: model.beta,
                replications,
                median_estimate: median(&mut vals),
                median_abs_error: median(&mut errs),
                within_015: within,
                failures,
            }
        })
        .collect())
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
