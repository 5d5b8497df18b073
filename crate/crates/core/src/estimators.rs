//! Non-overlapping block estimators of the scaled spot volatility.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::path::ReturnSeries;
use crate::stable::{moment_constant_c, moment_constant_c_tilde};

/// Block `j` (1-based) of `k` consecutive returns: indices `(j−1)k+1 ..= jk`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub k: usize,
    pub j: usize,
}

impl BlockSpec {
    pub fn new(k: usize, j: usize) -> Result<Self> {
        if k == 0 || j == 0 {
            return Err(param("block size and block index must be >= 1"));
        }
        Ok(Self { k, j })
    }

    /// Zero-based range of returns covered by the block.
    pub fn range(&self) -> std::ops::Range<usize> {
        (self.j - 1) * self.k..self.j * self.k
    }

    pub fn start_time(&self, delta_n: f64) -> f64 {
        ((self.j - 1) * self.k) as f64 * delta_n
    }

    /// Number of complete blocks of size `k` in `n` returns.
    pub fn count(n: usize, k: usize) -> usize {
        n.checked_div(k).unwrap_or(0)
    }

    fn check(&self, r: &ReturnSeries) -> Result<()> {
        if self.range().end > r.len() {
            return Err(Error::Range(format!(
                "block j={} of size k={} needs {} returns, series has {}",
                self.j,
                self.k,
                self.range().end,
                r.len()
            )));
        }
        Ok(())
    }

    fn check_even(&self) -> Result<()> {
        if !self.k.is_multiple_of(2) {
            return Err(param(format!("second-order estimators need an even block size, got k={}", self.k)));
        }
        Ok(())
    }
}

/// The block containing time `t`, i.e. `t ∈ [(j−1)kΔₙ, jkΔₙ)`.
pub fn block_for_time(t: f64, k: usize, delta_n: f64, horizon: f64) -> Result<BlockSpec> {
    if !(t >= 0.0 && t < horizon) {
        return Err(Error::Range(format!("t = {t} outside [0, {horizon})")));
    }
    if k == 0 || !(delta_n > 0.0) {
        return Err(param("k must be >= 1 and delta_n > 0"));
    }
    // tolerate representation error when t sits on a block boundary
    let pos = t / (k as f64 * delta_n);
    let snapped = pos.round();
    let idx = if (pos - snapped).abs() < 1e-9 { snapped } else { pos.floor() };
    BlockSpec::new(k, idx as usize + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    FirstOrder,
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotEstimate {
    pub value: f64,
    pub p: f64,
    pub kind: EstimatorKind,
    /// Divided by `c_β(p)` (first order) or `c̃_β(p)` (second order).
    pub normalized: bool,
    pub block: BlockSpec,
    pub beta_used: Option<f64>,
}

impl SpotEstimate {
    /// Block size of the estimate.
    pub fn k(&self) -> usize {
        self.block.k
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(param(format!("power p must be positive, got {p}")));
    }
    Ok(())
}

/// `Σ |Δᵢ X|^p` over the block.
fn block_power_sum(r: &ReturnSeries, block: &BlockSpec, p: f64) -> f64 {
    r.increments()[block.range()].iter().map(|x| x.abs().powf(p)).sum()
}

/// `Σ |Δ_{2i}X − Δ_{2i−1}X|^p` over the pairs of the block.
fn block_diff_power_sum(r: &ReturnSeries, block: &BlockSpec, p: f64) -> f64 {
    r.increments()[block.range()].chunks_exact(2).map(|c| (c[1] - c[0]).abs().powf(p)).sum()
}

/// `k⁻¹ Σ_{i∈I} |Δᵢ X|^p`.
pub fn estimate_fixed_k(r: &ReturnSeries, block: BlockSpec, p: f64) -> Result<SpotEstimate> {
    check_p(p)?;
    block.check(r)?;
    Ok(SpotEstimate {
        value: block_power_sum(r, &block, p) / block.k as f64,
        p,
        kind: EstimatorKind::FirstOrder,
        normalized: false,
        block,
        beta_used: None,
    })
}

/// `(2/k) Σ_{i∈Ĩ} |Δ_{2i}X − Δ_{2i−1}X|^p`.
pub fn estimate_fixed_k_diff(r: &ReturnSeries, block: BlockSpec, p: f64) -> Result<SpotEstimate> {
    check_p(p)?;
    block.check_even()?;
    block.check(r)?;
    Ok(SpotEstimate {
        value: 2.0 * block_diff_power_sum(r, &block, p) / block.k as f64,
        p,
        kind: EstimatorKind::SecondOrder,
        normalized: false,
        block,
        beta_used: None,
    })
}

/// Fixed-k estimate divided by `c_β(p)`.
pub fn estimate_large_k(r: &ReturnSeries, block: BlockSpec, p: f64, beta: f64) -> Result<SpotEstimate> {
    let c = moment_constant_c(beta, p)?;
    let raw = estimate_fixed_k(r, block, p)?;
    Ok(SpotEstimate { value: raw.value / c, normalized: true, beta_used: Some(beta), ..raw })
}

/// Second-order fixed-k estimate divided by `c̃_β(p)`.
pub fn estimate_large_k_diff(r: &ReturnSeries, block: BlockSpec, p: f64, beta: f64) -> Result<SpotEstimate> {
    let c = moment_constant_c_tilde(beta, p)?;
    let raw = estimate_fixed_k_diff(r, block, p)?;
    Ok(SpotEstimate { value: raw.value / c, normalized: true, beta_used: Some(beta), ..raw })
}

/// Apply one estimator to every complete block of the series.
pub fn estimate_all_blocks(
    r: &ReturnSeries,
    k: usize,
    mut f: impl FnMut(&ReturnSeries, BlockSpec) -> Result<SpotEstimate>,
) -> Result<Vec<SpotEstimate>> {
    let m = BlockSpec::count(r.len(), k);
    if m == 0 {
        return Err(Error::Range(format!("series of length {} holds no block of size {k}", r.len())));
    }
    (1..=m).map(|j| f(r, BlockSpec { k, j })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn series(v: Vec<f64>) -> ReturnSeries {
        ReturnSeries::new(v, 1.0 / 390.0).unwrap()
    }

    #[test]
    fn constant_increments() {
        let r = series(vec![0.3; 40]);
        for k in [1, 4, 10] {
            let e = estimate_fixed_k(&r, BlockSpec::new(k, 2).unwrap(), 1.5).unwrap();
            assert_relative_eq!(e.value, 0.3f64.powf(1.5), max_relative = 1e-14);
        }
        let e = estimate_large_k(&r, BlockSpec::new(5, 1).unwrap(), 1.0, 1.6).unwrap();
        assert_relative_eq!(e.value, 0.3 / moment_constant_c(1.6, 1.0).unwrap(), max_relative = 1e-14);
        assert!(e.normalized);
        assert_eq!(e.beta_used, Some(1.6));
    }

    #[test]
    fn single_term_block() {
        let r = series(vec![0.1, -0.4, 0.2]);
        let e = estimate_fixed_k(&r, BlockSpec::new(1, 2).unwrap(), 2.0).unwrap();
        assert_relative_eq!(e.value, 0.16, max_relative = 1e-14);
    }

    #[test]
    fn alternating_pairs_and_constant_drift() {
        let a = 0.25;
        let r = series((0..12).map(|i| if i % 2 == 0 { a } else { -a }).collect());
        let e = estimate_fixed_k_diff(&r, BlockSpec::new(6, 2).unwrap(), 1.3).unwrap();
        assert_relative_eq!(e.value, (2.0 * a).powf(1.3), max_relative = 1e-14);
        let flat = series(vec![0.7; 12]);
        assert_eq!(estimate_fixed_k_diff(&flat, BlockSpec::new(4, 1).unwrap(), 1.0).unwrap().value, 0.0);
        let norm = estimate_large_k_diff(&r, BlockSpec::new(4, 1).unwrap(), 0.6, 1.6).unwrap();
        assert_relative_eq!(
            norm.value,
            (2.0 * a).powf(0.6) / moment_constant_c_tilde(1.6, 0.6).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn errors() {
        let r = series(vec![0.1; 10]);
        assert!(matches!(estimate_fixed_k(&r, BlockSpec::new(5, 3).unwrap(), 1.0), Err(Error::Range(_))));
        assert!(estimate_fixed_k(&r, BlockSpec::new(5, 1).unwrap(), 0.0).is_err());
        assert!(matches!(estimate_fixed_k_diff(&r, BlockSpec::new(5, 1).unwrap(), 1.0), Err(Error::Parameter(_))));
        assert!(matches!(estimate_large_k(&r, BlockSpec::new(5, 1).unwrap(), 1.6, 1.6), Err(Error::Domain(_))));
        assert!(BlockSpec::new(0, 1).is_err());
    }

    #[test]
    fn block_lookup() {
        let d = 1.0 / 390.0;
        assert_eq!(block_for_time(0.0, 30, d, 1.0).unwrap().j, 1);
        assert_eq!(block_for_time(30.0 * d, 30, d, 1.0).unwrap().j, 2);
        assert_eq!(block_for_time(0.37, 30, d, 1.0).unwrap().j, (0.37f64 * 390.0 / 30.0).floor() as usize + 1);
        assert_eq!(block_for_time(0.37, 30, d, 1.0).unwrap().j, 5);
        assert!(block_for_time(1.0, 30, d, 1.0).is_err());
        assert!(block_for_time(-0.1, 30, d, 1.0).is_err());
    }
}
