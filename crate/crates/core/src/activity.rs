//! Estimators of the jump activity index β.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::path::ReturnSeries;

/// Lower clamp for estimates handed to downstream constants.
pub const BETA_FLOOR: f64 = 0.05;
pub const BETA_CEIL: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMethod {
    ThresholdCount,
    TwoScalePv,
    SecondDiffPv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum BetaTuning {
    ThresholdCount { varpi: f64, eta: f64, eta_prime: f64 },
    PowerVariation { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BetaDiagnostics {
    /// Exceedance counts `(U(ϖ,η), U(ϖ,η′))`.
    pub counts: Option<(usize, usize)>,
    /// The two power variations whose log-ratio drives the estimate.
    pub variations: Option<(f64, f64)>,
    /// Trailing return dropped to form the `2Δₙ` series.
    pub dropped_last: bool,
    /// `V² = V¹`, estimate set to zero.
    pub degenerate: bool,
    /// Unclamped value of the statistic.
    pub raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub value: f64,
    pub method: BetaMethod,
    pub tuning: BetaTuning,
    pub diagnostics: BetaDiagnostics,
    pub clamped: bool,
}

fn finish(raw: f64, method: BetaMethod, tuning: BetaTuning, mut diagnostics: BetaDiagnostics) -> BetaEstimate {
    diagnostics.raw = raw;
    // a degenerate estimate is reported as the literal zero
    let (value, clamped) = if diagnostics.degenerate {
        (0.0, false)
    } else {
        let v = raw.clamp(BETA_FLOOR, BETA_CEIL);
        (v, v != raw)
    };
    BetaEstimate { value, method, tuning, diagnostics, clamped }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(param(format!("power p must be positive, got {p}")));
    }
    Ok(())
}

/// `log(U(ϖ,η)/U(ϖ,η′)) / log(η′/η)`, with `U` counting increments above
/// `η Δₙ^ϖ`.
pub fn beta_threshold_count(r: &ReturnSeries, varpi: f64, eta: f64, eta_prime: f64) -> Result<BetaEstimate> {
    if !(varpi > 0.0) {
        return Err(param("varpi must be positive"));
    }
    if !(eta > 0.0 && eta < eta_prime) {
        return Err(param(format!("thresholds must satisfy 0 < eta < eta', got {eta}, {eta_prime}")));
    }
    let base = r.delta_n().powf(varpi);
    let count = |level: f64| r.increments().iter().filter(|x| x.abs() > level * base).count();
    let (u, u_prime) = (count(eta), count(eta_prime));
    if u == 0 || u_prime == 0 {
        return Err(Error::Estimation(format!("no increments above the threshold (counts {u}, {u_prime})")));
    }
    let raw = threshold_ratio(u, u_prime, eta, eta_prime);
    Ok(finish(
        raw,
        BetaMethod::ThresholdCount,
        BetaTuning::ThresholdCount { varpi, eta, eta_prime },
        BetaDiagnostics { counts: Some((u, u_prime)), ..Default::default() },
    ))
}

/// Threshold estimate from explicit counts.
pub fn threshold_ratio(u: usize, u_prime: usize, eta: f64, eta_prime: f64) -> f64 {
    (u as f64 / u_prime as f64).ln() / (eta_prime / eta).ln()
}

/// Data-adaptive threshold multipliers: `(η, η′) = multipliers · s` with
/// `s = median|ΔX| / Δₙ^ϖ`.
pub fn adaptive_thresholds(r: &ReturnSeries, varpi: f64, multipliers: (f64, f64)) -> Result<(f64, f64)> {
    let mut abs: Vec<f64> = r.increments().iter().map(|x| x.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len();
    let median = if n % 2 == 1 { abs[n / 2] } else { 0.5 * (abs[n / 2 - 1] + abs[n / 2]) };
    if !(median > 0.0) {
        return Err(Error::Estimation("median absolute return is zero".into()));
    }
    let scale = median / r.delta_n().powf(varpi);
    Ok((multipliers.0 * scale, multipliers.1 * scale))
}

/// `p log 2 / (log 2 + log V(p, 2Δₙ) − log V(p, Δₙ))`.
pub fn beta_two_scale_pv(r: &ReturnSeries, p: f64) -> Result<BetaEstimate> {
    check_p(p)?;
    let (pairs, dropped_last) = r.aggregated_pairs();
    if pairs.is_empty() {
        return Err(Error::Estimation("need at least two returns".into()));
    }
    let v_fine: f64 = r.increments().iter().map(|x| x.abs().powf(p)).sum();
    let v_coarse: f64 = pairs.iter().map(|x| x.abs().powf(p)).sum();
    let raw = two_scale_ratio(v_fine, v_coarse, p)?;
    Ok(finish(
        raw,
        BetaMethod::TwoScalePv,
        BetaTuning::PowerVariation { p },
        BetaDiagnostics { variations: Some((v_fine, v_coarse)), dropped_last, ..Default::default() },
    ))
}

/// Two-scale statistic from the fine and coarse variations.
pub fn two_scale_ratio(v_fine: f64, v_coarse: f64, p: f64) -> Result<f64> {
    if !(v_fine > 0.0 && v_coarse > 0.0) {
        return Err(Error::Estimation("power variation is zero".into()));
    }
    let ln2 = std::f64::consts::LN_2;
    let den = ln2 + v_coarse.ln() - v_fine.ln();
    if den == 0.0 || den.abs() < 1e-14 {
        return Err(Error::Estimation("two-scale denominator vanishes".into()));
    }
    Ok(p * ln2 / den)
}

/// `p log 2 / (log V² − log V¹) · 1{V² ≠ V¹}` on second-order differences.
///
/// `V¹` sums `|ΔᵢX − Δᵢ₋₁X|^p` for `i = 2..n` because `Δ₀X` is not observed.
pub fn beta_second_diff_pv(r: &ReturnSeries, p: f64) -> Result<BetaEstimate> {
    check_p(p)?;
    let x = r.increments();
    if x.len() < 4 {
        return Err(param(format!("second-difference estimator needs n >= 4 returns, got {}", x.len())));
    }
    let v1: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs().powf(p)).sum();
    let v2: f64 = x.windows(4).map(|w| (w[3] - w[2] + w[1] - w[0]).abs().powf(p)).sum();
    let (raw, degenerate) = second_diff_ratio(v1, v2, p)?;
    Ok(finish(
        raw,
        BetaMethod::SecondDiffPv,
        BetaTuning::PowerVariation { p },
        BetaDiagnostics { variations: Some((v1, v2)), degenerate, ..Default::default() },
    ))
}

/// Second-difference statistic; the flag marks the `V² = V¹` case.
pub fn second_diff_ratio(v1: f64, v2: f64, p: f64) -> Result<(f64, bool)> {
    if v1 == v2 {
        return Ok((0.0, true));
    }
    if !(v1 > 0.0 && v2 > 0.0) {
        return Err(Error::Estimation("power variation is zero".into()));
    }
    Ok((p * std::f64::consts::LN_2 / (v2.ln() - v1.ln()), false))
}
