//! Confidence intervals for the scaled spot volatility `σ_{n,t}` and for
//! smooth transforms `f(σ_{n,t}^p)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::cache::{beta_grid, TableCache};
use super::coupling::{BoundMethod, CouplingKind, CouplingLaw};
use crate::activity::BetaEstimate;
use crate::error::{param, Error, Result};
use crate::estimators::{BlockSpec, EstimatorKind, SpotEstimate};

/// Smooth transform applied to `σ_{n,t}^p` in the large-k intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "r")]
pub enum Transform {
    Log,
    Power(f64),
}

impl Transform {
    pub fn validate(&self) -> Result<()> {
        match self {
            Transform::Power(r) if !(*r > 0.0) => Err(param("power transform needs r > 0")),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Transform::Log => x.ln(),
            Transform::Power(r) => x.powf(*r),
        }
    }

    /// `f′(x)·x`
    pub fn elasticity(&self, x: f64) -> f64 {
        match self {
            Transform::Log => 1.0,
            Transform::Power(r) => r * x.powf(*r),
        }
    }

    /// `f⁻¹(y)` on `(0, ∞)`; values below the range map to 0.
    pub fn invert(&self, y: f64) -> f64 {
        match self {
            Transform::Log => y.exp(),
            Transform::Power(r) => y.max(0.0).powf(1.0 / r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Target {
    /// The scaled spot volatility itself.
    SigmaNt,
    /// `f(σ_{n,t}^p)`.
    FOfSigmaP { f: Transform, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub target: Target,
    pub method: CouplingKind,
    pub block: BlockSpec,
    /// Back-transform of an `f`-scale interval to `σ_{n,t}`.
    pub sigma_interval: Option<(f64, f64)>,
    /// Zero estimate: the interval collapses to a point.
    pub degenerate: bool,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Interval on the `σ_{n,t}` scale regardless of the target.
    pub fn sigma_bounds(&self) -> (f64, f64) {
        match self.target {
            Target::SigmaNt => (self.lo, self.hi),
            Target::FOfSigmaP { .. } => self.sigma_interval.unwrap_or((f64::NAN, f64::NAN)),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn fixed_kind(est: &SpotEstimate) -> Result<CouplingKind> {
    if est.normalized {
        return Err(Error::Mismatch("fixed-k intervals take the unnormalised estimator".into()));
    }
    Ok(match est.kind {
        EstimatorKind::FirstOrder => CouplingKind::FixedKFirst,
        EstimatorKind::SecondOrder => CouplingKind::FixedKDiff,
    })
}

/// `[(L v)^{1/p}, (U v)^{1/p}]` with `(L, U)` bracketing `1/S` for the
/// coupling law matching the estimator.
pub fn ci_fixed_k(
    est: &SpotEstimate,
    beta: f64,
    alpha: f64,
    method: BoundMethod,
    cache: &TableCache,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let kind = fixed_kind(est)?;
    let law = CouplingLaw::new(kind, beta, est.p, Some(est.k()))?;
    let (l, u) = cache.get(&law)?.bounds(alpha, method)?;
    Ok(fixed_k_interval(est, kind, alpha, (l, u)))
}

/// Interval from explicit reciprocal-coupling bounds.
pub fn fixed_k_interval(est: &SpotEstimate, kind: CouplingKind, alpha: f64, (l, u): (f64, f64)) -> ConfidenceInterval {
    let inv_p = 1.0 / est.p;
    let v = est.value;
    ConfidenceInterval {
        lo: (l * v).powf(inv_p),
        hi: (u * v).powf(inv_p),
        level: 1.0 - alpha,
        target: Target::SigmaNt,
        method: kind,
        block: est.block,
        sigma_interval: None,
        degenerate: v == 0.0,
    }
}

/// [`ci_fixed_k`] at the estimated index, rounded to the table grid.
pub fn ci_fixed_k_feasible(
    est: &SpotEstimate,
    beta_hat: &BetaEstimate,
    alpha: f64,
    method: BoundMethod,
    cache: &TableCache,
) -> Result<ConfidenceInterval> {
    let beta = beta_grid(beta_hat.value);
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::Domain(format!("estimated beta {} is outside (0, 2)", beta_hat.value)));
    }
    ci_fixed_k(est, beta, alpha, method, cache)
}

/// Normalised estimate checks shared by the large-k intervals. Returns β.
fn large_k_beta(est: &SpotEstimate) -> Result<f64> {
    if !est.normalized {
        return Err(Error::Mismatch("large-k intervals take the normalised estimator".into()));
    }
    est.beta_used.ok_or_else(|| Error::Mismatch("normalised estimate without beta".into()))
}

/// Effective number of terms: `k` or `k/2` for the differenced estimator.
fn effective_k(est: &SpotEstimate) -> f64 {
    match est.kind {
        EstimatorKind::FirstOrder => est.k() as f64,
        EstimatorKind::SecondOrder => est.k() as f64 / 2.0,
    }
}

/// Interval `f(v) − f′(v) v · [hi, lo] / rate`.
fn transformed(
    est: &SpotEstimate,
    f: Transform,
    alpha: f64,
    kind: CouplingKind,
    rate: f64,
    (q_lo, q_hi): (f64, f64),
) -> ConfidenceInterval {
    let v = est.value;
    let center = f.apply(v);
    let e = f.elasticity(v);
    let lo = center - e * q_hi / rate;
    let hi = center - e * q_lo / rate;
    let inv_p = 1.0 / est.p;
    let sigma_interval = Some((f.invert(lo).powf(inv_p), f.invert(hi).powf(inv_p)));
    ConfidenceInterval {
        lo,
        hi,
        level: 1.0 - alpha,
        target: Target::FOfSigmaP { f, p: est.p },
        method: kind,
        block: est.block,
        sigma_interval,
        degenerate: v == 0.0,
    }
}

/// `f(v) ± k^{-1/2} z_{1−α/2} f′(v) v √(c(2p)/c(p)² − 1)` for `p < β/2`.
pub fn ci_large_k_gauss(est: &SpotEstimate, f: Transform, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    f.validate()?;
    let beta = large_k_beta(est)?;
    let kind = match est.kind {
        EstimatorKind::FirstOrder => CouplingKind::LargeKGauss,
        EstimatorKind::SecondOrder => CouplingKind::LargeKGaussDiff,
    };
    let law = CouplingLaw::new(kind, beta, est.p, None)?;
    let half = normal_quantile(1.0 - 0.5 * alpha) * law.gaussian_variance()?.sqrt();
    Ok(transformed(est, f, alpha, kind, effective_k(est).sqrt(), (-half, half)))
}

/// Boundary case `p = β/2`: Gaussian at rate `√(k log k)`.
pub fn ci_boundary_gauss(est: &SpotEstimate, f: Transform, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    f.validate()?;
    let beta = large_k_beta(est)?;
    let kind = match est.kind {
        EstimatorKind::FirstOrder => CouplingKind::BoundaryGauss,
        EstimatorKind::SecondOrder => CouplingKind::BoundaryGaussDiff,
    };
    let law = CouplingLaw::new(kind, beta, est.p, None)?;
    let k = effective_k(est);
    if k < 2.0 {
        return Err(param("boundary interval needs at least two terms"));
    }
    let half = normal_quantile(1.0 - 0.5 * alpha) * law.gaussian_variance()?.sqrt();
    Ok(transformed(est, f, alpha, kind, (k * k.ln()).sqrt(), (-half, half)))
}

/// Stable-limit interval for `β/2 < p < β` at rate `k^{1−p/β}`.
pub fn ci_large_k_stable(
    est: &SpotEstimate,
    f: Transform,
    alpha: f64,
    split: BoundMethod,
    cache: &TableCache,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    f.validate()?;
    let beta = large_k_beta(est)?;
    let kind = match est.kind {
        EstimatorKind::FirstOrder => CouplingKind::LargeKStable,
        EstimatorKind::SecondOrder => CouplingKind::LargeKStableDiff,
    };
    let law = CouplingLaw::new(kind, beta, est.p, None)?;
    let q = cache.get(&law)?.bounds(alpha, split)?;
    let rate = effective_k(est).powf(1.0 - est.p / beta);
    Ok(transformed(est, f, alpha, kind, rate, q))
}

pub fn normal_quantile(q: f64) -> f64 {
    Normal::standard().inverse_cdf(q)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn est(value: f64, p: f64, k: usize, kind: EstimatorKind, beta: Option<f64>) -> SpotEstimate {
        SpotEstimate {
            value,
            p,
            kind,
            normalized: beta.is_some(),
            block: BlockSpec { k, j: 1 },
            beta_used: beta,
        }
    }

    #[test]
    fn fixed_k_arithmetic() {
        let e = est(1.0, 2.0, 5, EstimatorKind::FirstOrder, None);
        let ci = fixed_k_interval(&e, CouplingKind::FixedKFirst, 0.1, (0.25, 4.0));
        assert_relative_eq!(ci.lo, 0.5);
        assert_relative_eq!(ci.hi, 2.0);
        let z = est(0.0, 1.0, 5, EstimatorKind::FirstOrder, None);
        let ci = fixed_k_interval(&z, CouplingKind::FixedKFirst, 0.1, (0.25, 4.0));
        assert_eq!((ci.lo, ci.hi), (0.0, 0.0));
        assert!(ci.degenerate);
    }

    #[test]
    fn fixed_k_rejects_normalised() {
        let cache = TableCache::new(10_000, 1);
        let e = est(1.0, 1.0, 5, EstimatorKind::FirstOrder, Some(1.6));
        assert!(matches!(ci_fixed_k(&e, 1.6, 0.1, BoundMethod::Hdi, &cache), Err(Error::Mismatch(_))));
    }

    #[test]
    fn log_gauss_half_width_independent_of_value() {
        let beta = 1.6;
        let p = 0.6;
        let c = crate::stable::moment_constant_c(beta, p).unwrap();
        let sd = (crate::stable::moment_constant_c(beta, 2.0 * p).unwrap() / (c * c) - 1.0).sqrt();
        for v in [0.01, 1.0, 30.0] {
            let ci = ci_large_k_gauss(&est(v, p, 500, EstimatorKind::FirstOrder, Some(beta)), Transform::Log, 0.05).unwrap();
            assert_relative_eq!(ci.width() / 2.0, normal_quantile(0.975) * sd / 500f64.sqrt(), max_relative = 1e-12);
        }
        let e = est(2.0, p, 500, EstimatorKind::FirstOrder, Some(beta));
        let a = ci_large_k_gauss(&e, Transform::Log, 0.32).unwrap().width();
        let b = ci_large_k_gauss(&e, Transform::Log, 0.05).unwrap().width();
        assert_relative_eq!(a / b, normal_quantile(0.84) / normal_quantile(0.975), max_relative = 1e-12);
        assert!((normal_quantile(0.84) - 0.9945).abs() < 1e-4);
    }

    #[test]
    fn regime_dispatch() {
        let cache = TableCache::new(10_000, 1);
        let stable_est = est(1.0, 1.0, 100, EstimatorKind::FirstOrder, Some(1.6));
        assert!(matches!(ci_large_k_gauss(&stable_est, Transform::Log, 0.1), Err(Error::Regime(_))));
        let gauss_est = est(1.0, 0.6, 100, EstimatorKind::FirstOrder, Some(1.6));
        assert!(matches!(
            ci_large_k_stable(&gauss_est, Transform::Log, 0.1, BoundMethod::EqualTail, &cache),
            Err(Error::Regime(_))
        ));
        assert!(matches!(ci_boundary_gauss(&gauss_est, Transform::Log, 0.1), Err(Error::Regime(_))));
        let boundary = est(1.0, 0.8, 100, EstimatorKind::FirstOrder, Some(1.6));
        assert!(ci_boundary_gauss(&boundary, Transform::Log, 0.1).is_ok());
        assert!(ci_boundary_gauss(&boundary, Transform::Log, 1.0).is_err());
        assert!(ci_boundary_gauss(&boundary, Transform::Log, 0.0).is_err());
    }

    #[test]
    fn boundary_width_ratio() {
        let beta = 1.6;
        let k = 400usize;
        let b = ci_boundary_gauss(&est(1.0, 0.8, k, EstimatorKind::FirstOrder, Some(beta)), Transform::Log, 0.1).unwrap();
        let z = normal_quantile(0.95);
        let expected = z * crate::stable::boundary_variance(beta, false).unwrap().sqrt() / ((k as f64) * (k as f64).ln()).sqrt();
        assert_relative_eq!(b.width() / 2.0, expected, max_relative = 1e-12);
    }

    #[test]
    fn stable_interval_center_offset() {
        let cache = TableCache::new(20_000, 1);
        let beta = 1.6;
        let k = 200usize;
        let v = 3.7;
        let e = est(v, 1.0, k, EstimatorKind::FirstOrder, Some(beta));
        let ci = ci_large_k_stable(&e, Transform::Log, 0.1, BoundMethod::EqualTail, &cache).unwrap();
        let law = CouplingLaw::new(CouplingKind::LargeKStable, beta, 1.0, None).unwrap();
        let (ql, qu) = cache.get(&law).unwrap().bounds(0.1, BoundMethod::EqualTail).unwrap();
        let rate = (k as f64).powf(1.0 - 1.0 / beta);
        assert_relative_eq!(0.5 * (ci.lo + ci.hi), v.ln() - (ql + qu) / (2.0 * rate), max_relative = 1e-12);
        let (slo, shi) = ci.sigma_bounds();
        assert!(slo < shi && slo > 0.0);
    }

    #[test]
    fn large_k_width_shrinks_with_k() {
        let cache = TableCache::new(20_000, 1);
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for k in [100, 400, 1600] {
            let g = ci_large_k_gauss(&est(1.0, 0.6, k, EstimatorKind::FirstOrder, Some(1.6)), Transform::Power(1.0), 0.1)
                .unwrap()
                .width();
            let s = ci_large_k_stable(
                &est(1.0, 1.0, k, EstimatorKind::FirstOrder, Some(1.6)),
                Transform::Power(1.0),
                0.1,
                BoundMethod::EqualTail,
                &cache,
            )
            .unwrap()
            .width();
            assert!(g < prev.0 && s < prev.1);
            prev = (g, s);
        }
    }

    #[test]
    fn transforms() {
        let f = Transform::Power(2.0);
        assert_relative_eq!(f.invert(f.apply(1.7)), 1.7, max_relative = 1e-14);
        assert_relative_eq!(f.elasticity(3.0), 18.0);
        assert_eq!(f.invert(-1.0), 0.0);
        assert!(Transform::Power(0.0).validate().is_err());
        assert_relative_eq!(Transform::Log.invert(Transform::Log.apply(0.3)), 0.3, max_relative = 1e-14);
    }
}
