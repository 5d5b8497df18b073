//! Stable laws in the "1-parametrisation" and the closed-form constants
//! derived from them.
//!
//! A law `S(η, δ, θ, μ)` has characteristic function
//!
//! ```text
//! η ≠ 1:  exp{ −θ^η |u|^η [1 − iδ tan(πη/2) sign u] + iμu }
//! η = 1:  exp{ −θ |u| [1 + iδ (2/π) sign u log|u|] + iμu }
//! ```
//!
//! The driving process of the price model has unit-time increments
//! `S(β, 0, 2^{-1/β}, 0)`, i.e. cf `exp(−|u|^β / 2)`; the difference of two
//! such increments is `S(β, 0, 1, 0)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, param, Result};

/// Width of the band around `η = 1` in which the logarithmic branch is used.
pub const INDEX_ONE_BAND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLaw {
    index: f64,
    skew: f64,
    scale: f64,
    location: f64,
}

impl StableLaw {
    pub fn new(index: f64, skew: f64, scale: f64, location: f64) -> Result<Self> {
        if !(index > 0.0 && index <= 2.0) {
            return Err(param(format!("stable index must lie in (0, 2], got {index}")));
        }
        if !(-1.0..=1.0).contains(&skew) {
            return Err(param(format!("stable skew must lie in [-1, 1], got {skew}")));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(param(format!("stable scale must be finite and >= 0, got {scale}")));
        }
        if !location.is_finite() {
            return Err(param("stable location must be finite"));
        }
        // skew is not identifiable in the Gaussian case
        let skew = if index == 2.0 { 0.0 } else { skew };
        Ok(Self { index, skew, scale, location })
    }

    /// Symmetric law with cf `exp(−θ^β |u|^β)`.
    pub fn symmetric(index: f64, scale: f64) -> Result<Self> {
        Self::new(index, 0.0, scale, 0.0)
    }

    /// Unit-time increment of the driving process: cf `exp(−|u|^β / 2)`.
    pub fn driver(beta: f64) -> Result<Self> {
        Self::symmetric(beta, 2f64.powf(-1.0 / beta))
    }

    /// Difference of two independent driver increments: cf `exp(−|u|^β)`.
    pub fn differenced_driver(beta: f64) -> Result<Self> {
        Self::symmetric(beta, 1.0)
    }

    pub fn index(&self) -> f64 {
        self.index
    }
    pub fn skew(&self) -> f64 {
        self.skew
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn location(&self) -> f64 {
        self.location
    }

    fn is_index_one(&self) -> bool {
        (self.index - 1.0).abs() < INDEX_ONE_BAND
    }

    /// Same law with the scale multiplied by `factor > 0`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(param("rescale factor must be positive"));
        }
        Self::new(self.index, self.skew, self.scale * factor, self.location)
    }

    pub fn cf(&self, u: f64) -> Complex64 {
        if u == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let sign = u.signum();
        let a = u.abs();
        let exponent = if self.is_index_one() {
            let re = -self.scale * a;
            let im = -self.scale * a * self.skew * (2.0 / PI) * sign * a.ln();
            Complex64::new(re, im + self.location * u)
        } else {
            let mag = (self.scale * a).powf(self.index);
            let tan = (FRAC_PI_2 * self.index).tan();
            Complex64::new(-mag, mag * self.skew * tan * sign + self.location * u)
        };
        exponent.exp()
    }

    pub fn sampler(&self) -> StableSampler {
        StableSampler::new(*self)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(param("sample size must be at least 1"));
        }
        let s = self.sampler();
        Ok((0..n).map(|_| s.sample(rng)).collect())
    }
}

/// Chambers–Mallows–Stuck sampler with the per-law constants precomputed.
///
/// The Weron form used here already returns `S(η, δ, 1, 0)` in the
/// 1-parametrisation for `η ≠ 1`, so the only location adjustment needed is
/// the `(2/π) δ θ log θ` term of the `η = 1` branch.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    law: StableLaw,
    kind: SamplerKind,
}

#[derive(Debug, Clone, Copy)]
enum SamplerKind {
    Gaussian { sd: f64 },
    Symmetric { alpha: f64, inv_alpha: f64, tail_exp: f64 },
    Skewed { alpha: f64, inv_alpha: f64, tail_exp: f64, shift: f64, factor: f64 },
    IndexOne { shift: f64 },
}

impl StableSampler {
    pub fn new(law: StableLaw) -> Self {
        let alpha = law.index;
        let kind = if alpha == 2.0 {
            SamplerKind::Gaussian { sd: law.scale * std::f64::consts::SQRT_2 }
        } else if law.is_index_one() {
            let shift = if law.scale > 0.0 {
                (2.0 / PI) * law.skew * law.scale * law.scale.ln()
            } else {
                0.0
            };
            SamplerKind::IndexOne { shift }
        } else if law.skew == 0.0 {
            SamplerKind::Symmetric { alpha, inv_alpha: 1.0 / alpha, tail_exp: (1.0 - alpha) / alpha }
        } else {
            let t = law.skew * (FRAC_PI_2 * alpha).tan();
            SamplerKind::Skewed {
                alpha,
                inv_alpha: 1.0 / alpha,
                tail_exp: (1.0 - alpha) / alpha,
                shift: t.atan() / alpha,
                factor: (1.0 + t * t).powf(0.5 / alpha),
            }
        };
        Self { law, kind }
    }

    pub fn law(&self) -> &StableLaw {
        &self.law
    }

    /// One draw from the standardised law (θ = 1, μ = 0, except for η = 1
    /// where the scale enters the location shift).
    #[inline]
    fn standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            SamplerKind::Gaussian { .. } => unreachable!(),
            SamplerKind::Symmetric { alpha, inv_alpha, tail_exp } => {
                let v = PI * (open01(rng) - 0.5);
                let w = -open01(rng).ln();
                let c = v.cos();
                (alpha * v).sin() / c.powf(inv_alpha) * (((1.0 - alpha) * v).cos() / w).powf(tail_exp)
            }
            SamplerKind::Skewed { alpha, inv_alpha, tail_exp, shift, factor } => {
                let v = PI * (open01(rng) - 0.5);
                let w = -open01(rng).ln();
                let c = v.cos();
                let a = alpha * (v + shift);
                factor * a.sin() / c.powf(inv_alpha) * ((v - a).cos() / w).powf(tail_exp)
            }
            SamplerKind::IndexOne { .. } => {
                let v = PI * (open01(rng) - 0.5);
                let w = -open01(rng).ln();
                let skew = self.law.skew;
                let h = FRAC_PI_2 + skew * v;
                (2.0 / PI) * (h * v.tan() - skew * (FRAC_PI_2 * w * v.cos() / h).ln())
            }
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let law = &self.law;
        match self.kind {
            SamplerKind::Gaussian { sd } => {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                law.location + sd * z
            }
            SamplerKind::IndexOne { shift } => law.scale * self.standard(rng) + shift + law.location,
            _ => law.scale * self.standard(rng) + law.location,
        }
    }
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Absolute moments of the standardised drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentConstants {
    pub beta: f64,
    pub p: f64,
    /// `E|Z|^p` for `Z ~ S(β, 0, 2^{-1/β}, 0)`.
    pub c: f64,
    /// `E|Z̃|^p` for `Z̃ ~ S(β, 0, 1, 0)`.
    pub c_tilde: f64,
}

impl MomentConstants {
    pub fn new(beta: f64, p: f64) -> Result<Self> {
        Ok(Self { beta, p, c: moment_constant_c(beta, p)?, c_tilde: moment_constant_c_tilde(beta, p)? })
    }
}

fn check_moment_domain(beta: f64, p: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 2.0) {
        return Err(param(format!("beta must lie in (0, 2], got {beta}")));
    }
    if !(p > 0.0) {
        return Err(param(format!("p must be positive, got {p}")));
    }
    if p >= beta {
        return Err(domain(format!("moment of order p = {p} is infinite for beta = {beta}")));
    }
    Ok(())
}

/// Shared factor `Γ((1+p)/2) Γ(1−p/β) / (√π Γ(1−p/2))`.
fn moment_kernel(beta: f64, p: f64) -> f64 {
    // 1 − p/2 > 0 whenever p < β ≤ 2, so no reflection is needed in the
    // denominator; the numerator pole sits at p = β which is excluded.
    gamma(0.5 * (1.0 + p)) * gamma(1.0 - p / beta) / (PI.sqrt() * gamma(1.0 - 0.5 * p))
}

/// `c_β(p) = E|Z|^p`, `Z ~ S(β, 0, 2^{-1/β}, 0)`.
pub fn moment_constant_c(beta: f64, p: f64) -> Result<f64> {
    check_moment_domain(beta, p)?;
    Ok(2f64.powf(p - p / beta) * moment_kernel(beta, p))
}

/// `c̃_β(p) = E|Z̃|^p`, `Z̃ ~ S(β, 0, 1, 0)`.
pub fn moment_constant_c_tilde(beta: f64, p: f64) -> Result<f64> {
    check_moment_domain(beta, p)?;
    Ok(2f64.powf(p) * moment_kernel(beta, p))
}

/// Scale constants of the totally right-skewed `β/p`-stable limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLimitScale {
    pub beta: f64,
    pub p: f64,
    /// Limit of the first-order coupling sum is `S(β/p, 1, 1/C, 0)`.
    pub big_c: f64,
    /// Limit of the second-order coupling sum is `S(β/p, 1, 1/C̃, 0)`.
    pub big_c_tilde: f64,
}

impl StableLimitScale {
    pub fn new(beta: f64, p: f64) -> Result<Self> {
        Ok(Self { beta, p, big_c: limit_scale_c(beta, p)?, big_c_tilde: limit_scale_c_tilde(beta, p)? })
    }

    /// The first-order limit law `S(β/p, 1, C^{-1}, 0)`.
    pub fn limit_law(&self) -> Result<StableLaw> {
        StableLaw::new(self.beta / self.p, 1.0, 1.0 / self.big_c, 0.0)
    }

    /// The second-order limit law `S(β/p, 1, C̃^{-1}, 0)`.
    pub fn limit_law_diff(&self) -> Result<StableLaw> {
        StableLaw::new(self.beta / self.p, 1.0, 1.0 / self.big_c_tilde, 0.0)
    }
}

fn check_stable_regime(beta: f64, p: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(param(format!("beta must lie in (0, 2), got {beta}")));
    }
    if !(p > 0.5 * beta && p < beta) {
        return Err(domain(format!("p = {p} outside the stable-limit range ({}, {beta})", 0.5 * beta)));
    }
    Ok(())
}

/// `Γ(β/p) sin(πβ/(2p)) / (Γ(β) sin(πβ/2))`
fn tail_ratio(beta: f64, p: f64) -> f64 {
    let eta = beta / p;
    gamma(eta) * (FRAC_PI_2 * eta).sin() / (gamma(beta) * (FRAC_PI_2 * beta).sin())
}

/// `C_β(p) = c_β(p) (2 Γ(β/p) sin(πβ/(2p)) / (Γ(β) sin(πβ/2)))^{p/β}`.
pub fn limit_scale_c(beta: f64, p: f64) -> Result<f64> {
    check_stable_regime(beta, p)?;
    Ok(moment_constant_c(beta, p)? * (2.0 * tail_ratio(beta, p)).powf(p / beta))
}

/// `C̃_β(p) = c̃_β(p) (Γ(β/p) sin(πβ/(2p)) / (Γ(β) sin(πβ/2)))^{p/β}`.
pub fn limit_scale_c_tilde(beta: f64, p: f64) -> Result<f64> {
    check_stable_regime(beta, p)?;
    Ok(moment_constant_c_tilde(beta, p)? * tail_ratio(beta, p).powf(p / beta))
}

/// `Γ(β) sin(πβ/2) / π`: the constant `K` in `P[|Z| > x] ~ K x^{-β}` for the
/// driver `Z ~ S(β, 0, 2^{-1/β}, 0)`. Twice this for `S(β, 0, 1, 0)`.
pub fn driver_tail_constant(beta: f64) -> f64 {
    gamma(beta) * (FRAC_PI_2 * beta).sin() / PI
}

/// Limit variance of the boundary (`p = β/2`) coupling sums, normalised by
/// `√(k log k)` (first order) or `√((k/2) log(k/2))` (second order).
///
/// With `ξ = |Z|^{β/2} / c` the tail is `P[ξ > x] ~ K c^{-2} x^{-2}`, so the
/// truncated second moment grows like `2K c^{-2} log x` and the normalised
/// sum has variance `K / c²`. For the driver `K = Γ(β) sin(πβ/2) / π`; the
/// differenced driver has twice that tail mass.
pub fn boundary_variance(beta: f64, differenced: bool) -> Result<f64> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(param(format!("beta must lie in (0, 2), got {beta}")));
    }
    let half = 0.5 * beta;
    let tail = driver_tail_constant(beta);
    Ok(if differenced {
        2.0 * tail / moment_constant_c_tilde(beta, half)?.powi(2)
    } else {
        tail / moment_constant_c(beta, half)?.powi(2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Channel, SeedStream};
    use approx::assert_relative_eq;

    #[test]
    fn rejects_invalid_laws() {
        assert!(StableLaw::new(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(StableLaw::new(2.1, 0.0, 1.0, 0.0).is_err());
        assert!(StableLaw::new(1.5, 1.2, 1.0, 0.0).is_err());
        assert!(StableLaw::new(1.5, 0.0, -1.0, 0.0).is_err());
        assert!(StableLaw::new(1.5, 0.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn gaussian_case_drops_skew() {
        let law = StableLaw::new(2.0, 0.7, 1.0, 0.0).unwrap();
        assert_eq!(law.skew(), 0.0);
    }

    #[test]
    fn cf_known_values() {
        let beta = 1.6;
        let law = StableLaw::driver(beta).unwrap();
        assert_relative_eq!(law.cf(1.0).re, (-0.5f64).exp(), epsilon = 1e-14);
        assert_relative_eq!(law.cf(1.0).im, 0.0, epsilon = 1e-14);
        let skewed = StableLaw::new(1.5, 1.0, 1.0, 0.0).unwrap();
        for l in [law, skewed, StableLaw::new(1.0, 0.4, 2.0, -1.0).unwrap()] {
            assert_eq!(l.cf(0.0), Complex64::new(1.0, 0.0));
        }
        let a = skewed.cf(2.0);
        let b = skewed.cf(-2.0);
        assert_relative_eq!(a.re, b.re, epsilon = 1e-15);
        assert_relative_eq!(a.im, -b.im, epsilon = 1e-15);
    }

    #[test]
    fn cf_index_one_band_switches_branch() {
        let near = StableLaw::new(1.0 + 1e-12, 0.5, 1.0, 0.0).unwrap();
        let exact = StableLaw::new(1.0, 0.5, 1.0, 0.0).unwrap();
        assert_eq!(near.cf(3.0), exact.cf(3.0));
    }

    #[test]
    fn gaussian_sampler_moments() {
        let law = StableLaw::new(2.0, 0.0, 0.7, 1.5).unwrap();
        let mut rng = SeedStream::new(11).substream(Channel::Auxiliary, 0);
        let xs = law.sample_n(200_000, &mut rng).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target_var = 2.0 * 0.7 * 0.7;
        assert!((mean - 1.5).abs() < 4.0 * (target_var / n).sqrt());
        assert!((var - target_var).abs() < 0.02 * target_var);
    }

    #[test]
    fn symmetric_sampler_median_and_cf() {
        let law = StableLaw::symmetric(1.6, 1.0).unwrap();
        let mut rng = SeedStream::new(12).substream(Channel::Auxiliary, 0);
        let mut xs = law.sample_n(200_000, &mut rng).unwrap();
        let cf1 = xs.iter().map(|x| x.cos()).sum::<f64>() / xs.len() as f64;
        assert!((cf1 - (-1f64).exp()).abs() < 4.0 * (0.5 / xs.len() as f64).sqrt());
        xs.sort_by(f64::total_cmp);
        assert!(xs[xs.len() / 2].abs() < 0.02);
    }

    #[test]
    fn sample_n_requires_positive_size() {
        let law = StableLaw::driver(1.6).unwrap();
        let mut rng = SeedStream::new(1).substream(Channel::Auxiliary, 0);
        assert!(law.sample_n(0, &mut rng).is_err());
    }

    #[test]
    fn moment_constant_gaussian_checks() {
        assert_relative_eq!(moment_constant_c(2.0, 1.0).unwrap(), (2.0 / PI).sqrt(), epsilon = 1e-12);
        for p in [0.5, 1.0, 1.5] {
            let normal_abs = 2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / PI.sqrt();
            assert_relative_eq!(moment_constant_c(2.0, p).unwrap(), normal_abs, max_relative = 1e-12);
        }
    }

    #[test]
    fn moment_constant_identity_and_domain() {
        for &(beta, p) in &[(1.6, 1.0), (1.6, 0.6), (0.9, 0.3), (1.95, 1.7), (1.2, 0.05)] {
            let c = moment_constant_c(beta, p).unwrap();
            let ct = moment_constant_c_tilde(beta, p).unwrap();
            assert_relative_eq!(ct, 2f64.powf(p / beta) * c, max_relative = 1e-12);
            assert!(c > 0.0 && c.is_finite());
        }
        assert!(matches!(moment_constant_c(1.6, 1.6), Err(crate::Error::Domain(_))));
        assert!(matches!(moment_constant_c_tilde(1.6, 2.0), Err(crate::Error::Domain(_))));
        assert!(moment_constant_c(1.6, 0.0).is_err());
        let near = moment_constant_c_tilde(1.6, 0.99 * 1.6).unwrap();
        let far = moment_constant_c_tilde(1.6, 0.9 * 1.6).unwrap();
        assert!(near > far);
    }

    #[test]
    fn limit_scales() {
        let beta = 1.6;
        assert!(limit_scale_c(beta, 0.81).unwrap().is_finite());
        assert!(limit_scale_c_tilde(beta, 1.599).unwrap().is_finite());
        let a = limit_scale_c(beta, 1.0).unwrap();
        let b = limit_scale_c(beta, 1.0 + 1e-6).unwrap();
        assert!((a - b).abs() < 1e-3);
        assert!(matches!(limit_scale_c(beta, 0.8), Err(crate::Error::Domain(_))));
        assert!(limit_scale_c(beta, 1.6).is_err());
        // c̃ = 2^{p/β} c exactly cancels the missing factor 2 in the bracket
        for &(beta, p) in &[(1.6, 1.0), (1.6, 0.9), (1.2, 0.7), (1.9, 1.5)] {
            let s = StableLimitScale::new(beta, p).unwrap();
            assert_relative_eq!(s.big_c, s.big_c_tilde, max_relative = 1e-12);
        }
    }

    #[test]
    fn boundary_variance_relations() {
        let beta = 1.6;
        let first = boundary_variance(beta, false).unwrap();
        let diff = boundary_variance(beta, true).unwrap();
        let c = moment_constant_c(beta, 0.8).unwrap();
        let ct = moment_constant_c_tilde(beta, 0.8).unwrap();
        assert!(first > 0.0);
        assert_relative_eq!(diff, first * (c * c / (ct * ct)) * 2.0, max_relative = 1e-12);
        assert!(boundary_variance(1.999_999, false).unwrap() < 1e-4);
    }
}
