//! Kolmogorov–Smirnov distances.

use crate::error::{param, Result};

/// What an empirical sample is compared against.
pub enum KsReference<'a> {
    /// Another sorted sample (two-sample statistic).
    Sample(&'a [f64]),
    /// A continuous CDF (one-sample statistic).
    Cdf(&'a dyn Fn(f64) -> f64),
}

/// Sup-norm distance between the empirical CDF of `sample` (sorted
/// ascending) and the reference.
pub fn ks_distance(sample: &[f64], reference: KsReference<'_>) -> Result<f64> {
    if sample.is_empty() {
        return Err(param("KS distance of an empty sample"));
    }
    debug_assert!(sample.windows(2).all(|w| w[0] <= w[1]), "sample must be sorted");
    match reference {
        KsReference::Sample(other) => {
            if other.is_empty() {
                return Err(param("KS distance against an empty sample"));
            }
            Ok(two_sample(sample, other))
        }
        KsReference::Cdf(cdf) => Ok(one_sample(sample, cdf)),
    }
}

fn two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn one_sample(a: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let n = a.len() as f64;
    a.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Asymptotic two-sample critical value at significance `alpha`.
pub fn two_sample_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(0.5 * alpha).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Sort a sample in place with a total order and return it.
pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_unstable_by(f64::total_cmp);
    v
}
