use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spotvol::ks::{ks_distance, sorted, two_sample_critical, KsReference};
use spotvol::stable::{driver_tail_constant, StableLaw};

const N: usize = 200_000;

fn draws(law: &StableLaw, seed: u64) -> Vec<f64> {
    law.sample_n(N, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn scaling_property() {
    let base = StableLaw::symmetric(1.3, 1.0).unwrap();
    let a = sorted(draws(&base, 1).into_iter().map(|x| 2.5 * x).collect());
    let b = sorted(draws(&base.rescaled(2.5).unwrap(), 2));
    let d = ks_distance(&a, KsReference::Sample(&b)).unwrap();
    assert!(d < two_sample_critical(N, N, 0.01), "KS {d}");
}

#[test]
fn sums_of_independent_copies() {
    for beta in [0.7, 1.6] {
        let law = StableLaw::symmetric(beta, 1.0).unwrap();
        let x = draws(&law, 3);
        let y = draws(&law, 4);
        let sum = sorted(x.iter().zip(&y).map(|(a, b)| a + b).collect());
        let direct = sorted(draws(&law.rescaled(2f64.powf(1.0 / beta)).unwrap(), 5));
        let d = ks_distance(&sum, KsReference::Sample(&direct)).unwrap();
        assert!(d < two_sample_critical(N, N, 0.01), "beta {beta}: KS {d}");
    }
}

#[test]
fn differenced_driver_law() {
    let z = StableLaw::driver(1.6).unwrap();
    let x = draws(&z, 6);
    let y = draws(&z, 7);
    let diff = sorted(x.iter().zip(&y).map(|(a, b)| b - a).collect());
    let direct = sorted(draws(&StableLaw::differenced_driver(1.6).unwrap(), 8));
    let d = ks_distance(&diff, KsReference::Sample(&direct)).unwrap();
    assert!(d < two_sample_critical(N, N, 0.01), "KS {d}");
}

#[test]
fn driver_tail() {
    let beta = 1.6;
    let law = StableLaw::driver(beta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s = law.sampler();
    let n = 10_000_000;
    let x = 50.0;
    let hits = (0..n).filter(|_| s.sample(&mut rng).abs() > x).count();
    let empirical = hits as f64 / n as f64;
    let predicted = driver_tail_constant(beta) * x.powf(-beta);
    assert!((empirical / predicted - 1.0).abs() < 0.1, "{empirical} vs {predicted}");
}

/// Empirical cf of skewed and index-one laws within 4 standard errors.
#[test]
fn skewed_cf_matches() {
    for law in [
        StableLaw::new(1.2, 0.5, 1.0, 0.3).unwrap(),
        StableLaw::new(0.8, -0.7, 0.5, 0.0).unwrap(),
        StableLaw::new(1.0, 0.6, 1.5, -0.4).unwrap(),
        StableLaw::new(2.0, 0.0, 1.0, 1.0).unwrap(),
    ] {
        let z = draws(&law, 10);
        let n = z.len() as f64;
        for u in [0.3, 1.0, 1.7] {
            let (mut c, mut s, mut c2, mut s2) = (0.0, 0.0, 0.0, 0.0);
            for x in &z {
                let (si, co) = (u * x).sin_cos();
                c += co;
                s += si;
                c2 += co * co;
                s2 += si * si;
            }
            let (re, im) = (c / n, s / n);
            let (se_re, se_im) = (((c2 / n - re * re) / n).sqrt(), ((s2 / n - im * im) / n).sqrt());
            let t = law.cf(u);
            assert!((re - t.re).abs() < 4.0 * se_re + 1e-12, "{law:?} u={u} re {re} vs {}", t.re);
            assert!((im - t.im).abs() < 4.0 * se_im + 1e-12, "{law:?} u={u} im {im} vs {}", t.im);
        }
    }
}
