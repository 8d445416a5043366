//! Kolmogorov-Smirnov distances.

use crate::error::{Error, Result};

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(bad) = samples.iter().find(|x| x.is_nan()) {
        return Err(Error::InvalidParameter(format!("NaN in sample ({bad})")));
    }
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(v)
}

/// Sup-distance between the empirical CDFs of `a` and `b`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
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
    Ok(d)
}

/// One-sample distance `sup_t |F_n(t) - cdf(t)|` for a continuous `cdf`,
/// including the left limits of the empirical CDF at its jumps.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let s = sorted(samples)?;
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Distance of the sample's empirical CDF from the mean-one exponential law.
pub fn ks_vs_exponential(samples: &[f64]) -> Result<f64> {
    if let Some(&bad) = samples.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::NonPositiveSample(bad));
    }
    ks_one_sample(samples, |t| -(-t).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Exp1;

    #[test]
    fn identical_and_disjoint() {
        let a = [0.3, 0.1, 0.7, 0.7];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0, 5.0]).unwrap(), 1.0);
        assert_eq!(ks_two_sample(&[3.0, 4.0, 5.0], &[1.0, 2.0]).unwrap(), 1.0);
    }

    #[test]
    fn ties_across_samples() {
        // F_a jumps to 1 at 1; F_b is 1/2 at 1 and 1 at 2
        assert!((ks_two_sample(&[1.0, 1.0], &[1.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_exponential_sample() {
        let d = ks_vs_exponential(&[std::f64::consts::LN_2]).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_and_nonpositive() {
        assert_eq!(ks_vs_exponential(&[]), Err(Error::EmptySample));
        assert!(matches!(ks_vs_exponential(&[1.0, 0.0]), Err(Error::NonPositiveSample(_))));
        assert_eq!(ks_two_sample(&[], &[1.0]), Err(Error::EmptySample));
    }

    // The asymptotic 99% point of sqrt(n) D is 1.628, giving 0.0051 at n = 1e5;
    // 0.012 leaves a wide margin.
    #[test]
    fn exponential_samples_are_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.sample(Exp1)).collect();
        assert!(ks_vs_exponential(&xs).unwrap() < 0.012);
    }

    // Two-sample 99% point: 1.628 * sqrt(2 / 1e5) = 0.0073.
    #[test]
    fn independent_uniform_samples_are_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a: Vec<f64> = (0..100_000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..100_000).map(|_| rng.random()).collect();
        assert!(ks_two_sample(&a, &b).unwrap() < 0.012);
    }
}
