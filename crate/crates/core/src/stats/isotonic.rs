//! Pool-adjacent-violators fits.

/// Weighted least-squares nonincreasing fit of `y`.
pub fn isotonic_nonincreasing(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len());
    // blocks of (weighted mean, total weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((yi, wi, 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let wt = w1 + w2;
            let mean = if wt > 0.0 { (m1 * w1 + m2 * w2) / wt } else { 0.5 * (m1 + m2) };
            *blocks.last_mut().unwrap() = (mean, wt, l1 + l2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, l)| std::iter::repeat_n(m, l))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pools_violators() {
        let fit = isotonic_nonincreasing(&[1.0, 0.5, 0.7, 0.2], &[1.0; 4]);
        assert_eq!(fit, vec![1.0, 0.6, 0.6, 0.2]);
    }

    #[test]
    fn monotone_input_unchanged() {
        let y = [0.9, 0.9, 0.4, 0.1];
        assert_eq!(isotonic_nonincreasing(&y, &[2.0; 4]), y.to_vec());
    }

    proptest! {
        #[test]
        fn output_is_nonincreasing_and_preserves_weighted_mean(
            y in prop::collection::vec(0.0f64..1.0, 1..40),
        ) {
            let w: Vec<f64> = (0..y.len()).map(|i| 1.0 + (i % 3) as f64).collect();
            let fit = isotonic_nonincreasing(&y, &w);
            prop_assert!(fit.windows(2).all(|p| p[0] >= p[1] - 1e-12));
            let a: f64 = y.iter().zip(&w).map(|(a, b)| a * b).sum();
            let b: f64 = fit.iter().zip(&w).map(|(a, b)| a * b).sum();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
