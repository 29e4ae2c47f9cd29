//! Small descriptive statistics used by the account features and measures.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn mean<F: Scalar>(x: &[F]) -> F {
    if x.is_empty() {
        return F::zero();
    }
    x.iter().copied().sum::<F>() / F::from_usize_lossy(x.len())
}

/// Population variance (divides by `n`). Two-pass.
pub fn variance<F: Scalar>(x: &[F]) -> F {
    if x.len() < 2 {
        return F::zero();
    }
    let m = mean(x);
    x.iter().map(|&v| (v - m) * (v - m)).sum::<F>() / F::from_usize_lossy(x.len())
}

pub fn std_dev<F: Scalar>(x: &[F]) -> F {
    variance(x).sqrt()
}

/// Gini coefficient from the mean absolute difference,
/// `sum_i sum_j |x_i - x_j| / (2 n^2 mean)`.
///
/// Computed in `O(n log n)` over the sorted values. All-zero input gives 0.
pub fn gini<F: Scalar>(values: &[F]) -> Result<F> {
    if values.is_empty() {
        return Err(Error::invalid("gini of an empty list"));
    }
    if values.iter().any(|v| *v < F::zero() || !v.is_finite()) {
        return Err(Error::invalid("gini requires finite non-negative values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let total: F = sorted.iter().copied().sum();
    if total == F::zero() {
        return Ok(F::zero());
    }
    let n = F::from_usize_lossy(sorted.len());
    // sum_{i<j} (x_j - x_i) = sum_i x_(i) * (2i - n + 1), zero-based over sorted values
    let mut weighted = F::zero();
    for (i, &v) in sorted.iter().enumerate() {
        let coef = F::from_usize_lossy(2 * i + 1) - n;
        weighted += coef * v;
    }
    // full double sum = 2 * weighted; divide by 2 n^2 mean = 2 n total
    Ok(weighted / (n * total))
}

/// Sample skewness `m3 / m2^(3/2)` with central moments over `n`.
/// Fewer than three values or zero spread give 0.
pub fn skewness<F: Scalar>(values: &[F]) -> F {
    if values.len() < 3 {
        return F::zero();
    }
    let m = mean(values);
    let n = F::from_usize_lossy(values.len());
    let (mut m2, mut m3) = (F::zero(), F::zero());
    for &v in values {
        let d = v - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 <= F::zero() {
        return F::zero();
    }
    m3 / m2.powf(F::lit(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent O(n^2) pairwise definition.
    fn gini_pairwise(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        if m == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for a in x {
            for b in x {
                s += (a - b).abs();
            }
        }
        s / (2.0 * n * n * m)
    }

    fn skew_moments(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
        let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
        m3 / m2.powf(1.5)
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[5.0, 5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(gini(&[0.0f64; 4]).unwrap(), 0.0);
        // oracle: pairwise sum over [1,2,3,4] is 20, / (2*16*2.5) = 0.25
        assert_eq!(gini_pairwise(&[1.0, 2.0, 3.0, 4.0]), 0.25);
        assert!((gini(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 0.25f64).abs() < 1e-15);
        assert!(gini::<f64>(&[]).is_err());
        assert!(gini(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn skewness_examples() {
        assert_eq!(skewness(&[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(skewness(&[2.0f64; 4]), 0.0);
        // oracle: mean 3.25, m2 = 15.1875, m3 = 68.34375 → 2/sqrt(3)
        let expected = skew_moments(&[1.0, 1.0, 1.0, 10.0]);
        assert!((expected - 1.1547005383792517).abs() < 1e-12);
        assert!((skewness(&[1.0, 1.0, 1.0, 10.0]) - expected).abs() < 1e-12);
        assert_eq!(skewness(&[1.0, 5.0]), 0.0);
    }

    #[test]
    fn gini_f32() {
        let g: f32 = gini(&[1.0f32, 2.0, 3.0, 4.0]).unwrap();
        assert!((g - 0.25).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn gini_matches_pairwise(x in prop::collection::vec(0.0f64..1e3, 1..60)) {
            let a = gini(&x).unwrap();
            let b = gini_pairwise(&x);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn gini_scale_invariant(x in prop::collection::vec(0.0f64..1e3, 1..60), c in 1e-3f64..1e3) {
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            prop_assert!((gini(&x).unwrap() - gini(&scaled).unwrap()).abs() <= 1e-12);
        }

        #[test]
        fn gini_all_mass_in_one(n in 1usize..200, s in 1e-3f64..1e6) {
            let mut x = vec![0.0; n];
            x[0] = s;
            let expected = (n as f64 - 1.0) / n as f64;
            prop_assert!((gini(&x).unwrap() - expected).abs() <= 1e-12);
        }

        #[test]
        fn skewness_matches_moments(x in prop::collection::vec(-1e3f64..1e3, 3..60)) {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>();
            prop_assume!(m2 > 1e-6);
            let a = skewness(&x);
            let b = skew_moments(&x);
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }
}
