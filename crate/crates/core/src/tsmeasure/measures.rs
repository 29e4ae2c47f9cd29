use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::decompose::{decompose, is_constant};
use crate::scalar::Scalar;
use crate::stats::{mean, variance};

/// Arithmetic mean and population variance.
pub fn mean_var<F: Scalar>(x: &[F]) -> (F, F) {
    (mean(x), variance(x))
}

/// Lag-1 autocorrelation. Constant or single-value series give 0.
pub fn acf1<F: Scalar>(x: &[F]) -> F {
    if x.len() < 2 || is_constant(x) {
        return F::zero();
    }
    let m = mean(x);
    let denom: F = x.iter().map(|&v| (v - m) * (v - m)).sum();
    let num: F = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    if denom <= F::zero() {
        return F::zero();
    }
    num / denom
}

/// Coefficients of `x` on the orthonormal degree-1 and degree-2 polynomials over
/// `t = 1..N` (Gram-Schmidt on `{1, t, t^2}`). Fewer than 3 points give `(0, 0)`.
pub fn linearity_curvature<F: Scalar>(x: &[F]) -> (F, F) {
    let n = x.len();
    if n < 3 {
        return (F::zero(), F::zero());
    }
    let basis = orthonormal_quadratic_basis::<F>(n);
    let dot = |q: &[F]| x.iter().zip(q).map(|(&a, &b)| a * b).sum::<F>();
    (dot(&basis[1]), dot(&basis[2]))
}

/// Modified Gram-Schmidt on `{1, t, t^2}`. The time axis is centered first, which
/// spans the same nested subspaces and keeps the powers small.
pub(crate) fn orthonormal_quadratic_basis<F: Scalar>(n: usize) -> [Vec<F>; 3] {
    let center = F::from_usize_lossy(n + 1) * F::lit(0.5);
    let u: Vec<F> = (1..=n).map(|t| F::from_usize_lossy(t) - center).collect();
    let mut cols = [
        vec![F::one(); n],
        u.clone(),
        u.iter().map(|&v| v * v).collect::<Vec<F>>(),
    ];
    for k in 0..3 {
        for j in 0..k {
            let (done, rest) = cols.split_at_mut(k);
            let proj: F = rest[0].iter().zip(&done[j]).map(|(&a, &b)| a * b).sum();
            for (a, &b) in rest[0].iter_mut().zip(&done[j]) {
                *a -= proj * b;
            }
        }
        let norm = cols[k].iter().map(|&v| v * v).sum::<F>().sqrt();
        for v in &mut cols[k] {
            *v /= norm;
        }
    }
    cols
}

/// Shannon entropy of the normalized periodogram (bins `1..=N/2`, DC excluded),
/// divided by `ln(#bins)`.
///
/// Constant series give 1. A single frequency bin gives 0.
pub fn spectral_entropy<F: Scalar>(x: &[F]) -> F {
    let n = x.len();
    if n < 2 || is_constant(x) {
        return F::one();
    }
    let bins = n / 2;
    if bins < 2 {
        return F::zero();
    }
    let power = periodogram(x);
    let total: F = power.iter().copied().sum();
    if total <= F::zero() {
        return F::one();
    }
    let mut h = F::zero();
    for &p in &power {
        if p > F::zero() {
            let q = p / total;
            h -= q * q.ln();
        }
    }
    (h / F::from_usize_lossy(bins).ln())
        .max(F::zero())
        .min(F::one())
}

/// `|X_k|^2` for `k = 1..=N/2`.
pub(crate) fn periodogram<F: Scalar>(x: &[F]) -> Vec<F> {
    let n = x.len();
    let fft: Arc<dyn Fft<F>> = FftPlanner::new().plan_fft_forward(n);
    let mut buf: Vec<Complex<F>> = x.iter().map(|&v| Complex::new(v, F::zero())).collect();
    fft.process(&mut buf);
    buf[1..=n / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Variance of per-window population variances of the standardized series over
/// `floor(N / width)` non-overlapping windows. Fewer than two windows, or zero spread,
/// give 0.
pub fn lumpiness<F: Scalar>(x: &[F], width: usize) -> F {
    let width = width.max(1);
    let windows = x.len() / width;
    if x.len() < 2 || windows < 2 || is_constant(x) {
        return F::zero();
    }
    let (m, v) = mean_var(x);
    let sd = v.sqrt();
    if sd <= F::zero() {
        return F::zero();
    }
    let z: Vec<F> = x.iter().map(|&t| (t - m) / sd).collect();
    let vars: Vec<F> = z.chunks_exact(width).map(variance).collect();
    variance(&vars)
}

/// Variance of the leave-one-out variances of the decomposition remainder.
pub fn spikiness<F: Scalar>(x: &[F], period: usize) -> F {
    if x.len() < 4 {
        return F::zero();
    }
    spikiness_of_remainder(&decompose(x, period).remainder)
}

/// Leave-one-out variance spread in `O(N)`: with deviations `d_j` from the full mean
/// and `D = sum d_j^2`, dropping `j` leaves variance `(D - d_j^2)/(N-1) - (d_j/(N-1))^2`.
pub(crate) fn spikiness_of_remainder<F: Scalar>(r: &[F]) -> F {
    let n = r.len();
    if n < 4 {
        return F::zero();
    }
    let m = mean(r);
    let d: Vec<F> = r.iter().map(|&v| v - m).collect();
    let total: F = d.iter().map(|&v| v * v).sum();
    let k = F::from_usize_lossy(n - 1);
    let loo: Vec<F> = d
        .iter()
        .map(|&dj| {
            let shift = dj / k;
            (total - dj * dj) / k - shift * shift
        })
        .collect();
    variance(&loo)
}

/// Longest run of consecutive values falling in the same of ten equal-width bins
/// over `[min, max]`. Constant series give `N`.
pub fn flat_spots<F: Scalar>(x: &[F]) -> usize {
    let n = x.len();
    if n == 0 {
        return 0;
    }
    let (lo, hi) = x
        .iter()
        .fold((x[0], x[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == hi {
        return n;
    }
    let ten = F::lit(10.0);
    let range = hi - lo;
    let bin = |v: F| -> usize {
        let b = ((v - lo) / range * ten).floor().to_usize().unwrap_or(0);
        b.min(9)
    };
    let mut best = 1;
    let mut run = 1;
    let mut prev = bin(x[0]);
    for &v in &x[1..] {
        let b = bin(v);
        if b == prev {
            run += 1;
            best = best.max(run);
        } else {
            run = 1;
            prev = b;
        }
    }
    best
}

/// Number of times the series crosses its mean. A value exactly at the mean keeps the
/// sign of the previous value.
pub fn crossing_points<F: Scalar>(x: &[F]) -> usize {
    if x.len() < 2 {
        return 0;
    }
    let m = mean(x);
    let mut prev_sign = 0i8;
    let mut count = 0;
    for &v in x {
        let d = v - m;
        let sign = if d > F::zero() {
            1
        } else if d < F::zero() {
            -1
        } else {
            prev_sign
        };
        if sign != 0 && prev_sign != 0 && sign != prev_sign {
            count += 1;
        }
        prev_sign = sign;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_var_examples() {
        assert_eq!(mean_var(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        assert_eq!(mean_var(&[0.0, 4.0]), (2.0, 4.0));
        assert_eq!(mean_var(&[3.0]), (3.0, 0.0));
    }

    #[test]
    fn acf1_examples() {
        assert_eq!(acf1(&[1.0, 1.0, 1.0, 1.0]), 0.0);
        // oracle: num = -5, denom = 6
        let alt: [f64; 6] = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        assert!((acf1(&alt) - (-5.0 / 6.0)).abs() < 1e-15);
        let ramp: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!(acf1(&ramp) > 0.9);
        assert_eq!(acf1(&[4.0]), 0.0);
    }

    #[test]
    fn orthogonal_regression() {
        let n = 25;
        let c = (n as f64 + 1.0) / 2.0;
        let quad: Vec<f64> = (1..=n).map(|t| (t as f64 - c).powi(2)).collect();
        let (lin, curv) = linearity_curvature(&quad);
        assert!(lin.abs() < 1e-9);
        assert!(curv > 0.0);
        let line: Vec<f64> = (1..=n).map(|t| 3.0 * t as f64).collect();
        let (lin, curv) = linearity_curvature(&line);
        assert!(curv.abs() < 1e-9);
        assert!(lin > 0.0);
        assert_eq!(linearity_curvature(&[1.0, 2.0]), (0.0, 0.0));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(spectral_entropy(&[3.0, 3.0, 3.0, 3.0]), 1.0);
        assert_eq!(spectral_entropy(&[1.0, 2.0]), 0.0);
        let n = 64;
        let sine: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * 5.0 * t as f64 / n as f64).sin())
            .collect();
        assert!(spectral_entropy(&sine) < 0.2);
    }

    #[test]
    fn lumpiness_guards() {
        assert_eq!(lumpiness(&[1.0; 40], 10), 0.0);
        assert_eq!(lumpiness(&[1.0, 5.0, 2.0, 3.0, 4.0], 10), 0.0);
    }

    #[test]
    fn spikiness_examples() {
        assert_eq!(spikiness_of_remainder(&[0.0f64; 10]), 0.0);
        let base = [0.1, -0.2, 0.05, 0.1, -0.1, 0.02, -0.03, 0.07];
        let mut spiked = base;
        spiked[4] = 5.0;
        assert!(spikiness_of_remainder(&spiked) > spikiness_of_remainder(&base));
        assert_eq!(spikiness(&[1.0, 2.0, 3.0], 7), 0.0);
    }

    #[test]
    fn flat_spot_examples() {
        assert_eq!(flat_spots(&[2.0; 7]), 7);
        let ramp: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(flat_spots(&ramp), 10);
        assert_eq!(flat_spots(&[0.0, 10.0, 0.0]), 1);
    }

    #[test]
    fn crossing_examples() {
        assert_eq!(crossing_points(&[1.0, 3.0, 1.0, 3.0]), 3);
        let ramp: Vec<f64> = (1..=10).map(f64::from).collect();
        assert!(crossing_points(&ramp) <= 1);
        // exact-mean values carry the previous sign: 1, 2(=mean), 3 → one crossing
        assert_eq!(crossing_points(&[1.0, 2.0, 3.0]), 1);
        assert_eq!(crossing_points(&[5.0]), 0);
    }

    #[test]
    fn f32_works() {
        let x: Vec<f32> = (0..30).map(|t| (t as f32 * 0.7).sin()).collect();
        assert!(acf1(&x).is_finite());
        assert!(spectral_entropy(&x) <= 1.0);
    }
}
