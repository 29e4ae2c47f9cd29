//! Additive trend/seasonal/remainder decomposition used by the strength measures.
//!
//! When the series holds at least two full periods, the trend is a centered moving
//! average of order `period` on the interior; at each end it continues the straight
//! line fitted (least squares) through the nearest `period` interior trend values.
//! The seasonal component is the per-phase mean of the detrended series, centered to
//! sum to zero. Shorter series get no seasonal component and a centered moving
//! average of width `min(N, 2*period + 1)` (rounded down to odd) whose window shrinks
//! symmetrically near the ends. Both trend rules reproduce straight lines exactly.

use crate::scalar::Scalar;
use crate::stats::variance;

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<F> {
    pub trend: Vec<F>,
    pub seasonal: Vec<F>,
    pub remainder: Vec<F>,
    /// Whether a seasonal component was fitted.
    pub seasonal_fitted: bool,
}

pub(crate) fn is_constant<F: Scalar>(x: &[F]) -> bool {
    x.windows(2).all(|w| w[0] == w[1])
}

/// Mean over `[t - a, t + a]`.
fn window_mean<F: Scalar>(x: &[F], t: usize, a: usize) -> F {
    let s: F = x[t - a..=t + a].iter().copied().sum();
    s / F::from_usize_lossy(2 * a + 1)
}

/// Centered moving average. For even `order` the classic `2 x order` weights
/// (halves at both ends) are used; near the boundaries the window shrinks to the
/// largest symmetric one that fits and becomes a plain mean.
pub fn centered_moving_average<F: Scalar>(x: &[F], order: usize) -> Vec<F> {
    let n = x.len();
    let order = order.max(1);
    let even = order.is_multiple_of(2);
    let half = order / 2;
    (0..n)
        .map(|t| {
            let avail = half.min(t).min(n - 1 - t);
            if avail < half || !even {
                return window_mean(x, t, avail);
            }
            let inner: F = x[t - half + 1..t + half].iter().copied().sum();
            let edge = (x[t - half] + x[t + half]) * F::lit(0.5);
            (inner + edge) / F::from_usize_lossy(order)
        })
        .collect()
}

/// Interior moving average of order `period` with linear extrapolation at both ends.
/// Needs `x.len() >= 2 * period`, which leaves at least `period` interior points.
fn extrapolated_trend<F: Scalar>(x: &[F], period: usize) -> Vec<F> {
    let n = x.len();
    let half = period / 2;
    let mut trend = centered_moving_average(x, period);
    let (lo, hi) = (half, n - 1 - half);
    let fit = (hi - lo + 1).min(period);
    let head = fit_line(&trend[lo..lo + fit], lo);
    let tail = fit_line(&trend[hi + 1 - fit..=hi], hi + 1 - fit);
    for t in 0..lo {
        trend[t] = head.0 + head.1 * F::from_usize_lossy(t);
    }
    for t in hi + 1..n {
        trend[t] = tail.0 + tail.1 * F::from_usize_lossy(t);
    }
    trend
}

/// Least-squares `(intercept, slope)` of `y` against `start, start + 1, ...`.
fn fit_line<F: Scalar>(y: &[F], start: usize) -> (F, F) {
    let m = y.len();
    let t_mean = F::from_usize_lossy(start) + F::from_usize_lossy(m - 1) * F::lit(0.5);
    let y_mean = y.iter().copied().sum::<F>() / F::from_usize_lossy(m);
    let (mut sxy, mut sxx) = (F::zero(), F::zero());
    for (i, &v) in y.iter().enumerate() {
        let dt = F::from_usize_lossy(start + i) - t_mean;
        sxy += dt * (v - y_mean);
        sxx += dt * dt;
    }
    let slope = if sxx > F::zero() {
        sxy / sxx
    } else {
        F::zero()
    };
    (y_mean - slope * t_mean, slope)
}

pub fn decompose<F: Scalar>(x: &[F], period: usize) -> Decomposition<F> {
    let n = x.len();
    if n == 0 || is_constant(x) {
        return Decomposition {
            trend: x.to_vec(),
            seasonal: vec![F::zero(); n],
            remainder: vec![F::zero(); n],
            seasonal_fitted: false,
        };
    }
    let seasonal_fitted = period >= 2 && n >= 2 * period;
    let (trend, seasonal) = if seasonal_fitted {
        let trend = extrapolated_trend(x, period);
        let mut sums = vec![F::zero(); period];
        let mut counts = vec![0usize; period];
        for t in 0..n {
            sums[t % period] += x[t] - trend[t];
            counts[t % period] += 1;
        }
        let mut phase: Vec<F> = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| s / F::from_usize_lossy(c))
            .collect();
        let center = phase.iter().copied().sum::<F>() / F::from_usize_lossy(period);
        for p in &mut phase {
            *p -= center;
        }
        let seasonal = (0..n).map(|t| phase[t % period]).collect();
        (trend, seasonal)
    } else {
        let mut width = n.min(2 * period + 1);
        if width.is_multiple_of(2) {
            width -= 1;
        }
        (centered_moving_average(x, width), vec![F::zero(); n])
    };
    let remainder = (0..n).map(|t| x[t] - trend[t] - seasonal[t]).collect();
    Decomposition {
        trend,
        seasonal,
        remainder,
        seasonal_fitted,
    }
}

fn strength<F: Scalar>(remainder: &[F], component_plus_remainder: &[F]) -> F {
    let denom = variance(component_plus_remainder);
    if denom <= F::zero() {
        return F::zero();
    }
    (F::one() - variance(remainder) / denom).max(F::zero())
}

/// Trend and seasonal strengths `max(0, 1 - Var(R) / Var(C + R))`.
/// Series shorter than 3 give `(0, 0)`.
pub fn stl_strengths<F: Scalar>(x: &[F], period: usize) -> (F, F) {
    if x.len() < 3 {
        return (F::zero(), F::zero());
    }
    let d = decompose(x, period);
    strengths_of(x, &d)
}

pub(crate) fn strengths_of<F: Scalar>(x: &[F], d: &Decomposition<F>) -> (F, F) {
    if x.len() < 3 {
        return (F::zero(), F::zero());
    }
    let trend_plus_rem: Vec<F> = x.iter().zip(&d.seasonal).map(|(&v, &s)| v - s).collect();
    let trend = strength(&d.remainder, &trend_plus_rem);
    let season = if d.seasonal_fitted {
        let season_plus_rem: Vec<F> = x.iter().zip(&d.trend).map(|(&v, &t)| v - t).collect();
        strength(&d.remainder, &season_plus_rem)
    } else {
        F::zero()
    };
    (trend, season)
}
