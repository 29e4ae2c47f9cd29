//! Independent reference implementations used as test oracles, plus data generators.
//!
//! Everything here is written from the definitions, deliberately naive, and shares no
//! code with the library beyond its public types.

#![allow(dead_code)]

use ponzi_core::ingest::Label;
use ponzi_core::sampling::LabeledMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

// ---------------------------------------------------------------- series measures

pub fn o_mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mut s = 0.0;
    for v in x {
        s += v;
    }
    s / x.len() as f64
}

pub fn o_var(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = o_mean(x);
    let mut s = 0.0;
    for v in x {
        s += (v - m) * (v - m);
    }
    s / x.len() as f64
}

fn constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

pub fn o_acf1(x: &[f64]) -> f64 {
    if x.len() < 2 || constant(x) {
        return 0.0;
    }
    let m = o_mean(x);
    let mut num = 0.0;
    for t in 1..x.len() {
        num += (x[t] - m) * (x[t - 1] - m);
    }
    let mut den = 0.0;
    for v in x {
        den += (v - m) * (v - m);
    }
    num / den
}

/// Projections on the discrete orthogonal polynomials `t - c` and
/// `(t - c)^2 - (n^2 - 1) / 12`, normalized.
pub fn o_linearity_curvature(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n < 3 {
        return (0.0, 0.0);
    }
    let c = (n as f64 + 1.0) / 2.0;
    let k = ((n * n) as f64 - 1.0) / 12.0;
    let p1: Vec<f64> = (1..=n).map(|t| t as f64 - c).collect();
    let p2: Vec<f64> = p1.iter().map(|u| u * u - k).collect();
    let proj = |p: &[f64]| {
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() / norm
    };
    (proj(&p1), proj(&p2))
}

/// Entropy of the normalized periodogram from a direct DFT.
pub fn o_entropy(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 || constant(x) {
        return 1.0;
    }
    let bins = n / 2;
    if bins < 2 {
        return 0.0;
    }
    let mut power = Vec::with_capacity(bins);
    for k in 1..=bins {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * (k * t % n) as f64 / n as f64;
            re += v * angle.cos();
            im += v * angle.sin();
        }
        power.push(re * re + im * im);
    }
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return 1.0;
    }
    let mut h = 0.0;
    for p in power {
        if p > 0.0 {
            let q = p / total;
            h -= q * q.ln();
        }
    }
    (h / (bins as f64).ln()).clamp(0.0, 1.0)
}

pub struct ODecomp {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub remainder: Vec<f64>,
    pub fitted: bool,
}

/// Least squares line through `(t, y)` by the normal equations.
fn o_line(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = ts.len() as f64;
    let st: f64 = ts.iter().sum();
    let sy: f64 = ys.iter().sum();
    let stt: f64 = ts.iter().map(|t| t * t).sum();
    let sty: f64 = ts.iter().zip(ys).map(|(t, y)| t * y).sum();
    let det = n * stt - st * st;
    if det == 0.0 {
        return (sy / n, 0.0);
    }
    let b = (n * sty - st * sy) / det;
    ((sy - b * st) / n, b)
}

pub fn o_decompose(x: &[f64], p: usize) -> ODecomp {
    let n = x.len();
    if n == 0 || constant(x) {
        return ODecomp {
            trend: x.to_vec(),
            seasonal: vec![0.0; n],
            remainder: vec![0.0; n],
            fitted: false,
        };
    }
    let fitted = p >= 2 && n >= 2 * p;
    let mut trend = vec![0.0; n];
    let mut seasonal = vec![0.0; n];
    if fitted {
        let h = p / 2;
        for t in h..n - h {
            let mut s = 0.0;
            if p.is_multiple_of(2) {
                for j in t - h..=t + h {
                    let w = if j == t - h || j == t + h { 0.5 } else { 1.0 };
                    s += w * x[j];
                }
            } else {
                for j in t - h..=t + h {
                    s += x[j];
                }
            }
            trend[t] = s / p as f64;
        }
        let interior: Vec<usize> = (h..n - h).collect();
        let m = interior.len().min(p);
        let head: Vec<usize> = interior[..m].to_vec();
        let tail: Vec<usize> = interior[interior.len() - m..].to_vec();
        for (idx, range) in [(head, 0..h), (tail, n - h..n)] {
            let ts: Vec<f64> = idx.iter().map(|&t| t as f64).collect();
            let ys: Vec<f64> = idx.iter().map(|&t| trend[t]).collect();
            let (a, b) = o_line(&ts, &ys);
            for t in range {
                trend[t] = a + b * t as f64;
            }
        }
        let mut phase = vec![0.0; p];
        for (k, ph) in phase.iter_mut().enumerate() {
            let vals: Vec<f64> = (k..n).step_by(p).map(|t| x[t] - trend[t]).collect();
            *ph = o_mean(&vals);
        }
        let c = o_mean(&phase);
        for t in 0..n {
            seasonal[t] = phase[t % p] - c;
        }
    } else {
        let mut w = n.min(2 * p + 1);
        if w.is_multiple_of(2) {
            w -= 1;
        }
        for t in 0..n {
            let a = (w / 2).min(t).min(n - 1 - t);
            trend[t] = o_mean(&x[t - a..=t + a]);
        }
    }
    let remainder = (0..n).map(|t| x[t] - trend[t] - seasonal[t]).collect();
    ODecomp {
        trend,
        seasonal,
        remainder,
        fitted,
    }
}

fn o_strength(rem: &[f64], comp_plus_rem: &[f64]) -> f64 {
    let v = o_var(comp_plus_rem);
    if v <= 0.0 {
        0.0
    } else {
        (1.0 - o_var(rem) / v).max(0.0)
    }
}

pub fn o_strengths(x: &[f64], d: &ODecomp) -> (f64, f64) {
    if x.len() < 3 {
        return (0.0, 0.0);
    }
    let tr: Vec<f64> = (0..x.len()).map(|t| x[t] - d.seasonal[t]).collect();
    let sr: Vec<f64> = (0..x.len()).map(|t| x[t] - d.trend[t]).collect();
    let season = if d.fitted {
        o_strength(&d.remainder, &sr)
    } else {
        0.0
    };
    (o_strength(&d.remainder, &tr), season)
}

pub fn o_lumpiness(x: &[f64], w: usize) -> f64 {
    let k = x.len() / w;
    if x.len() < 2 || k < 2 || constant(x) {
        return 0.0;
    }
    let m = o_mean(x);
    let sd = o_var(x).sqrt();
    if sd <= 0.0 {
        return 0.0;
    }
    let vars: Vec<f64> = (0..k)
        .map(|i| {
            let z: Vec<f64> = x[i * w..(i + 1) * w].iter().map(|v| (v - m) / sd).collect();
            o_var(&z)
        })
        .collect();
    o_var(&vars)
}

/// Variance of the leave-one-out variances, each recomputed from scratch.
pub fn o_spikiness(r: &[f64]) -> f64 {
    if r.len() < 4 {
        return 0.0;
    }
    let loo: Vec<f64> = (0..r.len())
        .map(|j| {
            let rest: Vec<f64> = r
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &v)| v)
                .collect();
            o_var(&rest)
        })
        .collect();
    o_var(&loo)
}

pub fn o_flat_spots(x: &[f64]) -> usize {
    if x.is_empty() {
        return 0;
    }
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return x.len();
    }
    let bins: Vec<usize> = x
        .iter()
        .map(|&v| (((v - lo) / (hi - lo) * 10.0).floor() as usize).min(9))
        .collect();
    let mut best = 0;
    let mut i = 0;
    while i < bins.len() {
        let mut j = i;
        while j < bins.len() && bins[j] == bins[i] {
            j += 1;
        }
        best = best.max(j - i);
        i = j;
    }
    best
}

/// Sign changes of `x - mean` after dropping values exactly at the mean.
pub fn o_crossings(x: &[f64]) -> usize {
    if x.len() < 2 {
        return 0;
    }
    let m = o_mean(x);
    let signs: Vec<bool> = x.iter().filter(|&&v| v != m).map(|&v| v > m).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// The twelve measures in registry order, lumpiness (width 10) and spikiness on the
/// decomposition remainder.
pub fn o_measures(x: &[f64], period: usize) -> [f64; 12] {
    let (lin, curv) = o_linearity_curvature(x);
    let d = o_decompose(x, period);
    let (trend, season) = o_strengths(x, &d);
    [
        o_mean(x),
        o_var(x),
        o_acf1(x),
        lin,
        curv,
        trend,
        season,
        o_entropy(x),
        o_lumpiness(&d.remainder, 10),
        o_spikiness(&d.remainder),
        o_flat_spots(x) as f64,
        o_crossings(x) as f64,
    ]
}

/// Random series of assorted shapes: noise, walks, seasonal ramps, sparse counts,
/// constants and bursts.
pub fn random_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let scale = 10f64.powf(rng.random_range(-2.0..3.0));
    match rng.random_range(0..6) {
        0 => (0..n).map(|_| scale * normal.sample(rng)).collect(),
        1 => {
            let mut v = 0.0;
            (0..n)
                .map(|_| {
                    v += normal.sample(rng);
                    scale * v
                })
                .collect()
        }
        2 => {
            let p = rng.random_range(2..15) as f64;
            let slope = rng.random_range(-1.0..1.0);
            (0..n)
                .map(|t| {
                    let t = t as f64;
                    scale * ((2.0 * std::f64::consts::PI * t / p).sin() + slope * t / 10.0)
                        + 0.3 * scale * normal.sample(rng)
                })
                .collect()
        }
        3 => {
            let p0 = rng.random_range(0.05..0.9);
            (0..n)
                .map(|_| {
                    if rng.random_bool(p0) {
                        rng.random_range(1..20) as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        4 => vec![scale.round(); n],
        _ => {
            let mut x: Vec<f64> = (0..n).map(|_| 0.1 * normal.sample(rng)).collect();
            for _ in 0..rng.random_range(1..4) {
                let i = rng.random_range(0..n);
                x[i] += scale * 50.0;
            }
            x
        }
    }
}

// ---------------------------------------------------------------- classifiers

/// Mean and population standard deviation per column, unit scale for constant columns.
pub fn o_zscore_params(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = rows[0].len();
    let mut means = Vec::with_capacity(d);
    let mut sds = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        means.push(o_mean(&col));
        let sd = o_var(&col).sqrt();
        sds.push(if sd > 0.0 { sd } else { 1.0 });
    }
    (means, sds)
}

fn zscore(row: &[f64], means: &[f64], sds: &[f64]) -> Vec<f64> {
    row.iter()
        .zip(means)
        .zip(sds)
        .map(|((v, m), s)| (v - m) / s)
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Full sort of all training rows by (distance, index); ponzi vote fraction of the first `k`.
pub fn o_knn_score(train: &[Vec<f64>], labels: &[Label], k: usize, query: &[f64]) -> f64 {
    let (means, sds) = o_zscore_params(train);
    let q = zscore(query, &means, &sds);
    let mut d: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| (sq_dist(&zscore(r, &means, &sds), &q), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let ponzi = d[..k].iter().filter(|(_, i)| labels[*i].is_ponzi()).count();
    ponzi as f64 / k as f64
}

/// Minority points whose `m` nearest neighbours (any class, z-scored) hold between
/// half and all-but-one majority points.
pub fn o_danger(rows: &[Vec<f64>], labels: &[Label], m: usize) -> Vec<usize> {
    let (means, sds) = o_zscore_params(rows);
    let z: Vec<Vec<f64>> = rows.iter().map(|r| zscore(r, &means, &sds)).collect();
    let mut out = Vec::new();
    for p in 0..rows.len() {
        if !labels[p].is_ponzi() {
            continue;
        }
        let mut d: Vec<(f64, usize)> = (0..rows.len())
            .filter(|&j| j != p)
            .map(|j| (sq_dist(&z[p], &z[j]), j))
            .collect();
        d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let maj = d[..m]
            .iter()
            .filter(|(_, j)| !labels[*j].is_ponzi())
            .count();
        if maj as f64 >= m as f64 / 2.0 && maj < m {
            out.push(p);
        }
    }
    out
}

/// Recursive CART with Gini impurity: every midpoint of consecutive distinct values
/// of every feature is tried, the lowest size-weighted child impurity wins (first
/// found on ties, features in index order, thresholds ascending), and impure nodes
/// always split when any threshold exists.
pub enum OTree {
    Leaf(f64),
    Split(usize, f64, Box<OTree>, Box<OTree>),
}

/// Weighted child impurity times `n`, as an exact fraction `num / den`:
/// `n - (al^2 + bl^2) / nl - (ar^2 + br^2) / nr`, compared through
/// `(al^2 + bl^2) / nl + (ar^2 + br^2) / nr` (larger is better).
fn score_fraction(al: u128, bl: u128, ar: u128, br: u128) -> (u128, u128) {
    let (nl, nr) = (al + bl, ar + br);
    ((al * al + bl * bl) * nr + (ar * ar + br * br) * nl, nl * nr)
}

pub fn o_cart(rows: &[Vec<f64>], y: &[bool], idx: &[usize]) -> OTree {
    let pos = idx.iter().filter(|&&i| y[i]).count();
    let frac = pos as f64 / idx.len() as f64;
    if pos == 0 || pos == idx.len() {
        return OTree::Leaf(frac);
    }
    let d = rows[0].len();
    let mut best: Option<(usize, f64, (u128, u128))> = None;
    for f in 0..d {
        let mut vals: Vec<f64> = idx.iter().map(|&i| rows[i][f]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let (mut al, mut bl, mut ar, mut br) = (0u128, 0u128, 0u128, 0u128);
            for &i in idx {
                match (rows[i][f] <= thr, y[i]) {
                    (true, true) => al += 1,
                    (true, false) => bl += 1,
                    (false, true) => ar += 1,
                    (false, false) => br += 1,
                }
            }
            let s = score_fraction(al, bl, ar, br);
            let better = match best {
                None => true,
                Some((_, _, b)) => s.0 * b.1 > b.0 * s.1,
            };
            if better {
                best = Some((f, thr, s));
            }
        }
    }
    let Some((f, thr, _)) = best else {
        return OTree::Leaf(frac);
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][f] <= thr);
    OTree::Split(
        f,
        thr,
        Box::new(o_cart(rows, y, &l)),
        Box::new(o_cart(rows, y, &r)),
    )
}

impl OTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            OTree::Leaf(v) => *v,
            OTree::Split(f, t, l, r) => {
                if x[*f] <= *t {
                    l.predict(x)
                } else {
                    r.predict(x)
                }
            }
        }
    }

    pub fn splits(&self) -> usize {
        match self {
            OTree::Leaf(_) => 0,
            OTree::Split(_, _, l, r) => 1 + l.splits() + r.splits(),
        }
    }
}

pub fn o_logistic_loss(margins: &[f64], y: &[bool]) -> f64 {
    let mut s = 0.0;
    for (&m, &t) in margins.iter().zip(y) {
        let p = 1.0 / (1.0 + (-m).exp());
        s -= if t { p.ln() } else { (1.0 - p).ln() };
    }
    s / margins.len() as f64
}

// ---------------------------------------------------------------- data

pub fn matrix(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> LabeledMatrix<f64> {
    let d = rows[0].len();
    LabeledMatrix::new(
        (0..d).map(|i| format!("f{i}")).collect(),
        (0..rows.len()).map(|i| format!("r{i}")).collect(),
        rows,
        labels,
    )
    .unwrap()
}

pub fn label(b: bool) -> Label {
    if b {
        Label::Ponzi
    } else {
        Label::NonPonzi
    }
}

/// Two classes split by `x + y > 0` with a margin of `gap`.
pub fn separable(n: usize, gap: f64, seed: u64) -> LabeledMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while rows.len() < n {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let s = a + b;
        if s.abs() < gap {
            continue;
        }
        rows.push(vec![a, b]);
        labels.push(label(s > 0.0));
    }
    matrix(rows, labels)
}

/// Two overlapping Gaussian blobs in `d` dimensions.
pub fn gaussian_blobs(n: usize, d: usize, seed: u64) -> LabeledMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let pos = i % 3 == 0;
        let shift = if pos { 1.2 } else { 0.0 };
        rows.push(
            (0..d)
                .map(|j| normal.sample(&mut rng) * (1.0 + j as f64) + shift)
                .collect(),
        );
        labels.push(label(pos));
    }
    matrix(rows, labels)
}

/// 10 minority points near the origin, some drifting outwards, inside a ring of 50
/// majority points.
pub fn ring_toy() -> LabeledMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..10 {
        let r = if i < 6 {
            rng.random_range(0.0..0.5)
        } else {
            rng.random_range(1.2..2.2)
        };
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        rows.push(vec![r * a.cos(), r * a.sin()]);
        labels.push(Label::Ponzi);
    }
    for _ in 0..50 {
        let r = rng.random_range(1.5..2.5);
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        rows.push(vec![r * a.cos(), r * a.sin()]);
        labels.push(Label::NonPonzi);
    }
    matrix(rows, labels)
}

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}
