//! Labeled feature matrices, z-score standardization and Borderline-SMOTE.

use std::io::{Read, Write};

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::scalar::Scalar;

/// Rows of features with a class label and an identifier (application address).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix<F> {
    pub names: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<F>>,
    pub labels: Vec<Label>,
}

impl<F: Scalar> LabeledMatrix<F> {
    pub fn new(
        names: Vec<String>,
        ids: Vec<String>,
        rows: Vec<Vec<F>>,
        labels: Vec<Label>,
    ) -> Result<Self> {
        if ids.len() != rows.len() || labels.len() != rows.len() {
            return Err(Error::invalid("ids, rows and labels differ in length"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != names.len()) {
            return Err(Error::ArityMismatch {
                expected: names.len(),
                got: bad.len(),
            });
        }
        Ok(LabeledMatrix {
            names,
            ids,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.names.len()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Row subset in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        LabeledMatrix {
            names: self.names.clone(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Column subset in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        LabeledMatrix {
            names: columns.iter().map(|&c| self.names[c].clone()).collect(),
            ids: self.ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| columns.iter().map(|&c| r[c]).collect())
                .collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn select_named_columns(&self, names: &[String]) -> Result<Self> {
        let cols = names
            .iter()
            .map(|n| {
                self.names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::invalid(format!("unknown feature {n}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&cols))
    }

    /// CSV with `address`, the feature names, then `label`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = Vec::with_capacity(self.arity() + 2);
        header.push("address".to_string());
        header.extend(self.names.iter().cloned());
        header.push("label".to_string());
        wtr.write_record(&header)?;
        for ((id, row), label) in self.ids.iter().zip(&self.rows).zip(&self.labels) {
            let mut rec = Vec::with_capacity(row.len() + 2);
            rec.push(id.clone());
            // `{:?}` prints the shortest representation that round-trips
            rec.extend(row.iter().map(|v| format!("{v:?}")));
            rec.push(label.as_str().to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let n = header.len();
        if n < 2 || &header[0] != "address" || &header[n - 1] != "label" {
            return Err(Error::invalid(
                "feature CSV must start with `address` and end with `label`",
            ));
        }
        let names: Vec<String> = header
            .iter()
            .skip(1)
            .take(n - 2)
            .map(String::from)
            .collect();
        let (mut ids, mut rows, mut labels) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != n {
                return Err(Error::invalid(format!(
                    "line {line}: expected {n} columns, got {}",
                    rec.len()
                )));
            }
            ids.push(rec[0].to_string());
            let row = (1..n - 1)
                .map(|c| {
                    rec[c].trim().parse::<f64>().map(F::lit).map_err(|e| {
                        Error::invalid(format!(
                            "line {line}, column {}: {e}",
                            &header[c]
                        ))
                    })
                })
                .collect::<Result<Vec<F>>>()?;
            rows.push(row);
            labels.push(rec[n - 1].parse()?);
        }
        LabeledMatrix::new(names, ids, rows, labels)
    }
}

/// Per-column z-score parameters. Zero-spread columns get unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<F> {
    pub means: Vec<F>,
    pub scales: Vec<F>,
}

impl<F: Scalar> Standardizer<F> {
    pub fn fit(rows: &[Vec<F>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = F::from_usize_lossy(rows.len().max(1));
        let mut means = vec![F::zero(); d];
        for r in rows {
            for (m, &v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut scales = vec![F::zero(); d];
        for r in rows {
            for ((s, &v), &m) in scales.iter_mut().zip(r).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut scales {
            *s = (*s / n).sqrt();
            if !(*s > F::zero()) || !s.is_finite() {
                *s = F::one();
            }
        }
        Standardizer { means, scales }
    }

    pub fn transform(&self, row: &[F]) -> Vec<F> {
        row.iter()
            .zip(&self.means)
            .zip(&self.scales)
            .map(|((&v, &m), &s)| (v - m) / s)
            .collect()
    }

    pub fn transform_all(&self, rows: &[Vec<F>]) -> Vec<Vec<F>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

#[inline]
pub(crate) fn squared_distance<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` rows of `candidates` nearest to `query`, excluding `exclude`.
/// Distance ties go to the lower row index.
pub(crate) fn nearest<F: Scalar>(
    rows: &[Vec<F>],
    query: usize,
    candidates: &[usize],
    k: usize,
) -> Vec<usize> {
    let mut dist: Vec<(F, usize)> = candidates
        .iter()
        .filter(|&&j| j != query)
        .map(|&j| (squared_distance(&rows[query], &rows[j]), j))
        .collect();
    let k = k.min(dist.len());
    let cmp = |a: &(F, usize), b: &(F, usize)| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    };
    if k < dist.len() && k > 0 {
        dist.select_nth_unstable_by(k - 1, cmp);
        dist.truncate(k);
    }
    dist.sort_by(cmp);
    dist.truncate(k);
    dist.into_iter().map(|(_, j)| j).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteParams {
    /// Neighbors used to classify minority points as safe, danger or noise.
    pub m: usize,
    /// Minority neighbors used for interpolation.
    pub k: usize,
    /// Desired minority / majority ratio after sampling.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteParams {
    fn default() -> Self {
        SmoteParams {
            m: 10,
            k: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmoteOutcome<F> {
    /// Original rows in original order followed by synthetic ponzi rows.
    pub data: LabeledMatrix<F>,
    /// Row indices of the minority points on the class border.
    pub danger: Vec<usize>,
    pub synthetic: usize,
    /// True when no border points existed and every minority point was used.
    pub fell_back: bool,
}

/// Minority (ponzi) rows whose `m` nearest neighbours (z-scored Euclidean, any class)
/// contain at least `m/2` but fewer than `m` majority rows.
pub fn danger_set<F: Scalar>(data: &LabeledMatrix<F>, m: usize) -> Vec<usize> {
    let z = Standardizer::fit(&data.rows).transform_all(&data.rows);
    danger_in(&z, &data.labels, m)
}

fn danger_in<F: Scalar>(z: &[Vec<F>], labels: &[Label], m: usize) -> Vec<usize> {
    let all: Vec<usize> = (0..z.len()).collect();
    let minority: Vec<usize> = (0..z.len()).filter(|&i| labels[i].is_ponzi()).collect();
    let m = m.min(z.len().saturating_sub(1));
    minority
        .par_iter()
        .filter_map(|&p| {
            let nn = nearest(z, p, &all, m);
            let majority = nn.iter().filter(|&&j| !labels[j].is_ponzi()).count();
            (m > 0 && 2 * majority >= m && majority < m).then_some(p)
        })
        .collect()
}

/// Borderline-SMOTE-1 over the ponzi class.
///
/// Synthetic rows `p + u (q - p)`, `u ~ U(0, 1)`, are drawn round-robin over the border
/// points `p`, with `q` one of the `k` nearest ponzi neighbours of `p`, until the
/// ponzi/non-ponzi ratio reaches `target_ratio`. Interpolation happens in the original
/// coordinates; neighbour search uses z-scores fitted on `data`.
pub fn borderline_smote<F: Scalar>(
    data: &LabeledMatrix<F>,
    params: &SmoteParams,
) -> Result<SmoteOutcome<F>> {
    if params.m == 0 || params.k == 0 {
        return Err(Error::invalid("smote m and k must be positive"));
    }
    if !(params.target_ratio > 0.0) {
        return Err(Error::invalid("target_ratio must be positive"));
    }
    let n_min = data.count(Label::Ponzi);
    let n_maj = data.count(Label::NonPonzi);
    if n_min < 2 {
        return Err(Error::InsufficientData(format!(
            "borderline-smote needs at least 2 ponzi rows, got {n_min}"
        )));
    }
    let target = (params.target_ratio * n_maj as f64).round() as usize;
    let needed = target.saturating_sub(n_min);
    if needed == 0 {
        return Ok(SmoteOutcome {
            data: data.clone(),
            danger: Vec::new(),
            synthetic: 0,
            fell_back: false,
        });
    }

    let z = Standardizer::fit(&data.rows).transform_all(&data.rows);
    let minority: Vec<usize> = (0..data.len())
        .filter(|&i| data.labels[i].is_ponzi())
        .collect();
    let danger = danger_in(&z, &data.labels, params.m);
    let fell_back = danger.is_empty();
    let seeds = if fell_back {
        warn!("borderline-smote found no border points; using all ponzi rows");
        minority.clone()
    } else {
        danger.clone()
    };
    let neighbours: Vec<Vec<usize>> = seeds
        .par_iter()
        .map(|&p| nearest(&z, p, &minority, params.k))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out = data.clone();
    out.rows.reserve(needed);
    for i in 0..needed {
        let s = i % seeds.len();
        let p = &data.rows[seeds[s]];
        let nn = &neighbours[s];
        let q = &data.rows[nn[rng.random_range(0..nn.len())]];
        let u = F::lit(rng.random::<f64>());
        let row: Vec<F> = p.iter().zip(q).map(|(&a, &b)| a + u * (b - a)).collect();
        out.rows.push(row);
        out.ids.push(format!("synthetic-{i}"));
        out.labels.push(Label::Ponzi);
    }
    Ok(SmoteOutcome {
        data: out,
        danger,
        synthetic: needed,
        fell_back,
    })
}
