//! k-nearest-neighbor vote on z-scored features.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::sampling::{squared_distance, LabeledMatrix, Standardizer};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel<F> {
    pub k: usize,
    pub standardizer: Standardizer<F>,
    /// Standardized training rows.
    pub rows: Vec<Vec<F>>,
    pub labels: Vec<Label>,
}

impl<F: Scalar> KnnModel<F> {
    pub fn fit(train: &LabeledMatrix<F>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("knn k must be positive"));
        }
        if k > train.len() {
            return Err(Error::invalid(format!(
                "knn k = {k} exceeds {} training rows",
                train.len()
            )));
        }
        let standardizer = Standardizer::fit(&train.rows);
        Ok(KnnModel {
            k,
            rows: standardizer.transform_all(&train.rows),
            standardizer,
            labels: train.labels.clone(),
        })
    }

    /// Fraction of the `k` nearest training rows that are ponzi.
    pub fn score(&self, row: &[F]) -> F {
        let q = self.standardizer.transform(row);
        let mut dist: Vec<(F, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (squared_distance(&q, r), i))
            .collect();
        let cmp = |a: &(F, usize), b: &(F, usize)| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        };
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
        }
        let ponzi = dist[..self.k]
            .iter()
            .filter(|(_, i)| self.labels[*i].is_ponzi())
            .count();
        F::from_usize_lossy(ponzi) / F::from_usize_lossy(self.k)
    }

    pub fn scores(&self, rows: &[Vec<F>]) -> Vec<F> {
        rows.par_iter().map(|r| self.score(r)).collect()
    }
}
