//! CART classification trees with Gini impurity, and bagged forests of them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{columns, midpoint, Node, Tree};
use crate::error::{Error, Result};
use crate::sampling::LabeledMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CartParams {
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` examines all of them in index order.
    pub features_per_split: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<F> {
    pub trees: Vec<Tree<F>>,
}

/// Per-tree seed: a fixed odd-multiplier spread of the forest seed.
pub(crate) fn tree_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

impl<F: Scalar> ForestModel<F> {
    pub fn fit(
        train: &LabeledMatrix<F>,
        trees: usize,
        bootstrap: bool,
        params: CartParams,
        seed: u64,
    ) -> Result<Self> {
        let n = train.len();
        let ponzi = train.labels.iter().filter(|l| l.is_ponzi()).count();
        if ponzi == 0 || ponzi == n {
            return Err(Error::InsufficientData(
                "random forest needs both classes in training data".into(),
            ));
        }
        let cols = columns(&train.rows, train.arity());
        let y: Vec<bool> = train.labels.iter().map(|l| l.is_ponzi()).collect();
        let trees = (0..trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, t));
                let sample: Vec<usize> = if bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                fit_cart(&cols, &y, sample, params, &mut rng)
            })
            .collect();
        Ok(ForestModel { trees })
    }

    /// Fraction of trees whose leaf is at least half ponzi.
    pub fn score(&self, row: &[F]) -> F {
        let half = F::lit(0.5);
        let votes = self.trees.iter().filter(|t| t.predict(row) >= half).count();
        F::from_usize_lossy(votes) / F::from_usize_lossy(self.trees.len().max(1))
    }
}

/// `(a^2 + b^2) / n` summed over both children, kept as an exact fraction.
/// Maximizing it minimizes the size-weighted Gini impurity of the children.
#[derive(Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of(al: u64, bl: u64, ar: u64, br: u64) -> Self {
        let (nl, nr) = ((al + bl) as u128, (ar + br) as u128);
        let sl = (al as u128).pow(2) + (bl as u128).pow(2);
        let sr = (ar as u128).pow(2) + (br as u128).pow(2);
        Purity {
            num: sl * nr + sr * nl,
            den: nl * nr,
        }
    }

    fn beats(self, other: Purity) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Best<F> {
    feature: usize,
    threshold: F,
    purity: Purity,
}

/// Best split of `sample` on feature `f`, or `None` when the feature is constant there.
fn best_on_feature<F: Scalar>(
    col: &[F],
    y: &[bool],
    sample: &mut [usize],
    f: usize,
) -> Option<Best<F>> {
    sample.sort_by(|&i, &j| {
        col[i]
            .partial_cmp(&col[j])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let a_tot = sample.iter().filter(|&&i| y[i]).count() as u64;
    let b_tot = sample.len() as u64 - a_tot;
    let (mut al, mut bl) = (0u64, 0u64);
    let mut best: Option<Best<F>> = None;
    for w in 0..sample.len() - 1 {
        if y[sample[w]] {
            al += 1;
        } else {
            bl += 1;
        }
        let (lo, hi) = (col[sample[w]], col[sample[w + 1]]);
        if !(lo < hi) {
            continue;
        }
        let p = Purity::of(al, bl, a_tot - al, b_tot - bl);
        if best.as_ref().is_none_or(|b| p.beats(b.purity)) {
            best = Some(Best {
                feature: f,
                threshold: midpoint(lo, hi),
                purity: p,
            });
        }
    }
    best
}

/// Grows one CART tree on `sample` (row indices, repeats allowed). Leaves hold the
/// ponzi fraction of their rows. Impure nodes split on the best available threshold
/// even when it does not lower impurity; growth stops at purity, at `max_depth`, or
/// when every feature is constant within the node.
pub fn fit_cart<F: Scalar, R: Rng>(
    cols: &[Vec<F>],
    y: &[bool],
    sample: Vec<usize>,
    params: CartParams,
    rng: &mut R,
) -> Tree<F> {
    let d = cols.len();
    let mut nodes = vec![Node::Leaf { value: F::zero() }];
    let mut stack = vec![(0usize, sample, 0usize)];
    let mut order: Vec<usize> = (0..d).collect();
    let mut scratch = Vec::new();
    while let Some((id, rows, depth)) = stack.pop() {
        let ponzi = rows.iter().filter(|&&i| y[i]).count();
        let value = F::from_usize_lossy(ponzi) / F::from_usize_lossy(rows.len());
        nodes[id] = Node::Leaf { value };
        let pure = ponzi == 0 || ponzi == rows.len();
        if pure || params.max_depth.is_some_and(|m| depth >= m) {
            continue;
        }
        let budget = match params.features_per_split {
            Some(k) => {
                order.shuffle(rng);
                k.max(1)
            }
            None => d,
        };
        let mut best: Option<Best<F>> = None;
        let mut examined = 0;
        for &f in &order {
            if examined == budget {
                break;
            }
            let col = &cols[f];
            let first = col[rows[0]];
            if rows.iter().all(|&i| col[i] == first) {
                continue;
            }
            examined += 1;
            scratch.clear();
            scratch.extend_from_slice(&rows);
            if let Some(b) = best_on_feature(col, y, &mut scratch, f) {
                if best.as_ref().is_none_or(|cur| b.purity.beats(cur.purity)) {
                    best = Some(b);
                }
            }
        }
        let Some(best) = best else { continue };
        let col = &cols[best.feature];
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| col[i] <= best.threshold);
        let (l, r) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { value: F::zero() });
        nodes.push(Node::Leaf { value: F::zero() });
        nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        stack.push((r, right, depth + 1));
        stack.push((l, left, depth + 1));
    }
    Tree { nodes }
}
