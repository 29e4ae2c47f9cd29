//! Logistic-loss gradient boosting over regression trees, grown level-wise or leaf-wise.
//!
//! Split search is exact: every feature keeps its rows presorted, and each tree node
//! owns the same contiguous segment in all of those orders. Splitting a node stably
//! partitions its segment in every order, so children stay sorted.

use serde::{Deserialize, Serialize};

use super::tree::{columns, midpoint, Node, Tree};
use super::Growth;
use crate::error::{Error, Result};
use crate::sampling::LabeledMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbdtParams<F> {
    pub rounds: usize,
    pub learning_rate: F,
    pub lambda: F,
    pub growth: Growth,
    pub max_depth: Option<usize>,
    pub max_leaves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel<F> {
    /// Log-odds of the training ponzi rate.
    pub base: F,
    /// Leaf values already include the learning rate.
    pub trees: Vec<Tree<F>>,
    /// Mean logistic loss on the training rows before round 1 and after each round.
    pub train_loss: Vec<F>,
}

pub fn sigmoid<F: Scalar>(z: F) -> F {
    F::one() / (F::one() + (-z).exp())
}

/// `-y ln p - (1 - y) ln(1 - p)` with `p = sigmoid(z)`, computed stably.
fn logistic_loss<F: Scalar>(z: F, y: bool) -> F {
    // ln(1 + e^{-m}) where m is the signed margin.
    let m = if y { z } else { -z };
    if m > F::zero() {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

fn mean_loss<F: Scalar>(z: &[F], y: &[bool]) -> F {
    let s: F = z.iter().zip(y).map(|(&z, &y)| logistic_loss(z, y)).sum();
    s / F::from_usize_lossy(z.len())
}

#[derive(Clone, Copy)]
struct Candidate<F> {
    gain: F,
    feature: usize,
    /// Rows going left: the first `n_left` of the node's segment in `feature`'s order.
    n_left: usize,
    threshold: F,
    gl: F,
    hl: F,
}

#[derive(Clone, Copy)]
struct Segment<F> {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
    g: F,
    h: F,
}

/// Working state for growing one tree.
struct Grower<'a, F> {
    cols: &'a [Vec<F>],
    /// Features that vary somewhere in the training data.
    active: &'a [usize],
    n: usize,
    /// `active.len()` row orders of length `n`, back to back.
    order: Vec<u32>,
    /// Rows in arbitrary order, partitioned alongside the feature orders.
    rows: Vec<u32>,
    g: &'a [F],
    h: &'a [F],
    lambda: F,
    goes_left: Vec<bool>,
    tmp: Vec<u32>,
}

impl<F: Scalar> Grower<'_, F> {
    fn score(&self, g: F, h: F) -> F {
        g * g / (h + self.lambda)
    }

    fn best_split(&self, s: &Segment<F>) -> Option<Candidate<F>> {
        if s.end - s.start < 2 {
            return None;
        }
        let parent = self.score(s.g, s.h);
        let half = F::lit(0.5);
        let mut best: Option<Candidate<F>> = None;
        for (a, &f) in self.active.iter().enumerate() {
            let col = &self.cols[f];
            let seg = &self.order[a * self.n + s.start..a * self.n + s.end];
            let (mut gl, mut hl) = (F::zero(), F::zero());
            for w in 0..seg.len() - 1 {
                let r = seg[w] as usize;
                gl += self.g[r];
                hl += self.h[r];
                let (lo, hi) = (col[r], col[seg[w + 1] as usize]);
                if !(lo < hi) {
                    continue;
                }
                let gain = half * (self.score(gl, hl) + self.score(s.g - gl, s.h - hl) - parent);
                if gain > F::zero() && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate {
                        gain,
                        feature: a,
                        n_left: w + 1,
                        threshold: midpoint(lo, hi),
                        gl,
                        hl,
                    });
                }
            }
        }
        best
    }

    fn partition(&mut self, s: &Segment<F>, c: &Candidate<F>) {
        let base = c.feature * self.n;
        for &r in &self.order[base + s.start..base + s.start + c.n_left] {
            self.goes_left[r as usize] = true;
        }
        let goes_left = &self.goes_left;
        let tmp = &mut self.tmp;
        let mut split = |seg: &mut [u32]| {
            tmp.clear();
            tmp.extend(seg.iter().filter(|&&r| goes_left[r as usize]));
            tmp.extend(seg.iter().filter(|&&r| !goes_left[r as usize]));
            seg.copy_from_slice(tmp);
        };
        for a in 0..self.active.len() {
            split(&mut self.order[a * self.n + s.start..a * self.n + s.end]);
        }
        split(&mut self.rows[s.start..s.end]);
        for &r in &self.rows[s.start..s.start + c.n_left] {
            self.goes_left[r as usize] = false;
        }
    }
}

impl<F: Scalar> GbdtModel<F> {
    pub fn fit(train: &LabeledMatrix<F>, p: GbdtParams<F>) -> Result<Self> {
        let n = train.len();
        let y: Vec<bool> = train.labels.iter().map(|l| l.is_ponzi()).collect();
        let pos = y.iter().filter(|&&v| v).count();
        if pos == 0 || pos == n {
            return Err(Error::InsufficientData(
                "gradient boosting needs both classes in training data".into(),
            ));
        }
        let rate = F::from_usize_lossy(pos) / F::from_usize_lossy(n);
        let base = (rate / (F::one() - rate)).ln();
        let cols = columns(&train.rows, train.arity());
        let active: Vec<usize> = (0..cols.len())
            .filter(|&f| cols[f].iter().any(|&v| v != cols[f][0]))
            .collect();
        let mut sorted = Vec::with_capacity(active.len() * n);
        for &f in &active {
            let col = &cols[f];
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&i, &j| {
                col[i as usize]
                    .partial_cmp(&col[j as usize])
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            sorted.extend(idx);
        }

        let mut z = vec![base; n];
        let mut train_loss = vec![mean_loss(&z, &y)];
        let mut g = vec![F::zero(); n];
        let mut h = vec![F::zero(); n];
        let mut trees = Vec::with_capacity(p.rounds);
        for _ in 0..p.rounds {
            for i in 0..n {
                let prob = sigmoid(z[i]);
                g[i] = prob - if y[i] { F::one() } else { F::zero() };
                h[i] = prob * (F::one() - prob);
            }
            let mut grower = Grower {
                cols: &cols,
                active: &active,
                n,
                order: sorted.clone(),
                rows: (0..n as u32).collect(),
                g: &g,
                h: &h,
                lambda: p.lambda,
                goes_left: vec![false; n],
                tmp: Vec::with_capacity(n),
            };
            let (tree, leaves) = grow(&mut grower, &p);
            for s in &leaves {
                let Node::Leaf { value } = tree.nodes[s.node] else {
                    unreachable!("segment maps to a leaf")
                };
                for &r in &grower.rows[s.start..s.end] {
                    z[r as usize] += value;
                }
            }
            trees.push(tree);
            train_loss.push(mean_loss(&z, &y));
        }
        Ok(GbdtModel {
            base,
            trees,
            train_loss,
        })
    }

    /// Raw additive score (log-odds).
    pub fn margin(&self, row: &[F]) -> F {
        self.trees
            .iter()
            .fold(self.base, |acc, t| acc + t.predict(row))
    }

    pub fn score(&self, row: &[F]) -> F {
        sigmoid(self.margin(row))
    }
}

/// Grows one regression tree; returns it with the row segment of every leaf.
fn grow<F: Scalar>(gr: &mut Grower<'_, F>, p: &GbdtParams<F>) -> (Tree<F>, Vec<Segment<F>>) {
    let (g0, h0) = (gr.g.iter().copied().sum(), gr.h.iter().copied().sum());
    let root = Segment {
        node: 0,
        start: 0,
        end: gr.n,
        depth: 0,
        g: g0,
        h: h0,
    };
    let mut nodes = vec![Node::Leaf { value: F::zero() }];
    let mut leaves = Vec::new();
    let depth_ok = |s: &Segment<F>| p.max_depth.is_none_or(|m| s.depth < m);

    let split = |gr: &mut Grower<'_, F>,
                 nodes: &mut Vec<Node<F>>,
                 s: &Segment<F>,
                 c: &Candidate<F>|
     -> (Segment<F>, Segment<F>) {
        gr.partition(s, c);
        let (l, r) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { value: F::zero() });
        nodes.push(Node::Leaf { value: F::zero() });
        nodes[s.node] = Node::Split {
            feature: gr.active[c.feature],
            threshold: c.threshold,
            left: l,
            right: r,
        };
        let mid = s.start + c.n_left;
        (
            Segment {
                node: l,
                start: s.start,
                end: mid,
                depth: s.depth + 1,
                g: c.gl,
                h: c.hl,
            },
            Segment {
                node: r,
                start: mid,
                end: s.end,
                depth: s.depth + 1,
                g: s.g - c.gl,
                h: s.h - c.hl,
            },
        )
    };

    match p.growth {
        Growth::LevelWise => {
            let mut frontier = vec![root];
            while !frontier.is_empty() {
                let mut next = Vec::new();
                for s in frontier {
                    match depth_ok(&s).then(|| gr.best_split(&s)).flatten() {
                        Some(c) => {
                            let (l, r) = split(gr, &mut nodes, &s, &c);
                            next.push(l);
                            next.push(r);
                        }
                        None => leaves.push(s),
                    }
                }
                frontier = next;
            }
        }
        Growth::LeafWise => {
            let best = |gr: &Grower<'_, F>, s: &Segment<F>| {
                depth_ok(s).then(|| gr.best_split(s)).flatten()
            };
            let mut open = vec![(root, best(gr, &root))];
            let mut count = 1;
            while count < p.max_leaves.max(1) {
                let pick = open
                    .iter()
                    .enumerate()
                    .filter_map(|(i, (_, c))| c.as_ref().map(|c| (i, c.gain)))
                    .fold(None, |acc: Option<(usize, F)>, (i, gain)| match acc {
                        Some((_, g)) if g >= gain => acc,
                        _ => Some((i, gain)),
                    });
                let Some((i, _)) = pick else { break };
                let (s, c) = open.remove(i);
                let c = c.expect("picked candidate exists");
                let (l, r) = split(gr, &mut nodes, &s, &c);
                let (cl, cr) = (best(gr, &l), best(gr, &r));
                open.push((l, cl));
                open.push((r, cr));
                count += 1;
            }
            leaves.extend(open.into_iter().map(|(s, _)| s));
        }
    }
    for s in &leaves {
        nodes[s.node] = Node::Leaf {
            value: -p.learning_rate * s.g / (s.h + p.lambda),
        };
    }
    (Tree { nodes }, leaves)
}
