//! Binary decision trees stored as flat node arrays (root at index 0).

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node<F> {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
    Leaf {
        value: F,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<F> {
    pub nodes: Vec<Node<F>>,
}

impl<F: Scalar> Tree<F> {
    pub fn leaf(value: F) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, row: &[F]) -> F {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn split_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }

    /// Adds one to `counts[f]` for every split on feature `f`.
    pub fn count_splits(&self, counts: &mut [u64]) {
        for n in &self.nodes {
            if let Node::Split { feature, .. } = n {
                counts[*feature] += 1;
            }
        }
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk<F>(nodes: &[Node<F>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Split threshold between consecutive distinct sorted values `a < b`.
/// Falls back to `a` when rounding pushes the midpoint onto `b`.
#[inline]
pub(crate) fn midpoint<F: Scalar>(a: F, b: F) -> F {
    let m = a + (b - a) * F::lit(0.5);
    if m >= b || m < a {
        a
    } else {
        m
    }
}

/// Column-major copy of a row-major matrix.
pub(crate) fn columns<F: Scalar>(rows: &[Vec<F>], arity: usize) -> Vec<Vec<F>> {
    (0..arity)
        .map(|f| rows.iter().map(|r| r[f]).collect())
        .collect()
}
