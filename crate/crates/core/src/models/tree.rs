use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use super::split::{best_split, feature_groups, partition, FeatureGroups};
use super::{BinaryDataset, Prediction};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct ClassCounts {
    pub n: u64,
    pub pos: u64,
}

impl Add for ClassCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        ClassCounts {
            n: self.n + o.n,
            pos: self.pos + o.pos,
        }
    }
}

impl Sub for ClassCounts {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        ClassCounts {
            n: self.n - o.n,
            pos: self.pos - o.pos,
        }
    }
}

pub fn gini(n: u64, pos: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    let q = 1.0 - p;
    1.0 - p * p - q * q
}

fn gini_gain(parent: ClassCounts, left: ClassCounts, right: ClassCounts) -> f64 {
    let n = parent.n as f64;
    gini(parent.n, parent.pos)
        - (left.n as f64 / n) * gini(left.n, left.pos)
        - (right.n as f64 / n) * gini(right.n, right.pos)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        neg: u64,
        pos: u64,
    },
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

/// CART classification tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    nodes: Vec<TreeNode>,
}

impl TreeModel {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaf_for(&self, x: &FeatureVector) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { .. } => return at,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if x.get(*feature) <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Prediction {
        match self.nodes[self.leaf_for(x)] {
            TreeNode::Leaf { neg, pos } => Prediction {
                label: pos > neg,
                score: pos as f64 / (pos + neg).max(1) as f64,
            },
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

pub fn train_tree(d: &BinaryDataset, params: &TreeParams) -> Result<TreeModel> {
    let rows: Vec<usize> = (0..d.len()).collect();
    grow_tree(d, rows, params, &mut |features| features.to_vec())
}

/// Grows a tree over `rows` (duplicates allowed). `select` picks which of the
/// non-constant features, given in ascending order, each split may use.
pub(crate) fn grow_tree(
    d: &BinaryDataset,
    rows: Vec<usize>,
    params: &TreeParams,
    select: &mut dyn FnMut(&[usize]) -> Vec<usize>,
) -> Result<TreeModel> {
    if rows.is_empty() {
        return Err(Error::DegenerateData("cannot grow a tree on zero rows".into()));
    }
    let min_leaf = params.min_leaf.max(1) as u64;
    let stat = |r: usize| ClassCounts {
        n: 1,
        pos: d.y()[r] as u64,
    };

    let mut nodes = vec![TreeNode::Leaf { neg: 0, pos: 0 }];
    let mut stack = vec![(0usize, rows, 0usize)];
    while let Some((slot, rows, depth)) = stack.pop() {
        let total = rows.iter().fold(ClassCounts::default(), |a, &r| a + stat(r));
        let leaf = TreeNode::Leaf {
            neg: total.n - total.pos,
            pos: total.pos,
        };
        let pure = total.pos == 0 || total.pos == total.n;
        if pure || params.max_depth.is_some_and(|m| depth >= m) || total.n < 2 * min_leaf {
            nodes[slot] = leaf;
            continue;
        }

        let groups = feature_groups(d.x(), &rows, stat);
        let available: Vec<usize> = groups.iter().map(|g| g.feature).collect();
        let chosen = select(&available);
        let candidates: Vec<&FeatureGroups<ClassCounts>> =
            groups.iter().filter(|g| chosen.binary_search(&g.feature).is_ok()).collect();
        let split = best_split(&candidates, total, |l, r| {
            (l.n >= min_leaf && r.n >= min_leaf).then(|| gini_gain(total, l, r))
        });

        let Some(split) = split else {
            nodes[slot] = leaf;
            continue;
        };
        let (left_rows, right_rows) = partition(d.x(), &rows, split.feature, split.threshold);
        let left = nodes.len();
        let right = left + 1;
        nodes.push(TreeNode::Leaf { neg: 0, pos: 0 });
        nodes.push(TreeNode::Leaf { neg: 0, pos: 0 });
        nodes[slot] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            gain: split.gain,
            left,
            right,
        };
        stack.push((right, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    Ok(TreeModel { nodes })
}
