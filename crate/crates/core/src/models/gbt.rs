use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use super::split::{best_split, feature_groups, partition, FeatureGroups};
use super::{require_both_classes, sigmoid, BinaryDataset};
use crate::error::Result;
use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub lr: f64,
    pub max_depth: usize,
    pub lambda: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 100,
            lr: 0.3,
            max_depth: 6,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct GradStat {
    g: f64,
    h: f64,
}

impl Add for GradStat {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        GradStat {
            g: self.g + o.g,
            h: self.h + o.h,
        }
    }
}

impl Sub for GradStat {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        GradStat {
            g: self.g - o.g,
            h: self.h - o.h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum RegressionNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

fn eval_tree(nodes: &[RegressionNode], x: &FeatureVector) -> f64 {
    let mut at = 0;
    loop {
        match &nodes[at] {
            RegressionNode::Leaf { value } => return *value,
            RegressionNode::Split {
                feature,
                threshold,
                left,
                right,
            } => at = if x.get(*feature) <= *threshold { *left } else { *right },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    /// Positive rate of the training data.
    pub prior: f64,
    pub base_margin: f64,
    pub lr: f64,
    pub trees: Vec<Vec<RegressionNode>>,
}

impl GbtModel {
    pub fn margin(&self, x: &FeatureVector) -> f64 {
        self.base_margin + self.lr * self.trees.iter().map(|t| eval_tree(t, x)).sum::<f64>()
    }

    pub fn score(&self, x: &FeatureVector) -> f64 {
        if self.trees.is_empty() {
            self.prior
        } else {
            sigmoid(self.margin(x))
        }
    }
}

fn leaf_weight(s: GradStat, lambda: f64) -> f64 {
    -s.g / (s.h + lambda)
}

fn structure_score(s: GradStat, lambda: f64) -> f64 {
    s.g * s.g / (s.h + lambda)
}

fn fit_round(
    d: &BinaryDataset,
    grads: &[GradStat],
    params: &GbtParams,
) -> Vec<RegressionNode> {
    let stat = |r: usize| grads[r];
    let mut nodes = vec![RegressionNode::Leaf { value: 0.0 }];
    let mut stack = vec![(0usize, (0..d.len()).collect::<Vec<_>>(), 0usize)];
    while let Some((slot, rows, depth)) = stack.pop() {
        let total = rows.iter().fold(GradStat::default(), |a, &r| a + stat(r));
        let leaf = RegressionNode::Leaf {
            value: leaf_weight(total, params.lambda),
        };
        if depth >= params.max_depth || rows.len() < 2 {
            nodes[slot] = leaf;
            continue;
        }
        let groups = feature_groups(d.x(), &rows, stat);
        let candidates: Vec<&FeatureGroups<GradStat>> = groups.iter().collect();
        let parent = structure_score(total, params.lambda);
        let split = best_split(&candidates, total, |l, r| {
            let gain = 0.5
                * (structure_score(l, params.lambda) + structure_score(r, params.lambda) - parent);
            (gain > 0.0).then_some(gain)
        });
        let Some(split) = split else {
            nodes[slot] = leaf;
            continue;
        };
        let (left_rows, right_rows) = partition(d.x(), &rows, split.feature, split.threshold);
        if left_rows.is_empty() || right_rows.is_empty() {
            nodes[slot] = leaf;
            continue;
        }
        let left = nodes.len();
        nodes.push(RegressionNode::Leaf { value: 0.0 });
        nodes.push(RegressionNode::Leaf { value: 0.0 });
        nodes[slot] = RegressionNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right: left + 1,
        };
        stack.push((left + 1, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    nodes
}

pub fn log_loss(y: &[bool], p: &[f64]) -> f64 {
    let eps = 1e-15;
    y.iter()
        .zip(p)
        .map(|(&y, &p)| {
            let p = p.clamp(eps, 1.0 - eps);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / y.len() as f64
}

pub fn train_gbt(d: &BinaryDataset, params: &GbtParams) -> Result<GbtModel> {
    train_gbt_traced(d, params).map(|(m, _)| m)
}

/// Also returns the training log-loss before the first round and after each round.
pub fn train_gbt_traced(d: &BinaryDataset, params: &GbtParams) -> Result<(GbtModel, Vec<f64>)> {
    require_both_classes(d)?;
    let n = d.len();
    let prior = d.y().iter().filter(|&&y| y).count() as f64 / n as f64;
    let base_margin = (prior / (1.0 - prior)).ln();

    let mut model = GbtModel {
        prior,
        base_margin,
        lr: params.lr,
        trees: Vec::with_capacity(params.n_rounds),
    };
    let mut margins = vec![base_margin; n];
    let mut probs = vec![prior; n];
    let mut trace = vec![log_loss(d.y(), &probs)];

    for _ in 0..params.n_rounds {
        let grads: Vec<GradStat> = probs
            .iter()
            .zip(d.y())
            .map(|(&p, &y)| GradStat {
                g: p - y as u8 as f64,
                h: p * (1.0 - p),
            })
            .collect();
        let tree = fit_round(d, &grads, params);
        for (i, x) in d.x().iter().enumerate() {
            margins[i] += params.lr * eval_tree(&tree, x);
            probs[i] = sigmoid(margins[i]);
        }
        model.trees.push(tree);
        trace.push(log_loss(d.y(), &probs));
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::models::Dataset;

    fn threshold_set(n: usize) -> BinaryDataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        let y = (0..n).map(|i| i * 10 >= n * 6).collect();
        Dataset::from_dense(&rows, y).unwrap()
    }

    #[test]
    fn zero_rounds_predict_prior() {
        let d = threshold_set(50);
        let m = train_gbt(&d, &GbtParams { n_rounds: 0, ..Default::default() }).unwrap();
        for x in d.x() {
            assert_eq!(m.score(x), 20.0 / 50.0);
        }
    }

    #[test]
    fn threshold_concept_is_learned() {
        let d = threshold_set(50);
        let m = train_gbt(&d, &GbtParams { n_rounds: 20, ..Default::default() }).unwrap();
        for (x, y) in d.x().iter().zip(d.y()) {
            assert_eq!(m.score(x) >= 0.5, *y);
        }
    }

    #[test]
    fn loss_never_increases() {
        let rows: Vec<Vec<f64>> = (0..80).map(|i| vec![((i * 17) % 13) as f64, ((i * 3) % 7) as f64]).collect();
        let y: Vec<bool> = (0..80).map(|i| (i * 17) % 13 > 6 || (i % 9 == 0)).collect();
        let d = Dataset::from_dense(&rows, y).unwrap();
        let (_, trace) = train_gbt_traced(&d, &GbtParams { n_rounds: 30, ..Default::default() }).unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0]), "{trace:?}");
    }

    #[test]
    fn single_class_rejected() {
        let d = Dataset::from_dense(&[vec![1.0], vec![2.0]], vec![true, true]).unwrap();
        assert!(matches!(train_gbt(&d, &GbtParams::default()), Err(Error::DegenerateData(_))));
    }
}
