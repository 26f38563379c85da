use serde::{Deserialize, Serialize};

use super::{require_both_classes, sigmoid, BinaryDataset};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegParams {
    /// Inverse of the usual `C`: the penalty is `l2 / (2n) * |w|^2`.
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            l2: 1.0,
            epochs: 200,
            lr: 0.1,
        }
    }
}

/// `w . x + b` decision function, shared by logistic regression and the linear SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &FeatureVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }
}

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log-loss plus the L2 penalty.
pub fn logreg_objective(weights: &[f64], bias: f64, d: &BinaryDataset, l2: f64) -> f64 {
    let n = d.len() as f64;
    let loss: f64 = d
        .x()
        .iter()
        .zip(d.y())
        .map(|(x, &y)| {
            let z = x.dot_dense(weights) + bias;
            log1p_exp(z) - if y { z } else { 0.0 }
        })
        .sum();
    let penalty: f64 = weights.iter().map(|w| w * w).sum();
    loss / n + l2 / (2.0 * n) * penalty
}

/// Gradient of [`logreg_objective`] with respect to (weights, bias).
pub fn logreg_gradient(weights: &[f64], bias: f64, d: &BinaryDataset, l2: f64) -> (Vec<f64>, f64) {
    let n = d.len() as f64;
    let mut gw: Vec<f64> = weights.iter().map(|w| l2 / n * w).collect();
    let mut gb = 0.0;
    for (x, &y) in d.x().iter().zip(d.y()) {
        let r = (sigmoid(x.dot_dense(weights) + bias) - y as u8 as f64) / n;
        for (i, v) in x.entries() {
            gw[*i] += r * v;
        }
        gb += r;
    }
    (gw, gb)
}

pub fn train_logreg(d: &BinaryDataset, params: &LogRegParams) -> Result<LinearModel> {
    train_logreg_traced(d, params).map(|(m, _)| m)
}

/// Also returns the objective before training and after every epoch.
pub fn train_logreg_traced(d: &BinaryDataset, params: &LogRegParams) -> Result<(LinearModel, Vec<f64>)> {
    if d.len() < 2 {
        return Err(Error::DegenerateData("logistic regression needs at least two rows".into()));
    }
    require_both_classes(d)?;
    let mut w = vec![0.0; d.dim()];
    let mut b = 0.0;
    let mut trace = vec![logreg_objective(&w, b, d, params.l2)];
    for _ in 0..params.epochs {
        let (gw, gb) = logreg_gradient(&w, b, d, params.l2);
        for (wi, gi) in w.iter_mut().zip(&gw) {
            *wi -= params.lr * gi;
        }
        b -= params.lr * gb;
        trace.push(logreg_objective(&w, b, d, params.l2));
    }
    Ok((LinearModel { weights: w, bias: b }, trace))
}
