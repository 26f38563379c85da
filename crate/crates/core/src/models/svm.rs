use serde::{Deserialize, Serialize};

use super::{require_both_classes, BinaryDataset, LinearModel};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Regularization strength is `1 / (c * n)`.
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, epochs: 200 }
    }
}

fn lambda(params: &SvmParams, n: usize) -> f64 {
    1.0 / (params.c * n as f64)
}

/// `lambda/2 |w|^2 + mean hinge loss`; the bias is not penalized.
pub fn svm_objective(m: &LinearModel, d: &BinaryDataset, lambda: f64) -> f64 {
    let hinge: f64 = d
        .x()
        .iter()
        .zip(d.y())
        .map(|(x, &y)| {
            let s = if y { 1.0 } else { -1.0 };
            (1.0 - s * m.decision(x)).max(0.0)
        })
        .sum();
    let norm: f64 = m.weights.iter().map(|w| w * w).sum();
    lambda / 2.0 * norm + hinge / d.len() as f64
}

pub fn train_linear_svm(d: &BinaryDataset, params: &SvmParams) -> Result<LinearModel> {
    train_linear_svm_traced(d, params).map(|(m, _)| m)
}

/// Full-batch subgradient descent with step `1/(lambda t)` on the weights and
/// `1/sqrt(t)` on the bias. Returns the running average of the iterates and
/// the objective of that average after every epoch.
pub fn train_linear_svm_traced(d: &BinaryDataset, params: &SvmParams) -> Result<(LinearModel, Vec<f64>)> {
    require_both_classes(d)?;
    let n = d.len() as f64;
    let lam = lambda(params, d.len());
    let mut w = vec![0.0; d.dim()];
    let mut b = 0.0;
    let mut avg = LinearModel {
        weights: vec![0.0; d.dim()],
        bias: 0.0,
    };
    let mut trace = Vec::with_capacity(params.epochs);

    for t in 1..=params.epochs {
        let tf = t as f64;
        let current = LinearModel { weights: w.clone(), bias: b };
        let mut push = vec![0.0; d.dim()];
        let mut push_b = 0.0;
        for (x, &y) in d.x().iter().zip(d.y()) {
            let s = if y { 1.0 } else { -1.0 };
            if s * current.decision(x) < 1.0 {
                for (i, v) in x.entries() {
                    push[*i] += s * v;
                }
                push_b += s;
            }
        }
        let eta = 1.0 / (lam * tf);
        for (wi, pi) in w.iter_mut().zip(&push) {
            *wi = (1.0 - 1.0 / tf) * *wi + eta * pi / n;
        }
        b += push_b / n / tf.sqrt();

        for (a, wi) in avg.weights.iter_mut().zip(&w) {
            *a += (wi - *a) / tf;
        }
        avg.bias += (b - avg.bias) / tf;
        trace.push(svm_objective(&avg, d, lam));
    }
    Ok((avg, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::models::Dataset;

    fn square() -> BinaryDataset {
        Dataset::from_dense(
            &[vec![2.0, 2.0], vec![1.5, 2.5], vec![-2.0, -1.0], vec![-1.0, -2.5]],
            vec![true, true, false, false],
        )
        .unwrap()
    }

    #[test]
    fn separable_square() {
        let d = square();
        let m = train_linear_svm(&d, &SvmParams::default()).unwrap();
        for (x, y) in d.x().iter().zip(d.y()) {
            assert_eq!(m.decision(x) > 0.0, *y);
        }
    }

    #[test]
    fn averaged_objective_settles() {
        let (_, trace) = train_linear_svm_traced(&square(), &SvmParams::default()).unwrap();
        for w in trace.chunks(10).collect::<Vec<_>>().windows(2) {
            assert!(w[1].last().unwrap() <= &(w[0].last().unwrap() + 1e-6));
        }
    }

    #[test]
    fn single_class_rejected() {
        let d = Dataset::from_dense(&[vec![1.0], vec![2.0]], vec![false, false]).unwrap();
        assert!(matches!(train_linear_svm(&d, &SvmParams::default()), Err(Error::DegenerateData(_))));
    }
}
