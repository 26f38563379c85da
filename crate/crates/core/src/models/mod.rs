//! Binary classifiers and binary-relevance multi-label classification.
//!
//! Every family trains deterministically from `(data, params, seed)`.
//! Families that need randomness derive per-task streams as `seed + index`.

mod forest;
mod gbt;
mod knn;
mod logreg;
mod split;
mod svm;
mod tree;

use serde::{Deserialize, Serialize};

use crate::annotate::LabelSet;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub use forest::{train_forest, ForestModel, ForestParams, MaxFeatures};
pub use gbt::{train_gbt, train_gbt_traced, GbtModel, GbtParams, RegressionNode};
pub use knn::{train_knn, KnnModel, KnnParams};
pub use logreg::{logreg_gradient, logreg_objective, train_logreg, train_logreg_traced, LinearModel, LogRegParams};
pub use svm::{svm_objective, train_linear_svm, train_linear_svm_traced, SvmParams};
pub use tree::{gini, train_tree, TreeModel, TreeNode, TreeParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Rows of features with one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<Y> {
    dim: usize,
    x: Vec<FeatureVector>,
    y: Vec<Y>,
}

pub type BinaryDataset = Dataset<bool>;
/// Targets are (Decision, Rationale, SupportingFact) indicators.
pub type MultiLabelDataset = Dataset<[bool; 3]>;

impl<Y: Clone> Dataset<Y> {
    pub fn new(dim: usize, x: Vec<FeatureVector>, y: Vec<Y>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Shape {
                expected: x.len(),
                got: y.len(),
            });
        }
        if let Some(bad) = x.iter().find(|v| v.dim() != dim) {
            return Err(Error::Shape {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Dataset { dim, x, y })
    }

    pub fn from_dense(rows: &[Vec<f64>], y: Vec<Y>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        Dataset::new(dim, rows.iter().map(|r| FeatureVector::from_dense(r)).collect(), y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x(&self) -> &[FeatureVector] {
        &self.x
    }

    pub fn y(&self) -> &[Y] {
        &self.y
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Dataset {
            dim: self.dim,
            x: rows.iter().map(|&i| self.x[i].clone()).collect(),
            y: rows.iter().map(|&i| self.y[i].clone()).collect(),
        }
    }

    pub fn map_targets<Z>(&self, f: impl Fn(&Y) -> Z) -> Dataset<Z> {
        Dataset {
            dim: self.dim,
            x: self.x.clone(),
            y: self.y.iter().map(f).collect(),
        }
    }
}

impl MultiLabelDataset {
    pub fn column(&self, label: usize) -> BinaryDataset {
        self.map_targets(|row| row[label])
    }
}

pub(crate) fn require_both_classes(d: &BinaryDataset) -> Result<()> {
    let pos = d.y().iter().filter(|&&y| y).count();
    if pos == 0 || pos == d.len() {
        return Err(Error::DegenerateData("training data contains a single class".into()));
    }
    Ok(())
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: bool,
    pub score: f64,
}

/// Family and hyper-parameters of a binary learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Logreg(#[serde(default)] LogRegParams),
    Tree(#[serde(default)] TreeParams),
    LinearSvm(#[serde(default)] SvmParams),
    Knn(#[serde(default)] KnnParams),
    Forest(#[serde(default)] ForestParams),
    Gbt(#[serde(default)] GbtParams),
}

impl ModelSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            ModelSpec::Logreg(_) => "logreg",
            ModelSpec::Tree(_) => "tree",
            ModelSpec::LinearSvm(_) => "linear_svm",
            ModelSpec::Knn(_) => "knn",
            ModelSpec::Forest(_) => "forest",
            ModelSpec::Gbt(_) => "gbt",
        }
    }

    /// Default hyper-parameters for a family name.
    pub fn from_family(name: &str) -> Result<Self> {
        Ok(match name {
            "logreg" => ModelSpec::Logreg(Default::default()),
            "tree" => ModelSpec::Tree(Default::default()),
            "linear_svm" | "svm" => ModelSpec::LinearSvm(Default::default()),
            "knn" => ModelSpec::Knn(Default::default()),
            "forest" => ModelSpec::Forest(Default::default()),
            "gbt" => ModelSpec::Gbt(Default::default()),
            other => return Err(Error::Parameter(format!("unknown model family `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelKind {
    Logreg(LinearModel),
    Tree(TreeModel),
    LinearSvm(LinearModel),
    Knn(KnnModel),
    Forest(ForestModel),
    Gbt(GbtModel),
    Constant { label: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel {
    pub dim: usize,
    pub kind: ModelKind,
}

impl BinaryModel {
    pub fn constant(dim: usize, label: bool) -> Self {
        BinaryModel {
            dim,
            kind: ModelKind::Constant { label },
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        if x.dim() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(match &self.kind {
            ModelKind::Logreg(m) => {
                let score = sigmoid(m.decision(x));
                Prediction {
                    label: score >= 0.5,
                    score,
                }
            }
            ModelKind::LinearSvm(m) => {
                let f = m.decision(x);
                Prediction {
                    label: f > 0.0,
                    score: sigmoid(f),
                }
            }
            ModelKind::Tree(m) => m.predict(x),
            ModelKind::Knn(m) => m.predict(x),
            ModelKind::Forest(m) => m.predict(x),
            ModelKind::Gbt(m) => {
                let score = m.score(x);
                Prediction {
                    label: score >= 0.5,
                    score,
                }
            }
            ModelKind::Constant { label } => Prediction {
                label: *label,
                score: if *label { 1.0 } else { 0.0 },
            },
        })
    }
}

pub fn predict_binary(m: &BinaryModel, x: &FeatureVector) -> Result<Prediction> {
    m.predict(x)
}

pub fn train_binary(spec: &ModelSpec, d: &BinaryDataset, seed: u64) -> Result<BinaryModel> {
    let kind = match spec {
        ModelSpec::Logreg(p) => ModelKind::Logreg(train_logreg(d, p)?),
        ModelSpec::Tree(p) => ModelKind::Tree(train_tree(d, p)?),
        ModelSpec::LinearSvm(p) => ModelKind::LinearSvm(train_linear_svm(d, p)?),
        ModelSpec::Knn(p) => ModelKind::Knn(train_knn(d, p)?),
        ModelSpec::Forest(p) => ModelKind::Forest(train_forest(d, p, seed)?),
        ModelSpec::Gbt(p) => ModelKind::Gbt(train_gbt(d, p)?),
    };
    Ok(BinaryModel { dim: d.dim(), kind })
}

/// One binary model per label column, in (Decision, Rationale, SupportingFact) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelModel {
    pub models: [BinaryModel; 3],
}

impl MultiLabelModel {
    pub fn dim(&self) -> usize {
        self.models[0].dim
    }

    pub fn predict_row(&self, x: &FeatureVector) -> Result<[bool; 3]> {
        let mut row = [false; 3];
        for (slot, m) in row.iter_mut().zip(&self.models) {
            *slot = m.predict(x)?.label;
        }
        Ok(row)
    }
}

/// Trains one model per label column. A constant column gets a constant predictor.
pub fn train_multilabel(spec: &ModelSpec, d: &MultiLabelDataset, seed: u64) -> Result<MultiLabelModel> {
    let mut models = Vec::with_capacity(3);
    for j in 0..3 {
        let column = d.column(j);
        let pos = column.y().iter().filter(|&&y| y).count();
        let model = if column.is_empty() {
            return Err(Error::DegenerateData("training data is empty".into()));
        } else if pos == 0 || pos == column.len() {
            BinaryModel::constant(d.dim(), pos > 0)
        } else {
            train_binary(spec, &column, seed.wrapping_add(j as u64))?
        };
        models.push(model);
    }
    Ok(MultiLabelModel {
        models: models.try_into().expect("three label columns"),
    })
}

pub fn predict_multilabel(m: &MultiLabelModel, x: &FeatureVector) -> Result<LabelSet> {
    Ok(LabelSet::from_row(m.predict_row(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn planted(n: usize) -> MultiLabelDataset {
        // columns 0..3 are the label keywords, 3..6 noise
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let labels = [i % 2 == 0, i % 3 == 0, i % 5 < 2];
            let mut r = vec![0.0; 6];
            for j in 0..3 {
                if labels[j] {
                    r[j] = 1.0;
                }
            }
            r[3 + i % 3] = 0.5;
            rows.push(r);
            y.push(labels);
        }
        Dataset::from_dense(&rows, y).unwrap()
    }

    #[test]
    fn dataset_validates_shape() {
        assert!(Dataset::new(2, vec![FeatureVector::zeros(2)], vec![true, false]).is_err());
        assert!(Dataset::new(3, vec![FeatureVector::zeros(2)], vec![true]).is_err());
    }

    #[test]
    fn all_ones_targets_predict_everything() {
        let d = planted(12).map_targets(|_| [true; 3]);
        let m = train_multilabel(&ModelSpec::from_family("logreg").unwrap(), &d, 1).unwrap();
        for x in d.x() {
            assert_eq!(predict_multilabel(&m, x).unwrap(), LabelSet::from_row([true; 3]));
        }
    }

    #[test]
    fn planted_keywords_are_recovered() {
        let d = planted(60);
        for family in ["tree", "gbt", "logreg", "knn", "forest", "linear_svm"] {
            let spec = ModelSpec::from_family(family).unwrap();
            let m = train_multilabel(&spec, &d, 7).unwrap();
            let exact = d
                .x()
                .iter()
                .zip(d.y())
                .filter(|(x, y)| m.predict_row(x).unwrap() == **y)
                .count();
            assert!(exact as f64 / d.len() as f64 >= 0.9, "{family}: {exact}");
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let d = planted(10).column(0);
        let m = train_binary(&ModelSpec::from_family("tree").unwrap(), &d, 0).unwrap();
        assert!(matches!(
            m.predict(&FeatureVector::zeros(3)),
            Err(Error::Shape { expected: 6, got: 3 })
        ));
    }

    #[test]
    fn model_json_round_trip() {
        let d = planted(30);
        for family in ["tree", "gbt", "logreg", "knn", "forest", "linear_svm"] {
            let m = train_multilabel(&ModelSpec::from_family(family).unwrap(), &d, 3).unwrap();
            let json = serde_json::to_string(&m).unwrap();
            assert!(json.contains(&format!("\"family\":\"{family}\"")));
            let back: MultiLabelModel = serde_json::from_str(&json).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn spec_parses_with_defaults() {
        let s: ModelSpec = serde_json::from_str(r#"{"family":"gbt","n_rounds":5}"#).unwrap();
        match s {
            ModelSpec::Gbt(p) => {
                assert_eq!(p.n_rounds, 5);
                assert_eq!(p.max_depth, 6);
            }
            _ => panic!(),
        }
        assert!(ModelSpec::from_family("bert").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn multilabel_is_binary_relevance(seed in 0u64..1000, family in 0usize..6) {
            let family = ["tree", "gbt", "logreg", "knn", "forest", "linear_svm"][family];
            let spec = ModelSpec::from_family(family).unwrap();
            let d = planted(24);
            let m = train_multilabel(&spec, &d, seed).unwrap();
            for j in 0..3 {
                let single = train_binary(&spec, &d.column(j), seed.wrapping_add(j as u64)).unwrap();
                for x in d.x() {
                    prop_assert_eq!(single.predict(x).unwrap().label, m.predict_row(x).unwrap()[j]);
                }
            }
            for x in d.x() {
                let set = predict_multilabel(&m, x).unwrap();
                let expect: Vec<bool> = m.models.iter().map(|b| b.predict(x).unwrap().label).collect();
                prop_assert_eq!(set.to_row().to_vec(), expect);
            }
        }
    }
}
