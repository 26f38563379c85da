use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, TreeModel, TreeParams};
use super::{BinaryDataset, Prediction};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, dim: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((dim as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => dim.max(1),
            MaxFeatures::Count(c) => c.clamp(1, dim.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
}

impl ForestModel {
    pub fn predict(&self, x: &FeatureVector) -> Prediction {
        let votes = self.trees.iter().filter(|t| t.predict(x).label).count();
        Prediction {
            label: 2 * votes > self.trees.len(),
            score: votes as f64 / self.trees.len().max(1) as f64,
        }
    }
}

/// Tree `i` draws its bootstrap sample and feature subsets from `seed + i`.
pub fn train_forest(d: &BinaryDataset, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if d.len() < 2 {
        return Err(Error::DegenerateData("a forest needs at least two rows".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::Parameter("n_trees must be positive".into()));
    }
    let per_split = params.max_features.resolve(d.dim());
    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let rows: Vec<usize> = if params.bootstrap {
            (0..d.len()).map(|_| rng.gen_range(0..d.len())).collect()
        } else {
            (0..d.len()).collect()
        };
        let mut select = |features: &[usize]| -> Vec<usize> {
            if features.len() <= per_split {
                return features.to_vec();
            }
            let mut picked: Vec<usize> = sample(&mut rng, features.len(), per_split)
                .into_iter()
                .map(|i| features[i])
                .collect();
            picked.sort_unstable();
            picked
        };
        trees.push(grow_tree(d, rows, &params.tree, &mut select)?);
    }
    Ok(ForestModel { trees })
}
