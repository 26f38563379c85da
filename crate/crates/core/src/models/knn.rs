use serde::{Deserialize, Serialize};

use super::{BinaryDataset, Prediction};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub rows: Vec<FeatureVector>,
    pub labels: Vec<bool>,
}

impl KnnModel {
    /// Training-row indices of the `k` nearest neighbours, nearest first.
    pub fn neighbours(&self, x: &FeatureVector) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.squared_distance(x), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        dist.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    pub fn predict(&self, x: &FeatureVector) -> Prediction {
        let pos = self.neighbours(x).iter().filter(|&&i| self.labels[i]).count();
        Prediction {
            label: 2 * pos > self.k,
            score: pos as f64 / self.k as f64,
        }
    }
}

pub fn train_knn(d: &BinaryDataset, params: &KnnParams) -> Result<KnnModel> {
    if params.k == 0 || params.k > d.len() {
        return Err(Error::Parameter(format!(
            "k = {} must lie in 1..={}",
            params.k,
            d.len()
        )));
    }
    Ok(KnnModel {
        k: params.k,
        rows: d.x().to_vec(),
        labels: d.y().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Dataset;

    fn five() -> BinaryDataset {
        Dataset::from_dense(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![5.0, 5.0], vec![6.0, 5.0]],
            vec![true, true, false, false, false],
        )
        .unwrap()
    }

    #[test]
    fn k_equal_n_is_global_majority() {
        let d = five();
        let m = train_knn(&d, &KnnParams { k: 5 }).unwrap();
        for q in [vec![0.0, 0.0], vec![100.0, -3.0]] {
            assert!(!m.predict(&FeatureVector::from_dense(&q)).label);
        }
    }

    #[test]
    fn k1_reproduces_training_label() {
        let d = five();
        let m = train_knn(&d, &KnnParams { k: 1 }).unwrap();
        for (x, y) in d.x().iter().zip(d.y()) {
            assert_eq!(m.predict(x).label, *y);
        }
    }

    #[test]
    fn k3_matches_exhaustive_sort() {
        let d = five();
        let m = train_knn(&d, &KnnParams { k: 3 }).unwrap();
        let q = [0.4, 0.3];
        // squared distances: 0.25, 0.45, 0.65, 34.81, 42.01 -> rows 0,1,2 -> 2 of 3 positive
        let mut brute: Vec<(f64, usize)> = d
            .x()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let r = r.to_dense();
                ((r[0] - q[0]).powi(2) + (r[1] - q[1]).powi(2), i)
            })
            .collect();
        brute.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect: Vec<usize> = brute.iter().take(3).map(|p| p.1).collect();
        let qv = FeatureVector::from_dense(&q);
        assert_eq!(m.neighbours(&qv), expect);
        assert!(m.predict(&qv).label);
    }

    #[test]
    fn distance_ties_prefer_lower_rows() {
        let d = Dataset::from_dense(&[vec![1.0], vec![-1.0]], vec![false, true]).unwrap();
        let m = train_knn(&d, &KnnParams { k: 1 }).unwrap();
        assert!(!m.predict(&FeatureVector::from_dense(&[0.0])).label);
    }

    #[test]
    fn vote_ties_go_to_zero() {
        let d = Dataset::from_dense(&[vec![1.0], vec![-1.0]], vec![false, true]).unwrap();
        let m = train_knn(&d, &KnnParams { k: 2 }).unwrap();
        assert!(!m.predict(&FeatureVector::from_dense(&[0.0])).label);
    }

    #[test]
    fn k_too_large() {
        assert!(matches!(train_knn(&five(), &KnnParams { k: 6 }), Err(Error::Parameter(_))));
    }
}
