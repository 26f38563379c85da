//! Tokenization and TF-IDF embedding.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercased runs of at least two word characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_string)
        .collect()
}

/// Sparse vector with entries sorted by column index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        FeatureVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        FeatureVector {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    /// Entries need not be sorted; zero weights are dropped and duplicate columns summed.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut map: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in entries {
            if i >= dim {
                return Err(Error::Shape { expected: dim, got: i + 1 });
            }
            *map.entry(i).or_default() += v;
        }
        Ok(FeatureVector {
            dim,
            entries: map.into_iter().filter(|(_, v)| *v != 0.0).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, column: usize) -> f64 {
        self.entries
            .binary_search_by_key(&column, |(i, _)| *i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, weights: &[f64]) -> f64 {
        self.entries.iter().map(|(i, v)| v * weights[*i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in &self.entries {
            out[*i] = *v;
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FeatureVector {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(i, v)| (*i, v * factor))
                .filter(|(_, v)| *v != 0.0)
                .collect(),
        }
    }

    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            let d = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.0 == y.0 => {
                    i += 1;
                    j += 1;
                    x.1 - y.1
                }
                (Some(x), Some(y)) if x.0 < y.0 => {
                    i += 1;
                    x.1
                }
                (Some(x), None) => {
                    i += 1;
                    x.1
                }
                (_, Some(y)) => {
                    j += 1;
                    y.1
                }
                (None, None) => unreachable!(),
            };
            acc += d * d;
        }
        acc
    }
}

/// Fitted TF-IDF vectorizer. Columns are the vocabulary in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfIdfFile", into = "TfIdfFile")]
pub struct TfIdfModel {
    terms: Vec<String>,
    df: Vec<usize>,
    n_documents: usize,
    idf: Vec<f64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct TfIdfFile {
    terms: Vec<String>,
    df: Vec<usize>,
    n_documents: usize,
}

impl TryFrom<TfIdfFile> for TfIdfModel {
    type Error = Error;
    fn try_from(f: TfIdfFile) -> Result<Self> {
        TfIdfModel::from_parts(f.terms, f.df, f.n_documents)
    }
}

impl From<TfIdfModel> for TfIdfFile {
    fn from(m: TfIdfModel) -> Self {
        TfIdfFile {
            terms: m.terms,
            df: m.df,
            n_documents: m.n_documents,
        }
    }
}

pub fn smoothed_idf(n_documents: usize, df: usize) -> f64 {
    ((1.0 + n_documents as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl TfIdfModel {
    pub fn fit<S: AsRef<str>>(corpus: &[S]) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Parameter("corpus is empty".into()));
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in corpus {
            let mut seen: Vec<String> = tokenize(doc.as_ref());
            seen.sort();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let (terms, df) = df.into_iter().unzip();
        TfIdfModel::from_parts(terms, df, corpus.len())
    }

    fn from_parts(terms: Vec<String>, df: Vec<usize>, n_documents: usize) -> Result<Self> {
        if terms.len() != df.len() {
            return Err(Error::Shape {
                expected: terms.len(),
                got: df.len(),
            });
        }
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        if let Some(bad) = df.iter().find(|&&d| d == 0 || d > n_documents) {
            return Err(Error::Invalid(format!(
                "document frequency {bad} outside 1..={n_documents}"
            )));
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("terms must be sorted and unique".into()));
        }
        let idf = df.iter().map(|&d| smoothed_idf(n_documents, d)).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(TfIdfModel {
            terms,
            df,
            n_documents,
            idf,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.column(term).map(|i| self.df[i])
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.column(term).map(|i| self.idf[i])
    }

    pub fn transform(&self, text: &str) -> FeatureVector {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for t in tokenize(text) {
            if let Some(&col) = self.index.get(&t) {
                *counts.entry(col).or_default() += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(col, n)| (col, n as f64 * self.idf[col]))
            .collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut entries {
                *w /= norm;
            }
        }
        FeatureVector {
            dim: self.dim(),
            entries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("OOM killer"), vec!["oom", "killer"]);
        assert_eq!(tokenize("a 3% bonus"), vec!["bonus"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("per_task 10G x"), vec!["per_task", "10g"]);
    }

    #[test]
    fn fit_two_docs() {
        let m = TfIdfModel::fit(&["aa bb", "aa"]).unwrap();
        assert_eq!(m.df("aa"), Some(2));
        assert_eq!(m.df("bb"), Some(1));
        assert!((m.idf("aa").unwrap() - 1.0).abs() < 1e-9);
        assert!((m.idf("bb").unwrap() - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-9);
        assert_eq!(m.terms(), ["aa", "bb"]);
    }

    #[test]
    fn single_doc_idf_is_one() {
        let m = TfIdfModel::fit(&["alpha beta gamma"]).unwrap();
        for t in m.terms() {
            assert_eq!(m.idf(t), Some(1.0));
        }
    }

    #[test]
    fn empty_vocabulary() {
        assert!(matches!(TfIdfModel::fit(&["!!", "??"]), Err(Error::EmptyVocabulary)));
        assert!(TfIdfModel::fit::<&str>(&[]).is_err());
    }

    #[test]
    fn transform_weights() {
        let m = TfIdfModel::fit(&["aa bb", "aa"]).unwrap();
        let idf_bb = (1.5f64).ln() + 1.0;
        let norm = (4.0 + idf_bb * idf_bb).sqrt();
        let v = m.transform("aa aa bb");
        assert!((v.get(0) - 2.0 / norm).abs() < 1e-9);
        assert!((v.get(1) - idf_bb / norm).abs() < 1e-9);
        assert!(m.transform("zz qq").is_zero());
        assert!((m.transform("aa bb").norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn serialization_recomputes_idf() {
        let m = TfIdfModel::fit(&["the oom killer", "killer tasks", "oom"]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"n_documents\":3"));
        assert!(!json.contains("idf"));
        let back: TfIdfModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<TfIdfModel>(r#"{"terms":["a"],"df":[5],"n_documents":2}"#).is_err());
    }

    #[test]
    fn sparse_distance() {
        let a = FeatureVector::from_dense(&[1.0, 0.0, 2.0, 0.0]);
        let b = FeatureVector::from_dense(&[0.0, 3.0, 2.0, -1.0]);
        assert_eq!(a.squared_distance(&b), 1.0 + 9.0 + 0.0 + 1.0);
        assert_eq!(a.squared_distance(&a), 0.0);
    }

    proptest! {
        #[test]
        fn fit_is_order_invariant(docs in prop::collection::vec("[a-d]{2,3}( [a-d]{2,3}){0,4}", 1..8)) {
            let forward = TfIdfModel::fit(&docs).unwrap();
            let mut rev = docs.clone();
            rev.reverse();
            prop_assert_eq!(forward, TfIdfModel::fit(&rev).unwrap());
        }
    }
}
