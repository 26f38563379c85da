//! Sentence labels, 2-of-3 consensus and Fleiss' kappa.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Decision,
    Rationale,
    SupportingFact,
    Inapplicable,
}

impl Label {
    pub const ALL: [Label; 4] = [
        Label::Decision,
        Label::Rationale,
        Label::SupportingFact,
        Label::Inapplicable,
    ];

    /// The three labels a classifier predicts, in dataset column order.
    pub const CLASSIFIED: [Label; 3] = [Label::Decision, Label::Rationale, Label::SupportingFact];

    pub fn name(self) -> &'static str {
        match self {
            Label::Decision => "Decision",
            Label::Rationale => "Rationale",
            Label::SupportingFact => "SupportingFact",
            Label::Inapplicable => "Inapplicable",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Multi-label classification of one sentence.
///
/// `Inapplicable` never co-occurs with another label. Gold sets are
/// non-empty; a classifier may produce the empty set.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Label>", into = "Vec<Label>")]
pub struct LabelSet(BTreeSet<Label>);

impl LabelSet {
    pub fn new(labels: impl IntoIterator<Item = Label>) -> Result<Self> {
        let set: BTreeSet<Label> = labels.into_iter().collect();
        if set.contains(&Label::Inapplicable) && set.len() > 1 {
            return Err(Error::Invalid(
                "Inapplicable cannot be combined with other labels".into(),
            ));
        }
        Ok(LabelSet(set))
    }

    pub fn empty() -> Self {
        LabelSet(BTreeSet::new())
    }

    pub fn inapplicable() -> Self {
        LabelSet(BTreeSet::from([Label::Inapplicable]))
    }

    /// Builds a set from a (Decision, Rationale, SupportingFact) indicator row.
    pub fn from_row(row: [bool; 3]) -> Self {
        LabelSet(
            Label::CLASSIFIED
                .iter()
                .zip(row)
                .filter(|(_, on)| *on)
                .map(|(l, _)| *l)
                .collect(),
        )
    }

    pub fn to_row(&self) -> [bool; 3] {
        Label::CLASSIFIED.map(|l| self.contains(l))
    }

    pub fn contains(&self, label: Label) -> bool {
        self.0.contains(&label)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_inapplicable(&self) -> bool {
        self.contains(Label::Inapplicable)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = Label> + '_ {
        self.0.iter().copied()
    }
}

impl TryFrom<Vec<Label>> for LabelSet {
    type Error = Error;
    fn try_from(v: Vec<Label>) -> Result<Self> {
        LabelSet::new(v)
    }
}

impl From<LabelSet> for Vec<Label> {
    fn from(s: LabelSet) -> Self {
        s.0.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotator_id: String,
    pub hash: String,
    pub index: usize,
    pub labels: LabelSet,
}

/// One record of a labelled corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub hash: String,
    pub index: usize,
    pub text: String,
    pub labels: LabelSet,
}

pub fn read_corpus_jsonl(text: &str) -> Result<Vec<CorpusRecord>> {
    read_jsonl(text)
}

pub fn read_annotations_jsonl(text: &str) -> Result<Vec<Annotation>> {
    read_jsonl(text)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Invalid(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consensus {
    Agreed(LabelSet),
    NoConsensus,
}

/// Majority vote over annotators: a label is kept when at least `quorum`
/// distinct annotators chose it.
pub fn consensus(annotations: &[Annotation], quorum: usize) -> Result<Consensus> {
    let mut by_annotator: BTreeMap<&str, &LabelSet> = BTreeMap::new();
    for a in annotations {
        if let Some(prev) = by_annotator.insert(&a.annotator_id, &a.labels) {
            if prev != &a.labels {
                return Err(Error::ConflictingAnnotation(a.annotator_id.clone()));
            }
        }
    }
    if by_annotator.len() < quorum.max(1) {
        return Err(Error::InsufficientAnnotations {
            needed: quorum.max(1),
            got: by_annotator.len(),
        });
    }

    let mut votes: BTreeMap<Label, usize> = BTreeMap::new();
    for labels in by_annotator.values() {
        for l in labels.iter() {
            *votes.entry(l).or_default() += 1;
        }
    }
    let reached: BTreeSet<Label> = votes
        .into_iter()
        .filter(|(_, n)| *n >= quorum)
        .map(|(l, _)| l)
        .collect();

    if reached.contains(&Label::Inapplicable) {
        return Ok(Consensus::Agreed(LabelSet::inapplicable()));
    }
    if reached.is_empty() {
        return Ok(Consensus::NoConsensus);
    }
    Ok(Consensus::Agreed(LabelSet(reached)))
}

/// Item × category count table for Fleiss' kappa.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    counts: Vec<Vec<u32>>,
    n_raters: u32,
}

impl RatingMatrix {
    pub fn new(counts: Vec<Vec<u32>>, n_raters: u32) -> Result<Self> {
        if n_raters < 2 {
            return Err(Error::Parameter("at least two raters are required".into()));
        }
        let Some(first) = counts.first() else {
            return Err(Error::Parameter("rating matrix has no items".into()));
        };
        let k = first.len();
        if k == 0 {
            return Err(Error::Parameter("rating matrix has no categories".into()));
        }
        for (i, row) in counts.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Shape {
                    expected: k,
                    got: row.len(),
                });
            }
            let total: u64 = row.iter().map(|&c| c as u64).sum();
            if total != n_raters as u64 {
                return Err(Error::Parameter(format!(
                    "item {i} has {total} ratings, expected {n_raters}"
                )));
            }
        }
        Ok(RatingMatrix { counts, n_raters })
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }

    pub fn n_raters(&self) -> u32 {
        self.n_raters
    }

    pub fn n_items(&self) -> usize {
        self.counts.len()
    }

    pub fn n_categories(&self) -> usize {
        self.counts[0].len()
    }
}

pub fn fleiss_kappa(m: &RatingMatrix) -> Result<f64> {
    let n = m.n_raters as f64;
    let items = m.n_items() as f64;
    let total_ratings = m.n_items() as u64 * m.n_raters as u64;

    let mut column_totals = vec![0u64; m.n_categories()];
    let mut p_bar = 0.0;
    for row in &m.counts {
        let squares: f64 = row.iter().map(|&c| (c as f64) * (c as f64)).sum();
        p_bar += (squares - n) / (n * (n - 1.0));
        for (t, &c) in column_totals.iter_mut().zip(row) {
            *t += c as u64;
        }
    }
    p_bar /= items;

    if column_totals.contains(&total_ratings) {
        return Err(Error::DegenerateAgreement);
    }
    let p_e: f64 = column_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / total_ratings as f64;
            p * p
        })
        .sum();
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Kappa of each label, treating it as a yes/no rating over all sentences in the round.
pub fn per_label_kappa(annotations: &[Annotation]) -> Result<BTreeMap<Label, Result<f64>>> {
    let mut sentences: BTreeMap<(&str, usize), BTreeMap<&str, &LabelSet>> = BTreeMap::new();
    for a in annotations {
        sentences
            .entry((&a.hash, a.index))
            .or_default()
            .insert(&a.annotator_id, &a.labels);
    }
    let Some(raters) = sentences.values().next().map(|s| s.len()) else {
        return Err(Error::Parameter("annotation round is empty".into()));
    };
    if let Some(((hash, index), s)) = sentences.iter().find(|(_, s)| s.len() != raters) {
        return Err(Error::Parameter(format!(
            "sentence {index} of {hash} has {} annotators, expected {raters}",
            s.len()
        )));
    }

    let mut out = BTreeMap::new();
    for label in Label::ALL {
        let counts = sentences
            .values()
            .map(|s| {
                let yes = s.values().filter(|ls| ls.contains(label)).count() as u32;
                vec![yes, raters as u32 - yes]
            })
            .collect();
        let kappa = RatingMatrix::new(counts, raters as u32).and_then(|m| fleiss_kappa(&m));
        out.insert(label, kappa);
    }
    Ok(out)
}

/// Mean of the labels whose kappa is defined.
pub fn mean_kappa(per_label: &BTreeMap<Label, Result<f64>>) -> Option<f64> {
    let defined: Vec<f64> = per_label.values().filter_map(|k| k.as_ref().ok().copied()).collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}
