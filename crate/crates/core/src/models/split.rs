//! Exhaustive threshold search shared by the classification and regression trees.
//!
//! Rows are sparse, so for each feature only the non-zero entries of the node's
//! rows are sorted; the implicit zeros form one more value group.

use std::cmp::Ordering;
use std::ops::{Add, Sub};

use crate::features::FeatureVector;

pub(crate) trait NodeStat: Copy + Default + Add<Output = Self> + Sub<Output = Self> {}

impl<T: Copy + Default + Add<Output = T> + Sub<Output = T>> NodeStat for T {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Distinct values of one feature over the node, ascending, with the stat sum of each group.
pub(crate) struct FeatureGroups<S> {
    pub feature: usize,
    pub groups: Vec<(f64, S)>,
}

pub(crate) fn feature_groups<S: NodeStat>(
    x: &[FeatureVector],
    rows: &[usize],
    row_stat: impl Fn(usize) -> S,
) -> Vec<FeatureGroups<S>> {
    let total = rows.iter().fold(S::default(), |acc, &r| acc + row_stat(r));

    let mut nonzero: Vec<(usize, f64, usize)> = Vec::new();
    for &r in rows {
        for &(f, v) in x[r].entries() {
            nonzero.push((f, v, r));
        }
    }
    nonzero.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal)));

    let mut out = Vec::new();
    let mut start = 0;
    while start < nonzero.len() {
        let feature = nonzero[start].0;
        let mut end = start;
        while end < nonzero.len() && nonzero[end].0 == feature {
            end += 1;
        }
        let run = &nonzero[start..end];
        let run_total = run.iter().fold(S::default(), |acc, e| acc + row_stat(e.2));
        let zero_count = rows.len() - run.len();

        let mut groups: Vec<(f64, S)> = Vec::new();
        let mut zero_done = zero_count == 0;
        for &(_, v, r) in run {
            if !zero_done && v > 0.0 {
                groups.push((0.0, total - run_total));
                zero_done = true;
            }
            match groups.last_mut() {
                Some((last, s)) if *last == v => *s = *s + row_stat(r),
                _ => groups.push((v, row_stat(r))),
            }
        }
        if !zero_done {
            groups.push((0.0, total - run_total));
        }
        if groups.len() > 1 {
            out.push(FeatureGroups { feature, groups });
        }
        start = end;
    }
    out
}

/// Best split over the given features. `gain(left, right)` returns `None` for
/// an inadmissible split. Ties keep the earliest (feature, threshold).
pub(crate) fn best_split<S: NodeStat>(
    candidates: &[&FeatureGroups<S>],
    total: S,
    gain: impl Fn(S, S) -> Option<f64>,
) -> Option<SplitChoice> {
    let mut best: Option<SplitChoice> = None;
    for fg in candidates {
        let mut left = S::default();
        for w in fg.groups.windows(2) {
            left = left + w[0].1;
            let right = total - left;
            if let Some(g) = gain(left, right) {
                if best.is_none_or(|b| g > b.gain) {
                    best = Some(SplitChoice {
                        feature: fg.feature,
                        threshold: midpoint(w[0].0, w[1].0),
                        gain: g,
                    });
                }
            }
        }
    }
    best
}

pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) / 2.0
}

pub(crate) fn partition(
    x: &[FeatureVector],
    rows: &[usize],
    feature: usize,
    threshold: f64,
) -> (Vec<usize>, Vec<usize>) {
    rows.iter().partition(|&&r| x[r].get(feature) <= threshold)
}
