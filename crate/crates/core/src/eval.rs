//! Evaluation protocol: under-sampling, k-fold cross-validation, 60/30
//! splitting, and accuracy / precision / recall / F1 with micro-averaging.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotate::Label;
use crate::error::{Error, Result};
use crate::models::{
    train_binary, train_multilabel, BinaryDataset, Dataset, ModelSpec, MultiLabelDataset,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a bool, &'a bool)>) -> Self {
        let mut c = ConfusionCounts::default();
        for (&t, &p) in pairs {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn merge(self, o: Self) -> Self {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }

    pub fn metrics(&self) -> Metrics {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        Metrics {
            accuracy: ratio(self.tp + self.tn, self.total()),
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    fn mean(all: &[Metrics]) -> Metrics {
        let n = all.len() as f64;
        Metrics {
            accuracy: all.iter().map(|m| m.accuracy).sum::<f64>() / n,
            precision: all.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: all.iter().map(|m| m.recall).sum::<f64>() / n,
            f1: all.iter().map(|m| m.f1).sum::<f64>() / n,
        }
    }
}

/// Aggregate metrics plus, for multi-label tasks, one entry per label.
///
/// A report averaged over folds holds the mean of each per-fold value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub overall: Metrics,
    pub per_label: BTreeMap<Label, Metrics>,
    /// Fraction of rows whose whole label set was predicted exactly.
    pub exact_match: Option<f64>,
}

impl MetricReport {
    pub fn mean(reports: &[MetricReport]) -> Result<MetricReport> {
        if reports.is_empty() {
            return Err(Error::Parameter("no reports to average".into()));
        }
        let overall = Metrics::mean(&reports.iter().map(|r| r.overall).collect::<Vec<_>>());
        let mut per_label = BTreeMap::new();
        for label in reports[0].per_label.keys() {
            let ms: Vec<Metrics> = reports.iter().filter_map(|r| r.per_label.get(label).copied()).collect();
            per_label.insert(*label, Metrics::mean(&ms));
        }
        let exact: Vec<f64> = reports.iter().filter_map(|r| r.exact_match).collect();
        let exact_match = (exact.len() == reports.len()).then(|| exact.iter().sum::<f64>() / exact.len() as f64);
        Ok(MetricReport {
            overall,
            per_label,
            exact_match,
        })
    }

    /// CSV rows `model,label,accuracy,precision,recall,f1`; the aggregate row uses label `micro`
    /// for multi-label reports and `binary` otherwise.
    pub fn csv_rows(&self, model: &str) -> String {
        let mut out = String::new();
        let row = |out: &mut String, label: &str, m: &Metrics| {
            let _ = writeln!(
                out,
                "{model},{label},{:.6},{:.6},{:.6},{:.6}",
                m.accuracy, m.precision, m.recall, m.f1
            );
        };
        for (label, m) in &self.per_label {
            row(&mut out, label.name(), m);
        }
        row(&mut out, if self.per_label.is_empty() { "binary" } else { "micro" }, &self.overall);
        out
    }
}

pub const CSV_HEADER: &str = "model,label,accuracy,precision,recall,f1";

pub fn binary_metrics(y_true: &[bool], y_pred: &[bool]) -> Result<MetricReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Parameter("cannot score zero predictions".into()));
    }
    Ok(MetricReport {
        overall: ConfusionCounts::from_pairs(y_true.iter().zip(y_pred)).metrics(),
        ..Default::default()
    })
}

/// Pools the confusion counts of the three label columns before computing metrics.
pub fn micro_metrics(y_true: &[[bool; 3]], y_pred: &[[bool; 3]]) -> Result<MetricReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Parameter("cannot score zero predictions".into()));
    }
    let mut pooled = ConfusionCounts::default();
    let mut per_label = BTreeMap::new();
    for (j, label) in Label::CLASSIFIED.iter().enumerate() {
        let counts = ConfusionCounts::from_pairs(
            y_true.iter().map(|r| &r[j]).zip(y_pred.iter().map(|r| &r[j])),
        );
        pooled = pooled.merge(counts);
        per_label.insert(*label, counts.metrics());
    }
    let exact = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(MetricReport {
        overall: pooled.metrics(),
        per_label,
        exact_match: Some(exact as f64 / y_true.len() as f64),
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Randomly keeps `targets[c]` rows of each listed class; other classes are kept whole.
pub fn undersample<Y: Clone + Ord>(
    d: &Dataset<Y>,
    targets: &BTreeMap<Y, usize>,
    seed: u64,
) -> Result<Dataset<Y>> {
    let mut rng = rng(seed);
    let mut by_class: BTreeMap<&Y, Vec<usize>> = BTreeMap::new();
    for (i, y) in d.y().iter().enumerate() {
        by_class.entry(y).or_default().push(i);
    }
    let mut keep = Vec::with_capacity(d.len());
    for (class, rows) in &mut by_class {
        match targets.get(*class) {
            Some(&target) if target > rows.len() => {
                return Err(Error::Parameter(format!(
                    "under-sampling target {target} exceeds class size {}",
                    rows.len()
                )));
            }
            Some(&target) => {
                rows.shuffle(&mut rng);
                keep.extend_from_slice(&rows[..target]);
            }
            None => keep.extend_from_slice(rows),
        }
    }
    if let Some((_, &t)) = targets.iter().find(|(c, _)| !by_class.contains_key(c)) {
        if t > 0 {
            return Err(Error::Parameter(format!(
                "under-sampling target {t} for a class with no rows"
            )));
        }
    }
    keep.shuffle(&mut rng);
    Ok(d.subset(&keep))
}

/// Shuffles `0..n` and cuts it into `k` contiguous folds whose sizes differ by at most one.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Parameter("k must be at least 2".into()));
    }
    if n < k {
        return Err(Error::Parameter(format!("cannot split {n} rows into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// Runs `fit_and_score(train, test)` on each fold and averages the reports.
pub fn kfold_cv<Y: Clone>(
    d: &Dataset<Y>,
    k: usize,
    seed: u64,
    mut fit_and_score: impl FnMut(&Dataset<Y>, &Dataset<Y>, usize) -> Result<MetricReport>,
) -> Result<MetricReport> {
    let folds = fold_indices(d.len(), k, seed)?;
    let mut reports = Vec::with_capacity(k);
    for (f, test_rows) in folds.iter().enumerate() {
        let train_rows: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, rows)| rows.iter().copied())
            .collect();
        reports.push(fit_and_score(&d.subset(&train_rows), &d.subset(test_rows), f)?);
    }
    MetricReport::mean(&reports)
}

/// k-fold CV of a binary learner; fold `f` trains with seed `seed + f`.
pub fn cv_binary(spec: &ModelSpec, d: &BinaryDataset, k: usize, seed: u64) -> Result<MetricReport> {
    kfold_cv(d, k, seed, |train, test, f| {
        let model = train_binary(spec, train, seed.wrapping_add(f as u64))?;
        let pred = test
            .x()
            .iter()
            .map(|x| model.predict(x).map(|p| p.label))
            .collect::<Result<Vec<_>>>()?;
        binary_metrics(test.y(), &pred)
    })
}

/// k-fold CV of a binary-relevance learner, scored with micro-averaging.
pub fn cv_multilabel(spec: &ModelSpec, d: &MultiLabelDataset, k: usize, seed: u64) -> Result<MetricReport> {
    kfold_cv(d, k, seed, |train, test, f| {
        let model = train_multilabel(spec, train, seed.wrapping_add(f as u64))?;
        let pred = test
            .x()
            .iter()
            .map(|x| model.predict_row(x))
            .collect::<Result<Vec<_>>>()?;
        micro_metrics(test.y(), &pred)
    })
}

pub struct Split<Y> {
    pub train: Dataset<Y>,
    pub test: Dataset<Y>,
    /// Rows left over when the fractions sum to less than one.
    pub remainder: Dataset<Y>,
}

pub fn train_test_split<Y: Clone>(
    d: &Dataset<Y>,
    train_frac: f64,
    test_frac: f64,
    seed: u64,
) -> Result<Split<Y>> {
    let valid = |f: f64| (0.0..=1.0).contains(&f);
    if !valid(train_frac) || !valid(test_frac) || train_frac + test_frac > 1.0 + 1e-12 {
        return Err(Error::Parameter(format!(
            "invalid split fractions ({train_frac}, {test_frac})"
        )));
    }
    let n = d.len();
    let n_train = ((n as f64 * train_frac) + 1e-9).floor() as usize;
    let n_test = (((n as f64 * test_frac) + 1e-9).floor() as usize).min(n - n_train.min(n));
    let n_train = n_train.min(n);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    Ok(Split {
        train: d.subset(&order[..n_train]),
        test: d.subset(&order[n_train..n_train + n_test]),
        remainder: d.subset(&order[n_train + n_test..]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    fn labelled(classes: &[(u8, usize)]) -> Dataset<u8> {
        let mut y = Vec::new();
        for &(c, n) in classes {
            y.extend(std::iter::repeat_n(c, n));
        }
        let x = (0..y.len()).map(|i| FeatureVector::from_dense(&[i as f64])).collect();
        Dataset::new(1, x, y).unwrap()
    }

    fn class_sizes(d: &Dataset<u8>) -> BTreeMap<u8, usize> {
        let mut m = BTreeMap::new();
        for y in d.y() {
            *m.entry(*y).or_default() += 1;
        }
        m
    }

    #[test]
    fn undersample_to_reported_pools() {
        let d = labelled(&[(0, 307), (1, 94), (2, 356)]);
        let targets = BTreeMap::from([(0, 100), (1, 94), (2, 100)]);
        let out = undersample(&d, &targets, 5).unwrap();
        assert_eq!(class_sizes(&out), BTreeMap::from([(0, 100), (1, 94), (2, 100)]));
        assert_eq!(out, undersample(&d, &targets, 5).unwrap());
    }

    #[test]
    fn undersample_identity_targets_permute() {
        let d = labelled(&[(0, 5), (1, 3)]);
        let out = undersample(&d, &BTreeMap::from([(0, 5), (1, 3)]), 1).unwrap();
        let mut rows: Vec<f64> = out.x().iter().map(|x| x.get(0)).collect();
        rows.sort_by(f64::total_cmp);
        assert_eq!(rows, (0..8).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn undersample_untouched_class_and_errors() {
        let d = labelled(&[(0, 10), (1, 4)]);
        let out = undersample(&d, &BTreeMap::from([(0, 4)]), 2).unwrap();
        assert_eq!(class_sizes(&out), BTreeMap::from([(0, 4), (1, 4)]));
        assert!(undersample(&d, &BTreeMap::from([(1, 5)]), 2).is_err());
    }

    #[test]
    fn fold_sizes() {
        let folds = fold_indices(23, 10, 0).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, [2, 2, 2, 2, 2, 2, 2, 3, 3, 3]);
        assert!(fold_indices(9, 10, 0).is_err());
    }

    #[test]
    fn constant_predictor_on_balanced_data() {
        let d = labelled(&[(0, 50), (1, 50)]).map_targets(|c| *c == 1);
        let r = kfold_cv(&d, 10, 3, |_, test, _| {
            binary_metrics(test.y(), &vec![true; test.len()])
        })
        .unwrap();
        assert!((r.overall.accuracy - 0.5).abs() < 0.05);
    }

    #[test]
    fn split_sizes() {
        let d = labelled(&[(0, 10)]);
        let s = train_test_split(&d, 0.6, 0.3, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.remainder.len()), (6, 3, 1));
        let s = train_test_split(&d, 1.0, 0.0, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.remainder.len()), (10, 0, 0));
        let again = train_test_split(&d, 0.6, 0.3, 1).unwrap();
        assert_eq!(again.train, train_test_split(&d, 0.6, 0.3, 1).unwrap().train);
        assert!(train_test_split(&d, 0.8, 0.3, 1).is_err());
        assert!(train_test_split(&d, -0.1, 0.3, 1).is_err());
    }

    #[test]
    fn binary_metric_examples() {
        let r = binary_metrics(&[true, false, true], &[true, false, true]).unwrap().overall;
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));

        let r = binary_metrics(&[true, true, false, false], &[true, false, true, false]).unwrap().overall;
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (0.5, 0.5, 0.5, 0.5));

        let r = binary_metrics(&[true, false], &[false, false]).unwrap().overall;
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));

        assert!(matches!(binary_metrics(&[true], &[]), Err(Error::Shape { .. })));
    }

    #[test]
    fn micro_hand_case() {
        let t = [[true, false, true], [false, true, false], [true, true, false], [false, false, true]];
        let p = [[true, true, false], [false, true, false], [false, true, false], [false, false, true]];
        // pooled: tp = 1+2+1 = 4, fp = 0+1+0 = 1, fn = 1+0+1 = 2, tn = 2+1+2 = 5
        let r = micro_metrics(&t, &p).unwrap();
        assert!((r.overall.precision - 4.0 / 5.0).abs() < 1e-12);
        assert!((r.overall.recall - 4.0 / 6.0).abs() < 1e-12);
        assert!((r.overall.f1 - 8.0 / 11.0).abs() < 1e-12);
        assert!((r.overall.accuracy - 9.0 / 12.0).abs() < 1e-12);
        assert_eq!(r.exact_match, Some(0.5));

        for (j, label) in Label::CLASSIFIED.iter().enumerate() {
            let col_t: Vec<bool> = t.iter().map(|r| r[j]).collect();
            let col_p: Vec<bool> = p.iter().map(|r| r[j]).collect();
            assert_eq!(r.per_label[label], binary_metrics(&col_t, &col_p).unwrap().overall);
        }

        let perfect = micro_metrics(&t, &t).unwrap().overall;
        assert_eq!((perfect.precision, perfect.recall, perfect.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn csv_layout() {
        let t = [[true, false, true]];
        let csv = micro_metrics(&t, &t).unwrap().csv_rows("tree");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "tree,Decision,1.000000,1.000000,1.000000,1.000000");
        assert_eq!(lines[1], "tree,Rationale,1.000000,0.000000,0.000000,0.000000");
        assert!(lines[3].starts_with("tree,micro,"));
    }
}
