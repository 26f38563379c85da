//! End-to-end orchestration: ingest, label, graph, infer, report, export.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use crate::annotate::{read_corpus_jsonl, CorpusRecord, Label, LabelSet};
use crate::error::{Error, Result};
use crate::eval::{cv_multilabel, CSV_HEADER};
use crate::features::TfIdfModel;
use crate::ingest::{parse_git_log, preprocess_all, CleanCommit};
use crate::kgraph::{apply_inference, build_graph, AttrKey, AttrValue, Concept, KnowledgeGraph, NodeId, Relation};
use crate::models::{
    predict_multilabel, train_multilabel, Dataset, ModelSpec, MultiLabelDataset, MultiLabelModel,
    MODEL_FORMAT_VERSION,
};
use crate::query::{builtin_rationale_report, BindingRow};

pub type LabelMap = BTreeMap<(String, usize), LabelSet>;

pub const OTHER_COLOR: &str = "#CCCCCC";

/// Leaf color for a sentence's label combination.
pub fn label_color(labels: &LabelSet) -> &'static str {
    use Label::*;
    let has = |l| labels.contains(l);
    match (has(Decision), has(Rationale), has(SupportingFact), labels.len()) {
        (true, false, false, 1) => "#ADD8E6",
        (false, false, true, 1) => "#FFFACD",
        (false, true, false, 1) => "#F4C2C2",
        (false, true, true, 2) => "#FFAE42",
        (true, true, false, 2) => "#C8A2C8",
        _ => OTHER_COLOR,
    }
}

/// Serializes with object keys in sorted order.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&serde_json::to_value(item)?)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn label_map(records: &[CorpusRecord]) -> Result<LabelMap> {
    let mut map = LabelMap::new();
    for r in records {
        if map.insert((r.hash.clone(), r.index), r.labels.clone()).is_some() {
            return Err(Error::Invalid(format!(
                "sentence {} of commit {} is labelled twice",
                r.index, r.hash
            )));
        }
    }
    Ok(map)
}

/// TF-IDF features and label rows for a labelled corpus.
pub fn corpus_dataset(records: &[CorpusRecord]) -> Result<(TfIdfModel, MultiLabelDataset)> {
    let texts: Vec<&str> = records.iter().map(|r| r.text.as_str()).collect();
    let vectorizer = TfIdfModel::fit(&texts)?;
    let x = texts.iter().map(|t| vectorizer.transform(t)).collect();
    let y = records.iter().map(|r| r.labels.to_row()).collect();
    let d = Dataset::new(vectorizer.dim(), x, y)?;
    Ok((vectorizer, d))
}

/// A serialized vectorizer plus multi-label model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub version: u32,
    pub vectorizer: TfIdfModel,
    pub model: MultiLabelModel,
}

impl ModelBundle {
    pub fn train(records: &[CorpusRecord], spec: &ModelSpec, seed: u64) -> Result<Self> {
        let (vectorizer, d) = corpus_dataset(records)?;
        let model = train_multilabel(spec, &d, seed)?;
        Ok(ModelBundle {
            version: MODEL_FORMAT_VERSION,
            vectorizer,
            model,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: ModelBundle = serde_json::from_str(text)?;
        if b.version != MODEL_FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                b.version
            )));
        }
        Ok(b)
    }

    pub fn to_json(&self) -> Result<String> {
        to_sorted_json(self)
    }

    pub fn predict(&self, text: &str) -> Result<LabelSet> {
        let x = self.vectorizer.transform(text);
        if x.dim() != self.model.dim() {
            return Err(Error::Shape {
                expected: self.model.dim(),
                got: x.dim(),
            });
        }
        predict_multilabel(&self.model, &x)
    }

    /// Predicted labels for every sentence, as corpus records.
    pub fn label_commits(&self, commits: &[CleanCommit]) -> Result<Vec<CorpusRecord>> {
        let mut out = Vec::new();
        for c in commits {
            for s in &c.sentences {
                out.push(CorpusRecord {
                    hash: c.hash.clone(),
                    index: s.index,
                    text: s.text.clone(),
                    labels: self.predict(&s.text)?,
                });
            }
        }
        Ok(out)
    }
}

/// Fraction of a commit's sentences that are rationale sentences; `g` must be inferred.
pub fn rationale_density(g: &KnowledgeGraph, commit: &NodeId) -> Result<f64> {
    if !g.has_concept(commit, Concept::Commit) {
        return Err(Error::Lookup(format!("commit {commit}")));
    }
    let sentences: Vec<&NodeId> = g.targets(commit, Relation::Contains).collect();
    if sentences.is_empty() {
        return Err(Error::DegenerateData(format!("commit {commit} has no sentences")));
    }
    let rationale = sentences
        .iter()
        .filter(|s| g.has_concept(s, Concept::RationaleSentence))
        .count();
    Ok(rationale as f64 / sentences.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizSentence {
    pub order: i64,
    pub text: String,
    pub labels: Vec<Label>,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizCommit {
    pub short_id: String,
    pub hash: String,
    pub date: String,
    pub has_rationale: bool,
    pub sentences: Vec<VizSentence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizAuthor {
    pub name: String,
    pub has_rationale: bool,
    pub commits: Vec<VizCommit>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VizTree {
    pub authors: Vec<VizAuthor>,
}

fn str_attr(g: &KnowledgeGraph, node: &NodeId, key: AttrKey) -> String {
    match g.attribute(node, key) {
        Some(AttrValue::Str(s)) => s.clone(),
        Some(AttrValue::Int(i)) => i.to_string(),
        None => String::new(),
    }
}

/// Chronological key; unparseable dates sort after all parseable ones.
fn date_key(date: &str) -> (bool, i64, i64) {
    match DateTime::parse_from_rfc3339(date) {
        Ok(d) => (false, d.timestamp(), d.timestamp_subsec_nanos() as i64),
        Err(_) => (true, 0, 0),
    }
}

fn classification_label(ct: &NodeId) -> Option<Label> {
    Label::CLASSIFIED
        .into_iter()
        .find(|&l| NodeId::classification(l) == *ct)
}

/// Authors by name, their commits by date, sentences by order. Short ids
/// `c1, c2, ...` follow the global date order.
pub fn export_viz(g: &KnowledgeGraph) -> VizTree {
    let mut commits: Vec<(&NodeId, String, String)> = g
        .instances(Concept::Commit)
        .map(|c| (c, str_attr(g, c, AttrKey::Date), str_attr(g, c, AttrKey::HasIdentifier)))
        .collect();
    commits.sort_by(|a, b| {
        date_key(&a.1)
            .cmp(&date_key(&b.1))
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    let rank: BTreeMap<&NodeId, usize> = commits.iter().enumerate().map(|(i, c)| (c.0, i)).collect();

    let mut authors: Vec<VizAuthor> = Vec::new();
    for author in g.instances(Concept::Author) {
        let mut own: Vec<&NodeId> = g.sources(author, Relation::HasAuthor).collect();
        own.sort_by_key(|c| rank.get(c).copied().unwrap_or(usize::MAX));
        let commits: Vec<VizCommit> = own
            .into_iter()
            .map(|c| {
                let mut sentences: Vec<VizSentence> = g
                    .targets(c, Relation::Contains)
                    .map(|s| {
                        let labels =
                            LabelSet::new(g.targets(s, Relation::HasClassification).filter_map(classification_label))
                                .unwrap_or_default();
                        VizSentence {
                            order: match g.attribute(s, AttrKey::SentenceOrder) {
                                Some(AttrValue::Int(i)) => *i,
                                _ => -1,
                            },
                            text: str_attr(g, s, AttrKey::Text),
                            color: label_color(&labels).to_string(),
                            labels: labels.iter().collect(),
                        }
                    })
                    .collect();
                sentences.sort_by_key(|s| s.order);
                VizCommit {
                    short_id: rank.get(c).map(|r| format!("c{}", r + 1)).unwrap_or_default(),
                    hash: str_attr(g, c, AttrKey::HasIdentifier),
                    date: str_attr(g, c, AttrKey::Date),
                    has_rationale: g.has_concept(c, Concept::CommitWithRationale),
                    sentences,
                }
            })
            .collect();
        authors.push(VizAuthor {
            name: str_attr(g, author, AttrKey::AuthorName),
            has_rationale: commits.iter().any(|c| c.has_rationale),
            commits,
        });
    }
    authors.sort_by(|a, b| a.name.cmp(&b.name).then_with(|| a.commits.first().map(|c| &c.hash).cmp(&b.commits.first().map(|c| &c.hash))));
    VizTree { authors }
}

pub fn export_viz_json(g: &KnowledgeGraph) -> Result<String> {
    to_sorted_json(&export_viz(g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    GoldLabels,
    TrainedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(default = "default_folds")]
    pub folds: usize,
}

fn default_folds() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub mode: LabelMode,
    /// Gold labels; also the training data for evaluation.
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    /// Serialized [`ModelBundle`] for trained-model mode.
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// Learner used for evaluation.
    #[serde(default)]
    pub spec: Option<ModelSpec>,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub evaluate: Option<EvalConfig>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        match self.mode {
            LabelMode::GoldLabels if self.corpus.is_none() => {
                Err(Error::Parameter("gold-labels mode needs a corpus file".into()))
            }
            LabelMode::TrainedModel if self.model.is_none() => {
                Err(Error::Parameter("trained-model mode needs a model file".into()))
            }
            _ if self.evaluate.is_some() && self.corpus.is_none() => {
                Err(Error::Parameter("evaluation needs a corpus file".into()))
            }
            _ => Ok(()),
        }
    }
}

pub const CLEAN_COMMITS_FILE: &str = "clean_commits.jsonl";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const GRAPH_FILE: &str = "graph.json";
pub const INFERRED_GRAPH_FILE: &str = "graph_inferred.json";
pub const REPORT_FILE: &str = "report.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const VIZ_FILE: &str = "viz.json";

/// Results of a pipeline run held in memory.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub commits: Vec<CleanCommit>,
    pub predictions: Option<Vec<CorpusRecord>>,
    pub graph: KnowledgeGraph,
    pub inferred: KnowledgeGraph,
    pub report: Vec<BindingRow>,
    pub metrics_csv: Option<String>,
    pub viz: VizTree,
}

pub enum Labeller<'a> {
    Gold(&'a [CorpusRecord]),
    Model(&'a ModelBundle),
}

/// Runs every stage without touching the filesystem.
pub fn run_stages(log: &str, labeller: Labeller<'_>) -> Result<PipelineOutput> {
    let commits = preprocess_all(&parse_git_log(log)?);
    let (labels, predictions) = match labeller {
        Labeller::Gold(records) => (label_map(records)?, None),
        Labeller::Model(bundle) => {
            let predicted = bundle.label_commits(&commits)?;
            (label_map(&predicted)?, Some(predicted))
        }
    };
    let graph = build_graph(&commits, &labels)?;
    let inferred = apply_inference(&graph);
    let report = builtin_rationale_report(&inferred);
    let viz = export_viz(&inferred);
    Ok(PipelineOutput {
        commits,
        predictions,
        graph,
        inferred,
        report,
        metrics_csv: None,
        viz,
    })
}

/// Cross-validated metrics of `spec` on a labelled corpus, as CSV.
pub fn evaluate_corpus(records: &[CorpusRecord], spec: &ModelSpec, folds: usize, seed: u64) -> Result<String> {
    let (_, d) = corpus_dataset(records)?;
    let report = cv_multilabel(spec, &d, folds, seed)?;
    Ok(format!("{CSV_HEADER}\n{}", report.csv_rows(spec.family_name())))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

/// Runs the pipeline and writes its artifacts to `cfg.out_dir`. On failure
/// no artifact of this run is left behind.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let log = read(&cfg.input)?;
    let corpus = cfg
        .corpus
        .as_deref()
        .map(|p| read(p).and_then(|t| read_corpus_jsonl(&t)))
        .transpose()?;
    let bundle = match cfg.mode {
        LabelMode::TrainedModel => Some(ModelBundle::from_json(&read(cfg.model.as_deref().unwrap())?)?),
        LabelMode::GoldLabels => None,
    };
    let labeller = match &bundle {
        Some(b) => Labeller::Model(b),
        None => Labeller::Gold(corpus.as_deref().unwrap_or(&[])),
    };
    let mut out = run_stages(&log, labeller)?;
    if let Some(ev) = &cfg.evaluate {
        let spec = cfg.spec.clone().unwrap_or(ModelSpec::Gbt(Default::default()));
        out.metrics_csv = Some(evaluate_corpus(corpus.as_deref().unwrap_or(&[]), &spec, ev.folds, cfg.seed)?);
    }

    let mut files: Vec<(&str, String)> = vec![
        (CLEAN_COMMITS_FILE, to_jsonl(&out.commits)?),
        (GRAPH_FILE, to_sorted_json(&out.graph)?),
        (INFERRED_GRAPH_FILE, to_sorted_json(&out.inferred)?),
        (REPORT_FILE, to_sorted_json(&out.report)?),
        (VIZ_FILE, to_sorted_json(&out.viz)?),
    ];
    if let Some(p) = &out.predictions {
        files.push((PREDICTIONS_FILE, to_jsonl(p)?));
    }
    if let Some(m) = &out.metrics_csv {
        files.push((METRICS_FILE, m.clone()));
    }
    write_all(&cfg.out_dir, &files)
}

fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, content) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(e.into());
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{OOM_COMMIT_CORPUS, OOM_COMMIT_HASH, OOM_COMMIT_LOG};

    fn oom_commit() -> PipelineOutput {
        let corpus = read_corpus_jsonl(OOM_COMMIT_CORPUS).unwrap();
        run_stages(OOM_COMMIT_LOG, Labeller::Gold(&corpus)).unwrap()
    }

    #[test]
    fn palette() {
        use Label::*;
        let set = |ls: &[Label]| LabelSet::new(ls.iter().copied()).unwrap();
        assert_eq!(label_color(&set(&[Decision])), "#ADD8E6");
        assert_eq!(label_color(&set(&[SupportingFact])), "#FFFACD");
        assert_eq!(label_color(&set(&[Rationale])), "#F4C2C2");
        assert_eq!(label_color(&set(&[SupportingFact, Rationale])), "#FFAE42");
        assert_eq!(label_color(&set(&[Rationale, Decision])), "#C8A2C8");
        assert_eq!(label_color(&set(&[Decision, SupportingFact])), OTHER_COLOR);
        assert_eq!(label_color(&set(&[Inapplicable])), OTHER_COLOR);
        assert_eq!(label_color(&LabelSet::empty()), OTHER_COLOR);
    }

    #[test]
    fn oom_commit_viz_and_density() {
        let out = oom_commit();
        assert_eq!(out.viz.authors.len(), 1);
        let commit = &out.viz.authors[0].commits[0];
        assert_eq!(commit.short_id, "c1");
        assert!(commit.has_rationale);
        let colors: Vec<&str> = commit.sentences.iter().map(|s| s.color.as_str()).collect();
        assert_eq!(
            colors,
            ["#ADD8E6", "#FFAE42", "#FFFACD", "#FFAE42", "#FFFACD", "#FFFACD", "#ADD8E6", "#C8A2C8", "#F4C2C2"]
        );
        let d = rationale_density(&out.inferred, &NodeId::commit(OOM_COMMIT_HASH)).unwrap();
        assert!((d - 4.0 / 9.0).abs() < 1e-12);
        assert!(matches!(
            rationale_density(&out.inferred, &NodeId::commit("nope")),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn empty_log() {
        let out = run_stages("", Labeller::Gold(&[])).unwrap();
        assert!(out.commits.is_empty() && out.graph.is_empty() && out.report.is_empty());
        assert_eq!(export_viz_json(&out.inferred).unwrap(), "{\n  \"authors\": []\n}\n");
    }

    #[test]
    fn sorted_keys() {
        let json = to_sorted_json(&oom_commit().viz).unwrap();
        let c = json.find("\"color\"").unwrap();
        let l = json.find("\"labels\"").unwrap();
        let o = json.find("\"order\"").unwrap();
        let t = json.find("\"text\"").unwrap();
        assert!(c < l && l < o && o < t);
    }

    #[test]
    fn bundle_round_trip_and_shape_check() {
        let corpus = read_corpus_jsonl(OOM_COMMIT_CORPUS).unwrap();
        let b = ModelBundle::train(&corpus, &ModelSpec::from_family("tree").unwrap(), 1).unwrap();
        let back = ModelBundle::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(back, b);
        for r in &corpus {
            assert_eq!(b.predict(&r.text).unwrap(), r.labels);
        }
        let other = TfIdfModel::fit(&["just two"]).unwrap();
        let broken = ModelBundle {
            vectorizer: other,
            ..b
        };
        assert!(matches!(broken.predict("two"), Err(Error::Shape { .. })));
    }
}
