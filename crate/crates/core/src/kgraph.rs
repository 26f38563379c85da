//! Decision/Rationale knowledge graph.
//!
//! Commits, sentences, authors and the three classification-type individuals
//! are nodes. Facts are stored as concept, edge and attribute assertions in
//! sorted sets, so serialization is stable. [`apply_inference`] runs the
//! classification rules to a fixpoint.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::annotate::{Label, LabelSet};
use crate::error::{Error, Result};
use crate::ingest::CleanCommit;

const NAMESPACES: [&str; 4] = ["commit", "sentence", "author", "ct"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        match id.split_once(':') {
            Some((ns, rest)) if NAMESPACES.contains(&ns) && !rest.is_empty() => Ok(NodeId(id)),
            _ => Err(Error::Invalid(format!("bad node id `{id}`"))),
        }
    }

    pub fn commit(hash: &str) -> Self {
        NodeId(format!("commit:{hash}"))
    }

    pub fn sentence(hash: &str, index: usize) -> Self {
        NodeId(format!("sentence:{hash}/{index}"))
    }

    pub fn author(name: &str, email: &str) -> Self {
        let mut slug = String::new();
        for c in name.to_lowercase().chars() {
            if c.is_alphanumeric() {
                slug.push(c);
            } else if !slug.ends_with('-') {
                slug.push('-');
            }
        }
        let slug = slug.trim_matches('-');
        NodeId(format!("author:{slug}/{}", email.trim().to_lowercase()))
    }

    pub fn classification(label: Label) -> Self {
        NodeId(format!("ct:{}", label.name()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn namespace(&self) -> &str {
        self.0.split_once(':').map(|(ns, _)| ns).unwrap_or("")
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for NodeId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        NodeId::new(s)
    }
}

impl From<NodeId> for String {
    fn from(n: NodeId) -> Self {
        n.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Concept {
    Commit,
    Sentence,
    Author,
    SentenceClassificationType,
    Decision,
    Rationale,
    SupportingFact,
    DecisionSentence,
    RationaleSentence,
    SupportingFactSentence,
    CommitWithRationale,
}

impl Concept {
    pub const ALL: [Concept; 11] = [
        Concept::Commit,
        Concept::Sentence,
        Concept::Author,
        Concept::SentenceClassificationType,
        Concept::Decision,
        Concept::Rationale,
        Concept::SupportingFact,
        Concept::DecisionSentence,
        Concept::RationaleSentence,
        Concept::SupportingFactSentence,
        Concept::CommitWithRationale,
    ];

    /// Name used in queries, e.g. `rationale:RationaleSentence`.
    pub fn qualified_name(self) -> &'static str {
        match self {
            Concept::Commit => "rationale:Commit",
            Concept::Sentence => "rationale:Sentence",
            Concept::Author => "rationale:Author",
            Concept::SentenceClassificationType => "rationale:SentenceClassificationType",
            Concept::Decision => "rationale:Decision",
            Concept::Rationale => "rationale:Rationale",
            Concept::SupportingFact => "rationale:SupportingFact",
            Concept::DecisionSentence => "rationale:DecisionSentence",
            Concept::RationaleSentence => "rationale:RationaleSentence",
            Concept::SupportingFactSentence => "rationale:SupportingFactSentence",
            Concept::CommitWithRationale => "rationale:CommitWithRationale",
        }
    }

    fn for_label(label: Label) -> Option<(Concept, Concept)> {
        match label {
            Label::Decision => Some((Concept::Decision, Concept::DecisionSentence)),
            Label::Rationale => Some((Concept::Rationale, Concept::RationaleSentence)),
            Label::SupportingFact => Some((Concept::SupportingFact, Concept::SupportingFactSentence)),
            Label::Inapplicable => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Relation {
    Contains,
    HasAuthor,
    NextSentence,
    HasClassification,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::Contains,
        Relation::HasAuthor,
        Relation::NextSentence,
        Relation::HasClassification,
    ];

    pub fn qualified_name(self) -> &'static str {
        match self {
            Relation::Contains => "baseV:contains",
            Relation::HasAuthor => "rationale:hasAuthor",
            Relation::NextSentence => "rationale:nextSentence",
            Relation::HasClassification => "rationale:hasClassification",
        }
    }

    pub fn domain(self) -> Concept {
        match self {
            Relation::Contains | Relation::HasAuthor => Concept::Commit,
            Relation::NextSentence | Relation::HasClassification => Concept::Sentence,
        }
    }

    pub fn range(self) -> Concept {
        match self {
            Relation::Contains | Relation::NextSentence => Concept::Sentence,
            Relation::HasAuthor => Concept::Author,
            Relation::HasClassification => Concept::SentenceClassificationType,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AttrKey {
    HasIdentifier,
    Text,
    SentenceOrder,
    AuthorName,
    Date,
}

impl AttrKey {
    pub const ALL: [AttrKey; 5] = [
        AttrKey::HasIdentifier,
        AttrKey::Text,
        AttrKey::SentenceOrder,
        AttrKey::AuthorName,
        AttrKey::Date,
    ];

    pub fn qualified_name(self) -> &'static str {
        match self {
            AttrKey::HasIdentifier => "baseV:hasIdentifier",
            AttrKey::Text => "rationale:text",
            AttrKey::SentenceOrder => "rationale:sentenceOrder",
            AttrKey::AuthorName => "authorV:authorName",
            AttrKey::Date => "rationale:date",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Int(i64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConceptAssertion {
    pub node: NodeId,
    pub concept: Concept,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeAssertion {
    pub relation: Relation,
    pub source: NodeId,
    pub target: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttributeAssertion {
    pub node: NodeId,
    pub key: AttrKey,
    pub value: AttrValue,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    pub concepts: BTreeSet<ConceptAssertion>,
    pub edges: BTreeSet<EdgeAssertion>,
    pub attributes: BTreeSet<AttributeAssertion>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty() && self.edges.is_empty() && self.attributes.is_empty()
    }

    pub fn assertion_count(&self) -> usize {
        self.concepts.len() + self.edges.len() + self.attributes.len()
    }

    pub fn assert_concept(&mut self, node: &NodeId, concept: Concept) -> bool {
        self.concepts.insert(ConceptAssertion {
            node: node.clone(),
            concept,
        })
    }

    pub fn assert_edge(&mut self, relation: Relation, source: &NodeId, target: &NodeId) -> bool {
        self.edges.insert(EdgeAssertion {
            relation,
            source: source.clone(),
            target: target.clone(),
        })
    }

    pub fn assert_attribute(&mut self, node: &NodeId, key: AttrKey, value: AttrValue) -> bool {
        self.attributes.insert(AttributeAssertion {
            node: node.clone(),
            key,
            value,
        })
    }

    pub fn has_concept(&self, node: &NodeId, concept: Concept) -> bool {
        self.concepts.contains(&ConceptAssertion {
            node: node.clone(),
            concept,
        })
    }

    pub fn instances(&self, concept: Concept) -> impl Iterator<Item = &NodeId> {
        self.concepts
            .iter()
            .filter(move |a| a.concept == concept)
            .map(|a| &a.node)
    }

    pub fn count(&self, concept: Concept) -> usize {
        self.instances(concept).count()
    }

    pub fn is_node(&self, node: &NodeId) -> bool {
        self.concepts.iter().any(|a| &a.node == node)
    }

    pub fn targets<'a>(&'a self, source: &'a NodeId, relation: Relation) -> impl Iterator<Item = &'a NodeId> {
        self.edges
            .iter()
            .filter(move |e| e.relation == relation && &e.source == source)
            .map(|e| &e.target)
    }

    pub fn sources<'a>(&'a self, target: &'a NodeId, relation: Relation) -> impl Iterator<Item = &'a NodeId> {
        self.edges
            .iter()
            .filter(move |e| e.relation == relation && &e.target == target)
            .map(|e| &e.source)
    }

    pub fn attribute(&self, node: &NodeId, key: AttrKey) -> Option<&AttrValue> {
        self.attributes
            .iter()
            .find(|a| &a.node == node && a.key == key)
            .map(|a| &a.value)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Builds the graph for `commits`; every sentence needs an entry in `labels`.
pub fn build_graph(
    commits: &[CleanCommit],
    labels: &BTreeMap<(String, usize), LabelSet>,
) -> Result<KnowledgeGraph> {
    let mut g = KnowledgeGraph::new();
    if commits.is_empty() {
        return Ok(g);
    }
    for label in Label::CLASSIFIED {
        let ct = NodeId::classification(label);
        g.assert_concept(&ct, Concept::SentenceClassificationType);
        if let Some((individual, _)) = Concept::for_label(label) {
            g.assert_concept(&ct, individual);
        }
    }

    let mut authors: HashMap<(String, String), NodeId> = HashMap::new();
    for commit in commits {
        let c = NodeId::commit(&commit.hash);
        if !g.assert_concept(&c, Concept::Commit) {
            return Err(Error::DuplicateNode(c.to_string()));
        }
        g.assert_attribute(&c, AttrKey::HasIdentifier, AttrValue::Str(commit.hash.clone()));
        g.assert_attribute(&c, AttrKey::Date, AttrValue::Str(commit.date.clone()));

        let key = (
            commit.author_name.trim().to_lowercase(),
            commit.author_email.trim().to_lowercase(),
        );
        let author = authors
            .entry(key)
            .or_insert_with(|| NodeId::author(&commit.author_name, &commit.author_email))
            .clone();
        if g.assert_concept(&author, Concept::Author) {
            g.assert_attribute(&author, AttrKey::AuthorName, AttrValue::Str(commit.author_name.clone()));
        }
        g.assert_edge(Relation::HasAuthor, &c, &author);

        let mut previous: Option<NodeId> = None;
        for sentence in &commit.sentences {
            let labels = labels
                .get(&(commit.hash.clone(), sentence.index))
                .ok_or_else(|| Error::IncompleteLabels {
                    hash: commit.hash.clone(),
                    index: sentence.index,
                })?;
            let s = NodeId::sentence(&commit.hash, sentence.index);
            g.assert_concept(&s, Concept::Sentence);
            g.assert_attribute(&s, AttrKey::Text, AttrValue::Str(sentence.text.clone()));
            g.assert_attribute(&s, AttrKey::SentenceOrder, AttrValue::Int(sentence.index as i64));
            g.assert_edge(Relation::Contains, &c, &s);
            if let Some(prev) = &previous {
                g.assert_edge(Relation::NextSentence, prev, &s);
            }
            for label in labels.iter().filter(|l| *l != Label::Inapplicable) {
                g.assert_edge(Relation::HasClassification, &s, &NodeId::classification(label));
            }
            previous = Some(s);
        }
    }
    Ok(g)
}

/// One conjunct of a rule body. Variables are plain names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Concept(String, Concept),
    Edge(Relation, String, String),
}

impl Atom {
    fn vars(&self) -> Vec<&str> {
        match self {
            Atom::Concept(v, _) => vec![v],
            Atom::Edge(_, s, t) => vec![s, t],
        }
    }
}

/// `antecedent -> concept(var)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceRule {
    pub name: String,
    pub antecedent: Vec<Atom>,
    pub consequent: (String, Concept),
}

impl InferenceRule {
    pub fn new(name: &str, antecedent: Vec<Atom>, var: &str, concept: Concept) -> Result<Self> {
        if !antecedent.iter().any(|a| a.vars().contains(&var)) {
            return Err(Error::Invalid(format!(
                "rule {name}: consequent variable `{var}` is not bound by the antecedent"
            )));
        }
        Ok(InferenceRule {
            name: name.to_string(),
            antecedent,
            consequent: (var.to_string(), concept),
        })
    }
}

/// Classification rules plus the sub-concept axioms of the derived concepts.
pub fn default_rules() -> Vec<InferenceRule> {
    let v = |s: &str| s.to_string();
    let mut rules = Vec::new();
    for (name, individual, derived) in [
        ("RationaleSentenceInfer", Concept::Rationale, Concept::RationaleSentence),
        ("DecisionSentenceInfer", Concept::Decision, Concept::DecisionSentence),
        ("SupportingFactSentenceInfer", Concept::SupportingFact, Concept::SupportingFactSentence),
    ] {
        rules.push(
            InferenceRule::new(
                name,
                vec![
                    Atom::Concept(v("s"), Concept::Sentence),
                    Atom::Edge(Relation::HasClassification, v("s"), v("ct")),
                    Atom::Concept(v("ct"), individual),
                ],
                "s",
                derived,
            )
            .unwrap(),
        );
    }
    rules.push(
        InferenceRule::new(
            "CommitWithRationaleInfer",
            vec![
                Atom::Concept(v("c"), Concept::Commit),
                Atom::Edge(Relation::Contains, v("c"), v("s")),
                Atom::Concept(v("s"), Concept::RationaleSentence),
            ],
            "c",
            Concept::CommitWithRationale,
        )
        .unwrap(),
    );
    for (sub, sup) in [
        (Concept::DecisionSentence, Concept::Sentence),
        (Concept::RationaleSentence, Concept::Sentence),
        (Concept::SupportingFactSentence, Concept::Sentence),
        (Concept::CommitWithRationale, Concept::Commit),
    ] {
        rules.push(InferenceRule::new("Subsumption", vec![Atom::Concept(v("x"), sub)], "x", sup).unwrap());
    }
    rules
}

struct Index<'g> {
    by_concept: HashMap<Concept, Vec<&'g NodeId>>,
    has: std::collections::HashSet<(&'g NodeId, Concept)>,
    by_relation: HashMap<Relation, Vec<(&'g NodeId, &'g NodeId)>>,
}

impl<'g> Index<'g> {
    fn new(g: &'g KnowledgeGraph) -> Self {
        let mut by_concept: HashMap<Concept, Vec<&NodeId>> = HashMap::new();
        let mut has = std::collections::HashSet::new();
        for a in &g.concepts {
            by_concept.entry(a.concept).or_default().push(&a.node);
            has.insert((&a.node, a.concept));
        }
        let mut by_relation: HashMap<Relation, Vec<(&NodeId, &NodeId)>> = HashMap::new();
        for e in &g.edges {
            by_relation.entry(e.relation).or_default().push((&e.source, &e.target));
        }
        Index {
            by_concept,
            has,
            by_relation,
        }
    }
}

fn solve<'g>(
    atoms: &[Atom],
    index: &Index<'g>,
    binding: &mut HashMap<String, &'g NodeId>,
    out: &mut Vec<HashMap<String, &'g NodeId>>,
) {
    let Some((first, rest)) = atoms.split_first() else {
        out.push(binding.clone());
        return;
    };
    match first {
        Atom::Concept(var, concept) => {
            if let Some(&node) = binding.get(var) {
                if index.has.contains(&(node, *concept)) {
                    solve(rest, index, binding, out);
                }
                return;
            }
            for &node in index.by_concept.get(concept).into_iter().flatten() {
                binding.insert(var.clone(), node);
                solve(rest, index, binding, out);
                binding.remove(var);
            }
        }
        Atom::Edge(relation, s, t) => {
            let (bs, bt) = (binding.get(s).copied(), binding.get(t).copied());
            for &(src, tgt) in index.by_relation.get(relation).into_iter().flatten() {
                if bs.is_some_and(|b| b != src) || bt.is_some_and(|b| b != tgt) {
                    continue;
                }
                if s == t && src != tgt {
                    continue;
                }
                let new_s = bs.is_none();
                let new_t = bt.is_none() && s != t;
                if new_s {
                    binding.insert(s.clone(), src);
                }
                if new_t {
                    binding.insert(t.clone(), tgt);
                }
                solve(rest, index, binding, out);
                if new_s {
                    binding.remove(s);
                }
                if new_t {
                    binding.remove(t);
                }
            }
        }
    }
}

/// All consequents derivable in one pass over the current graph.
fn derive_once(g: &KnowledgeGraph, rules: &[InferenceRule]) -> Vec<ConceptAssertion> {
    let index = Index::new(g);
    let mut derived = Vec::new();
    for rule in rules {
        let mut solutions = Vec::new();
        solve(&rule.antecedent, &index, &mut HashMap::new(), &mut solutions);
        let (var, concept) = &rule.consequent;
        for s in solutions {
            let node = s[var];
            if !index.has.contains(&(node, *concept)) {
                derived.push(ConceptAssertion {
                    node: node.clone(),
                    concept: *concept,
                });
            }
        }
    }
    derived
}

/// Applies `rules` until no new assertion appears.
pub fn infer_with(g: &KnowledgeGraph, rules: &[InferenceRule]) -> KnowledgeGraph {
    let mut out = g.clone();
    loop {
        let new = derive_once(&out, rules);
        let before = out.concepts.len();
        out.concepts.extend(new);
        if out.concepts.len() == before {
            return out;
        }
    }
}

pub fn apply_inference(g: &KnowledgeGraph) -> KnowledgeGraph {
    infer_with(g, &default_rules())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Domain,
    Range,
    Asymmetry,
    Cycle,
    Branch,
    OrderGap,
    Dangling,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

pub fn check_consistency(g: &KnowledgeGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let nodes: BTreeSet<&NodeId> = g.concepts.iter().map(|a| &a.node).collect();
    let mut push = |kind, detail: String| out.push(Violation { kind, detail });

    for e in &g.edges {
        let name = e.relation.qualified_name();
        let mut dangling = false;
        for end in [&e.source, &e.target] {
            if !nodes.contains(end) {
                push(ViolationKind::Dangling, format!("{name} edge {} -> {} references unknown node {end}", e.source, e.target));
                dangling = true;
            }
        }
        if dangling {
            continue;
        }
        if !g.has_concept(&e.source, e.relation.domain()) {
            push(ViolationKind::Domain, format!("{name} from {} which is not a {:?}", e.source, e.relation.domain()));
        }
        if !g.has_concept(&e.target, e.relation.range()) {
            push(ViolationKind::Range, format!("{name} to {} which is not a {:?}", e.target, e.relation.range()));
        }
        if e.relation == Relation::HasClassification
            && e.source < e.target
            && g.edges.contains(&EdgeAssertion {
                relation: Relation::HasClassification,
                source: e.target.clone(),
                target: e.source.clone(),
            })
        {
            push(ViolationKind::Asymmetry, format!("hasClassification holds both ways between {} and {}", e.source, e.target));
        }
    }

    let mut next: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    let mut incoming: BTreeMap<&NodeId, usize> = BTreeMap::new();
    for e in g.edges.iter().filter(|e| e.relation == Relation::NextSentence) {
        next.entry(&e.source).or_default().push(&e.target);
        *incoming.entry(&e.target).or_default() += 1;
    }
    for (node, targets) in &next {
        if targets.len() > 1 {
            push(ViolationKind::Branch, format!("{node} has {} next sentences", targets.len()));
        }
    }
    for (node, n) in &incoming {
        if *n > 1 {
            push(ViolationKind::Branch, format!("{node} follows {n} sentences"));
        }
    }

    // back edges of an iterative DFS, one per cycle
    let mut state: BTreeMap<&NodeId, u8> = BTreeMap::new();
    for &root in next.keys() {
        if state.contains_key(root) {
            continue;
        }
        let mut stack: Vec<(&NodeId, usize)> = vec![(root, 0)];
        state.insert(root, 1);
        while let Some((node, i)) = stack.pop() {
            let succ = next.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if i < succ.len() {
                stack.push((node, i + 1));
                let t = succ[i];
                match state.get(t) {
                    None => {
                        state.insert(t, 1);
                        stack.push((t, 0));
                    }
                    Some(1) => push(ViolationKind::Cycle, format!("nextSentence cycle through {t}")),
                    _ => {}
                }
            } else {
                state.insert(node, 2);
            }
        }
    }

    for c in g.instances(Concept::Commit) {
        let mut orders: Vec<Option<i64>> = g
            .targets(c, Relation::Contains)
            .map(|s| match g.attribute(s, AttrKey::SentenceOrder) {
                Some(AttrValue::Int(i)) => Some(*i),
                _ => None,
            })
            .collect();
        orders.sort();
        let expected: Vec<Option<i64>> = (0..orders.len() as i64).map(Some).collect();
        if orders != expected {
            push(ViolationKind::OrderGap, format!("sentence orders of {c} are not 0..{}", orders.len()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Sentence;

    fn commit(hash: &str, author: &str, labels: &[&[Label]]) -> (CleanCommit, Vec<LabelSet>) {
        let sentences = (0..labels.len())
            .map(|i| Sentence {
                index: i,
                text: format!("sentence number {i}"),
            })
            .collect();
        (
            CleanCommit {
                hash: hash.into(),
                author_name: author.into(),
                author_email: format!("{}@example.org", author.to_lowercase().replace(' ', ".")),
                date: "2020-01-01T00:00:00Z".into(),
                sentences,
            },
            labels.iter().map(|l| LabelSet::new(l.iter().copied()).unwrap()).collect(),
        )
    }

    fn graph(commits: &[(CleanCommit, Vec<LabelSet>)]) -> Result<KnowledgeGraph> {
        let mut labels = BTreeMap::new();
        for (c, ls) in commits {
            for (i, l) in ls.iter().enumerate() {
                labels.insert((c.hash.clone(), i), l.clone());
            }
        }
        let cs: Vec<CleanCommit> = commits.iter().map(|(c, _)| c.clone()).collect();
        build_graph(&cs, &labels)
    }

    use Label::*;

    #[test]
    fn empty_input_gives_empty_graph() {
        assert!(build_graph(&[], &BTreeMap::new()).unwrap().is_empty());
    }

    #[test]
    fn authors_are_deduplicated() {
        let g = graph(&[
            commit("aa", "Michel Lespinasse", &[&[Decision]]),
            commit("bb", "Michel Lespinasse", &[&[Rationale]]),
        ])
        .unwrap();
        assert_eq!(g.count(Concept::Author), 1);
        let author = g.instances(Concept::Author).next().unwrap().clone();
        assert_eq!(g.sources(&author, Relation::HasAuthor).count(), 2);
        assert_eq!(author.as_str(), "author:michel-lespinasse/michel.lespinasse@example.org");
    }

    #[test]
    fn build_errors() {
        let dup = graph(&[commit("aa", "A", &[&[Decision]]), commit("aa", "B", &[&[Decision]])]);
        assert!(matches!(dup, Err(Error::DuplicateNode(_))));

        let (c, _) = commit("aa", "A", &[&[Decision], &[Decision]]);
        let labels = BTreeMap::from([(("aa".to_string(), 0), LabelSet::new([Decision]).unwrap())]);
        assert!(matches!(
            build_graph(&[c], &labels),
            Err(Error::IncompleteLabels { index: 1, .. })
        ));
    }

    #[test]
    fn inapplicable_gets_no_classification() {
        let g = graph(&[commit("aa", "A", &[&[Decision], &[Inapplicable]])]).unwrap();
        let s1 = NodeId::sentence("aa", 1);
        assert_eq!(g.targets(&s1, Relation::HasClassification).count(), 0);
        assert!(check_consistency(&g).is_empty());
    }

    #[test]
    fn decision_only_commit_has_no_rationale() {
        let g = apply_inference(&graph(&[commit("aa", "A", &[&[Decision], &[Decision]])]).unwrap());
        assert_eq!(g.count(Concept::DecisionSentence), 2);
        assert_eq!(g.count(Concept::RationaleSentence), 0);
        assert!(!g.has_concept(&NodeId::commit("aa"), Concept::CommitWithRationale));
    }

    #[test]
    fn inference_is_monotone_and_idempotent() {
        let g = graph(&[
            commit("aa", "A", &[&[Decision], &[Rationale, SupportingFact]]),
            commit("bb", "B", &[&[SupportingFact]]),
        ])
        .unwrap();
        let once = apply_inference(&g);
        assert!(g.concepts.is_subset(&once.concepts));
        assert_eq!(apply_inference(&once), once);
        assert!(once.has_concept(&NodeId::commit("aa"), Concept::CommitWithRationale));
        assert!(!once.has_concept(&NodeId::commit("bb"), Concept::CommitWithRationale));
    }

    #[test]
    fn rule_with_unbound_consequent_is_rejected() {
        assert!(InferenceRule::new("bad", vec![Atom::Concept("s".into(), Concept::Sentence)], "c", Concept::Commit).is_err());
    }

    #[test]
    fn injected_cycle_is_reported_once() {
        let mut g = graph(&[commit("aa", "A", &[&[Decision], &[Decision]])]).unwrap();
        assert!(check_consistency(&g).is_empty());
        g.assert_edge(Relation::NextSentence, &NodeId::sentence("aa", 1), &NodeId::sentence("aa", 0));
        let v = check_consistency(&g);
        assert_eq!(v.iter().filter(|v| v.kind == ViolationKind::Cycle).count(), 1, "{v:?}");
    }

    #[test]
    fn classification_from_commit_is_a_domain_violation() {
        let mut g = graph(&[commit("aa", "A", &[&[Decision]])]).unwrap();
        g.assert_edge(Relation::HasClassification, &NodeId::commit("aa"), &NodeId::classification(Rationale));
        let v = check_consistency(&g);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Domain);
    }

    #[test]
    fn other_violation_kinds() {
        let mut g = graph(&[commit("aa", "A", &[&[Decision], &[Decision], &[Decision]])]).unwrap();
        let s = |i| NodeId::sentence("aa", i);
        g.assert_edge(Relation::NextSentence, &s(0), &s(2));
        g.assert_edge(Relation::HasClassification, &NodeId::classification(Decision), &s(0));
        g.assert_edge(Relation::Contains, &NodeId::commit("aa"), &NodeId::sentence("zz", 0));
        g.attributes.retain(|a| !(a.node == s(1) && a.key == AttrKey::SentenceOrder));
        let kinds: BTreeSet<ViolationKind> = check_consistency(&g).into_iter().map(|v| v.kind).collect();
        for k in [ViolationKind::Branch, ViolationKind::Asymmetry, ViolationKind::Dangling, ViolationKind::OrderGap] {
            assert!(kinds.contains(&k), "{k:?} missing from {kinds:?}");
        }
    }

    #[test]
    fn json_is_stable_and_round_trips() {
        let g = apply_inference(&graph(&[commit("aa", "A", &[&[Decision], &[Rationale]])]).unwrap());
        let json = g.to_json().unwrap();
        assert_eq!(KnowledgeGraph::from_json(&json).unwrap(), g);
        assert!(json.contains("\"concept\": \"CommitWithRationale\""));
        assert!(json.contains("\"relation\": \"nextSentence\""));
        assert!(json.contains("\"key\": \"sentenceOrder\""));
    }
}
