//! Triple-pattern SELECT queries over a [`KnowledgeGraph`].
//!
//! The accepted language is a small SPARQL subset: `PREFIX` lines (ignored),
//! `SELECT [DISTINCT]` with plain variables or `(BOUND(?v) AS ?alias)`,
//! a `WHERE` block of triple patterns and `OPTIONAL { ... }` groups, and
//! `ORDER BY` over variables. Prefixed names are opaque constants.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kgraph::{AttrValue, KnowledgeGraph};

/// Commits with their authors and per-sentence classification flags.
pub const RATIONALE_REPORT_QUERY: &str = "\
SELECT ?author ?commit_id ?order ?text
(BOUND(?hasRationale) AS ?isCommitWithRationale)
(BOUND(?rct) AS ?isSentenceRationale)
(BOUND(?dct) AS ?isSentenceDecision)
(BOUND(?sct) AS ?isSentenceSupporting)
WHERE {
  ?commit a rationale:Commit .
  ?commit baseV:hasIdentifier ?commit_id .
  ?commit rationale:hasAuthor ?author_id .
  ?author_id authorV:authorName ?author .
  ?commit baseV:contains ?s .
  ?s rationale:text ?text .
  ?s rationale:sentenceOrder ?order
  OPTIONAL {
    ?commit ?hasRationale rationale:CommitWithRationale .
  }
  OPTIONAL {
    ?s ?rct rationale:RationaleSentence .
  }
  OPTIONAL {
    ?s ?dct rationale:DecisionSentence .
  }
  OPTIONAL {
    ?s ?sct rationale:SupportingFactSentence .
  }
}
ORDER BY ?commit_id ?order
";

const UNSUPPORTED: [&str; 22] = [
    "FILTER", "UNION", "LIMIT", "OFFSET", "GROUP", "HAVING", "BIND", "VALUES", "MINUS", "SERVICE",
    "CONSTRUCT", "ASK", "DESCRIBE", "GRAPH", "FROM", "NAMED", "BASE", "ASC", "DESC", "COUNT",
    "REDUCED", "EXISTS",
];

/// A graph value or a query result cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    /// Node id, concept name, predicate name or other opaque constant.
    Node(String),
    Str(String),
    Int(i64),
    Bool(bool),
}

impl Value {
    fn rank(&self) -> u8 {
        match self {
            Value::Bool(_) => 0,
            Value::Int(_) => 1,
            Value::Node(_) | Value::Str(_) => 2,
        }
    }

    fn text(&self) -> String {
        match self {
            Value::Node(s) | Value::Str(s) => s.clone(),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
        }
    }
}

/// Integers numerically, strings lexicographically, booleans first.
fn compare_values(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.cmp(y),
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        (Value::Node(x) | Value::Str(x), Value::Node(y) | Value::Str(y)) => x.cmp(y),
        _ => a.rank().cmp(&b.rank()),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Node(v) | Value::Str(v) => s.serialize_str(v),
            Value::Int(i) => s.serialize_i64(*i),
            Value::Bool(b) => s.serialize_bool(*b),
        }
    }
}

impl From<&AttrValue> for Value {
    fn from(v: &AttrValue) -> Self {
        match v {
            AttrValue::Int(i) => Value::Int(*i),
            AttrValue::Str(s) => Value::Str(s.clone()),
        }
    }
}

pub type Triple = [Value; 3];

/// Every assertion as a (subject, predicate, object) triple; concept
/// membership uses the predicate `a`.
pub fn graph_triples(g: &KnowledgeGraph) -> Vec<Triple> {
    let node = |s: &str| Value::Node(s.to_string());
    let mut out = Vec::with_capacity(g.assertion_count());
    for c in &g.concepts {
        out.push([node(c.node.as_str()), node("a"), node(c.concept.qualified_name())]);
    }
    for e in &g.edges {
        out.push([
            node(e.source.as_str()),
            node(e.relation.qualified_name()),
            node(e.target.as_str()),
        ]);
    }
    for a in &g.attributes {
        out.push([node(a.node.as_str()), node(a.key.qualified_name()), Value::from(&a.value)]);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(Value),
}

impl Term {
    fn var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl TriplePattern {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    fn terms(&self) -> [&Term; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms().into_iter().filter_map(Term::var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjectionItem {
    Var(String),
    Bound { var: String, alias: String },
}

impl ProjectionItem {
    pub fn name(&self) -> &str {
        match self {
            ProjectionItem::Var(v) => v,
            ProjectionItem::Bound { alias, .. } => alias,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    /// `SELECT *`: every pattern variable in order of first appearance.
    All,
    Items(Vec<ProjectionItem>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectQuery {
    pub projection: Projection,
    pub where_patterns: Vec<TriplePattern>,
    pub optionals: Vec<Vec<TriplePattern>>,
    pub order_by: Vec<String>,
}

impl SelectQuery {
    pub fn pattern_vars(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let all = self.where_patterns.iter().chain(self.optionals.iter().flatten());
        for v in all.flat_map(|p| p.vars()) {
            if seen.insert(v) {
                out.push(v.to_string());
            }
        }
        out
    }

    pub fn columns(&self) -> Vec<String> {
        match &self.projection {
            Projection::All => self.pattern_vars(),
            Projection::Items(items) => items.iter().map(|i| i.name().to_string()).collect(),
        }
    }

    pub fn bound_tests(&self) -> usize {
        match &self.projection {
            Projection::All => 0,
            Projection::Items(items) => items
                .iter()
                .filter(|i| matches!(i, ProjectionItem::Bound { .. }))
                .count(),
        }
    }

    fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        if let Projection::Items(items) = &self.projection {
            for item in items {
                if !names.insert(item.name()) {
                    return Err(Error::Invalid(format!("duplicate projection name ?{}", item.name())));
                }
            }
        }
        let pattern_vars = self.pattern_vars();
        for v in &self.order_by {
            if !names.contains(v.as_str()) && !pattern_vars.contains(v) {
                return Err(Error::Invalid(format!("ORDER BY ?{v} is not a query variable")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    Name(String),
    Iri(String),
    Str(String),
    Int(i64),
    Word(String),
    Punct(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Var(v) => write!(f, "?{v}"),
            Tok::Name(n) | Tok::Word(n) => f.write_str(n),
            Tok::Iri(i) => write!(f, "<{i}>"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Punct(c) => write!(f, "{c}"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '/' | ':')
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = Vec::with_capacity(chars.len() + 1);
    let (mut line, mut col) = (1, 1);
    for &c in &chars {
        pos.push((line, col));
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    pos.push((line, col));
    let mut out = Vec::new();
    let mut i = 0;
    let err = |at: usize, message: String| Error::QuerySyntax {
        line: pos[at].0,
        column: pos[at].1,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let advance = |n: usize, i: &mut usize| *i += n;
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(1, &mut i);
            }
            continue;
        }
        let take_while = |from: usize, f: &dyn Fn(char) -> bool| {
            let mut j = from;
            while j < chars.len() && f(chars[j]) {
                j += 1;
            }
            j
        };
        let tok = match c {
            '?' | '$' => {
                let end = take_while(i + 1, &|c| c.is_alphanumeric() || c == '_');
                if end == i + 1 {
                    return Err(err(start, "empty variable name".into()));
                }
                let name: String = chars[i + 1..end].iter().collect();
                advance(end - i, &mut i);
                Tok::Var(name)
            }
            '<' => {
                let end = take_while(i + 1, &|c| c != '>' && c != '\n');
                if end >= chars.len() || chars[end] != '>' {
                    return Err(err(start, "unterminated IRI".into()));
                }
                let iri: String = chars[i + 1..end].iter().collect();
                advance(end + 1 - i, &mut i);
                Tok::Iri(iri)
            }
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => return Err(err(start, "unterminated string".into())),
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(j + 1) {
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some(&e) => s.push(e),
                                None => return Err(err(start, "unterminated string".into())),
                            }
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                advance(j + 1 - i, &mut i);
                Tok::Str(s)
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let end = take_while(i + 1, &|c| c.is_ascii_digit());
                let digits: String = chars[i..end].iter().collect();
                let value = digits
                    .parse()
                    .map_err(|_| err(start, format!("integer out of range: {digits}")))?;
                advance(end - i, &mut i);
                Tok::Int(value)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut end = take_while(i, &is_name_char);
                // a trailing dot terminates the pattern, it is not part of the name
                while end > i && chars[end - 1] == '.' {
                    end -= 1;
                }
                let word: String = chars[i..end].iter().collect();
                advance(end - i, &mut i);
                if word.contains(':') {
                    Tok::Name(word)
                } else {
                    Tok::Word(word)
                }
            }
            _ => {
                advance(1, &mut i);
                Tok::Punct(c)
            }
        };
        out.push(Token {
            tok,
            line: pos[start].0,
            column: pos[start].1,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn next(&mut self) -> &Token {
        let t = &self.tokens[self.at];
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, message: String) -> Error {
        let t = &self.tokens[self.at];
        if let Tok::Word(w) = &t.tok {
            if UNSUPPORTED.contains(&w.to_ascii_uppercase().as_str()) {
                return Error::UnsupportedFeature(format!(
                    "{} at line {} column {}",
                    w.to_ascii_uppercase(),
                    t.line,
                    t.column
                ));
            }
        }
        if let Tok::Punct(c @ ('|' | '^' | '+' | '/' | ';' | ',')) = &t.tok {
            return Error::UnsupportedFeature(format!("`{c}` at line {} column {}", t.line, t.column));
        }
        Error::QuerySyntax {
            line: t.line,
            column: t.column,
            message: format!("{message}, found {}", t.tok),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected {kw}")))
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<()> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn expect_var(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Ok(v)
            }
            _ => Err(self.error("expected a variable".into())),
        }
    }

    fn query(&mut self) -> Result<SelectQuery> {
        while self.eat_keyword("PREFIX") {
            match self.peek() {
                Tok::Name(n) if n.ends_with(':') => {
                    self.next();
                }
                _ => return Err(self.error("expected a prefix name".into())),
            }
            match self.peek() {
                Tok::Iri(_) => {
                    self.next();
                }
                _ => return Err(self.error("expected an IRI".into())),
            }
        }
        self.expect_keyword("SELECT")?;
        self.eat_keyword("DISTINCT");
        let projection = if self.eat_punct('*') {
            Projection::All
        } else {
            let mut items = Vec::new();
            loop {
                match self.peek() {
                    Tok::Var(_) => items.push(ProjectionItem::Var(self.expect_var()?)),
                    Tok::Punct('(') => {
                        self.next();
                        self.expect_keyword("BOUND")?;
                        self.expect_punct('(')?;
                        let var = self.expect_var()?;
                        self.expect_punct(')')?;
                        self.expect_keyword("AS")?;
                        let alias = self.expect_var()?;
                        self.expect_punct(')')?;
                        items.push(ProjectionItem::Bound { var, alias });
                    }
                    _ => break,
                }
            }
            if items.is_empty() {
                return Err(self.error("expected a projection".into()));
            }
            Projection::Items(items)
        };
        self.eat_keyword("WHERE");
        self.expect_punct('{')?;
        let mut where_patterns = Vec::new();
        let mut optionals = Vec::new();
        loop {
            if self.eat_punct('}') {
                break;
            }
            if self.eat_keyword("OPTIONAL") {
                self.expect_punct('{')?;
                let mut group = Vec::new();
                while !self.eat_punct('}') {
                    if self.is_keyword("OPTIONAL") {
                        return Err(Error::UnsupportedFeature("nested OPTIONAL".into()));
                    }
                    group.push(self.triple()?);
                    self.eat_punct('.');
                }
                if group.is_empty() {
                    return Err(self.error("empty OPTIONAL group".into()));
                }
                optionals.push(group);
            } else {
                where_patterns.push(self.triple()?);
            }
            self.eat_punct('.');
        }
        let mut order_by = Vec::new();
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            while let Tok::Var(_) = self.peek() {
                order_by.push(self.expect_var()?);
            }
            if order_by.is_empty() {
                return Err(self.error("expected an ORDER BY variable".into()));
            }
        }
        if *self.peek() != Tok::Eof {
            return Err(self.error("expected end of query".into()));
        }
        let q = SelectQuery {
            projection,
            where_patterns,
            optionals,
            order_by,
        };
        q.validate()?;
        Ok(q)
    }

    fn term(&mut self, position: &str) -> Result<Term> {
        let term = match self.peek().clone() {
            Tok::Var(v) => Term::Var(v),
            Tok::Name(n) if position == "predicate" && n.contains('/') => {
                let t = &self.tokens[self.at];
                return Err(Error::UnsupportedFeature(format!(
                    "property path `{n}` at line {} column {}",
                    t.line, t.column
                )));
            }
            Tok::Name(n) => Term::Const(Value::Node(n)),
            Tok::Iri(i) => Term::Const(Value::Node(i)),
            Tok::Word(w) if w == "a" && position == "predicate" => Term::Const(Value::Node("a".into())),
            Tok::Str(s) if position == "object" => Term::Const(Value::Str(s)),
            Tok::Int(i) if position == "object" => Term::Const(Value::Int(i)),
            _ => return Err(self.error(format!("expected a triple {position}"))),
        };
        self.next();
        Ok(term)
    }

    fn triple(&mut self) -> Result<TriplePattern> {
        let subject = self.term("subject")?;
        let predicate = self.term("predicate")?;
        let object = self.term("object")?;
        Ok(TriplePattern::new(subject, predicate, object))
    }
}

pub fn parse_query(text: &str) -> Result<SelectQuery> {
    Parser {
        tokens: lex(text)?,
        at: 0,
    }
    .query()
}

pub type Binding = HashMap<String, Value>;

/// Triples indexed by subject and by object for bound-position lookups.
pub struct TripleStore {
    triples: Vec<Triple>,
    by_subject: HashMap<Value, Vec<usize>>,
    by_object: HashMap<Value, Vec<usize>>,
    by_predicate: HashMap<Value, Vec<usize>>,
}

impl TripleStore {
    pub fn new(triples: Vec<Triple>) -> Self {
        let mut by_subject: HashMap<Value, Vec<usize>> = HashMap::new();
        let mut by_object: HashMap<Value, Vec<usize>> = HashMap::new();
        let mut by_predicate: HashMap<Value, Vec<usize>> = HashMap::new();
        for (i, [s, p, o]) in triples.iter().enumerate() {
            by_subject.entry(s.clone()).or_default().push(i);
            by_predicate.entry(p.clone()).or_default().push(i);
            by_object.entry(o.clone()).or_default().push(i);
        }
        TripleStore {
            triples,
            by_subject,
            by_object,
            by_predicate,
        }
    }

    pub fn from_graph(g: &KnowledgeGraph) -> Self {
        Self::new(graph_triples(g))
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    fn candidates(&self, p: &TriplePattern, b: &Binding) -> Vec<usize> {
        let resolve = |t: &Term| match t {
            Term::Const(v) => Some(v.clone()),
            Term::Var(v) => b.get(v).cloned(),
        };
        let lookup = |index: &HashMap<Value, Vec<usize>>, v: &Value| index.get(v).cloned().unwrap_or_default();
        if let Some(s) = resolve(&p.subject) {
            lookup(&self.by_subject, &s)
        } else if let Some(o) = resolve(&p.object) {
            lookup(&self.by_object, &o)
        } else if let Some(pr) = resolve(&p.predicate) {
            lookup(&self.by_predicate, &pr)
        } else {
            (0..self.triples.len()).collect()
        }
    }

    fn solve(&self, patterns: &[TriplePattern], binding: &mut Binding, out: &mut Vec<Binding>) {
        let Some((first, rest)) = patterns.split_first() else {
            out.push(binding.clone());
            return;
        };
        for i in self.candidates(first, binding) {
            let mut added: Vec<&str> = Vec::new();
            let mut ok = true;
            for (term, value) in first.terms().into_iter().zip(&self.triples[i]) {
                match term {
                    Term::Const(c) => ok = c == value,
                    Term::Var(v) => match binding.get(v) {
                        Some(bound) => ok = bound == value,
                        None => {
                            binding.insert(v.clone(), value.clone());
                            added.push(v);
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                self.solve(rest, binding, out);
            }
            for v in added {
                binding.remove(v);
            }
        }
    }

    /// All extensions of `start` matching every pattern.
    pub fn matches(&self, patterns: &[TriplePattern], start: &Binding) -> Vec<Binding> {
        let mut out = Vec::new();
        self.solve(patterns, &mut start.clone(), &mut out);
        out
    }
}

/// One result row; unbound variables are absent.
pub type BindingRow = BTreeMap<String, Value>;

pub fn evaluate(q: &SelectQuery, g: &KnowledgeGraph) -> Vec<BindingRow> {
    evaluate_on(q, &TripleStore::from_graph(g))
}

pub fn evaluate_on(q: &SelectQuery, store: &TripleStore) -> Vec<BindingRow> {
    let mut rows = store.matches(&q.where_patterns, &Binding::new());
    for group in &q.optionals {
        let mut joined = Vec::with_capacity(rows.len());
        for row in rows {
            let ext = store.matches(group, &row);
            if ext.is_empty() {
                joined.push(row);
            } else {
                joined.extend(ext);
            }
        }
        rows = joined;
    }
    // solutions come out in index order, which depends on hashing; fix a
    // canonical order before the stable user-visible sort
    let vars = q.pattern_vars();
    let key = |b: &Binding| -> Vec<Option<Value>> { vars.iter().map(|v| b.get(v).cloned()).collect() };
    let cmp_opt = |a: &Option<Value>, b: &Option<Value>| match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => compare_values(x, y),
    };
    let cmp_keys = |a: &[Option<Value>], b: &[Option<Value>]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| cmp_opt(x, y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    rows.sort_by(|a, b| cmp_keys(&key(a), &key(b)));
    if !q.order_by.is_empty() {
        let order_key =
            |b: &Binding| -> Vec<Option<Value>> { q.order_by.iter().map(|v| b.get(v).cloned()).collect() };
        rows.sort_by(|a, b| cmp_keys(&order_key(a), &order_key(b)));
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rows {
        let projected = project(q, &vars, &row);
        let fingerprint = serde_json::to_string(&projected).unwrap_or_default();
        if seen.insert(fingerprint) {
            out.push(projected);
        }
    }
    out
}

fn project(q: &SelectQuery, vars: &[String], row: &Binding) -> BindingRow {
    let mut out = BindingRow::new();
    match &q.projection {
        Projection::All => {
            for v in vars {
                if let Some(value) = row.get(v) {
                    out.insert(v.clone(), value.clone());
                }
            }
        }
        Projection::Items(items) => {
            for item in items {
                match item {
                    ProjectionItem::Var(v) => {
                        if let Some(value) = row.get(v) {
                            out.insert(v.clone(), value.clone());
                        }
                    }
                    ProjectionItem::Bound { var, alias } => {
                        out.insert(alias.clone(), Value::Bool(row.contains_key(var)));
                    }
                }
            }
        }
    }
    out
}

pub fn builtin_rationale_report(g: &KnowledgeGraph) -> Vec<BindingRow> {
    let q = parse_query(RATIONALE_REPORT_QUERY).expect("built-in query parses");
    evaluate(&q, g)
}

pub fn rows_to_json(rows: &[BindingRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

/// Aligned text table with one column per projected name.
pub fn rows_to_table(columns: &[String], rows: &[BindingRow]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            columns
                .iter()
                .map(|c| r.get(c).map(|v| v.text().replace('\n', " ")).unwrap_or_default())
                .collect()
        })
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            cells
                .iter()
                .map(|r| r[i].chars().count())
                .chain([c.chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |values: &[String]| {
        let padded: Vec<String> = values
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:<w$}"))
            .collect();
        padded.join(" | ").trim_end().to_string()
    };
    let mut out = line(columns);
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    out.push('\n');
    for r in &cells {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}
