//! Bundled example data: one fully labelled kernel commit.

/// Raw `git log` record of the commit.
pub const OOM_COMMIT_LOG: &str = include_str!("../fixtures/oom_commit.log");

/// Gold labels for its nine cleaned sentences, one JSON record per line.
pub const OOM_COMMIT_CORPUS: &str = include_str!("../fixtures/oom_commit_corpus.jsonl");

pub const OOM_COMMIT_HASH: &str = "778c14affaf94a9e4953179d3b13a544ccce7707";
