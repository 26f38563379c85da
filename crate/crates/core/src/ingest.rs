//! Git log ingestion and commit-message cleaning.
//!
//! The input is the text produced by
//!
//! ```text
//! git log --pretty=format:'@@COMMIT@@%nhash %H%nauthor_name %an%nauthor_email %ae%ndate %aI%n%n%s%n%n%b'
//! ```
//!
//! Each record is turned into a [`RawCommit`]; [`preprocess`] then strips
//! trailers, URLs, call traces and code lines and splits what remains into
//! sentences. The subject line is kept as sentence 0.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RECORD_DELIMITER: &str = "@@COMMIT@@";

/// `git log` template producing the record format read by [`parse_git_log`].
pub const GIT_LOG_FORMAT: &str =
    "@@COMMIT@@%nhash %H%nauthor_name %an%nauthor_email %ae%ndate %aI%n%n%s%n%n%b";

const HEADER_KEYS: [&str; 4] = ["hash", "author_name", "author_email", "date"];

const TRAILER_KEYS: [&str; 12] = [
    "signed-off-by:",
    "suggested-by:",
    "acked-by:",
    "reviewed-by:",
    "reported-by:",
    "tested-by:",
    "cc:",
    "co-developed-by:",
    "fixes:",
    "link:",
    "debugged-by:",
    "reviewed-off-by:",
];

const CODE_PREFIXES: [&str; 10] = [
    "git ", "$cd", "$echo", "$ ", "#define", "#include", "diff --", "+", "-", "@@",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCommit {
    pub hash: String,
    pub author_name: String,
    pub author_email: String,
    pub date: String,
    pub subject: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
}

/// A commit after cleaning. Sentence 0 is always the summary phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanCommit {
    pub hash: String,
    pub author_name: String,
    pub author_email: String,
    pub date: String,
    pub sentences: Vec<Sentence>,
}

impl CleanCommit {
    pub fn summary_phrase(&self) -> &str {
        &self.sentences[0].text
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Preprocessed {
    Clean(CleanCommit),
    Skipped,
}

fn hash_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[0-9a-f]{40}$").unwrap())
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"https?://\S*").unwrap())
}

fn trace_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(concat!(
            r"^\s*(?:",
            r"\[<[0-9a-fA-F]+>\]",
            r"|Call Trace:",
            r"|(?:\?\s*)?[A-Za-z_.$][\w.$]*\+0x[0-9a-fA-F]+/0x[0-9a-fA-F]+",
            r")"
        ))
        .unwrap()
    })
}

/// Parses a stream of `@@COMMIT@@` records.
pub fn parse_git_log(stream: &str) -> Result<Vec<RawCommit>> {
    let mut lines = Vec::new();
    let mut offset = 0;
    for raw in stream.split_inclusive('\n') {
        let content = raw.trim_end_matches('\n').trim_end_matches('\r');
        lines.push((offset, content, raw));
        offset += raw.len();
    }

    let mut starts = Vec::new();
    for (i, (_, content, _)) in lines.iter().enumerate() {
        if *content == RECORD_DELIMITER {
            starts.push(i);
        }
    }

    let first = starts.first().copied().unwrap_or(lines.len());
    if let Some((off, _, _)) = lines[..first].iter().find(|(_, c, _)| !c.trim().is_empty()) {
        return Err(Error::Parse {
            record: 1,
            offset: *off,
            message: format!("expected `{RECORD_DELIMITER}`"),
        });
    }

    let mut commits = Vec::with_capacity(starts.len());
    for (ordinal, &start) in starts.iter().enumerate() {
        let end = starts.get(ordinal + 1).copied().unwrap_or(lines.len());
        let record = &lines[start + 1..end];
        let end_offset = lines.get(end).map(|l| l.0).unwrap_or(stream.len());
        commits.push(parse_record(stream, record, ordinal + 1, end_offset)?);
    }
    Ok(commits)
}

fn parse_record(
    stream: &str,
    lines: &[(usize, &str, &str)],
    ordinal: usize,
    end_offset: usize,
) -> Result<RawCommit> {
    let fail = |offset: usize, message: String| Error::Parse {
        record: ordinal,
        offset,
        message,
    };

    let mut values = Vec::with_capacity(HEADER_KEYS.len());
    for (i, key) in HEADER_KEYS.iter().enumerate() {
        let Some(&(off, content, _)) = lines.get(i) else {
            return Err(fail(end_offset, format!("missing `{key}` header line")));
        };
        let value = content
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' ').or(if rest.is_empty() { Some("") } else { None }))
            .ok_or_else(|| fail(off, format!("expected `{key}` header line")))?;
        values.push(value.to_string());
    }
    if !hash_re().is_match(&values[0]) {
        return Err(fail(
            lines[0].0,
            format!("malformed hash `{}`", values[0]),
        ));
    }

    let mut rest = lines[HEADER_KEYS.len()..].iter();
    match rest.next() {
        Some((_, content, _)) if content.trim().is_empty() => {}
        Some((off, _, _)) => return Err(fail(*off, "expected blank line after headers".into())),
        None => return Err(fail(end_offset, "missing subject line".into())),
    }
    let subject = match rest.next() {
        Some((_, content, _)) => content.to_string(),
        None => return Err(fail(end_offset, "missing subject line".into())),
    };
    let body = match rest.next() {
        None => String::new(),
        Some((_, content, _)) if content.trim().is_empty() => {
            let body_start = rest.as_slice().first().map(|l| l.0).unwrap_or(end_offset);
            let raw = &stream[body_start..end_offset];
            raw.strip_suffix('\n').unwrap_or(raw).to_string()
        }
        Some((off, _, _)) => return Err(fail(*off, "expected blank line after subject".into())),
    };

    let [hash, author_name, author_email, date]: [String; 4] = values.try_into().unwrap();
    Ok(RawCommit {
        hash,
        author_name,
        author_email,
        date,
        subject,
        body,
    })
}

pub fn is_merge_commit(c: &RawCommit) -> bool {
    c.subject.starts_with("Merge tag")
}

fn starts_with_trailer(line: &str) -> bool {
    line.split_whitespace()
        .next()
        .map(|tok| {
            let tok = tok.to_lowercase();
            TRAILER_KEYS.iter().any(|k| tok == *k)
        })
        .unwrap_or(false)
}

/// Removes trailer lines such as `Signed-off-by:`.
pub fn strip_metadata(body: &str) -> String {
    body.split_inclusive('\n')
        .filter(|line| !starts_with_trailer(line))
        .collect()
}

fn is_trace_line(line: &str) -> bool {
    trace_re().is_match(line)
}

/// Removes URLs and blocks of two or more consecutive call-trace lines.
pub fn strip_urls_and_traces(body: &str) -> String {
    let without_urls = url_re().replace_all(body, "");
    let lines: Vec<&str> = without_urls.split_inclusive('\n').collect();
    let mut out = String::with_capacity(without_urls.len());
    let mut i = 0;
    while i < lines.len() {
        if is_trace_line(lines[i]) {
            let mut j = i;
            while j < lines.len() && is_trace_line(lines[j]) {
                j += 1;
            }
            if j - i >= 2 {
                i = j;
                continue;
            }
        }
        out.push_str(lines[i]);
        i += 1;
    }
    out
}

pub fn is_code_line(line: &str) -> bool {
    let t = line.trim();
    if t.is_empty() {
        return false;
    }
    CODE_PREFIXES.iter().any(|p| t.starts_with(p)) || t.ends_with(['{', '}', ';'])
}

fn blocks_split_after(token: &str) -> bool {
    // `token` is the whitespace-delimited word ending in the period.
    let lower = token.to_lowercase();
    if lower == "e.g." || lower == "etc." || lower == "i.e." {
        return true;
    }
    let stem = &token[..token.len() - 1];
    stem.chars().count() <= 2 || stem.contains('.')
}

/// Rule-based sentence splitter over blank-line separated paragraphs.
pub fn split_sentences(body: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut paragraph: Vec<&str> = Vec::new();
    for line in body.lines().chain(std::iter::once("")) {
        if line.trim().is_empty() {
            if !paragraph.is_empty() {
                let text = paragraph
                    .iter()
                    .flat_map(|l| l.split_whitespace())
                    .collect::<Vec<_>>()
                    .join(" ");
                split_paragraph(&text, &mut sentences);
                paragraph.clear();
            }
        } else {
            paragraph.push(line);
        }
    }
    sentences
}

fn split_paragraph(text: &str, out: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start = 0;
    for (pos, &(byte, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let end = byte + c.len_utf8();
        let boundary = match chars.get(pos + 1) {
            None => true,
            Some((_, next)) if next.is_whitespace() => chars
                .get(pos + 2)
                .map(|(_, after)| after.is_uppercase())
                .unwrap_or(true),
            Some(_) => false,
        };
        if !boundary {
            continue;
        }
        if c == '.' {
            let word_start = text[..byte].rfind(' ').map(|i| i + 1).unwrap_or(0);
            if blocks_split_after(&text[word_start.max(start)..end]) && pos + 1 < chars.len() {
                continue;
            }
        }
        let sentence = text[start..end].trim();
        if !sentence.is_empty() {
            out.push(sentence.to_string());
        }
        start = end;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
}

fn keep_sentence(s: &str) -> bool {
    s.chars().count() > 3 && !is_code_line(s) && !starts_with_trailer(s) && !url_re().is_match(s)
}

/// Cleans the body: trailers, URLs and traces, code lines, then sentence split and length filter.
pub fn clean_body(body: &str) -> Vec<String> {
    let stripped = strip_urls_and_traces(&strip_metadata(body));
    let prose: String = stripped
        .split_inclusive('\n')
        .map(|line| if is_code_line(line) { "\n" } else { line })
        .collect();
    split_sentences(&prose)
        .into_iter()
        .filter(|s| keep_sentence(s))
        .collect()
}

pub fn preprocess(c: &RawCommit) -> Preprocessed {
    if is_merge_commit(c) {
        return Preprocessed::Skipped;
    }
    let mut sentences = vec![Sentence {
        index: 0,
        text: c.subject.trim().to_string(),
    }];
    for (i, text) in clean_body(&c.body).into_iter().enumerate() {
        sentences.push(Sentence { index: i + 1, text });
    }
    Preprocessed::Clean(CleanCommit {
        hash: c.hash.clone(),
        author_name: c.author_name.clone(),
        author_email: c.author_email.clone(),
        date: c.date.clone(),
        sentences,
    })
}

/// Preprocesses every commit, dropping merges.
pub fn preprocess_all(commits: &[RawCommit]) -> Vec<CleanCommit> {
    commits
        .iter()
        .filter_map(|c| match preprocess(c) {
            Preprocessed::Clean(cc) => Some(cc),
            Preprocessed::Skipped => None,
        })
        .collect()
}

pub fn read_clean_commits_jsonl(text: &str) -> Result<Vec<CleanCommit>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(hash: &str, subject: &str, body: &str) -> String {
        format!(
            "@@COMMIT@@\nhash {hash}\nauthor_name A U Thor\nauthor_email a@x.org\ndate 2014-01-21T15:50:00-08:00\n\n{subject}\n\n{body}\n"
        )
    }

    const H1: &str = "778c14affaf94a9e4953179d3e13a544ccce7707";
    const H2: &str = "a63d83f427fbce97a6cea0db2e64b0eb8435cd10";

    #[test]
    fn parses_two_records_in_order() {
        let log = record(H1, "first", "Body one.\n\nPara two.") + &record(H2, "second", "");
        let commits = parse_git_log(&log).unwrap();
        assert_eq!(commits.len(), 2);
        assert_eq!(commits[0].hash, H1);
        assert_eq!(commits[0].body, "Body one.\n\nPara two.");
        assert_eq!(commits[1].subject, "second");
        assert_eq!(commits[1].body, "");
    }

    #[test]
    fn empty_stream_is_empty() {
        assert!(parse_git_log("").unwrap().is_empty());
        assert!(parse_git_log("\n\n").unwrap().is_empty());
    }

    #[test]
    fn short_hash_is_rejected() {
        let log = record(&H1[..39], "s", "b");
        match parse_git_log(&log) {
            Err(Error::Parse { record, offset, .. }) => {
                assert_eq!(record, 1);
                assert_eq!(offset, "@@COMMIT@@\n".len());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_header_names_record() {
        let log = record(H1, "s", "b")
            + &format!("@@COMMIT@@\nhash {H2}\nauthor_email a@x\n");
        match parse_git_log(&log) {
            Err(Error::Parse { record, .. }) => assert_eq!(record, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn merge_detection_is_exact() {
        let mut c = parse_git_log(&record(H1, "Merge tag 'v5.4' of git://x", "")).unwrap()[0].clone();
        assert!(is_merge_commit(&c));
        c.subject = "mm, oom: base root bonus on current usage".into();
        assert!(!is_merge_commit(&c));
        c.subject = "merge tag x".into();
        assert!(!is_merge_commit(&c));
        assert_eq!(preprocess(&{ c.subject = "Merge tag v1".into(); c }), Preprocessed::Skipped);
    }

    #[test]
    fn trailers_are_removed() {
        assert_eq!(strip_metadata("Text.\nSigned-off-by: A <a@x>"), "Text.\n");
        assert_eq!(strip_metadata("Fixes: abc123\nReal text."), "Real text.");
        assert_eq!(strip_metadata("cc: someone\nkeep"), "keep");
        let plain = "No trailers here.\nAt all.\n";
        assert_eq!(strip_metadata(plain), plain);
    }

    #[test]
    fn urls_and_traces_are_removed() {
        assert_eq!(
            strip_urls_and_traces("see https://lkml.org/x for details"),
            "see  for details"
        );
        let body = "Prose before.\n\
                    Call Trace:\n\
                    \x20[<ffffffff8106f2a4>] dump_stack+0x45/0x56\n\
                    \x20[<ffffffff81139ad2>] dump_header+0x7f/0x1f1\n\
                    \x20oom_kill_process+0x1c1/0x320\n\
                    \x20? out_of_memory+0x2c3/0x4f0\n\
                    Prose after.\n";
        assert_eq!(strip_urls_and_traces(body), "Prose before.\nProse after.\n");
        let single = "one frame foo+0x1/0x2 mentioned\n";
        assert_eq!(strip_urls_and_traces(single), single);
        assert_eq!(strip_urls_and_traces("nothing to do"), "nothing to do");
    }

    #[test]
    fn code_lines() {
        assert!(is_code_line("$echo 1 > /proc/sys/vm/overcommit"));
        assert!(!is_code_line(
            "Replace the 3% of system memory bonus with a 3% of current memory usage bonus."
        ));
        assert!(is_code_line("x = y;"));
        assert!(is_code_line("  git bisect run ./t.sh"));
        assert!(is_code_line("if (x) {"));
        assert!(!is_code_line(""));
    }

    #[test]
    fn sentence_splitting() {
        assert_eq!(
            split_sentences(
                "A 3% of system memory bonus is sometimes too excessive in comparison to\nother processes."
            ),
            vec!["A 3% of system memory bonus is sometimes too excessive in comparison to other processes."]
        );
        assert!(split_sentences("").is_empty());
        assert_eq!(
            split_sentences("It fails, e.g. often. We fix it."),
            vec!["It fails, e.g. often.", "We fix it."]
        );
        assert_eq!(split_sentences("Version 3.5 is out. Next"), vec!["Version 3.5 is out.", "Next"]);
        assert_eq!(split_sentences("Ask Dr. Who. Then go!"), vec!["Ask Dr. Who.", "Then go!"]);
        assert_eq!(split_sentences("One.\n\nTwo? Three"), vec!["One.", "Two?", "Three"]);
    }

    #[test]
    fn degenerate_body_keeps_summary() {
        let c = parse_git_log(&record(H1, "mm: fix it", "ok")).unwrap().remove(0);
        match preprocess(&c) {
            Preprocessed::Clean(cc) => {
                assert_eq!(cc.sentences.len(), 1);
                assert_eq!(cc.summary_phrase(), "mm: fix it");
            }
            Preprocessed::Skipped => panic!("skipped"),
        }
    }

    #[test]
    fn code_lines_are_dropped_before_splitting() {
        let body = "Reproduce with:\n\n$echo 1 > /proc/sys/vm/x\nint x = 0;\n\nThis is prose.\n";
        assert_eq!(clean_body(body), vec!["Reproduce with:", "This is prose."]);
    }
}
