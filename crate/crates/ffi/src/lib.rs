//! C ABI for commit-rationale.
//!
//! Graphs are opaque `CrGraph` handles. Every fallible call returns a
//! `CrStatus`; on failure `cr_last_error_message` describes the error for the
//! calling thread. Strings handed out by the library are freed with
//! `cr_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use commit_rationale::annotate::{fleiss_kappa, read_corpus_jsonl, RatingMatrix};
use commit_rationale::kgraph::{KnowledgeGraph, NodeId};
use commit_rationale::pipeline::{export_viz_json, rationale_density, run_stages, to_sorted_json, Labeller};
use commit_rationale::query::{builtin_rationale_report, evaluate, parse_query};
use commit_rationale::Error;

pub const CR_ABI_VERSION: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Labels = 4,
    Graph = 5,
    QuerySyntax = 6,
    Unsupported = 7,
    Lookup = 8,
    Degenerate = 9,
    Invalid = 10,
    Panic = 11,
}

impl From<&Error> for CrStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => CrStatus::Parse,
            Error::IncompleteLabels { .. } | Error::ConflictingAnnotation(_) | Error::InsufficientAnnotations { .. } => {
                CrStatus::Labels
            }
            Error::DuplicateNode(_) => CrStatus::Graph,
            Error::QuerySyntax { .. } => CrStatus::QuerySyntax,
            Error::UnsupportedFeature(_) => CrStatus::Unsupported,
            Error::Lookup(_) => CrStatus::Lookup,
            Error::DegenerateAgreement | Error::DegenerateData(_) | Error::EmptyVocabulary => CrStatus::Degenerate,
            _ => CrStatus::Invalid,
        }
    }
}

/// An inferred knowledge graph.
pub struct CrGraph {
    graph: KnowledgeGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(CrStatus::from(&e), format!("{}: {e}", e.kind()))
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CrStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside commit-rationale".into());
            CrStatus::Panic
        }
    }
}

unsafe fn input<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(CrStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CrStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn graph<'a>(g: *const CrGraph) -> Result<&'a KnowledgeGraph, Failure> {
    g.as_ref()
        .map(|g| &g.graph)
        .ok_or_else(|| Failure(CrStatus::NullArgument, "graph is null".into()))
}

unsafe fn emit_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(CrStatus::NullArgument, "out is null".into()));
    }
    let c = CString::new(s).map_err(|_| Failure(CrStatus::Invalid, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

#[no_mangle]
pub extern "C" fn cr_abi_version() -> u32 {
    CR_ABI_VERSION
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn cr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds and infers a graph from a `git log` dump and a JSONL file of
/// sentence labels.
///
/// # Safety
/// `log` and `labels_jsonl` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_graph_from_log(
    log: *const c_char,
    labels_jsonl: *const c_char,
    out: *mut *mut CrGraph,
) -> CrStatus {
    guard(|| {
        let log = input(log, "log")?;
        let labels = read_corpus_jsonl(input(labels_jsonl, "labels_jsonl")?)?;
        if out.is_null() {
            return Err(Failure(CrStatus::NullArgument, "out is null".into()));
        }
        let stages = run_stages(log, Labeller::Gold(&labels))?;
        *out = Box::into_raw(Box::new(CrGraph { graph: stages.inferred }));
        Ok(())
    })
}

/// # Safety
/// `g` must come from `cr_graph_from_log` and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cr_graph_free(g: *mut CrGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_graph_to_json(g: *const CrGraph, out: *mut *mut c_char) -> CrStatus {
    guard(|| emit_string(out, to_sorted_json(graph(g)?)?))
}

/// Commit and sentence rationale report as a JSON array of rows.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_graph_report_json(g: *const CrGraph, out: *mut *mut c_char) -> CrStatus {
    guard(|| emit_string(out, to_sorted_json(&builtin_rationale_report(graph(g)?))?))
}

/// # Safety
/// `g` must be a live graph handle; `query` a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_graph_query_json(
    g: *const CrGraph,
    query: *const c_char,
    out: *mut *mut c_char,
) -> CrStatus {
    guard(|| {
        let q = parse_query(input(query, "query")?)?;
        emit_string(out, to_sorted_json(&evaluate(&q, graph(g)?))?)
    })
}

/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_graph_viz_json(g: *const CrGraph, out: *mut *mut c_char) -> CrStatus {
    guard(|| emit_string(out, export_viz_json(graph(g)?)?))
}

/// Fraction of the commit's sentences that carry rationale.
///
/// # Safety
/// `g` must be a live graph handle; `hash` a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_graph_rationale_density(
    g: *const CrGraph,
    hash: *const c_char,
    out: *mut f64,
) -> CrStatus {
    guard(|| {
        let d = rationale_density(graph(g)?, &NodeId::commit(input(hash, "hash")?))?;
        if out.is_null() {
            return Err(Failure(CrStatus::NullArgument, "out is null".into()));
        }
        *out = d;
        Ok(())
    })
}

/// Fleiss' kappa of a row-major `n_items x n_categories` count matrix.
///
/// # Safety
/// `counts` must point to `n_items * n_categories` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_fleiss_kappa(
    counts: *const u32,
    n_items: usize,
    n_categories: usize,
    n_raters: u32,
    out: *mut f64,
) -> CrStatus {
    guard(|| {
        if counts.is_null() || out.is_null() {
            return Err(Failure(CrStatus::NullArgument, "counts or out is null".into()));
        }
        let len = n_items
            .checked_mul(n_categories)
            .ok_or_else(|| Failure(CrStatus::Invalid, "matrix size overflows".into()))?;
        let flat = std::slice::from_raw_parts(counts, len);
        let rows = if n_categories == 0 {
            vec![Vec::new(); n_items]
        } else {
            flat.chunks(n_categories).map(<[u32]>::to_vec).collect()
        };
        *out = fleiss_kappa(&RatingMatrix::new(rows, n_raters)?)?;
        Ok(())
    })
}

/// # Safety
/// `s` must be a string returned by this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn cr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
