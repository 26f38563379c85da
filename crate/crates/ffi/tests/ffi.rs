use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;

use commit_rationale::fixtures::{OOM_COMMIT_CORPUS, OOM_COMMIT_HASH, OOM_COMMIT_LOG};
use commit_rationale_ffi::*;

fn cstring(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    cr_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = cr_last_error_message();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_str().unwrap().to_string()
}

unsafe fn oom_commit_graph() -> *mut CrGraph {
    let (log, labels) = (cstring(OOM_COMMIT_LOG), cstring(OOM_COMMIT_CORPUS));
    let mut g = ptr::null_mut();
    assert_eq!(cr_graph_from_log(log.as_ptr(), labels.as_ptr(), &mut g), CrStatus::Ok);
    assert!(!g.is_null());
    g
}

#[test]
fn report_and_density_through_the_c_api() {
    unsafe {
        let g = oom_commit_graph();
        let mut s = ptr::null_mut();
        assert_eq!(cr_graph_report_json(g, &mut s), CrStatus::Ok);
        let rows: Vec<serde_json::Value> = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(rows.len(), 9);

        let mut d = 0.0;
        let hash = cstring(OOM_COMMIT_HASH);
        assert_eq!(cr_graph_rationale_density(g, hash.as_ptr(), &mut d), CrStatus::Ok);
        assert!((d - 4.0 / 9.0).abs() < 1e-12);

        let missing = cstring("0000");
        assert_eq!(cr_graph_rationale_density(g, missing.as_ptr(), &mut d), CrStatus::Lookup);
        assert!(last_error().starts_with("lookup:"));

        assert_eq!(cr_graph_viz_json(g, &mut s), CrStatus::Ok);
        assert!(take(s).contains("#C8A2C8"));
        assert_eq!(cr_graph_to_json(g, &mut s), CrStatus::Ok);
        assert!(take(s).contains("CommitWithRationale"));
        cr_graph_free(g);
    }
}

#[test]
fn query_errors_map_to_status_codes() {
    unsafe {
        let g = oom_commit_graph();
        let mut s = ptr::null_mut();
        let ok = cstring("SELECT ?s WHERE { ?s a rationale:RationaleSentence }");
        assert_eq!(cr_graph_query_json(g, ok.as_ptr(), &mut s), CrStatus::Ok);
        let rows: Vec<serde_json::Value> = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(rows.len(), 4);

        let filter = cstring("SELECT ?s WHERE { ?s a b:C FILTER(?s) }");
        assert_eq!(cr_graph_query_json(g, filter.as_ptr(), &mut s), CrStatus::Unsupported);
        let bad = cstring("SELECT ?s WHERE { ?s a }");
        assert_eq!(cr_graph_query_json(g, bad.as_ptr(), &mut s), CrStatus::QuerySyntax);
        assert!(last_error().contains("line 1"));
        cr_graph_free(g);
    }
}

#[test]
fn null_and_bad_inputs() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(cr_graph_from_log(ptr::null(), ptr::null(), &mut g), CrStatus::NullArgument);
        let log = cstring("not a log");
        let labels = cstring("");
        assert_eq!(cr_graph_from_log(log.as_ptr(), labels.as_ptr(), &mut g), CrStatus::Parse);
        assert!(g.is_null());
        let mut s = ptr::null_mut();
        assert_eq!(cr_graph_report_json(ptr::null(), &mut s), CrStatus::NullArgument);
        let unlabelled = cstring(OOM_COMMIT_LOG);
        assert_eq!(cr_graph_from_log(unlabelled.as_ptr(), labels.as_ptr(), &mut g), CrStatus::Labels);
        cr_graph_free(ptr::null_mut());
        cr_string_free(ptr::null_mut());
    }
}

#[test]
fn kappa() {
    let counts: [u32; 8] = [2, 1, 1, 2, 3, 0, 0, 3];
    let mut k = 0.0;
    unsafe {
        assert_eq!(cr_fleiss_kappa(counts.as_ptr(), 4, 2, 3, &mut k), CrStatus::Ok);
        assert!((k - 1.0 / 3.0).abs() < 1e-12);
        assert!(cr_last_error_message().is_null());
        let all_one: [u32; 4] = [3, 0, 3, 0];
        assert_eq!(cr_fleiss_kappa(all_one.as_ptr(), 2, 2, 3, &mut k), CrStatus::Degenerate);
    }
}

#[test]
fn header_declares_the_api() {
    let header = include_str!("../include/commit_rationale.h");
    for name in [
        "typedef struct CrGraph CrGraph;",
        "CR_STATUS_OK = 0",
        "cr_graph_from_log(",
        "cr_graph_free(",
        "cr_graph_report_json(",
        "cr_graph_query_json(",
        "cr_graph_viz_json(",
        "cr_graph_rationale_density(",
        "cr_fleiss_kappa(",
        "cr_string_free(",
        "cr_last_error_message(",
    ] {
        assert!(header.contains(name), "{name}");
    }
    assert_eq!(cr_abi_version(), CR_ABI_VERSION);
}
