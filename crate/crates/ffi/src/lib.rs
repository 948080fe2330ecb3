//! C ABI over `rashomon-core`.
//!
//! Objects cross the boundary as opaque handles created by `rm_*_new`/`open`
//! and released by the matching `rm_*_free`. Every fallible call returns an
//! [`RmStatus`]; on failure a message is available from [`rm_last_error`]
//! on the same thread. Strings handed out by the library are owned by the
//! caller and must be released with [`rm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use rashomon::arbiter::{render_dot, Arbiter, Names};
use rashomon::argumentation::{
    classify_mode, parse_af, serialize_af, ArgumentId, AttackGraph, CompositionKind, RetrievalMode,
};
use rashomon::buffer::{Clock, LogicalClock, SystemClock};
use rashomon::scenario::{ordered, ScenarioFile};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Scenario = 5,
    Query = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmMode {
    Selection = 0,
    CompositionComplementary = 1,
    CompositionFiltered = 2,
    Surfacing = 3,
}

/// An attack graph.
pub struct RmGraph(AttackGraph);

/// A loaded scenario and its arbiter.
pub struct RmSession {
    scenario: ScenarioFile,
    arbiter: Arbiter,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).ok());
}

struct Failure(RmStatus, String);

impl Failure {
    fn new(status: RmStatus, message: impl std::fmt::Display) -> Self {
        Self(status, message.to_string())
    }
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RmStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(RmStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(RmStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(RmStatus::NullArgument, format!("{what} is null")))
}

unsafe fn emit<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(RmStatus::NullArgument, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

unsafe fn emit_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|e| Failure::new(RmStatus::InvalidArgument, e))?;
    emit(out, c.into_raw())
}

fn json(value: &impl serde::Serialize) -> Result<String, Failure> {
    serde_json::to_string(value).map_err(|e| Failure::new(RmStatus::InvalidArgument, e))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from this thread; do not free.
#[no_mangle]
pub extern "C" fn rm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version; static storage.
#[no_mangle]
pub extern "C" fn rm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates an empty graph.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rm_graph_new(out: *mut *mut RmGraph) -> RmStatus {
    guard(|| emit(out, Box::into_raw(Box::new(RmGraph(AttackGraph::new())))))
}

/// Parses a graph from AF text (`af N`, N argument lines, `att A B` lines).
///
/// # Safety
/// `af_text` must be a NUL-terminated string; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rm_graph_parse(af_text: *const c_char, out: *mut *mut RmGraph) -> RmStatus {
    guard(|| {
        let graph = parse_af(text(af_text, "af_text")?).map_err(|e| Failure::new(RmStatus::Parse, e))?;
        emit(out, Box::into_raw(Box::new(RmGraph(graph))))
    })
}

/// # Safety
/// `graph` must come from `rm_graph_new`/`rm_graph_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rm_graph_free(graph: *mut RmGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Declares an argument. Declaration order is the order used in every output.
///
/// # Safety
/// `graph` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rm_graph_add_argument(graph: *mut RmGraph, name: *const c_char) -> RmStatus {
    guard(|| {
        let graph = handle(graph, "graph")?;
        let id = ArgumentId::new(text(name, "name")?).map_err(|e| Failure::new(RmStatus::InvalidArgument, e))?;
        graph
            .0
            .add_argument(id)
            .map(drop)
            .map_err(|e| Failure::new(RmStatus::InvalidArgument, e))
    })
}

/// Adds an attack between two declared arguments.
///
/// # Safety
/// `graph` must be a live handle; both names NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn rm_graph_add_attack(
    graph: *mut RmGraph,
    attacker: *const c_char,
    target: *const c_char,
) -> RmStatus {
    guard(|| {
        let graph = handle(graph, "graph")?;
        let invalid = |e| Failure::new(RmStatus::InvalidArgument, e);
        let a = ArgumentId::new(text(attacker, "attacker")?).map_err(invalid)?;
        let b = ArgumentId::new(text(target, "target")?).map_err(invalid)?;
        graph.0.add_attack(&a, &b).map(drop).map_err(invalid)
    })
}

/// The grounded extension as a JSON array of names.
///
/// # Safety
/// `graph` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rm_graph_grounded(graph: *const RmGraph, out: *mut *mut c_char) -> RmStatus {
    guard(|| {
        let graph = &handle(graph.cast_mut(), "graph")?.0;
        emit_string(out, json(&ordered(graph, &graph.grounded_extension()))?)
    })
}

/// Every preferred extension as a JSON array of arrays of names.
///
/// # Safety
/// `graph` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rm_graph_preferred(graph: *const RmGraph, out: *mut *mut c_char) -> RmStatus {
    guard(|| {
        let graph = &handle(graph.cast_mut(), "graph")?.0;
        let all: Vec<Vec<String>> = graph.preferred_extensions().iter().map(|e| ordered(graph, e)).collect();
        emit_string(out, json(&all)?)
    })
}

/// The retrieval mode implied by the grounded extension. Fails on an empty graph.
///
/// # Safety
/// `graph` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rm_graph_classify(graph: *const RmGraph, out: *mut RmMode) -> RmStatus {
    guard(|| {
        let graph = &handle(graph.cast_mut(), "graph")?.0;
        let mode = classify_mode(graph, &graph.grounded_extension())
            .map_err(|e| Failure::new(RmStatus::InvalidArgument, e))?;
        emit(
            out,
            match mode {
                RetrievalMode::Selection => RmMode::Selection,
                RetrievalMode::Composition {
                    detail: CompositionKind::Complementary,
                } => RmMode::CompositionComplementary,
                RetrievalMode::Composition {
                    detail: CompositionKind::Filtered,
                } => RmMode::CompositionFiltered,
                RetrievalMode::Surfacing => RmMode::Surfacing,
            },
        )
    })
}

/// The graph in AF text.
///
/// # Safety
/// `graph` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rm_graph_serialize(graph: *const RmGraph, out: *mut *mut c_char) -> RmStatus {
    guard(|| {
        let graph = &handle(graph.cast_mut(), "graph")?.0;
        emit_string(out, serialize_af(graph))
    })
}

/// The graph in DOT, grounded members highlighted. `name` may be null.
///
/// # Safety
/// `graph` must be a live handle; `name` null or NUL-terminated; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rm_graph_dot(graph: *const RmGraph, name: *const c_char, out: *mut *mut c_char) -> RmStatus {
    guard(|| {
        let graph = &handle(graph.cast_mut(), "graph")?.0;
        let name = if name.is_null() { "af" } else { text(name, "name")? };
        emit_string(out, render_dot(name, graph, &graph.grounded_extension(), &Names::new()))
    })
}

/// Loads a scenario file and stages its observations. With `logical_clock`
/// non-zero, time is deterministic.
///
/// # Safety
/// `path` must be NUL-terminated; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rm_session_open(
    path: *const c_char,
    logical_clock: bool,
    out: *mut *mut RmSession,
) -> RmStatus {
    guard(|| {
        let scenario = ScenarioFile::load(text(path, "path")?).map_err(|e| Failure::new(RmStatus::Scenario, e))?;
        let clock: Arc<dyn Clock> = if logical_clock {
            Arc::new(LogicalClock::default())
        } else {
            Arc::new(SystemClock)
        };
        let arbiter = scenario
            .build_arbiter(clock)
            .map_err(|e| Failure::new(RmStatus::Scenario, e))?;
        emit(out, Box::into_raw(Box::new(RmSession { scenario, arbiter })))
    })
}

/// # Safety
/// `session` must come from `rm_session_open` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rm_session_free(session: *mut RmSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Runs the encoding cycle over pending observations; writes the report as JSON.
///
/// # Safety
/// `session` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rm_session_encode(session: *mut RmSession, out: *mut *mut c_char) -> RmStatus {
    guard(|| {
        let session = handle(session, "session")?;
        let report = session
            .arbiter
            .run_encoding_cycle()
            .map_err(|e| Failure::new(RmStatus::Scenario, e))?;
        emit_string(out, json(&report)?)
    })
}

/// Runs one of the scenario's queries by id; writes the outcome as JSON.
///
/// # Safety
/// `session` must be a live handle; `query_id` NUL-terminated; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rm_session_query(
    session: *mut RmSession,
    query_id: *const c_char,
    out: *mut *mut c_char,
) -> RmStatus {
    guard(|| {
        let session = handle(session, "session")?;
        let id = text(query_id, "query_id")?;
        let ctx = session
            .scenario
            .query(id)
            .cloned()
            .ok_or_else(|| Failure::new(RmStatus::InvalidArgument, format!("unknown query `{id}`")))?;
        let result = session
            .arbiter
            .run_query(&ctx)
            .map_err(|e| Failure::new(RmStatus::Query, e))?;
        emit_string(out, json(&result)?)
    })
}
