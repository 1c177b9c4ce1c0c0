//! C ABI over the fgn library: opaque graph handles, integer error codes,
//! JSON strings for configs and results. The generated header lives at
//! `include/fgn.h`.
//!
//! Conventions: functions return `FGN_OK` (0) on success or a nonzero code
//! (1 invalid argument, 2 data format, 3 numerical failure, 4 null/encoding
//! problem, 5 internal panic); on failure a thread-local message is
//! retrievable with `fgn_last_error_message`. Strings returned through
//! `char **` out-parameters are owned by the caller and must be released
//! with `fgn_string_free`. Graph handles must be released with
//! `fgn_graph_free`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fgn::harness::{
    evaluate, metrics_document, run_many, sweep_document, sweep_memory, ExperimentConfig, RunMode,
};
use fgn::model::load_params;
use fgn::{AttributeGraph, FgnError};

pub const FGN_OK: c_int = 0;
pub const FGN_ERR_INVALID_ARGUMENT: c_int = 1;
pub const FGN_ERR_FORMAT: c_int = 2;
pub const FGN_ERR_NUMERICAL: c_int = 3;
pub const FGN_ERR_POINTER: c_int = 4;
pub const FGN_ERR_INTERNAL: c_int = 5;

/// Opaque handle to a loaded, immutable attribute graph.
pub struct FgnGraph {
    inner: AttributeGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let cstring = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn code_of(err: &FgnError) -> c_int {
    match err.exit_code() {
        1 => FGN_ERR_INVALID_ARGUMENT,
        2 => FGN_ERR_FORMAT,
        _ => FGN_ERR_NUMERICAL,
    }
}

/// Runs `body` behind the unwind boundary, storing any error message.
fn guarded(body: impl FnOnce() -> Result<(), (c_int, String)>) -> c_int {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FGN_OK,
        Ok(Err((code, message))) => {
            set_error(message);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            FGN_ERR_INTERNAL
        }
    }
}

unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, (c_int, String)> {
    if ptr.is_null() {
        return Err((FGN_ERR_POINTER, format!("{name} is null")));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| (FGN_ERR_POINTER, format!("{name} is not valid UTF-8")))
}

fn open_reader(path: &str) -> Result<BufReader<File>, (c_int, String)> {
    File::open(Path::new(path))
        .map(BufReader::new)
        .map_err(|e| (FGN_ERR_FORMAT, format!("cannot open {path}: {e}")))
}

fn emit_string(out: *mut *mut c_char, text: String) -> Result<(), (c_int, String)> {
    if out.is_null() {
        return Err((FGN_ERR_POINTER, "output pointer is null".into()));
    }
    let cstring =
        CString::new(text).map_err(|_| (FGN_ERR_INTERNAL, "result contained a NUL byte".into()))?;
    unsafe { *out = cstring.into_raw() };
    Ok(())
}

fn emit_graph(out: *mut *mut FgnGraph, graph: AttributeGraph) -> Result<(), (c_int, String)> {
    if out.is_null() {
        return Err((FGN_ERR_POINTER, "output pointer is null".into()));
    }
    unsafe { *out = Box::into_raw(Box::new(FgnGraph { inner: graph })) };
    Ok(())
}

unsafe fn graph_arg<'a>(graph: *const FgnGraph) -> Result<&'a AttributeGraph, (c_int, String)> {
    if graph.is_null() {
        return Err((FGN_ERR_POINTER, "graph handle is null".into()));
    }
    Ok(unsafe { &(*graph).inner })
}

fn parse_config(json: &str) -> Result<ExperimentConfig, (c_int, String)> {
    let config: ExperimentConfig = serde_json::from_str(json)
        .map_err(|e| (FGN_ERR_INVALID_ARGUMENT, format!("config json: {e}")))?;
    config.validate().map_err(|e| (FGN_ERR_INVALID_ARGUMENT, e.to_string()))?;
    Ok(config)
}

fn resolved_config_value(config: &ExperimentConfig, mode: &str) -> serde_json::Value {
    let mut value = serde_json::to_value(config).expect("config serializes");
    if let Some(obj) = value.as_object_mut() {
        obj.insert("mode".into(), serde_json::json!(mode));
    }
    value
}

/// Last error message for this thread, or NULL when the previous call
/// succeeded. The pointer stays valid until the next API call on the thread.
#[no_mangle]
pub extern "C" fn fgn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.as_ptr(),
        None => ptr::null(),
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be a string returned by this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn fgn_string_free(s: *mut c_char) {
    if !s.is_null() {
        unsafe { drop(CString::from_raw(s)) };
    }
}

/// Loads a classic content/cites dataset.
///
/// # Safety
/// `content_path` and `cites_path` must be valid NUL-terminated strings and
/// `out_graph` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fgn_graph_load_classic(
    content_path: *const c_char,
    cites_path: *const c_char,
    out_graph: *mut *mut FgnGraph,
) -> c_int {
    guarded(|| {
        let content = unsafe { str_arg(content_path, "content_path")? };
        let cites = unsafe { str_arg(cites_path, "cites_path")? };
        let graph = fgn::graph::load_classic(open_reader(content)?, open_reader(cites)?)
            .map_err(|e| (code_of(&e), e.to_string()))?;
        emit_graph(out_graph, graph)
    })
}

/// Loads a canonical JSON-lines dataset.
///
/// # Safety
/// `nodes_path` and `edges_path` must be valid NUL-terminated strings and
/// `out_graph` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fgn_graph_load_canonical(
    nodes_path: *const c_char,
    edges_path: *const c_char,
    out_graph: *mut *mut FgnGraph,
) -> c_int {
    guarded(|| {
        let nodes = unsafe { str_arg(nodes_path, "nodes_path")? };
        let edges = unsafe { str_arg(edges_path, "edges_path")? };
        let graph = fgn::graph::load_canonical(open_reader(nodes)?, open_reader(edges)?)
            .map_err(|e| (code_of(&e), e.to_string()))?;
        emit_graph(out_graph, graph)
    })
}

/// Releases a graph handle.
///
/// # Safety
/// `graph` must be a handle returned by a load function, or NULL.
#[no_mangle]
pub unsafe extern "C" fn fgn_graph_free(graph: *mut FgnGraph) {
    if !graph.is_null() {
        unsafe { drop(Box::from_raw(graph)) };
    }
}

/// Node count, or -1 if the handle is NULL.
///
/// # Safety
/// `graph` must be a valid handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn fgn_graph_num_nodes(graph: *const FgnGraph) -> i64 {
    match unsafe { graph_arg(graph) } {
        Ok(g) => g.num_nodes() as i64,
        Err(_) => -1,
    }
}

/// Feature dimension F, or -1 if the handle is NULL.
///
/// # Safety
/// `graph` must be a valid handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn fgn_graph_feature_dim(graph: *const FgnGraph) -> i64 {
    match unsafe { graph_arg(graph) } {
        Ok(g) => g.feature_dim() as i64,
        Err(_) => -1,
    }
}

/// Class count, or -1 if the handle is NULL.
///
/// # Safety
/// `graph` must be a valid handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn fgn_graph_class_count(graph: *const FgnGraph) -> i64 {
    match unsafe { graph_arg(graph) } {
        Ok(g) => g.class_count() as i64,
        Err(_) => -1,
    }
}

fn train(
    graph: *const FgnGraph,
    config_json: *const c_char,
    out_json: *mut *mut c_char,
    mode: RunMode,
) -> c_int {
    guarded(|| {
        let graph = unsafe { graph_arg(graph)? };
        let config = parse_config(unsafe { str_arg(config_json, "config_json")? })?;
        let result = run_many(graph, &config, mode).map_err(|e| (code_of(&e), e.to_string()))?;
        let label = match mode {
            RunMode::Lifelong => "lifelong",
            RunMode::Offline => "offline",
        };
        let doc = metrics_document(&resolved_config_value(&config, label), &result);
        emit_string(out_json, doc.to_string())
    })
}

/// Lifelong training over the continuum described by `config_json` (an
/// experiment-config object; omitted fields take their defaults). On success
/// writes the metrics JSON document to `out_json`.
///
/// # Safety
/// `graph` must be a valid handle; `config_json` a valid NUL-terminated
/// string; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fgn_train_lifelong(
    graph: *const FgnGraph,
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> c_int {
    train(graph, config_json, out_json, RunMode::Lifelong)
}

/// Offline (upper bound) training; otherwise as `fgn_train_lifelong`.
///
/// # Safety
/// Same contract as `fgn_train_lifelong`.
#[no_mangle]
pub unsafe extern "C" fn fgn_train_offline(
    graph: *const FgnGraph,
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> c_int {
    train(graph, config_json, out_json, RunMode::Offline)
}

/// Lifelong training across `sizes` memory capacities with paired seeds;
/// writes one metrics document per size as a JSON array.
///
/// # Safety
/// `graph` must be a valid handle; `config_json` a valid NUL-terminated
/// string; `sizes` must point to `sizes_len` readable entries; `out_json`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fgn_sweep_memory(
    graph: *const FgnGraph,
    config_json: *const c_char,
    sizes: *const u64,
    sizes_len: usize,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let graph = unsafe { graph_arg(graph)? };
        let config = parse_config(unsafe { str_arg(config_json, "config_json")? })?;
        if sizes.is_null() || sizes_len == 0 {
            return Err((FGN_ERR_INVALID_ARGUMENT, "sizes must be non-empty".into()));
        }
        let sizes: Vec<usize> = unsafe { std::slice::from_raw_parts(sizes, sizes_len) }
            .iter()
            .map(|&s| s as usize)
            .collect();
        let results =
            sweep_memory(graph, &config, &sizes).map_err(|e| (code_of(&e), e.to_string()))?;
        let doc = sweep_document(&resolved_config_value(&config, "lifelong"), &results);
        emit_string(out_json, doc.to_string())
    })
}

/// Evaluates a saved parameter checkpoint on the test split that a run with
/// this config and `seed` would use. Writes `{"accuracy", "per_class_accuracy"}`.
///
/// # Safety
/// `graph` must be a valid handle; `checkpoint_path` and `config_json` valid
/// NUL-terminated strings; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fgn_evaluate_checkpoint(
    graph: *const FgnGraph,
    checkpoint_path: *const c_char,
    config_json: *const c_char,
    seed: u64,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let graph = unsafe { graph_arg(graph)? };
        let path = unsafe { str_arg(checkpoint_path, "checkpoint_path")? };
        let config = parse_config(unsafe { str_arg(config_json, "config_json")? })?;
        let params = load_params(open_reader(path)?).map_err(|e| (code_of(&e), e.to_string()))?;
        let split = config.split_for_run(graph, seed).map_err(|e| (code_of(&e), e.to_string()))?;
        let eval = evaluate(&params, graph, &split.test_ids, config.k)
            .map_err(|e| (code_of(&e), e.to_string()))?;
        let doc = serde_json::json!({
            "accuracy": eval.accuracy,
            "per_class_accuracy": eval.per_class,
        });
        emit_string(out_json, doc.to_string())
    })
}
