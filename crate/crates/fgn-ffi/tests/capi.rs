//! Exercises the C ABI directly from Rust, and (when the cdylib is present)
//! compiles and runs a real C client against the generated header.

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use fgn::synth::{generate, SynthConfig};
use fgn_ffi::*;

fn write_synth_dataset(dir: &Path) -> (CString, CString) {
    let graph = generate(&SynthConfig {
        nodes: 90,
        classes: 3,
        feature_dim: 24,
        features_per_node: 3,
        noise_features: 1,
        edges_per_node: 3,
        homophily: 0.85,
        seed: 77,
    })
    .unwrap();
    let nodes_path = dir.join("g.nodes.jsonl");
    let edges_path = dir.join("g.edges.jsonl");
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    fgn::graph::save_canonical(&graph, &mut nodes, &mut edges).unwrap();
    std::fs::write(&nodes_path, nodes).unwrap();
    std::fs::write(&edges_path, edges).unwrap();
    (
        CString::new(nodes_path.to_str().unwrap()).unwrap(),
        CString::new(edges_path.to_str().unwrap()).unwrap(),
    )
}

fn load_graph(nodes: &CStr, edges: &CStr) -> *mut FgnGraph {
    let mut handle: *mut FgnGraph = ptr::null_mut();
    let code = unsafe { fgn_graph_load_canonical(nodes.as_ptr(), edges.as_ptr(), &mut handle) };
    assert_eq!(code, FGN_OK);
    assert!(!handle.is_null());
    handle
}

fn take_string(raw: *mut std::os::raw::c_char) -> String {
    assert!(!raw.is_null());
    let text = unsafe { CStr::from_ptr(raw) }.to_str().unwrap().to_string();
    unsafe { fgn_string_free(raw) };
    text
}

fn last_error() -> String {
    let ptr = fgn_last_error_message();
    assert!(!ptr.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string()
}

const SMALL_CONFIG: &str = r#"{
    "label_rate": 0.5, "runs": 2, "memory": 16, "eval_every": 0,
    "epochs": 5, "train": {"updates_per_sample": 2}
}"#;

#[test]
fn load_inspect_free() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_synth_dataset(dir.path());
    let graph = load_graph(&nodes, &edges);
    unsafe {
        assert_eq!(fgn_graph_num_nodes(graph), 90);
        assert_eq!(fgn_graph_feature_dim(graph), 24);
        assert_eq!(fgn_graph_class_count(graph), 3);
        fgn_graph_free(graph);
    }
    unsafe {
        assert_eq!(fgn_graph_num_nodes(ptr::null()), -1);
        assert_eq!(fgn_graph_feature_dim(ptr::null()), -1);
        assert_eq!(fgn_graph_class_count(ptr::null()), -1);
        fgn_graph_free(ptr::null_mut());
    }
}

#[test]
fn missing_file_reports_format_error() {
    let bad = CString::new("/no/such/file").unwrap();
    let mut handle: *mut FgnGraph = ptr::null_mut();
    let code = unsafe { fgn_graph_load_canonical(bad.as_ptr(), bad.as_ptr(), &mut handle) };
    assert_eq!(code, FGN_ERR_FORMAT);
    assert!(handle.is_null());
    assert!(last_error().contains("cannot open"));
}

#[test]
fn null_arguments_report_pointer_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_synth_dataset(dir.path());
    let mut handle: *mut FgnGraph = ptr::null_mut();
    let code =
        unsafe { fgn_graph_load_canonical(ptr::null(), edges.as_ptr(), &mut handle) };
    assert_eq!(code, FGN_ERR_POINTER);
    let code =
        unsafe { fgn_graph_load_canonical(nodes.as_ptr(), edges.as_ptr(), ptr::null_mut()) };
    assert_eq!(code, FGN_ERR_POINTER);
    let graph = load_graph(&nodes, &edges);
    let config = CString::new(SMALL_CONFIG).unwrap();
    let code = unsafe { fgn_train_lifelong(graph, config.as_ptr(), ptr::null_mut()) };
    assert_eq!(code, FGN_ERR_POINTER);
    unsafe { fgn_graph_free(graph) };
}

#[test]
fn lifelong_training_returns_metrics_json() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_synth_dataset(dir.path());
    let graph = load_graph(&nodes, &edges);
    let config = CString::new(SMALL_CONFIG).unwrap();
    let mut out: *mut std::os::raw::c_char = ptr::null_mut();
    let code = unsafe { fgn_train_lifelong(graph, config.as_ptr(), &mut out) };
    assert_eq!(code, FGN_OK, "train failed: {}", last_error());
    let doc: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(doc["runs"].as_array().unwrap().len(), 2);
    let mean = doc["aggregate"]["mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&mean));
    // resolved defaults are echoed back
    assert_eq!(doc["config"]["mode"], "lifelong");
    assert_eq!(doc["config"]["train"]["batch_size"], 10);
    unsafe { fgn_graph_free(graph) };
}

#[test]
fn offline_training_and_checkpoint_eval() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_synth_dataset(dir.path());
    let graph = load_graph(&nodes, &edges);
    let config = CString::new(SMALL_CONFIG).unwrap();
    let mut out: *mut std::os::raw::c_char = ptr::null_mut();
    let code = unsafe { fgn_train_offline(graph, config.as_ptr(), &mut out) };
    assert_eq!(code, FGN_OK, "offline failed: {}", last_error());
    take_string(out);

    // write a fresh checkpoint and score it through the C surface
    let params = fgn::model::ModelParams::init(24, 3, &fgn::model::ModelConfig::default(), 1);
    let ckpt_path = dir.path().join("m.ckpt");
    let mut buf = Vec::new();
    fgn::model::save_params(&params, &mut buf).unwrap();
    std::fs::write(&ckpt_path, buf).unwrap();
    let ckpt = CString::new(ckpt_path.to_str().unwrap()).unwrap();
    let mut out: *mut std::os::raw::c_char = ptr::null_mut();
    let code =
        unsafe { fgn_evaluate_checkpoint(graph, ckpt.as_ptr(), config.as_ptr(), 0, &mut out) };
    assert_eq!(code, FGN_OK, "eval failed: {}", last_error());
    let doc: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert!((0.0..=1.0).contains(&doc["accuracy"].as_f64().unwrap()));
    unsafe { fgn_graph_free(graph) };
}

#[test]
fn sweep_returns_one_entry_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_synth_dataset(dir.path());
    let graph = load_graph(&nodes, &edges);
    let config = CString::new(r#"{"label_rate": 0.5, "runs": 1, "eval_every": 0}"#).unwrap();
    let sizes = [0u64, 8];
    let mut out: *mut std::os::raw::c_char = ptr::null_mut();
    let code = unsafe {
        fgn_sweep_memory(graph, config.as_ptr(), sizes.as_ptr(), sizes.len(), &mut out)
    };
    assert_eq!(code, FGN_OK, "sweep failed: {}", last_error());
    let doc: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    let entries = doc.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["memory"], 0);
    assert_eq!(entries[1]["memory"], 8);
    unsafe { fgn_graph_free(graph) };
}

#[test]
fn malformed_config_is_an_invalid_argument() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_synth_dataset(dir.path());
    let graph = load_graph(&nodes, &edges);
    let mut out: *mut std::os::raw::c_char = ptr::null_mut();
    for bad in ["not json", r#"{"label_rate": 2.0}"#, r#"{"runs": 0}"#] {
        let config = CString::new(bad).unwrap();
        let code = unsafe { fgn_train_lifelong(graph, config.as_ptr(), &mut out) };
        assert_eq!(code, FGN_ERR_INVALID_ARGUMENT, "config {bad:?}");
    }
    unsafe { fgn_graph_free(graph) };
}

/// Compiles and runs a real C client against include/fgn.h and the cdylib.
/// Skips (with a message) when the shared library or a C compiler is absent.
#[test]
fn c_client_compiles_and_runs() {
    let target_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/debug");
    let lib = target_dir.join("libfgn_ffi.so");
    if !lib.exists() {
        eprintln!("SKIP c_client: {} not built (run `cargo build -p fgn-ffi`)", lib.display());
        return;
    }
    let cc = ["cc", "clang", "gcc"]
        .iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok());
    let Some(cc) = cc else {
        eprintln!("SKIP c_client: no C compiler found");
        return;
    };

    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_synth_dataset(dir.path());
    let c_source = r#"
#include <stdio.h>
#include <string.h>
#include "fgn.h"

int main(int argc, char** argv) {
    FgnGraph* graph = NULL;
    if (fgn_graph_load_canonical(argv[1], argv[2], &graph) != FGN_OK) {
        fprintf(stderr, "load: %s\n", fgn_last_error_message());
        return 1;
    }
    if (fgn_graph_num_nodes(graph) != 90) return 2;
    char* out = NULL;
    const char* config = "{\"label_rate\": 0.5, \"runs\": 1, \"memory\": 8, \"eval_every\": 0}";
    if (fgn_train_lifelong(graph, config, &out) != FGN_OK) {
        fprintf(stderr, "train: %s\n", fgn_last_error_message());
        return 3;
    }
    if (strstr(out, "\"aggregate\"") == NULL) return 4;
    fgn_string_free(out);
    fgn_graph_free(graph);
    return 0;
}
"#;
    let src = dir.path().join("client.c");
    std::fs::write(&src, c_source).unwrap();
    let exe = dir.path().join("client");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let compile = std::process::Command::new(cc)
        .args([
            src.to_str().unwrap(),
            "-I",
            include.to_str().unwrap(),
            "-L",
            target_dir.to_str().unwrap(),
            "-lfgn_ffi",
            "-o",
            exe.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        compile.status.success(),
        "C compilation failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );
    let run = std::process::Command::new(&exe)
        .args([nodes.to_str().unwrap(), edges.to_str().unwrap()])
        .env("LD_LIBRARY_PATH", &target_dir)
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "C client exited with {:?}:\n{}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
}
