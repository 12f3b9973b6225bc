//! C ABI for the sketchim library.
//!
//! Handles are opaque; every function returns a status code and the last
//! error message is kept per thread. Strings returned by this library must
//! be released with [`sketchim_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use sketchim::graph::{load_graph, CsrGraph, ParseOptions, WeightModel};
use sketchim::hashing::{EdgeHashCache, SimulationSet};
use sketchim::oracle::{oracle_influence, OracleConfig};
use sketchim::seeder::{select_seeds, ErrorPolicy, SeedResult};
use sketchim::{Error, ExecMode};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchimStatus {
    Ok = 0,
    NullArgument = 1,
    Validation = 2,
    Io = 3,
    Parse = 4,
    Panic = 5,
}

/// Opaque graph handle.
pub struct SketchimGraph {
    graph: CsrGraph,
    hashes: EdgeHashCache,
}

/// Opaque seed-selection result handle.
pub struct SketchimResult {
    result: SeedResult,
    /// Seeds mapped back to the input file's vertex IDs.
    original_seeds: Vec<u64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &Error) -> SketchimStatus {
    match err {
        Error::Parse { .. } => SketchimStatus::Parse,
        Error::Io(_) => SketchimStatus::Io,
        Error::Validation(_) => SketchimStatus::Validation,
    }
}

fn guard(f: impl FnOnce() -> SketchimStatus) -> SketchimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic in sketchim".into());
            set_error(&msg);
            SketchimStatus::Panic
        }
    }
}

/// Message describing the current thread's most recent error. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sketchim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Loads an edge-list file into a graph handle.
///
/// `weights` uses the same syntax as the CLI: "const:<w>", "wc", or "raw".
/// On success `*out` owns the graph; release it with [`sketchim_graph_free`].
///
/// # Safety
/// `path` and `weights` must be valid NUL-terminated strings and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sketchim_graph_load(
    path: *const c_char,
    directed: bool,
    weights: *const c_char,
    out: *mut *mut SketchimGraph,
) -> SketchimStatus {
    if path.is_null() || weights.is_null() || out.is_null() {
        set_error("null argument");
        return SketchimStatus::NullArgument;
    }
    guard(|| {
        let path = match CStr::from_ptr(path).to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("path is not valid UTF-8");
                return SketchimStatus::Validation;
            }
        };
        let weights = match CStr::from_ptr(weights).to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("weight model is not valid UTF-8");
                return SketchimStatus::Validation;
            }
        };
        let model: WeightModel = match weights.parse() {
            Ok(m) => m,
            Err(e) => {
                set_error(&format!("{e}"));
                return SketchimStatus::Validation;
            }
        };
        let loaded = File::open(path).map_err(Error::from).and_then(|f| {
            load_graph(
                BufReader::new(f),
                &ParseOptions { directed, ..Default::default() },
                model,
            )
        });
        match loaded {
            Ok(graph) => {
                let hashes = EdgeHashCache::build(&graph);
                *out = Box::into_raw(Box::new(SketchimGraph { graph, hashes }));
                SketchimStatus::Ok
            }
            Err(e) => {
                set_error(&format!("{e}"));
                status_of(&e)
            }
        }
    })
}

/// Releases a graph handle. Passing NULL is a no-op.
///
/// # Safety
/// `graph` must come from [`sketchim_graph_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sketchim_graph_free(graph: *mut SketchimGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Number of vertices, 0 for NULL.
///
/// # Safety
/// `graph` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sketchim_graph_vertex_count(graph: *const SketchimGraph) -> u64 {
    graph.as_ref().map_or(0, |g| g.graph.n as u64)
}

/// Number of directed edges, 0 for NULL.
///
/// # Safety
/// `graph` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sketchim_graph_edge_count(graph: *const SketchimGraph) -> u64 {
    graph.as_ref().map_or(0, |g| g.graph.m as u64)
}

/// Runs sketch-based seed selection. Negative epsilon values select the
/// defaults (0.3, 0.01, 0.02). On success `*out` owns the result; release
/// it with [`sketchim_result_free`].
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sketchim_select(
    graph: *const SketchimGraph,
    k: u64,
    registers_per_vertex: u64,
    eps_l: f64,
    eps_g: f64,
    eps_c: f64,
    master_seed: u64,
    relaxed: bool,
    out: *mut *mut SketchimResult,
) -> SketchimStatus {
    if graph.is_null() || out.is_null() {
        set_error("null argument");
        return SketchimStatus::NullArgument;
    }
    let handle = &*graph;
    guard(|| {
        let defaults = ErrorPolicy::default();
        let policy = ErrorPolicy {
            eps_l: if eps_l < 0.0 { defaults.eps_l } else { eps_l },
            eps_g: if eps_g < 0.0 { defaults.eps_g } else { eps_g },
            eps_c: if eps_c < 0.0 { defaults.eps_c } else { eps_c },
        };
        let mode = if relaxed { ExecMode::Relaxed } else { ExecMode::Strict };
        let selected = SimulationSet::new(registers_per_vertex as usize, master_seed)
            .and_then(|sims| {
                select_seeds(&handle.graph, &handle.hashes, k as usize, &sims, &policy, mode)
            });
        match selected {
            Ok(result) => {
                let original_seeds = result
                    .seeds
                    .iter()
                    .map(|&v| handle.graph.original_ids[v as usize])
                    .collect();
                *out = Box::into_raw(Box::new(SketchimResult { result, original_seeds }));
                SketchimStatus::Ok
            }
            Err(e) => {
                set_error(&format!("{e}"));
                status_of(&e)
            }
        }
    })
}

/// Releases a result handle. Passing NULL is a no-op.
///
/// # Safety
/// `result` must come from [`sketchim_select`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sketchim_result_free(result: *mut SketchimResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of selected seeds, 0 for NULL.
///
/// # Safety
/// `result` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sketchim_result_seed_count(result: *const SketchimResult) -> u64 {
    result.as_ref().map_or(0, |r| r.original_seeds.len() as u64)
}

/// Seed at `index` in selection order, as the input file's vertex ID.
///
/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sketchim_result_seed(
    result: *const SketchimResult,
    index: u64,
    out: *mut u64,
) -> SketchimStatus {
    if result.is_null() || out.is_null() {
        set_error("null argument");
        return SketchimStatus::NullArgument;
    }
    match (&(*result).original_seeds).get(index as usize) {
        Some(&seed) => {
            *out = seed;
            SketchimStatus::Ok
        }
        None => {
            set_error("seed index out of range");
            SketchimStatus::Validation
        }
    }
}

/// Mean per-simulation reach of the final seed set, 0 for NULL.
///
/// # Safety
/// `result` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sketchim_result_sigma_final(result: *const SketchimResult) -> f64 {
    result.as_ref().map_or(0.0, |r| r.result.sigma_final)
}

/// Number of sketch rebuilds during selection, 0 for NULL.
///
/// # Safety
/// `result` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sketchim_result_rebuild_count(result: *const SketchimResult) -> u64 {
    result.as_ref().map_or(0, |r| r.result.rebuild_count() as u64)
}

/// Serializes the result (original-ID seeds, per-step log, sigma) to a JSON
/// string owned by the caller; free it with [`sketchim_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sketchim_result_to_json(
    result: *const SketchimResult,
    out: *mut *mut c_char,
) -> SketchimStatus {
    if result.is_null() || out.is_null() {
        set_error("null argument");
        return SketchimStatus::NullArgument;
    }
    let r = &*result;
    guard(|| {
        let value = serde_json::json!({
            "seeds": r.original_seeds,
            "steps": r.result.steps,
            "sigma_final": r.result.sigma_final,
        });
        let json = serde_json::to_string(&value).expect("result serialization");
        *out = CString::new(json).expect("no NUL in JSON").into_raw();
        SketchimStatus::Ok
    })
}

/// Releases a string returned by this library. Passing NULL is a no-op.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sketchim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Scores a seed set with the independent Monte-Carlo oracle. `seeds` holds
/// `seed_count` vertex IDs as used in the input file.
///
/// # Safety
/// `graph` must be a live handle, `seeds` must point to `seed_count` IDs,
/// and the two out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sketchim_oracle_influence(
    graph: *const SketchimGraph,
    seeds: *const u64,
    seed_count: u64,
    rounds: u32,
    rng_seed: u64,
    out_mean: *mut f64,
    out_stderr: *mut f64,
) -> SketchimStatus {
    if graph.is_null()
        || (seeds.is_null() && seed_count > 0)
        || out_mean.is_null()
        || out_stderr.is_null()
    {
        set_error("null argument");
        return SketchimStatus::NullArgument;
    }
    let handle = &*graph;
    let ids = std::slice::from_raw_parts(seeds, seed_count as usize);
    guard(|| {
        let mut compact = Vec::with_capacity(ids.len());
        for &id in ids {
            match handle.graph.compact_id(id) {
                Some(v) => compact.push(v),
                None => {
                    set_error(&format!("unknown vertex ID {id}"));
                    return SketchimStatus::Validation;
                }
            }
        }
        let config = OracleConfig { rounds, rng_seed };
        match oracle_influence(&handle.graph, &compact, &config) {
            Ok(score) => {
                *out_mean = score.mean;
                *out_stderr = score.stderr;
                SketchimStatus::Ok
            }
            Err(e) => {
                set_error(&format!("{e}"));
                status_of(&e)
            }
        }
    })
}
