//! C ABI for the coupling laboratory.
//!
//! Configs and sweep results live behind opaque handles; every fallible call
//! returns a status code (or a null pointer) and stores a message readable
//! via [`couplab_last_error`]. Strings cross the boundary as NUL-terminated
//! UTF-8; returned string pointers are borrowed and stay valid as long as
//! the handle (or, for the error message, until the next failing call on the
//! same thread).
//!
//! The generated header lives at `include/couplab.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use couplab::bench::{
    load_config, parse_config, run_sweep, write_csv, HeatmapMetric, SweepConfig, SweepResultRow,
};
use couplab::policy::BudgetSpec;

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplabStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    SolverError = 4,
    IoError = 5,
    IndexOutOfRange = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &couplab::Error) -> CouplabStatus {
    match err {
        couplab::Error::Config(_) => CouplabStatus::ConfigError,
        couplab::Error::Io { .. } => CouplabStatus::IoError,
        couplab::Error::CsvParse(_) => CouplabStatus::ConfigError,
        couplab::Error::InvalidArgument(_) | couplab::Error::IncompleteGrid { .. } => {
            CouplabStatus::ConfigError
        }
        _ => CouplabStatus::SolverError,
    }
}

/// Opaque validated sweep configuration.
pub struct CouplabConfig {
    inner: SweepConfig,
}

/// Opaque sweep result set.
pub struct CouplabSweep {
    rows: Vec<SweepResultRow>,
    policy_labels: Vec<CString>,
}

/// One sweep row in C layout. Budget sentinels: -1 encodes the unbounded
/// budget, -2 marks a policy row (budget columns empty).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CouplabRow {
    pub n_f: i64,
    pub n_s: i64,
    pub coupling_iters: u64,
    pub newton_f: u64,
    pub newton_s: u64,
    pub newton_total: u64,
    pub cost: f64,
    pub converged: u8,
    pub wall_s: f64,
}

/// Sentinel for unbounded budgets in [`CouplabRow`].
pub const COUPLAB_BUDGET_UNBOUNDED: i64 = -1;
/// Sentinel marking policy rows in [`CouplabRow`].
pub const COUPLAB_BUDGET_POLICY_ROW: i64 = -2;

fn budget_to_i64(b: &Option<BudgetSpec>) -> i64 {
    match b {
        Some(BudgetSpec::Finite(n)) => *n as i64,
        Some(BudgetSpec::Unbounded) => COUPLAB_BUDGET_UNBOUNDED,
        None => COUPLAB_BUDGET_POLICY_ROW,
    }
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, CouplabStatus> {
    if ptr.is_null() {
        set_error(&format!("{name} must not be null"));
        return Err(CouplabStatus::NullArgument);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_error(&format!("{name} is not valid UTF-8"));
            Err(CouplabStatus::InvalidUtf8)
        }
    }
}

/// Returns the message of the last error on this thread (borrowed; valid
/// until the next failing call). Empty string when no error occurred yet.
#[no_mangle]
pub extern "C" fn couplab_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn couplab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses and validates a JSON configuration. Returns null on error.
///
/// # Safety
/// `json` must be a valid NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn couplab_config_parse(json: *const c_char) -> *mut CouplabConfig {
    let text = match unsafe { cstr_arg(json, "json") } {
        Ok(s) => s,
        Err(_) => return ptr::null_mut(),
    };
    match parse_config(text) {
        Ok(inner) => Box::into_raw(Box::new(CouplabConfig { inner })),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Loads and validates a JSON configuration file. Returns null on error.
///
/// # Safety
/// `path` must be a valid NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn couplab_config_load(path: *const c_char) -> *mut CouplabConfig {
    let path = match unsafe { cstr_arg(path, "path") } {
        Ok(s) => s,
        Err(_) => return ptr::null_mut(),
    };
    match load_config(Path::new(path)) {
        Ok(inner) => Box::into_raw(Box::new(CouplabConfig { inner })),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Frees a configuration handle. Null is a no-op.
///
/// # Safety
/// `config` must have come from `couplab_config_parse`/`couplab_config_load`
/// and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn couplab_config_free(config: *mut CouplabConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Runs the full sweep described by the config. Returns null on error; rows
/// for stalled cells are flagged, not omitted, so a non-null result may still
/// contain non-converged rows.
///
/// # Safety
/// `config` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn couplab_sweep_run(config: *const CouplabConfig) -> *mut CouplabSweep {
    if config.is_null() {
        set_error("config must not be null");
        return ptr::null_mut();
    }
    let config = unsafe { &*config };
    match run_sweep(&config.inner) {
        Ok(rows) => {
            let policy_labels = rows
                .iter()
                .map(|r| CString::new(r.policy.clone().unwrap_or_default()).unwrap_or_default())
                .collect();
            Box::into_raw(Box::new(CouplabSweep {
                rows,
                policy_labels,
            }))
        }
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Frees a sweep handle. Null is a no-op.
///
/// # Safety
/// `sweep` must have come from `couplab_sweep_run` and must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn couplab_sweep_free(sweep: *mut CouplabSweep) {
    if !sweep.is_null() {
        drop(unsafe { Box::from_raw(sweep) });
    }
}

/// Number of rows in the sweep (grid cells first, then policies).
///
/// # Safety
/// `sweep` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn couplab_sweep_len(sweep: *const CouplabSweep) -> usize {
    if sweep.is_null() {
        return 0;
    }
    unsafe { &*sweep }.rows.len()
}

/// Copies row `index` into `out`.
///
/// # Safety
/// `sweep` must be a live handle; `out` must point to writable memory for one
/// `CouplabRow`.
#[no_mangle]
pub unsafe extern "C" fn couplab_sweep_row(
    sweep: *const CouplabSweep,
    index: usize,
    out: *mut CouplabRow,
) -> CouplabStatus {
    if sweep.is_null() || out.is_null() {
        set_error("sweep and out must not be null");
        return CouplabStatus::NullArgument;
    }
    let sweep = unsafe { &*sweep };
    let Some(row) = sweep.rows.get(index) else {
        set_error(&format!(
            "row index {index} out of range ({} rows)",
            sweep.rows.len()
        ));
        return CouplabStatus::IndexOutOfRange;
    };
    unsafe {
        *out = CouplabRow {
            n_f: budget_to_i64(&row.n_a),
            n_s: budget_to_i64(&row.n_b),
            coupling_iters: row.coupling_iters as u64,
            newton_f: row.newton_a as u64,
            newton_s: row.newton_b as u64,
            newton_total: row.newton_total as u64,
            cost: row.cost,
            converged: row.converged as u8,
            wall_s: row.wall_s,
        };
    }
    CouplabStatus::Ok
}

/// Policy label of row `index` (empty string for fixed-budget cells).
/// Borrowed; valid while the sweep handle lives. Null when out of range.
///
/// # Safety
/// `sweep` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn couplab_sweep_row_policy(
    sweep: *const CouplabSweep,
    index: usize,
) -> *const c_char {
    if sweep.is_null() {
        return ptr::null();
    }
    let sweep = unsafe { &*sweep };
    match sweep.policy_labels.get(index) {
        Some(label) => label.as_ptr(),
        None => ptr::null(),
    }
}

/// Writes the sweep as CSV (schema documented in the core crate).
///
/// # Safety
/// `sweep` must be a live handle; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn couplab_sweep_write_csv(
    sweep: *const CouplabSweep,
    path: *const c_char,
) -> CouplabStatus {
    if sweep.is_null() {
        set_error("sweep must not be null");
        return CouplabStatus::NullArgument;
    }
    let path = match unsafe { cstr_arg(path, "path") } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let sweep = unsafe { &*sweep };
    match write_csv(&sweep.rows, Path::new(path)) {
        Ok(()) => CouplabStatus::Ok,
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Renders the fixed-budget cells as an SVG heatmap.
/// `metric` is one of "coupling", "newton", "cost".
///
/// # Safety
/// `sweep` must be a live handle; `metric` and `path` valid NUL-terminated
/// strings.
#[no_mangle]
pub unsafe extern "C" fn couplab_sweep_write_heatmap(
    sweep: *const CouplabSweep,
    metric: *const c_char,
    path: *const c_char,
) -> CouplabStatus {
    if sweep.is_null() {
        set_error("sweep must not be null");
        return CouplabStatus::NullArgument;
    }
    let metric = match unsafe { cstr_arg(metric, "metric") } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let path = match unsafe { cstr_arg(path, "path") } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let metric = match HeatmapMetric::parse(metric) {
        Ok(m) => m,
        Err(e) => {
            set_error(&e.to_string());
            return CouplabStatus::ConfigError;
        }
    };
    let sweep = unsafe { &*sweep };
    match couplab::bench::emit_heatmap(&sweep.rows, metric, Path::new(path)) {
        Ok(()) => CouplabStatus::Ok,
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}
