//! Round trips through the C ABI from Rust.

use std::ffi::{CStr, CString};

use couplab_capi::*;

const CONFIG: &str = r#"{
    "problem": { "type": "mp1", "mu": 0.1 },
    "time": { "n_steps": 2 },
    "grid": { "n_a": [1, "inf"], "n_b": [1] },
    "policies": [ { "type": "nk-cc", "k": 1 } ]
}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(couplab_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn parse_sweep_read_rows_and_write_csv() {
    let json = CString::new(CONFIG).unwrap();
    let config = unsafe { couplab_config_parse(json.as_ptr()) };
    assert!(!config.is_null(), "{}", last_error());

    let sweep = unsafe { couplab_sweep_run(config) };
    assert!(!sweep.is_null(), "{}", last_error());
    assert_eq!(unsafe { couplab_sweep_len(sweep) }, 3);

    let mut row = CouplabRow {
        n_f: 0,
        n_s: 0,
        coupling_iters: 0,
        newton_f: 0,
        newton_s: 0,
        newton_total: 0,
        cost: 0.0,
        converged: 0,
        wall_s: 0.0,
    };
    assert_eq!(
        unsafe { couplab_sweep_row(sweep, 0, &mut row) },
        CouplabStatus::Ok
    );
    assert_eq!(row.n_f, 1);
    assert_eq!(row.n_s, 1);
    assert_eq!(row.converged, 1);
    assert_eq!(row.newton_total, row.newton_f + row.newton_s);

    assert_eq!(
        unsafe { couplab_sweep_row(sweep, 1, &mut row) },
        CouplabStatus::Ok
    );
    assert_eq!(row.n_f, COUPLAB_BUDGET_UNBOUNDED);

    // policy row: budgets are sentinels, label round-trips
    assert_eq!(
        unsafe { couplab_sweep_row(sweep, 2, &mut row) },
        CouplabStatus::Ok
    );
    assert_eq!(row.n_f, COUPLAB_BUDGET_POLICY_ROW);
    let label = unsafe { CStr::from_ptr(couplab_sweep_row_policy(sweep, 2)) };
    assert_eq!(label.to_str().unwrap(), "N1-CC");
    let empty = unsafe { CStr::from_ptr(couplab_sweep_row_policy(sweep, 0)) };
    assert_eq!(empty.to_str().unwrap(), "");

    assert_eq!(
        unsafe { couplab_sweep_row(sweep, 99, &mut row) },
        CouplabStatus::IndexOutOfRange
    );

    let dir = tempfile_dir();
    let csv_path = CString::new(dir.join("out.csv").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { couplab_sweep_write_csv(sweep, csv_path.as_ptr()) },
        CouplabStatus::Ok
    );
    let text = std::fs::read_to_string(dir.join("out.csv")).unwrap();
    assert!(text.starts_with("n_f,n_s,policy,"));

    let svg_path = CString::new(dir.join("heat.svg").to_str().unwrap()).unwrap();
    let metric = CString::new("newton").unwrap();
    assert_eq!(
        unsafe { couplab_sweep_write_heatmap(sweep, metric.as_ptr(), svg_path.as_ptr()) },
        CouplabStatus::Ok
    );

    unsafe {
        couplab_sweep_free(sweep);
        couplab_config_free(config);
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn errors_set_messages_and_statuses() {
    // malformed JSON
    let bad = CString::new("{ nope").unwrap();
    let config = unsafe { couplab_config_parse(bad.as_ptr()) };
    assert!(config.is_null());
    assert!(!last_error().is_empty());

    // validation failure names the field
    let invalid = CString::new(r#"{ "problem": { "type": "mp1", "m": 0 } }"#).unwrap();
    let config = unsafe { couplab_config_parse(invalid.as_ptr()) };
    assert!(config.is_null());
    assert!(last_error().contains("problem.m"), "{}", last_error());

    // null arguments
    let config = unsafe { couplab_config_parse(std::ptr::null()) };
    assert!(config.is_null());
    let sweep = unsafe { couplab_sweep_run(std::ptr::null()) };
    assert!(sweep.is_null());
    assert_eq!(unsafe { couplab_sweep_len(std::ptr::null()) }, 0);

    // version string is well-formed
    let version = unsafe { CStr::from_ptr(couplab_version()) };
    assert!(!version.to_str().unwrap().is_empty());
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("couplab-capi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
