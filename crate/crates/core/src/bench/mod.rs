//! Experiment harness: config ingestion, budget-grid sweeps, CSV tables,
//! optimum detection, and heatmap emission.

pub mod config;
pub mod csv;
pub mod heatmap;
pub mod optima;
pub mod sweep;

pub use config::{load_config, parse_config, GridSpec, SweepConfig};
pub use csv::{
    parse_csv, read_csv, render_csv, render_step_csv, write_csv, write_step_csv, CSV_HEADER,
};
pub use heatmap::{emit_heatmap, render_heatmap, HeatmapMetric};
pub use optima::{find_optima, OptimaSummary};
pub use sweep::{run_sweep, SweepResultRow};
