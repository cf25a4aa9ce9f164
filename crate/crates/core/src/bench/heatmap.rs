//! Static SVG heatmaps over the (n_f, n_s) budget grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::policy::BudgetSpec;

use super::sweep::SweepResultRow;

/// Which column of the sweep results to color by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapMetric {
    Coupling,
    Newton,
    Cost,
}

impl HeatmapMetric {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "coupling" => Ok(HeatmapMetric::Coupling),
            "newton" => Ok(HeatmapMetric::Newton),
            "cost" => Ok(HeatmapMetric::Cost),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric '{other}' (expected coupling|newton|cost)"
            ))),
        }
    }

    fn title(&self) -> &'static str {
        match self {
            HeatmapMetric::Coupling => "Coupling iterations",
            HeatmapMetric::Newton => "Total Newton iterations",
            HeatmapMetric::Cost => "Estimated cost",
        }
    }

    fn value(&self, row: &SweepResultRow) -> f64 {
        match self {
            HeatmapMetric::Coupling => row.coupling_iters as f64,
            HeatmapMetric::Newton => row.newton_total as f64,
            HeatmapMetric::Cost => row.cost,
        }
    }

    fn label(&self, row: &SweepResultRow) -> String {
        let text = match self {
            HeatmapMetric::Coupling => row.coupling_iters.to_string(),
            HeatmapMetric::Newton => row.newton_total.to_string(),
            HeatmapMetric::Cost => format!("{:.6}", row.cost)
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string(),
        };
        if row.converged {
            text
        } else {
            format!("{text}!")
        }
    }
}

// Low values dark, high values bright, so the cheapest cell reads darkest.
const RAMP_LOW: (f64, f64, f64) = (16.0, 10.0, 90.0);
const RAMP_HIGH: (f64, f64, f64) = (252.0, 240.0, 120.0);

fn ramp_color(t: f64) -> (String, bool) {
    let lerp = |lo: f64, hi: f64| (lo + t * (hi - lo)).round() as u8;
    let color = format!(
        "#{:02x}{:02x}{:02x}",
        lerp(RAMP_LOW.0, RAMP_HIGH.0),
        lerp(RAMP_LOW.1, RAMP_HIGH.1),
        lerp(RAMP_LOW.2, RAMP_HIGH.2)
    );
    (color, t < 0.5)
}

/// Renders the grid as a standalone SVG: one colored cell per (n_f, n_s)
/// with a linear color ramp over the metric and numeric labels; the
/// unbounded budget renders as the last row/column. A constant metric
/// degenerates the ramp to its midpoint. Non-converged cells are marked with
/// a trailing `!`.
pub fn render_heatmap(rows: &[SweepResultRow], metric: HeatmapMetric) -> Result<String> {
    let mut grid: BTreeMap<(BudgetSpec, BudgetSpec), &SweepResultRow> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.is_fixed_cell()) {
        grid.insert((row.n_a.unwrap(), row.n_b.unwrap()), row);
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument(
            "no fixed-budget rows to render".into(),
        ));
    }

    let mut n_a_values: Vec<BudgetSpec> = grid.keys().map(|(a, _)| *a).collect();
    let mut n_b_values: Vec<BudgetSpec> = grid.keys().map(|(_, b)| *b).collect();
    n_a_values.sort_unstable();
    n_a_values.dedup();
    n_b_values.sort_unstable();
    n_b_values.dedup();

    let mut missing = Vec::new();
    for a in &n_a_values {
        for b in &n_b_values {
            if !grid.contains_key(&(*a, *b)) {
                missing.push(format!("({a},{b})"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteGrid { missing });
    }

    let values: Vec<f64> = grid.values().map(|r| metric.value(r)).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let cell_w = 86.0;
    let cell_h = 54.0;
    let gap = 3.0;
    let left = 110.0;
    let top = 80.0;
    let width = left + n_b_values.len() as f64 * (cell_w + gap) + 30.0;
    let height = top + n_a_values.len() as f64 * (cell_h + gap) + 40.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{left}\" y=\"28\" font-family=\"monospace\" font-size=\"16\" font-weight=\"bold\">{}</text>",
        metric.title()
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{left}\" y=\"48\" font-family=\"monospace\" font-size=\"12\" fill=\"#444\">rows: N^f (solver A budget), columns: N^s (solver B budget); range [{min}, {max}]</text>"
    );

    for (col, b) in n_b_values.iter().enumerate() {
        let x = left + col as f64 * (cell_w + gap) + cell_w / 2.0;
        let _ = writeln!(
            svg,
            "  <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"13\">N^s={b}</text>",
            top - 10.0
        );
    }

    for (row_idx, a) in n_a_values.iter().enumerate() {
        let y = top + row_idx as f64 * (cell_h + gap);
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"13\">N^f={a}</text>",
            left - 10.0,
            y + cell_h / 2.0 + 4.0
        );
        for (col_idx, b) in n_b_values.iter().enumerate() {
            let cell = grid[&(*a, *b)];
            let v = metric.value(cell);
            let t = if max > min { (v - min) / (max - min) } else { 0.5 };
            let (fill, dark_cell) = ramp_color(t);
            let x = left + col_idx as f64 * (cell_w + gap);
            let _ = writeln!(
                svg,
                "  <rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell_w}\" height=\"{cell_h}\" fill=\"{fill}\" stroke=\"#333\" stroke-width=\"0.5\"/>"
            );
            let text_fill = if dark_cell { "#ffffff" } else { "#111111" };
            let _ = writeln!(
                svg,
                "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\" fill=\"{text_fill}\">{}</text>",
                x + cell_w / 2.0,
                y + cell_h / 2.0 + 5.0,
                metric.label(cell)
            );
        }
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

pub fn emit_heatmap(rows: &[SweepResultRow], metric: HeatmapMetric, path: &Path) -> Result<()> {
    let svg = render_heatmap(rows, metric)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
