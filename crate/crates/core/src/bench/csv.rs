//! CSV emission and parsing for sweep results.
//!
//! Schema (exact header, `inf` sentinel for unbounded budgets, empty policy
//! column for fixed cells and empty budget columns for policy rows):
//!
//! ```text
//! n_f,n_s,policy,coupling_iters,newton_f,newton_s,newton_total,cost,converged,wall_s
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::coupling::RunReport;
use crate::error::{Error, Result};
use crate::policy::BudgetSpec;

use super::sweep::SweepResultRow;

pub const CSV_HEADER: &str =
    "n_f,n_s,policy,coupling_iters,newton_f,newton_s,newton_total,cost,converged,wall_s";

fn budget_cell(b: &Option<BudgetSpec>) -> String {
    b.map(|v| v.to_string()).unwrap_or_default()
}

/// Renders rows to the CSV schema; the final line is newline-terminated.
pub fn render_csv(rows: &[SweepResultRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            budget_cell(&row.n_a),
            budget_cell(&row.n_b),
            row.policy.as_deref().unwrap_or(""),
            row.coupling_iters,
            row.newton_a,
            row.newton_b,
            row.newton_total,
            row.cost,
            row.converged,
            row.wall_s,
        );
    }
    out
}

pub fn write_csv(rows: &[SweepResultRow], path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(rows)).map_err(|e| Error::io(path, e))
}

fn parse_budget_cell(s: &str) -> Result<Option<BudgetSpec>> {
    if s.is_empty() {
        return Ok(None);
    }
    BudgetSpec::parse(s).map(Some)
}

fn parse_row(line_no: usize, line: &str) -> Result<SweepResultRow> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 10 {
        return Err(Error::CsvParse(format!(
            "line {line_no}: expected 10 fields, got {}",
            fields.len()
        )));
    }
    let num = |idx: usize, name: &str| -> Result<usize> {
        fields[idx]
            .parse()
            .map_err(|_| Error::CsvParse(format!("line {line_no}: bad {name} '{}'", fields[idx])))
    };
    let real = |idx: usize, name: &str| -> Result<f64> {
        fields[idx]
            .parse()
            .map_err(|_| Error::CsvParse(format!("line {line_no}: bad {name} '{}'", fields[idx])))
    };
    Ok(SweepResultRow {
        n_a: parse_budget_cell(fields[0])?,
        n_b: parse_budget_cell(fields[1])?,
        policy: if fields[2].is_empty() {
            None
        } else {
            Some(fields[2].to_string())
        },
        coupling_iters: num(3, "coupling_iters")?,
        newton_a: num(4, "newton_f")?,
        newton_b: num(5, "newton_s")?,
        newton_total: num(6, "newton_total")?,
        cost: real(7, "cost")?,
        converged: match fields[8] {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::CsvParse(format!(
                    "line {line_no}: bad converged flag '{other}'"
                )))
            }
        },
        wall_s: real(9, "wall_s")?,
    })
}

/// Parses CSV text in the sweep schema back into rows.
pub fn parse_csv(text: &str) -> Result<Vec<SweepResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        Some(header) => {
            return Err(Error::CsvParse(format!(
                "unexpected header '{header}'"
            )))
        }
        None => return Err(Error::CsvParse("empty file".into())),
    }
    lines
        .enumerate()
        .map(|(i, line)| parse_row(i + 2, line))
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

/// Verbose per-step breakdown of a single run:
/// `step,iteration,newton_f,newton_s,change_f,change_s`.
pub fn render_step_csv(report: &RunReport) -> String {
    let mut out = String::from("step,iteration,newton_f,newton_s,change_f,change_s\n");
    for (step_idx, step) in report.ledger.steps().iter().enumerate() {
        for (iter_idx, rec) in step.iterations.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                step_idx,
                iter_idx + 1,
                rec.newton_iters_a,
                rec.newton_iters_b,
                rec.coupling_change_a,
                rec.coupling_change_b,
            );
        }
    }
    out
}

pub fn write_step_csv(report: &RunReport, path: &Path) -> Result<()> {
    std::fs::write(path, render_step_csv(report)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<SweepResultRow> {
        vec![
            SweepResultRow {
                n_a: Some(BudgetSpec::Finite(1)),
                n_b: Some(BudgetSpec::Unbounded),
                policy: None,
                coupling_iters: 617,
                newton_a: 617,
                newton_b: 567,
                newton_total: 1184,
                cost: 1184.0,
                converged: true,
                wall_s: 0.0,
            },
            SweepResultRow {
                n_a: None,
                n_b: None,
                policy: Some("N1-CC".to_string()),
                coupling_iters: 417,
                newton_a: 528,
                newton_b: 417,
                newton_total: 945,
                cost: 945.25,
                converged: false,
                wall_s: 1.5,
            },
        ]
    }

    #[test]
    fn empty_rows_give_a_header_only_file() {
        let text = render_csv(&[]);
        assert_eq!(text, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn single_fixed_row_renders_two_lines_with_empty_policy() {
        let rows = &sample_rows()[..1];
        let text = render_csv(rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "1,inf,,617,617,567,1184,1184,true,0");
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn round_trip_reproduces_rows_exactly() {
        let rows = sample_rows();
        let text = render_csv(&rows);
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(matches!(
            parse_csv("nope\n1,1,,1,1,1,2,2,true,0\n"),
            Err(Error::CsvParse(_))
        ));
    }
}
