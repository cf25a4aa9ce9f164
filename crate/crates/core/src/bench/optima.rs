//! Optimum detection over sweep rows.

use crate::error::{Error, Result};
use crate::policy::BudgetSpec;

use super::sweep::SweepResultRow;

type Cell = (BudgetSpec, BudgetSpec);

/// Argmin cells and the Pareto front over (coupling iterations, total Newton
/// iterations), computed over converged fixed-budget grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimaSummary {
    pub min_newton_total: usize,
    pub argmin_newton: Vec<Cell>,
    pub min_coupling: usize,
    pub argmin_coupling: Vec<Cell>,
    /// Non-dominated cells as (n_a, n_b, coupling_iters, newton_total), in
    /// row order.
    pub pareto: Vec<(BudgetSpec, BudgetSpec, usize, usize)>,
}

pub fn find_optima(rows: &[SweepResultRow]) -> Result<OptimaSummary> {
    let cells: Vec<&SweepResultRow> = rows
        .iter()
        .filter(|r| r.is_fixed_cell() && r.converged)
        .collect();
    if cells.is_empty() {
        return Err(Error::InvalidArgument(
            "no converged fixed-budget rows to summarize".into(),
        ));
    }
    let cell_of = |r: &SweepResultRow| (r.n_a.unwrap(), r.n_b.unwrap());

    let min_newton_total = cells.iter().map(|r| r.newton_total).min().unwrap();
    let argmin_newton = cells
        .iter()
        .filter(|r| r.newton_total == min_newton_total)
        .map(|r| cell_of(r))
        .collect();

    let min_coupling = cells.iter().map(|r| r.coupling_iters).min().unwrap();
    let argmin_coupling = cells
        .iter()
        .filter(|r| r.coupling_iters == min_coupling)
        .map(|r| cell_of(r))
        .collect();

    let pareto = cells
        .iter()
        .filter(|r| {
            !cells.iter().any(|other| {
                other.coupling_iters <= r.coupling_iters
                    && other.newton_total <= r.newton_total
                    && (other.coupling_iters < r.coupling_iters
                        || other.newton_total < r.newton_total)
            })
        })
        .map(|r| {
            let (a, b) = cell_of(r);
            (a, b, r.coupling_iters, r.newton_total)
        })
        .collect();

    Ok(OptimaSummary {
        min_newton_total,
        argmin_newton,
        min_coupling,
        argmin_coupling,
        pareto,
    })
}
