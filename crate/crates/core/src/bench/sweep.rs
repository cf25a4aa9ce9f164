//! The (n_a, n_b) grid sweep plus adaptive-policy comparison runs.

use std::time::Instant;

use rayon::prelude::*;

use crate::coupling::{run_coupled_partial, RunOptions};
use crate::error::Result;
use crate::ledger::estimate_cost;
use crate::models::CoupledProblem;
use crate::policy::{BudgetPolicy, BudgetSpec};

use super::config::SweepConfig;

/// One sweep row: either a fixed-budget grid cell (budgets set, policy empty)
/// or an adaptive policy (policy label set, budgets empty).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResultRow {
    pub n_a: Option<BudgetSpec>,
    pub n_b: Option<BudgetSpec>,
    pub policy: Option<String>,
    pub coupling_iters: usize,
    pub newton_a: usize,
    pub newton_b: usize,
    pub newton_total: usize,
    pub cost: f64,
    pub converged: bool,
    pub wall_s: f64,
}

impl SweepResultRow {
    pub fn is_fixed_cell(&self) -> bool {
        self.n_a.is_some() && self.n_b.is_some()
    }
}

enum CellSpec {
    Fixed(BudgetSpec, BudgetSpec),
    Policy(BudgetPolicy),
}

fn run_cell(config: &SweepConfig, cell: &CellSpec) -> Result<SweepResultRow> {
    let policy = match cell {
        CellSpec::Fixed(n_a, n_b) => BudgetPolicy::FixedPerCall {
            n_a: *n_a,
            n_b: *n_b,
        },
        CellSpec::Policy(p) => *p,
    };
    let mut problem = CoupledProblem::build(&config.problem, &config.time)?;
    let started = Instant::now();
    let (report, failure) = run_coupled_partial(
        &mut problem,
        &policy,
        &config.accelerator,
        &config.tolerances,
        &config.time,
        RunOptions::default(),
    );
    let wall_s = if config.record_walltime {
        started.elapsed().as_secs_f64()
    } else {
        0.0
    };

    let ledger = &report.ledger;
    let (n_a, n_b, policy_label) = match cell {
        CellSpec::Fixed(n_a, n_b) => (Some(*n_a), Some(*n_b), None),
        CellSpec::Policy(p) => (None, None, Some(p.label())),
    };
    Ok(SweepResultRow {
        n_a,
        n_b,
        policy: policy_label,
        coupling_iters: ledger.n_coupling(),
        newton_a: ledger.newton_a_total(),
        newton_b: ledger.newton_b_total(),
        newton_total: ledger.newton_total(),
        cost: estimate_cost(ledger, &config.cost_model),
        converged: failure.is_none(),
        wall_s,
    })
}

/// Runs every grid cell (row-major over n_a then n_b) and every policy, one
/// fresh problem instance each. Cells run in parallel; row order is
/// deterministic. Non-convergence is recorded in the row, never aborts the
/// sweep; solver errors other than non-convergence likewise flag the row.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepResultRow>> {
    config.validate()?;
    let mut cells = Vec::with_capacity(config.grid.cell_count() + config.policies.len());
    for n_a in &config.grid.n_a {
        for n_b in &config.grid.n_b {
            cells.push(CellSpec::Fixed(*n_a, *n_b));
        }
    }
    for policy in &config.policies {
        cells.push(CellSpec::Policy(*policy));
    }

    cells
        .par_iter()
        .map(|cell| run_cell(config, cell))
        .collect::<Result<Vec<_>>>()
}
