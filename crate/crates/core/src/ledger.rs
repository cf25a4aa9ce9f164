//! Iteration accounting and the cost model.
//!
//! The ledger records, per time step and per coupling iteration, how many
//! Newton iterations each sub-solver ran. Total simulation cost is estimated
//! as
//!
//! ```text
//! cost = n_coupling * cost_transfer
//!      + newton_a_total * cost_newton_a
//!      + newton_b_total * cost_newton_b
//! ```
//!
//! With zero transfer cost and unit Newton costs this reduces to the total
//! Newton iteration count, the main efficiency measure used throughout.

use serde::{Deserialize, Serialize};

/// One coupling iteration's worth of accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingIterationRecord {
    pub newton_iters_a: usize,
    pub newton_iters_b: usize,
    pub coupling_change_a: f64,
    pub coupling_change_b: f64,
}

/// Per time step record: the coupling iterations it took, and whether the
/// step reached the dual convergence criteria.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepLedger {
    pub iterations: Vec<CouplingIterationRecord>,
    pub converged: bool,
}

/// Full-run iteration ledger with running totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLedger {
    steps: Vec<StepLedger>,
    n_coupling: usize,
    newton_a_total: usize,
    newton_b_total: usize,
}

impl IterationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens accounting for the next time step.
    pub fn open_step(&mut self) {
        self.steps.push(StepLedger::default());
    }

    /// Records one coupling iteration in the currently open step.
    pub fn record(&mut self, rec: CouplingIterationRecord) {
        let step = self
            .steps
            .last_mut()
            .expect("open_step must be called before record");
        step.iterations.push(rec);
        self.n_coupling += 1;
        self.newton_a_total += rec.newton_iters_a;
        self.newton_b_total += rec.newton_iters_b;
    }

    /// Marks the currently open step as converged.
    pub fn mark_step_converged(&mut self) {
        if let Some(step) = self.steps.last_mut() {
            step.converged = true;
        }
    }

    pub fn steps(&self) -> &[StepLedger] {
        &self.steps
    }

    pub fn n_coupling(&self) -> usize {
        self.n_coupling
    }

    pub fn newton_a_total(&self) -> usize {
        self.newton_a_total
    }

    pub fn newton_b_total(&self) -> usize {
        self.newton_b_total
    }

    pub fn newton_total(&self) -> usize {
        self.newton_a_total + self.newton_b_total
    }

    pub fn converged_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.converged).count()
    }

    /// Coupling iterations of the most recently opened step.
    pub fn current_step_iterations(&self) -> usize {
        self.steps.last().map_or(0, |s| s.iterations.len())
    }
}

/// Relative costs of data transfer and of one Newton iteration per solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub cost_transfer: f64,
    pub cost_newton_a: f64,
    pub cost_newton_b: f64,
}

impl Default for CostModel {
    /// Unit Newton costs, free transfer: cost equals the total Newton count.
    fn default() -> Self {
        Self {
            cost_transfer: 0.0,
            cost_newton_a: 1.0,
            cost_newton_b: 1.0,
        }
    }
}

/// Estimated cost of a finished run under the given cost model.
pub fn estimate_cost(ledger: &IterationLedger, model: &CostModel) -> f64 {
    ledger.n_coupling() as f64 * model.cost_transfer
        + ledger.newton_a_total() as f64 * model.cost_newton_a
        + ledger.newton_b_total() as f64 * model.cost_newton_b
}
