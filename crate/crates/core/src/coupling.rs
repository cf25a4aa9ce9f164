//! The outer time loop and the Gauss-Seidel coupling iteration.
//!
//! Per coupling iteration: sub-solver A consumes the displacement-analog
//! field under its budget and produces the traction-analog field, which is
//! handed to sub-solver B; B's displacement-analog output is passed through
//! the accelerator to form the next iterate. A time step is accepted when
//! both relative interface changes are below `eps_coupling` *and* both
//! sub-solvers report single-field convergence. The first coupling iteration
//! of a step never satisfies convergence: changes are only meaningful against
//! a previous iterate, so at least one confirming iteration is required.
//!
//! The first iteration of each step starts from the previous step's converged
//! interface fields (zero-order predictor).

use serde::{Deserialize, Serialize};

use crate::accel::AcceleratorState;
use crate::convergence::{coupling_converged, CouplingTolerances};
use crate::error::{Error, Result};
use crate::field::{relative_change, InterfaceField};
use crate::ledger::{CouplingIterationRecord, IterationLedger};
use crate::models::CoupledProblem;
use crate::policy::{budgets_for_call, update_policy_state, BudgetPolicy, PolicyState};

/// Time-loop parameters and safety caps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeLoopConfig {
    pub dt: f64,
    pub n_steps: usize,
    /// Cap on coupling iterations per time step.
    pub max_coupling_iters: usize,
    /// Cap on Newton iterations per solver call (bounds unbounded budgets).
    pub max_newton_per_call: usize,
}

impl Default for TimeLoopConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            n_steps: 50,
            max_coupling_iters: 200,
            max_newton_per_call: 50,
        }
    }
}

impl TimeLoopConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::Config("time.dt must be a finite value > 0".into()));
        }
        if self.n_steps < 1 {
            return Err(Error::Config("time.n_steps must be >= 1".into()));
        }
        if self.max_coupling_iters < 1 {
            return Err(Error::Config("time.max_coupling_iters must be >= 1".into()));
        }
        if self.max_newton_per_call < 1 {
            return Err(Error::Config("time.max_newton_per_call must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of one accepted time step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Coupling iterations this step took.
    pub coupling_iters: usize,
    /// B's raw output at convergence (committed displacement-analog field).
    pub displacement: InterfaceField,
    /// A's raw output at convergence (committed traction-analog field).
    pub traction: InterfaceField,
    /// Norm of the coupled stacked residual at the final iterate, when the
    /// run was asked to verify it (evaluated before the commit).
    pub stacked_residual_norm: Option<f64>,
}

/// Advances the coupled problem by one time step.
///
/// On success both sub-solvers have committed the time level. Hitting
/// `max_coupling_iters` yields [`Error::CouplingDidNotConverge`] carrying the
/// ledger recorded so far.
#[allow(clippy::too_many_arguments)]
pub fn run_time_step(
    problem: &mut CoupledProblem,
    policy: &BudgetPolicy,
    accel: &mut AcceleratorState,
    tol: &CouplingTolerances,
    time: &TimeLoopConfig,
    predictor: (&InterfaceField, &InterfaceField),
    ledger: &mut IterationLedger,
    step_index: usize,
    verify_stacked_residual: bool,
) -> Result<StepOutcome> {
    let mut x_disp = predictor.0.clone();
    let mut t_prev = predictor.1.clone();
    let mut x_tilde_prev = predictor.0.clone();
    let mut policy_state = PolicyState::new_step();

    ledger.open_step();

    for k in 1..=time.max_coupling_iters {
        let (budget_a, budget_b) = budgets_for_call(policy, &policy_state);

        let (rep_a, rep_b) = {
            let (a, b) = problem.solvers_mut();
            a.set_input(&x_disp)?;
            let rep_a = a.solve_call(budget_a, tol.eps_problem, time.max_newton_per_call)?;
            b.set_input(&rep_a.output)?;
            let rep_b = b.solve_call(budget_b, tol.eps_problem, time.max_newton_per_call)?;
            (rep_a, rep_b)
        };

        // Coupling changes are measured on raw solver outputs, before any
        // acceleration.
        let change_a = relative_change(&t_prev, &rep_a.output, tol.relative_floor)?;
        let change_b = relative_change(&x_tilde_prev, &rep_b.output, tol.relative_floor)?;

        let x_next = accel.update(&x_disp, &rep_b.output)?;

        ledger.record(CouplingIterationRecord {
            newton_iters_a: rep_a.newton_iters,
            newton_iters_b: rep_b.newton_iters,
            coupling_change_a: change_a,
            coupling_change_b: change_b,
        });
        policy_state = update_policy_state(policy, &policy_state, (change_a, change_b), tol);

        let converged = k >= 2
            && coupling_converged(change_a, change_b, tol)
            && rep_a.single_field_converged
            && rep_b.single_field_converged;

        if converged {
            let stacked_residual_norm = if verify_stacked_residual {
                Some(
                    problem
                        .stacked_residual(&rep_b.output, &rep_a.output)?
                        .norm(),
                )
            } else {
                None
            };
            let (a, b) = problem.solvers_mut();
            a.commit_step();
            b.commit_step();
            accel.advance_step();
            ledger.mark_step_converged();
            return Ok(StepOutcome {
                coupling_iters: k,
                displacement: rep_b.output,
                traction: rep_a.output,
                stacked_residual_norm,
            });
        }

        t_prev = rep_a.output;
        x_tilde_prev = rep_b.output;
        x_disp = x_next;
    }

    Err(Error::CouplingDidNotConverge {
        step: step_index,
        max_iters: time.max_coupling_iters,
        ledger: Box::new(ledger.clone()),
    })
}

/// A finished coupled run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub ledger: IterationLedger,
    pub steps: Vec<StepOutcome>,
}

/// Options for [`run_coupled`].
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Evaluate the coupled stacked residual at each converged step (costs
    /// extra sub-solves on the transmission model; off by default).
    pub verify_stacked_residual: bool,
}

/// Runs all time steps, keeping whatever the ledger recorded when a step
/// fails. The report is complete on `None`, partial otherwise.
pub fn run_coupled_partial(
    problem: &mut CoupledProblem,
    policy: &BudgetPolicy,
    accel_spec: &crate::accel::Accelerator,
    tol: &CouplingTolerances,
    time: &TimeLoopConfig,
    options: RunOptions,
) -> (RunReport, Option<Error>) {
    let mut accel = AcceleratorState::new(accel_spec);
    let mut ledger = IterationLedger::new();
    let mut steps = Vec::with_capacity(time.n_steps);
    let (mut disp, mut trac) = problem.initial_fields();

    for step in 0..time.n_steps {
        match run_time_step(
            problem,
            policy,
            &mut accel,
            tol,
            time,
            (&disp, &trac),
            &mut ledger,
            step,
            options.verify_stacked_residual,
        ) {
            Ok(outcome) => {
                disp = outcome.displacement.clone();
                trac = outcome.traction.clone();
                steps.push(outcome);
            }
            Err(err) => {
                return (RunReport { ledger, steps }, Some(err));
            }
        }
    }

    (RunReport { ledger, steps }, None)
}

/// Runs all time steps of a coupled problem under one policy/accelerator.
pub fn run_coupled(
    problem: &mut CoupledProblem,
    policy: &BudgetPolicy,
    accel_spec: &crate::accel::Accelerator,
    tol: &CouplingTolerances,
    time: &TimeLoopConfig,
    options: RunOptions,
) -> Result<RunReport> {
    let (report, err) = run_coupled_partial(problem, policy, accel_spec, tol, time, options);
    match err {
        Some(e) => Err(e),
        None => Ok(report),
    }
}
