//! Partitioned-coupling laboratory.
//!
//! Couples two black-box nonlinear sub-solvers through a Dirichlet-Neumann
//! Gauss-Seidel loop, with a controllable Newton-iteration budget per solver
//! call. The crate provides:
//!
//! - [`coupling`] - the outer time loop and the coupling iteration, with dual
//!   convergence criteria (single-field residuals and interface-change).
//! - [`newton`] - a resumable damped-Newton kernel with budget semantics.
//! - [`accel`] - interface-update strategies: constant under-relaxation,
//!   Aitken dynamic relaxation, and interface quasi-Newton least squares
//!   (IQN-ILS) with time-step data reuse.
//! - [`policy`] - budget policies mapping coupling state to per-call Newton
//!   allowances: fixed grids, Nk-CC, and converged-interface-data.
//! - [`models`] - two deterministic model coupled problems with an
//!   interaction-strength knob and a monolithic verification oracle.
//! - [`bench`] - sweep harness, CSV tables, optimum detection, and SVG
//!   heatmaps.
//!
//! The central accounting quantity is the total number of Newton iterations
//! across both sub-solvers, not the number of coupling iterations; see
//! [`ledger::CostModel`].

pub mod accel;
pub mod bench;
pub mod convergence;
pub mod coupling;
pub mod error;
pub mod field;
pub mod ledger;
pub mod models;
pub mod newton;
pub mod policy;
pub mod solver;

pub use convergence::{coupling_converged, CouplingTolerances};
pub use coupling::{run_coupled, run_time_step, RunReport, StepOutcome, TimeLoopConfig};
pub use error::{Error, Result};
pub use field::{relative_change, FieldRole, InterfaceField};
pub use ledger::{estimate_cost, CostModel, IterationLedger};
pub use newton::{newton_solve, FnSystem, NewtonBudget, NewtonResult, NewtonSystem};
pub use policy::{budgets_for_call, update_policy_state, BudgetPolicy, BudgetSpec, PolicyState};
pub use solver::{monolithic_solve, SolverCallReport, StackedSystem, SubSolver};
