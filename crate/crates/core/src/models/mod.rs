//! Model coupled problems exposing the black-box sub-solver contract.
//!
//! Both models come with a monolithic oracle: a Newton solve of the stacked
//! two-field system used as ground truth for the partitioned fixed point.

pub mod mp1;
pub mod mp2;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::coupling::TimeLoopConfig;
use crate::error::Result;
use crate::field::InterfaceField;
use crate::solver::SubSolver;

pub use mp1::{Mp1Params, Mp1Problem};
pub use mp2::{Mp2Params, Mp2Problem};

/// Problem selection and parameters (configuration side).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Mp1(Mp1Params),
    Mp2(Mp2Params),
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemSpec::Mp1(p) => p.validate(),
            ProblemSpec::Mp2(p) => p.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Mp1(_) => "mp1",
            ProblemSpec::Mp2(_) => "mp2",
        }
    }
}

/// The black-box pair (sub-solver A, sub-solver B) plus a monolithic oracle.
#[allow(clippy::large_enum_variant)]
pub enum CoupledProblem {
    Mp1(Mp1Problem),
    Mp2(Mp2Problem),
}

impl CoupledProblem {
    /// Builds a fresh problem instance at its initial time level.
    pub fn build(spec: &ProblemSpec, time: &TimeLoopConfig) -> Result<Self> {
        Ok(match spec {
            ProblemSpec::Mp1(p) => CoupledProblem::Mp1(Mp1Problem::new(p.clone())?),
            ProblemSpec::Mp2(p) => CoupledProblem::Mp2(Mp2Problem::new(*p, time.dt)?),
        })
    }

    /// The black-box pair: (A, traction-producer; B, displacement-producer).
    pub fn solvers_mut(&mut self) -> (&mut dyn SubSolver, &mut dyn SubSolver) {
        match self {
            CoupledProblem::Mp1(p) => (&mut p.a, &mut p.b),
            CoupledProblem::Mp2(p) => (&mut p.a, &mut p.b),
        }
    }

    /// Interface fields before the first time step.
    pub fn initial_fields(&self) -> (InterfaceField, InterfaceField) {
        match self {
            CoupledProblem::Mp1(p) => p.initial_fields(),
            CoupledProblem::Mp2(p) => p.initial_fields(),
        }
    }

    /// Stacked residual of the coupled step at interface state (d, t); zero
    /// exactly at the coupled fixed point. Does not disturb the run state.
    pub fn stacked_residual(
        &self,
        d: &InterfaceField,
        t: &InterfaceField,
    ) -> Result<DVector<f64>> {
        match self {
            CoupledProblem::Mp1(p) => p.stacked_residual(d, t),
            CoupledProblem::Mp2(p) => p.stacked_residual(d, t),
        }
    }

    /// Advances the monolithic oracle by one time step and returns the
    /// coupled fixed point's (displacement-like, traction-like) fields.
    ///
    /// The oracle carries its own trajectory, independent of the partitioned
    /// pair, so a run can be compared against it step by step.
    pub fn monolithic_step(
        &mut self,
        eps: f64,
        cap: usize,
    ) -> Result<(InterfaceField, InterfaceField)> {
        match self {
            CoupledProblem::Mp1(p) => p.monolithic_step(eps, cap),
            CoupledProblem::Mp2(p) => p.monolithic_step(eps, cap),
        }
    }

    /// Scale of the forcing/boundary data, used in residual bounds.
    pub fn forcing_scale(&self) -> f64 {
        match self {
            CoupledProblem::Mp1(p) => p.forcing_scale(),
            CoupledProblem::Mp2(p) => p.forcing_scale(),
        }
    }

    /// Recommended residual tolerance for [`CoupledProblem::monolithic_step`],
    /// scale-aware for the transmission model.
    pub fn oracle_eps(&self) -> f64 {
        match self {
            CoupledProblem::Mp1(p) => p.oracle_eps(),
            CoupledProblem::Mp2(p) => p.oracle_eps(),
        }
    }
}
