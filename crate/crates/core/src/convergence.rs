//! Dual convergence criteria for the coupled iteration.
//!
//! A time step is accepted only when (1) every sub-solver's own residual is
//! below `eps_problem` (single-field convergence) and (2) the relative change
//! of every sub-solver's output across one coupling iteration is below
//! `eps_coupling` (coupling convergence). Both must hold simultaneously.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DEFAULT_RELATIVE_FLOOR;

/// Tolerance bundle for a coupled run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingTolerances {
    /// Bound on the relative interface change per coupling iteration.
    pub eps_coupling: f64,
    /// Bound on each subproblem's own residual norm.
    pub eps_problem: f64,
    /// Output-stability bound; only the converged-interface-data policy
    /// consults it.
    pub eps_cid: f64,
    /// Denominator floor for relative-change measurements.
    pub relative_floor: f64,
}

impl Default for CouplingTolerances {
    fn default() -> Self {
        Self {
            eps_coupling: 1e-5,
            eps_problem: 1e-10,
            eps_cid: 1e-4,
            relative_floor: DEFAULT_RELATIVE_FLOOR,
        }
    }
}

impl CouplingTolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tolerances.eps_coupling", self.eps_coupling),
            ("tolerances.eps_problem", self.eps_problem),
            ("tolerances.eps_cid", self.eps_cid),
            ("tolerances.relative_floor", self.relative_floor),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be a finite value > 0")));
            }
        }
        Ok(())
    }
}

/// Coupling convergence: both sub-solver outputs stayed virtually unchanged
/// within one coupling iteration (strict inequality on both).
pub fn coupling_converged(change_a: f64, change_b: f64, tol: &CouplingTolerances) -> bool {
    change_a < tol.eps_coupling && change_b < tol.eps_coupling
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_changes_converge() {
        let tol = CouplingTolerances::default();
        assert!(coupling_converged(0.0, 0.0, &tol));
    }

    #[test]
    fn one_field_over_the_bound_blocks_convergence() {
        let tol = CouplingTolerances::default();
        assert!(!coupling_converged(1e-6, 2e-5, &tol));
    }

    #[test]
    fn strictly_below_on_both_converges() {
        let tol = CouplingTolerances::default();
        assert!(coupling_converged(9.9e-6, 9.9e-6, &tol));
        // boundary value is not "lower than"
        assert!(!coupling_converged(1e-5, 0.0, &tol));
    }

    #[test]
    fn validation_rejects_nonpositive_tolerances() {
        let tol = CouplingTolerances {
            eps_problem: 0.0,
            ..CouplingTolerances::default()
        };
        assert!(tol.validate().is_err());
    }
}
