//! Newton-budget policies: how many Newton iterations each solver call gets.
//!
//! Three families:
//!
//! - **Fixed per call**: a constant `(n_a, n_b)` grid cell, either finite or
//!   "iterate to single-field convergence".
//! - **Nk-CC**: `k` Newton iterations per call while coupling convergence has
//!   not been observed this step; full single-field convergence afterwards.
//!   If the coupling criterion regresses, the budgets switch back.
//! - **Converged interface data (CID)**: per-call Newton loops terminate when
//!   the outgoing coupling data stabilizes below `eps_cid`.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::convergence::CouplingTolerances;
use crate::error::{Error, Result};
use crate::newton::NewtonBudget;

/// A per-call budget value in configs and reports: finite or unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BudgetSpec {
    Finite(usize),
    Unbounded,
}

impl BudgetSpec {
    pub fn to_budget(self) -> NewtonBudget {
        match self {
            BudgetSpec::Finite(n) => NewtonBudget::Finite(n),
            BudgetSpec::Unbounded => NewtonBudget::UntilConverged,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "inf" {
            return Ok(BudgetSpec::Unbounded);
        }
        let n: usize = s
            .parse()
            .map_err(|_| Error::Config(format!("budget value '{s}' is neither a count nor 'inf'")))?;
        if n < 1 {
            return Err(Error::Config("finite budgets must be >= 1".into()));
        }
        Ok(BudgetSpec::Finite(n))
    }
}

impl fmt::Display for BudgetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetSpec::Finite(n) => write!(f, "{n}"),
            BudgetSpec::Unbounded => write!(f, "inf"),
        }
    }
}

impl Serialize for BudgetSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BudgetSpec::Finite(n) => serializer.serialize_u64(*n as u64),
            BudgetSpec::Unbounded => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for BudgetSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct BudgetVisitor;
        impl Visitor<'_> for BudgetVisitor {
            type Value = BudgetSpec;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive integer or the string \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<BudgetSpec, E> {
                if v < 1 {
                    return Err(E::custom("finite budgets must be >= 1"));
                }
                Ok(BudgetSpec::Finite(v as usize))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<BudgetSpec, E> {
                if v < 1 {
                    return Err(E::custom("finite budgets must be >= 1"));
                }
                Ok(BudgetSpec::Finite(v as usize))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<BudgetSpec, E> {
                BudgetSpec::parse(v).map_err(|e| E::custom(e.to_string()))
            }
        }
        deserializer.deserialize_any(BudgetVisitor)
    }
}

fn default_strict_factor() -> f64 {
    1.0
}
fn default_eps_cid() -> f64 {
    1e-4
}

/// Budget policy selection and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BudgetPolicy {
    /// Constant per-call budgets.
    #[serde(rename = "fixed")]
    FixedPerCall { n_a: BudgetSpec, n_b: BudgetSpec },
    /// k iterations per call until coupling convergence, then full
    /// single-field convergence (with switch-back on regression).
    /// `strict_factor` tightens the trigger to `strict_factor * eps_coupling`.
    #[serde(rename = "nk-cc")]
    NkCC {
        k: usize,
        #[serde(default = "default_strict_factor")]
        strict_factor: f64,
    },
    /// Per-call Newton loops stop once the outgoing interface data changes
    /// by less than `eps_cid` between Newton iterates.
    #[serde(rename = "cid")]
    ConvergedInterfaceData {
        #[serde(default = "default_eps_cid")]
        eps_cid: f64,
    },
}

impl BudgetPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BudgetPolicy::FixedPerCall { n_a, n_b } => {
                for v in [n_a, n_b] {
                    if let BudgetSpec::Finite(n) = v {
                        if n < 1 {
                            return Err(Error::Config("policy budgets must be >= 1".into()));
                        }
                    }
                }
            }
            BudgetPolicy::NkCC { k, strict_factor } => {
                if k < 1 {
                    return Err(Error::Config("policy.k must be >= 1".into()));
                }
                if strict_factor.is_nan() || strict_factor <= 0.0 || strict_factor > 1.0 {
                    return Err(Error::Config("policy.strict_factor must be in (0, 1]".into()));
                }
            }
            BudgetPolicy::ConvergedInterfaceData { eps_cid } => {
                if eps_cid.is_nan() || eps_cid <= 0.0 {
                    return Err(Error::Config("policy.eps_cid must be > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Report/CSV label; fixed budgets are labelled by their grid cell.
    pub fn label(&self) -> String {
        match self {
            BudgetPolicy::FixedPerCall { n_a, n_b } => format!("fixed({n_a},{n_b})"),
            BudgetPolicy::NkCC { k, .. } => format!("N{k}-CC"),
            BudgetPolicy::ConvergedInterfaceData { .. } => "CID".to_string(),
        }
    }
}

/// Per-step policy memory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PolicyState {
    /// Coupling convergence has been observed in this time step.
    pub cc_reached: bool,
    /// An observed regression forced the budgets back to the finite phase.
    pub switched_back: bool,
}

impl PolicyState {
    /// State at the start of a time step.
    pub fn new_step() -> Self {
        Self::default()
    }
}

/// Budgets for the next pair of solver calls.
pub fn budgets_for_call(policy: &BudgetPolicy, state: &PolicyState) -> (NewtonBudget, NewtonBudget) {
    match *policy {
        BudgetPolicy::FixedPerCall { n_a, n_b } => (n_a.to_budget(), n_b.to_budget()),
        BudgetPolicy::NkCC { k, .. } => {
            if state.cc_reached {
                (NewtonBudget::UntilConverged, NewtonBudget::UntilConverged)
            } else {
                (NewtonBudget::Finite(k), NewtonBudget::Finite(k))
            }
        }
        BudgetPolicy::ConvergedInterfaceData { eps_cid } => (
            NewtonBudget::UntilOutputStable { eps_cid },
            NewtonBudget::UntilOutputStable { eps_cid },
        ),
    }
}

/// Folds this iteration's relative changes into the policy state. Called once
/// per coupling iteration, after the convergence evaluation.
pub fn update_policy_state(
    policy: &BudgetPolicy,
    state: &PolicyState,
    last_changes: (f64, f64),
    tol: &CouplingTolerances,
) -> PolicyState {
    let strict = match policy {
        BudgetPolicy::NkCC { strict_factor, .. } => *strict_factor,
        _ => 1.0,
    };
    let (a, b) = last_changes;
    let mut next = *state;
    if state.cc_reached && (a >= tol.eps_coupling || b >= tol.eps_coupling) {
        next.cc_reached = false;
        next.switched_back = true;
    } else if a < strict * tol.eps_coupling && b < strict * tol.eps_coupling {
        next.cc_reached = true;
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> CouplingTolerances {
        CouplingTolerances::default()
    }

    #[test]
    fn nkcc_issues_finite_budgets_before_coupling_convergence() {
        let policy = BudgetPolicy::NkCC {
            k: 1,
            strict_factor: 1.0,
        };
        let state = PolicyState::new_step();
        let (a, b) = budgets_for_call(&policy, &state);
        assert_eq!(a, NewtonBudget::Finite(1));
        assert_eq!(b, NewtonBudget::Finite(1));
    }

    #[test]
    fn nkcc_switches_to_full_convergence_after_cc() {
        let policy = BudgetPolicy::NkCC {
            k: 1,
            strict_factor: 1.0,
        };
        let state = PolicyState {
            cc_reached: true,
            switched_back: false,
        };
        let (a, b) = budgets_for_call(&policy, &state);
        assert_eq!(a, NewtonBudget::UntilConverged);
        assert_eq!(b, NewtonBudget::UntilConverged);
    }

    #[test]
    fn fixed_budgets_pass_through() {
        let policy = BudgetPolicy::FixedPerCall {
            n_a: BudgetSpec::Finite(2),
            n_b: BudgetSpec::Finite(3),
        };
        let (a, b) = budgets_for_call(&policy, &PolicyState::new_step());
        assert_eq!(a, NewtonBudget::Finite(2));
        assert_eq!(b, NewtonBudget::Finite(3));
    }

    #[test]
    fn cid_issues_output_stability_budgets() {
        let policy = BudgetPolicy::ConvergedInterfaceData { eps_cid: 1e-4 };
        let (a, b) = budgets_for_call(&policy, &PolicyState::new_step());
        assert_eq!(a, NewtonBudget::UntilOutputStable { eps_cid: 1e-4 });
        assert_eq!(b, NewtonBudget::UntilOutputStable { eps_cid: 1e-4 });
    }

    #[test]
    fn zero_changes_set_cc_reached() {
        let policy = BudgetPolicy::NkCC {
            k: 1,
            strict_factor: 1.0,
        };
        let next = update_policy_state(&policy, &PolicyState::new_step(), (0.0, 0.0), &tol());
        assert!(next.cc_reached);
        assert!(!next.switched_back);
    }

    #[test]
    fn regression_switches_back() {
        let policy = BudgetPolicy::NkCC {
            k: 1,
            strict_factor: 1.0,
        };
        let state = PolicyState {
            cc_reached: true,
            switched_back: false,
        };
        let t = tol();
        let next = update_policy_state(&policy, &state, (2.0 * t.eps_coupling, 0.0), &t);
        assert!(!next.cc_reached);
        assert!(next.switched_back);
    }

    #[test]
    fn strict_factor_tightens_the_trigger() {
        let policy = BudgetPolicy::NkCC {
            k: 1,
            strict_factor: 0.1,
        };
        let t = tol();
        let half = 0.5 * t.eps_coupling;
        let next = update_policy_state(&policy, &PolicyState::new_step(), (half, half), &t);
        assert!(!next.cc_reached, "0.5*eps does not satisfy 0.1*eps");
        let tiny = 0.05 * t.eps_coupling;
        let next = update_policy_state(&policy, &PolicyState::new_step(), (tiny, tiny), &t);
        assert!(next.cc_reached);
    }

    #[test]
    fn nkcc_budget_phases_are_exclusive() {
        // before cc: never unbounded; after cc (no switch-back): never finite
        let policy = BudgetPolicy::NkCC {
            k: 3,
            strict_factor: 1.0,
        };
        let before = budgets_for_call(&policy, &PolicyState::new_step());
        assert!(matches!(before, (NewtonBudget::Finite(3), NewtonBudget::Finite(3))));
        let after = budgets_for_call(
            &policy,
            &PolicyState {
                cc_reached: true,
                switched_back: false,
            },
        );
        assert!(matches!(
            after,
            (NewtonBudget::UntilConverged, NewtonBudget::UntilConverged)
        ));
    }

    #[test]
    fn budget_spec_round_trips_through_json() {
        let specs = vec![BudgetSpec::Finite(4), BudgetSpec::Unbounded];
        let json = serde_json::to_string(&specs).unwrap();
        assert_eq!(json, "[4,\"inf\"]");
        let back: Vec<BudgetSpec> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, specs);
    }
}
