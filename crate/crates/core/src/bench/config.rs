//! Experiment configuration: JSON in, validated config out.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accel::Accelerator;
use crate::convergence::CouplingTolerances;
use crate::coupling::TimeLoopConfig;
use crate::error::{Error, Result};
use crate::ledger::CostModel;
use crate::models::ProblemSpec;
use crate::policy::{BudgetPolicy, BudgetSpec};

fn default_grid_axis() -> Vec<BudgetSpec> {
    vec![
        BudgetSpec::Finite(1),
        BudgetSpec::Finite(2),
        BudgetSpec::Finite(3),
        BudgetSpec::Finite(4),
        BudgetSpec::Finite(5),
        BudgetSpec::Unbounded,
    ]
}

/// Budget grid: the sweep runs every (n_a, n_b) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n_a: Vec<BudgetSpec>,
    pub n_b: Vec<BudgetSpec>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_a: default_grid_axis(),
            n_b: default_grid_axis(),
        }
    }
}

impl GridSpec {
    pub fn cell_count(&self) -> usize {
        self.n_a.len() * self.n_b.len()
    }
}

fn default_policies() -> Vec<BudgetPolicy> {
    vec![
        BudgetPolicy::NkCC {
            k: 1,
            strict_factor: 1.0,
        },
        BudgetPolicy::NkCC {
            k: 3,
            strict_factor: 1.0,
        },
        BudgetPolicy::ConvergedInterfaceData { eps_cid: 1e-4 },
    ]
}

/// Full sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub accelerator: Accelerator,
    #[serde(default)]
    pub tolerances: CouplingTolerances,
    #[serde(default)]
    pub time: TimeLoopConfig,
    #[serde(default)]
    pub grid: GridSpec,
    /// Adaptive policies appended to the sweep after the grid cells.
    #[serde(default = "default_policies")]
    pub policies: Vec<BudgetPolicy>,
    #[serde(default)]
    pub cost_model: CostModel,
    /// Budgets or policy for the single-case `run` subcommand; defaults to
    /// full per-call convergence.
    #[serde(default)]
    pub run: Option<BudgetPolicy>,
    /// Record real wall-clock times per sweep cell. Off by default so that
    /// repeated sweeps of one config produce byte-identical CSV output.
    #[serde(default)]
    pub record_walltime: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.accelerator.validate()?;
        self.tolerances.validate()?;
        self.time.validate()?;
        if self.grid.n_a.is_empty() || self.grid.n_b.is_empty() {
            return Err(Error::Config(
                "grid.n_a and grid.n_b must each list at least one budget".into(),
            ));
        }
        for policy in &self.policies {
            policy.validate()?;
        }
        if let Some(run) = &self.run {
            run.validate()?;
        }
        Ok(())
    }

    /// Policy driving the `run` subcommand.
    pub fn run_policy(&self) -> BudgetPolicy {
        self.run.unwrap_or(BudgetPolicy::FixedPerCall {
            n_a: BudgetSpec::Unbounded,
            n_b: BudgetSpec::Unbounded,
        })
    }
}

/// Parses a config from a JSON string; parse errors keep serde's line/column
/// information.
pub fn parse_config(text: &str) -> Result<SweepConfig> {
    let config: SweepConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Loads and validates a config file.
pub fn load_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_paper_default_tolerances() {
        let config = parse_config(r#"{ "problem": { "type": "mp1" } }"#).unwrap();
        assert_eq!(config.tolerances.eps_coupling, 1e-5);
        assert_eq!(config.tolerances.eps_problem, 1e-10);
        assert_eq!(config.time.dt, 0.01);
        assert_eq!(config.grid.cell_count(), 36);
        assert_eq!(config.policies.len(), 3);
    }

    #[test]
    fn grid_cardinality_counts_cells() {
        let config = parse_config(
            r#"{ "problem": { "type": "mp1" }, "grid": { "n_a": [1, "inf"], "n_b": [1] } }"#,
        )
        .unwrap();
        assert_eq!(config.grid.cell_count(), 2);
    }

    #[test]
    fn negative_dt_is_a_validation_error() {
        let err = parse_config(
            r#"{ "problem": { "type": "mp1" }, "time": { "dt": -0.5 } }"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("time.dt"), "message should name the field: {msg}");
    }

    #[test]
    fn parse_errors_carry_position_info() {
        let err = parse_config("{ \"problem\": \n oops }").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "serde position info missing: {msg}");
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = parse_config(
            r#"{
                "problem": { "type": "mp2", "k0_a": 1.0, "k0_b": 0.1 },
                "accelerator": { "type": "aitken" },
                "grid": { "n_a": [1, 2, "inf"], "n_b": [1] },
                "policies": [ { "type": "nk-cc", "k": 1 } ],
                "run": { "type": "cid", "eps_cid": 1e-4 }
            }"#,
        )
        .unwrap();
        let json = serde_json::to_string_pretty(&config).unwrap();
        let back = parse_config(&json).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = parse_config(r#"{ "problem": { "type": "mp1" }, "bogus": 1 }"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }
}
