//! Integration tests for the Dirichlet-Neumann time loop on the model
//! problems: named edge cases, stability mirrors, and run-level invariants.

use couplab::accel::Accelerator;
use couplab::coupling::{run_coupled, run_coupled_partial, RunOptions, TimeLoopConfig};
use couplab::models::{CoupledProblem, Mp1Params, Mp2Params, ProblemSpec};
use couplab::policy::{BudgetPolicy, BudgetSpec};
use couplab::{CouplingTolerances, Error};

fn mp1(mu: f64) -> ProblemSpec {
    ProblemSpec::Mp1(Mp1Params {
        mu,
        ..Mp1Params::default()
    })
}

fn mp2(k0_a: f64, k0_b: f64) -> ProblemSpec {
    ProblemSpec::Mp2(Mp2Params {
        k0_a,
        k0_b,
        ..Mp2Params::default()
    })
}

fn fixed(n_a: BudgetSpec, n_b: BudgetSpec) -> BudgetPolicy {
    BudgetPolicy::FixedPerCall { n_a, n_b }
}

fn unbounded() -> BudgetPolicy {
    fixed(BudgetSpec::Unbounded, BudgetSpec::Unbounded)
}

#[test]
fn decoupled_problem_confirms_in_two_iterations() {
    // no interaction: the first pass reaches both fixed points, the second
    // observes zero change
    let time = TimeLoopConfig {
        n_steps: 1,
        ..TimeLoopConfig::default()
    };
    let mut problem = CoupledProblem::build(&mp1(0.0), &time).unwrap();
    let report = run_coupled(
        &mut problem,
        &unbounded(),
        &Accelerator::Constant { omega: 1.0 },
        &CouplingTolerances::default(),
        &time,
        RunOptions::default(),
    )
    .unwrap();
    assert_eq!(report.steps[0].coupling_iters, 2);
    let last = &report.ledger.steps()[0].iterations[1];
    assert_eq!(last.coupling_change_a, 0.0);
    assert_eq!(last.coupling_change_b, 0.0);
}

#[test]
fn strong_coupling_without_relaxation_fails_at_the_cap() {
    let time = TimeLoopConfig {
        n_steps: 1,
        max_coupling_iters: 60,
        ..TimeLoopConfig::default()
    };
    // the coupled fixed point exists: the monolithic oracle finds it
    let mut oracle = CoupledProblem::build(&mp1(1.0), &time).unwrap();
    let eps = oracle.oracle_eps();
    let (d, t) = oracle.monolithic_step(eps, 200).unwrap();
    let residual = oracle.stacked_residual(&d, &t).unwrap();
    assert!(residual.norm() < 1e-9, "oracle root check: {}", residual.norm());

    // yet plain Gauss-Seidel (omega = 1) diverges: added-mass analog
    let mut problem = CoupledProblem::build(&mp1(1.0), &time).unwrap();
    let err = run_coupled(
        &mut problem,
        &unbounded(),
        &Accelerator::Constant { omega: 1.0 },
        &CouplingTolerances::default(),
        &time,
        RunOptions::default(),
    )
    .unwrap_err();
    match err {
        Error::CouplingDidNotConverge {
            step,
            max_iters,
            ledger,
        } => {
            assert_eq!(step, 0);
            assert_eq!(max_iters, 60);
            assert_eq!(ledger.n_coupling(), 60, "error carries the full ledger");
        }
        other => panic!("expected non-convergence at the cap, got {other}"),
    }
}

#[test]
fn pre_converged_entry_costs_no_newton_iterations() {
    // converge once, then run another step from the committed state: the
    // solvers are already at their fixed points
    let time = TimeLoopConfig {
        n_steps: 2,
        ..TimeLoopConfig::default()
    };
    let mut problem = CoupledProblem::build(&mp1(0.0), &time).unwrap();
    let report = run_coupled(
        &mut problem,
        &unbounded(),
        &Accelerator::Constant { omega: 1.0 },
        &CouplingTolerances::default(),
        &time,
        RunOptions::default(),
    )
    .unwrap();
    let second = &report.ledger.steps()[1];
    assert!(second.iterations.len() <= 2);
    let newton: usize = second
        .iterations
        .iter()
        .map(|r| r.newton_iters_a + r.newton_iters_b)
        .sum();
    assert_eq!(newton, 0, "no additional Newton iterations recorded");
}

#[test]
fn converged_steps_satisfy_both_criteria() {
    let time = TimeLoopConfig {
        n_steps: 5,
        ..TimeLoopConfig::default()
    };
    let tol = CouplingTolerances::default();
    let mut problem = CoupledProblem::build(&mp1(1.0), &time).unwrap();
    let report = run_coupled(
        &mut problem,
        &unbounded(),
        &Accelerator::default(),
        &tol,
        &time,
        RunOptions::default(),
    )
    .unwrap();
    for step in report.ledger.steps() {
        assert!(step.converged);
        let last = step.iterations.last().unwrap();
        assert!(last.coupling_change_a < tol.eps_coupling);
        assert!(last.coupling_change_b < tol.eps_coupling);
    }
    // final residual norms of both sub-solvers are below eps_problem
    let (a, b) = problem.solvers_mut();
    assert!(a.residual_norm() < tol.eps_problem);
    assert!(b.residual_norm() < tol.eps_problem);
}

#[test]
fn ledger_totals_match_per_iteration_sums_on_a_real_run() {
    let time = TimeLoopConfig {
        n_steps: 10,
        ..TimeLoopConfig::default()
    };
    let mut problem = CoupledProblem::build(&mp1(0.5), &time).unwrap();
    let report = run_coupled(
        &mut problem,
        &fixed(BudgetSpec::Finite(2), BudgetSpec::Finite(3)),
        &Accelerator::default(),
        &CouplingTolerances::default(),
        &time,
        RunOptions::default(),
    )
    .unwrap();
    let ledger = &report.ledger;
    let sum_a: usize = ledger
        .steps()
        .iter()
        .flat_map(|s| &s.iterations)
        .map(|r| r.newton_iters_a)
        .sum();
    let sum_b: usize = ledger
        .steps()
        .iter()
        .flat_map(|s| &s.iterations)
        .map(|r| r.newton_iters_b)
        .sum();
    let count: usize = ledger.steps().iter().map(|s| s.iterations.len()).sum();
    assert_eq!(ledger.newton_a_total(), sum_a);
    assert_eq!(ledger.newton_b_total(), sum_b);
    assert_eq!(ledger.n_coupling(), count);
    // budget respect, per record
    for rec in ledger.steps().iter().flat_map(|s| &s.iterations) {
        assert!(rec.newton_iters_a <= 2);
        assert!(rec.newton_iters_b <= 3);
    }
}

#[test]
fn accelerators_agree_on_the_fixed_point() {
    // every converging (policy x accelerator) pair lands on the same final
    // interface fields, pairwise and against the oracle
    let time = TimeLoopConfig {
        n_steps: 3,
        ..TimeLoopConfig::default()
    };
    let tol = CouplingTolerances::default();
    let spec = mp1(1.0);

    let mut oracle = CoupledProblem::build(&spec, &time).unwrap();
    let eps = oracle.oracle_eps();
    let mut oracle_fields = Vec::new();
    for _ in 0..time.n_steps {
        oracle_fields.push(oracle.monolithic_step(eps, 200).unwrap());
    }

    let accelerators = vec![
        Accelerator::Constant { omega: 0.5 },
        Accelerator::Aitken {
            omega0: 0.5,
            omega_min: 0.01,
            omega_max: 2.0,
        },
        Accelerator::default(),
    ];
    let mut finals = Vec::new();
    for accel in &accelerators {
        let mut problem = CoupledProblem::build(&spec, &time).unwrap();
        let report = run_coupled(&mut problem, &unbounded(), accel, &tol, &time, RunOptions::default())
            .expect("all three accelerators converge on the strong case");
        finals.push(report.steps.last().unwrap().displacement.clone());
        for (step, (d_o, _)) in report.steps.iter().zip(&oracle_fields) {
            let diff = couplab::relative_change(d_o, &step.displacement, tol.relative_floor).unwrap();
            assert!(
                diff < 100.0 * tol.eps_coupling,
                "{} vs oracle: {diff:.3e}",
                accel.name()
            );
        }
    }
    for pair in finals.windows(2) {
        let diff = couplab::relative_change(&pair[0], &pair[1], tol.relative_floor).unwrap();
        assert!(diff < 100.0 * tol.eps_coupling, "pairwise: {diff:.3e}");
    }
}

#[test]
fn stacked_residual_is_small_at_every_converged_step() {
    let time = TimeLoopConfig {
        n_steps: 5,
        ..TimeLoopConfig::default()
    };
    let tol = CouplingTolerances::default();
    for spec in [mp1(1.0), mp1(0.1), mp2(1.0, 0.1), mp2(1.0, 10.0)] {
        let mut problem = CoupledProblem::build(&spec, &time).unwrap();
        let bound = 10.0 * tol.eps_coupling * (1.0 + problem.forcing_scale());
        let report = run_coupled(
            &mut problem,
            &unbounded(),
            &Accelerator::default(),
            &tol,
            &time,
            RunOptions {
                verify_stacked_residual: true,
            },
        )
        .unwrap();
        for (i, step) in report.steps.iter().enumerate() {
            let norm = step.stacked_residual_norm.unwrap();
            assert!(
                norm < bound,
                "{} step {i}: stacked residual {norm:.3e} vs bound {bound:.3e}",
                spec.name()
            );
        }
    }
}

#[test]
fn interaction_strength_orders_relaxed_coupling_counts() {
    // average coupling iterations per attempted step under omega = 0.8 is
    // non-decreasing in mu; runs that hit the cap count at the cap
    let time = TimeLoopConfig {
        n_steps: 20,
        ..TimeLoopConfig::default()
    };
    let tol = CouplingTolerances::default();
    let mut averages = Vec::new();
    for mu in [0.0, 0.25, 0.5, 1.0] {
        let mut problem = CoupledProblem::build(&mp1(mu), &time).unwrap();
        let (report, _err) = run_coupled_partial(
            &mut problem,
            &unbounded(),
            &Accelerator::Constant { omega: 0.8 },
            &tol,
            &time,
            RunOptions::default(),
        );
        let attempted = report.ledger.steps().len().max(1);
        averages.push(report.ledger.n_coupling() as f64 / attempted as f64);
    }
    println!("avg coupling iterations per step over mu: {averages:?}");
    for pair in averages.windows(2) {
        assert!(
            pair[1] >= pair[0],
            "not monotone in interaction strength: {averages:?}"
        );
    }
}

#[test]
fn transmission_flux_exchange_is_conservative() {
    // at a converged step, the flux B imposed is exactly the flux A reported
    let time = TimeLoopConfig {
        n_steps: 3,
        ..TimeLoopConfig::default()
    };
    let mut problem = CoupledProblem::build(&mp2(1.0, 0.5), &time).unwrap();
    let report = run_coupled(
        &mut problem,
        &unbounded(),
        &Accelerator::default(),
        &CouplingTolerances::default(),
        &time,
        RunOptions::default(),
    )
    .unwrap();
    let traction = report.steps.last().unwrap().traction.clone();
    match &problem {
        CoupledProblem::Mp2(p) => {
            assert_eq!(p.imposed_flux(), traction.values()[0], "bitwise equality");
        }
        _ => unreachable!(),
    }
}

#[test]
fn transmission_gauss_seidel_mirrors_added_mass_sensitivity() {
    // in the steady linear limit the interface iteration amplifies by
    // -(k_a w_b)/(k_b w_a): ratio 10 diverges under omega = 1, ratio 0.1
    // contracts
    let time = TimeLoopConfig {
        n_steps: 2,
        max_coupling_iters: 80,
        ..TimeLoopConfig::default()
    };
    let tol = CouplingTolerances::default();

    let mut stiff_left = CoupledProblem::build(&mp2(1.0, 0.1), &time).unwrap();
    let err = run_coupled(
        &mut stiff_left,
        &unbounded(),
        &Accelerator::Constant { omega: 1.0 },
        &tol,
        &time,
        RunOptions::default(),
    );
    assert!(err.is_err(), "k ratio 10 must not converge at omega = 1");

    let mut stiff_right = CoupledProblem::build(&mp2(1.0, 10.0), &time).unwrap();
    let report = run_coupled(
        &mut stiff_right,
        &unbounded(),
        &Accelerator::Constant { omega: 1.0 },
        &tol,
        &time,
        RunOptions::default(),
    )
    .unwrap();
    assert_eq!(report.steps.len(), 2, "k ratio 0.1 converges at omega = 1");
}

#[test]
fn identical_configs_produce_bitwise_identical_ledgers() {
    let time = TimeLoopConfig {
        n_steps: 5,
        ..TimeLoopConfig::default()
    };
    let run = || {
        let mut problem = CoupledProblem::build(&mp2(1.0, 0.1), &time).unwrap();
        run_coupled(
            &mut problem,
            &BudgetPolicy::NkCC {
                k: 1,
                strict_factor: 1.0,
            },
            &Accelerator::default(),
            &CouplingTolerances::default(),
            &time,
            RunOptions::default(),
        )
        .unwrap()
        .ledger
    };
    assert_eq!(run(), run());
}

#[test]
fn budget_limited_grid_column_is_roughly_monotone_in_n_a() {
    // more Newton iterations per A call never cost more than ~10% extra
    // coupling iterations (adjacent cells), mirroring the published tables'
    // mild non-monotonicity
    let config = couplab::bench::parse_config(
        r#"{
            "problem": { "type": "mp1", "mu": 1.0 },
            "accelerator": { "type": "constant", "omega": 0.5 },
            "time": { "n_steps": 20 },
            "policies": []
        }"#,
    )
    .unwrap();
    let rows = couplab::bench::run_sweep(&config).unwrap();
    assert!(rows.iter().all(|r| r.converged));
    for nb_idx in 0..6 {
        let column: Vec<usize> = (0..6).map(|na| rows[na * 6 + nb_idx].coupling_iters).collect();
        for pair in column.windows(2) {
            assert!(
                pair[1] as f64 <= 1.1 * pair[0] as f64,
                "column {nb_idx}: {column:?}"
            );
        }
    }
}
