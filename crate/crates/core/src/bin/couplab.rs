//! Command-line front end for the coupling laboratory.
//!
//! Exit status: 0 on success, 1 on configuration (or other) errors, 2 when a
//! sweep finished but contains non-converged cells.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use couplab::bench::{
    emit_heatmap, find_optima, load_config, read_csv, run_sweep, write_csv, write_step_csv,
    HeatmapMetric, SweepResultRow,
};
use couplab::coupling::{run_coupled, RunOptions};
use couplab::ledger::estimate_cost;
use couplab::models::CoupledProblem;

#[derive(Parser)]
#[command(name = "couplab", version, about = "Partitioned-coupling laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Coupling,
    Newton,
    Cost,
}

impl From<MetricArg> for HeatmapMetric {
    fn from(value: MetricArg) -> Self {
        match value {
            MetricArg::Coupling => HeatmapMetric::Coupling,
            MetricArg::Newton => HeatmapMetric::Newton,
            MetricArg::Cost => HeatmapMetric::Cost,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a single coupled case and print per-step statistics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Write a verbose per-step CSV breakdown here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full (N^f, N^s) grid plus the configured policies.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Results CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also render a heatmap of the fixed-budget cells.
        #[arg(long)]
        heatmap: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "newton")]
        metric: MetricArg,
    },
    /// Summarize an existing results CSV: argmin cells and the Pareto front.
    Optima {
        /// Results CSV produced by `sweep`.
        csv: PathBuf,
    },
    /// Render a heatmap from an existing results CSV.
    Heatmap {
        /// Results CSV produced by `sweep`.
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "newton")]
        metric: MetricArg,
    },
}

fn budget_or_policy(row: &SweepResultRow) -> String {
    match (&row.n_a, &row.n_b, &row.policy) {
        (Some(a), Some(b), _) => format!("({a},{b})"),
        (_, _, Some(p)) => p.clone(),
        _ => "?".to_string(),
    }
}

fn cmd_run(config_path: &Path, out: Option<&PathBuf>) -> couplab::Result<()> {
    let config = load_config(config_path)?;
    let policy = config.run_policy();
    let mut problem = CoupledProblem::build(&config.problem, &config.time)?;
    let report = run_coupled(
        &mut problem,
        &policy,
        &config.accelerator,
        &config.tolerances,
        &config.time,
        RunOptions::default(),
    )?;

    println!(
        "# {} | accelerator {} | policy {}",
        config.problem.name(),
        config.accelerator.name(),
        policy.label()
    );
    println!("step  coupling  newton_f  newton_s");
    for (i, step) in report.ledger.steps().iter().enumerate() {
        let nf: usize = step.iterations.iter().map(|r| r.newton_iters_a).sum();
        let ns: usize = step.iterations.iter().map(|r| r.newton_iters_b).sum();
        println!("{i:>4}  {:>8}  {nf:>8}  {ns:>8}", step.iterations.len());
    }
    println!(
        "total coupling {} | newton_f {} | newton_s {} | newton_total {} | cost {}",
        report.ledger.n_coupling(),
        report.ledger.newton_a_total(),
        report.ledger.newton_b_total(),
        report.ledger.newton_total(),
        estimate_cost(&report.ledger, &config.cost_model),
    );

    if let Some(path) = out {
        write_step_csv(&report, path)?;
        println!("per-step breakdown written to {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(
    config_path: &Path,
    out: &Path,
    heatmap: Option<&PathBuf>,
    metric: MetricArg,
) -> couplab::Result<bool> {
    let config = load_config(config_path)?;
    let rows = run_sweep(&config)?;
    write_csv(&rows, out)?;
    println!("{} rows written to {}", rows.len(), out.display());

    if let Some(path) = heatmap {
        emit_heatmap(&rows, metric.into(), path)?;
        println!("heatmap written to {}", path.display());
    }

    if let Ok(summary) = find_optima(&rows) {
        println!(
            "argmin newton_total = {} at {:?}",
            summary.min_newton_total,
            summary
                .argmin_newton
                .iter()
                .map(|(a, b)| format!("({a},{b})"))
                .collect::<Vec<_>>()
        );
        println!(
            "argmin coupling     = {} at {:?}",
            summary.min_coupling,
            summary
                .argmin_coupling
                .iter()
                .map(|(a, b)| format!("({a},{b})"))
                .collect::<Vec<_>>()
        );
    }

    let failures: Vec<&SweepResultRow> = rows.iter().filter(|r| !r.converged).collect();
    if !failures.is_empty() {
        eprintln!("{} cell(s) did not converge:", failures.len());
        for row in &failures {
            eprintln!("  {}", budget_or_policy(row));
        }
    }
    Ok(failures.is_empty())
}

fn cmd_optima(csv: &Path) -> couplab::Result<()> {
    let rows = read_csv(csv)?;
    let summary = find_optima(&rows)?;
    println!(
        "argmin newton_total = {} at {:?}",
        summary.min_newton_total,
        summary
            .argmin_newton
            .iter()
            .map(|(a, b)| format!("({a},{b})"))
            .collect::<Vec<_>>()
    );
    println!(
        "argmin coupling     = {} at {:?}",
        summary.min_coupling,
        summary
            .argmin_coupling
            .iter()
            .map(|(a, b)| format!("({a},{b})"))
            .collect::<Vec<_>>()
    );
    println!("pareto front (n_f, n_s, coupling, newton_total):");
    for (a, b, coupling, newton) in &summary.pareto {
        println!("  ({a},{b})  {coupling}  {newton}");
    }
    let policies: Vec<&SweepResultRow> = rows.iter().filter(|r| r.policy.is_some()).collect();
    if !policies.is_empty() {
        println!("policy rows (coupling, newton_total):");
        for row in policies {
            println!(
                "  {}  {}  {}{}",
                row.policy.as_deref().unwrap_or(""),
                row.coupling_iters,
                row.newton_total,
                if row.converged { "" } else { "  [not converged]" }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, out } => cmd_run(config, out.as_ref()).map(|()| true),
        Command::Sweep {
            config,
            out,
            heatmap,
            metric,
        } => cmd_sweep(config, out, heatmap.as_ref(), *metric),
        Command::Optima { csv } => cmd_optima(csv).map(|()| true),
        Command::Heatmap { csv, out, metric } => read_csv(csv)
            .and_then(|rows| emit_heatmap(&rows, (*metric).into(), out))
            .map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
