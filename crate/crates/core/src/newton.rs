//! Resumable damped-Newton kernel with per-call budget semantics.
//!
//! One call advances the iteration `x <- x - J(x)^-1 r(x)` from the given
//! start until the residual drops below `eps_problem`, the budget is
//! exhausted, or (for [`NewtonBudget::UntilOutputStable`]) the produced
//! interface data stops changing. A call never restarts: feeding the returned
//! iterate back in continues the same Newton trajectory, so per-call counts
//! partition one conceptual Newton loop.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{relative_change_raw, DEFAULT_RELATIVE_FLOOR};

/// Residual norm beyond which the iteration is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Pivot ratio below which the Jacobian is treated as singular.
pub const SINGULARITY_RATIO: f64 = 1e-14;

/// Per-call Newton iteration allowance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NewtonBudget {
    /// Run at most `n` iterations (n >= 1), fewer if the residual converges.
    Finite(usize),
    /// Iterate until single-field convergence; the per-call cap still applies
    /// and hitting it is an error.
    UntilConverged,
    /// Iterate until the relative change of the produced output between
    /// successive Newton iterates falls below `eps_cid` (or the residual
    /// converges); capped without error.
    UntilOutputStable { eps_cid: f64 },
}

/// A nonlinear system the kernel can iterate on.
///
/// `output` maps an iterate to the interface data the solver would hand to
/// its coupling partner; the default is the iterate itself. Output stability
/// drives the [`NewtonBudget::UntilOutputStable`] stop.
pub trait NewtonSystem {
    fn residual(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }
}

/// Closure adapter for [`NewtonSystem`].
pub struct FnSystem<R, J>
where
    R: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    pub residual: R,
    pub jacobian: J,
}

impl<R, J> NewtonSystem for FnSystem<R, J>
where
    R: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.residual)(x)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.jacobian)(x)
    }
}

/// Outcome of one kernel call.
#[derive(Debug, Clone)]
pub struct NewtonResult {
    /// Final iterate.
    pub x: DVector<f64>,
    /// Iterations performed in this call (matrix assemblies + solves).
    pub newton_iters: usize,
    /// Residual norm at the final iterate.
    pub residual_norm: f64,
    /// Whether the residual norm is below `eps_problem`.
    pub converged: bool,
    /// Output data at the final iterate.
    pub output: DVector<f64>,
}

/// Solves `J(x) dx = r(x)` with dense partial-pivot LU, rejecting pivots
/// below [`SINGULARITY_RATIO`] of the largest.
fn lu_solve(jac: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = jac.lu();
    let diag = lu.u().diagonal();
    let max_pivot = diag.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min_pivot = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if max_pivot == 0.0 || min_pivot < SINGULARITY_RATIO * max_pivot {
        return Err(Error::SingularJacobian {
            ratio: if max_pivot == 0.0 {
                0.0
            } else {
                min_pivot / max_pivot
            },
        });
    }
    lu.solve(rhs).ok_or(Error::SingularJacobian { ratio: 0.0 })
}

fn checked_norm(r: &DVector<f64>) -> Result<f64> {
    let n = r.norm();
    if n.is_nan() {
        return Err(Error::NonFinite {
            context: "newton residual".into(),
        });
    }
    if n > DIVERGENCE_NORM {
        return Err(Error::Diverged { norm: n });
    }
    Ok(n)
}

/// Advances Newton from `x0` under the given budget.
///
/// Stops on (a) residual norm below `eps_problem`, (b) a finite budget
/// exhausted, (c) output stability for [`NewtonBudget::UntilOutputStable`],
/// or (d) the per-call cap. Hitting the cap under
/// [`NewtonBudget::UntilConverged`] is a [`Error::NewtonStalled`] error.
///
/// A full step that fails to decrease the residual norm triggers a
/// backtracking line search (step halving, at most 8 halvings, Armijo
/// condition on the residual norm); plain Newton otherwise, so counts on
/// residual-decreasing steps are untouched. Triggering on any increase
/// instead of only on blow-ups matters: saturating nonlinearities can trap
/// the full-step iteration in a cycle whose residual growth per step is far
/// too small for a blow-up guard to catch.
pub fn newton_solve<S: NewtonSystem + ?Sized>(
    system: &S,
    x0: &DVector<f64>,
    budget: NewtonBudget,
    eps_problem: f64,
    cap: usize,
) -> Result<NewtonResult> {
    if cap < 1 {
        return Err(Error::InvalidArgument("newton cap must be >= 1".into()));
    }
    if let NewtonBudget::Finite(n) = budget {
        if n < 1 {
            return Err(Error::InvalidArgument(
                "finite newton budget must be >= 1".into(),
            ));
        }
    }

    let mut x = x0.clone();
    let mut r = system.residual(&x);
    let mut norm = checked_norm(&r)?;
    let mut out_prev = system.output(&x);
    let mut iters = 0usize;
    let mut output_stable = false;

    loop {
        if norm < eps_problem {
            break;
        }
        if output_stable {
            break;
        }
        let allowance = match budget {
            NewtonBudget::Finite(n) => n.min(cap),
            _ => cap,
        };
        if iters >= allowance {
            if matches!(budget, NewtonBudget::UntilConverged) {
                return Err(Error::NewtonStalled {
                    cap,
                    residual: norm,
                });
            }
            break;
        }

        let delta = lu_solve(system.jacobian(&x), &r)?;
        let full = &x - &delta;
        let r_full = system.residual(&full);
        let norm_full = checked_norm(&r_full)?;

        if norm_full >= norm && norm > 0.0 {
            // Backtrack: first step factor satisfying the Armijo decrease,
            // else the best candidate seen (full step included).
            let mut best = (full, r_full, norm_full);
            let mut lambda = 1.0;
            for _ in 0..8 {
                lambda *= 0.5;
                let cand = &x - &(lambda * &delta);
                let r_cand = system.residual(&cand);
                let norm_cand = checked_norm(&r_cand)?;
                let armijo = norm_cand <= (1.0 - 1e-4 * lambda) * norm;
                if armijo || norm_cand < best.2 {
                    best = (cand, r_cand, norm_cand);
                }
                if armijo {
                    break;
                }
            }
            x = best.0;
            r = best.1;
            norm = best.2;
        } else {
            x = full;
            r = r_full;
            norm = norm_full;
        }
        iters += 1;

        let out_curr = system.output(&x);
        if let NewtonBudget::UntilOutputStable { eps_cid } = budget {
            let change = relative_change_raw(&out_prev, &out_curr, DEFAULT_RELATIVE_FLOOR)?;
            if change < eps_cid {
                output_stable = true;
            }
        }
        out_prev = out_curr;
    }

    let converged = norm < eps_problem;
    Ok(NewtonResult {
        output: system.output(&x),
        x,
        newton_iters: iters,
        residual_norm: norm,
        converged,
    })
}
