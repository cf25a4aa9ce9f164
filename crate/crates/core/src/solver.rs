//! The black-box sub-solver contract and the monolithic verification oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::field::InterfaceField;
use crate::newton::{newton_solve, NewtonBudget, NewtonSystem};

/// What one sub-solver call reports back to the coupling loop.
#[derive(Debug, Clone)]
pub struct SolverCallReport {
    /// Newton iterations performed in this call.
    pub newton_iters: usize,
    /// Residual norm at the returned iterate.
    pub residual_norm: f64,
    /// Whether the residual is below the `eps_problem` handed to the call.
    pub single_field_converged: bool,
    /// Interface data produced at the returned iterate.
    pub output: InterfaceField,
}

/// A black-box sub-solver: only interface data goes in and out.
///
/// Calls are resumable: within one time step, successive `solve_call`s
/// continue Newton from the latest internal iterate, so per-call counts
/// partition one conceptual Newton loop. `commit_step` advances the time
/// level and fixes the warm-start base for the next step.
pub trait SubSolver: Send {
    /// Imposes interface data for subsequent calls.
    fn set_input(&mut self, input: &InterfaceField) -> Result<()>;

    /// Advances the internal Newton iteration under the budget; `cap` bounds
    /// every budget variant.
    fn solve_call(
        &mut self,
        budget: NewtonBudget,
        eps_problem: f64,
        cap: usize,
    ) -> Result<SolverCallReport>;

    /// Accepts the current iterate as the solution of this time level.
    fn commit_step(&mut self);

    /// Interface data at the current internal iterate.
    fn current_output(&self) -> InterfaceField;

    /// Residual norm at the current internal iterate (with current input).
    fn residual_norm(&self) -> f64;
}

/// The stacked two-field system used as ground truth for a coupled step.
///
/// Methods take `&mut self` because a residual evaluation may run inner
/// sub-solves with warm-started caches.
pub trait StackedSystem {
    fn initial_guess(&self) -> DVector<f64>;
    fn residual(&mut self, z: &DVector<f64>) -> Result<DVector<f64>>;
    fn jacobian(&mut self, z: &DVector<f64>) -> Result<DMatrix<f64>>;
    /// Splits a stacked iterate into (displacement-like, traction-like)
    /// interface fields.
    fn interface_fields(&mut self, z: &DVector<f64>) -> Result<(InterfaceField, InterfaceField)>;
}

struct StackedAdapter<'a> {
    sys: std::cell::RefCell<&'a mut dyn StackedSystem>,
    inner_error: std::cell::RefCell<Option<crate::error::Error>>,
}

impl StackedAdapter<'_> {
    fn stash(&self, err: crate::error::Error) {
        let mut slot = self.inner_error.borrow_mut();
        if slot.is_none() {
            *slot = Some(err);
        }
    }
}

impl NewtonSystem for StackedAdapter<'_> {
    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        match self.sys.borrow_mut().residual(x) {
            Ok(r) => r,
            Err(e) => {
                self.stash(e);
                // NaN makes the kernel stop on its next norm check
                DVector::from_element(x.len(), f64::NAN)
            }
        }
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self.sys.borrow_mut().jacobian(x) {
            Ok(j) => j,
            Err(e) => {
                self.stash(e);
                DMatrix::zeros(x.len(), x.len())
            }
        }
    }
}

/// Newton on the stacked system down to `||r|| < eps`; returns both interface
/// fields at the fixed point of the coupled step.
pub fn monolithic_solve(
    system: &mut dyn StackedSystem,
    eps: f64,
    cap: usize,
) -> Result<(InterfaceField, InterfaceField)> {
    let x0 = system.initial_guess();
    let adapter = StackedAdapter {
        sys: std::cell::RefCell::new(system),
        inner_error: std::cell::RefCell::new(None),
    };
    let outcome = newton_solve(&adapter, &x0, NewtonBudget::UntilConverged, eps, cap);
    if let Some(err) = adapter.inner_error.borrow_mut().take() {
        return Err(err);
    }
    let result = outcome?;
    drop(adapter);
    system.interface_fields(&result.x)
}

/// Central finite-difference Jacobian, step `1e-7 * (1 + |x_i|)`.
///
/// Testing aid for checking analytic Jacobians; the solvers themselves always
/// use analytic ones.
pub fn finite_difference_jacobian<F>(f: F, x: &DVector<f64>) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let h = 1e-7 * (1.0 + x[j].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let fp = f(&xp);
        let fm = f(&xm);
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}
