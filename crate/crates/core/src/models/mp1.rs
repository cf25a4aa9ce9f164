//! MP1: nonlinear algebraic interface model.
//!
//! Sub-solver A (traction-producer) solves
//!
//! ```text
//! r_A(t; d) = L t + alpha*tanh(t) - b + mu*(C d + 0.5 d.*d) = 0
//! ```
//!
//! with `L` the second-difference matrix and `C` the cyclic shift-by-one
//! matrix; sub-solver B (displacement-producer) solves
//!
//! ```text
//! r_B(d; t) = d + beta*d.*d.*d - t = 0.
//! ```
//!
//! `mu` scales the interface feedback and plays the density-ratio role:
//! mu = 1.0 is the strong-coupling setting (plain Gauss-Seidel diverges),
//! mu = 0.1 the weak one. The tanh and cubic terms keep both subproblems
//! genuinely nonlinear so per-call Newton budgets matter.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldRole, InterfaceField};
use crate::newton::{newton_solve, NewtonBudget, NewtonSystem};
use crate::solver::{monolithic_solve, SolverCallReport, StackedSystem, SubSolver};

fn default_m() -> usize {
    8
}
fn default_mu() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.5
}
fn default_beta() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mp1Params {
    /// Interface length.
    pub m: usize,
    /// Interaction strength (density-ratio analog).
    pub mu: f64,
    /// Weight of A's tanh nonlinearity.
    pub alpha: f64,
    /// B's cubic hardening coefficient.
    pub beta: f64,
    /// Forcing vector; `None` means all ones.
    pub b: Option<Vec<f64>>,
}

impl Default for Mp1Params {
    fn default() -> Self {
        Self {
            m: default_m(),
            mu: default_mu(),
            alpha: default_alpha(),
            beta: default_beta(),
            b: None,
        }
    }
}

impl Mp1Params {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::Config("problem.m must be >= 1".into()));
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::Config("problem.mu must be finite and >= 0".into()));
        }
        for (name, v) in [("problem.alpha", self.alpha), ("problem.beta", self.beta)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        if let Some(b) = &self.b {
            if b.len() != self.m {
                return Err(Error::Config(format!(
                    "problem.b must have length m = {} (got {})",
                    self.m,
                    b.len()
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("problem.b must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn forcing(&self) -> DVector<f64> {
        match &self.b {
            Some(b) => DVector::from_vec(b.clone()),
            None => DVector::from_element(self.m, 1.0),
        }
    }
}

/// Second-difference matrix: 2 on the diagonal, -1 off it.
pub fn second_difference_matrix(m: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(m, m);
    for i in 0..m {
        l[(i, i)] = 2.0;
        if i + 1 < m {
            l[(i, i + 1)] = -1.0;
            l[(i + 1, i)] = -1.0;
        }
    }
    l
}

/// Cyclic shift-by-one: `(C d)_i = d_{(i+1) mod m}`.
pub fn cyclic_shift_matrix(m: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(m, m);
    for i in 0..m {
        c[(i, (i + 1) % m)] = 1.0;
    }
    c
}

fn sech_squared(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

struct SystemA<'a> {
    l: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    alpha: f64,
    coupling_term: &'a DVector<f64>,
}

impl NewtonSystem for SystemA<'_> {
    fn residual(&self, t: &DVector<f64>) -> DVector<f64> {
        self.l * t + self.alpha * t.map(f64::tanh) - self.b + self.coupling_term
    }

    fn jacobian(&self, t: &DVector<f64>) -> DMatrix<f64> {
        let mut j = self.l.clone();
        for i in 0..t.len() {
            j[(i, i)] += self.alpha * sech_squared(t[i]);
        }
        j
    }
}

struct SystemB<'a> {
    beta: f64,
    traction: &'a DVector<f64>,
}

impl NewtonSystem for SystemB<'_> {
    fn residual(&self, d: &DVector<f64>) -> DVector<f64> {
        d + self.beta * d.component_mul(d).component_mul(d) - self.traction
    }

    fn jacobian(&self, d: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::identity(d.len(), d.len());
        for i in 0..d.len() {
            j[(i, i)] += 3.0 * self.beta * d[i] * d[i];
        }
        j
    }
}

/// Traction-producing sub-solver.
pub struct Mp1SolverA {
    l: DMatrix<f64>,
    b: DVector<f64>,
    alpha: f64,
    mu: f64,
    shift: DMatrix<f64>,
    coupling_term: DVector<f64>,
    t: DVector<f64>,
}

impl Mp1SolverA {
    fn new(params: &Mp1Params) -> Self {
        let m = params.m;
        Self {
            l: second_difference_matrix(m),
            b: params.forcing(),
            alpha: params.alpha,
            mu: params.mu,
            shift: cyclic_shift_matrix(m),
            coupling_term: DVector::zeros(m),
            t: DVector::zeros(m),
        }
    }
}

impl SubSolver for Mp1SolverA {
    fn set_input(&mut self, input: &InterfaceField) -> Result<()> {
        if input.role() != FieldRole::DisplacementLike {
            return Err(Error::InvalidArgument(
                "solver A expects a displacement-like input".into(),
            ));
        }
        if input.len() != self.t.len() {
            return Err(Error::LengthMismatch {
                left: input.len(),
                right: self.t.len(),
            });
        }
        let d = input.vector();
        self.coupling_term = self.mu * (&self.shift * d + 0.5 * d.component_mul(d));
        Ok(())
    }

    fn solve_call(
        &mut self,
        budget: NewtonBudget,
        eps_problem: f64,
        cap: usize,
    ) -> Result<SolverCallReport> {
        let sys = SystemA {
            l: &self.l,
            b: &self.b,
            alpha: self.alpha,
            coupling_term: &self.coupling_term,
        };
        let res = newton_solve(&sys, &self.t, budget, eps_problem, cap)?;
        self.t = res.x;
        Ok(SolverCallReport {
            newton_iters: res.newton_iters,
            residual_norm: res.residual_norm,
            single_field_converged: res.converged,
            output: InterfaceField::from_vector(res.output, FieldRole::TractionLike)?,
        })
    }

    fn commit_step(&mut self) {
        // stationary model: the committed iterate is already the warm base
    }

    fn current_output(&self) -> InterfaceField {
        InterfaceField::from_vector(self.t.clone(), FieldRole::TractionLike)
            .expect("iterates stay finite")
    }

    fn residual_norm(&self) -> f64 {
        let sys = SystemA {
            l: &self.l,
            b: &self.b,
            alpha: self.alpha,
            coupling_term: &self.coupling_term,
        };
        sys.residual(&self.t).norm()
    }
}

/// Displacement-producing sub-solver.
pub struct Mp1SolverB {
    beta: f64,
    traction: DVector<f64>,
    d: DVector<f64>,
}

impl Mp1SolverB {
    fn new(params: &Mp1Params) -> Self {
        Self {
            beta: params.beta,
            traction: DVector::zeros(params.m),
            d: DVector::zeros(params.m),
        }
    }
}

impl SubSolver for Mp1SolverB {
    fn set_input(&mut self, input: &InterfaceField) -> Result<()> {
        if input.role() != FieldRole::TractionLike {
            return Err(Error::InvalidArgument(
                "solver B expects a traction-like input".into(),
            ));
        }
        if input.len() != self.d.len() {
            return Err(Error::LengthMismatch {
                left: input.len(),
                right: self.d.len(),
            });
        }
        self.traction = input.vector().clone();
        Ok(())
    }

    fn solve_call(
        &mut self,
        budget: NewtonBudget,
        eps_problem: f64,
        cap: usize,
    ) -> Result<SolverCallReport> {
        let sys = SystemB {
            beta: self.beta,
            traction: &self.traction,
        };
        let res = newton_solve(&sys, &self.d, budget, eps_problem, cap)?;
        self.d = res.x;
        Ok(SolverCallReport {
            newton_iters: res.newton_iters,
            residual_norm: res.residual_norm,
            single_field_converged: res.converged,
            output: InterfaceField::from_vector(res.output, FieldRole::DisplacementLike)?,
        })
    }

    fn commit_step(&mut self) {}

    fn current_output(&self) -> InterfaceField {
        InterfaceField::from_vector(self.d.clone(), FieldRole::DisplacementLike)
            .expect("iterates stay finite")
    }

    fn residual_norm(&self) -> f64 {
        let sys = SystemB {
            beta: self.beta,
            traction: &self.traction,
        };
        sys.residual(&self.d).norm()
    }
}

/// Stacked two-field system on z = [t; d].
struct Mp1Stacked<'a> {
    params: &'a Mp1Params,
    l: DMatrix<f64>,
    shift: DMatrix<f64>,
    b: DVector<f64>,
    guess: DVector<f64>,
}

impl Mp1Stacked<'_> {
    fn split_z(&self, z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let m = self.params.m;
        (z.rows(0, m).into_owned(), z.rows(m, m).into_owned())
    }
}

impl StackedSystem for Mp1Stacked<'_> {
    fn initial_guess(&self) -> DVector<f64> {
        self.guess.clone()
    }

    fn residual(&mut self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let (t, d) = self.split_z(z);
        Ok(mp1_stacked_residual(self.params, &self.l, &self.shift, &self.b, &d, &t))
    }

    fn jacobian(&mut self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let m = self.params.m;
        let (t, d) = self.split_z(z);
        let mut j = DMatrix::zeros(2 * m, 2 * m);
        // dr_A/dt
        for i in 0..m {
            for c in 0..m {
                j[(i, c)] = self.l[(i, c)];
            }
            j[(i, i)] += self.params.alpha * sech_squared(t[i]);
        }
        // dr_A/dd = mu*(C + diag(d))
        for i in 0..m {
            for c in 0..m {
                j[(i, m + c)] = self.params.mu * self.shift[(i, c)];
            }
            j[(i, m + i)] += self.params.mu * d[i];
        }
        // dr_B/dt = -I ; dr_B/dd = I + 3*beta*diag(d^2)
        for i in 0..m {
            j[(m + i, i)] = -1.0;
            j[(m + i, m + i)] = 1.0 + 3.0 * self.params.beta * d[i] * d[i];
        }
        Ok(j)
    }

    fn interface_fields(&mut self, z: &DVector<f64>) -> Result<(InterfaceField, InterfaceField)> {
        let (t, d) = self.split_z(z);
        Ok((
            InterfaceField::from_vector(d, FieldRole::DisplacementLike)?,
            InterfaceField::from_vector(t, FieldRole::TractionLike)?,
        ))
    }
}

fn mp1_stacked_residual(
    params: &Mp1Params,
    l: &DMatrix<f64>,
    shift: &DMatrix<f64>,
    b: &DVector<f64>,
    d: &DVector<f64>,
    t: &DVector<f64>,
) -> DVector<f64> {
    let m = params.m;
    let r_a = l * t + params.alpha * t.map(f64::tanh) - b
        + params.mu * (shift * d + 0.5 * d.component_mul(d));
    let r_b = d + params.beta * d.component_mul(d).component_mul(d) - t;
    let mut out = DVector::zeros(2 * m);
    out.rows_mut(0, m).copy_from(&r_a);
    out.rows_mut(m, m).copy_from(&r_b);
    out
}

/// The coupled MP1 problem: the black-box pair plus its monolithic oracle.
pub struct Mp1Problem {
    params: Mp1Params,
    pub(crate) a: Mp1SolverA,
    pub(crate) b: Mp1SolverB,
    oracle_t: DVector<f64>,
    oracle_d: DVector<f64>,
}

impl Mp1Problem {
    pub fn new(params: Mp1Params) -> Result<Self> {
        params.validate()?;
        let a = Mp1SolverA::new(&params);
        let b = Mp1SolverB::new(&params);
        let m = params.m;
        Ok(Self {
            params,
            a,
            b,
            oracle_t: DVector::zeros(m),
            oracle_d: DVector::zeros(m),
        })
    }

    pub fn params(&self) -> &Mp1Params {
        &self.params
    }

    pub fn interface_len(&self) -> usize {
        self.params.m
    }

    pub fn initial_fields(&self) -> (InterfaceField, InterfaceField) {
        (
            InterfaceField::zeros(self.params.m, FieldRole::DisplacementLike),
            InterfaceField::zeros(self.params.m, FieldRole::TractionLike),
        )
    }

    /// Stacked residual `[r_A(t; d); r_B(d; t)]`; zero exactly at the coupled
    /// fixed point.
    pub fn stacked_residual(&self, d: &InterfaceField, t: &InterfaceField) -> Result<DVector<f64>> {
        let m = self.params.m;
        if d.len() != m || t.len() != m {
            return Err(Error::LengthMismatch {
                left: d.len(),
                right: m,
            });
        }
        Ok(mp1_stacked_residual(
            &self.params,
            &self.a.l,
            &self.a.shift,
            &self.a.b,
            d.vector(),
            t.vector(),
        ))
    }

    /// Newton on the stacked system, warm-started from the oracle's committed
    /// state; commits the solution as the oracle's new state.
    pub fn monolithic_step(
        &mut self,
        eps: f64,
        cap: usize,
    ) -> Result<(InterfaceField, InterfaceField)> {
        let m = self.params.m;
        let mut guess = DVector::zeros(2 * m);
        guess.rows_mut(0, m).copy_from(&self.oracle_t);
        guess.rows_mut(m, m).copy_from(&self.oracle_d);
        let mut sys = Mp1Stacked {
            params: &self.params,
            l: second_difference_matrix(m),
            shift: cyclic_shift_matrix(m),
            b: self.params.forcing(),
            guess,
        };
        let (d, t) = monolithic_solve(&mut sys, eps, cap)?;
        self.oracle_d = d.vector().clone();
        self.oracle_t = t.vector().clone();
        Ok((d, t))
    }

    /// Scale of the forcing, used by residual-bound checks.
    pub fn forcing_scale(&self) -> f64 {
        self.params.forcing().norm()
    }

    /// Recommended residual tolerance for [`Mp1Problem::monolithic_step`].
    pub fn oracle_eps(&self) -> f64 {
        1e-11
    }
}
