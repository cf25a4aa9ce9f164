//! MP2: 1D nonlinear transmission problem.
//!
//! The diffusion equation `u_t - (k(u) u')' = f` with `k(u) = k0*(1 + g*u^2)`
//! on [0, 1], BDF1 in time and central differences in space, split at
//! x = 0.5. Sub-solver A owns the left subdomain, receives the interface
//! VALUE (Dirichlet analog) and returns the discrete interface FLUX
//! `-k(u) du/dx` from a one-sided second-order stencil; sub-solver B owns the
//! right subdomain, receives the flux (Neumann analog, finite-volume boundary
//! closure) and returns its interface value.
//!
//! The ratio `k0_a / k0_b` is the coupling-strength knob: in the steady
//! linear limit the Gauss-Seidel interface iteration has amplification factor
//! `-(k0_a * w_b) / (k0_b * w_a)` (equal widths here), so ratios well above 1
//! diverge under plain omega = 1 relaxation while ratios below 1 contract,
//! mirroring added-mass sensitivity.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldRole, InterfaceField};
use crate::newton::{newton_solve, NewtonBudget, NewtonSystem};
use crate::solver::{monolithic_solve, SolverCallReport, StackedSystem, SubSolver};

const INTERFACE_X: f64 = 0.5;
const DOMAIN_END: f64 = 1.0;

fn default_cells() -> usize {
    40
}
fn default_k0() -> f64 {
    1.0
}
fn default_nonlinearity() -> f64 {
    1.0
}
fn default_forcing_amplitude() -> f64 {
    1.0
}
fn default_u_left() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mp2Params {
    pub cells_a: usize,
    pub cells_b: usize,
    /// Base diffusivities; their ratio sets the coupling strength.
    pub k0_a: f64,
    pub k0_b: f64,
    /// Nonlinearity weight g in k(u) = k0*(1 + g*u^2); 0 gives the linear
    /// limit.
    pub nonlinearity: f64,
    /// Amplitude of the forcing f(x) = amplitude * sin(pi x).
    pub forcing_amplitude: f64,
    /// Dirichlet end values.
    pub u_left: f64,
    pub u_right: f64,
}

impl Default for Mp2Params {
    fn default() -> Self {
        Self {
            cells_a: default_cells(),
            cells_b: default_cells(),
            k0_a: default_k0(),
            k0_b: default_k0(),
            nonlinearity: default_nonlinearity(),
            forcing_amplitude: default_forcing_amplitude(),
            u_left: default_u_left(),
            u_right: 0.0,
        }
    }
}

impl Mp2Params {
    pub fn validate(&self) -> Result<()> {
        if self.cells_a < 3 {
            return Err(Error::Config(
                "problem.cells_a must be >= 3 (one-sided flux stencil)".into(),
            ));
        }
        if self.cells_b < 2 {
            return Err(Error::Config("problem.cells_b must be >= 2".into()));
        }
        for (name, v) in [("problem.k0_a", self.k0_a), ("problem.k0_b", self.k0_b)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be finite and > 0")));
            }
        }
        if !self.nonlinearity.is_finite() || self.nonlinearity < 0.0 {
            return Err(Error::Config(
                "problem.nonlinearity must be finite and >= 0".into(),
            ));
        }
        for (name, v) in [
            ("problem.forcing_amplitude", self.forcing_amplitude),
            ("problem.u_left", self.u_left),
            ("problem.u_right", self.u_right),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Conductivity {
    k0: f64,
    gamma: f64,
}

impl Conductivity {
    fn k(&self, u: f64) -> f64 {
        self.k0 * (1.0 + self.gamma * u * u)
    }

    fn dk(&self, u: f64) -> f64 {
        2.0 * self.k0 * self.gamma * u
    }
}

// ---------------------------------------------------------------------------
// Sub-solver A: left subdomain, Dirichlet interface value in, flux out.
// ---------------------------------------------------------------------------

struct SystemA<'a> {
    cond: Conductivity,
    h: f64,
    dt: f64,
    u_left: f64,
    v: f64,
    u_old: &'a DVector<f64>,
    forcing: &'a DVector<f64>,
}

impl SystemA<'_> {
    fn neighbors(&self, u: &DVector<f64>, j: usize) -> (f64, f64) {
        let n = u.len();
        let left = if j == 0 { self.u_left } else { u[j - 1] };
        let right = if j == n - 1 { self.v } else { u[j + 1] };
        (left, right)
    }

    fn flux(&self, u: &DVector<f64>) -> f64 {
        let n = u.len();
        interface_flux(&self.cond, self.h, self.v, u[n - 1], u[n - 2])
    }
}

/// One-sided second-order interface flux `-k(v) * u'(interface)` with
/// `u' ~ (3v - 4u_last + u_second_last) / (2h)`.
fn interface_flux(cond: &Conductivity, h: f64, v: f64, u_last: f64, u_second_last: f64) -> f64 {
    -cond.k(v) * (3.0 * v - 4.0 * u_last + u_second_last) / (2.0 * h)
}

impl NewtonSystem for SystemA<'_> {
    fn residual(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = u.len();
        let h2 = self.h * self.h;
        DVector::from_fn(n, |j, _| {
            let (left, right) = self.neighbors(u, j);
            let k_l = 0.5 * (self.cond.k(left) + self.cond.k(u[j]));
            let k_r = 0.5 * (self.cond.k(u[j]) + self.cond.k(right));
            (u[j] - self.u_old[j]) / self.dt
                + (-k_r * (right - u[j]) + k_l * (u[j] - left)) / h2
                - self.forcing[j]
        })
    }

    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let n = u.len();
        let h2 = self.h * self.h;
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let (left, right) = self.neighbors(u, j);
            let k_l = 0.5 * (self.cond.k(left) + self.cond.k(u[j]));
            let k_r = 0.5 * (self.cond.k(u[j]) + self.cond.k(right));
            jac[(j, j)] = 1.0 / self.dt
                + (-0.5 * self.cond.dk(u[j]) * (right - u[j])
                    + k_r
                    + 0.5 * self.cond.dk(u[j]) * (u[j] - left)
                    + k_l)
                    / h2;
            if j > 0 {
                jac[(j, j - 1)] = (0.5 * self.cond.dk(left) * (u[j] - left) - k_l) / h2;
            }
            if j + 1 < n {
                jac[(j, j + 1)] = (-0.5 * self.cond.dk(right) * (right - u[j]) - k_r) / h2;
            }
        }
        jac
    }

    fn output(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![self.flux(u)])
    }
}

/// Left-subdomain solver (Dirichlet role).
#[derive(Debug, Clone)]
pub struct Mp2SolverA {
    cond: Conductivity,
    h: f64,
    dt: f64,
    u_left: f64,
    v: f64,
    u: DVector<f64>,
    u_old: DVector<f64>,
    forcing: DVector<f64>,
}

impl Mp2SolverA {
    fn new(params: &Mp2Params, dt: f64) -> Self {
        let n = params.cells_a - 1;
        let h = INTERFACE_X / params.cells_a as f64;
        let forcing = DVector::from_fn(n, |j, _| {
            let x = (j + 1) as f64 * h;
            params.forcing_amplitude * (std::f64::consts::PI * x).sin()
        });
        Self {
            cond: Conductivity {
                k0: params.k0_a,
                gamma: params.nonlinearity,
            },
            h,
            dt,
            u_left: params.u_left,
            v: 0.0,
            u: DVector::zeros(n),
            u_old: DVector::zeros(n),
            forcing,
        }
    }

    fn system(&self) -> SystemA<'_> {
        SystemA {
            cond: self.cond,
            h: self.h,
            dt: self.dt,
            u_left: self.u_left,
            v: self.v,
            u_old: &self.u_old,
            forcing: &self.forcing,
        }
    }

    /// Sensitivity of the produced flux to the imposed interface value, at
    /// the current (solved) iterate.
    fn dflux_dv(&self) -> Result<f64> {
        let sys = self.system();
        let n = self.u.len();
        let jac = sys.jacobian(&self.u);
        // dr/dv: only the last row sees the interface value
        let mut dr_dv = DVector::zeros(n);
        let u_j = self.u[n - 1];
        let k_r = 0.5 * (self.cond.k(u_j) + self.cond.k(self.v));
        dr_dv[n - 1] = (-0.5 * self.cond.dk(self.v) * (self.v - u_j) - k_r) / (self.h * self.h);
        let lu = jac.lu();
        let du_dv = -lu
            .solve(&dr_dv)
            .ok_or(Error::SingularJacobian { ratio: 0.0 })?;
        // flux = -k(v)*(3v - 4u[n-1] + u[n-2])/(2h)
        let stencil = 3.0 * self.v - 4.0 * self.u[n - 1] + self.u[n - 2];
        let dphi_dv = -self.cond.dk(self.v) * stencil / (2.0 * self.h)
            - 3.0 * self.cond.k(self.v) / (2.0 * self.h);
        let dphi_du_last = 2.0 * self.cond.k(self.v) / self.h;
        let dphi_du_prev = -self.cond.k(self.v) / (2.0 * self.h);
        Ok(dphi_dv + dphi_du_last * du_dv[n - 1] + dphi_du_prev * du_dv[n - 2])
    }
}

impl SubSolver for Mp2SolverA {
    fn set_input(&mut self, input: &InterfaceField) -> Result<()> {
        if input.role() != FieldRole::DisplacementLike {
            return Err(Error::InvalidArgument(
                "solver A expects a displacement-like (interface value) input".into(),
            ));
        }
        if input.len() != 1 {
            return Err(Error::LengthMismatch {
                left: input.len(),
                right: 1,
            });
        }
        self.v = input.values()[0];
        Ok(())
    }

    fn solve_call(
        &mut self,
        budget: NewtonBudget,
        eps_problem: f64,
        cap: usize,
    ) -> Result<SolverCallReport> {
        let sys = self.system();
        let res = newton_solve(&sys, &self.u, budget, eps_problem, cap)?;
        self.u = res.x;
        Ok(SolverCallReport {
            newton_iters: res.newton_iters,
            residual_norm: res.residual_norm,
            single_field_converged: res.converged,
            output: InterfaceField::from_vector(res.output, FieldRole::TractionLike)?,
        })
    }

    fn commit_step(&mut self) {
        self.u_old = self.u.clone();
    }

    fn current_output(&self) -> InterfaceField {
        let sys = self.system();
        InterfaceField::new(vec![sys.flux(&self.u)], FieldRole::TractionLike)
            .expect("flux stays finite")
    }

    fn residual_norm(&self) -> f64 {
        let sys = self.system();
        sys.residual(&self.u).norm()
    }
}

// ---------------------------------------------------------------------------
// Sub-solver B: right subdomain, Neumann flux in, interface value out.
// ---------------------------------------------------------------------------

struct SystemB<'a> {
    cond: Conductivity,
    h: f64,
    dt: f64,
    u_right: f64,
    q: f64,
    u_old: &'a DVector<f64>,
    forcing: &'a DVector<f64>,
}

impl NewtonSystem for SystemB<'_> {
    fn residual(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = u.len();
        let h = self.h;
        let h2 = h * h;
        DVector::from_fn(n, |j, _| {
            if j == 0 {
                // finite-volume half cell at the interface with imposed flux
                let u1 = if n > 1 { u[1] } else { self.u_right };
                let k_half = 0.5 * (self.cond.k(u[0]) + self.cond.k(u1));
                0.5 * h * (u[0] - self.u_old[0]) / self.dt - k_half * (u1 - u[0]) / h - self.q
                    - 0.5 * h * self.forcing[0]
            } else {
                let left = u[j - 1];
                let right = if j == n - 1 { self.u_right } else { u[j + 1] };
                let k_l = 0.5 * (self.cond.k(left) + self.cond.k(u[j]));
                let k_r = 0.5 * (self.cond.k(u[j]) + self.cond.k(right));
                (u[j] - self.u_old[j]) / self.dt
                    + (-k_r * (right - u[j]) + k_l * (u[j] - left)) / h2
                    - self.forcing[j]
            }
        })
    }

    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let n = u.len();
        let h = self.h;
        let h2 = h * h;
        let mut jac = DMatrix::zeros(n, n);
        // interface row
        {
            let u1 = if n > 1 { u[1] } else { self.u_right };
            let k_half = 0.5 * (self.cond.k(u[0]) + self.cond.k(u1));
            jac[(0, 0)] =
                0.5 * h / self.dt + (-0.5 * self.cond.dk(u[0]) * (u1 - u[0]) + k_half) / h;
            if n > 1 {
                jac[(0, 1)] = (-0.5 * self.cond.dk(u1) * (u1 - u[0]) - k_half) / h;
            }
        }
        for j in 1..n {
            let left = u[j - 1];
            let right = if j == n - 1 { self.u_right } else { u[j + 1] };
            let k_l = 0.5 * (self.cond.k(left) + self.cond.k(u[j]));
            let k_r = 0.5 * (self.cond.k(u[j]) + self.cond.k(right));
            jac[(j, j)] = 1.0 / self.dt
                + (-0.5 * self.cond.dk(u[j]) * (right - u[j])
                    + k_r
                    + 0.5 * self.cond.dk(u[j]) * (u[j] - left)
                    + k_l)
                    / h2;
            jac[(j, j - 1)] = (0.5 * self.cond.dk(left) * (u[j] - left) - k_l) / h2;
            if j + 1 < n {
                jac[(j, j + 1)] = (-0.5 * self.cond.dk(right) * (right - u[j]) - k_r) / h2;
            }
        }
        jac
    }

    fn output(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![u[0]])
    }
}

/// Right-subdomain solver (Neumann role).
#[derive(Debug, Clone)]
pub struct Mp2SolverB {
    cond: Conductivity,
    h: f64,
    dt: f64,
    u_right: f64,
    q: f64,
    u: DVector<f64>,
    u_old: DVector<f64>,
    forcing: DVector<f64>,
}

impl Mp2SolverB {
    fn new(params: &Mp2Params, dt: f64) -> Self {
        let n = params.cells_b;
        let h = (DOMAIN_END - INTERFACE_X) / params.cells_b as f64;
        let forcing = DVector::from_fn(n, |j, _| {
            let x = INTERFACE_X + j as f64 * h;
            params.forcing_amplitude * (std::f64::consts::PI * x).sin()
        });
        Self {
            cond: Conductivity {
                k0: params.k0_b,
                gamma: params.nonlinearity,
            },
            h,
            dt,
            u_right: params.u_right,
            q: 0.0,
            u: DVector::zeros(n),
            u_old: DVector::zeros(n),
            forcing,
        }
    }

    fn system(&self) -> SystemB<'_> {
        SystemB {
            cond: self.cond,
            h: self.h,
            dt: self.dt,
            u_right: self.u_right,
            q: self.q,
            u_old: &self.u_old,
            forcing: &self.forcing,
        }
    }

    /// The flux currently imposed at the interface.
    pub fn imposed_flux(&self) -> f64 {
        self.q
    }

    /// Sensitivity of the interface value to the imposed flux, at the current
    /// (solved) iterate.
    fn dvalue_dq(&self) -> Result<f64> {
        let sys = self.system();
        let jac = sys.jacobian(&self.u);
        // dr/dq = -e_0, so du/dq = J^{-1} e_0
        let mut e0 = DVector::zeros(self.u.len());
        e0[0] = 1.0;
        let lu = jac.lu();
        let du_dq = lu
            .solve(&e0)
            .ok_or(Error::SingularJacobian { ratio: 0.0 })?;
        Ok(du_dq[0])
    }
}

impl SubSolver for Mp2SolverB {
    fn set_input(&mut self, input: &InterfaceField) -> Result<()> {
        if input.role() != FieldRole::TractionLike {
            return Err(Error::InvalidArgument(
                "solver B expects a traction-like (interface flux) input".into(),
            ));
        }
        if input.len() != 1 {
            return Err(Error::LengthMismatch {
                left: input.len(),
                right: 1,
            });
        }
        self.q = input.values()[0];
        Ok(())
    }

    fn solve_call(
        &mut self,
        budget: NewtonBudget,
        eps_problem: f64,
        cap: usize,
    ) -> Result<SolverCallReport> {
        let sys = self.system();
        let res = newton_solve(&sys, &self.u, budget, eps_problem, cap)?;
        self.u = res.x;
        Ok(SolverCallReport {
            newton_iters: res.newton_iters,
            residual_norm: res.residual_norm,
            single_field_converged: res.converged,
            output: InterfaceField::from_vector(res.output, FieldRole::DisplacementLike)?,
        })
    }

    fn commit_step(&mut self) {
        self.u_old = self.u.clone();
    }

    fn current_output(&self) -> InterfaceField {
        InterfaceField::new(vec![self.u[0]], FieldRole::DisplacementLike)
            .expect("iterates stay finite")
    }

    fn residual_norm(&self) -> f64 {
        let sys = self.system();
        sys.residual(&self.u).norm()
    }
}

// ---------------------------------------------------------------------------
// Coupled problem + oracle
// ---------------------------------------------------------------------------

const ORACLE_INNER_CAP: usize = 200;

/// Interface-level stacked system on z = [value, flux]. Each residual
/// evaluation solves both subdomains to tight tolerance; the fixed point of
/// the Dirichlet-Neumann exchange is exactly its root.
struct Mp2Stacked<'a> {
    a: &'a mut Mp2SolverA,
    b: &'a mut Mp2SolverB,
    inner_eps: f64,
    guess: DVector<f64>,
}

impl Mp2Stacked<'_> {
    fn inner_solve(&mut self, v: f64, q: f64) -> Result<(f64, f64)> {
        self.a
            .set_input(&InterfaceField::new(vec![v], FieldRole::DisplacementLike)?)?;
        let rep_a = self
            .a
            .solve_call(NewtonBudget::UntilConverged, self.inner_eps, ORACLE_INNER_CAP)?;
        self.b
            .set_input(&InterfaceField::new(vec![q], FieldRole::TractionLike)?)?;
        let rep_b = self
            .b
            .solve_call(NewtonBudget::UntilConverged, self.inner_eps, ORACLE_INNER_CAP)?;
        Ok((rep_b.output.values()[0], rep_a.output.values()[0]))
    }
}

impl StackedSystem for Mp2Stacked<'_> {
    fn initial_guess(&self) -> DVector<f64> {
        self.guess.clone()
    }

    fn residual(&mut self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let (value_b, flux_a) = self.inner_solve(z[0], z[1])?;
        Ok(DVector::from_vec(vec![value_b - z[0], flux_a - z[1]]))
    }

    fn jacobian(&mut self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.inner_solve(z[0], z[1])?;
        let dv_dq = self.b.dvalue_dq()?;
        let dq_dv = self.a.dflux_dv()?;
        Ok(DMatrix::from_row_slice(2, 2, &[-1.0, dv_dq, dq_dv, -1.0]))
    }

    fn interface_fields(&mut self, z: &DVector<f64>) -> Result<(InterfaceField, InterfaceField)> {
        Ok((
            InterfaceField::new(vec![z[0]], FieldRole::DisplacementLike)?,
            InterfaceField::new(vec![z[1]], FieldRole::TractionLike)?,
        ))
    }
}

/// The coupled MP2 problem: the black-box pair plus its monolithic oracle.
pub struct Mp2Problem {
    params: Mp2Params,
    pub(crate) a: Mp2SolverA,
    pub(crate) b: Mp2SolverB,
    oracle_a: Mp2SolverA,
    oracle_b: Mp2SolverB,
    oracle_v: f64,
    oracle_q: f64,
    /// Tolerance for the oracle's inner subdomain solves; scale-aware because
    /// the attainable residual floor grows with k_max/h^2.
    inner_eps: f64,
    /// Recommended tolerance for `monolithic_step`.
    oracle_eps: f64,
}

impl Mp2Problem {
    pub fn new(params: Mp2Params, dt: f64) -> Result<Self> {
        params.validate()?;
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::Config("time.dt must be a finite value > 0".into()));
        }
        let a = Mp2SolverA::new(&params, dt);
        let b = Mp2SolverB::new(&params, dt);
        let h_min = a.h.min(b.h);
        let u_scale =
            params.u_left.abs() + params.u_right.abs() + params.forcing_amplitude.abs();
        let k_max =
            params.k0_a.max(params.k0_b) * (1.0 + params.nonlinearity * u_scale * u_scale);
        let residual_floor =
            f64::EPSILON * (1.0 + k_max / (h_min * h_min)) * (1.0 + u_scale);
        let inner_eps = (10.0 * residual_floor).max(1e-13);
        let oracle_eps = (1e3 * residual_floor).max(1e-11);
        Ok(Self {
            oracle_a: a.clone(),
            oracle_b: b.clone(),
            a,
            b,
            oracle_v: 0.0,
            oracle_q: 0.0,
            inner_eps,
            oracle_eps,
            params,
        })
    }

    /// Recommended residual tolerance for [`Mp2Problem::monolithic_step`].
    pub fn oracle_eps(&self) -> f64 {
        self.oracle_eps
    }

    pub fn params(&self) -> &Mp2Params {
        &self.params
    }

    pub fn initial_fields(&self) -> (InterfaceField, InterfaceField) {
        (
            InterfaceField::zeros(1, FieldRole::DisplacementLike),
            InterfaceField::zeros(1, FieldRole::TractionLike),
        )
    }

    /// Interface-consistency residual of the coupled step at (d, t),
    /// evaluated with both subdomains solved to tight tolerance from the
    /// current time level. Zero exactly at the coupled fixed point. The run
    /// state is untouched (the sub-solvers are cloned).
    pub fn stacked_residual(&self, d: &InterfaceField, t: &InterfaceField) -> Result<DVector<f64>> {
        if d.len() != 1 || t.len() != 1 {
            return Err(Error::LengthMismatch {
                left: d.len().max(t.len()),
                right: 1,
            });
        }
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        let mut sys = Mp2Stacked {
            a: &mut a,
            b: &mut b,
            inner_eps: self.inner_eps,
            guess: DVector::zeros(2),
        };
        let (value_b, flux_a) = sys.inner_solve(d.values()[0], t.values()[0])?;
        Ok(DVector::from_vec(vec![
            value_b - d.values()[0],
            flux_a - t.values()[0],
        ]))
    }

    /// Newton on the interface system from the oracle's committed state;
    /// commits the solution as the oracle's next time level.
    pub fn monolithic_step(
        &mut self,
        eps: f64,
        cap: usize,
    ) -> Result<(InterfaceField, InterfaceField)> {
        let (d, t) = {
            let mut sys = Mp2Stacked {
                a: &mut self.oracle_a,
                b: &mut self.oracle_b,
                inner_eps: self.inner_eps,
                guess: DVector::from_vec(vec![self.oracle_v, self.oracle_q]),
            };
            monolithic_solve(&mut sys, eps, cap)?
        };
        // leave the oracle sub-states exactly at the solution before commit
        let mut sys = Mp2Stacked {
            a: &mut self.oracle_a,
            b: &mut self.oracle_b,
            inner_eps: self.inner_eps,
            guess: DVector::zeros(2),
        };
        sys.inner_solve(d.values()[0], t.values()[0])?;
        self.oracle_a.commit_step();
        self.oracle_b.commit_step();
        self.oracle_v = d.values()[0];
        self.oracle_q = t.values()[0];
        Ok((d, t))
    }

    /// Scale of the boundary data and forcing, used by residual-bound checks.
    pub fn forcing_scale(&self) -> f64 {
        self.params.u_left.abs() + self.params.u_right.abs() + self.params.forcing_amplitude.abs()
    }

    /// The flux currently imposed on sub-solver B (the last exchanged value).
    pub fn imposed_flux(&self) -> f64 {
        self.b.imposed_flux()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::finite_difference_jacobian;

    fn value(v: f64) -> InterfaceField {
        InterfaceField::new(vec![v], FieldRole::DisplacementLike).unwrap()
    }

    fn flux(q: f64) -> InterfaceField {
        InterfaceField::new(vec![q], FieldRole::TractionLike).unwrap()
    }

    #[test]
    fn all_zero_problem_stays_zero() {
        let params = Mp2Params {
            forcing_amplitude: 0.0,
            u_left: 0.0,
            u_right: 0.0,
            ..Mp2Params::default()
        };
        let mut problem = Mp2Problem::new(params, 0.01).unwrap();
        for _ in 0..3 {
            problem.a.set_input(&value(0.0)).unwrap();
            let rep_a = problem
                .a
                .solve_call(NewtonBudget::UntilConverged, 1e-12, 100)
                .unwrap();
            problem.b.set_input(&flux(0.0)).unwrap();
            let rep_b = problem
                .b
                .solve_call(NewtonBudget::UntilConverged, 1e-12, 100)
                .unwrap();
            assert_eq!(rep_a.output.values()[0], 0.0);
            assert_eq!(rep_b.output.values()[0], 0.0);
            problem.a.commit_step();
            problem.b.commit_step();
        }
    }

    #[test]
    fn steady_linear_limit_matches_two_slab_conduction() {
        // nonlinearity off, no forcing, huge dt: the converged coupled state
        // is the exact piecewise-linear profile. With flux F = -k u':
        //   F* = (u_left - u_right) / (w_a/k_a + w_b/k_b)
        //   u*(interface) = u_left - F* w_a / k_a
        let params = Mp2Params {
            nonlinearity: 0.0,
            forcing_amplitude: 0.0,
            u_left: 1.0,
            u_right: 0.0,
            k0_a: 1.0,
            k0_b: 0.1,
            ..Mp2Params::default()
        };
        let mut problem = Mp2Problem::new(params, 1e12).unwrap();
        let eps = problem.oracle_eps();
        let (d, t) = problem.monolithic_step(eps, 100).unwrap();

        let (w_a, w_b) = (0.5, 0.5);
        let f_star = (1.0 - 0.0) / (w_a / 1.0 + w_b / 0.1);
        let u_star = 1.0 - f_star * w_a / 1.0;
        assert!(
            (d.values()[0] - u_star).abs() < 1e-7,
            "interface value {} vs analytic {}",
            d.values()[0],
            u_star
        );
        assert!(
            (t.values()[0] - f_star).abs() < 1e-7,
            "interface flux {} vs analytic {}",
            t.values()[0],
            f_star
        );
    }

    #[test]
    fn solver_a_jacobian_matches_finite_differences() {
        let params = Mp2Params {
            cells_a: 7,
            cells_b: 5,
            ..Mp2Params::default()
        };
        let mut a = Mp2SolverA::new(&params, 0.05);
        a.v = 0.35;
        a.u_old = DVector::from_fn(6, |i, _| 0.1 * i as f64);
        a.u = DVector::from_fn(6, |i, _| 0.3 - 0.07 * i as f64);
        let sys = a.system();
        let analytic = sys.jacobian(&a.u);
        let fd = finite_difference_jacobian(|u| sys.residual(u), &a.u);
        assert!((&analytic - &fd).norm() < 1e-5, "{}", (&analytic - &fd).norm());
    }

    #[test]
    fn solver_b_jacobian_matches_finite_differences() {
        let params = Mp2Params {
            cells_a: 7,
            cells_b: 5,
            ..Mp2Params::default()
        };
        let mut b = Mp2SolverB::new(&params, 0.05);
        b.q = -0.4;
        b.u_old = DVector::from_fn(5, |i, _| 0.05 * i as f64);
        b.u = DVector::from_fn(5, |i, _| 0.2 + 0.03 * i as f64);
        let sys = b.system();
        let analytic = sys.jacobian(&b.u);
        let fd = finite_difference_jacobian(|u| sys.residual(u), &b.u);
        assert!((&analytic - &fd).norm() < 1e-5, "{}", (&analytic - &fd).norm());
    }

    #[test]
    fn interface_sensitivities_match_finite_differences() {
        let params = Mp2Params::default();
        let mut problem = Mp2Problem::new(params, 0.01).unwrap();

        // solve once at (v, q) = (0.4, -0.3)
        let inner_eps = problem.inner_eps;
        let mut sys = Mp2Stacked {
            a: &mut problem.a,
            b: &mut problem.b,
            inner_eps,
            guess: DVector::zeros(2),
        };
        sys.inner_solve(0.4, -0.3).unwrap();
        let dq_dv = problem.a.dflux_dv().unwrap();
        let dv_dq = problem.b.dvalue_dq().unwrap();

        // finite differences through full re-solves
        let h = 1e-6;
        let probe = |v: f64, q: f64| -> (f64, f64) {
            let mut a = problem.a.clone();
            let mut b = problem.b.clone();
            let mut sys = Mp2Stacked {
                a: &mut a,
                b: &mut b,
                inner_eps,
                guess: DVector::zeros(2),
            };
            sys.inner_solve(v, q).unwrap()
        };
        let (_, fp) = probe(0.4 + h, -0.3);
        let (_, fm) = probe(0.4 - h, -0.3);
        let fd_dq_dv = (fp - fm) / (2.0 * h);
        let (vp, _) = probe(0.4, -0.3 + h);
        let (vm, _) = probe(0.4, -0.3 - h);
        let fd_dv_dq = (vp - vm) / (2.0 * h);

        assert!(
            (dq_dv - fd_dq_dv).abs() < 1e-4 * (1.0 + dq_dv.abs()),
            "dq/dv analytic {dq_dv} vs fd {fd_dq_dv}"
        );
        assert!(
            (dv_dq - fd_dv_dq).abs() < 1e-4 * (1.0 + dv_dq.abs()),
            "dv/dq analytic {dv_dq} vs fd {fd_dv_dq}"
        );
    }

    #[test]
    fn stacked_residual_vanishes_at_the_oracle_solution() {
        let mut problem = Mp2Problem::new(Mp2Params::default(), 0.01).unwrap();
        let eps = problem.oracle_eps();
        let (d, t) = problem.monolithic_step(eps, 100).unwrap();
        // fresh problem at the same (first) time level
        let fresh = Mp2Problem::new(Mp2Params::default(), 0.01).unwrap();
        let r = fresh.stacked_residual(&d, &t).unwrap();
        assert!(r.norm() < 10.0 * eps, "residual {} vs eps {eps}", r.norm());
    }
}
