//! Interface-update strategies applied to the structure-analog output each
//! coupling iteration.
//!
//! All three strategies consume the pair (previous interface iterate `x_k`,
//! raw solver output `x_tilde_k`) and produce the next interface iterate
//! `x_{k+1}`:
//!
//! - constant under-relaxation `x_{k+1} = w*x_tilde + (1-w)*x`,
//! - Aitken dynamic relaxation, which rescales `w` from successive interface
//!   residuals `r = x_tilde - x`,
//! - IQN-ILS, a quasi-Newton update built from the least-squares secant
//!   system of collected residual/output increment pairs, optionally reusing
//!   pairs from previous time steps.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::InterfaceField;

fn default_omega() -> f64 {
    0.8
}
fn default_omega0() -> f64 {
    0.5
}
fn default_omega_min() -> f64 {
    0.01
}
fn default_omega_max() -> f64 {
    2.0
}
fn default_reuse_steps() -> usize {
    4
}
fn default_qr_filter_eps() -> f64 {
    // Keeps the least-squares system well conditioned: surviving columns
    // carry at least this fraction of their norm as new information, which
    // bounds the secant coefficients by ||r|| / qr_filter_eps. Much smaller
    // values let near-dependent columns through and the update can blow up
    // on budget-limited strong-coupling runs.
    1e-2
}
fn default_fallback_omega() -> f64 {
    0.5
}

/// Accelerator selection and parameters (configuration side).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Accelerator {
    /// Constant under-relaxation with factor `omega` in (0, 1].
    Constant {
        #[serde(default = "default_omega")]
        omega: f64,
    },
    /// Aitken dynamic relaxation; `omega0` seeds each time step and updates
    /// are clamped into `[omega_min, omega_max]`.
    Aitken {
        #[serde(default = "default_omega0")]
        omega0: f64,
        #[serde(default = "default_omega_min")]
        omega_min: f64,
        #[serde(default = "default_omega_max")]
        omega_max: f64,
    },
    /// Interface quasi-Newton with inverse least squares.
    #[serde(rename = "iqn-ils")]
    IqnIls {
        /// How many previous time steps' secant pairs stay in the pool.
        #[serde(default = "default_reuse_steps")]
        reuse_steps: usize,
        /// Columns whose R-diagonal falls below `qr_filter_eps` times the
        /// column's own norm are dropped.
        #[serde(default = "default_qr_filter_eps")]
        qr_filter_eps: f64,
        /// Relaxation factor used whenever no usable secant columns exist.
        #[serde(default = "default_fallback_omega")]
        fallback_omega: f64,
    },
}

impl Default for Accelerator {
    fn default() -> Self {
        Accelerator::IqnIls {
            reuse_steps: default_reuse_steps(),
            qr_filter_eps: default_qr_filter_eps(),
            fallback_omega: default_fallback_omega(),
        }
    }
}

impl Accelerator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Accelerator::Constant { omega } => {
                if omega.is_nan() || omega <= 0.0 || omega > 1.0 {
                    return Err(Error::Config(
                        "accelerator.omega must be in (0, 1]".into(),
                    ));
                }
            }
            Accelerator::Aitken {
                omega0,
                omega_min,
                omega_max,
            } => {
                if omega0.is_nan()
                    || omega0 <= 0.0
                    || omega_min.is_nan()
                    || omega_min <= 0.0
                    || omega_max.is_nan()
                    || omega_max < omega_min
                {
                    return Err(Error::Config(
                        "accelerator: require omega0 > 0 and 0 < omega_min <= omega_max".into(),
                    ));
                }
            }
            Accelerator::IqnIls {
                qr_filter_eps,
                fallback_omega,
                ..
            } => {
                if qr_filter_eps.is_nan() || qr_filter_eps <= 0.0 {
                    return Err(Error::Config(
                        "accelerator.qr_filter_eps must be > 0".into(),
                    ));
                }
                if fallback_omega.is_nan() || fallback_omega <= 0.0 || fallback_omega > 1.0 {
                    return Err(Error::Config(
                        "accelerator.fallback_omega must be in (0, 1]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Short name used in logs and reports.
    pub fn name(&self) -> &'static str {
        match self {
            Accelerator::Constant { .. } => "constant",
            Accelerator::Aitken { .. } => "aitken",
            Accelerator::IqnIls { .. } => "iqn-ils",
        }
    }
}

/// Componentwise relaxation `w*x_tilde + (1-w)*x`.
pub fn relax_constant(
    x_k: &InterfaceField,
    x_tilde_k: &InterfaceField,
    omega: f64,
) -> Result<InterfaceField> {
    if x_k.len() != x_tilde_k.len() {
        return Err(Error::LengthMismatch {
            left: x_k.len(),
            right: x_tilde_k.len(),
        });
    }
    let blended = omega * x_tilde_k.vector() + (1.0 - omega) * x_k.vector();
    InterfaceField::from_vector(blended, x_tilde_k.role())
}

/// Aitken relaxation-factor update from two successive interface residuals
/// `r = x_tilde - x`:
///
/// ```text
/// w_new = -w_prev * <r_prev, r_curr - r_prev> / ||r_curr - r_prev||^2
/// ```
///
/// clamped into `[omega_min, omega_max]`. A degenerate denominator
/// (`r_curr == r_prev`) returns `omega_prev` unchanged.
pub fn aitken_omega(
    omega_prev: f64,
    r_prev: &DVector<f64>,
    r_curr: &DVector<f64>,
    omega_min: f64,
    omega_max: f64,
) -> f64 {
    let dr = r_curr - r_prev;
    let denom = dr.norm_squared();
    if denom == 0.0 || !denom.is_finite() {
        return omega_prev;
    }
    let omega = -omega_prev * r_prev.dot(&dr) / denom;
    omega.clamp(omega_min, omega_max)
}

/// One secant pair; `age` counts how many committed time steps ago it was
/// collected (0 = the running step).
#[derive(Debug, Clone)]
struct SecantPair {
    dv: DVector<f64>,
    dw: DVector<f64>,
    age: usize,
}

/// IQN-ILS state: collected secant pairs plus the previous iteration's
/// residual and output needed to form the next pair.
#[derive(Debug, Clone, Default)]
pub struct IqnState {
    pairs: Vec<SecantPair>,
    r_prev: Option<DVector<f64>>,
    x_tilde_prev: Option<DVector<f64>>,
    /// Set when the last update fell back to constant relaxation.
    pub last_fallback: bool,
}

impl IqnState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn column_count(&self) -> usize {
        self.pairs.len()
    }

    /// Quasi-Newton interface update. With no usable columns this falls back
    /// to constant relaxation with `fallback_omega` (flagged, not an error).
    pub fn update(
        &mut self,
        x_k: &InterfaceField,
        x_tilde_k: &InterfaceField,
        qr_filter_eps: f64,
        fallback_omega: f64,
    ) -> Result<InterfaceField> {
        if x_k.len() != x_tilde_k.len() {
            return Err(Error::LengthMismatch {
                left: x_k.len(),
                right: x_tilde_k.len(),
            });
        }
        let r_k = x_tilde_k.vector() - x_k.vector();

        // Append the new secant pair once a previous iterate exists.
        if let (Some(r_prev), Some(xt_prev)) = (&self.r_prev, &self.x_tilde_prev) {
            self.pairs.insert(
                0,
                SecantPair {
                    dv: &r_k - r_prev,
                    dw: x_tilde_k.vector() - xt_prev,
                    age: 0,
                },
            );
        }
        self.r_prev = Some(r_k.clone());
        self.x_tilde_prev = Some(x_tilde_k.vector().clone());

        if self.pairs.is_empty() {
            self.last_fallback = true;
            return relax_constant(x_k, x_tilde_k, fallback_omega);
        }

        // Modified Gram-Schmidt with column filtering. Columns are processed
        // newest first; a column whose orthogonalized norm (the R diagonal)
        // falls below qr_filter_eps times its own norm is dropped from the
        // state. Scaling by the column's own norm keeps the test meaningful
        // when old large columns and fresh near-converged small ones mix.
        let mut q_cols: Vec<DVector<f64>> = Vec::new();
        let mut r_rows: Vec<Vec<f64>> = Vec::new(); // r_rows[i][j]: row i, kept column j
        let mut kept: Vec<usize> = Vec::new();
        let mut dropped: Vec<usize> = Vec::new();

        for (idx, pair) in self.pairs.iter().enumerate() {
            let col_norm = pair.dv.norm();
            let mut v = pair.dv.clone();
            let mut coeffs = Vec::with_capacity(q_cols.len());
            for q in &q_cols {
                let c = q.dot(&v);
                v -= c * q;
                coeffs.push(c);
            }
            let diag = v.norm();
            if !diag.is_finite() || col_norm == 0.0 || diag <= qr_filter_eps * col_norm {
                dropped.push(idx);
                continue;
            }
            for (i, c) in coeffs.into_iter().enumerate() {
                r_rows[i].push(c);
            }
            q_cols.push(v / diag);
            let mut row = vec![0.0; kept.len()];
            row.push(diag);
            r_rows.push(row);
            kept.push(idx);
        }

        // Filtered columns leave the state for good.
        if !dropped.is_empty() {
            let mut keep_flags = vec![true; self.pairs.len()];
            for &i in &dropped {
                keep_flags[i] = false;
            }
            let mut it = keep_flags.iter();
            self.pairs.retain(|_| *it.next().unwrap());
        }

        if kept.is_empty() {
            self.last_fallback = true;
            return relax_constant(x_k, x_tilde_k, fallback_omega);
        }
        self.last_fallback = false;

        // Solve min || V a + r_k ||: R a = -Q^T r_k by back substitution.
        let n = q_cols.len();
        let rhs: Vec<f64> = q_cols.iter().map(|q| -q.dot(&r_k)).collect();
        let mut alpha = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for j in (i + 1)..n {
                s -= r_rows[i][j] * alpha[j];
            }
            alpha[i] = s / r_rows[i][i];
        }

        // x_{k+1} = x_tilde_k + W a, with W restricted to surviving columns.
        let mut next = x_tilde_k.vector().clone();
        let kept_pairs: Vec<&SecantPair> = self.pairs.iter().collect();
        for (j, pair) in kept_pairs.iter().enumerate() {
            next += alpha[j] * &pair.dw;
        }
        InterfaceField::from_vector(next, x_tilde_k.role())
    }

    /// Closes the time step: current-step pairs join the reuse pool, pairs
    /// older than `reuse_steps` leave, and the per-step iteration memory is
    /// cleared.
    pub fn advance_step(&mut self, reuse_steps: usize) {
        for pair in &mut self.pairs {
            pair.age += 1;
        }
        self.pairs.retain(|p| p.age <= reuse_steps);
        self.r_prev = None;
        self.x_tilde_prev = None;
        self.last_fallback = false;
    }
}

/// Per-run accelerator state machine.
#[derive(Debug, Clone)]
pub enum AcceleratorState {
    Constant {
        omega: f64,
    },
    Aitken {
        omega0: f64,
        omega_min: f64,
        omega_max: f64,
        omega: f64,
        r_prev: Option<DVector<f64>>,
    },
    IqnIls {
        reuse_steps: usize,
        qr_filter_eps: f64,
        fallback_omega: f64,
        state: IqnState,
    },
}

impl AcceleratorState {
    pub fn new(spec: &Accelerator) -> Self {
        match *spec {
            Accelerator::Constant { omega } => AcceleratorState::Constant { omega },
            Accelerator::Aitken {
                omega0,
                omega_min,
                omega_max,
            } => AcceleratorState::Aitken {
                omega0,
                omega_min,
                omega_max,
                omega: omega0,
                r_prev: None,
            },
            Accelerator::IqnIls {
                reuse_steps,
                qr_filter_eps,
                fallback_omega,
            } => AcceleratorState::IqnIls {
                reuse_steps,
                qr_filter_eps,
                fallback_omega,
                state: IqnState::new(),
            },
        }
    }

    /// Computes the next interface iterate from the previous iterate and the
    /// raw solver output.
    pub fn update(
        &mut self,
        x_k: &InterfaceField,
        x_tilde_k: &InterfaceField,
    ) -> Result<InterfaceField> {
        match self {
            AcceleratorState::Constant { omega } => relax_constant(x_k, x_tilde_k, *omega),
            AcceleratorState::Aitken {
                omega_min,
                omega_max,
                omega,
                r_prev,
                ..
            } => {
                let r_curr = x_tilde_k.vector() - x_k.vector();
                if let Some(prev) = r_prev.as_ref() {
                    *omega = aitken_omega(*omega, prev, &r_curr, *omega_min, *omega_max);
                }
                *r_prev = Some(r_curr);
                relax_constant(x_k, x_tilde_k, *omega)
            }
            AcceleratorState::IqnIls {
                qr_filter_eps,
                fallback_omega,
                state,
                ..
            } => state.update(x_k, x_tilde_k, *qr_filter_eps, *fallback_omega),
        }
    }

    /// Closes the current time step.
    pub fn advance_step(&mut self) {
        match self {
            AcceleratorState::Constant { .. } => {}
            AcceleratorState::Aitken {
                omega0,
                omega,
                r_prev,
                ..
            } => {
                *omega = *omega0;
                *r_prev = None;
            }
            AcceleratorState::IqnIls {
                reuse_steps, state, ..
            } => state.advance_step(*reuse_steps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldRole;

    fn disp(values: Vec<f64>) -> InterfaceField {
        InterfaceField::new(values, FieldRole::DisplacementLike).unwrap()
    }

    #[test]
    fn relaxation_with_unit_omega_is_identity_on_x_tilde() {
        let x = disp(vec![1.0, -2.0]);
        let xt = disp(vec![0.25, 7.0]);
        let out = relax_constant(&x, &xt, 1.0).unwrap();
        assert_eq!(out.values(), xt.values());
    }

    #[test]
    fn relaxation_blends_componentwise() {
        let x = disp(vec![0.0]);
        let xt = disp(vec![1.0]);
        let out = relax_constant(&x, &xt, 0.8).unwrap();
        assert!((out.values()[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn relaxation_fixed_point_is_preserved() {
        let x = disp(vec![2.0, -3.0]);
        let out = relax_constant(&x, &x.clone(), 0.5).unwrap();
        assert_eq!(out.values(), x.values());
    }

    #[test]
    fn relaxation_rejects_length_mismatch() {
        let x = disp(vec![1.0]);
        let xt = disp(vec![1.0, 2.0]);
        assert!(matches!(
            relax_constant(&x, &xt, 0.5),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn aitken_keeps_omega_when_residual_vanishes() {
        let r_prev = DVector::from_vec(vec![1.0, 2.0]);
        let r_curr = DVector::zeros(2);
        // -w * <r, -r> / ||r||^2 = w
        let w = aitken_omega(0.37, &r_prev, &r_curr, 0.01, 2.0);
        assert!((w - 0.37).abs() < 1e-15);
    }

    #[test]
    fn aitken_collinear_residuals_give_scaled_omega() {
        // r_curr = c * r_prev  =>  w_new = w_prev / (1 - c)
        let r_prev = DVector::from_vec(vec![3.0, -1.0]);
        let r_curr = -1.0 * &r_prev;
        let w = aitken_omega(0.5, &r_prev, &r_curr, 0.01, 2.0);
        assert!((w - 0.25).abs() < 1e-15);
    }

    #[test]
    fn aitken_orthogonal_equal_norm_residuals_halve_omega() {
        let r_prev = DVector::from_vec(vec![1.0, 0.0]);
        let r_curr = DVector::from_vec(vec![0.0, 1.0]);
        let w = aitken_omega(0.8, &r_prev, &r_curr, 0.01, 2.0);
        assert!((w - 0.4).abs() < 1e-15);
    }

    #[test]
    fn aitken_degenerate_residuals_return_omega_prev() {
        let r = DVector::from_vec(vec![1.0, 2.0]);
        let w = aitken_omega(0.9, &r, &r.clone(), 0.01, 2.0);
        assert_eq!(w, 0.9);
    }

    #[test]
    fn aitken_clamps_into_bounds() {
        // nearly identical residuals blow the raw formula far beyond the cap
        let r_prev = DVector::from_vec(vec![1.0]);
        let r_curr = DVector::from_vec(vec![0.999]);
        let w = aitken_omega(1.0, &r_prev, &r_curr, 0.01, 2.0);
        assert_eq!(w, 2.0);
    }

    #[test]
    fn empty_state_falls_back_to_constant_relaxation() {
        let mut state = IqnState::new();
        let x = disp(vec![0.0, 4.0]);
        let xt = disp(vec![1.0, 2.0]);
        let out = state.update(&x, &xt, 1e-2, 0.5).unwrap();
        let expected = relax_constant(&x, &xt, 0.5).unwrap();
        assert_eq!(out.values(), expected.values());
        assert!(state.last_fallback);
    }

    #[test]
    fn secant_step_is_exact_on_scalar_affine_maps() {
        // x_tilde = a*x + b with a = -2, b = 3: fixed point at 1
        let (a, b) = (-2.0, 3.0);
        let g = |x: f64| a * x + b;
        let mut state = IqnState::new();

        let x0 = 0.0;
        let x1 = state
            .update(&disp(vec![x0]), &disp(vec![g(x0)]), 1e-2, 0.5)
            .unwrap();
        assert!(state.last_fallback);
        let x1v = x1.values()[0];
        assert!((x1v - 1.5).abs() < 1e-15, "fallback step should give 1.5");

        let x2 = state
            .update(&disp(vec![x1v]), &disp(vec![g(x1v)]), 1e-2, 0.5)
            .unwrap();
        assert!(!state.last_fallback);
        assert!(
            (x2.values()[0] - 1.0).abs() < 1e-12,
            "IQN lands on the fixed point, got {}",
            x2.values()[0]
        );
    }

    #[test]
    fn duplicate_iteration_filters_the_zero_column_and_keeps_output() {
        let (a, b) = (0.5, 1.0);
        let g = |x: f64| a * x + b;
        let mut state = IqnState::new();
        let x0 = 0.0;
        let x1 = state
            .update(&disp(vec![x0]), &disp(vec![g(x0)]), 1e-2, 0.5)
            .unwrap();
        let x1v = x1.values()[0];
        let out1 = state
            .update(&disp(vec![x1v]), &disp(vec![g(x1v)]), 1e-2, 0.5)
            .unwrap();
        let cols_before = state.column_count();
        // identical (x, x_tilde) pair again: the new column is zero
        let out2 = state
            .update(&disp(vec![x1v]), &disp(vec![g(x1v)]), 1e-2, 0.5)
            .unwrap();
        assert_eq!(state.column_count(), cols_before, "zero column was dropped");
        assert_eq!(out1.values(), out2.values());
        assert!(!state.last_fallback);
    }

    #[test]
    fn exactly_duplicated_column_never_changes_the_output() {
        // build two identical states, inject a verbatim copy of an existing
        // secant pair into one of them, and compare the next update
        let g = |x: f64| -1.5 * x + 2.0;
        let mut reference = IqnState::new();
        let mut x = 0.2;
        for _ in 0..3 {
            let next = reference
                .update(&disp(vec![x]), &disp(vec![g(x)]), 1e-2, 0.5)
                .unwrap();
            x = next.values()[0];
        }
        let mut tampered = reference.clone();
        let dup = tampered.pairs[0].clone();
        tampered.pairs.insert(1, dup);

        let out_ref = reference
            .update(&disp(vec![x]), &disp(vec![g(x)]), 1e-2, 0.5)
            .unwrap();
        let out_tampered = tampered
            .update(&disp(vec![x]), &disp(vec![g(x)]), 1e-2, 0.5)
            .unwrap();
        assert_eq!(out_ref.values(), out_tampered.values());
        // the duplicate was dropped from the state as well
        assert_eq!(reference.column_count(), tampered.column_count());
    }

    #[test]
    fn advance_step_with_zero_reuse_empties_the_state() {
        let mut state = IqnState::new();
        let _ = state.update(&disp(vec![0.0]), &disp(vec![1.0]), 1e-2, 0.5);
        let _ = state.update(&disp(vec![0.5]), &disp(vec![0.75]), 1e-2, 0.5);
        assert!(state.column_count() > 0);
        state.advance_step(0);
        assert_eq!(state.column_count(), 0);
        assert!(state.r_prev.is_none());
    }

    #[test]
    fn advance_step_truncates_to_reuse_window() {
        // three steps, one linearly independent secant pair each (so the QR
        // filter keeps them all and only the FIFO truncation removes columns)
        let mut state = IqnState::new();
        let directions = [
            (vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]),
            (vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]),
            (vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]),
        ];
        for (x0, xt) in &directions {
            let _ = state.update(&disp(x0.clone()), &disp(vec![0.5, 0.5, 0.5]), 1e-2, 0.5);
            let _ = state.update(&disp(x0.clone()), &disp(xt.clone()), 1e-2, 0.5);
            state.advance_step(2);
        }
        // pairs aged 1 and 2 survive, the age-3 pair is gone
        assert_eq!(state.column_count(), 2);
        assert!(state.pairs.iter().all(|p| p.age <= 2));
    }

    #[test]
    fn advance_step_on_empty_state_is_a_no_op() {
        let mut state = IqnState::new();
        state.advance_step(3);
        assert_eq!(state.column_count(), 0);
    }

    #[test]
    fn iqn_converges_in_three_iterations_on_affine_scalar_maps() {
        // secant exactness: from any start, at most 3 coupling iterations
        for (a, b, x0) in [
            (-2.0, 3.0, 0.0),
            (0.9, -1.0, 10.0),
            (-5.0, 2.0, 1.0),
            (3.0, 0.5, -4.0),
        ] {
            let fixed_point = b / (1.0 - a);
            let g = |x: f64| a * x + b;
            let mut state = IqnState::new();
            let mut x = x0;
            let mut hit = false;
            for _ in 0..3 {
                let next = state
                    .update(&disp(vec![x]), &disp(vec![g(x)]), 1e-2, 0.5)
                    .unwrap();
                x = next.values()[0];
                if (x - fixed_point).abs() <= 1e-9 * (1.0 + fixed_point.abs()) {
                    hit = true;
                    break;
                }
            }
            assert!(hit, "a={a}, b={b}, x0={x0}: ended at {x} vs {fixed_point}");
        }
    }
}
