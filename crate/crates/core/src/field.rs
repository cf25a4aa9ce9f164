//! Interface data exchanged between the two sub-solvers.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Default denominator floor for relative-change measurements.
pub const DEFAULT_RELATIVE_FLOOR: f64 = 1e-12;

/// Which side of the Dirichlet-Neumann exchange a field belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    /// Interface values imposed on sub-solver A (kinematic analog).
    DisplacementLike,
    /// Interface fluxes/tractions imposed on sub-solver B (dynamic analog).
    TractionLike,
}

/// A flat vector of interface degrees of freedom with a role tag.
///
/// The length is fixed for the lifetime of a coupled run and every entry is
/// finite; both invariants are enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceField {
    values: DVector<f64>,
    role: FieldRole,
}

impl InterfaceField {
    pub fn new(values: Vec<f64>, role: FieldRole) -> Result<Self> {
        Self::from_vector(DVector::from_vec(values), role)
    }

    pub fn from_vector(values: DVector<f64>, role: FieldRole) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "interface field must have length >= 1".into(),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("interface field entry {i}"),
            });
        }
        Ok(Self { values, role })
    }

    pub fn zeros(len: usize, role: FieldRole) -> Self {
        assert!(len >= 1, "interface field must have length >= 1");
        Self {
            values: DVector::zeros(len),
            role,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn values(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }

    pub(crate) fn vector(&self) -> &DVector<f64> {
        &self.values
    }
}

/// Relative L2 change between two iterates of the same field:
/// `||curr - prev|| / max(||curr||, floor)`.
///
/// Returns 0 exactly when `curr == prev` bitwise; the floor keeps the measure
/// defined near zero fields.
pub fn relative_change(prev: &InterfaceField, curr: &InterfaceField, floor: f64) -> Result<f64> {
    relative_change_raw(prev.vector(), curr.vector(), floor)
}

pub(crate) fn relative_change_raw(
    prev: &DVector<f64>,
    curr: &DVector<f64>,
    floor: f64,
) -> Result<f64> {
    if prev.len() != curr.len() {
        return Err(Error::LengthMismatch {
            left: prev.len(),
            right: curr.len(),
        });
    }
    if !floor.is_finite() || floor <= 0.0 {
        return Err(Error::InvalidArgument("relative floor must be > 0".into()));
    }
    if prev == curr {
        return Ok(0.0);
    }
    let diff = (curr - prev).norm();
    let denom = curr.norm().max(floor);
    let change = diff / denom;
    if !change.is_finite() {
        return Err(Error::NonFinite {
            context: "relative change".into(),
        });
    }
    Ok(change)
}
