//! Trajectories, linearizations, equilibria and Morse indices.

pub mod equilibria;
pub mod integrate;
pub mod linearize;
pub mod trajectory;

use thiserror::Error;

use crate::fields::{EvalError, FieldError};

pub use equilibria::{find_equilibria, morse_index, spectrum, Equilibrium, EquilibriumSearch, FieldTag};
pub use integrate::{flow_endpoint, integrate, integrate_field, march, MarchEnd, Rk4, StepOptions};
pub use linearize::{linearize_along, linearize_field, propagate_subspace, FundamentalSolution};
pub use trajectory::Trajectory;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("expected a state of dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("t = {t} lies outside the support [{lo}, {hi}]")]
    OutsideSupport { t: f64, lo: f64, hi: f64 },
    #[error("adaptive step size collapsed at t = {t}")]
    StepLimit { t: f64 },
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("equilibria are only defined for autonomous fields")]
    NotAutonomous,
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl From<EvalError> for DynamicsError {
    fn from(e: EvalError) -> Self {
        DynamicsError::Field(e.into())
    }
}

/// Euclidean distance.
#[inline]
pub fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
