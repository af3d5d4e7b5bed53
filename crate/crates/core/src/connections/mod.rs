//! Full bounded solutions connecting equilibria of the limit fields.

pub mod hyperbolicity;
pub mod manifold;
pub mod shoot;
pub mod sweep;

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{DynamicsError, Equilibrium, Trajectory};
use crate::fields::FieldError;

pub use hyperbolicity::{intersection_dimension, weak_hyperbolicity, weak_hyperbolicity_along, HyperbolicityReport};
pub use manifold::{
    exit_functionals, invariant_subspace, local_unstable_seeds, stable_subspace, unstable_subspace, SeedModel,
    UnstableCurve,
};
pub use shoot::{shoot_connections, shoot_field, ShootOptions};
pub use sweep::{
    check_index_monotonicity, count_connections_sweep, exhaustive_bounded_search, find_all_connections, limit_equilibria,
    BoundedSearch, ConnectionSet, IndexViolation, IndexViolationKind, SearchOptions, SweepRow,
};

#[derive(Debug, Error, PartialEq)]
pub enum ConnectionError {
    #[error("equilibrium at {0:?} is not hyperbolic")]
    NotHyperbolic(Vec<f64>),
    #[error("unstable manifold of dimension {0} cannot be parametrized by one parameter")]
    UnstableDimension(usize),
    #[error("2λ is an eigenvalue of the Jacobian; no quadratic correction exists")]
    Resonance,
    #[error("invalid shooting options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// How a connection passed the endpoint test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Acceptance {
    /// A grid seed already met the tolerance.
    Direct,
    /// Refined inside a sign change of the miss.
    Bisection,
    /// Refined at a local minimum of |miss| and accepted at ten times the
    /// tolerance; typical of a tangency.
    Tangential,
}

/// A refined connection `u` on `[-T, T]` from an equilibrium of `f^{-∞}` to
/// one of `f^{+∞}`.
#[derive(Clone, Debug, Serialize)]
pub struct Connection {
    /// Seed parameter on the local unstable manifold.
    pub h0: f64,
    pub u0: Vec<f64>,
    /// `(|u(-T) - e⁻|, |u(T) - e⁺|)`.
    pub endpoint_errors: (f64, f64),
    pub morse_source: usize,
    pub morse_target: usize,
    /// `None` when the tangent propagation failed.
    pub weakly_hyperbolic: Option<bool>,
    pub tangent_intersection_dim: Option<usize>,
    pub acceptance: Acceptance,
    /// The orbit stays within tolerance of its endpoints over the outer tenth
    /// of the window.
    pub settled: bool,
    pub t_final: f64,
    pub source: Equilibrium,
    pub target: Equilibrium,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

impl Connection {
    pub fn max_endpoint_error(&self) -> f64 {
        self.endpoint_errors.0.max(self.endpoint_errors.1)
    }
}
