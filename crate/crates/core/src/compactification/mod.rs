//! Annulus compactification of an asymptotically autonomous cycle `(f, g)`.
//!
//! The annulus `1/2 ≤ |z| ≤ 1` carries the semiflow `ṙ = 1 - r`,
//! `φ̇ = (1 - r) + r cos φ`. The map `F` sends the angle `-π/2` to `f^{-∞}`,
//! `π/2` to `f^{+∞}`, the right half circle to the translates of `f` and the
//! left half circle to the translates of `g`. Composing with the flow from
//! `z₀ = 1/2` gives the initial element `y₀`.

pub mod annulus;
pub mod element;
pub mod metric;

use thiserror::Error;

use crate::fields::FieldError;

pub use annulus::{angle_solution, annulus_flow, gd, gd_inv, wrap_angle, AnnulusPoint};
pub use element::{build_initial_element, Branch, InitialElement};
pub use metric::{certify_rho, hull_metric, CertifyOptions, HullOptions, RhoCertificate, RhoRow};

#[derive(Debug, Error, PartialEq)]
pub enum CompactError {
    #[error("sector width rho = {0} must satisfy 0 <= rho < pi/4")]
    RhoOutOfRange(f64),
    #[error("rho values must be strictly decreasing")]
    RhosNotDecreasing,
    #[error(transparent)]
    Field(#[from] FieldError),
}
