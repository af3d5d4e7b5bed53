//! Weak hyperbolicity: the linearization along a connection has no nonzero
//! bounded solution iff the transported unstable and stable tangent spaces
//! meet only in 0 at time 0.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dynamics::{propagate_subspace, DynamicsError, Equilibrium, Trajectory};
use crate::fields::{DifferentiableField, ProblemSpec};

use super::manifold::{stable_subspace, unstable_subspace};
use super::Connection;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HyperbolicityReport {
    /// `dim(TW^u ∩ TW^s)` at `t = 0`; `None` when propagation failed.
    pub intersection_dim: Option<usize>,
    pub weakly_hyperbolic: Option<bool>,
    /// Singular values of the stacked bases, descending.
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    /// Transported bases at `t = 0`, one vector per column.
    pub unstable_tangent: Vec<Vec<f64>>,
    pub stable_tangent: Vec<Vec<f64>>,
    pub note: Option<String>,
}

impl HyperbolicityReport {
    fn unknown(threshold: f64, err: &DynamicsError) -> Self {
        HyperbolicityReport {
            intersection_dim: None,
            weakly_hyperbolic: None,
            singular_values: Vec::new(),
            threshold,
            unstable_tangent: Vec::new(),
            stable_tangent: Vec::new(),
            note: Some(format!("tangent propagation failed: {err}")),
        }
    }
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

/// Number of independent directions shared by the column spans of two
/// orthonormal bases, judged by singular values of `[a b]` above `threshold`.
pub fn intersection_dimension(a: &DMatrix<f64>, b: &DMatrix<f64>, threshold: f64) -> (usize, Vec<f64>) {
    let n = a.nrows();
    let cols = a.ncols() + b.ncols();
    if cols == 0 {
        return (0, Vec::new());
    }
    let stacked = DMatrix::from_fn(n, cols, |r, c| {
        if c < a.ncols() {
            a[(r, c)]
        } else {
            b[(r, c - a.ncols())]
        }
    });
    let mut sv: Vec<f64> = stacked.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    // a tall-skinny stack has at most n nonzero singular values
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    (cols - rank, sv)
}

/// Core test on an explicit field and solution `u` defined on `[-t_final, t_final]`.
/// With `translation` set, one shared direction (the time derivative of an
/// autonomous solution) is discounted.
pub fn weak_hyperbolicity_along<F: DifferentiableField + ?Sized>(
    field: &F,
    u: &Trajectory,
    source: &Equilibrium,
    target: &Equilibrium,
    dt: f64,
    threshold: f64,
    translation: bool,
) -> HyperbolicityReport {
    let (lo, hi) = (u.t_min(), u.t_max());
    let t0 = 0.0f64.clamp(lo, hi);
    let unstable = propagate_subspace(field, u, &unstable_subspace(source), lo, t0, dt);
    let stable = propagate_subspace(field, u, &stable_subspace(target), hi, t0, dt);
    let (unstable, stable) = match (unstable, stable) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return HyperbolicityReport::unknown(threshold, &e),
    };
    if unstable.iter().chain(stable.iter()).any(|v| !v.is_finite()) {
        return HyperbolicityReport::unknown(threshold, &DynamicsError::NonFinite { t: t0 });
    }
    let (dim, sv) = intersection_dimension(&unstable, &stable, threshold);
    let dim = if translation { dim.saturating_sub(1) } else { dim };
    HyperbolicityReport {
        intersection_dim: Some(dim),
        weakly_hyperbolic: Some(dim == 0),
        singular_values: sv,
        threshold,
        unstable_tangent: columns(&unstable),
        stable_tangent: columns(&stable),
        note: None,
    }
}

/// Weak hyperbolicity of a connection of `problem.f`, with the problem's
/// step and angle threshold.
pub fn weak_hyperbolicity(problem: &ProblemSpec, conn: &Connection) -> HyperbolicityReport {
    weak_hyperbolicity_along(
        &problem.f,
        &conn.trajectory,
        &conn.source,
        &conn.target,
        problem.integrator.dt,
        problem.tolerances.angle_tol,
        super::shoot::translation_invariant(&problem.f, &conn.trajectory, &conn.source),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::FieldTag;
    use crate::fields::catalog::linear_saddle;

    #[test]
    fn stacked_basis_dimension() {
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert_eq!(intersection_dimension(&e1, &e2, 1e-5).0, 0);
        assert_eq!(intersection_dimension(&e1, &e1, 1e-5).0, 1);
        let full = DMatrix::<f64>::identity(2, 2);
        assert_eq!(intersection_dimension(&full, &e1, 1e-5).0, 1);
    }

    #[test]
    fn constant_connection_at_a_saddle() {
        let f = linear_saddle(1.0, 2.0).unwrap();
        let eq = Equilibrium::at_point(&f, vec![0.0, 0.0], FieldTag::Autonomous, 1e-6).unwrap();
        let u = Trajectory::constant(&[0.0, 0.0], -5.0, 5.0);
        let r = weak_hyperbolicity_along(&f, &u, &eq, &eq, 0.01, 1e-5, false);
        assert_eq!(r.intersection_dim, Some(0));
        assert_eq!(r.weakly_hyperbolic, Some(true));
    }
}
