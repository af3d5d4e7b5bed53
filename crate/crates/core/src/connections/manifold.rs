//! Invariant subspaces of hyperbolic equilibria and seeds on local
//! unstable manifolds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::Equilibrium;
use crate::fields::catalog::trivial_index_unstable_point;
use crate::fields::VectorFieldSpec;

use super::ConnectionError;

const SUBSPACE_ITERATIONS: usize = 200;
const SECOND_DERIVATIVE_STEP: f64 = 1e-4;

/// Orthonormal basis (as columns) of the span of the generalized eigenspaces
/// of `j` with real part above (`unstable`) or below zero.
pub fn invariant_subspace(j: &DMatrix<f64>, dim: usize, unstable: bool) -> DMatrix<f64> {
    let n = j.nrows();
    if dim == 0 {
        return DMatrix::zeros(n, 0);
    }
    if dim == n {
        return DMatrix::identity(n, n);
    }
    // subspace iteration on exp(±τJ): the dominant subspace is the wanted one
    let scale = j.abs().max().max(1.0);
    let sign = if unstable { 1.0 } else { -1.0 };
    let step = (j * (sign * 4.0 / scale)).exp();
    let mut q = DMatrix::from_fn(n, dim, |r, c| {
        if r == c {
            1.0
        } else {
            0.37 / (1.0 + (r + 2 * c) as f64)
        }
    });
    for _ in 0..SUBSPACE_ITERATIONS {
        q = (&step * &q).qr().q();
    }
    q
}

pub fn unstable_subspace(eq: &Equilibrium) -> DMatrix<f64> {
    invariant_subspace(&eq.jacobian_matrix(), eq.morse_index, true)
}

pub fn stable_subspace(eq: &Equilibrium) -> DMatrix<f64> {
    invariant_subspace(&eq.jacobian_matrix(), eq.dimension() - eq.morse_index, false)
}

/// Orthonormal basis of the orthogonal complement of the stable subspace.
/// Pairing a displacement with it measures the unstable component.
pub fn exit_functionals(eq: &Equilibrium) -> DMatrix<f64> {
    let n = eq.dimension();
    let s = stable_subspace(eq);
    let p = DMatrix::<f64>::identity(n, n) - &s * s.transpose();
    let svd = p.svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    DMatrix::from_fn(n, eq.morse_index, |r, c| u[(r, idx[c])])
}

/// Parametrization of a one-dimensional local unstable manifold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SeedModel {
    /// `e + h v`.
    Linear,
    /// `e + h v + h² w` with the second-order invariance correction `w`.
    Quadratic,
    /// The closed form `(h, h² - c)` of the trivial-index example.
    TrivialIndexExact { c: f64 },
}

/// Unit unstable direction and the curvature correction of a saddle with a
/// one-dimensional unstable manifold.
#[derive(Clone, Debug)]
pub struct UnstableCurve {
    pub point: Vec<f64>,
    pub lambda: f64,
    pub direction: Vec<f64>,
    pub curvature: Vec<f64>,
    pub model: SeedModel,
}

impl UnstableCurve {
    pub fn new(field: &VectorFieldSpec, eq: &Equilibrium, model: SeedModel) -> Result<Self, ConnectionError> {
        check_saddle(eq)?;
        if eq.morse_index != 1 {
            return Err(ConnectionError::UnstableDimension(eq.morse_index));
        }
        let n = eq.dimension();
        let j = eq.jacobian_matrix();
        let lambda = eq.eigen_real_parts[0];
        let mut v = unstable_subspace(eq).column(0).into_owned();
        // fix the sign so that the first significant component is positive
        if let Some(k) = v.iter().position(|x| x.abs() > 1e-8) {
            if v[k] < 0.0 {
                v = -v;
            }
        }
        let curvature = match model {
            SeedModel::Linear => vec![0.0; n],
            _ => {
                // (2λ I - J) w = ½ D²f(e)[v, v], with D²f[v,v] from central
                // differences of the symbolic Jacobian
                let d = SECOND_DERIVATIVE_STEP;
                let shift = |s: f64| -> Vec<f64> {
                    eq.point.iter().zip(v.iter()).map(|(p, q)| p + s * q).collect()
                };
                let jp = field.jacobian_at(0.0, &shift(d))?;
                let jm = field.jacobian_at(0.0, &shift(-d))?;
                let d2: DVector<f64> = (jp - jm) * &v / (2.0 * d);
                let a = DMatrix::<f64>::identity(n, n) * (2.0 * lambda) - &j;
                let w = a
                    .lu()
                    .solve(&(d2 * 0.5))
                    .ok_or(ConnectionError::Resonance)?;
                w.iter().copied().collect()
            }
        };
        Ok(UnstableCurve {
            point: eq.point.clone(),
            lambda,
            direction: v.iter().copied().collect(),
            curvature,
            model,
        })
    }

    /// The point with parameter `h`.
    pub fn at(&self, h: f64) -> Vec<f64> {
        if let SeedModel::TrivialIndexExact { c } = self.model {
            return trivial_index_unstable_point(c, h).to_vec();
        }
        self.point
            .iter()
            .zip(&self.direction)
            .zip(&self.curvature)
            .map(|((p, v), w)| p + h * v + h * h * w)
            .collect()
    }
}

pub(crate) fn check_saddle(eq: &Equilibrium) -> Result<(), ConnectionError> {
    if !eq.hyperbolic {
        return Err(ConnectionError::NotHyperbolic(eq.point.clone()));
    }
    Ok(())
}

/// `count` points of the local unstable manifold at parameter distance at
/// most `radius`, from `-radius` to `radius`. With a one-dimensional manifold
/// the parameters are evenly spaced; otherwise the points lie on the sphere
/// of radius `radius` in the unstable eigenspace.
pub fn local_unstable_seeds(
    field: &VectorFieldSpec,
    eq: &Equilibrium,
    radius: f64,
    count: usize,
    model: SeedModel,
) -> Result<Vec<Vec<f64>>, ConnectionError> {
    check_saddle(eq)?;
    match eq.morse_index {
        0 => Err(ConnectionError::UnstableDimension(0)),
        1 => {
            let curve = UnstableCurve::new(field, eq, model)?;
            Ok((0..count)
                .map(|k| {
                    let s = if count == 1 {
                        1.0
                    } else {
                        -1.0 + 2.0 * k as f64 / (count - 1) as f64
                    };
                    curve.at(radius * s)
                })
                .collect())
        }
        m => {
            let basis = unstable_subspace(eq);
            Ok(sphere_directions(m, count)
                .into_iter()
                .map(|d| {
                    let v = &basis * DVector::from_vec(d);
                    eq.point.iter().zip(v.iter()).map(|(p, q)| p + radius * q).collect()
                })
                .collect())
        }
    }
}

/// `count` deterministic unit vectors in ℝ^m (Fibonacci-style spread).
pub(crate) fn sphere_directions(m: usize, count: usize) -> Vec<Vec<f64>> {
    let golden = 0.5 * (1.0 + 5f64.sqrt());
    (0..count)
        .map(|k| {
            let mut d: Vec<f64> = (0..m)
                .map(|i| {
                    let phase = ((k as f64 + 0.5) * golden.powi(i as i32 + 1)).fract();
                    (2.0 * std::f64::consts::PI * phase).cos() + if i == 0 { 1e-3 } else { 0.0 }
                })
                .collect();
            let r = crate::dynamics::norm(&d);
            d.iter_mut().for_each(|x| *x /= r);
            d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::FieldTag;
    use crate::fields::catalog::trivial_index_field;

    fn e_minus(c: f64) -> (VectorFieldSpec, Equilibrium) {
        let f = trivial_index_field(c, 0.1).unwrap();
        let neg = f.limit_neg().unwrap().clone();
        let eq = Equilibrium::at_point(&neg, vec![0.0, -c], FieldTag::NegInfinity, 1e-6).unwrap();
        (neg, eq)
    }

    #[test]
    fn saddle_subspaces() {
        let j = DMatrix::from_row_slice(2, 2, &[-1.0, 0.1, 0.0, 1.0]);
        let u = invariant_subspace(&j, 1, true);
        // eigenvector of 1 is (ε/2, 1)
        let expect = DVector::from_vec(vec![0.05, 1.0]).normalize();
        assert!((u.column(0).dot(&expect).abs() - 1.0).abs() < 1e-12);
        let s = invariant_subspace(&j, 1, false);
        assert!((s[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_seeds_lie_on_the_parabola() {
        let (neg, eq) = e_minus(1.0);
        let seeds = local_unstable_seeds(&neg, &eq, 0.01, 5, SeedModel::Quadratic).unwrap();
        assert_eq!(seeds.len(), 5);
        for s in &seeds {
            // W^u = {(h, h² - 1)}
            assert!((s[1] - (s[0] * s[0] - 1.0)).abs() < 1e-9, "{s:?}");
        }
        assert!((seeds[4][0] - 0.01).abs() < 1e-12);
        assert!((seeds[4][1] - (-1.0 + 1e-4)).abs() < 1e-9);
    }

    #[test]
    fn exact_model_and_zero_radius() {
        let (neg, eq) = e_minus(1.0);
        let curve = UnstableCurve::new(&neg, &eq, SeedModel::TrivialIndexExact { c: 1.0 }).unwrap();
        assert_eq!(curve.at(1.0), vec![1.0, 0.0]);
        for s in local_unstable_seeds(&neg, &eq, 0.0, 4, SeedModel::Quadratic).unwrap() {
            assert_eq!(s, eq.point);
        }
    }

    #[test]
    fn rejects_non_hyperbolic() {
        let f = crate::fields::catalog::zero_field(2).unwrap();
        let eq = Equilibrium::at_point(&f, vec![0.0, 0.0], FieldTag::Autonomous, 1e-6).unwrap();
        assert!(matches!(
            local_unstable_seeds(&f, &eq, 0.1, 3, SeedModel::Linear),
            Err(ConnectionError::NotHyperbolic(_))
        ));
    }

    #[test]
    fn sphere_directions_are_unit() {
        for d in sphere_directions(3, 20) {
            assert!((crate::dynamics::norm(&d) - 1.0).abs() < 1e-12);
        }
    }
}
