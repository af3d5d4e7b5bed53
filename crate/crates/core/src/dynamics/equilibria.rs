use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fields::{BoxDomain, DifferentiableField, Field, VectorFieldSpec};

use super::DynamicsError;

pub const DEDUP_RADIUS: f64 = 1e-6;
pub const NEWTON_MAX_ITER: usize = 50;
const SINGULAR_RCOND: f64 = 1e-10;

/// Which field an equilibrium belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldTag {
    NegInfinity,
    PosInfinity,
    Autonomous,
}

impl FieldTag {
    pub fn label(self) -> &'static str {
        match self {
            FieldTag::NegInfinity => "-inf",
            FieldTag::PosInfinity => "+inf",
            FieldTag::Autonomous => "autonomous",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub point: Vec<f64>,
    pub field_tag: FieldTag,
    /// Row-major.
    pub jacobian: Vec<Vec<f64>>,
    /// `(re, im)` pairs sorted by decreasing real part.
    pub eigenvalues: Vec<(f64, f64)>,
    pub eigen_real_parts: Vec<f64>,
    pub morse_index: usize,
    pub hyperbolic: bool,
    pub residual: f64,
}

impl Equilibrium {
    /// Builds the record for a known zero of `field`.
    pub fn at_point(
        field: &VectorFieldSpec,
        point: Vec<f64>,
        tag: FieldTag,
        gap_tol: f64,
    ) -> Result<Self, DynamicsError> {
        let r = field.eval(0.0, &point)?;
        let residual = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let j = field.jacobian_at(0.0, &point)?;
        Self::from_parts(point, tag, j, residual, gap_tol)
    }

    fn from_parts(
        point: Vec<f64>,
        field_tag: FieldTag,
        j: DMatrix<f64>,
        residual: f64,
        gap_tol: f64,
    ) -> Result<Self, DynamicsError> {
        let eigenvalues = spectrum(&j)?;
        let (morse_index, hyperbolic) = index_from_spectrum(&eigenvalues, gap_tol);
        Ok(Equilibrium {
            point,
            field_tag,
            jacobian: j.row_iter().map(|r| r.iter().copied().collect()).collect(),
            eigen_real_parts: eigenvalues.iter().map(|e| e.0).collect(),
            eigenvalues,
            morse_index,
            hyperbolic,
            residual,
        })
    }

    pub fn jacobian_matrix(&self) -> DMatrix<f64> {
        let n = self.point.len();
        DMatrix::from_fn(n, n, |i, j| self.jacobian[i][j])
    }

    pub fn dimension(&self) -> usize {
        self.point.len()
    }
}

/// Eigenvalues sorted by decreasing real part, then imaginary part.
pub fn spectrum(j: &DMatrix<f64>) -> Result<Vec<(f64, f64)>, DynamicsError> {
    if j.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::Eigen("matrix has non-finite entries".into()));
    }
    let schur = nalgebra::linalg::Schur::try_new(j.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| DynamicsError::Eigen("Schur iteration did not converge".into()))?;
    let mut ev: Vec<(f64, f64)> = schur
        .complex_eigenvalues()
        .iter()
        .map(|c| (c.re, c.im))
        .collect();
    ev.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    Ok(ev)
}

fn index_from_spectrum(ev: &[(f64, f64)], gap_tol: f64) -> (usize, bool) {
    let m = ev.iter().filter(|e| e.0 > gap_tol).count();
    let gap = ev.iter().map(|e| e.0.abs()).fold(f64::INFINITY, f64::min);
    (m, gap > gap_tol)
}

/// Morse index (eigenvalues with positive real part) and hyperbolicity.
/// Real parts within `gap_tol` of zero are not counted as unstable.
pub fn morse_index(jacobian: &DMatrix<f64>, gap_tol: f64) -> Result<(usize, bool), DynamicsError> {
    Ok(index_from_spectrum(&spectrum(jacobian)?, gap_tol))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EquilibriumSearch {
    pub equilibria: Vec<Equilibrium>,
    pub warnings: Vec<String>,
}

fn newton(
    field: &VectorFieldSpec,
    seed: &[f64],
    newton_tol: f64,
) -> Result<Option<(Vec<f64>, f64)>, DynamicsError> {
    let n = seed.len();
    let mut x = seed.to_vec();
    let mut fx = vec![0.0; n];
    let mut jac = vec![0.0; n * n];
    for _ in 0..=NEWTON_MAX_ITER {
        if field.eval_into(0.0, &x, &mut fx).is_err() {
            return Ok(None);
        }
        let res = fx.iter().map(|v| v * v).sum::<f64>().sqrt();
        if res <= newton_tol {
            return Ok(Some(polish(field, x, res)));
        }
        if field.jacobian_into(0.0, &x, &mut jac).is_err() {
            return Ok(None);
        }
        let j = DMatrix::from_row_slice(n, n, &jac);
        let Some(dx) = j.lu().solve(&DVector::from_column_slice(&fx)) else {
            return Ok(None);
        };
        for i in 0..n {
            x[i] -= dx[i];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
    }
    Ok(None)
}

// A few extra Newton steps after convergence, kept while the residual drops.
fn polish(field: &VectorFieldSpec, mut x: Vec<f64>, mut res: f64) -> (Vec<f64>, f64) {
    let n = x.len();
    let mut fx = vec![0.0; n];
    let mut jac = vec![0.0; n * n];
    for _ in 0..3 {
        if res == 0.0
            || field.eval_into(0.0, &x, &mut fx).is_err()
            || field.jacobian_into(0.0, &x, &mut jac).is_err()
        {
            break;
        }
        let Some(dx) = DMatrix::from_row_slice(n, n, &jac)
            .lu()
            .solve(&DVector::from_column_slice(&fx))
        else {
            break;
        };
        let y: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a - d).collect();
        if field.eval_into(0.0, &y, &mut fx).is_err() {
            break;
        }
        let r = fx.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(r < res) {
            break;
        }
        x = y;
        res = r;
    }
    (x, res)
}

fn is_singular(j: &DMatrix<f64>) -> bool {
    let sv = j.singular_values();
    let max = sv.max();
    let min = sv.min();
    !(min > SINGULAR_RCOND * max.max(1.0))
}

/// Newton from a `grid`ⁿ seed lattice on `domain`; results deduplicated at
/// radius 1e-6 and sorted lexicographically.
pub fn find_equilibria(
    field: &VectorFieldSpec,
    tag: FieldTag,
    domain: &BoxDomain,
    grid: usize,
    newton_tol: f64,
    gap_tol: f64,
) -> Result<EquilibriumSearch, DynamicsError> {
    if !field.is_autonomous() {
        return Err(DynamicsError::NotAutonomous);
    }
    if domain.dimension() != field.dimension() {
        return Err(DynamicsError::DimensionMismatch {
            expected: field.dimension(),
            found: domain.dimension(),
        });
    }
    let accept = domain.scaled(1.0 + 1e-9);
    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut singular_drops = 0usize;
    let mut singular_points: Vec<Vec<f64>> = Vec::new();
    for seed in domain.sample_grid(grid) {
        let Some((x, res)) = newton(field, &seed, newton_tol)? else {
            continue;
        };
        if !accept.contains(&x) {
            continue;
        }
        if found.iter().any(|(p, _)| super::norm_diff(p, &x) < DEDUP_RADIUS) {
            continue;
        }
        let j = field.jacobian_at(0.0, &x)?;
        if is_singular(&j) {
            singular_drops += 1;
            if !singular_points.iter().any(|p| super::norm_diff(p, &x) < DEDUP_RADIUS) {
                singular_points.push(x);
            }
            continue;
        }
        found.push((x, res));
    }
    let mut search = EquilibriumSearch::default();
    if singular_drops > 0 {
        search.warnings.push(format!(
            "degenerate field: {singular_drops} converged seed(s) at {} distinct point(s) \
             had a singular Jacobian and were dropped",
            singular_points.len()
        ));
    }
    found.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for (x, res) in found {
        let j = field.jacobian_at(0.0, &x)?;
        search
            .equilibria
            .push(Equilibrium::from_parts(x, tag, j, res, gap_tol)?);
    }
    Ok(search)
}
