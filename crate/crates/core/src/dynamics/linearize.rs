//! Variational equation `Ẇ = D_x f(t, u(t)) W` along a sampled solution.

use nalgebra::DMatrix;

use crate::fields::{DifferentiableField, ProblemSpec};

use super::integrate::step_count;
use super::{DynamicsError, Trajectory};

/// `W(t, t0)` on a window, with cubic Hermite dense output.
#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    n: usize,
    t0: f64,
    times: Vec<f64>,
    mats: Vec<f64>,
    slopes: Vec<f64>,
}

impl FundamentalSolution {
    pub fn initial_time(&self) -> f64 {
        self.t0
    }

    pub fn window(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().expect("nonempty"))
    }

    /// `W(t, t0)`.
    pub fn at(&self, t: f64) -> Result<DMatrix<f64>, DynamicsError> {
        let (lo, hi) = self.window();
        if !(t >= lo && t <= hi) {
            return Err(DynamicsError::OutsideSupport { t, lo, hi });
        }
        let m = self.n * self.n;
        if self.times.len() == 1 {
            return Ok(DMatrix::from_column_slice(self.n, self.n, &self.mats[..m]));
        }
        let i = self
            .times
            .partition_point(|&s| s <= t)
            .saturating_sub(1)
            .min(self.times.len() - 2);
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let h = tb - ta;
        let s = (t - ta) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let w = |buf: &[f64], k: usize, j: usize| buf[k * m + j];
        Ok(DMatrix::from_fn(self.n, self.n, |r, c| {
            let j = c * self.n + r;
            h00 * w(&self.mats, i, j)
                + h * h10 * w(&self.slopes, i, j)
                + h01 * w(&self.mats, i + 1, j)
                + h * h11 * w(&self.slopes, i + 1, j)
        }))
    }

    /// `W(t2, t1) = W(t2, t0) W(t1, t0)⁻¹`.
    pub fn transition(&self, t2: f64, t1: f64) -> Result<DMatrix<f64>, DynamicsError> {
        let a = self.at(t2)?;
        let b = self.at(t1)?;
        let inv = b
            .try_inverse()
            .ok_or_else(|| DynamicsError::Eigen("singular fundamental matrix".into()))?;
        Ok(a * inv)
    }
}

fn check_window(u: &Trajectory, t0: f64, t1: f64) -> Result<(), DynamicsError> {
    let (lo, hi) = (u.t_min(), u.t_max());
    for t in [t0, t1] {
        if !(t >= lo && t <= hi) {
            return Err(DynamicsError::OutsideSupport { t, lo, hi });
        }
    }
    Ok(())
}

// A(t) V for column-major V with k columns, A = D_x f(t, u(t)).
struct Variational<'a, F: ?Sized> {
    field: &'a F,
    u: &'a Trajectory,
    ux: Vec<f64>,
    jac: Vec<f64>,
}

impl<'a, F: DifferentiableField + ?Sized> Variational<'a, F> {
    fn new(field: &'a F, u: &'a Trajectory) -> Self {
        let n = field.dimension();
        Variational {
            field,
            u,
            ux: vec![0.0; n],
            jac: vec![0.0; n * n],
        }
    }

    fn apply(&mut self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), DynamicsError> {
        let n = self.ux.len();
        // stage times may overshoot the support by rounding
        let t = t.clamp(self.u.t_min(), self.u.t_max());
        self.u.at_into(t, &mut self.ux)?;
        self.field.jacobian_into(t, &self.ux, &mut self.jac)?;
        for (vc, oc) in v.chunks(n).zip(out.chunks_mut(n)) {
            for r in 0..n {
                let row = &self.jac[r * n..(r + 1) * n];
                oc[r] = row.iter().zip(vc).map(|(a, b)| a * b).sum();
            }
        }
        Ok(())
    }

    fn rk4(&mut self, t: f64, v: &mut [f64], h: f64, k: &mut [Vec<f64>; 5]) -> Result<(), DynamicsError> {
        let [k1, k2, k3, k4, tmp] = k;
        self.apply(t, v, k1)?;
        for i in 0..v.len() {
            tmp[i] = v[i] + 0.5 * h * k1[i];
        }
        self.apply(t + 0.5 * h, tmp, k2)?;
        for i in 0..v.len() {
            tmp[i] = v[i] + 0.5 * h * k2[i];
        }
        self.apply(t + 0.5 * h, tmp, k3)?;
        for i in 0..v.len() {
            tmp[i] = v[i] + h * k3[i];
        }
        self.apply(t + h, tmp, k4)?;
        for i in 0..v.len() {
            v[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        Ok(())
    }
}

/// Fundamental matrix of the variational equation along `u` on `[t0, t1]`
/// (either order), normalized by `W(t0, t0) = I`.
pub fn linearize_field<F: DifferentiableField + ?Sized>(
    field: &F,
    u: &Trajectory,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<FundamentalSolution, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    check_window(u, t0, t1)?;
    let n = field.dimension();
    let m = n * n;
    let steps = step_count(t0, t1, dt);
    let h = if steps == 0 { 0.0 } else { (t1 - t0) / steps as f64 };
    let mut var = Variational::new(field, u);
    let mut w = DMatrix::<f64>::identity(n, n).as_slice().to_vec();
    let mut k: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; m]);
    let mut slope = vec![0.0; m];
    let mut times = Vec::with_capacity(steps + 1);
    let mut mats = Vec::with_capacity((steps + 1) * m);
    let mut slopes = Vec::with_capacity((steps + 1) * m);
    for s in 0..=steps {
        let t = if s == steps { t1 } else { t0 + s as f64 * h };
        var.apply(t, &w, &mut slope)?;
        times.push(t);
        mats.extend_from_slice(&w);
        slopes.extend_from_slice(&slope);
        if s < steps {
            var.rk4(t, &mut w, h, &mut k)?;
            if w.iter().any(|v| !v.is_finite()) {
                return Err(DynamicsError::NonFinite { t: t + h });
            }
        }
    }
    if t1 < t0 {
        times.reverse();
        for buf in [&mut mats, &mut slopes] {
            let mut rows: Vec<&[f64]> = buf.chunks(m).collect();
            rows.reverse();
            *buf = rows.concat();
        }
    }
    Ok(FundamentalSolution {
        n,
        t0,
        times,
        mats,
        slopes,
    })
}

/// `linearize_field` for `problem.f` with the problem's step.
pub fn linearize_along(
    problem: &ProblemSpec,
    u: &Trajectory,
    t0: f64,
    t1: f64,
) -> Result<FundamentalSolution, DynamicsError> {
    linearize_field(&problem.f, u, t0, t1, problem.integrator.dt)
}

/// Transports the column span of `basis` from `t0` to `t1` along `u`,
/// re-orthonormalizing after every step. Returns an orthonormal basis.
pub fn propagate_subspace<F: DifferentiableField + ?Sized>(
    field: &F,
    u: &Trajectory,
    basis: &DMatrix<f64>,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<DMatrix<f64>, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    check_window(u, t0, t1)?;
    let (n, cols) = basis.shape();
    if cols == 0 {
        return Ok(basis.clone());
    }
    let steps = step_count(t0, t1, dt);
    let h = if steps == 0 { 0.0 } else { (t1 - t0) / steps as f64 };
    let mut var = Variational::new(field, u);
    let mut q = basis.clone().qr().q();
    let mut k: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n * cols]);
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let mut v = q.as_slice().to_vec();
        var.rk4(t, &mut v, h, &mut k)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(DynamicsError::NonFinite { t: t + h });
        }
        q = DMatrix::from_column_slice(n, cols, &v).qr().q();
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::catalog::catalog_example;
    use crate::fields::parse_field_expression;
    use std::collections::BTreeMap;

    #[test]
    fn saddle_at_equilibrium() {
        let f = parse_field_expression("x1; -x2", 2, &BTreeMap::new()).unwrap();
        let u = Trajectory::constant(&[0.0, 0.0], 0.0, 1.0);
        let w = linearize_field(&f, &u, 0.0, 1.0, 1e-3).unwrap().at(1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((w[(0, 0)] - e).abs() < 1e-10);
        assert!((w[(1, 1)] - 1.0 / e).abs() < 1e-10);
        assert!(w[(0, 1)].abs() < 1e-15 && w[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn zero_field_gives_identity() {
        let f = parse_field_expression("0; 0", 2, &BTreeMap::new()).unwrap();
        let u = Trajectory::constant(&[0.3, 0.1], -1.0, 1.0);
        let fs = linearize_field(&f, &u, -1.0, 1.0, 0.1).unwrap();
        assert_eq!(fs.at(0.3).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn window_outside_support() {
        let f = parse_field_expression("x1", 1, &BTreeMap::new()).unwrap();
        let u = Trajectory::constant(&[0.0], 0.0, 1.0);
        assert!(matches!(
            linearize_field(&f, &u, 0.0, 2.0, 0.1),
            Err(DynamicsError::OutsideSupport { .. })
        ));
    }

    #[test]
    fn catalog_near_zero_time() {
        let p = catalog_example(1.0, 0.1).unwrap();
        let u = super::super::integrate(&p, -0.5, &[1.0, 0.3], 0.5).unwrap();
        let fs = linearize_along(&p, &u, -0.01, 0.01).unwrap();
        let w = fs.at(0.01).unwrap();
        assert!((w - DMatrix::identity(2, 2)).abs().max() < 1e-4);
    }
}
