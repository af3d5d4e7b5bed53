//! Fixed-step RK4 (default) and adaptive Dormand–Prince RK45.

use crate::fields::{BoxDomain, EvalError, Field, IntegratorMethod, ProblemSpec};

use super::{DynamicsError, Trajectory};

/// Reusable RK4 workspace for one field.
pub struct Rk4<'a, F: Field + ?Sized> {
    field: &'a F,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a, F: Field + ?Sized> Rk4<'a, F> {
    pub fn new(field: &'a F) -> Self {
        let n = field.dimension();
        Rk4 {
            field,
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// Field value at the start of the last step.
    pub fn last_slope(&self) -> &[f64] {
        &self.k1
    }

    /// Advances `x` from `t` to `t + h`.
    #[inline]
    pub fn step(&mut self, t: f64, x: &mut [f64], h: f64) -> Result<(), EvalError> {
        let f = self.field;
        let half = 0.5 * h;
        f.eval_into(t, x, &mut self.k1)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + half * self.k1[i];
        }
        f.eval_into(t + half, &self.tmp, &mut self.k2)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + half * self.k2[i];
        }
        f.eval_into(t + half, &self.tmp, &mut self.k3)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        f.eval_into(t + h, &self.tmp, &mut self.k4)?;
        let sixth = h / 6.0;
        for i in 0..x.len() {
            x[i] += sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
        Ok(())
    }
}

/// Number of equal steps of size at most `dt` covering `[t0, t1]`.
pub fn step_count(t0: f64, t1: f64, dt: f64) -> usize {
    let span = (t1 - t0).abs();
    if span == 0.0 {
        0
    } else {
        ((span / dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// How a [`march`] ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MarchEnd {
    Completed,
    /// The visitor asked to stop after the step ending at this time.
    Stopped(f64),
}

/// RK4 from `t0` to `t1` in place, calling `visit(t, x)` after every step.
/// `visit` returning `false` stops the march. Nothing is stored.
pub fn march<F: Field + ?Sized>(
    field: &F,
    t0: f64,
    x: &mut [f64],
    t1: f64,
    dt: f64,
    mut visit: impl FnMut(f64, &[f64]) -> bool,
) -> Result<MarchEnd, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    let n = step_count(t0, t1, dt);
    if n == 0 {
        return Ok(MarchEnd::Completed);
    }
    let h = (t1 - t0) / n as f64;
    let mut rk = Rk4::new(field);
    for k in 0..n {
        let t = t0 + k as f64 * h;
        rk.step(t, x, h)?;
        let tn = if k + 1 == n { t1 } else { t0 + (k + 1) as f64 * h };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite { t: tn });
        }
        if !visit(tn, x) {
            return Ok(MarchEnd::Stopped(tn));
        }
    }
    Ok(MarchEnd::Completed)
}

/// Endpoint of the RK4 flow; `None` if the orbit leaves `escape` first.
pub fn flow_endpoint<F: Field + ?Sized>(
    field: &F,
    t0: f64,
    x0: &[f64],
    t1: f64,
    dt: f64,
    escape: Option<&BoxDomain>,
) -> Result<Option<Vec<f64>>, DynamicsError> {
    let mut x = x0.to_vec();
    let end = march(field, t0, &mut x, t1, dt, |_, y| {
        escape.is_none_or(|b| b.contains(y))
    })?;
    Ok(match end {
        MarchEnd::Completed => Some(x),
        MarchEnd::Stopped(_) => None,
    })
}

#[derive(Clone, Debug)]
pub struct StepOptions {
    pub method: IntegratorMethod,
    pub dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub escape: Option<BoxDomain>,
    /// Re-run RK4 at `dt/2` and estimate the final error as `16/15 |x_h - x_{h/2}|`.
    pub richardson: bool,
}

impl StepOptions {
    pub fn rk4(dt: f64) -> Self {
        StepOptions {
            method: IntegratorMethod::Rk4,
            dt,
            rtol: 1e-9,
            atol: 1e-12,
            escape: None,
            richardson: false,
        }
    }

    pub fn from_problem(problem: &ProblemSpec) -> Self {
        StepOptions {
            method: problem.integrator.method,
            dt: problem.integrator.dt,
            rtol: problem.integrator.rtol,
            atol: problem.integrator.atol,
            escape: Some(problem.domain_box.scaled(10.0)),
            richardson: problem.integrator.method == IntegratorMethod::Rk4,
        }
    }
}

/// Integrates `problem.f` from `(t0, x0)` to `t1`; `t1 < t0` runs backward.
pub fn integrate(
    problem: &ProblemSpec,
    t0: f64,
    x0: &[f64],
    t1: f64,
) -> Result<Trajectory, DynamicsError> {
    integrate_field(&problem.f, t0, x0, t1, &StepOptions::from_problem(problem))
}

pub fn integrate_field<F: Field + ?Sized>(
    field: &F,
    t0: f64,
    x0: &[f64],
    t1: f64,
    opts: &StepOptions,
) -> Result<Trajectory, DynamicsError> {
    let n = field.dimension();
    if x0.len() != n {
        return Err(DynamicsError::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(opts.dt));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFinite { t: t0 });
    }
    let mut tr = match opts.method {
        IntegratorMethod::Rk4 => rk4_trajectory(field, t0, x0, t1, opts)?,
        IntegratorMethod::Rk45 => rk45_trajectory(field, t0, x0, t1, opts)?,
    };
    if opts.richardson && !tr.escaped && opts.method == IntegratorMethod::Rk4 {
        let fine = flow_endpoint(field, t0, x0, t1, 0.5 * opts.dt, None)?;
        if let Some(fine) = fine {
            tr.error_estimate = Some(super::norm_diff(tr.end_state(), &fine) * 16.0 / 15.0);
        }
    }
    if t1 < t0 {
        tr.reverse_in_place();
    }
    Ok(tr)
}

fn rk4_trajectory<F: Field + ?Sized>(
    field: &F,
    t0: f64,
    x0: &[f64],
    t1: f64,
    opts: &StepOptions,
) -> Result<Trajectory, DynamicsError> {
    let n = field.dimension();
    let steps = step_count(t0, t1, opts.dt);
    let mut tr = Trajectory::with_capacity(n, steps + 1, t0);
    let mut x = x0.to_vec();
    let mut slope = vec![0.0; n];
    let h = if steps == 0 { 0.0 } else { (t1 - t0) / steps as f64 };
    let mut rk = Rk4::new(field);
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let before = x.clone();
        rk.step(t, &mut x, h)?;
        tr.push(t, &before, rk.last_slope());
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite { t: t + h });
        }
        if let Some(b) = &opts.escape {
            if !b.contains(&x) {
                let tn = t + h;
                field.eval_into(tn, &x, &mut slope)?;
                tr.push(tn, &x, &slope);
                tr.escaped = true;
                return Ok(tr);
            }
        }
    }
    field.eval_into(t1, &x, &mut slope)?;
    tr.push(t1, &x, &slope);
    Ok(tr)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const MAX_STEPS: usize = 10_000_000;

fn rk45_trajectory<F: Field + ?Sized>(
    field: &F,
    t0: f64,
    x0: &[f64],
    t1: f64,
    opts: &StepOptions,
) -> Result<Trajectory, DynamicsError> {
    let n = field.dimension();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut tr = Trajectory::with_capacity(n, 64, t0);
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut x = x0.to_vec();
    let mut t = t0;
    let mut h = opts.dt.min((t1 - t0).abs()).max(f64::MIN_POSITIVE);
    field.eval_into(t, &x, &mut k[0])?;
    tr.push(t, &x, &k[0]);
    let mut steps = 0usize;
    while dir * (t1 - t) > 0.0 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(DynamicsError::StepLimit { t });
        }
        let last = h >= (t1 - t).abs();
        if last {
            h = (t1 - t).abs();
        }
        let hs = dir * h;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = x[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += hs * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            field.eval_into(t + C[s] * hs, &tmp, &mut tail[0])?;
        }
        // tmp now holds the fifth-order solution (FSAL row).
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i];
            }
            let scale = opts.atol + opts.rtol * x[i].abs().max(tmp[i].abs());
            err += (hs * e / scale).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            return Err(DynamicsError::NonFinite { t });
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            x.copy_from_slice(&tmp);
            let fsal = k[6].clone();
            k[0].copy_from_slice(&fsal);
            tr.push(t, &x, &k[0]);
            if let Some(b) = &opts.escape {
                if !b.contains(&x) {
                    tr.escaped = true;
                    return Ok(tr);
                }
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * (1.0 + t.abs()) {
            return Err(DynamicsError::StepLimit { t });
        }
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::parse_field_expression;
    use std::collections::BTreeMap;

    fn field(src: &str, dim: usize) -> crate::fields::VectorFieldSpec {
        parse_field_expression(src, dim, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn linear_decay_closed_form() {
        // x2' = -x2 - 1 from x2(0) = 5: x2 = -1 + 6 e^{-t}
        let f = field("x1; -x2 - 1", 2);
        let tr = integrate_field(&f, 0.0, &[0.0, 5.0], 10.0, &StepOptions::rk4(1e-3)).unwrap();
        for (i, &t) in tr.times().iter().enumerate() {
            let x = tr.state(i);
            assert_eq!(x[0], 0.0);
            assert!((x[1] - (-1.0 + 6.0 * (-t).exp())).abs() < 1e-6);
        }
    }

    #[test]
    fn backward_integration() {
        let f = field("x1; 0", 2);
        let tr = integrate_field(&f, 0.0, &[1.0, 0.0], -std::f64::consts::LN_2, &StepOptions::rk4(1e-3))
            .unwrap();
        assert!((tr.end_state()[0] - 0.5).abs() < 1e-10);
        assert!(tr.times().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(tr.end_time(), -std::f64::consts::LN_2);
    }

    #[test]
    fn escape_is_flagged() {
        let f = field("x1", 1);
        let mut o = StepOptions::rk4(0.01);
        o.escape = Some(BoxDomain::cube(1, 10.0));
        let tr = integrate_field(&f, 0.0, &[1.0], 100.0, &o).unwrap();
        assert!(tr.escaped);
        assert!(tr.end_state()[0] > 10.0);
        assert!(tr.end_time() < 2.4);
    }

    #[test]
    fn invalid_inputs() {
        let f = field("x1", 1);
        assert!(matches!(
            integrate_field(&f, 0.0, &[1.0], 1.0, &StepOptions::rk4(0.0)),
            Err(DynamicsError::InvalidStep(_))
        ));
        let blow = field("x1^2", 1);
        assert!(matches!(
            integrate_field(&blow, 0.0, &[1.0], 2.0, &StepOptions::rk4(0.01)),
            Err(DynamicsError::NonFinite { .. })
        ));
    }

    #[test]
    fn rk45_matches_closed_form() {
        let f = field("-x1 + sin(t)", 1);
        let mut o = StepOptions::rk4(0.1);
        o.method = IntegratorMethod::Rk45;
        let tr = integrate_field(&f, 0.0, &[1.0], 5.0, &o).unwrap();
        // x = 1.5 e^{-t} + (sin t - cos t)/2
        let t: f64 = 5.0;
        let exact = 1.5 * (-t).exp() + 0.5 * (t.sin() - t.cos());
        assert!((tr.end_state()[0] - exact).abs() < 1e-7);
        let back = integrate_field(&f, 5.0, &[exact], 0.0, &o).unwrap();
        assert!((back.end_state()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn richardson_estimate_tracks_error() {
        let f = field("x1", 1);
        let mut o = StepOptions::rk4(0.1);
        o.richardson = true;
        let tr = integrate_field(&f, 0.0, &[1.0], 1.0, &o).unwrap();
        let actual = (tr.end_state()[0] - 1f64.exp()).abs();
        let est = tr.error_estimate.unwrap();
        assert!(est > 0.5 * actual && est < 2.0 * actual, "est {est}, actual {actual}");
    }
}
