//! The initial element `y₀^ρ(t) = F^ρ(z₀^t)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use serde::Serialize;

use crate::fields::{asymptotic_limits, EvalError, Field, ProblemSpec, VectorFieldSpec};

use super::annulus::{angle_rate_at, angle_step, gd_inv, wrap_angle, AnnulusPoint, ANGLE_DT};
use super::CompactError;

/// Length of the tabulated angle of `z₀^t`; afterwards the angle is frozen.
pub const ANGLE_TABLE_SPAN: f64 = 60.0;
const LIMIT_HORIZON: f64 = 50.0;
const LIMIT_TOL: f64 = 1e-6;

/// Which field `F^ρ` selects at an angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Branch {
    NegLimit,
    PosLimit,
    /// `f(s, ·)`.
    F(f64),
    /// `g(s, ·)`.
    G(f64),
}

// Angle of z₀^t on a uniform grid, with slopes for Hermite interpolation.
#[derive(Debug)]
struct AngleTable {
    h: f64,
    phi: Vec<f64>,
    rate: Vec<f64>,
}

impl AngleTable {
    fn build(z: AnnulusPoint) -> Self {
        let n = (ANGLE_TABLE_SPAN / ANGLE_DT).round() as usize;
        let h = ANGLE_TABLE_SPAN / n as f64;
        let mut phi = Vec::with_capacity(n + 1);
        let mut rate = Vec::with_capacity(n + 1);
        let mut p = z.phi;
        for k in 0..=n {
            let t = k as f64 * h;
            phi.push(p);
            rate.push(angle_rate_at(z.r, t, p));
            if k < n {
                p = angle_step(z.r, t, p, h);
            }
        }
        AngleTable { h, phi, rate }
    }

    fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.phi[0];
        }
        let last = self.phi.len() - 1;
        let u = t / self.h;
        if u >= last as f64 {
            return self.phi[last];
        }
        let i = (u.floor() as usize).min(last - 1);
        let s = u - i as f64;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.phi[i]
            + self.h * (s3 - 2.0 * s2 + s) * self.rate[i]
            + (-2.0 * s3 + 3.0 * s2) * self.phi[i + 1]
            + self.h * (s3 - s2) * self.rate[i + 1]
    }
}

/// `y₀^ρ(f, g)` shifted by `offset`: evaluating at `t` gives `F^ρ(z₀^{t+offset})`.
/// For negative times the path is extended by its value at time 0.
#[derive(Clone, Debug)]
pub struct InitialElement {
    rho: f64,
    offset: f64,
    f: VectorFieldSpec,
    g: VectorFieldSpec,
    f_neg: VectorFieldSpec,
    f_pos: VectorFieldSpec,
    table: Arc<AngleTable>,
}

/// Builds `y₀^ρ` for the cycle `(problem.f, problem.g)`.
pub fn build_initial_element(problem: &ProblemSpec, rho: f64) -> Result<InitialElement, CompactError> {
    if !(0.0..FRAC_PI_2 / 2.0).contains(&rho) {
        return Err(CompactError::RhoOutOfRange(rho));
    }
    let (f_neg, f_pos, _) =
        asymptotic_limits(&problem.f, &problem.domain_box, LIMIT_HORIZON, LIMIT_TOL)?;
    Ok(InitialElement {
        rho,
        offset: 0.0,
        f: problem.f.clone(),
        g: problem.g.clone(),
        f_neg,
        f_pos,
        table: Arc::new(AngleTable::build(AnnulusPoint::Z0)),
    })
}

impl InitialElement {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Same element and table, different sector width.
    pub fn with_rho(&self, rho: f64) -> Result<Self, CompactError> {
        if !(0.0..FRAC_PI_2 / 2.0).contains(&rho) {
            return Err(CompactError::RhoOutOfRange(rho));
        }
        Ok(InitialElement {
            rho,
            ..self.clone()
        })
    }

    /// The translate `(y₀^ρ)^s`.
    pub fn translated(&self, s: f64) -> Self {
        InitialElement {
            offset: self.offset + s,
            ..self.clone()
        }
    }

    /// Unwrapped angle of `z₀^t`.
    pub fn angle_at(&self, t: f64) -> f64 {
        self.table.at(t + self.offset)
    }

    pub fn branch_at(&self, t: f64) -> Branch {
        self.branch_at_angle(self.angle_at(t))
    }

    /// `F^ρ` at angle `phi`.
    pub fn branch_at_angle(&self, phi: f64) -> Branch {
        let rho = self.rho;
        // angle in [-π/2, 3π/2)
        let mut a = wrap_angle(phi);
        if a < -FRAC_PI_2 {
            a += 2.0 * PI;
        }
        if (a + FRAC_PI_2).abs() <= rho || a >= 1.5 * PI - rho {
            return Branch::NegLimit;
        }
        if (a - FRAC_PI_2).abs() <= rho {
            return Branch::PosLimit;
        }
        let scale = PI / (PI - 2.0 * rho);
        if a < FRAC_PI_2 {
            f_branch(a * scale)
        } else {
            g_branch(PI + (a - PI) * scale)
        }
    }

    fn eval_branch(&self, b: Branch, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        match b {
            Branch::NegLimit => self.f_neg.eval_into(0.0, x, out),
            Branch::PosLimit => self.f_pos.eval_into(0.0, x, out),
            Branch::F(s) => self.f.eval_into(s, x, out),
            Branch::G(s) => self.g.eval_into(s, x, out),
        }
    }
}

// F on the f-branch: angle ψ = gd(s) in (-π/2, π/2).
fn f_branch(psi: f64) -> Branch {
    let s = gd_inv(psi);
    if s.is_finite() {
        Branch::F(s)
    } else if s > 0.0 {
        Branch::PosLimit
    } else {
        Branch::NegLimit
    }
}

// F on the g-branch: angle ψ = π + gd(s) in (π/2, 3π/2), so that ψ → π/2
// as s → -∞ (where g tends to f^{+∞}) and ψ → 3π/2 as s → +∞.
fn g_branch(psi: f64) -> Branch {
    let s = gd_inv(psi - PI);
    if s.is_finite() {
        Branch::G(s)
    } else if s > 0.0 {
        Branch::NegLimit
    } else {
        Branch::PosLimit
    }
}

impl Field for InitialElement {
    fn dimension(&self) -> usize {
        self.f.dimension()
    }

    fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        self.eval_branch(self.branch_at(t), x, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compactification::annulus::{annulus_flow, gd};
    use crate::fields::catalog::catalog_example;

    fn element(rho: f64) -> InitialElement {
        build_initial_element(&catalog_example(1.0, 0.1).unwrap(), rho).unwrap()
    }

    #[test]
    fn rho_range() {
        let p = catalog_example(1.0, 0.1).unwrap();
        assert!(build_initial_element(&p, -0.1).is_err());
        assert!(build_initial_element(&p, FRAC_PI_2 / 2.0).is_err());
    }

    #[test]
    fn case_table() {
        let y = element(0.0);
        assert_eq!(y.branch_at_angle(-FRAC_PI_2), Branch::NegLimit);
        assert_eq!(y.branch_at_angle(FRAC_PI_2), Branch::PosLimit);
        assert_eq!(y.branch_at_angle(0.0), Branch::F(0.0));
        match y.branch_at_angle(gd(0.7)) {
            Branch::F(s) => assert!((s - 0.7).abs() < 1e-12),
            b => panic!("{b:?}"),
        }
        match y.branch_at_angle(PI + gd(-0.4)) {
            Branch::G(s) => assert!((s + 0.4).abs() < 1e-12),
            b => panic!("{b:?}"),
        }
        let yr = element(0.1);
        for d in [-0.0999, -0.05, 0.0, 0.07, 0.0999] {
            assert_eq!(yr.branch_at_angle(FRAC_PI_2 + d), Branch::PosLimit);
            assert_eq!(yr.branch_at_angle(-FRAC_PI_2 + d), Branch::NegLimit);
        }
    }

    #[test]
    fn table_matches_flow() {
        let y = element(0.0);
        for &t in &[0.0, 0.2345, 1.0, 3.3, 12.0] {
            let z = annulus_flow(AnnulusPoint::Z0, t);
            assert!((y.angle_at(t) - z.phi).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn agrees_with_f_composed_with_flow() {
        let y = element(0.0);
        let p = catalog_example(1.0, 0.1).unwrap();
        for &t in &[0.0, 0.3, 0.8, 2.0, 10.0] {
            let phi = annulus_flow(AnnulusPoint::Z0, t).phi;
            let x = [0.7, -0.2];
            let mut a = [0.0; 2];
            y.eval_into(t, &x, &mut a).unwrap();
            let b = if phi < FRAC_PI_2 {
                p.f.eval(gd_inv(phi), &x).unwrap()
            } else {
                p.f.limit_pos().unwrap().eval(0.0, &x).unwrap()
            };
            assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn translation_compatibility() {
        let y = element(0.1);
        let ys = y.translated(1.5);
        let x = [0.3, 0.4];
        for &t in &[0.0, 0.25, 2.0] {
            let mut a = [0.0; 2];
            let mut b = [0.0; 2];
            ys.eval_into(t, &x, &mut a).unwrap();
            y.eval_into(t + 1.5, &x, &mut b).unwrap();
            assert_eq!(a, b);
        }
    }
}
