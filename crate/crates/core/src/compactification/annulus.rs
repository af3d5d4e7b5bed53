use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

/// Step used for the angular component of the annulus flow.
pub const ANGLE_DT: f64 = 1e-3;

/// Point `r·e^{iφ}` of the annulus `1/2 ≤ r ≤ 1`, angle unwrapped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusPoint {
    pub r: f64,
    pub phi: f64,
}

impl AnnulusPoint {
    /// The designated initial point `z₀ = 1/2`.
    pub const Z0: AnnulusPoint = AnnulusPoint { r: 0.5, phi: 0.0 };

    pub fn new(r: f64, phi: f64) -> Option<Self> {
        (0.5..=1.0).contains(&r).then_some(AnnulusPoint { r, phi })
    }

    pub fn modulus(&self) -> f64 {
        self.r
    }
}

/// Closed form of `ṙ = 1 - r`.
#[inline]
pub fn radius_at(r0: f64, t: f64) -> f64 {
    1.0 - (1.0 - r0) * (-t).exp()
}

#[inline]
fn angle_rate(r: f64, phi: f64) -> f64 {
    (1.0 - r) + r * phi.cos()
}

/// One RK4 step of the angular equation with the exact radius.
#[inline]
pub(crate) fn angle_step(r0: f64, t: f64, phi: f64, h: f64) -> f64 {
    let r1 = radius_at(r0, t);
    let rm = radius_at(r0, t + 0.5 * h);
    let r2 = radius_at(r0, t + h);
    let k1 = angle_rate(r1, phi);
    let k2 = angle_rate(rm, phi + 0.5 * h * k1);
    let k3 = angle_rate(rm, phi + 0.5 * h * k2);
    let k4 = angle_rate(r2, phi + h * k3);
    phi + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
}

pub(crate) fn angle_rate_at(r0: f64, t: f64, phi: f64) -> f64 {
    angle_rate(radius_at(r0, t), phi)
}

/// The semiflow `z ↦ z^t` for `t ≥ 0`.
pub fn annulus_flow(z: AnnulusPoint, t: f64) -> AnnulusPoint {
    assert!(t >= 0.0, "the annulus flow is a semiflow");
    let steps = crate::dynamics::integrate::step_count(0.0, t, ANGLE_DT);
    let mut phi = z.phi;
    if steps > 0 {
        let h = t / steps as f64;
        for k in 0..steps {
            phi = angle_step(z.r, k as f64 * h, phi, h);
        }
    }
    AnnulusPoint {
        r: radius_at(z.r, t),
        phi,
    }
}

/// Gudermannian `gd(s) = 2 atan(tanh(s/2))`, the solution of `φ̇ = cos φ`
/// through `φ(0) = 0`.
#[inline]
pub fn gd(s: f64) -> f64 {
    2.0 * (0.5 * s).tanh().atan()
}

/// Inverse Gudermannian on `(-π/2, π/2)`: `ln tan(φ/2 + π/4) = asinh(tan φ)`.
#[inline]
pub fn gd_inv(phi: f64) -> f64 {
    phi.tan().asinh()
}

/// Solution of `φ̇ = cos φ` with `φ(0) = φ₀`, in closed form.
pub fn angle_solution(phi0: f64, t: f64) -> f64 {
    // reduce to a base interval [-π/2, 3π/2)
    let k = ((phi0 + FRAC_PI_2) / (2.0 * PI)).floor();
    let shift = 2.0 * PI * k;
    let base = phi0 - shift;
    let rest = |p: f64| (p - FRAC_PI_2).abs() < 1e-15 || (p + FRAC_PI_2).abs() < 1e-15;
    if rest(base) || rest(base - PI) {
        return phi0;
    }
    if base < FRAC_PI_2 {
        gd(t + gd_inv(base)) + shift
    } else {
        PI - gd(t + gd_inv(PI - base)) + shift
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(phi: f64) -> f64 {
    let mut a = phi.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_closed_form() {
        for k in 0..=20 {
            let t = k as f64;
            let z = annulus_flow(AnnulusPoint::Z0, t);
            assert!((z.r - (1.0 - 0.5 * (-t).exp())).abs() < 1e-9);
        }
    }

    #[test]
    fn rest_point_on_unit_circle() {
        let z = annulus_flow(AnnulusPoint { r: 1.0, phi: FRAC_PI_2 }, 7.0);
        assert!((z.phi - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(annulus_flow(AnnulusPoint::Z0, 0.0), AnnulusPoint::Z0);
    }

    #[test]
    fn gudermannian_value() {
        let expected = 2.0 * (0.5f64).tanh().atan();
        assert!((angle_solution(0.0, 1.0) - expected).abs() < 1e-15);
        assert!((angle_solution(0.0, 1.0) - 0.865_769_483_239_659_1).abs() < 1e-12);
        assert!((gd_inv(gd(0.37)) - 0.37).abs() < 1e-14);
        let p: f64 = 1.1;
        assert!((gd_inv(p) - (0.5 * p + std::f64::consts::FRAC_PI_4).tan().ln()).abs() < 1e-13);
    }

    #[test]
    fn g_branch_closed_form() {
        // from π the solution of φ̇ = cos φ decreases to π/2
        let a = angle_solution(PI, 2.0);
        assert!((a - (PI - gd(2.0))).abs() < 1e-14);
        assert!(a > FRAC_PI_2 && a < PI);
        assert_eq!(angle_solution(FRAC_PI_2, 3.0), FRAC_PI_2);
        assert!((angle_solution(2.0 * PI, 1.0) - (2.0 * PI + gd(1.0))).abs() < 1e-12);
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
    }
}
