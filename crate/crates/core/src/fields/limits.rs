//! Numerical check that `f(t, ·)` settles to its limit fields as `t → ±∞`.

use serde::Serialize;

use super::problem::BoxDomain;
use super::{Field, FieldError, VectorFieldSpec};

const SAMPLES_PER_AXIS: usize = 11;
const PROFILE_STEPS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitReport {
    pub horizon: f64,
    pub tol: f64,
    /// Whether each limit was declared (`true`) or inferred by freezing time.
    pub declared: (bool, bool),
    /// `(T, sup |f(-T,x) - f⁻(x)|, sup |f(T,x) - f⁺(x)|)` for `T` up to the horizon.
    pub profile: Vec<(f64, f64, f64)>,
    pub deviation_neg: f64,
    pub deviation_pos: f64,
    pub converged: bool,
}

fn sup_distance(
    a: &dyn Field,
    ta: f64,
    b: &dyn Field,
    tb: f64,
    samples: &[Vec<f64>],
) -> Result<f64, FieldError> {
    let n = a.dimension();
    let mut va = vec![0.0; n];
    let mut vb = vec![0.0; n];
    let mut sup = 0.0f64;
    for x in samples {
        a.eval_into(ta, x, &mut va)?;
        b.eval_into(tb, x, &mut vb)?;
        let d = va
            .iter()
            .zip(&vb)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        sup = sup.max(d);
    }
    Ok(sup)
}

// Without a declared limit, the tail must be Cauchy on [horizon/2, horizon].
fn infer(
    spec: &VectorFieldSpec,
    sign: f64,
    horizon: f64,
    tol: f64,
    samples: &[Vec<f64>],
) -> Result<VectorFieldSpec, FieldError> {
    let far = sign * horizon;
    let frozen = spec.frozen_at(far);
    for k in 0..PROFILE_STEPS {
        let t = sign * horizon * (0.5 + 0.5 * k as f64 / PROFILE_STEPS as f64);
        let d = sup_distance(spec, t, &frozen, 0.0, samples)?;
        if !(d <= tol) {
            let side = if sign < 0.0 { "-∞" } else { "+∞" };
            return Err(FieldError::NotAsymptoticallyAutonomous(format!(
                "towards {side}: f({t}, ·) and f({far}, ·) differ by {d:.3e} > {tol:.1e}"
            )));
        }
    }
    Ok(frozen)
}

/// Returns the limit fields (declared or inferred) and a convergence report.
pub fn asymptotic_limits(
    spec: &VectorFieldSpec,
    domain: &BoxDomain,
    horizon: f64,
    tol: f64,
) -> Result<(VectorFieldSpec, VectorFieldSpec, LimitReport), FieldError> {
    if domain.dimension() != spec.dimension() {
        return Err(FieldError::DimensionMismatch {
            expected: spec.dimension(),
            found: domain.dimension(),
        });
    }
    let samples = domain.sample_grid(SAMPLES_PER_AXIS);
    let neg = match spec.limit_neg() {
        Some(l) => l.clone(),
        None if spec.is_autonomous() => spec.clone(),
        None => infer(spec, -1.0, horizon, tol, &samples)?,
    };
    let pos = match spec.limit_pos() {
        Some(l) => l.clone(),
        None if spec.is_autonomous() => spec.clone(),
        None => infer(spec, 1.0, horizon, tol, &samples)?,
    };
    let mut profile = Vec::with_capacity(PROFILE_STEPS);
    for k in 1..=PROFILE_STEPS {
        let t = horizon * k as f64 / PROFILE_STEPS as f64;
        let dn = sup_distance(spec, -t, &neg, 0.0, &samples)?;
        let dp = sup_distance(spec, t, &pos, 0.0, &samples)?;
        profile.push((t, dn, dp));
    }
    let &(_, deviation_neg, deviation_pos) = profile.last().expect("nonempty profile");
    let report = LimitReport {
        horizon,
        tol,
        declared: (spec.limit_neg().is_some(), spec.limit_pos().is_some()),
        profile,
        deviation_neg,
        deviation_pos,
        converged: deviation_neg <= tol && deviation_pos <= tol,
    };
    Ok((neg, pos, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::catalog::trivial_index_field;
    use crate::fields::parse_field_expression;
    use std::collections::BTreeMap;

    #[test]
    fn catalog_field_freezes_exactly() {
        let f = trivial_index_field(1.0, 0.1).unwrap();
        let (_, _, r) = asymptotic_limits(&f, &BoxDomain::cube(2, 2.0), 5.0, 1e-12).unwrap();
        for &(t, dn, dp) in &r.profile {
            if t >= 1.0 {
                assert_eq!((dn, dp), (0.0, 0.0), "t = {t}");
            }
        }
        assert!(r.converged);
    }

    #[test]
    fn autonomous_field_is_its_own_limit() {
        let f = parse_field_expression("x2; -x1", 2, &BTreeMap::new()).unwrap();
        let (n, p, r) = asymptotic_limits(&f, &BoxDomain::cube(2, 1.0), 3.0, 1e-12).unwrap();
        assert_eq!(n, f);
        assert_eq!(p, f);
        assert_eq!(r.deviation_neg, 0.0);
        assert_eq!(r.deviation_pos, 0.0);
    }

    #[test]
    fn tanh_tail_bound() {
        let e = BTreeMap::new();
        let f = parse_field_expression("tanh(t)*x1", 1, &e)
            .unwrap()
            .with_limits(
                Some(parse_field_expression("-x1", 1, &e).unwrap()),
                Some(parse_field_expression("x1", 1, &e).unwrap()),
            )
            .unwrap();
        let h = 5.0;
        let (_, _, r) = asymptotic_limits(&f, &BoxDomain::cube(1, 1.0), h, 1e-3).unwrap();
        let bound = 1.0 - h.tanh();
        assert!(r.deviation_pos <= bound * (1.0 + 1e-12));
        assert!(r.deviation_neg <= bound * (1.0 + 1e-12));
        assert!(r.converged);
    }

    #[test]
    fn oscillating_field_is_rejected() {
        let f = parse_field_expression("sin(t)*x1", 1, &BTreeMap::new()).unwrap();
        assert!(matches!(
            asymptotic_limits(&f, &BoxDomain::cube(1, 1.0), 10.0, 1e-3),
            Err(FieldError::NotAsymptoticallyAutonomous(_))
        ));
    }
}
