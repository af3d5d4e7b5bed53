//! Built-in fields.
//!
//! `trivial-index` is the planar family
//!
//! ```text
//! f⁻(x) = (x1, -x2 + 3 x1² - c)        f⁺(x) = (-x1 + eps x2, x2)
//! f_c(t, x) = ϕ'(-t) f⁻(x) + ϕ'(t) f⁺(x)
//! g_c(t, x) = ϕ'(-t) f⁺(x) + ϕ'(t) f⁻(x) = f_c(-t, x)
//! ```
//!
//! with the ramp `ϕ(t) = 0` for `t ≤ 0`, `ϕ(t) = t` for `t ≥ 1` and
//! `ϕ(t) = t·(3t² - 2t³)` in between, so `ϕ'(t) = 9t² - 8t³` on `[0, 1]`.

use std::collections::BTreeMap;

use super::problem::{BoxDomain, GSpec, IntegratorSettings, ProblemError, ProblemSpec, Tolerances};
use super::{FieldError, FieldKind, VectorFieldSpec};

pub const TRIVIAL_INDEX: &str = "trivial-index";
pub const LINEAR_SADDLE: &str = "linear-saddle";
pub const GRADIENT_CUBIC: &str = "gradient-cubic";
pub const ZERO: &str = "zero";

pub const DEFAULT_EPS: f64 = 0.1;

/// The ramp `ϕ`.
pub fn ramp(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        t
    } else {
        t * t * t * (3.0 - 2.0 * t)
    }
}

/// The ramp derivative `ϕ'`, continuous with `ϕ'(0) = 0` and `ϕ'(1) = 1`.
pub fn ramp_rate(t: f64) -> f64 {
    let q = t.clamp(0.0, 1.0);
    q * q * (9.0 - 8.0 * q)
}

// `ϕ'(s)` written with abs() so it stays inside the expression language:
// (|s| - |s - 1| + 1) / 2 clamps s to [0, 1].
fn ramp_rate_source(s: &str) -> String {
    let q = format!("((abs({s}) - abs({s} - 1) + 1)/2)");
    format!("(9*{q}^2 - 8*{q}^3)")
}

fn limit_neg_source() -> &'static str {
    "x1; -x2 + 3*x1^2 - c"
}

fn limit_pos_source() -> &'static str {
    "-x1 + eps*x2; x2"
}

fn check_params(
    name: &str,
    given: &BTreeMap<String, f64>,
    allowed: &[&str],
) -> Result<(), FieldError> {
    for k in given.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(FieldError::InvalidCatalogParameter(format!(
                "`{k}` is not a parameter of `{name}`"
            )));
        }
    }
    Ok(())
}

/// `f_c` with its declared limits.
pub fn trivial_index_field(c: f64, eps: f64) -> Result<VectorFieldSpec, FieldError> {
    if !(eps > 0.0) || !eps.is_finite() || !c.is_finite() {
        return Err(FieldError::InvalidCatalogParameter(format!(
            "need finite c and eps > 0, got c = {c}, eps = {eps}"
        )));
    }
    let mut params = BTreeMap::new();
    params.insert("c".to_string(), c);
    params.insert("eps".to_string(), eps);
    let d_neg = ramp_rate_source("-t");
    let d_pos = ramp_rate_source("t");
    let source = format!(
        "{d_neg}*(x1) + {d_pos}*(-x1 + eps*x2); {d_neg}*(-x2 + 3*x1^2 - c) + {d_pos}*(x2)"
    );
    let kind = FieldKind::Catalog {
        name: TRIVIAL_INDEX.to_string(),
    };
    let neg = VectorFieldSpec::parse(limit_neg_source(), 2, &params)?.with_kind(kind.clone());
    let pos = VectorFieldSpec::parse(limit_pos_source(), 2, &params)?.with_kind(kind.clone());
    VectorFieldSpec::parse(&source, 2, &params)?
        .with_kind(kind)
        .with_limits(Some(neg), Some(pos))
}

/// The planar family as a full problem: `g` is the time reverse of `f`,
/// box `[-2, 2]²`, RK4 with `dt = 0.01` on `[-20, 20]`.
pub fn catalog_example(c: f64, eps: f64) -> Result<ProblemSpec, ProblemError> {
    let f = trivial_index_field(c, eps)?;
    ProblemSpec::new(
        f,
        GSpec::TimeReverse,
        BoxDomain::cube(2, 2.0),
        IntegratorSettings::default(),
        Tolerances::default(),
    )
}

/// Point of the unstable manifold `{(h, h² - c)}` of `(0, -c)` for `f⁻`.
pub fn trivial_index_unstable_point(c: f64, h: f64) -> [f64; 2] {
    [h, h * h - c]
}

/// `ẋ1 = lu·x1, ẋ2 = -ls·x2`.
pub fn linear_saddle(lambda_u: f64, lambda_s: f64) -> Result<VectorFieldSpec, FieldError> {
    let mut params = BTreeMap::new();
    params.insert("lu".to_string(), lambda_u);
    params.insert("ls".to_string(), lambda_s);
    let kind = FieldKind::Catalog {
        name: LINEAR_SADDLE.to_string(),
    };
    let f = VectorFieldSpec::parse("lu*x1; -ls*x2", 2, &params)?.with_kind(kind);
    let l = f.clone();
    f.with_limits(Some(l.clone()), Some(l))
}

/// `ẋ = x - x³` on the line.
pub fn gradient_cubic() -> Result<VectorFieldSpec, FieldError> {
    let kind = FieldKind::Catalog {
        name: GRADIENT_CUBIC.to_string(),
    };
    let f = VectorFieldSpec::parse("x1 - x1^3", 1, &BTreeMap::new())?.with_kind(kind);
    let l = f.clone();
    f.with_limits(Some(l.clone()), Some(l))
}

pub fn zero_field(dimension: usize) -> Result<VectorFieldSpec, FieldError> {
    let source = vec!["0"; dimension].join("; ");
    let kind = FieldKind::Catalog {
        name: ZERO.to_string(),
    };
    let f = VectorFieldSpec::parse(&source, dimension, &BTreeMap::new())?.with_kind(kind);
    let l = f.clone();
    f.with_limits(Some(l.clone()), Some(l))
}

/// Resolves a catalog reference from a problem file.
pub fn lookup(name: &str, params: &BTreeMap<String, f64>) -> Result<VectorFieldSpec, FieldError> {
    let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
    match name {
        TRIVIAL_INDEX => {
            check_params(name, params, &["c", "eps"])?;
            trivial_index_field(get("c", 1.0), get("eps", DEFAULT_EPS))
        }
        LINEAR_SADDLE => {
            check_params(name, params, &["lu", "ls"])?;
            linear_saddle(get("lu", 1.0), get("ls", 1.0))
        }
        GRADIENT_CUBIC => {
            check_params(name, params, &[])?;
            gradient_cubic()
        }
        ZERO => {
            check_params(name, params, &["dimension"])?;
            let d = get("dimension", 2.0);
            if d < 1.0 || d.fract() != 0.0 {
                return Err(FieldError::InvalidCatalogParameter(format!(
                    "dimension must be a positive integer, got {d}"
                )));
            }
            zero_field(d as usize)
        }
        other => Err(FieldError::UnknownCatalogEntry(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_is_c1_at_the_joints() {
        for &t in &[0.0, 1.0] {
            let h = 1e-7;
            let left = (ramp(t) - ramp(t - h)) / h;
            let right = (ramp(t + h) - ramp(t)) / h;
            assert!((left - right).abs() < 1e-5, "kink at {t}");
            assert!((ramp_rate(t) - 0.5 * (left + right)).abs() < 1e-5);
        }
        assert_eq!(ramp_rate(-3.0), 0.0);
        assert_eq!(ramp_rate(4.0), 1.0);
    }

    #[test]
    fn ramp_rate_matches_ramp_derivative() {
        for k in 0..=40 {
            let t = -0.5 + 2.0 * k as f64 / 40.0;
            let h = 1e-6;
            let fd = (ramp(t + h) - ramp(t - h)) / (2.0 * h);
            assert!((fd - ramp_rate(t)).abs() < 1e-5, "t = {t}");
        }
    }

    #[test]
    fn catalog_ramp_expression_matches_native_ramp() {
        let f = trivial_index_field(1.0, 0.1).unwrap();
        // at x = (1, 0): f = (ϕ'(-t) - ϕ'(t), ϕ'(-t) * 2)
        for k in 0..=60 {
            let t = -1.5 + 3.0 * k as f64 / 60.0;
            let v = f.eval(t, &[1.0, 0.0]).unwrap();
            assert!((v[0] - (ramp_rate(-t) - ramp_rate(t))).abs() < 1e-14);
            assert!((v[1] - 2.0 * ramp_rate(-t)).abs() < 1e-14);
        }
    }

    #[test]
    fn unknown_entries_and_params() {
        assert!(matches!(
            lookup("nope", &BTreeMap::new()),
            Err(FieldError::UnknownCatalogEntry(_))
        ));
        let mut p = BTreeMap::new();
        p.insert("k".to_string(), 1.0);
        assert!(matches!(
            lookup(TRIVIAL_INDEX, &p),
            Err(FieldError::InvalidCatalogParameter(_))
        ));
        assert!(trivial_index_field(1.0, 0.0).is_err());
    }
}
