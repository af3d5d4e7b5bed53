//! Time-dependent vector fields on ℝⁿ given by expression trees.
//!
//! A [`VectorFieldSpec`] holds one expression per component together with
//! its compiled form and the compiled symbolic Jacobian. Specs are immutable
//! after construction and evaluation is pure.

pub mod catalog;
pub mod compile;
pub mod diff;
pub mod expr;
pub mod limits;
pub mod parse;
pub mod problem;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

pub use compile::{DomainErrorKind, Program};
pub use expr::{BinOp, Constant, Expr, Func, Var};
pub use limits::{asymptotic_limits, LimitReport};
pub use problem::{BoxDomain, GSpec, IntegratorMethod, IntegratorSettings, ProblemError, ProblemSpec, Tolerances};

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("expected {expected} component expressions, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter name `{0}`")]
    InvalidParameterName(String),
    #[error("limit field must not depend on t")]
    TimeDependentLimit,
    #[error("limit field has dimension {found}, expected {expected}")]
    LimitDimension { expected: usize, found: usize },
    #[error("component {component}: {kind}")]
    Domain { component: usize, kind: DomainErrorKind },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("not asymptotically autonomous: {0}")]
    NotAsymptoticallyAutonomous(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),
    #[error("invalid catalog parameter: {0}")]
    InvalidCatalogParameter(String),
}

/// Componentwise evaluation failure. Cheap to construct in hot loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalError {
    pub component: usize,
    pub kind: DomainErrorKind,
}

impl From<EvalError> for FieldError {
    fn from(e: EvalError) -> Self {
        FieldError::Domain {
            component: e.component,
            kind: e.kind,
        }
    }
}

/// Anything that assigns a vector to `(t, x)`.
pub trait Field: Send + Sync {
    fn dimension(&self) -> usize;
    fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), EvalError>;
}

/// A field with a row-major Jacobian in `x`.
pub trait DifferentiableField: Field {
    fn jacobian_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), EvalError>;
}

/// `field(t + offset, x)`.
#[derive(Clone, Copy, Debug)]
pub struct Shifted<'a, F: ?Sized> {
    pub field: &'a F,
    pub offset: f64,
}

impl<F: Field + ?Sized> Field for Shifted<'_, F> {
    fn dimension(&self) -> usize {
        self.field.dimension()
    }

    fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        self.field.eval_into(t + self.offset, x, out)
    }
}

impl<F: DifferentiableField + ?Sized> DifferentiableField for Shifted<'_, F> {
    fn jacobian_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        self.field.jacobian_into(t + self.offset, x, out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    Expression,
    Catalog { name: String },
}

#[derive(Clone, Debug)]
pub struct VectorFieldSpec {
    dimension: usize,
    kind: FieldKind,
    components: Vec<Expr>,
    params: BTreeMap<String, f64>,
    limit_neg: Option<Box<VectorFieldSpec>>,
    limit_pos: Option<Box<VectorFieldSpec>>,
    compiled: Vec<Program>,
    jacobian: Vec<Program>,
}

impl PartialEq for VectorFieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension
            && self.kind == other.kind
            && self.components == other.components
            && self.params == other.params
            && self.limit_neg == other.limit_neg
            && self.limit_pos == other.limit_pos
    }
}

/// Parses `source` (one expression per component, `;`-separated).
pub fn parse_field_expression(
    source: &str,
    dimension: usize,
    params: &BTreeMap<String, f64>,
) -> Result<VectorFieldSpec, FieldError> {
    VectorFieldSpec::parse(source, dimension, params)
}

/// Evaluates `spec` at `(t, x)`.
pub fn eval_field(spec: &VectorFieldSpec, t: f64, x: &[f64]) -> Result<Vec<f64>, FieldError> {
    spec.eval(t, x)
}

impl VectorFieldSpec {
    pub fn parse(
        source: &str,
        dimension: usize,
        params: &BTreeMap<String, f64>,
    ) -> Result<Self, FieldError> {
        if dimension == 0 {
            return Err(FieldError::ZeroDimension);
        }
        let components = parse::parse_components(source, dimension, params)?;
        Self::from_components(components, params.clone(), FieldKind::Expression)
    }

    pub fn from_components(
        components: Vec<Expr>,
        params: BTreeMap<String, f64>,
        kind: FieldKind,
    ) -> Result<Self, FieldError> {
        let dimension = components.len();
        if dimension == 0 {
            return Err(FieldError::ZeroDimension);
        }
        for c in &components {
            let mut bad = None;
            c.for_each_var(&mut |v| match v {
                Var::State(i) if *i >= dimension => bad = Some(format!("x{}", i + 1)),
                Var::Param(p) if !params.contains_key(p) => bad = Some(p.clone()),
                _ => {}
            });
            if let Some(name) = bad {
                return Err(FieldError::UnknownIdentifier { name, offset: 0 });
            }
        }
        let compiled = components.iter().map(|c| Program::compile(c, &params)).collect();
        let jacobian = diff::jacobian(&components)
            .iter()
            .map(|c| Program::compile(c, &params))
            .collect();
        Ok(VectorFieldSpec {
            dimension,
            kind,
            components,
            params,
            limit_neg: None,
            limit_pos: None,
            compiled,
            jacobian,
        })
    }

    /// Attaches declared limit fields. Both must be autonomous.
    pub fn with_limits(
        mut self,
        neg: Option<VectorFieldSpec>,
        pos: Option<VectorFieldSpec>,
    ) -> Result<Self, FieldError> {
        for l in neg.iter().chain(pos.iter()) {
            if !l.is_autonomous() {
                return Err(FieldError::TimeDependentLimit);
            }
            if l.dimension != self.dimension {
                return Err(FieldError::LimitDimension {
                    expected: self.dimension,
                    found: l.dimension,
                });
            }
        }
        self.limit_neg = neg.map(Box::new);
        self.limit_pos = pos.map(Box::new);
        Ok(self)
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn limit_neg(&self) -> Option<&VectorFieldSpec> {
        self.limit_neg.as_deref()
    }

    pub fn limit_pos(&self) -> Option<&VectorFieldSpec> {
        self.limit_pos.as_deref()
    }

    pub fn is_autonomous(&self) -> bool {
        !self.components.iter().any(Expr::depends_on_time)
    }

    /// The symbolic Jacobian, row-major.
    pub fn jacobian_exprs(&self) -> Vec<Expr> {
        diff::jacobian(&self.components)
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        if x.len() != self.dimension {
            return Err(FieldError::DimensionMismatch {
                expected: self.dimension,
                found: x.len(),
            });
        }
        let mut out = vec![0.0; self.dimension];
        self.eval_into(t, x, &mut out)?;
        Ok(out)
    }

    pub fn jacobian_at(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        if x.len() != self.dimension {
            return Err(FieldError::DimensionMismatch {
                expected: self.dimension,
                found: x.len(),
            });
        }
        let n = self.dimension;
        let mut buf = vec![0.0; n * n];
        self.jacobian_into(t, x, &mut buf)?;
        Ok(DMatrix::from_row_slice(n, n, &buf))
    }

    /// `t ↦ self(-t, ·)`; limits are exchanged accordingly.
    pub fn time_reversed(&self) -> VectorFieldSpec {
        let minus_t = Expr::neg(Expr::time());
        let comps = self
            .components
            .iter()
            .map(|c| if c.depends_on_time() { c.substitute_time(&minus_t) } else { c.clone() })
            .collect();
        let mut out = VectorFieldSpec::from_components(comps, self.params.clone(), self.kind.clone())
            .expect("time reversal preserves validity");
        out.limit_neg = self.limit_pos.clone();
        out.limit_pos = self.limit_neg.clone();
        out
    }

    /// The autonomous field `x ↦ self(t0, x)`.
    pub fn frozen_at(&self, t0: f64) -> VectorFieldSpec {
        let comps = self
            .components
            .iter()
            .map(|c| c.substitute_time(&Expr::Num(t0)))
            .collect();
        VectorFieldSpec::from_components(comps, self.params.clone(), FieldKind::Expression)
            .expect("freezing time preserves validity")
    }

    /// `;`-separated, fully parenthesised source that reparses to this spec.
    pub fn to_source(&self) -> String {
        self.components
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl Field for VectorFieldSpec {
    fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (i, (p, o)) in self.compiled.iter().zip(out.iter_mut()).enumerate() {
            *o = p.eval(t, x).map_err(|kind| EvalError { component: i, kind })?;
        }
        Ok(())
    }
}

impl DifferentiableField for VectorFieldSpec {
    fn jacobian_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let n = self.dimension;
        for (k, (p, o)) in self.jacobian.iter().zip(out.iter_mut()).enumerate() {
            *o = p.eval(t, x).map_err(|kind| EvalError { component: k / n, kind })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_evaluates_to_zero() {
        let f = parse_field_expression("0; 0", 2, &BTreeMap::new()).unwrap();
        assert_eq!(f.eval(3.0, &[1.0, -2.0]).unwrap(), vec![0.0, 0.0]);
        assert!(f.is_autonomous());
    }

    #[test]
    fn sin_t_example() {
        let f = parse_field_expression("sin(t)*x1; x2", 2, &BTreeMap::new()).unwrap();
        let v = f.eval(std::f64::consts::FRAC_PI_2, &[2.0, 3.0]).unwrap();
        assert_eq!(v, vec![2.0, 3.0]);
    }

    #[test]
    fn eval_reports_component_of_domain_error() {
        let f = parse_field_expression("x1; 1/x1", 2, &BTreeMap::new()).unwrap();
        assert_eq!(
            f.eval(0.0, &[0.0, 1.0]),
            Err(FieldError::Domain {
                component: 1,
                kind: DomainErrorKind::DivisionByZero
            })
        );
        assert!(matches!(
            f.eval(0.0, &[0.0]),
            Err(FieldError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn limits_must_be_autonomous() {
        let f = parse_field_expression("t*x1", 1, &BTreeMap::new()).unwrap();
        let l = parse_field_expression("t", 1, &BTreeMap::new()).unwrap();
        assert_eq!(
            f.clone().with_limits(Some(l), None).unwrap_err(),
            FieldError::TimeDependentLimit
        );
        let l2 = parse_field_expression("x1; x2", 2, &BTreeMap::new()).unwrap();
        assert!(matches!(
            f.with_limits(None, Some(l2)),
            Err(FieldError::LimitDimension { .. })
        ));
    }

    #[test]
    fn time_reversal_is_exact() {
        let f = parse_field_expression("tanh(t)*x1 + t^2; exp(-t)*x2", 2, &BTreeMap::new())
            .unwrap();
        let g = f.time_reversed();
        for &(t, x) in &[(0.3, [1.0, 2.0]), (-2.5, [-0.7, 0.1]), (7.0, [3.0, -4.0])] {
            assert_eq!(g.eval(t, &x).unwrap(), f.eval(-t, &x).unwrap());
        }
    }

    #[test]
    fn jacobian_of_catalog_limit() {
        let mut p = BTreeMap::new();
        p.insert("c".to_string(), 1.0);
        let f = parse_field_expression("x1; -x2 + 3*x1^2 - c", 2, &p).unwrap();
        let j = f.jacobian_at(0.0, &[0.5, 7.0]).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 3.0, -1.0]));
    }
}
