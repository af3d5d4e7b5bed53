//! Problem specifications and the JSON problem-file format.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{catalog, FieldError, VectorFieldSpec};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid domain box: {0}")]
    InvalidBox(String),
    #[error("invalid integrator settings: {0}")]
    InvalidIntegrator(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Axis-aligned box, one closed interval per state coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub axes: Vec<(f64, f64)>,
}

impl BoxDomain {
    pub fn new(axes: Vec<(f64, f64)>) -> Result<Self, ProblemError> {
        if axes.is_empty() {
            return Err(ProblemError::InvalidBox("no axes".into()));
        }
        for (i, &(lo, hi)) in axes.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ProblemError::InvalidBox(format!(
                    "axis {i}: [{lo}, {hi}] is empty or unbounded"
                )));
            }
        }
        Ok(BoxDomain { axes })
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        BoxDomain {
            axes: vec![(-half_width, half_width); dim],
        }
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.axes
            .iter()
            .zip(x)
            .all(|(&(lo, hi), &v)| v >= lo && v <= hi)
    }

    /// The box scaled by `factor` about its centre.
    pub fn scaled(&self, factor: f64) -> BoxDomain {
        BoxDomain {
            axes: self
                .axes
                .iter()
                .map(|&(lo, hi)| {
                    let c = 0.5 * (lo + hi);
                    let h = 0.5 * (hi - lo) * factor;
                    (c - h, c + h)
                })
                .collect(),
        }
    }

    pub fn intersect(&self, other: &BoxDomain) -> Option<BoxDomain> {
        let axes: Vec<_> = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(&(a, b), &(c, d))| (a.max(c), b.min(d)))
            .collect();
        axes.iter().all(|&(lo, hi)| lo <= hi).then_some(BoxDomain { axes })
    }

    /// Regular sample grid with `per_axis` points per axis, endpoints included.
    pub fn sample_grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let per_axis = per_axis.max(1);
        let axes: Vec<Vec<f64>> = self
            .axes
            .iter()
            .map(|&(lo, hi)| {
                if per_axis == 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..per_axis)
                        .map(|k| lo + (hi - lo) * k as f64 / (per_axis - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut out = vec![Vec::new()];
        for ax in &axes {
            let mut next = Vec::with_capacity(out.len() * ax.len());
            for p in &out {
                for &v in ax {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorMethod {
    Rk4,
    Rk45,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    pub method: IntegratorMethod,
    pub dt: f64,
    pub t_span: (f64, f64),
    /// Relative tolerance for the adaptive method.
    pub rtol: f64,
    pub atol: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            method: IntegratorMethod::Rk4,
            dt: 0.01,
            t_span: (-20.0, 20.0),
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub newton_tol: f64,
    pub spectral_gap_tol: f64,
    pub connection_tol: f64,
    pub equilibrium_grid: usize,
    pub angle_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            newton_tol: 1e-10,
            spectral_gap_tol: 1e-6,
            connection_tol: 1e-4,
            equilibrium_grid: 10,
            angle_tol: 1e-5,
        }
    }
}

/// Either an explicit second field or the time reverse of `f`.
#[derive(Clone, Debug)]
pub enum GSpec {
    TimeReverse,
    Field(VectorFieldSpec),
}

/// The cycle `(f, g)` together with the numerical context it is studied in.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub f: VectorFieldSpec,
    pub g: VectorFieldSpec,
    pub g_is_time_reverse: bool,
    pub domain_box: BoxDomain,
    pub integrator: IntegratorSettings,
    pub tolerances: Tolerances,
}

impl ProblemSpec {
    pub fn new(
        f: VectorFieldSpec,
        g: GSpec,
        domain_box: BoxDomain,
        integrator: IntegratorSettings,
        tolerances: Tolerances,
    ) -> Result<Self, ProblemError> {
        if domain_box.dimension() != f.dimension() {
            return Err(ProblemError::InvalidBox(format!(
                "box has {} axes but the field has dimension {}",
                domain_box.dimension(),
                f.dimension()
            )));
        }
        let domain_box = BoxDomain::new(domain_box.axes)?;
        if !(integrator.dt > 0.0 && integrator.dt.is_finite()) {
            return Err(ProblemError::InvalidIntegrator(format!(
                "dt must be positive, got {}",
                integrator.dt
            )));
        }
        let (g, g_is_time_reverse) = match g {
            GSpec::TimeReverse => (f.time_reversed(), true),
            GSpec::Field(g) => {
                if g.dimension() != f.dimension() {
                    return Err(ProblemError::Schema("f and g differ in dimension".into()));
                }
                (g, false)
            }
        };
        Ok(ProblemSpec {
            f,
            g,
            g_is_time_reverse,
            domain_box,
            integrator,
            tolerances,
        })
    }

    pub fn dimension(&self) -> usize {
        self.f.dimension()
    }

    /// The same problem with the roles of `f` and `g` exchanged.
    pub fn swapped(&self) -> ProblemSpec {
        ProblemSpec {
            f: self.g.clone(),
            g: self.f.clone(),
            ..self.clone()
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.integrator.dt = dt;
        self
    }

    /// Parses a problem file.
    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
        file.resolve()
    }
}

fn json_error(text: &str, e: &serde_json::Error) -> ProblemError {
    if e.is_data() {
        return ProblemError::Schema(e.to_string());
    }
    // serde_json reports 1-based line/column; convert to a byte offset.
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i + 1 == e.line() {
            offset += e.column().saturating_sub(1).min(line.len());
            break;
        }
        offset += line.len();
    }
    ProblemError::Json {
        offset,
        message: e.to_string(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    dimension: usize,
    f: FieldFile,
    #[serde(default)]
    g: Option<Value>,
    domain_box: Vec<(f64, f64)>,
    #[serde(default)]
    integrator: IntegratorSettings,
    #[serde(default)]
    tolerances: Tolerances,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldFile {
    expr: Option<String>,
    catalog: Option<CatalogRef>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    limits: Option<LimitsFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogRef {
    name: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsFile {
    neg: Option<String>,
    pos: Option<String>,
}

impl FieldFile {
    fn resolve(&self, dimension: usize) -> Result<VectorFieldSpec, ProblemError> {
        match (&self.expr, &self.catalog) {
            (Some(src), None) => {
                let f = VectorFieldSpec::parse(src, dimension, &self.params)?;
                let (neg, pos) = match &self.limits {
                    Some(l) => (
                        l.neg
                            .as_deref()
                            .map(|s| VectorFieldSpec::parse(s, dimension, &self.params))
                            .transpose()?,
                        l.pos
                            .as_deref()
                            .map(|s| VectorFieldSpec::parse(s, dimension, &self.params))
                            .transpose()?,
                    ),
                    None => (None, None),
                };
                Ok(f.with_limits(neg, pos)?)
            }
            (None, Some(cat)) => {
                if !self.params.is_empty() || self.limits.is_some() {
                    return Err(ProblemError::Schema(
                        "catalog fields take parameters inside the catalog object".into(),
                    ));
                }
                let f = catalog::lookup(&cat.name, &cat.params)?;
                if f.dimension() != dimension {
                    return Err(ProblemError::Schema(format!(
                        "catalog entry `{}` has dimension {}, file declares {}",
                        cat.name,
                        f.dimension(),
                        dimension
                    )));
                }
                Ok(f)
            }
            _ => Err(ProblemError::Schema(
                "a field needs exactly one of `expr` or `catalog`".into(),
            )),
        }
    }
}

impl ProblemFile {
    fn resolve(self) -> Result<ProblemSpec, ProblemError> {
        if self.dimension == 0 {
            return Err(ProblemError::Schema("dimension must be positive".into()));
        }
        let f = self.f.resolve(self.dimension)?;
        let g = match self.g {
            None => GSpec::TimeReverse,
            Some(Value::String(s)) if s == "time-reverse" => GSpec::TimeReverse,
            Some(v @ Value::Object(_)) => {
                let file: FieldFile =
                    serde_json::from_value(v).map_err(|e| ProblemError::Schema(format!("g: {e}")))?;
                GSpec::Field(file.resolve(self.dimension)?)
            }
            Some(other) => {
                return Err(ProblemError::Schema(format!(
                    "g must be \"time-reverse\" or a field object, got {other}"
                )))
            }
        };
        ProblemSpec::new(
            f,
            g,
            BoxDomain::new(self.domain_box)?,
            self.integrator,
            self.tolerances,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "dimension": 2,
        "f": {"catalog": {"name": "trivial-index", "params": {"c": 1.0, "eps": 0.1}}},
        "g": "time-reverse",
        "domain_box": [[-2, 2], [-2, 2]],
        "integrator": {"method": "rk4", "dt": 0.01, "t_span": [-20, 20]},
        "tolerances": {"newton_tol": 1e-10}
    }"#;

    #[test]
    fn parses_catalog_problem() {
        let p = ProblemSpec::from_json(EXAMPLE).unwrap();
        assert_eq!(p.dimension(), 2);
        assert!(p.g_is_time_reverse);
        assert!(p.f.limit_neg().is_some());
        assert_eq!(p.tolerances.newton_tol, 1e-10);
        assert_eq!(p.tolerances.connection_tol, Tolerances::default().connection_tol);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = EXAMPLE.replace("\"g\"", "\"gee\"");
        assert!(matches!(ProblemSpec::from_json(&text), Err(ProblemError::Schema(_))));
        let text = EXAMPLE.replace("\"newton_tol\"", "\"newton\"");
        assert!(matches!(ProblemSpec::from_json(&text), Err(ProblemError::Schema(_))));
    }

    #[test]
    fn malformed_json_reports_offset() {
        let text = "{\"dimension\": 2,\n \"f\": }";
        match ProblemSpec::from_json(text) {
            Err(ProblemError::Json { offset, .. }) => assert_eq!(&text[offset..offset + 1], "}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expression_problem_with_limits() {
        let text = r#"{
            "dimension": 1,
            "f": {"expr": "tanh(t)*x1", "limits": {"neg": "-x1", "pos": "x1"}},
            "domain_box": [[-1, 1]]
        }"#;
        let p = ProblemSpec::from_json(text).unwrap();
        assert_eq!(p.g.eval(1.0, &[1.0]).unwrap(), p.f.eval(-1.0, &[1.0]).unwrap());
        assert_eq!(p.g.limit_pos().unwrap().to_source(), "(-x1)");
    }

    #[test]
    fn rejects_bad_box_and_dt() {
        let text = EXAMPLE.replace("[[-2, 2], [-2, 2]]", "[[2, -2], [-2, 2]]");
        assert!(matches!(ProblemSpec::from_json(&text), Err(ProblemError::InvalidBox(_))));
        let text = EXAMPLE.replace("\"dt\": 0.01", "\"dt\": 0");
        assert!(matches!(
            ProblemSpec::from_json(&text),
            Err(ProblemError::InvalidIntegrator(_))
        ));
    }
}
