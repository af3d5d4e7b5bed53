//! Connection searches over all equilibrium pairs, parameter sweeps, the
//! exhaustive bounded-solution search and the index-monotonicity check.

use serde::Serialize;

use crate::dynamics::integrate::march;
use crate::dynamics::{find_equilibria, DynamicsError, Equilibrium, FieldTag};
use crate::fields::{asymptotic_limits, ProblemError, ProblemSpec, VectorFieldSpec};

use super::{shoot_field, Connection, ConnectionError, ShootOptions};

const LIMIT_HORIZON: f64 = 50.0;
const LIMIT_TOL: f64 = 1e-6;

/// Equilibria of both limit fields and every connection found between them,
/// for `f` and for `g`.
#[derive(Clone, Debug, Serialize)]
pub struct ConnectionSet {
    pub neg_equilibria: Vec<Equilibrium>,
    pub pos_equilibria: Vec<Equilibrium>,
    /// Connections of `f` from `f^{-∞}` to `f^{+∞}` equilibria.
    pub f_connections: Vec<Connection>,
    /// Connections of `g`, between equilibria of its own limit fields
    /// `g^{-∞}` and `g^{+∞}`.
    pub g_connections: Vec<Connection>,
    pub warnings: Vec<String>,
}

pub fn limit_equilibria(
    problem: &ProblemSpec,
) -> Result<(VectorFieldSpec, VectorFieldSpec, Vec<Equilibrium>, Vec<Equilibrium>, Vec<String>), ConnectionError> {
    let (neg, pos, _) = asymptotic_limits(&problem.f, &problem.domain_box, LIMIT_HORIZON, LIMIT_TOL)?;
    let tol = &problem.tolerances;
    let mut warnings = Vec::new();
    let mut search = |field: &VectorFieldSpec, tag: FieldTag| -> Result<Vec<Equilibrium>, DynamicsError> {
        let s = find_equilibria(
            field,
            tag,
            &problem.domain_box,
            tol.equilibrium_grid,
            tol.newton_tol,
            tol.spectral_gap_tol,
        )?;
        warnings.extend(s.warnings.into_iter().map(|w| format!("{}: {w}", tag.label())));
        Ok(s.equilibria)
    };
    let e_neg = search(&neg, FieldTag::NegInfinity)?;
    let e_pos = search(&pos, FieldTag::PosInfinity)?;
    Ok((neg, pos, e_neg, e_pos, warnings))
}

fn connect_all(
    field: &VectorFieldSpec,
    sources: &[Equilibrium],
    targets: &[Equilibrium],
    opts: &ShootOptions,
    warnings: &mut Vec<String>,
) -> Result<Vec<Connection>, ConnectionError> {
    let mut out = Vec::new();
    for s in sources {
        for t in targets {
            if !(s.hyperbolic && t.hyperbolic) {
                warnings.push(format!(
                    "skipped pair {:?} -> {:?}: non-hyperbolic endpoint",
                    s.point, t.point
                ));
                continue;
            }
            out.extend(shoot_field(field, s, t, opts)?);
        }
    }
    Ok(out)
}

/// Shoots every pair of hyperbolic equilibria, for `f` and for `g`.
pub fn find_all_connections(problem: &ProblemSpec, opts: &ShootOptions) -> Result<ConnectionSet, ConnectionError> {
    let (_, _, e_neg, e_pos, mut warnings) = limit_equilibria(problem)?;
    let f_connections = connect_all(&problem.f, &e_neg, &e_pos, opts, &mut warnings)?;
    // g runs from f^{+∞} to f^{-∞}; its own limit fields carry the spectra
    let (_, _, g_neg, g_pos, g_warnings) = limit_equilibria(&problem.swapped())?;
    warnings.extend(g_warnings.into_iter().map(|w| format!("g {w}")));
    let g_connections = connect_all(&problem.g, &g_neg, &g_pos, opts, &mut warnings)?;
    Ok(ConnectionSet {
        neg_equilibria: e_neg,
        pos_equilibria: e_pos,
        f_connections,
        g_connections,
        warnings,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub c: f64,
    pub f_count: Option<usize>,
    pub g_count: Option<usize>,
    pub f_weakly_hyperbolic: Vec<Option<bool>>,
    pub g_weakly_hyperbolic: Vec<Option<bool>>,
    pub f_u0: Vec<Vec<f64>>,
    pub g_u0: Vec<Vec<f64>>,
    pub error: Option<String>,
    #[serde(skip)]
    pub set: Option<ConnectionSet>,
}

/// Independent connection searches for each parameter value. Failures are
/// recorded in the row and the sweep continues.
pub fn count_connections_sweep(
    family: impl Fn(f64) -> Result<ProblemSpec, ProblemError>,
    cs: &[f64],
    options: impl Fn(&ProblemSpec) -> ShootOptions,
) -> Vec<SweepRow> {
    cs.iter()
        .map(|&c| {
            let result = family(c)
                .map_err(|e| e.to_string())
                .and_then(|p| find_all_connections(&p, &options(&p)).map_err(|e| e.to_string()));
            match result {
                Ok(set) => SweepRow {
                    c,
                    f_count: Some(set.f_connections.len()),
                    g_count: Some(set.g_connections.len()),
                    f_weakly_hyperbolic: set.f_connections.iter().map(|k| k.weakly_hyperbolic).collect(),
                    g_weakly_hyperbolic: set.g_connections.iter().map(|k| k.weakly_hyperbolic).collect(),
                    f_u0: set.f_connections.iter().map(|k| k.u0.clone()).collect(),
                    g_u0: set.g_connections.iter().map(|k| k.u0.clone()).collect(),
                    error: None,
                    set: Some(set),
                },
                Err(e) => SweepRow {
                    c,
                    f_count: None,
                    g_count: None,
                    f_weakly_hyperbolic: Vec::new(),
                    g_weakly_hyperbolic: Vec::new(),
                    f_u0: Vec::new(),
                    g_u0: Vec::new(),
                    error: Some(e),
                    set: None,
                },
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchOptions {
    pub per_axis: usize,
    /// Orbits are followed on `[-horizon, horizon]`.
    pub horizon: f64,
    /// An orbit counts as bounded if it stays in the domain scaled by this.
    pub bound_scale: f64,
    pub dt: f64,
}

impl SearchOptions {
    pub fn from_problem(problem: &ProblemSpec) -> Self {
        SearchOptions {
            per_axis: 41,
            horizon: 8.0,
            bound_scale: 2.0,
            dt: problem.integrator.dt,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundedSearch {
    pub options: SearchOptions,
    pub points_tested: usize,
    /// Grid values `u(0)` whose orbit stayed bounded both ways.
    pub bounded: Vec<Vec<f64>>,
    /// Bounded points grouped by grid adjacency.
    pub count: usize,
}

/// Tests every point of a grid on the domain as `u(0)`: the orbit is followed
/// forward and backward and kept if it never leaves the enlarged box.
pub fn exhaustive_bounded_search(problem: &ProblemSpec, opts: &SearchOptions) -> Result<BoundedSearch, ConnectionError> {
    if !(opts.horizon > 0.0 && opts.dt > 0.0 && opts.per_axis >= 1) {
        return Err(ConnectionError::InvalidOptions("horizon, dt and per_axis must be positive".into()));
    }
    let bound = problem.domain_box.scaled(opts.bound_scale);
    let points = problem.domain_box.sample_grid(opts.per_axis);
    let stays = |x0: &[f64], t1: f64| -> bool {
        let mut x = x0.to_vec();
        matches!(
            march(&problem.f, 0.0, &mut x, t1, opts.dt, |_, y| bound.contains(y)),
            Ok(crate::dynamics::MarchEnd::Completed)
        )
    };
    let flags = crate::par::map(&points, |_, x| stays(x, opts.horizon) && stays(x, -opts.horizon));
    let bounded: Vec<Vec<f64>> = points
        .iter()
        .zip(&flags)
        .filter(|(_, &b)| b)
        .map(|(p, _)| p.clone())
        .collect();
    let spacing: Vec<f64> = problem
        .domain_box
        .axes
        .iter()
        .map(|(lo, hi)| (hi - lo) / (opts.per_axis.max(2) - 1) as f64)
        .collect();
    let count = count_groups(&bounded, &spacing);
    Ok(BoundedSearch {
        options: opts.clone(),
        points_tested: points.len(),
        bounded,
        count,
    })
}

// Connected components under grid adjacency (including diagonals).
fn count_groups(points: &[Vec<f64>], spacing: &[f64]) -> usize {
    let adjacent = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .zip(spacing)
            .all(|((p, q), s)| (p - q).abs() <= 1.5 * s)
    };
    let mut label: Vec<Option<usize>> = vec![None; points.len()];
    let mut groups = 0;
    for i in 0..points.len() {
        if label[i].is_some() {
            continue;
        }
        label[i] = Some(groups);
        let mut stack = vec![i];
        while let Some(k) = stack.pop() {
            for j in 0..points.len() {
                if label[j].is_none() && adjacent(&points[k], &points[j]) {
                    label[j] = Some(groups);
                    stack.push(j);
                }
            }
        }
        groups += 1;
    }
    groups
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexViolationKind {
    /// `m(e⁻) < m(e⁺)`.
    IndexIncreasing,
    /// `m(e⁻) = m(e⁺)` on a connection that is not weakly hyperbolic.
    EqualNotWeaklyHyperbolic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexViolation {
    pub h0: f64,
    pub u0: Vec<f64>,
    pub morse_source: usize,
    pub morse_target: usize,
    pub kind: IndexViolationKind,
}

/// Every connection should satisfy `m(e⁻) ≥ m(e⁺)`, with equality only for
/// weakly hyperbolic ones. Violations are returned, not raised.
pub fn check_index_monotonicity(connections: &[Connection]) -> Vec<IndexViolation> {
    connections
        .iter()
        .filter_map(|c| {
            let kind = if c.morse_source < c.morse_target {
                IndexViolationKind::IndexIncreasing
            } else if c.morse_source == c.morse_target && c.weakly_hyperbolic != Some(true) {
                IndexViolationKind::EqualNotWeaklyHyperbolic
            } else {
                return None;
            };
            Some(IndexViolation {
                h0: c.h0,
                u0: c.u0.clone(),
                morse_source: c.morse_source,
                morse_target: c.morse_target,
                kind,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_groups() {
        let s = [0.1, 0.1];
        let pts = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![1.0, 1.0], vec![0.2, 0.1]];
        assert_eq!(count_groups(&pts, &s), 2);
        assert_eq!(count_groups(&[], &s), 0);
    }
}
