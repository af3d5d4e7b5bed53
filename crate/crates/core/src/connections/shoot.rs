//! Shooting along the source's unstable manifold.
//!
//! Seeds `e⁻ + h v + h² w` are placed on log-spaced parameters
//! `±R e^{-kΔ}` (and `h = 0`) so that the time the orbit needs to leave the
//! neighbourhood of `e⁻` is sampled uniformly. Each seed is integrated from
//! `-T` to `T`; the signed miss is the component of `u(T) - e⁺` along the
//! target's unstable direction.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::integrate::{integrate_field, march, step_count, StepOptions};
use crate::dynamics::{norm_diff, DynamicsError, Equilibrium, Trajectory};
use crate::fields::{BoxDomain, ProblemSpec, VectorFieldSpec};

use super::hyperbolicity::weak_hyperbolicity_along;
use super::manifold::{check_saddle, exit_functionals, sphere_directions, unstable_subspace, SeedModel, UnstableCurve};
use super::{Acceptance, Connection, ConnectionError};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShootOptions {
    /// Half-width of the time window `[-T, T]`.
    pub t_final: f64,
    /// Seeds on each side of the source.
    pub n_seeds: usize,
    pub tol: f64,
    pub dt: f64,
    pub model: SeedModel,
    /// Seed for the parameter jitter.
    pub seed: u64,
    pub max_refine: usize,
    /// Threshold on singular values in the tangent-space test.
    pub angle_tol: f64,
    /// Orbits leaving this box are dropped.
    pub escape: BoxDomain,
}

impl ShootOptions {
    pub fn from_problem(problem: &ProblemSpec) -> Self {
        ShootOptions {
            t_final: 20.0,
            n_seeds: 200,
            tol: problem.tolerances.connection_tol,
            dt: problem.integrator.dt,
            model: SeedModel::Quadratic,
            seed: 0,
            max_refine: 200,
            angle_tol: problem.tolerances.angle_tol,
            escape: problem.domain_box.scaled(10.0),
        }
    }

    // Grid step dividing T exactly, so that t = 0 is a grid point.
    fn grid(&self) -> (f64, usize) {
        let half = step_count(0.0, self.t_final, self.dt).max(1);
        (self.t_final / half as f64, half)
    }
}

#[derive(Clone, Debug)]
struct Shot {
    h: f64,
    /// Signed when the target has one unstable direction.
    miss: f64,
    source_err: f64,
    /// Infinite when the orbit escaped.
    target_err: f64,
    u0: Option<Vec<f64>>,
    seed: Vec<f64>,
}

impl Shot {
    fn error(&self) -> f64 {
        self.source_err.max(self.target_err)
    }

    fn usable(&self) -> bool {
        self.miss.is_finite()
    }
}

struct Shooter<'a> {
    field: &'a VectorFieldSpec,
    opts: &'a ShootOptions,
    source: &'a Equilibrium,
    target: &'a Equilibrium,
    exits: Vec<DVector<f64>>,
    dt: f64,
    half: usize,
}

impl Shooter<'_> {
    fn shoot_point(&self, h: f64, seed: Vec<f64>) -> Shot {
        let t = self.opts.t_final;
        let mut x = seed.clone();
        let mut u0 = None;
        let mut k = 0usize;
        let end = march(self.field, -t, &mut x, t, self.dt, |_, y| {
            k += 1;
            if k == self.half {
                u0 = Some(y.to_vec());
            }
            self.opts.escape.contains(y)
        });
        let source_err = norm_diff(&seed, &self.source.point);
        let escaped = match end {
            Ok(crate::dynamics::MarchEnd::Completed) => false,
            Ok(crate::dynamics::MarchEnd::Stopped(_)) => true,
            Err(_) => {
                return Shot {
                    h,
                    miss: f64::NAN,
                    source_err,
                    target_err: f64::INFINITY,
                    u0: None,
                    seed,
                }
            }
        };
        let d: Vec<f64> = x.iter().zip(&self.target.point).map(|(a, b)| a - b).collect();
        let miss = match self.exits.len() {
            0 => crate::dynamics::norm(&d),
            1 => self.exits[0].iter().zip(&d).map(|(a, b)| a * b).sum(),
            _ => self
                .exits
                .iter()
                .map(|p| p.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>().powi(2))
                .sum::<f64>()
                .sqrt(),
        };
        Shot {
            h,
            miss,
            source_err,
            target_err: if escaped { f64::INFINITY } else { crate::dynamics::norm(&d) },
            u0: if self.half == 0 { Some(seed.clone()) } else { u0 },
            seed,
        }
    }

    fn bisect(&self, curve: &UnstableCurve, a: &Shot, b: &Shot) -> Shot {
        let goal = self.opts.tol / 10.0;
        let (mut lo, mut hi) = (a.clone(), b.clone());
        let mut best = if a.error() <= b.error() { a.clone() } else { b.clone() };
        for _ in 0..self.opts.max_refine {
            let mid = 0.5 * (lo.h + hi.h);
            if mid == lo.h || mid == hi.h {
                break;
            }
            let s = self.shoot_point(mid, curve.at(mid));
            if !s.usable() {
                break;
            }
            if s.error() < best.error() {
                best = s.clone();
            }
            if s.error() <= goal {
                break;
            }
            if (s.miss < 0.0) == (lo.miss < 0.0) {
                lo = s;
            } else {
                hi = s;
            }
        }
        best
    }

    // Golden-section search for a minimum of |miss| on [a, b].
    fn golden(&self, curve: &UnstableCurve, a: f64, b: f64) -> Shot {
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (a, b);
        let eval = |h: f64| self.shoot_point(h, curve.at(h));
        let mut c = eval(b - r * (b - a));
        let mut d = eval(a + r * (b - a));
        let mut best = if c.miss.abs() <= d.miss.abs() { c.clone() } else { d.clone() };
        for _ in 0..self.opts.max_refine {
            if !(c.usable() && d.usable()) || (b - a).abs() <= f64::EPSILON * a.abs().max(b.abs()) {
                break;
            }
            if c.miss.abs() < d.miss.abs() {
                b = d.h;
                d = c;
                c = eval(b - r * (b - a));
            } else {
                a = c.h;
                c = d;
                d = eval(a + r * (b - a));
            }
            for s in [&c, &d] {
                if s.usable() && s.miss.abs() < best.miss.abs() {
                    best = s.clone();
                }
            }
            if best.error() <= self.opts.tol / 10.0 {
                break;
            }
        }
        best
    }
}

// Log-spaced parameters ±R e^{-kΔ} with jitter, plus 0, ascending.
fn seed_parameters(radius: f64, log_span: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = if n > 1 { log_span / (n - 1) as f64 } else { 0.0 };
    let mut side: Vec<f64> = (0..n)
        .map(|k| {
            let jitter = if k == 0 { 0.0 } else { rng.random_range(-0.25..0.25) * delta };
            radius * (-(k as f64) * delta + jitter).exp()
        })
        .collect();
    side.sort_by(f64::total_cmp);
    let mut hs: Vec<f64> = side.iter().rev().map(|h| -h).collect();
    hs.push(0.0);
    hs.extend(side);
    hs
}

/// Connections of `problem.f` from `source` (an equilibrium of `f^{-∞}`) to
/// `target` (of `f^{+∞}`). Returns distinct refined connections sorted by
/// seed parameter.
pub fn shoot_connections(
    problem: &ProblemSpec,
    source: &Equilibrium,
    target: &Equilibrium,
    opts: &ShootOptions,
) -> Result<Vec<Connection>, ConnectionError> {
    shoot_field(&problem.f, source, target, opts)
}

pub fn shoot_field(
    field: &VectorFieldSpec,
    source: &Equilibrium,
    target: &Equilibrium,
    opts: &ShootOptions,
) -> Result<Vec<Connection>, ConnectionError> {
    check_saddle(source)?;
    check_saddle(target)?;
    if !(opts.t_final > 0.0 && opts.tol > 0.0 && opts.dt > 0.0) {
        return Err(ConnectionError::InvalidOptions(
            "t_final, tol and dt must be positive".into(),
        ));
    }
    if field.is_autonomous() && norm_diff(&source.point, &target.point) <= opts.tol {
        // the constant solution is the equilibrium itself, and orbits that
        // have not yet left it are translates of other connections
        return Ok(Vec::new());
    }
    let (dt, half) = opts.grid();
    let exit = exit_functionals(target);
    let shooter = Shooter {
        field,
        opts,
        source,
        target,
        exits: exit.column_iter().map(|c| c.into_owned()).collect(),
        dt,
        half,
    };
    // seeds stay within tol of the source
    let radius = 0.99 * opts.tol;
    let mut candidates: Vec<(Shot, Acceptance)> = Vec::new();
    match source.morse_index {
        0 => {
            let s = shooter.shoot_point(0.0, source.point.clone());
            candidates.push((s, Acceptance::Direct));
        }
        1 => {
            let curve = UnstableCurve::new(field, source, opts.model)?;
            let lambda = curve.lambda.max(1e-3);
            let log_span = (2.0 * lambda * opts.t_final).min(600.0);
            let hs = seed_parameters(radius, log_span, opts.n_seeds.max(1), opts.seed);
            let shots: Vec<Shot> =
                crate::par::map(&hs, |_, &h| shooter.shoot_point(h, curve.at(h)));
            let signed = shooter.exits.len() == 1;
            let mut crossing = vec![false; shots.len()];
            for i in 0..shots.len() {
                let s = &shots[i];
                if s.error() <= opts.tol {
                    candidates.push((s.clone(), Acceptance::Direct));
                }
                if i + 1 < shots.len() {
                    let t = &shots[i + 1];
                    if signed && s.usable() && t.usable() && s.miss * t.miss < 0.0 {
                        crossing[i] = true;
                        crossing[i + 1] = true;
                        candidates.push((shooter.bisect(&curve, s, t), Acceptance::Bisection));
                    }
                }
            }
            for i in 1..shots.len().saturating_sub(1) {
                let (p, s, q) = (&shots[i - 1], &shots[i], &shots[i + 1]);
                // escaped orbits carry no magnitude information
                let local_min = [p, s, q].iter().all(|x| x.target_err.is_finite())
                    // a genuine valley, not a plateau of converged orbits
                    && s.miss.abs() * (1.0 + 1e-3) < p.miss.abs().min(q.miss.abs());
                if local_min && !crossing[i] && s.error() > opts.tol {
                    candidates.push((shooter.golden(&curve, p.h, q.h), Acceptance::Tangential));
                }
            }
            for (s, acc) in candidates.iter_mut() {
                if *acc == Acceptance::Direct {
                    let i = hs.iter().position(|&h| h == s.h).expect("direct shots come from the grid");
                    if crossing[i] {
                        *acc = Acceptance::Bisection;
                    }
                }
            }
        }
        m => {
            // coarse sphere sweep in the unstable eigenspace, no refinement
            let basis = unstable_subspace(source);
            let dirs = sphere_directions(m, opts.n_seeds.max(1));
            let lambda = source.eigen_real_parts[m - 1].max(1e-3);
            let radii: Vec<f64> = (0..opts.n_seeds.max(1))
                .map(|k| radius * (-(k as f64) * 2.0 * lambda * opts.t_final / opts.n_seeds as f64).exp())
                .collect();
            let seeds: Vec<(f64, Vec<f64>)> = dirs
                .iter()
                .flat_map(|d| {
                    let v = &basis * DVector::from_vec(d.clone());
                    radii.iter().map(move |&r| {
                        (r, source.point.iter().zip(v.iter()).map(|(p, q)| p + r * q).collect())
                    })
                })
                .collect();
            let shots = crate::par::map(&seeds, |_, (h, x)| shooter.shoot_point(*h, x.clone()));
            candidates.extend(
                shots
                    .into_iter()
                    .filter(|s| s.error() <= opts.tol)
                    .map(|s| (s, Acceptance::Direct)),
            );
        }
    }
    candidates.retain(|(s, acc)| {
        let limit = match acc {
            Acceptance::Tangential => 10.0 * opts.tol,
            _ => opts.tol,
        };
        s.u0.is_some() && s.error() <= limit
    });
    candidates.sort_by(|a, b| a.0.h.total_cmp(&b.0.h));
    // cluster by separation of u(0); keep the most accurate member. For an
    // autonomous field time-translates are one orbit, and each side of a
    // one-dimensional unstable manifold is a single orbit.
    let by_side = field.is_autonomous() && source.morse_index == 1;
    let mut clusters: Vec<Vec<(Shot, Acceptance)>> = Vec::new();
    for cand in candidates {
        let u0 = cand.0.u0.as_ref().expect("retained shots have u0");
        let home = clusters.iter_mut().find(|cl| {
            cl.iter().any(|(s, _)| {
                if by_side {
                    s.h.signum() == cand.0.h.signum() && (s.h == 0.0) == (cand.0.h == 0.0)
                } else {
                    sup_distance(s.u0.as_ref().expect("u0"), u0) < 10.0 * opts.tol
                }
            })
        });
        match home {
            Some(cl) => cl.push(cand),
            None => clusters.push(vec![cand]),
        }
    }
    let mut out = Vec::with_capacity(clusters.len());
    for cl in clusters {
        let transversal = cl.iter().any(|(_, a)| *a == Acceptance::Bisection);
        let acceptance = if transversal {
            Acceptance::Bisection
        } else if cl.iter().any(|(_, a)| *a == Acceptance::Direct) {
            Acceptance::Direct
        } else {
            Acceptance::Tangential
        };
        let (best, _) = cl
            .into_iter()
            .min_by(|a, b| a.0.error().total_cmp(&b.0.error()).then(a.0.h.abs().total_cmp(&b.0.h.abs())))
            .expect("clusters are nonempty");
        let conn = build_connection(field, source, target, opts, dt, best.h, &best.seed, acceptance)?;
        out.push(conn);
    }
    Ok(out)
}

/// A non-constant solution of an autonomous field always has the bounded
/// linearized solution `f(u(t))`, which is not counted against hyperbolicity.
pub(crate) fn translation_invariant(field: &VectorFieldSpec, u: &Trajectory, source: &Equilibrium) -> bool {
    field.is_autonomous() && u.sup_distance_to(&source.point) > TRANSLATION_FLOOR
}

const TRANSLATION_FLOOR: f64 = 1e-8;

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

#[allow(clippy::too_many_arguments)]
fn build_connection(
    field: &VectorFieldSpec,
    source: &Equilibrium,
    target: &Equilibrium,
    opts: &ShootOptions,
    dt: f64,
    h: f64,
    seed: &[f64],
    acceptance: Acceptance,
) -> Result<Connection, ConnectionError> {
    let t = opts.t_final;
    let step = StepOptions {
        escape: Some(opts.escape.clone()),
        ..StepOptions::rk4(dt)
    };
    let traj: Trajectory = integrate_field(field, -t, seed, t, &step)?;
    if traj.escaped {
        return Err(ConnectionError::Dynamics(DynamicsError::NonFinite { t: traj.t_max() }));
    }
    let start = traj.state(0).to_vec();
    let end = traj.end_state().to_vec();
    let u0 = traj.at(0.0)?;
    let endpoint_errors = (norm_diff(&start, &source.point), norm_diff(&end, &target.point));
    // a saddle target repels the numerical orbit eventually, so "settled"
    // means staying within tolerance over the outer tenth of the window
    let limit = match acceptance {
        Acceptance::Tangential => 10.0 * opts.tol,
        _ => opts.tol,
    };
    let settled = traj.times().iter().enumerate().all(|(i, &s)| {
        if s <= -0.9 * t {
            norm_diff(traj.state(i), &source.point) <= limit
        } else if s >= 0.9 * t {
            norm_diff(traj.state(i), &target.point) <= limit
        } else {
            true
        }
    });
    let report = weak_hyperbolicity_along(
        field,
        &traj,
        source,
        target,
        dt,
        opts.angle_tol,
        translation_invariant(field, &traj, source),
    );
    Ok(Connection {
        h0: h,
        u0,
        endpoint_errors,
        morse_source: source.morse_index,
        morse_target: target.morse_index,
        weakly_hyperbolic: report.weakly_hyperbolic,
        tangent_intersection_dim: report.intersection_dim,
        acceptance,
        settled,
        t_final: t,
        source: source.clone(),
        target: target.clone(),
        trajectory: traj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters_are_sorted_and_symmetric_in_count() {
        let hs = seed_parameters(1e-4, 40.0, 50, 0);
        assert_eq!(hs.len(), 101);
        assert!(hs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(hs[50], 0.0);
        assert_eq!(hs[100], 1e-4);
        assert_eq!(seed_parameters(1e-4, 40.0, 50, 0), hs);
        assert_ne!(seed_parameters(1e-4, 40.0, 50, 1), hs);
    }
}
