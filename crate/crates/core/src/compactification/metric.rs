//! Truncated compact-open metric on field paths and the sector certificate.

use std::collections::VecDeque;

use serde::Serialize;

use crate::fields::{BoxDomain, Field, FieldError, ProblemSpec};

use super::element::build_initial_element;
use super::CompactError;

#[derive(Clone, Debug, Serialize)]
pub struct HullOptions {
    pub n_max: usize,
    /// State samples per axis for the inner sup.
    pub per_axis: usize,
    /// Time sampling step for the inner sup.
    pub dt: f64,
}

impl Default for HullOptions {
    fn default() -> Self {
        HullOptions {
            n_max: 10,
            per_axis: 50,
            dt: 0.05,
        }
    }
}

/// `[-n, n]^d ∩ (10 × domain)`, or `None` if empty.
pub fn seminorm_box(domain: &BoxDomain, n: usize) -> Option<BoxDomain> {
    let big = domain.scaled(10.0);
    big.intersect(&BoxDomain::cube(domain.dimension(), n as f64))
}

fn sup_at<A: Field + ?Sized, B: Field + ?Sized>(
    y: &A,
    y2: &B,
    t: f64,
    samples: &[Vec<f64>],
    a: &mut [f64],
    b: &mut [f64],
) -> Result<f64, FieldError> {
    let mut sup = 0.0f64;
    for x in samples {
        y.eval_into(t, x, a)?;
        y2.eval_into(t, x, b)?;
        sup = sup.max(crate::dynamics::norm_diff(a, b));
    }
    Ok(sup)
}

fn time_grid(lo: f64, hi: f64, dt: f64) -> Vec<f64> {
    let n = ((hi - lo) / dt).round().max(1.0) as usize;
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

/// `Σ_{n ≤ n_max} 2^{-n} δ_n / (1 + δ_n)` with sampled seminorms `δ_n`.
/// The neglected tail is at most `2^{-n_max}`.
pub fn hull_metric<A: Field + ?Sized, B: Field + ?Sized>(
    y: &A,
    y2: &B,
    domain: &BoxDomain,
    opts: &HullOptions,
) -> Result<f64, FieldError> {
    let d = y.dimension();
    let (mut a, mut b) = (vec![0.0; d], vec![0.0; d]);
    let mut total = 0.0;
    for n in 1..=opts.n_max {
        let Some(bx) = seminorm_box(domain, n) else {
            continue;
        };
        let samples = bx.sample_grid(opts.per_axis);
        let mut delta = 0.0f64;
        for t in time_grid(-(n as f64), n as f64, opts.dt) {
            delta = delta.max(sup_at(y, y2, t, &samples, &mut a, &mut b)?);
        }
        total += 0.5f64.powi(n as i32) * delta / (1.0 + delta);
    }
    Ok(total)
}

/// Halving sequence from 0.2; the deviation is roughly linear in `ρ`.
pub const DEFAULT_RHOS: &[f64] = &[
    0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625, 0.00078125, 0.000390625,
    0.0001953125,
];

#[derive(Clone, Debug, Serialize)]
pub struct CertifyOptions {
    pub t_max: f64,
    pub n_max: usize,
    pub per_axis: usize,
    /// Time grid step for the seminorm profiles.
    pub ds: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            t_max: 50.0,
            n_max: 10,
            per_axis: 8,
            ds: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoRow {
    pub rho: f64,
    /// `sup_{0 ≤ t ≤ t_max} d((y₀^ρ)^t, (y₀^0)^t)`.
    pub deviation: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoCertificate {
    pub tol: f64,
    pub options: CertifyOptions,
    pub truncation_bound: f64,
    pub rows: Vec<RhoRow>,
    /// Largest `ρ > 0` whose deviation meets `tol`.
    pub rho_star: Option<f64>,
    /// Deviations are nonincreasing along the list.
    pub monotone: bool,
}

// Sliding maximum of `v` over windows [i - w, i + w], clipped to the range.
fn sliding_max(v: &[f64], w: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for i in 0..v.len() {
        let hi = (i + w).min(v.len() - 1);
        while next <= hi {
            while dq.back().is_some_and(|&j| v[j] <= v[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&j| j + w < i) {
            dq.pop_front();
        }
        out[i] = v[*dq.front().expect("window is nonempty")];
    }
    out
}

/// Numerical stand-in for "ρ sufficiently small": the translate-wise distance
/// between `y₀^ρ` and `y₀^0` for each `ρ` in a decreasing list.
pub fn certify_rho(
    problem: &ProblemSpec,
    rhos: &[f64],
    tol: f64,
    opts: &CertifyOptions,
) -> Result<RhoCertificate, CompactError> {
    if rhos.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(CompactError::RhosNotDecreasing);
    }
    let base = build_initial_element(problem, 0.0)?;
    let d = problem.dimension();
    let n_max = opts.n_max;
    // s-grid covering every window [t - n, t + n] with 0 ≤ t ≤ t_max
    let steps_per_unit = (1.0 / opts.ds).round() as usize;
    let ds = 1.0 / steps_per_unit as f64;
    let pad = n_max * steps_per_unit;
    let t_steps = (opts.t_max * steps_per_unit as f64).round() as usize;
    let s_len = t_steps + 2 * pad + 1;
    let s_at = |k: usize| (k as f64 - pad as f64) * ds;
    let boxes: Vec<Option<Vec<Vec<f64>>>> = (1..=n_max)
        .map(|n| seminorm_box(&problem.domain_box, n).map(|b| b.sample_grid(opts.per_axis)))
        .collect();
    let (mut a, mut b) = (vec![0.0; d], vec![0.0; d]);
    // y₀^0 on every (n, s, x) sample, shared by all ρ
    let mut base_vals: Vec<Vec<f64>> = Vec::with_capacity(n_max);
    for samples in &boxes {
        let mut vals = Vec::new();
        if let Some(samples) = samples {
            vals.reserve(s_len * samples.len() * d);
            for k in 0..s_len {
                let s = s_at(k).max(0.0);
                for x in samples {
                    base.eval_into(s, x, &mut b).map_err(FieldError::from)?;
                    vals.extend_from_slice(&b);
                }
            }
        }
        base_vals.push(vals);
    }
    let mut rows = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let y = base.with_rho(rho)?;
        let mut sup_t = vec![0.0f64; t_steps + 1];
        if rho > 0.0 {
            for (ni, samples) in boxes.iter().enumerate() {
                let Some(samples) = samples else { continue };
                let n = ni + 1;
                let vals = &base_vals[ni];
                let mut profile = Vec::with_capacity(s_len);
                for k in 0..s_len {
                    // the path is constant for negative times
                    let s = s_at(k).max(0.0);
                    if y.branch_at(s) == base.branch_at(s) {
                        profile.push(0.0);
                        continue;
                    }
                    let mut sup = 0.0f64;
                    for (j, x) in samples.iter().enumerate() {
                        y.eval_into(s, x, &mut a).map_err(FieldError::from)?;
                        let off = (k * samples.len() + j) * d;
                        sup = sup.max(crate::dynamics::norm_diff(&a, &vals[off..off + d]));
                    }
                    profile.push(sup);
                }
                let window = sliding_max(&profile, n * steps_per_unit);
                let weight = 0.5f64.powi(n as i32);
                for (j, acc) in sup_t.iter_mut().enumerate() {
                    let delta = window[j + pad];
                    *acc += weight * delta / (1.0 + delta);
                }
            }
        }
        let deviation = sup_t.iter().copied().fold(0.0, f64::max);
        rows.push(RhoRow {
            rho,
            deviation,
            accepted: deviation <= tol,
        });
    }
    let rho_star = rows
        .iter()
        .filter(|r| r.rho > 0.0 && r.accepted)
        .map(|r| r.rho)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    let monotone = rows.windows(2).all(|w| w[1].deviation <= w[0].deviation * (1.0 + 1e-9));
    Ok(RhoCertificate {
        tol,
        options: opts.clone(),
        truncation_bound: 0.5f64.powi(n_max as i32),
        rows,
        rho_star,
        monotone,
    })
}
