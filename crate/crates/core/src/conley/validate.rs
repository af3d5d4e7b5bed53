//! Sampled check of the index-pair axioms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::construct::{walk, IndexPair};
use super::Process;

const MAX_WITNESSES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    /// The orbit left `N₁` without touching `N₂`.
    Ip2,
    /// The orbit went from `N₂` back into `N₁ \ N₂`.
    Ip3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub axiom: Axiom,
    /// Start point `(t, x)`.
    pub start: Vec<f64>,
    /// Elapsed time at the violating step.
    pub at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub horizon: f64,
    pub seed: u64,
    /// `N₂ ⊆ N₁`, checked on the cube sets.
    pub ip1_structural: bool,
    pub ip2_violations: usize,
    pub ip3_violations: usize,
    pub witnesses: Vec<Witness>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.ip1_structural && self.ip2_violations == 0 && self.ip3_violations == 0
    }
}

/// Follows `n_samples` orbits from uniform random points of random `N₁` cubes
/// for up to `horizon` and counts IP2 and IP3 violations.
pub fn validate_index_pair(
    process: &Process,
    pair: &IndexPair,
    n_samples: usize,
    horizon: f64,
    dt: f64,
    seed: u64,
) -> ValidationReport {
    let grid = &pair.grid;
    let cubes = pair.n1.indices();
    let mut report = ValidationReport {
        samples: 0,
        horizon,
        seed,
        ip1_structural: pair.n2.is_subset(&pair.n1),
        ip2_violations: 0,
        ip3_violations: 0,
        witnesses: Vec::new(),
    };
    if cubes.is_empty() || n_samples == 0 {
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..n_samples)
        .map(|_| {
            let i = cubes[rng.random_range(0..cubes.len())];
            grid.cube_bounds(i)
                .into_iter()
                .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect()
        })
        .collect();
    let field = process.shifted();
    let steps = (horizon / dt).ceil() as usize;
    let outcomes = crate::par::map(&starts, |_, p| {
        let (t0, x0) = (p[0], &p[1..]);
        let mut touched = grid.locate(t0, x0).is_some_and(|q| pair.n2.contains(q));
        let mut violation = None;
        let mut stopped = false;
        let mut x = x0.to_vec();
        let last = walk(&field, t0, &mut x, dt, steps, |k, t, y| {
            let q = grid.locate(t, y);
            let in1 = q.is_some_and(|q| pair.n1.contains(q));
            let in2 = q.is_some_and(|q| pair.n2.contains(q));
            if !in1 {
                stopped = true;
                if !touched {
                    violation = Some((Axiom::Ip2, k));
                }
                return false;
            }
            if touched && !in2 {
                violation = Some((Axiom::Ip3, k));
                return false;
            }
            touched |= in2;
            true
        });
        // a failed step counts as leaving N₁
        if violation.is_none() && !stopped && last < steps && !touched {
            violation = Some((Axiom::Ip2, last + 1));
        }
        violation.map(|(a, k)| (a, k as f64 * dt))
    });
    report.samples = starts.len();
    for (start, outcome) in starts.into_iter().zip(outcomes) {
        let Some((axiom, at)) = outcome else { continue };
        match axiom {
            Axiom::Ip2 => report.ip2_violations += 1,
            Axiom::Ip3 => report.ip3_violations += 1,
        }
        if report.witnesses.len() < MAX_WITNESSES {
            report.witnesses.push(Witness { axiom, start, at });
        }
    }
    report
}
