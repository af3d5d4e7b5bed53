//! Index-bucketed Morse decompositions and the inequalities tying Betti
//! numbers of index pairs to equilibrium and connection counts.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::conley::Betti;
use crate::connections::{Connection, ConnectionSet};
use crate::dynamics::{norm_diff, Equilibrium, FieldTag};
use crate::fields::BoxDomain;

const ENDPOINT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MorseError {
    #[error("connection endpoint {0:?} is not among the equilibria")]
    EndpointNotFound(Vec<f64>),
}

/// `M_k`: equilibria of index `k` and connections between them.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MorseSet {
    pub index: usize,
    /// Positions in `MorseDecomposition::equilibria`.
    pub equilibria: Vec<usize>,
    /// Positions in `MorseDecomposition::connections`.
    pub connections: Vec<usize>,
}

/// A connection from `M_from` to `M_to`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Between {
    pub from: usize,
    pub to: usize,
    pub connection: usize,
}

/// Number of equilibria of each Morse index, per limit field.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EquilibriumCounts {
    pub neg: Vec<usize>,
    pub pos: Vec<usize>,
}

impl EquilibriumCounts {
    pub fn neg(&self, q: usize) -> usize {
        self.neg.get(q).copied().unwrap_or(0)
    }

    pub fn pos(&self, q: usize) -> usize {
        self.pos.get(q).copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MorseDecomposition {
    pub equilibria: Vec<Equilibrium>,
    #[serde(skip)]
    pub connections: Vec<Connection>,
    pub sets: BTreeMap<usize, MorseSet>,
    /// Entries with `from > to`.
    pub between: Vec<Between>,
    /// Connections along which the index increases.
    pub violations: Vec<Between>,
    pub equilibrium_counts: EquilibriumCounts,
    /// Non-hyperbolic equilibria left out of every bucket.
    pub non_hyperbolic: Vec<usize>,
}

fn count_by_index<'a>(eqs: impl Iterator<Item = &'a Equilibrium>) -> Vec<usize> {
    let mut out = Vec::new();
    for e in eqs.filter(|e| e.hyperbolic) {
        if out.len() <= e.morse_index {
            out.resize(e.morse_index + 1, 0);
        }
        out[e.morse_index] += 1;
    }
    out
}

fn counts(eqs: &[Equilibrium], region: Option<&BoxDomain>) -> EquilibriumCounts {
    let inside = |e: &&Equilibrium| region.is_none_or(|b| b.contains(&e.point));
    let side = |tag: FieldTag| {
        count_by_index(
            eqs.iter()
                .filter(inside)
                .filter(move |e| e.field_tag == tag || e.field_tag == FieldTag::Autonomous),
        )
    };
    EquilibriumCounts {
        neg: side(FieldTag::NegInfinity),
        pos: side(FieldTag::PosInfinity),
    }
}

fn find_endpoint(eqs: &[Equilibrium], e: &Equilibrium) -> Result<usize, MorseError> {
    eqs.iter()
        .enumerate()
        .filter(|(_, q)| norm_diff(&q.point, &e.point) <= ENDPOINT_TOL)
        .min_by_key(|(_, q)| (q.field_tag != e.field_tag) as u8)
        .map(|(i, _)| i)
        .ok_or_else(|| MorseError::EndpointNotFound(e.point.clone()))
}

/// Buckets equilibria by Morse index; a connection with equal endpoint
/// indices joins that bucket, one with `m(e⁻) > m(e⁺)` becomes a between-entry
/// and one with `m(e⁻) < m(e⁺)` is recorded as a violation.
pub fn build_decomposition(
    equilibria: &[Equilibrium],
    connections: &[Connection],
) -> Result<MorseDecomposition, MorseError> {
    let mut sets: BTreeMap<usize, MorseSet> = BTreeMap::new();
    let mut non_hyperbolic = Vec::new();
    for (i, e) in equilibria.iter().enumerate() {
        if !e.hyperbolic {
            non_hyperbolic.push(i);
            continue;
        }
        let set = sets.entry(e.morse_index).or_insert_with(|| MorseSet {
            index: e.morse_index,
            ..MorseSet::default()
        });
        set.equilibria.push(i);
    }
    let mut between = Vec::new();
    let mut violations = Vec::new();
    for (k, c) in connections.iter().enumerate() {
        find_endpoint(equilibria, &c.source)?;
        find_endpoint(equilibria, &c.target)?;
        let (from, to) = (c.morse_source, c.morse_target);
        let entry = Between { from, to, connection: k };
        match from.cmp(&to) {
            std::cmp::Ordering::Equal => {
                let set = sets.entry(from).or_insert_with(|| MorseSet {
                    index: from,
                    ..MorseSet::default()
                });
                set.connections.push(k);
            }
            std::cmp::Ordering::Greater => between.push(entry),
            std::cmp::Ordering::Less => violations.push(entry),
        }
    }
    Ok(MorseDecomposition {
        equilibrium_counts: counts(equilibria, None),
        equilibria: equilibria.to_vec(),
        connections: connections.to_vec(),
        sets,
        between,
        violations,
        non_hyperbolic,
    })
}

/// Decomposition of the equilibria and connections found by a full search.
/// For an autonomous field the two limit fields coincide, so one copy of the
/// equilibria is kept, tagged autonomous, with the connections of `f` only.
pub fn decomposition_of(set: &ConnectionSet, autonomous: bool) -> Result<MorseDecomposition, MorseError> {
    if autonomous {
        let eqs: Vec<Equilibrium> = set
            .neg_equilibria
            .iter()
            .cloned()
            .map(|mut e| {
                e.field_tag = FieldTag::Autonomous;
                e
            })
            .collect();
        return build_decomposition(&eqs, &set.f_connections);
    }
    let eqs: Vec<Equilibrium> = set.neg_equilibria.iter().chain(&set.pos_equilibria).cloned().collect();
    let conns: Vec<Connection> = set.f_connections.iter().chain(&set.g_connections).cloned().collect();
    build_decomposition(&eqs, &conns)
}

impl MorseDecomposition {
    /// Bucket members plus between-entries plus violations.
    pub fn partition_size(&self) -> usize {
        let members: usize = self
            .sets
            .values()
            .map(|s| s.equilibria.len() + s.connections.len())
            .sum();
        members + self.between.len() + self.violations.len() + self.non_hyperbolic.len()
    }

    /// `(H1)–(H3)` as far as they can be checked on what was found.
    pub fn gradient_like(&self) -> Result<(), String> {
        if !self.non_hyperbolic.is_empty() {
            return Err(format!("{} non-hyperbolic equilibria", self.non_hyperbolic.len()));
        }
        if !self.violations.is_empty() {
            return Err(format!("{} index-increasing connections", self.violations.len()));
        }
        Ok(())
    }

    /// Graph form: one node per Morse set, one edge per between-entry.
    pub fn graph(&self) -> serde_json::Value {
        let label = |i: usize| {
            let e = &self.equilibria[i];
            serde_json::json!({"point": e.point, "field": e.field_tag.label()})
        };
        let nodes: Vec<_> = self
            .sets
            .values()
            .map(|s| {
                serde_json::json!({
                    "id": format!("M{}", s.index),
                    "index": s.index,
                    "equilibria": s.equilibria.iter().map(|&i| label(i)).collect::<Vec<_>>(),
                    "connections": s.connections.iter().map(|&k| &self.connections[k].u0).collect::<Vec<_>>(),
                })
            })
            .collect();
        let edge = |b: &Between| {
            serde_json::json!({
                "from": format!("M{}", b.from),
                "to": format!("M{}", b.to),
                "u0": self.connections[b.connection].u0,
            })
        };
        serde_json::json!({
            "nodes": nodes,
            "edges": self.between.iter().map(edge).collect::<Vec<_>>(),
            "violations": self.violations.iter().map(edge).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub q: usize,
    pub betti: usize,
    pub n_neg: usize,
    pub n_pos: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformityReport {
    pub rows: Vec<BoundRow>,
    pub passed: bool,
}

/// `betti[q] ≤ min{N_q(f^{-∞}), N_q(f^{∞})}` for every `q`, counting only
/// equilibria inside `region` when given.
pub fn uniformity_bound_check(
    betti: &Betti,
    decomposition: &MorseDecomposition,
    region: Option<&BoxDomain>,
) -> UniformityReport {
    let n = counts(&decomposition.equilibria, region);
    let top = betti.0.len().max(n.neg.len()).max(n.pos.len());
    let rows: Vec<BoundRow> = (0..top)
        .map(|q| {
            let (b, a, c) = (betti.get(q), n.neg(q), n.pos(q));
            BoundRow {
                q,
                betti: b,
                n_neg: a,
                n_pos: c,
                pass: b <= a.min(c),
            }
        })
        .collect();
    UniformityReport {
        passed: rows.iter().all(|r| r.pass),
        rows,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBound {
    pub applicable: bool,
    pub reason: Option<String>,
    /// `q → betti[q]`, the predicted minimum number of distinct connections
    /// between index-`q` equilibria.
    pub predicted: BTreeMap<usize, usize>,
    /// Connections found with both endpoint indices equal to `q`.
    pub found: BTreeMap<usize, usize>,
    pub consistent: bool,
}

/// Predicts at least `betti[q]` connections inside `M_q` when the
/// decomposition looks gradient-like.
pub fn connection_lower_bound(betti: &Betti, decomposition: &MorseDecomposition) -> LowerBound {
    let mut found = BTreeMap::new();
    for (q, s) in &decomposition.sets {
        found.insert(*q, s.connections.len());
    }
    match decomposition.gradient_like() {
        Err(reason) => LowerBound {
            applicable: false,
            reason: Some(format!("not applicable: {reason}")),
            predicted: BTreeMap::new(),
            found,
            consistent: true,
        },
        Ok(()) => {
            let predicted: BTreeMap<usize, usize> = betti.0.iter().copied().enumerate().collect();
            let consistent = predicted
                .iter()
                .all(|(q, &need)| found.get(q).copied().unwrap_or(0) >= need);
            LowerBound {
                applicable: true,
                reason: None,
                predicted,
                found,
                consistent,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankRow {
    pub q: usize,
    pub k: usize,
    pub a: usize,
    pub r: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub rows: Vec<RankRow>,
    pub euler_k: i64,
    pub euler_a: i64,
    pub euler_r: i64,
    pub euler_ok: bool,
    pub passed: bool,
}

/// Rank constraints from exactness of `H_q(A) → H_q(K) → H_q(R) → H_{q-1}(A)`:
/// `b_q(K) ≤ b_q(A) + b_q(R)` and `χ(K) = χ(A) + χ(R)`.
pub fn attractor_repeller_rank_check(k: &Betti, a: &Betti, r: &Betti) -> RankReport {
    let top = k.0.len().max(a.0.len()).max(r.0.len());
    let rows: Vec<RankRow> = (0..top)
        .map(|q| RankRow {
            q,
            k: k.get(q),
            a: a.get(q),
            r: r.get(q),
            pass: k.get(q) <= a.get(q) + r.get(q),
        })
        .collect();
    let (ek, ea, er) = (k.euler(), a.euler(), r.euler());
    let euler_ok = ek == ea + er;
    RankReport {
        passed: euler_ok && rows.iter().all(|x| x.pass),
        rows,
        euler_k: ek,
        euler_a: ea,
        euler_r: er,
        euler_ok,
    }
}
