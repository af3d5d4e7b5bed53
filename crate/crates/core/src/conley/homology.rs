//! Relative cubical homology over 𝔽₂.
//!
//! Elementary cubes are written in doubled coordinates: an even entry `2k` is
//! the degenerate interval `[k, k]`, an odd entry `2k + 1` is `[k, k + 1]`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::construct::IndexPair;
use super::grid::{CubeSet, CubicalGrid};
use super::ConleyError;

pub type ElementaryCube = Vec<u32>;

/// Betti numbers `b0, b1, ...` over 𝔽₂.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Betti(pub Vec<usize>);

impl Betti {
    /// Equality up to trailing zeros.
    pub fn matches(&self, other: &[usize]) -> bool {
        let n = self.0.len().max(other.len());
        (0..n).all(|q| self.get(q) == other.get(q).copied().unwrap_or(0))
    }

    pub fn get(&self, q: usize) -> usize {
        self.0.get(q).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    pub fn euler(&self) -> i64 {
        alternating(&self.0)
    }
}

impl fmt::Display for Betti {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|b| b.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

fn alternating(v: &[usize]) -> i64 {
    v.iter()
        .enumerate()
        .map(|(q, &n)| if q % 2 == 0 { n as i64 } else { -(n as i64) })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomologyReport {
    pub betti: Betti,
    /// Cells of the relative complex per dimension.
    pub cell_counts: Vec<usize>,
    pub euler_consistent: bool,
}

// Packs doubled coordinates into one u64.
struct Packer {
    bits: Vec<u32>,
}

impl Packer {
    fn new(dim: usize, max_coord: u32) -> Result<Self, ConleyError> {
        let width = 32 - max_coord.leading_zeros().min(31);
        if width as usize * dim > 64 {
            return Err(ConleyError::InvalidGrid(format!(
                "coordinates up to {max_coord} in {dim} dimensions do not fit a 64-bit cell key"
            )));
        }
        Ok(Packer {
            bits: vec![width; dim],
        })
    }

    fn pack(&self, c: &[u32]) -> u64 {
        c.iter().zip(&self.bits).fold(0u64, |acc, (&v, &b)| (acc << b) | v as u64)
    }

    fn unpack(&self, mut key: u64) -> Vec<u32> {
        let mut c = vec![0; self.bits.len()];
        for j in (0..c.len()).rev() {
            let b = self.bits[j];
            c[j] = (key & ((1u64 << b) - 1)) as u32;
            key >>= b;
        }
        c
    }
}

fn cell_dim(c: &[u32]) -> usize {
    c.iter().filter(|&&v| v % 2 == 1).count()
}

fn faces(c: &[u32]) -> impl Iterator<Item = Vec<u32>> + '_ {
    (0..c.len()).filter(|&j| c[j] % 2 == 1).flat_map(move |j| {
        [c[j] - 1, c[j] + 1].into_iter().map(move |v| {
            let mut f = c.to_vec();
            f[j] = v;
            f
        })
    })
}

fn closure(packer: &Packer, cells: &[ElementaryCube]) -> HashSet<u64> {
    let mut seen: HashSet<u64> = HashSet::with_capacity(cells.len() * 4);
    let mut stack: Vec<Vec<u32>> = Vec::new();
    for c in cells {
        if seen.insert(packer.pack(c)) {
            stack.push(c.clone());
        }
    }
    while let Some(c) = stack.pop() {
        for f in faces(&c) {
            if seen.insert(packer.pack(&f)) {
                stack.push(f);
            }
        }
    }
    seen
}

// Rank over 𝔽₂ of a matrix given by sorted sparse columns.
fn rank_f2(columns: Vec<Vec<u32>>, rows: usize) -> usize {
    let mut owner: Vec<Option<usize>> = vec![None; rows];
    let mut reduced: Vec<Vec<u32>> = Vec::with_capacity(columns.len());
    let mut rank = 0;
    for mut col in columns {
        while let Some(&low) = col.last() {
            match owner[low as usize] {
                Some(k) => col = symmetric_difference(&col, &reduced[k]),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            owner[low as usize] = Some(reduced.len());
            rank += 1;
        }
        reduced.push(col);
    }
    rank
}

fn symmetric_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Homology of `cl(n1)` relative to `cl(n2)` in `ℝ^dim`, where both are
/// given by generating elementary cubes of any dimension.
pub fn relative_homology_cells(
    dim: usize,
    n1: &[ElementaryCube],
    n2: &[ElementaryCube],
) -> Result<HomologyReport, ConleyError> {
    if let Some(bad) = n1.iter().chain(n2).find(|c| c.len() != dim) {
        return Err(ConleyError::Malformed(format!("cube {bad:?} is not {dim}-dimensional")));
    }
    let max = n1.iter().chain(n2).flatten().copied().max().unwrap_or(0);
    let packer = Packer::new(dim, max.saturating_add(1))?;
    let cl1 = closure(&packer, n1);
    let cl2 = closure(&packer, n2);

    // relative cells by dimension, sorted for a deterministic basis
    let mut by_dim: Vec<Vec<u64>> = vec![Vec::new(); dim + 1];
    for &key in cl1.iter().filter(|k| !cl2.contains(k)) {
        by_dim[cell_dim(&packer.unpack(key))].push(key);
    }
    for cells in &mut by_dim {
        cells.sort_unstable();
    }
    let index: Vec<HashMap<u64, u32>> = by_dim
        .iter()
        .map(|cells| cells.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect())
        .collect();

    // ranks[q] = rank of ∂_q : C_q → C_{q-1}
    let mut ranks = vec![0; dim + 2];
    for q in 1..=dim {
        let columns: Vec<Vec<u32>> = by_dim[q]
            .iter()
            .map(|&key| {
                let mut col: Vec<u32> = faces(&packer.unpack(key))
                    .filter_map(|f| index[q - 1].get(&packer.pack(&f)).copied())
                    .collect();
                col.sort_unstable();
                col
            })
            .collect();
        ranks[q] = rank_f2(columns, by_dim[q - 1].len());
    }
    let counts: Vec<usize> = by_dim.iter().map(Vec::len).collect();
    let betti = Betti((0..=dim).map(|q| counts[q] - ranks[q] - ranks[q + 1]).collect());
    Ok(HomologyReport {
        euler_consistent: betti.euler() == alternating(&counts),
        betti,
        cell_counts: counts,
    })
}

/// Full-dimensional cubes of `set` in doubled coordinates.
pub fn cubes_of_set(grid: &CubicalGrid, set: &CubeSet) -> Vec<ElementaryCube> {
    set.iter()
        .map(|i| grid.multi_index(i).into_iter().map(|k| 2 * k as u32 + 1).collect())
        .collect()
}

/// `H_*(N₁, N₂; 𝔽₂)`, with `dims + 1` entries for a grid of dimension `dims`.
pub fn relative_homology(pair: &IndexPair) -> Result<HomologyReport, ConleyError> {
    let grid = &pair.grid;
    relative_homology_cells(grid.dims(), &cubes_of_set(grid, &pair.n1), &cubes_of_set(grid, &pair.n2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: u32, y: u32) -> Vec<u32> {
        vec![2 * x + 1, 2 * y + 1]
    }

    #[test]
    fn point_and_two_points() {
        let r = relative_homology_cells(2, &[vec![0, 0]], &[]).unwrap();
        assert_eq!(r.betti.0, vec![1, 0, 0]);
        let r = relative_homology_cells(2, &[vec![0, 0], vec![4, 4]], &[]).unwrap();
        assert_eq!(r.betti.0, vec![2, 0, 0]);
    }

    #[test]
    fn squares_and_rings() {
        let solid = relative_homology_cells(2, &[square(0, 0)], &[]).unwrap();
        assert_eq!(solid.betti.0, vec![1, 0, 0]);
        let ring: Vec<_> = (0..3)
            .flat_map(|x| (0..3).map(move |y| (x, y)))
            .filter(|&(x, y)| (x, y) != (1, 1))
            .map(|(x, y)| square(x, y))
            .collect();
        assert_eq!(relative_homology_cells(2, &ring, &[]).unwrap().betti.0, vec![1, 1, 0]);
        let outline = vec![vec![1, 0], vec![2, 1], vec![1, 2], vec![0, 1]];
        assert_eq!(relative_homology_cells(2, &outline, &[]).unwrap().betti.0, vec![1, 1, 0]);
        let rel = relative_homology_cells(2, &[square(0, 0)], &outline).unwrap();
        assert_eq!(rel.betti.0, vec![0, 0, 1]);
        assert!(rel.euler_consistent);
    }

    #[test]
    fn outline_relative_to_one_edge() {
        // collapsing a contractible arc of the circle leaves a circle
        let outline = vec![vec![1, 0], vec![2, 1], vec![1, 2], vec![0, 1]];
        let r = relative_homology_cells(2, &outline, &[vec![1, 0]]).unwrap();
        assert_eq!(r.betti.0, vec![0, 1, 0]);
        // the three remaining edges relative to their two endpoints: one loop class
        let arc = vec![vec![2, 1], vec![1, 2], vec![0, 1]];
        let r = relative_homology_cells(2, &arc, &[vec![0, 0], vec![2, 0]]).unwrap();
        assert_eq!(r.betti.0, vec![0, 1, 0]);
        // relative to both endpoints of one edge the arc closes into a circle class
        let r = relative_homology_cells(2, &[vec![1, 0]], &[vec![0, 0], vec![2, 0]]).unwrap();
        assert_eq!(r.betti.0, vec![0, 1, 0]);
    }

    #[test]
    fn display_and_matching() {
        let b = Betti(vec![0, 1, 0, 0]);
        assert_eq!(b.to_string(), "0 1 0 0");
        assert!(b.matches(&[0, 1, 0]) && b.matches(&[0, 1]));
        assert!(!b.matches(&[0, 1, 1]));
        assert_eq!(b.euler(), -1);
    }

    #[test]
    fn empty_complex() {
        let r = relative_homology_cells(3, &[], &[]).unwrap();
        assert!(r.betti.is_zero() && r.betti.0.len() == 4);
    }
}
