//! Cubical grids on `[0, T_grid] × box` and sets of full-dimensional cubes.

use serde::{Deserialize, Serialize};

use crate::fields::BoxDomain;

use super::ConleyError;

pub const DEFAULT_CUBE_BUDGET: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl Axis {
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    // Cell containing `v`, with the upper end closed.
    fn cell(&self, v: f64) -> Option<usize> {
        if !(v >= self.lo && v <= self.hi) {
            return None;
        }
        let k = ((v - self.lo) / self.step()).floor() as usize;
        Some(k.min(self.cells - 1))
    }

    fn clamped_cell(&self, v: f64) -> usize {
        self.cell(v.clamp(self.lo, self.hi)).expect("clamped value lies on the axis")
    }
}

/// Grid on the extended phase space. Axis 0 is time; the first and last time
/// layers extend as cylinders to all earlier and later times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicalGrid {
    pub time: Axis,
    pub space: Vec<Axis>,
}

impl CubicalGrid {
    pub fn new(t_grid: f64, t_cells: usize, domain: &BoxDomain, cells: &[usize]) -> Result<Self, ConleyError> {
        Self::with_budget(t_grid, t_cells, domain, cells, DEFAULT_CUBE_BUDGET)
    }

    pub fn with_budget(
        t_grid: f64,
        t_cells: usize,
        domain: &BoxDomain,
        cells: &[usize],
        budget: usize,
    ) -> Result<Self, ConleyError> {
        if !(t_grid > 0.0 && t_grid.is_finite()) || t_cells == 0 {
            return Err(ConleyError::InvalidGrid("time axis must be a nonempty interval".into()));
        }
        if cells.len() != domain.dimension() || cells.contains(&0) {
            return Err(ConleyError::InvalidGrid(format!(
                "need {} positive cell counts, got {cells:?}",
                domain.dimension()
            )));
        }
        let grid = CubicalGrid {
            time: Axis {
                lo: 0.0,
                hi: t_grid,
                cells: t_cells,
            },
            space: domain
                .axes
                .iter()
                .zip(cells)
                .map(|(&(lo, hi), &c)| Axis { lo, hi, cells: c })
                .collect(),
        };
        let count = grid
            .axes()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.cells))
            .unwrap_or(usize::MAX);
        if count > budget {
            return Err(ConleyError::BudgetExceeded { cubes: count, budget });
        }
        Ok(grid)
    }

    /// Same extent, every axis split `factor` times finer.
    pub fn refined(&self, factor: usize) -> Result<Self, ConleyError> {
        let domain = BoxDomain {
            axes: self.space.iter().map(|a| (a.lo, a.hi)).collect(),
        };
        let cells: Vec<usize> = self.space.iter().map(|a| a.cells * factor).collect();
        Self::new(self.time.hi, self.time.cells * factor, &domain, &cells)
    }

    pub fn axes(&self) -> impl Iterator<Item = &Axis> {
        std::iter::once(&self.time).chain(self.space.iter())
    }

    /// Dimension of the extended phase space.
    pub fn dims(&self) -> usize {
        1 + self.space.len()
    }

    pub fn space_dimension(&self) -> usize {
        self.space.len()
    }

    pub fn cube_count(&self) -> usize {
        self.axes().map(|a| a.cells).product()
    }

    pub fn cells_per_layer(&self) -> usize {
        self.space.iter().map(|a| a.cells).product()
    }

    /// Row-major index with time slowest.
    pub fn index(&self, k: &[usize]) -> usize {
        self.axes().zip(k).fold(0, |acc, (a, &i)| acc * a.cells + i)
    }

    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut k = vec![0; self.dims()];
        let axes: Vec<&Axis> = self.axes().collect();
        for j in (0..axes.len()).rev() {
            k[j] = i % axes[j].cells;
            i /= axes[j].cells;
        }
        k
    }

    pub fn layer_of(&self, i: usize) -> usize {
        i / self.cells_per_layer()
    }

    /// Cube containing `(t, x)`; time is clamped to the grid, space is not.
    pub fn locate(&self, t: f64, x: &[f64]) -> Option<usize> {
        let mut idx = self.time.clamped_cell(t);
        for (a, &v) in self.space.iter().zip(x) {
            idx = idx * a.cells + a.cell(v)?;
        }
        Some(idx)
    }

    pub fn cube_center(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .iter()
            .zip(self.axes())
            .map(|(&k, a)| a.lo + (k as f64 + 0.5) * a.step())
            .collect()
    }

    /// Bounds `(lo, hi)` per axis of cube `i`.
    pub fn cube_bounds(&self, i: usize) -> Vec<(f64, f64)> {
        self.multi_index(i)
            .iter()
            .zip(self.axes())
            .map(|(&k, a)| (a.lo + k as f64 * a.step(), a.lo + (k + 1) as f64 * a.step()))
            .collect()
    }

    /// Length of the spatial diagonal of one cube.
    pub fn space_diagonal(&self) -> f64 {
        self.space.iter().map(|a| a.step() * a.step()).sum::<f64>().sqrt()
    }
}

/// Sample lattice with `per_axis` points per cube edge, shared between
/// neighbouring cubes.
#[derive(Clone, Debug)]
pub struct Lattice {
    dims: Vec<usize>,
    sub: usize,
    lo: Vec<f64>,
    step: Vec<f64>,
}

impl Lattice {
    pub fn new(grid: &CubicalGrid, per_axis: usize) -> Self {
        let sub = per_axis.max(2) - 1;
        Lattice {
            dims: grid.axes().map(|a| a.cells * sub + 1).collect(),
            sub,
            lo: grid.axes().map(|a| a.lo).collect(),
            step: grid.axes().map(|a| a.step() / sub as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(t, x)` of lattice point `l`.
    pub fn point(&self, mut l: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dims.len()];
        for j in (0..self.dims.len()).rev() {
            p[j] = self.lo[j] + (l % self.dims[j]) as f64 * self.step[j];
            l /= self.dims[j];
        }
        p
    }

    /// Lattice indices of the samples of the cube with multi-index `k`.
    pub fn cube_samples(&self, k: &[usize]) -> Vec<usize> {
        let per = self.sub + 1;
        let d = self.dims.len();
        let total = per.pow(d as u32);
        (0..total)
            .map(|mut s| {
                let mut offs = vec![0; d];
                for o in offs.iter_mut().rev() {
                    *o = s % per;
                    s /= per;
                }
                (0..d).fold(0, |acc, j| acc * self.dims[j] + k[j] * self.sub + offs[j])
            })
            .collect()
    }
}

/// Membership bitset over the full-dimensional cubes of a grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeSet {
    bits: Vec<bool>,
}

impl CubeSet {
    pub fn empty(grid: &CubicalGrid) -> Self {
        CubeSet {
            bits: vec![false; grid.cube_count()],
        }
    }

    pub fn full(grid: &CubicalGrid) -> Self {
        CubeSet {
            bits: vec![true; grid.cube_count()],
        }
    }

    pub fn from_indices(grid: &CubicalGrid, indices: &[usize]) -> Result<Self, ConleyError> {
        let mut s = Self::empty(grid);
        for &i in indices {
            if i >= s.bits.len() {
                return Err(ConleyError::InvalidGrid(format!("cube index {i} out of range")));
            }
            s.bits[i] = true;
        }
        Ok(s)
    }

    /// Cubes whose center satisfies `pred(t, x)`.
    pub fn from_predicate(grid: &CubicalGrid, pred: impl Fn(&[f64]) -> bool) -> Self {
        CubeSet {
            bits: (0..grid.cube_count()).map(|i| pred(&grid.cube_center(i))).collect(),
        }
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.get(i).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, i: usize) {
        self.bits[i] = true;
    }

    pub fn remove(&mut self, i: usize) {
        self.bits[i] = false;
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn is_subset(&self, other: &CubeSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &CubeSet) -> CubeSet {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &CubeSet) -> CubeSet {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &CubeSet) -> CubeSet {
        self.zip_with(other, |a, b| a && !b)
    }

    fn zip_with(&self, other: &CubeSet, f: impl Fn(bool, bool) -> bool) -> CubeSet {
        CubeSet {
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> CubicalGrid {
        CubicalGrid::new(2.0, 2, &BoxDomain::cube(2, 1.0), &[4, 5]).unwrap()
    }

    #[test]
    fn index_round_trip() {
        let g = grid();
        assert_eq!(g.cube_count(), 40);
        for i in 0..g.cube_count() {
            assert_eq!(g.index(&g.multi_index(i)), i);
        }
    }

    #[test]
    fn locate_clamps_time_only() {
        let g = grid();
        let a = g.locate(-5.0, &[0.1, 0.1]).unwrap();
        assert_eq!(g.layer_of(a), 0);
        let b = g.locate(9.0, &[0.1, 0.1]).unwrap();
        assert_eq!(g.layer_of(b), 1);
        assert_eq!(g.locate(0.5, &[1.5, 0.0]), None);
        assert!(g.locate(0.5, &[1.0, 1.0]).is_some());
        let c = g.locate(0.5, &[-0.9, 0.9]).unwrap();
        let center = g.cube_center(c);
        assert!((center[1] + 0.75).abs() < 1e-12 && (center[2] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn lattice_samples_cover_cube() {
        let g = grid();
        let lat = Lattice::new(&g, 3);
        assert_eq!(lat.len(), 5 * 9 * 11);
        let k = g.multi_index(17);
        let bounds = g.cube_bounds(17);
        let samples = lat.cube_samples(&k);
        assert_eq!(samples.len(), 27);
        for s in samples {
            let p = lat.point(s);
            for (v, (lo, hi)) in p.iter().zip(&bounds) {
                assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn budget_enforced() {
        let r = CubicalGrid::with_budget(1.0, 10, &BoxDomain::cube(2, 1.0), &[100, 100], 50_000);
        assert!(matches!(r, Err(ConleyError::BudgetExceeded { .. })));
    }

    #[test]
    fn set_algebra() {
        let g = grid();
        let a = CubeSet::from_indices(&g, &[1, 2, 3]).unwrap();
        let b = CubeSet::from_indices(&g, &[2, 3, 4]).unwrap();
        assert_eq!(a.intersection(&b).indices(), vec![2, 3]);
        assert_eq!(a.union(&b).len(), 4);
        assert_eq!(a.difference(&b).indices(), vec![1]);
        assert!(a.intersection(&b).is_subset(&a));
        assert!(CubeSet::from_indices(&g, &[40]).is_err());
    }
}
