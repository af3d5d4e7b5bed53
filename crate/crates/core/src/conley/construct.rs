//! The L-construction of an index pair from the exit time `g⁺` and the
//! distance-to-unstable-set functional `g⁻`, sampled on a cube lattice.

use serde::{Deserialize, Serialize};

use crate::dynamics::Rk4;
use crate::fields::{Shifted, VectorFieldSpec};

use super::grid::{CubeSet, CubicalGrid, Lattice};
use super::validate::ValidationReport;
use super::{ConleyError, Process};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOptions {
    pub c1: f64,
    pub c2: f64,
    /// Backward horizon used to sample `Inv⁻(N)`.
    pub t_back: f64,
    /// `g⁺` values beyond this are reported as `+∞`.
    pub t_cap: f64,
    pub dt: f64,
    pub samples_per_axis: usize,
    /// Run the sample-level exit repair after the L-construction.
    pub repair: bool,
    /// Samples per cube edge for the repair, faces included.
    pub repair_samples: usize,
}

impl PairOptions {
    pub fn new(c1: f64, c2: f64) -> Self {
        PairOptions {
            c1,
            c2,
            t_back: 4.0,
            t_cap: 10.0,
            dt: 0.02,
            samples_per_axis: 3,
            repair: true,
            repair_samples: 5,
        }
    }

    fn check(&self) -> Result<(), ConleyError> {
        let positive = [self.c1, self.c2, self.t_back, self.t_cap, self.dt]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive || self.samples_per_axis < 2 {
            return Err(ConleyError::InvalidOptions(
                "c1, c2, t_back, t_cap and dt must be positive and finite, samples_per_axis at least 2".into(),
            ));
        }
        if self.c2 >= self.t_cap {
            return Err(ConleyError::InvalidOptions(format!(
                "c2 = {} must lie below the exit-time cap {}",
                self.c2, self.t_cap
            )));
        }
        Ok(())
    }
}

/// `(N₁, N₂)` on a grid. Serializes as `{grid, n1: [indices], n2: [indices], ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PairFile", try_from = "PairFile")]
pub struct IndexPair {
    pub grid: CubicalGrid,
    pub n1: CubeSet,
    pub n2: CubeSet,
    pub c1: f64,
    pub c2: f64,
    pub options: Option<PairOptions>,
    /// Field time of grid time 0.
    pub offset: f64,
    pub inv_minus_cubes: usize,
    /// Exit-set enlargement horizon applied so far.
    pub exit_horizon: f64,
    pub repair: Repair,
    pub validation: Option<ValidationReport>,
    pub warnings: Vec<String>,
}

/// Cubes moved after the L-construction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Repair {
    /// Top-layer cubes of `N₁` put into `N₂` (non-autonomous processes only).
    pub collar: usize,
    /// Cubes next to `N₁` that sampled orbits cross before coming back.
    pub n1_filled: usize,
    /// Cubes of `N₁` that sampled orbits left `N₁` from, or reached from `N₂`.
    pub n2_added: usize,
}

impl IndexPair {
    /// A pair given directly by its cube sets.
    pub fn from_sets(grid: CubicalGrid, n1: CubeSet, n2: CubeSet) -> Result<Self, ConleyError> {
        let count = grid.cube_count();
        if n1.universe() != count || n2.universe() != count {
            return Err(ConleyError::Malformed("cube sets do not match the grid".into()));
        }
        if !n2.is_subset(&n1) {
            return Err(ConleyError::Malformed("n2 is not contained in n1".into()));
        }
        Ok(IndexPair {
            grid,
            n1,
            n2,
            c1: f64::NAN,
            c2: f64::NAN,
            options: None,
            offset: 0.0,
            inv_minus_cubes: 0,
            exit_horizon: 0.0,
            repair: Repair::default(),
            validation: None,
            warnings: Vec::new(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("index pairs serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ConleyError> {
        serde_json::from_str(text).map_err(|e| ConleyError::Malformed(e.to_string()))
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct PairFile {
    grid: CubicalGrid,
    n1: Vec<usize>,
    n2: Vec<usize>,
    #[serde(default)]
    c1: Option<f64>,
    #[serde(default)]
    c2: Option<f64>,
    #[serde(default)]
    options: Option<PairOptions>,
    #[serde(default)]
    offset: f64,
    #[serde(default)]
    inv_minus_cubes: usize,
    #[serde(default)]
    exit_horizon: f64,
    #[serde(default)]
    repair: Repair,
    #[serde(default)]
    validation: Option<ValidationReport>,
    #[serde(default)]
    warnings: Vec<String>,
}

impl From<IndexPair> for PairFile {
    fn from(p: IndexPair) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        PairFile {
            n1: p.n1.indices(),
            n2: p.n2.indices(),
            grid: p.grid,
            c1: finite(p.c1),
            c2: finite(p.c2),
            options: p.options,
            offset: p.offset,
            inv_minus_cubes: p.inv_minus_cubes,
            exit_horizon: p.exit_horizon,
            repair: p.repair,
            validation: p.validation,
            warnings: p.warnings,
        }
    }
}

impl TryFrom<PairFile> for IndexPair {
    type Error = ConleyError;

    fn try_from(f: PairFile) -> Result<Self, ConleyError> {
        let n1 = CubeSet::from_indices(&f.grid, &f.n1)?;
        let n2 = CubeSet::from_indices(&f.grid, &f.n2)?;
        let mut pair = IndexPair::from_sets(f.grid, n1, n2)?;
        pair.c1 = f.c1.unwrap_or(f64::NAN);
        pair.c2 = f.c2.unwrap_or(f64::NAN);
        pair.options = f.options;
        pair.offset = f.offset;
        pair.inv_minus_cubes = f.inv_minus_cubes;
        pair.exit_horizon = f.exit_horizon;
        pair.repair = f.repair;
        pair.validation = f.validation;
        pair.warnings = f.warnings;
        Ok(pair)
    }
}

type ProcessField<'a> = Shifted<'a, VectorFieldSpec>;

/// Fixed-step RK4 from `(t0, x)` with signed step `h`. `visit(k, t, x)` runs
/// after step `k` and ends the walk by returning false. Returns the index of
/// the last step that produced a finite state.
pub(crate) fn walk(
    field: &ProcessField<'_>,
    t0: f64,
    x: &mut [f64],
    h: f64,
    steps: usize,
    mut visit: impl FnMut(usize, f64, &[f64]) -> bool,
) -> usize {
    let mut rk = Rk4::new(field);
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * h;
        if rk.step(t, x, h).is_err() || x.iter().any(|v| !v.is_finite()) {
            return k - 1;
        }
        if !visit(k, t0 + k as f64 * h, x) {
            return k;
        }
    }
    steps
}

fn step_count(horizon: f64, dt: f64) -> usize {
    (horizon / dt).ceil() as usize
}

fn check_set(grid: &CubicalGrid, set: &CubeSet, name: &str) -> Result<(), ConleyError> {
    if set.universe() != grid.cube_count() {
        return Err(ConleyError::InvalidGrid(format!("{name} does not belong to this grid")));
    }
    Ok(())
}

// Evaluates `eval` once per lattice point sampled by a cube of `cubes`.
fn lattice_values<T: Clone + Send>(
    grid: &CubicalGrid,
    lattice: &Lattice,
    cubes: &CubeSet,
    eval: impl Fn(&[f64]) -> T + Sync,
) -> Vec<Option<T>> {
    let mut needed = vec![false; lattice.len()];
    for i in cubes.iter() {
        for s in lattice.cube_samples(&grid.multi_index(i)) {
            needed[s] = true;
        }
    }
    let points: Vec<usize> = (0..needed.len()).filter(|&l| needed[l]).collect();
    let values = crate::par::map(&points, |_, &l| eval(&lattice.point(l)));
    let mut out = vec![None; lattice.len()];
    for (l, v) in points.into_iter().zip(values) {
        out[l] = Some(v);
    }
    out
}

fn cube_samples<'a, T>(grid: &CubicalGrid, lattice: &Lattice, values: &'a [Option<T>], i: usize) -> Vec<&'a T> {
    lattice
        .cube_samples(&grid.multi_index(i))
        .into_iter()
        .map(|s| values[s].as_ref().expect("sample evaluated"))
        .collect()
}

/// Cubes of `n` with a sample whose backward orbit stays in `n` for `t_back`.
pub fn inv_minus(
    process: &Process,
    grid: &CubicalGrid,
    n: &CubeSet,
    t_back: f64,
    samples_per_axis: usize,
    dt: f64,
) -> Result<CubeSet, ConleyError> {
    check_set(grid, n, "N")?;
    if !(t_back >= 0.0 && dt > 0.0) || samples_per_axis < 2 {
        return Err(ConleyError::InvalidOptions("need t_back ≥ 0, dt > 0, samples_per_axis ≥ 2".into()));
    }
    let field = process.shifted();
    let lattice = Lattice::new(grid, samples_per_axis);
    let steps = step_count(t_back, dt);
    let inside = |t: f64, x: &[f64]| grid.locate(t, x).is_some_and(|q| n.contains(q));
    let stays = lattice_values(grid, &lattice, n, |p| {
        let (t0, x0) = (p[0], &p[1..]);
        if !inside(t0, x0) {
            return false;
        }
        let mut x = x0.to_vec();
        let mut ok = true;
        let done = walk(&field, t0, &mut x, -dt, steps, |_, t, y| {
            ok = inside(t, y);
            ok
        });
        ok && done == steps
    });
    let mut out = CubeSet::empty(grid);
    for i in n.iter() {
        if cube_samples(grid, &lattice, &stays, i).into_iter().any(|&b| b) {
            out.insert(i);
        }
    }
    Ok(out)
}

/// Per-cube lower bound on the spatial distance to `inv` within the same
/// time layer: center distance minus one cube diagonal, clamped at 0. Layers
/// without `inv` cubes get `+∞`.
pub fn inv_distance_field(grid: &CubicalGrid, inv: &CubeSet) -> Vec<f64> {
    let per_layer = grid.cells_per_layer();
    let diag = grid.space_diagonal();
    let mut out = vec![f64::INFINITY; grid.cube_count()];
    for layer in 0..grid.time.cells {
        let range = layer * per_layer..(layer + 1) * per_layer;
        let centers: Vec<Vec<f64>> = range
            .clone()
            .filter(|&i| inv.contains(i))
            .map(|i| grid.cube_center(i)[1..].to_vec())
            .collect();
        if centers.is_empty() {
            continue;
        }
        for i in range {
            if inv.contains(i) {
                out[i] = 0.0;
                continue;
            }
            let c = grid.cube_center(i);
            let nearest = centers
                .iter()
                .map(|d| crate::dynamics::norm_diff(&c[1..], d))
                .fold(f64::INFINITY, f64::min);
            out[i] = (nearest - diag).max(0.0);
        }
    }
    out
}

// (g⁺, g⁻) at one point of extended phase space.
fn profile(
    field: &ProcessField<'_>,
    grid: &CubicalGrid,
    u: &CubeSet,
    dist: &[f64],
    point: &[f64],
    t_cap: f64,
    dt: f64,
) -> (f64, f64) {
    let (t0, x0) = (point[0], &point[1..]);
    let start = grid.locate(t0, x0);
    let d0 = start.map_or(f64::INFINITY, |q| dist[q]);
    if !start.is_some_and(|q| u.contains(q)) {
        return (0.0, d0);
    }
    let steps = step_count(t_cap, dt);
    let mut g_minus = d0;
    let mut exit = None;
    let mut x = x0.to_vec();
    let done = walk(field, t0, &mut x, dt, steps, |k, t, y| match grid.locate(t, y) {
        Some(q) if u.contains(q) => {
            g_minus = g_minus.max(dist[q]);
            true
        }
        _ => {
            exit = Some(k);
            false
        }
    });
    // the boundary is crossed somewhere inside the step that left U
    let g_plus = match exit {
        Some(k) => (k as f64 - 0.5) * dt,
        None if done < steps => (done as f64 + 0.5) * dt,
        None => f64::INFINITY,
    };
    (g_plus, g_minus)
}

/// Exit time of the forward orbit of `point = (t, x)` from `u`, or `+∞` when
/// it stays for `t_cap`.
pub fn g_plus(process: &Process, grid: &CubicalGrid, point: &[f64], u: &CubeSet, t_cap: f64, dt: f64) -> f64 {
    let dist = vec![0.0; grid.cube_count()];
    profile(&process.shifted(), grid, u, &dist, point, t_cap, dt).0
}

/// Largest distance to `inv` along the orbit segment of `point` inside `u`.
pub fn g_minus(
    process: &Process,
    grid: &CubicalGrid,
    point: &[f64],
    u: &CubeSet,
    inv: &CubeSet,
    t_cap: f64,
    dt: f64,
) -> f64 {
    let dist = inv_distance_field(grid, inv);
    profile(&process.shifted(), grid, u, &dist, point, t_cap, dt).1
}

/// `N₁ = {g⁻ ≤ c1} ∩ cl{g⁺ ≥ c2}` and `N₂ = N₁ ∩ {g⁺ ≤ c2}` at cube level:
/// a cube of `n` enters `N₁` when every sample has `g⁻ ≤ c1` and some sample
/// has `g⁺ ≥ c2`, and enters `N₂` when in addition some sample has `g⁺ ≤ c2`.
pub fn build_index_pair(
    process: &Process,
    grid: &CubicalGrid,
    n: &CubeSet,
    u: &CubeSet,
    opts: &PairOptions,
) -> Result<IndexPair, ConleyError> {
    opts.check()?;
    check_set(grid, n, "N")?;
    check_set(grid, u, "U")?;
    if process.field.dimension() != grid.space_dimension() {
        return Err(ConleyError::InvalidGrid("grid and field differ in dimension".into()));
    }
    let inv = inv_minus(process, grid, n, opts.t_back, opts.samples_per_axis, opts.dt)?;
    let dist = inv_distance_field(grid, &inv);
    let field = process.shifted();
    let lattice = Lattice::new(grid, opts.samples_per_axis);
    let values = lattice_values(grid, &lattice, n, |p| profile(&field, grid, u, &dist, p, opts.t_cap, opts.dt));

    let mut n1 = CubeSet::empty(grid);
    let mut n2 = CubeSet::empty(grid);
    for i in n.iter() {
        let s = cube_samples(grid, &lattice, &values, i);
        let near = s.iter().all(|(_, gm)| *gm <= opts.c1);
        let stays = s.iter().any(|(gp, _)| *gp >= opts.c2);
        if near && stays {
            n1.insert(i);
            if s.iter().any(|(gp, _)| *gp <= opts.c2) {
                n2.insert(i);
            }
        }
    }
    let mut repair = Repair::default();
    if !process.field.is_autonomous() {
        let top = grid.time.cells - 1;
        for i in n1.iter().filter(|&i| grid.layer_of(i) == top).collect::<Vec<_>>() {
            if !n2.contains(i) {
                n2.insert(i);
                repair.collar += 1;
            }
        }
    }
    if opts.repair {
        repair.n1_filled = fill_corners(process, grid, n, &mut n1, &n2, opts);
        repair.n2_added = close_exit(process, grid, &n1, &mut n2, opts);
    }
    let mut warnings = Vec::new();
    if n1.is_empty() {
        warnings.push(if inv.is_empty() {
            "N1 is empty: no cube of N has a sampled backward-invariant point".to_string()
        } else {
            "N1 is empty: isolation failed or c1 is too small".to_string()
        });
    }
    Ok(IndexPair {
        grid: grid.clone(),
        n1,
        n2,
        c1: opts.c1,
        c2: opts.c2,
        options: Some(opts.clone()),
        offset: process.offset,
        inv_minus_cubes: inv.len(),
        exit_horizon: 0.0,
        repair,
        validation: None,
        warnings,
    })
}

// Regular `per_axis`-point sample of the closed cube `i`, faces included.
fn closed_samples(grid: &CubicalGrid, i: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let bounds = grid.cube_bounds(i);
    let d = bounds.len();
    (0..per_axis.pow(d as u32))
        .map(|mut s| {
            let mut p = vec![0.0; d];
            for j in (0..d).rev() {
                let (lo, hi) = bounds[j];
                p[j] = lo + (hi - lo) * (s % per_axis) as f64 / (per_axis - 1) as f64;
                s /= per_axis;
            }
            p
        })
        .collect()
}

fn touches(grid: &CubicalGrid, set: &CubeSet, q: usize) -> bool {
    let m = grid.multi_index(q);
    let dims = grid.dims();
    (0..3usize.pow(dims as u32)).any(|mut code| {
        let mut idx = m.clone();
        for (j, v) in idx.iter_mut().enumerate() {
            let step = code % 3;
            code /= 3;
            let lim = if j == 0 { grid.time.cells } else { grid.space[j - 1].cells };
            match step {
                0 if *v == 0 => return false,
                0 => *v -= 1,
                2 if *v + 1 >= lim => return false,
                2 => *v += 1,
                _ => {}
            }
        }
        set.contains(grid.index(&idx))
    })
}

// Stair-step corners: an orbit from `N₁ \ N₂` that steps into cubes of `N`
// touching `N₁` and then comes back into `N₁` adds those cubes to `N₁`.
// Repeated until nothing changes. Returns the number of cubes added.
fn fill_corners(
    process: &Process,
    grid: &CubicalGrid,
    n: &CubeSet,
    n1: &mut CubeSet,
    n2: &CubeSet,
    opts: &PairOptions,
) -> usize {
    let field = process.shifted();
    let steps = step_count(opts.t_cap, opts.dt);
    let per_axis = opts.repair_samples.max(2);
    let mut added = 0;
    let mut todo: Vec<usize> = n1.difference(n2).indices();
    while !todo.is_empty() {
        let snapshot = n1.clone();
        let found = crate::par::map(&todo, |_, &i| {
            let mut out = Vec::new();
            for p in closed_samples(grid, i, per_axis) {
                let mut gap: Vec<usize> = Vec::new();
                let mut x = p[1..].to_vec();
                walk(&field, p[0], &mut x, opts.dt, steps, |_, t, y| match grid.locate(t, y) {
                    Some(q) if n2.contains(q) => false,
                    Some(q) if snapshot.contains(q) => {
                        out.append(&mut gap);
                        true
                    }
                    Some(q) if n.contains(q) && touches(grid, &snapshot, q) => {
                        if gap.last() != Some(&q) {
                            gap.push(q);
                        }
                        true
                    }
                    _ => false,
                });
            }
            out
        });
        todo.clear();
        for q in found.into_iter().flatten() {
            if !n1.contains(q) {
                n1.insert(q);
                added += 1;
                todo.push(q);
            }
        }
    }
    added
}

// Sample-level exit repair, run to a fixed point. An orbit from a sample of
// `N₁ \ N₂` that leaves `N₁` without meeting `N₂` makes the cube it left from
// an exit cube; an orbit from a sample of `N₂` adds to `N₂` every cube of `N₁`
// it crosses. `N₁` is never changed. Returns the number of cubes added.
fn close_exit(process: &Process, grid: &CubicalGrid, n1: &CubeSet, n2: &mut CubeSet, opts: &PairOptions) -> usize {
    let field = process.shifted();
    let steps = step_count(opts.t_cap, opts.dt);
    let per_axis = opts.repair_samples.max(2);
    let mut added = 0;

    let interior: Vec<usize> = n1.difference(n2).indices();
    let exits = crate::par::map(&interior, |_, &i| {
        let mut out = Vec::new();
        for p in closed_samples(grid, i, per_axis) {
            let mut prev = i;
            let (mut left, mut ended) = (false, false);
            let mut x = p[1..].to_vec();
            let done = walk(&field, p[0], &mut x, opts.dt, steps, |_, t, y| {
                match grid.locate(t, y) {
                    Some(q) if n2.contains(q) => ended = true,
                    Some(q) if n1.contains(q) => prev = q,
                    _ => (left, ended) = (true, true),
                }
                !ended
            });
            // a failed step leaves N₁ as well
            if left || (!ended && done < steps) {
                out.push(prev);
            }
        }
        out
    });
    let mut queue = Vec::new();
    for q in exits.into_iter().flatten() {
        if !n2.contains(q) {
            n2.insert(q);
            added += 1;
        }
    }
    queue.extend(n2.iter());
    let mut seen = vec![false; grid.cube_count()];
    while !queue.is_empty() {
        let batch: Vec<usize> = std::mem::take(&mut queue).into_iter().filter(|&i| !seen[i]).collect();
        for &i in &batch {
            seen[i] = true;
        }
        let snapshot = n2.clone();
        let reached = crate::par::map(&batch, |_, &i| {
            let mut out = Vec::new();
            for p in closed_samples(grid, i, per_axis) {
                let mut x = p[1..].to_vec();
                walk(&field, p[0], &mut x, opts.dt, steps, |_, t, y| match grid.locate(t, y) {
                    Some(q) if n1.contains(q) => {
                        if !snapshot.contains(q) {
                            out.push(q);
                        }
                        true
                    }
                    _ => false,
                });
            }
            out
        });
        for q in reached.into_iter().flatten() {
            if !n2.contains(q) {
                n2.insert(q);
                added += 1;
                queue.push(q);
            }
        }
    }
    added
}

/// `N₂^{-T}`: adds every cube of `N₁` all of whose samples reach `N₂` within
/// time `t` without leaving `N₁`. A single reaching sample is not enough at
/// cube resolution: next to the stable set every cube has one.
pub fn enlarge_exit(process: &Process, pair: &IndexPair, t: f64, dt: f64) -> Result<IndexPair, ConleyError> {
    if !(t >= 0.0 && t.is_finite() && dt > 0.0) {
        return Err(ConleyError::InvalidOptions("need finite T ≥ 0 and dt > 0".into()));
    }
    let mut out = pair.clone();
    out.exit_horizon = pair.exit_horizon + t;
    out.validation = None;
    if t == 0.0 {
        return Ok(out);
    }
    let grid = &pair.grid;
    let field = process.shifted();
    let per_axis = pair.options.as_ref().map_or(3, |o| o.samples_per_axis);
    let lattice = Lattice::new(grid, per_axis);
    let steps = step_count(t, dt);
    let interior = pair.n1.difference(&pair.n2);
    let reaches = lattice_values(grid, &lattice, &interior, |p| {
        let (t0, x0) = (p[0], &p[1..]);
        let mut hit = grid.locate(t0, x0).is_some_and(|q| pair.n2.contains(q));
        if hit {
            return true;
        }
        let mut x = x0.to_vec();
        walk(&field, t0, &mut x, dt, steps, |_, s, y| match grid.locate(s, y) {
            Some(q) if pair.n2.contains(q) => {
                hit = true;
                false
            }
            Some(q) => pair.n1.contains(q),
            None => false,
        });
        hit
    });
    for i in interior.iter() {
        if cube_samples(grid, &lattice, &reaches, i).into_iter().all(|&b| b) {
            out.n2.insert(i);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::catalog::linear_saddle;
    use crate::fields::BoxDomain;

    fn saddle() -> (Process, CubicalGrid) {
        let p = Process::new(linear_saddle(1.0, 1.0).unwrap(), 0.0);
        let g = CubicalGrid::new(1.0, 1, &BoxDomain::cube(2, 1.0), &[20, 20]).unwrap();
        (p, g)
    }

    #[test]
    fn exit_time_of_the_saddle() {
        let (p, g) = saddle();
        let u = CubeSet::full(&g);
        let v = g_plus(&p, &g, &[0.0, 0.5, 0.0], &u, 10.0, 0.01);
        assert!((v - 2f64.ln()).abs() < 0.01, "{v}");
        assert_eq!(g_plus(&p, &g, &[0.0, 0.0, 0.0], &u, 10.0, 0.01), f64::INFINITY);
        let empty = CubeSet::empty(&g);
        assert_eq!(g_plus(&p, &g, &[0.0, 0.5, 0.0], &empty, 10.0, 0.01), 0.0);
    }

    #[test]
    fn backward_invariant_cubes_hug_the_unstable_axis() {
        let (p, g) = saddle();
        let n = CubeSet::full(&g);
        let inv = inv_minus(&p, &g, &n, 4.0, 3, 0.02).unwrap();
        assert!(!inv.is_empty());
        for i in inv.iter() {
            let (lo, hi) = g.cube_bounds(i)[2];
            assert!(lo <= 0.0 && hi >= 0.0, "cube {i} misses y = 0");
        }
        let origin = g.locate(0.5, &[0.01, 0.01]).unwrap();
        assert!(inv.contains(origin));
        assert!(inv_minus(&p, &g, &CubeSet::empty(&g), 4.0, 3, 0.02).unwrap().is_empty());
    }

    #[test]
    fn distance_functional_on_the_saddle() {
        let (p, g) = saddle();
        let u = CubeSet::full(&g);
        let inv = inv_minus(&p, &g, &u, 4.0, 3, 0.02).unwrap();
        // |y| decays along (0.5eᵗ, 0.5e⁻ᵗ), so the largest distance is at t = 0
        let v = g_minus(&p, &g, &[0.0, 0.5, 0.5], &u, &inv, 10.0, 0.01);
        assert!(v <= 0.5 && v >= 0.5 - 3.0 * g.space_diagonal(), "{v}");
        let on_axis = g_minus(&p, &g, &[0.0, 0.3, 0.0], &u, &inv, 10.0, 0.01);
        assert_eq!(on_axis, 0.0);
        let none = g_minus(&p, &g, &[0.0, 0.3, 0.0], &u, &CubeSet::empty(&g), 10.0, 0.01);
        assert_eq!(none, f64::INFINITY);
    }

    #[test]
    fn saddle_pair_shape_and_exit_enlargement() {
        let (p, g) = saddle();
        let n = CubeSet::full(&g);
        let pair = build_index_pair(&p, &g, &n, &n, &PairOptions::new(0.1, 1.0)).unwrap();
        assert!(!pair.n1.is_empty() && pair.n2.is_subset(&pair.n1));
        // |x| ≤ e^{-c2} up to one cube; |y| ≤ c1 up to the distance bound's slack
        let h = g.space[0].step();
        let (bx, by) = ((-1f64).exp() + h, 0.1 + g.space_diagonal() + h);
        for i in pair.n1.iter() {
            let c = g.cube_center(i);
            assert!(c[1].abs() < bx && c[2].abs() < by, "{c:?}");
        }
        for i in pair.n2.iter() {
            assert!(g.cube_center(i)[1].abs() > 0.2);
        }
        let same = enlarge_exit(&p, &pair, 0.0, 0.02).unwrap();
        assert_eq!(same.n2, pair.n2);
        let a = enlarge_exit(&p, &pair, 0.5, 0.02).unwrap();
        let b = enlarge_exit(&p, &pair, 2.0, 0.02).unwrap();
        assert!(pair.n2.is_subset(&a.n2) && a.n2.is_subset(&b.n2));
        assert_eq!(a.n1, pair.n1);
        let round = IndexPair::from_json(&pair.to_json()).unwrap();
        assert_eq!(round, pair);
    }
}
