//! Ready-made grids and options for the linear saddle and the planar
//! trivial-index family.

use crate::fields::catalog::{linear_saddle, trivial_index_field};
use crate::fields::{BoxDomain, ProblemSpec};

use super::construct::{build_index_pair, IndexPair, PairOptions};
use super::grid::{CubeSet, CubicalGrid};
use super::{ConleyError, Process};

/// Field time at grid time 0 for the trivial-index family; the window
/// `[0, 2·T0]` is centred on the transition `|t| ≤ 1`.
pub const TRIVIAL_INDEX_T0: f64 = 4.0;

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub process: Process,
    pub grid: CubicalGrid,
    pub n: CubeSet,
    pub u: CubeSet,
    pub options: PairOptions,
}

impl Fixture {
    pub fn build(&self) -> Result<IndexPair, ConleyError> {
        build_index_pair(&self.process, &self.grid, &self.n, &self.u, &self.options)
    }

    /// The same fixture on a grid `factor` times finer.
    pub fn refined(&self, factor: usize) -> Result<Fixture, ConleyError> {
        let grid = self.grid.refined(factor)?;
        Ok(Fixture {
            name: format!("{} (x{factor})", self.name),
            n: CubeSet::full(&grid),
            u: CubeSet::full(&grid),
            grid,
            process: self.process.clone(),
            options: self.options.clone(),
        })
    }

    /// Validation horizon: long enough for any orbit of `N₁` to reach the exit.
    pub fn validation_horizon(&self) -> f64 {
        self.options.t_cap
    }
}

/// `ẋ = x, ẏ = -y` on `[-1, 1]²` with one time layer, `N = U =` the box.
pub fn saddle_fixture(cells: usize) -> Result<Fixture, ConleyError> {
    let field = linear_saddle(1.0, 1.0)?;
    let grid = CubicalGrid::new(1.0, 1, &BoxDomain::cube(2, 1.0), &[cells, cells])?;
    Ok(Fixture {
        name: "linear saddle".into(),
        process: Process::new(field, 0.0),
        n: CubeSet::full(&grid),
        u: CubeSet::full(&grid),
        grid,
        options: PairOptions::new(0.1, 1.0),
    })
}

/// The trivial-index family at parameter `c` on `[0, 2·T0] × [-2, 2]²`,
/// grid time `s` being field time `s - T0`.
pub fn trivial_index_fixture(c: f64, eps: f64, cells: usize, layers: usize) -> Result<Fixture, ConleyError> {
    let field = trivial_index_field(c, eps)?;
    let grid = CubicalGrid::new(2.0 * TRIVIAL_INDEX_T0, layers, &BoxDomain::cube(2, 2.0), &[cells, cells])?;
    Ok(Fixture {
        name: format!("trivial-index family, c = {c}"),
        process: Process::new(field, -TRIVIAL_INDEX_T0),
        n: CubeSet::full(&grid),
        u: CubeSet::full(&grid),
        grid,
        options: window_options(),
    })
}

/// Options for a non-autonomous window: a short backward horizon keeps the
/// sampled unstable set local in time.
pub fn window_options() -> PairOptions {
    PairOptions {
        t_back: 3.0,
        dt: 0.04,
        t_cap: 8.0,
        ..PairOptions::new(0.25, 1.0)
    }
}

/// Grid and options for an arbitrary problem on its box: autonomous fields
/// get one time layer, others the window `[-t0, t0]` of field time.
pub fn problem_fixture(problem: &ProblemSpec, cells: usize, layers: usize, t0: f64) -> Result<Fixture, ConleyError> {
    let autonomous = problem.f.is_autonomous();
    let (t_grid, layers, offset) = if autonomous {
        (1.0, 1, 0.0)
    } else {
        (2.0 * t0, layers, -t0)
    };
    let cells = vec![cells; problem.dimension()];
    let grid = CubicalGrid::new(t_grid, layers, &problem.domain_box, &cells)?;
    let options = if autonomous {
        PairOptions::new(0.1, 1.0)
    } else {
        window_options()
    };
    Ok(Fixture {
        name: "problem".into(),
        process: Process::from_problem(problem, offset),
        n: CubeSet::full(&grid),
        u: CubeSet::full(&grid),
        grid,
        options,
    })
}

/// Removes from `N₂` the exit cube closest to the centroid of `N₁`, leaving
/// `N₁` unchanged. Returns `None` when `N₂` is empty.
pub fn corrupt_exit(pair: &IndexPair) -> Option<IndexPair> {
    let grid = &pair.grid;
    let n = pair.n1.len() as f64;
    let mut centroid = vec![0.0; grid.dims()];
    for i in pair.n1.iter() {
        for (c, v) in centroid.iter_mut().zip(grid.cube_center(i)) {
            *c += v / n;
        }
    }
    let victim = pair.n2.iter().min_by(|&a, &b| {
        let da = crate::dynamics::norm_diff(&grid.cube_center(a), &centroid);
        let db = crate::dynamics::norm_diff(&grid.cube_center(b), &centroid);
        da.total_cmp(&db)
    })?;
    let mut out = pair.clone();
    out.n2.remove(victim);
    out.validation = None;
    out.warnings.push(format!("exit cube {victim} removed"));
    Some(out)
}
