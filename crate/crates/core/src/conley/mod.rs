//! Index pairs on cubical grids in extended phase space `[0, T_grid] × box`,
//! and their relative homology over 𝔽₂.
//!
//! Grid time `s` corresponds to field time `s + offset`. The first and last
//! time layers continue as cylinders, so orbits that run past either end of
//! the window keep the membership of the boundary layer.

mod construct;
pub mod fixtures;
mod grid;
mod homology;
mod validate;

use thiserror::Error;

use crate::fields::{FieldError, ProblemSpec, Shifted, VectorFieldSpec};

pub use construct::{
    build_index_pair, enlarge_exit, g_minus, g_plus, inv_distance_field, inv_minus, IndexPair, PairOptions,
};
pub use grid::{Axis, CubeSet, CubicalGrid, Lattice, DEFAULT_CUBE_BUDGET};
pub use homology::{cubes_of_set, relative_homology, relative_homology_cells, Betti, ElementaryCube, HomologyReport};
pub use validate::{validate_index_pair, Axiom, ValidationReport, Witness};

#[derive(Debug, Error)]
pub enum ConleyError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("cube budget exceeded: {cubes} cubes, budget {budget}")]
    BudgetExceeded { cubes: usize, budget: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("malformed index pair: {0}")]
    Malformed(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// The process `(s, x) ↦ f(s + offset, x)` whose extended phase space is gridded.
#[derive(Clone, Debug)]
pub struct Process {
    pub field: VectorFieldSpec,
    pub offset: f64,
}

impl Process {
    pub fn new(field: VectorFieldSpec, offset: f64) -> Self {
        Process { field, offset }
    }

    pub fn from_problem(problem: &ProblemSpec, offset: f64) -> Self {
        Self::new(problem.f.clone(), offset)
    }

    pub fn shifted(&self) -> Shifted<'_, VectorFieldSpec> {
        Shifted {
            field: &self.field,
            offset: self.offset,
        }
    }
}
