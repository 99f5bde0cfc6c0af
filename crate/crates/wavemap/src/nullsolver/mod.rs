//! Characteristic-lattice evolution, free propagator, inverse d'Alembertian
//! and Picard iteration.

mod data;
mod free;
mod grid;
pub mod io;
mod scheme;

pub use data::{cauchy_to_characteristic, CauchyData, CharacteristicData, SPHERE_DATA_TOL};
pub use free::{dalembert_free, dalembert_free_on, free_profiles, inverse_box, picard_iterate, PicardReport};
pub use grid::{CellField, FieldMeta, GridField, NullGrid};
pub use scheme::{
    advance_cell, nonlinearity, residual_cells, solve, solve_on, solve_square, square_lattice, strip_lattice,
    wave_map_residual, SolveOptions, DEFAULT_BLOWUP_CEILING,
};
