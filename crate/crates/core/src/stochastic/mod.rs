//! Grids, seeded path generation and the discrete integrals every identity is
//! built from.

mod grid;
mod integrals;
mod path;
mod rng;
mod sheet;

pub use grid::{make_uniform_grid, TimeGrid};
pub use integrals::{ito_integral, ito_integral_with, ito_partial_sums, lebesgue_integral, ItoRule};
pub(crate) use integrals::{ito_sum, left_sum};
pub use path::{sample_brownian, sample_brownian_with, SamplePath};
pub use rng::{standard_normal, RngSeed, StreamRng};
pub use sheet::{sample_sheet, BrownianSheetGrid, SheetSpec};
