//! Grids, Fourier coefficients, derivatives, dealiased products and the
//! weighted analytic norms.

mod fft;
mod field;
mod grid;
mod norms;
pub mod ops;
pub mod product;
pub mod snapshot;

pub use field::{to_physical, to_spectral, SpectralField};
pub use grid::Grid;
pub use norms::{
    analytic_norm, analytic_norm_sq, bilinear_constant, inner_product, triple_norm, NormSpec, TripleNorm,
    WeightSchedule, EXPONENT_LIMIT,
};
pub use ops::{apply_d2, d2_symbol, gradient, partial_derivative, SymMatrix};
pub use product::{dealiased_product, Dealiaser};
pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot};
