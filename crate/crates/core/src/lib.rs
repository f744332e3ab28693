//! Pseudo-spectral simulation of the semiclassical WKB hierarchy for
//! Schrödinger equations with indefinite dispersion on periodic boxes.

pub mod error;
pub mod harness;
pub mod kernels;
pub mod models;
pub mod picard;
pub mod rng;
pub mod spectral;
pub mod stepping;

pub use error::{Error, Result};
pub use kernels::KernelSpec;
pub use models::{GrenierState, Model, ModelParams};
pub use num_complex::Complex64;
pub use spectral::{Grid, NormSpec, SpectralField, SymMatrix, WeightSchedule};
pub use stepping::{StepPlan, Trajectory};
