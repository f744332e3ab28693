//! Well-prepared data, error assembly, epsilon sweeps, rate fits and
//! observables.

mod case;
mod fit;
mod observables;
mod scenario;
mod select;
mod spaces;
mod sweep;

pub use case::{
    amplitude_observables, run_case, tail_fraction, BoundReport, CaseContext, CaseErrors, CaseResult, Horizon, IndexNorms, Scenario,
    PHASE_BOUND_SLACK, RESOLVED_TAIL,
};
pub use fit::{fit_rate, RateFit};
pub use observables::{observables, radius_estimate, Observables, RADIUS_FLOOR};
pub use select::{phase_condition_defect, select_m, well_prepared_data, MInputs, MSelection};
pub use sweep::{fit_all, sweep, SweepFits, SweepResult};
pub use scenario::{acceptance_scenario, ScenarioModel, DEFAULT_BAND, DEFAULT_DT, DEFAULT_NORMS, DEFAULT_SAFETY, DEFAULT_SEED, DEFAULT_TRUNCATION};
pub use spaces::{check_spaces, SpacesOptions, SpacesReport, TameSummary};
