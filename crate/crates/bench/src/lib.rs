//! Fixtures shared by the criterion benches.

use wkb_core::harness::{acceptance_scenario, well_prepared_data, ScenarioModel};
use wkb_core::{GrenierState, Model, SpectralField};

/// Acceptance-scenario model at `epsilon` with `M` fixed, and its
/// well-prepared data, on an `n x n` grid.
pub fn scenario_fixture(n: usize, epsilon: f64) -> (Model, GrenierState) {
    let sc = acceptance_scenario(ScenarioModel::Hyperbolic, n).expect("scenario");
    let mut params = sc.params.with_epsilon(epsilon);
    params.m = Some(64.0);
    let model = Model::new(params, &sc.grid).expect("model");
    let data = well_prepared_data(&sc.data, epsilon).expect("data");
    (model, data)
}

/// Wave function `a e^{i phi / eps}` of the fixture, projected on the grid.
pub fn wave_fixture(n: usize, epsilon: f64) -> (Model, SpectralField) {
    let (model, pair) = scenario_fixture(n, epsilon);
    let u = SpectralField::from_physical(model.grid(), pair.wave_function(epsilon)).expect("wave");
    (model, u)
}
