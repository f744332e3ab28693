use super::case::{Horizon, Scenario};
use crate::error::Result;
use crate::models::{default_data, presets, DataNorms};
use crate::spectral::Grid;
use crate::stepping::DEFAULT_NOISE_FLOOR;

/// Model family of the acceptance scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioModel {
    /// Hyperbolic cubic NLS with the `+|psi|^2 psi` sign.
    Hyperbolic,
    /// Davey-Stewartson II with `chi = 1`, `omega = -2`.
    DaveyStewartson,
}

/// Default data norms: `phi0`, `phi10` in `H^{l+1}_{w0}`, `a0`, `a10` in `H^l_{w0}`.
pub const DEFAULT_NORMS: DataNorms = DataNorms {
    phi0: 0.1,
    a0: 0.2,
    phi10: 0.1,
    a10: 0.1,
};

pub const DEFAULT_BAND: i64 = 3;
pub const DEFAULT_SEED: u64 = 20_240_917;
pub const DEFAULT_DT: f64 = 5e-4;
pub const DEFAULT_SAFETY: f64 = 4.0;
pub const DEFAULT_TRUNCATION: usize = 10_000;

/// The reference scenario: `T^2`, `N = 64^2`, `l = 2`, `w0 = 1`, band-limited
/// analytic data, `M` selected at index `l + 2` with safety 4,
/// `T = 0.8 min(w0 / M, 0.5)` and `dt = 5e-4`.
pub fn acceptance_scenario(model: ScenarioModel, n: usize) -> Result<Scenario> {
    let ell = 2.0;
    let w0 = 1.0;
    let params = match model {
        ScenarioModel::Hyperbolic => presets::hyperbolic_nls(1.0, ell, w0),
        ScenarioModel::DaveyStewartson => presets::davey_stewartson(1.0, -2.0, true, ell, w0),
    };
    let grid = Grid::torus(&[n, n])?;
    let data = default_data(&grid, DEFAULT_BAND, ell, w0, DEFAULT_NORMS, DEFAULT_SEED)?;
    Ok(Scenario {
        params,
        grid,
        data,
        dt: DEFAULT_DT,
        noise_floor: DEFAULT_NOISE_FLOOR,
        horizon: Horizon::default(),
        safety: DEFAULT_SAFETY,
        truncation: DEFAULT_TRUNCATION,
        compute_nls: true,
    })
}
