use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::spectral::{analytic_norm, Grid, NormSpec, SpectralField};

/// WKB data: limit data `(phi0, a0)` and first correctors `(phi10, a10)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WkbData {
    pub phi0: SpectralField,
    pub a0: SpectralField,
    pub phi10: SpectralField,
    pub a10: SpectralField,
}

/// Band-limited analytic profile with coefficients
/// `exp(-w0 <xi>) <xi>^-4` times seeded random phases on `|m_i| <= band`.
/// Real profiles are symmetrized. Nyquist modes are always empty.
pub fn analytic_profile(grid: &Grid, band: i64, w0: f64, seed: u64, label: u64, real: bool) -> SpectralField {
    let mut rng = CounterRng::substream(seed, label);
    let mut f = SpectralField::zeros(grid);
    let brackets = grid.brackets();
    for flat in 0..grid.len() {
        let phase = rng.uniform() * std::f64::consts::TAU;
        let mode = grid.mode_of(flat);
        if grid.is_nyquist(flat) || mode.iter().any(|m| m.abs() > band) {
            continue;
        }
        let b = brackets[flat];
        f.coeffs_mut()[flat] = Complex64::from_polar((-w0 * b).exp() * b.powi(-4), phase);
    }
    if real {
        f.real_part()
    } else {
        f
    }
}

/// `f` rescaled so that `||f||_{H^l_w} = target`.
pub fn scale_to_norm(f: &SpectralField, spec: NormSpec, target: f64) -> Result<SpectralField> {
    let norm = analytic_norm(f, spec)?;
    if target == 0.0 {
        return Ok(SpectralField::zeros(f.grid()));
    }
    if norm == 0.0 {
        return Err(Error::Param("cannot rescale a zero profile".into()));
    }
    Ok(f.scaled((target / norm).into()))
}

/// Target norms of the default data: `phi0`, `phi10` in `H^{l+1}_{w0}`,
/// `a0`, `a10` in `H^l_{w0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataNorms {
    pub phi0: f64,
    pub a0: f64,
    pub phi10: f64,
    pub a10: f64,
}

/// Seeded default data with the requested norms.
pub fn default_data(grid: &Grid, band: i64, ell: f64, w0: f64, norms: DataNorms, seed: u64) -> Result<WkbData> {
    let phi_spec = NormSpec::new(ell + 1.0, w0)?;
    let a_spec = NormSpec::new(ell, w0)?;
    Ok(WkbData {
        phi0: scale_to_norm(&analytic_profile(grid, band, w0, seed, 1, true), phi_spec, norms.phi0)?,
        a0: scale_to_norm(&analytic_profile(grid, band, w0, seed, 2, false), a_spec, norms.a0)?,
        phi10: scale_to_norm(&analytic_profile(grid, band, w0, seed, 3, true), phi_spec, norms.phi10)?,
        a10: scale_to_norm(&analytic_profile(grid, band, w0, seed, 4, false), a_spec, norms.a10)?,
    })
}
