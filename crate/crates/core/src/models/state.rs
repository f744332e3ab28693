use num_complex::Complex64;

use crate::error::Result;
use crate::spectral::SpectralField;
use crate::stepping::OdeState;

/// Real phase and complex amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct GrenierState {
    pub phi: SpectralField,
    pub a: SpectralField,
}

impl GrenierState {
    pub fn new(phi: SpectralField, a: SpectralField) -> Result<Self> {
        phi.check_grid(&a)?;
        Ok(GrenierState { phi, a })
    }

    pub fn zeros_like(&self) -> Self {
        GrenierState {
            phi: SpectralField::zeros(self.phi.grid()),
            a: SpectralField::zeros(self.a.grid()),
        }
    }

    /// Pointwise reconstruction `a exp(i phi / epsilon)` on the physical grid.
    pub fn wave_function(&self, epsilon: f64) -> Vec<Complex64> {
        let phi = self.phi.to_physical();
        let a = self.a.to_physical();
        a.iter()
            .zip(&phi)
            .map(|(a, p)| a * Complex64::from_polar(1.0, p.re / epsilon))
            .collect()
    }
}

impl OdeState for GrenierState {
    fn axpy(&mut self, alpha: f64, other: &Self) {
        self.phi.axpy(alpha.into(), &other.phi);
        self.a.axpy(alpha.into(), &other.a);
    }

    fn all_finite(&self) -> bool {
        self.phi.all_finite() && self.a.all_finite()
    }

    fn filter_below(&mut self, relative: f64) {
        self.phi.filter_below(relative);
        self.a.filter_below(relative);
    }
}

impl OdeState for SpectralField {
    fn axpy(&mut self, alpha: f64, other: &Self) {
        SpectralField::axpy(self, alpha.into(), other);
    }

    fn all_finite(&self) -> bool {
        SpectralField::all_finite(self)
    }

    fn filter_below(&mut self, relative: f64) {
        SpectralField::filter_below(self, relative);
    }
}
