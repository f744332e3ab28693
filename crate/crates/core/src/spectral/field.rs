use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use super::fft::FftNd;
use super::grid::Grid;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Fourier coefficients of a field on a periodic box.
///
/// With samples `s(y_k)` at `y_k = k L / n`, the coefficients are
///
/// ```text
/// coeff(m) = (prod L_i / n_i) (2 pi)^(-d/2) sum_k s(y_k) exp(-i <xi(m), y_k>)
/// ```
///
/// the trapezoid discretization of `(2 pi)^(-d/2) int psi(y) e^{-i<xi,y>} dy`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeff: Vec<Complex64>,
}

/// Factor turning an unnormalized DFT into `coeff`.
pub(crate) fn transform_scale(grid: &Grid) -> f64 {
    grid.cell_volume() * (2.0 * PI).powf(-(grid.dim() as f64) / 2.0)
}

/// Forward transform of physical samples (row-major, `y_k = k L / n`).
pub fn to_spectral(grid: &Grid, samples: &[Complex64]) -> Result<SpectralField> {
    SpectralField::from_physical(grid, samples.to_vec())
}

/// Inverse transform, exact on band-limited data.
pub fn to_physical(field: &SpectralField) -> Vec<Complex64> {
    field.to_physical()
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeff: vec![ZERO; grid.len()],
        }
    }

    /// Spatially constant field `value`.
    pub fn constant(grid: &Grid, value: Complex64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeff[0] = value * grid.volume() * (2.0 * PI).powf(-(grid.dim() as f64) / 2.0);
        f
    }

    /// Single Fourier mode `exp(i <xi(m), y>)` with unit amplitude.
    pub fn plane_wave(grid: &Grid, mode: &[i64]) -> Result<Self> {
        let flat = grid
            .flat_of(mode)
            .ok_or_else(|| Error::Param(format!("mode {mode:?} is off the lattice")))?;
        let mut f = Self::zeros(grid);
        f.coeff[flat] = Complex64::new(grid.volume() * (2.0 * PI).powf(-(grid.dim() as f64) / 2.0), 0.0);
        Ok(f)
    }

    /// Coefficients in FFT order (see [`Grid`]).
    pub fn from_coeffs(grid: &Grid, coeff: Vec<Complex64>) -> Result<Self> {
        if coeff.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: coeff.len(),
            });
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeff,
        })
    }

    pub fn from_physical(grid: &Grid, mut samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        FftNd::get(grid.n()).forward(&mut samples);
        let scale = transform_scale(grid);
        samples.iter_mut().for_each(|c| *c *= scale);
        Ok(SpectralField {
            grid: grid.clone(),
            coeff: samples,
        })
    }

    /// Real samples, convenience for real-valued data.
    pub fn from_real_samples(grid: &Grid, samples: &[f64]) -> Result<Self> {
        Self::from_physical(grid, samples.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Samples a function of the physical point.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let samples = (0..grid.len()).map(|k| f(&grid.point(k))).collect();
        Self::from_physical(grid, samples).expect("sample count matches grid")
    }

    pub fn to_physical(&self) -> Vec<Complex64> {
        let mut data = self.coeff.clone();
        FftNd::get(self.grid.n()).inverse(&mut data);
        let norm = 1.0 / (transform_scale(&self.grid) * self.grid.len() as f64);
        data.iter_mut().for_each(|c| *c *= norm);
        data
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeff
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeff
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeff
    }

    /// Coefficient of an integer mode; zero off the lattice.
    pub fn coeff(&self, mode: &[i64]) -> Complex64 {
        self.grid.flat_of(mode).map_or(ZERO, |f| self.coeff[f])
    }

    pub fn set_coeff(&mut self, mode: &[i64], value: Complex64) -> Result<()> {
        let flat = self
            .grid
            .flat_of(mode)
            .ok_or_else(|| Error::Param(format!("mode {mode:?} is off the lattice")))?;
        self.coeff[flat] = value;
        Ok(())
    }

    pub(crate) fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Complex conjugate field: `conj(f)^(m) = conj(f^(-m))`.
    pub fn conj(&self) -> Self {
        let mut out = Self::zeros(&self.grid);
        for (flat, c) in out.coeff.iter_mut().enumerate() {
            if let Some(neg) = self.grid.negated(flat) {
                *c = self.coeff[neg].conj();
            }
        }
        out
    }

    /// Real part `(f + conj f) / 2`, conjugate-symmetric by construction.
    pub fn real_part(&self) -> Self {
        let mut out = self.conj();
        for (o, c) in out.coeff.iter_mut().zip(&self.coeff) {
            *o = (*o + c) * 0.5;
        }
        out.zero_nyquist();
        out
    }

    /// Largest `|f^(m) - conj f^(-m)|` relative to the largest coefficient.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for flat in 0..self.coeff.len() {
            let partner = match self.grid.negated(flat) {
                Some(neg) => self.coeff[neg].conj(),
                None => ZERO,
            };
            worst = worst.max((self.coeff[flat] - partner).norm());
        }
        worst / scale
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.conjugate_asymmetry() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.coeff.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Zeroes every coefficient with a Nyquist component.
    pub fn zero_nyquist(&mut self) {
        for (c, &nyq) in self.coeff.iter_mut().zip(self.grid.nyquist_mask()) {
            if nyq {
                *c = ZERO;
            }
        }
    }

    /// `sum_m |f^(m)|^2`. This is `prod(L_i / 2 pi)` times the quadrature
    /// `L^2` norm squared, so exactly the `L^2` norm squared on the torus.
    pub fn energy(&self) -> f64 {
        self.coeff.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: Complex64, other: &SpectralField) {
        debug_assert!(self.grid.same_as(&other.grid));
        for (a, b) in self.coeff.iter_mut().zip(&other.coeff) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: Complex64) {
        self.coeff.iter_mut().for_each(|c| *c *= alpha);
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// Multiplies coefficient `m` by `symbol[m]`.
    pub fn apply_multiplier(&mut self, symbol: &[Complex64]) {
        debug_assert_eq!(symbol.len(), self.coeff.len());
        for (c, s) in self.coeff.iter_mut().zip(symbol) {
            *c *= s;
        }
    }

    pub fn apply_real_multiplier(&mut self, symbol: &[f64]) {
        debug_assert_eq!(symbol.len(), self.coeff.len());
        for (c, s) in self.coeff.iter_mut().zip(symbol) {
            *c *= s;
        }
    }

    /// Zeroes every coefficient below `relative * max|f^|` and returns how
    /// many were cleared. The conjugate-symmetric structure is preserved
    /// because `|f^(m)|` and `|f^(-m)|` agree for real fields.
    pub fn filter_below(&mut self, relative: f64) -> usize {
        let floor = relative * self.max_abs();
        let mut cleared = 0;
        for c in self.coeff.iter_mut() {
            if c.norm() < floor && *c != ZERO {
                *c = ZERO;
                cleared += 1;
            }
        }
        cleared
    }

    pub fn all_finite(&self) -> bool {
        self.coeff.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Maximum modulus of the physical samples.
    pub fn sup_norm(&self) -> f64 {
        self.to_physical().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        debug_assert!(self.grid.same_as(&rhs.grid));
        for (a, b) in self.coeff.iter_mut().zip(&rhs.coeff) {
            *a += b;
        }
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        debug_assert!(self.grid.same_as(&rhs.grid));
        for (a, b) in self.coeff.iter_mut().zip(&rhs.coeff) {
            *a -= b;
        }
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(Complex64::new(rhs, 0.0))
    }
}

impl Mul<Complex64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: Complex64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(Complex64::new(-1.0, 0.0))
    }
}

impl Add<&SpectralField> for SpectralField {
    type Output = SpectralField;
    fn add(mut self, rhs: &SpectralField) -> SpectralField {
        self += rhs;
        self
    }
}

impl Sub<&SpectralField> for SpectralField {
    type Output = SpectralField;
    fn sub(mut self, rhs: &SpectralField) -> SpectralField {
        self -= rhs;
        self
    }
}

impl Mul<f64> for SpectralField {
    type Output = SpectralField;
    fn mul(mut self, rhs: f64) -> SpectralField {
        self.scale(Complex64::new(rhs, 0.0));
        self
    }
}

impl Mul<Complex64> for SpectralField {
    type Output = SpectralField;
    fn mul(mut self, rhs: Complex64) -> SpectralField {
        self.scale(rhs);
        self
    }
}

impl Neg for SpectralField {
    type Output = SpectralField;
    fn neg(mut self) -> SpectralField {
        self.scale(Complex64::new(-1.0, 0.0));
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn direct_dft(grid: &Grid, samples: &[Complex64]) -> Vec<Complex64> {
        let scale = transform_scale(grid);
        (0..grid.len())
            .map(|flat| {
                let xi = grid.wavevector(flat);
                let mut acc = ZERO;
                for (k, s) in samples.iter().enumerate() {
                    let y = grid.point(k);
                    let phase: f64 = xi.iter().zip(&y).map(|(a, b)| a * b).sum();
                    acc += s * Complex64::from_polar(1.0, -phase);
                }
                acc * scale
            })
            .collect()
    }

    #[test]
    fn constant_on_circle() {
        let g = Grid::torus(&[8]).unwrap();
        let f = SpectralField::from_real_samples(&g, &[1.0; 8]).unwrap();
        assert!((f.coeff(&[0]) - Complex64::new((2.0 * PI).sqrt(), 0.0)).norm() < 1e-14);
        for m in 1..4 {
            assert!(f.coeff(&[m]).norm() < 1e-14);
        }
    }

    #[test]
    fn single_mode_on_circle() {
        let g = Grid::torus(&[8]).unwrap();
        let f = SpectralField::from_fn(&g, |y| Complex64::from_polar(1.0, y[0]));
        assert!((f.coeff(&[1]) - Complex64::new((2.0 * PI).sqrt(), 0.0)).norm() < 1e-14);
        let others: f64 = (0..g.len()).filter(|&k| k != 1).map(|k| f.coeffs()[k].norm()).sum();
        assert!(others < 1e-13);
        let p = SpectralField::plane_wave(&g, &[1]).unwrap();
        let diff: f64 = p.coeffs().iter().zip(f.coeffs()).map(|(a, b)| (a - b).norm()).sum();
        assert!(diff < 1e-13);
    }

    #[test]
    fn matches_direct_dft_and_round_trips() {
        let mut rng = CounterRng::new(11);
        for (n, l) in [(vec![8], vec![2.0 * PI]), (vec![4, 6], vec![2.0 * PI, 3.0])] {
            let g = Grid::new(&n, &l).unwrap();
            let samples: Vec<Complex64> = (0..g.len()).map(|_| rng.complex_normal()).collect();
            let f = to_spectral(&g, &samples).unwrap();
            let oracle = direct_dft(&g, &samples);
            for (a, b) in f.coeffs().iter().zip(&oracle) {
                assert!((a - b).norm() < 1e-13 * (1.0 + b.norm()));
            }
            let back = to_physical(&f);
            for (a, b) in back.iter().zip(&samples) {
                assert!((a - b).norm() <= 1e-13 * b.norm().max(1.0));
            }
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let g = Grid::torus(&[8]).unwrap();
        assert!(matches!(
            to_spectral(&g, &[ZERO; 7]),
            Err(Error::Shape { expected: 8, got: 7 })
        ));
    }

    #[test]
    fn real_samples_give_conjugate_symmetry() {
        let g = Grid::torus(&[8, 8]).unwrap();
        let mut rng = CounterRng::new(3);
        let s: Vec<f64> = (0..g.len()).map(|_| rng.normal()).collect();
        let f = SpectralField::from_real_samples(&g, &s).unwrap();
        let mut no_nyq = f.clone();
        no_nyq.zero_nyquist();
        assert!(no_nyq.conjugate_asymmetry() < 1e-12);
    }

    #[test]
    fn parseval_energy() {
        let g = Grid::torus(&[8, 4]).unwrap();
        let mut rng = CounterRng::new(5);
        let s: Vec<Complex64> = (0..g.len()).map(|_| rng.complex_normal()).collect();
        let f = to_spectral(&g, &s).unwrap();
        let l2: f64 = s.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.cell_volume();
        assert!((f.energy() - l2).abs() < 1e-12 * l2);
    }
}
