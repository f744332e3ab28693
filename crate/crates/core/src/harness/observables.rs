use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{partial_derivative, Dealiaser, SpectralField};

/// Relative floor below which Fourier coefficients are ignored by
/// [`radius_estimate`].
pub const RADIUS_FLOOR: f64 = 1e-13;

/// Position density `|u|^2` and momentum densities `Im(eps conj(u) d_j u)`,
/// all computed with exact (dealiased) products.
#[derive(Clone, Debug)]
pub struct Observables {
    pub density: SpectralField,
    pub momentum: Vec<SpectralField>,
}

pub fn observables(u: &SpectralField, epsilon: f64) -> Result<Observables> {
    if !(epsilon > 0.0) {
        return Err(Error::Param(format!("momentum density needs epsilon > 0, got {epsilon}")));
    }
    let dealias = Dealiaser::new(u.grid(), 2)?;
    let ubar = u.conj();
    let density = dealias.product(&[u, &ubar])?.real_part();
    let momentum = (0..u.grid().dim())
        .map(|j| {
            let du = partial_derivative(u, j)?;
            let prod = dealias.product(&[&ubar, &du])?;
            // Im(z) = (z - conj z) / 2i
            let im = (&prod - &prod.conj()).scaled(Complex64::new(0.0, -0.5 * epsilon));
            Ok(im.real_part())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Observables { density, momentum })
}

/// Fitted exponential decay rate of `|f^(m)|` in `<xi(m)>`: the least-squares
/// slope of `-log|f^(m)|` over modes above `RADIUS_FLOOR * max|f^|`.
pub fn radius_estimate(f: &SpectralField) -> Result<f64> {
    let max = f.max_abs();
    if !(max > 0.0) {
        return Err(Error::Insufficient("radius estimate of a zero field".into()));
    }
    let floor = RADIUS_FLOOR * max;
    let brackets = f.grid().brackets();
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0usize, 0.0, 0.0, 0.0, 0.0);
    for (c, &b) in f.coeffs().iter().zip(brackets) {
        let a = c.norm();
        if a > floor {
            let y = -a.ln();
            n += 1;
            sx += b;
            sy += y;
            sxx += b * b;
            sxy += b * y;
        }
    }
    let nf = n as f64;
    let det = nf * sxx - sx * sx;
    if n < 4 || det <= 1e-12 * nf * sxx {
        return Err(Error::Insufficient(format!("radius estimate needs 4 modes at distinct frequencies, found {n}")));
    }
    Ok((nf * sxy - sx * sy) / det)
}
