use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::Grid;
use crate::error::{Error, Result};

/// Zero-padded physical grid for exact products of band-limited fields.
///
/// Fields are lifted to a grid with `P_i >= (q + 1) n_i / 2` points per axis
/// (rounded up to even), multiplied pointwise there, and projected back.
/// Nyquist modes are dropped on the way in and zeroed on the way out, so a
/// product of at most `q` band-limited factors equals the exact discrete
/// convolution restricted to the original lattice.
#[derive(Clone, Debug)]
pub struct Dealiaser {
    grid: Grid,
    padded: Grid,
    order: usize,
    /// Padded flat index of every original mode; `None` at Nyquist.
    map: Vec<Option<usize>>,
}

impl Dealiaser {
    /// Padding for products of up to `order` factors.
    pub fn new(grid: &Grid, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::Param(format!("product order must be >= 2, got {order}")));
        }
        let padded_n: Vec<usize> = grid
            .n()
            .iter()
            .map(|&n| {
                let p = ((order + 1) * n).div_ceil(2);
                p + p % 2
            })
            .collect();
        let padded = Grid::new(&padded_n, grid.lengths())?;
        let map = (0..grid.len())
            .map(|flat| {
                if grid.is_nyquist(flat) {
                    None
                } else {
                    padded.flat_of(&grid.mode_of(flat))
                }
            })
            .collect();
        Ok(Dealiaser {
            grid: grid.clone(),
            padded,
            order,
            map,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn padded(&self) -> &Grid {
        &self.padded
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Padded coefficients of `f` (Nyquist dropped).
    pub fn pad(&self, f: &SpectralField) -> Result<SpectralField> {
        if !f.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let mut out = SpectralField::zeros(&self.padded);
        let dst = out.coeffs_mut();
        for (c, slot) in f.coeffs().iter().zip(&self.map) {
            if let Some(p) = slot {
                dst[*p] = *c;
            }
        }
        Ok(out)
    }

    /// Physical samples of `f` on the padded grid.
    pub fn lift(&self, f: &SpectralField) -> Result<Vec<Complex64>> {
        Ok(self.pad(f)?.to_physical())
    }

    /// Restriction of padded coefficients to the original lattice.
    pub fn truncate(&self, f: &SpectralField) -> SpectralField {
        debug_assert!(f.grid().same_as(&self.padded));
        let mut out = SpectralField::zeros(&self.grid);
        let src = f.coeffs();
        for (c, slot) in out.coeffs_mut().iter_mut().zip(&self.map) {
            if let Some(p) = slot {
                *c = src[*p];
            }
        }
        out
    }

    /// Field on the original lattice from padded physical samples.
    pub fn project(&self, samples: Vec<Complex64>) -> SpectralField {
        let padded = SpectralField::from_physical(&self.padded, samples).expect("padded sample count");
        self.truncate(&padded)
    }

    /// As [`project`](Self::project), keeping only the real part of the samples.
    pub fn project_real(&self, samples: Vec<Complex64>) -> SpectralField {
        let real = samples.into_iter().map(|c| Complex64::new(c.re, 0.0)).collect();
        self.project(real).real_part()
    }

    /// Product of `fs` computed on this padded grid.
    pub fn product(&self, fs: &[&SpectralField]) -> Result<SpectralField> {
        if fs.len() > self.order {
            return Err(Error::Param(format!(
                "{} factors exceed the padding order {}",
                fs.len(),
                self.order
            )));
        }
        let mut acc = vec![Complex64::new(1.0, 0.0); self.padded.len()];
        for f in fs {
            for (a, v) in acc.iter_mut().zip(self.lift(f)?) {
                *a *= v;
            }
        }
        Ok(self.project(acc))
    }
}

/// Exact product of band-limited fields via zero padding.
pub fn dealiased_product(fs: &[&SpectralField]) -> Result<SpectralField> {
    if fs.len() < 2 {
        return Err(Error::Param(format!("product needs at least 2 factors, got {}", fs.len())));
    }
    let grid = fs[0].grid();
    for f in &fs[1..] {
        fs[0].check_grid(f)?;
    }
    Dealiaser::new(grid, fs.len())?.product(fs)
}
