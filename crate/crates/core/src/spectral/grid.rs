use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Uniform collocation grid on a periodic box `prod_i [0, L_i)`.
///
/// Coefficients are stored row-major (last axis fastest) in FFT order along
/// each axis: index `k` holds mode `k` for `k < n/2` and `k - n` otherwise, so
/// every axis covers the centered lattice `{-n/2, ..., n/2 - 1}`.
#[derive(Clone)]
pub struct Grid(Arc<GridData>);

struct GridData {
    n: Vec<usize>,
    lengths: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
    /// Per-axis wavenumbers `2 pi m / L` in FFT order.
    axis_xi: Vec<Vec<f64>>,
    /// `<xi(m)>` for every flat index.
    bracket: Vec<f64>,
    /// Flat indices carrying a Nyquist component on some axis.
    nyquist: Vec<bool>,
}

impl Grid {
    pub fn new(n: &[usize], lengths: &[f64]) -> Result<Self> {
        if n.is_empty() {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if n.len() != lengths.len() {
            return Err(Error::InvalidGrid(format!(
                "{} sample counts but {} box lengths",
                n.len(),
                lengths.len()
            )));
        }
        for &ni in n {
            if ni < 4 || ni % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "sample counts must be even and >= 4, got {ni}"
                )));
            }
        }
        for &l in lengths {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("box length must be positive, got {l}")));
            }
        }
        let d = n.len();
        let mut strides = vec![1; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * n[i + 1];
        }
        let len: usize = n.iter().product();
        let axis_xi: Vec<Vec<f64>> = n
            .iter()
            .zip(lengths)
            .map(|(&ni, &l)| (0..ni).map(|k| 2.0 * PI * fft_mode(k, ni) as f64 / l).collect())
            .collect();

        let mut bracket = Vec::with_capacity(len);
        let mut nyquist = Vec::with_capacity(len);
        let mut idx = vec![0usize; d];
        for _ in 0..len {
            let mut sq = 0.0;
            let mut nyq = false;
            for axis in 0..d {
                let xi = axis_xi[axis][idx[axis]];
                sq += xi * xi;
                nyq |= idx[axis] == n[axis] / 2;
            }
            bracket.push((1.0 + sq).sqrt());
            nyquist.push(nyq);
            advance(&mut idx, n);
        }

        Ok(Grid(Arc::new(GridData {
            n: n.to_vec(),
            lengths: lengths.to_vec(),
            strides,
            len,
            axis_xi,
            bracket,
            nyquist,
        })))
    }

    /// The torus `(R / 2 pi Z)^d` sampled with `n_i` points per axis.
    pub fn torus(n: &[usize]) -> Result<Self> {
        Self::new(n, &vec![2.0 * PI; n.len()])
    }

    pub fn dim(&self) -> usize {
        self.0.n.len()
    }

    pub fn n(&self) -> &[usize] {
        &self.0.n
    }

    pub fn lengths(&self) -> &[f64] {
        &self.0.lengths
    }

    /// Total number of lattice points.
    pub fn len(&self) -> usize {
        self.0.len
    }

    pub fn is_empty(&self) -> bool {
        self.0.len == 0
    }

    pub fn is_torus(&self) -> bool {
        self.0.lengths.iter().all(|&l| (l - 2.0 * PI).abs() < 1e-14)
    }

    /// Cell volume `prod L_i / n_i`.
    pub fn cell_volume(&self) -> f64 {
        self.0.n.iter().zip(&self.0.lengths).map(|(&n, &l)| l / n as f64).product()
    }

    /// Box volume `prod L_i`.
    pub fn volume(&self) -> f64 {
        self.0.lengths.iter().product()
    }

    /// Wavenumbers of one axis, FFT order.
    pub fn axis_wavenumbers(&self, axis: usize) -> &[f64] {
        &self.0.axis_xi[axis]
    }

    /// `<xi(m)> = sqrt(1 + |xi|^2)` per flat index.
    pub fn brackets(&self) -> &[f64] {
        &self.0.bracket
    }

    pub fn is_nyquist(&self, flat: usize) -> bool {
        self.0.nyquist[flat]
    }

    pub fn nyquist_mask(&self) -> &[bool] {
        &self.0.nyquist
    }

    /// Integer mode of every axis at a flat index.
    pub fn mode_of(&self, flat: usize) -> Vec<i64> {
        let mut rest = flat;
        self.0
            .n
            .iter()
            .zip(&self.0.strides)
            .map(|(&ni, &s)| {
                let k = rest / s;
                rest %= s;
                fft_mode(k, ni)
            })
            .collect()
    }

    /// Flat index of an integer mode, if it lies on the centered lattice.
    pub fn flat_of(&self, mode: &[i64]) -> Option<usize> {
        if mode.len() != self.dim() {
            return None;
        }
        let mut flat = 0;
        for ((&m, &ni), &s) in mode.iter().zip(&self.0.n).zip(&self.0.strides) {
            let half = (ni / 2) as i64;
            if m < -half || m >= half {
                return None;
            }
            let k = if m >= 0 { m as usize } else { (m + ni as i64) as usize };
            flat += k * s;
        }
        Some(flat)
    }

    /// Wavevector of a flat index.
    pub fn wavevector(&self, flat: usize) -> Vec<f64> {
        let mut rest = flat;
        (0..self.dim())
            .map(|axis| {
                let s = self.0.strides[axis];
                let k = rest / s;
                rest %= s;
                self.0.axis_xi[axis][k]
            })
            .collect()
    }

    /// Flat index of the mode `-m` for the mode at `flat`, or `None` when
    /// `-m` falls off the lattice (Nyquist components).
    pub fn negated(&self, flat: usize) -> Option<usize> {
        let mut rest = flat;
        let mut out = 0;
        for (&ni, &s) in self.0.n.iter().zip(&self.0.strides) {
            let k = rest / s;
            rest %= s;
            if k == ni / 2 {
                return None;
            }
            out += ((ni - k) % ni) * s;
        }
        Some(out)
    }

    /// Physical coordinates `y_k = k L / n` of one axis.
    pub fn axis_points(&self, axis: usize) -> Vec<f64> {
        let n = self.0.n[axis];
        let l = self.0.lengths[axis];
        (0..n).map(|k| k as f64 * l / n as f64).collect()
    }

    /// Physical point of a flat sample index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut rest = flat;
        (0..self.dim())
            .map(|axis| {
                let s = self.0.strides[axis];
                let k = rest / s;
                rest %= s;
                k as f64 * self.0.lengths[axis] / self.0.n[axis] as f64
            })
            .collect()
    }

    /// Same box, more samples (used for zero-padded products).
    pub fn refined(&self, n: &[usize]) -> Result<Self> {
        Grid::new(n, &self.0.lengths)
    }

    pub(crate) fn strides(&self) -> &[usize] {
        &self.0.strides
    }

    pub(crate) fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self == other
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.0.n == other.0.n && self.0.lengths == other.0.lengths
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.0.n)
            .field("lengths", &self.0.lengths)
            .finish()
    }
}

pub(crate) fn fft_mode(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Row-major odometer over a multi-index.
pub(crate) fn advance(idx: &mut [usize], n: &[usize]) {
    for axis in (0..idx.len()).rev() {
        idx[axis] += 1;
        if idx[axis] < n[axis] {
            return;
        }
        idx[axis] = 0;
    }
}
