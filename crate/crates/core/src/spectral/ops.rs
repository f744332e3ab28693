use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::Grid;
use crate::error::{Error, Result};

/// Symmetric real `d x d` matrix (the `H` of `D^2 = <grad, H grad>`).
///
/// Not required to be definite or invertible.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    d: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Row-major entries; rejected unless exactly symmetric.
    pub fn new(d: usize, entries: Vec<f64>) -> Result<Self> {
        if d == 0 || entries.len() != d * d {
            return Err(Error::Param(format!("matrix needs {} entries, got {}", d * d, entries.len())));
        }
        for i in 0..d {
            for j in 0..i {
                if entries[i * d + j] != entries[j * d + i] {
                    return Err(Error::Param(format!(
                        "matrix is not symmetric at ({i},{j}): {} vs {}",
                        entries[i * d + j],
                        entries[j * d + i]
                    )));
                }
            }
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Param("matrix entries must be finite".into()));
        }
        Ok(SymMatrix { d, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Param("matrix must be square".into()));
        }
        Self::new(d, rows.concat())
    }

    pub fn diag(values: &[f64]) -> Self {
        let d = values.len();
        let mut entries = vec![0.0; d * d];
        for (i, v) in values.iter().enumerate() {
            entries[i * d + i] = *v;
        }
        SymMatrix { d, entries }
    }

    pub fn identity(d: usize) -> Self {
        Self::diag(&vec![1.0; d])
    }

    pub fn zeros(d: usize) -> Self {
        SymMatrix {
            d,
            entries: vec![0.0; d * d],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0.0)
    }

    /// Spectral norm bound `max_i sum_j |h_ij|`.
    pub fn row_sum_norm(&self) -> f64 {
        (0..self.d)
            .map(|i| (0..self.d).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `<u, H v>`.
    pub fn quad(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                acc += u[i] * self.get(i, j) * v[j];
            }
        }
        acc
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// `d_j f`: multiplies coefficients by `i xi_j(m)`. Axes are 0-based.
pub fn partial_derivative(f: &SpectralField, axis: usize) -> Result<SpectralField> {
    let grid = f.grid();
    if axis >= grid.dim() {
        return Err(Error::Axis { axis, dim: grid.dim() });
    }
    let mut out = f.clone();
    let xi = grid.axis_wavenumbers(axis);
    let n_axis = grid.n()[axis];
    let stride = grid.strides()[axis];
    for (flat, c) in out.coeffs_mut().iter_mut().enumerate() {
        let k = (flat / stride) % n_axis;
        *c *= Complex64::new(0.0, xi[k]);
    }
    Ok(out)
}

/// Gradient, one field per axis.
pub fn gradient(f: &SpectralField) -> Vec<SpectralField> {
    (0..f.grid().dim())
        .map(|j| partial_derivative(f, j).expect("axis in range"))
        .collect()
}

/// Symbol `-<xi, H xi>` of `D^2` on every lattice mode.
pub fn d2_symbol(grid: &Grid, h: &SymMatrix) -> Result<Vec<f64>> {
    if h.dim() != grid.dim() {
        return Err(Error::Param(format!(
            "matrix dimension {} does not match grid dimension {}",
            h.dim(),
            grid.dim()
        )));
    }
    Ok((0..grid.len())
        .map(|flat| {
            let xi = grid.wavevector(flat);
            -h.quad(&xi, &xi)
        })
        .collect())
}

/// `D^2 f = <grad, H grad> f`.
pub fn apply_d2(f: &SpectralField, h: &SymMatrix) -> Result<SpectralField> {
    let symbol = d2_symbol(f.grid(), h)?;
    let mut out = f.clone();
    out.apply_real_multiplier(&symbol);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    #[test]
    fn symmetric_matrix_validation() {
        assert!(SymMatrix::new(2, vec![1.0, 2.0, 3.0, 1.0]).is_err());
        assert!(SymMatrix::new(2, vec![1.0, 2.0, 2.0, -1.0]).is_ok());
        assert!(SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0]]).is_err());
    }

    #[test]
    fn derivative_of_exponential_and_constant() {
        let g = Grid::torus(&[8]).unwrap();
        let e = SpectralField::plane_wave(&g, &[1]).unwrap();
        let de = partial_derivative(&e, 0).unwrap();
        let want = e.scaled(Complex64::new(0.0, 1.0));
        assert_eq!(de, want);
        let c = SpectralField::constant(&g, Complex64::new(3.0, 0.0));
        assert!(partial_derivative(&c, 0).unwrap().max_abs() == 0.0);
        assert_eq!(partial_derivative(&c, 1), Err(Error::Axis { axis: 1, dim: 1 }));
    }

    #[test]
    fn derivative_of_sine_matches_closed_form() {
        let g = Grid::torus(&[16, 8]).unwrap();
        let f = SpectralField::from_fn(&g, |y| Complex64::new((2.0 * y[0]).sin(), 0.0));
        let df = partial_derivative(&f, 0).unwrap().to_physical();
        for (k, v) in df.iter().enumerate() {
            let y = g.point(k);
            assert!((v - Complex64::new(2.0 * (2.0 * y[0]).cos(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn hyperbolic_d2_annihilates_diagonal_mode() {
        let g = Grid::torus(&[8, 8]).unwrap();
        let h = SymMatrix::diag(&[1.0, -1.0]);
        let f = SpectralField::plane_wave(&g, &[1, 1]).unwrap();
        assert_eq!(apply_d2(&f, &h).unwrap().max_abs(), 0.0);
        let e = SpectralField::plane_wave(&g, &[1, 0]).unwrap();
        let out = apply_d2(&e, &SymMatrix::identity(2)).unwrap();
        assert_eq!(out, -&e);
    }

    #[test]
    fn d2_matches_composed_derivatives() {
        let g = Grid::new(&[8, 8], &[6.0, 5.0]).unwrap();
        let mut rng = CounterRng::new(21);
        let mut f = SpectralField::zeros(&g);
        for flat in 0..g.len() {
            if !g.is_nyquist(flat) {
                f.coeffs_mut()[flat] = rng.complex_normal();
            }
        }
        let a = rng.normal();
        let b = rng.normal();
        let c = rng.normal();
        let h = SymMatrix::new(2, vec![a, b, b, c]).unwrap();
        let direct = apply_d2(&f, &h).unwrap();
        let mut oracle = SpectralField::zeros(&g);
        for j in 0..2 {
            for k in 0..2 {
                let djk = partial_derivative(&partial_derivative(&f, k).unwrap(), j).unwrap();
                oracle.axpy(Complex64::new(h.get(j, k), 0.0), &djk);
            }
        }
        let scale = oracle.max_abs();
        for (x, y) in direct.coeffs().iter().zip(oracle.coeffs()) {
            assert!((x - y).norm() <= 1e-12 * scale);
        }
    }
}
