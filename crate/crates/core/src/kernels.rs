//! Nonlocal kernels realized as bounded, even Fourier multipliers.
//!
//! The term `K * rho` is defined as `symbol(xi) rho^(xi)` on coefficients,
//! so `Identity` is exactly the local case `K = delta`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// Relative conjugate asymmetry tolerated for a real density.
pub const REALNESS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    Identity,
    Zero,
    /// `xi_p^2 / (xi_p^2 + xi_q^2)`, 0 where both vanish. Axes are 0-based.
    DaveyStewartson { p: usize, q: usize },
    Tabulated(Arc<KernelTable>),
}

/// Real even symbol stored on a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable {
    grid: Grid,
    values: Vec<f64>,
    source: String,
}

impl KernelTable {
    /// Table from a field whose coefficients are the symbol values.
    pub fn from_field(field: &SpectralField, source: impl Into<String>) -> Result<Self> {
        let grid = field.grid().clone();
        let mut values = Vec::with_capacity(grid.len());
        for c in field.coeffs() {
            if c.im != 0.0 || !c.re.is_finite() {
                return Err(Error::Param(format!("tabulated symbol must be real and finite, found {c}")));
            }
            values.push(c.re);
        }
        for flat in 0..grid.len() {
            if let Some(neg) = grid.negated(flat) {
                if values[neg] != values[flat] {
                    return Err(Error::Param(format!(
                        "tabulated symbol is not even at mode {:?}",
                        grid.mode_of(flat)
                    )));
                }
            }
        }
        Ok(KernelTable {
            grid,
            values,
            source: source.into(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn lookup(&self, xi: &[f64]) -> Result<f64> {
        let outside = || Error::OutsideTable(xi.to_vec());
        if xi.len() != self.grid.dim() {
            return Err(outside());
        }
        let mut mode = Vec::with_capacity(xi.len());
        for (x, l) in xi.iter().zip(self.grid.lengths()) {
            let m = x * l / (2.0 * PI);
            let r = m.round();
            if (m - r).abs() > 1e-9 * (1.0 + r.abs()) {
                return Err(outside());
            }
            mode.push(r as i64);
        }
        self.grid.flat_of(&mode).map(|f| self.values[f]).ok_or_else(outside)
    }
}

impl KernelSpec {
    pub fn tabulated(field: &SpectralField, source: impl Into<String>) -> Result<Self> {
        Ok(KernelSpec::Tabulated(Arc::new(KernelTable::from_field(field, source)?)))
    }

    /// Checks axis indices against the dimension.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            KernelSpec::DaveyStewartson { p, q } => {
                for &axis in [p, q] {
                    if axis >= d {
                        return Err(Error::Axis { axis, dim: d });
                    }
                }
                if p == q {
                    return Err(Error::Param("Davey-Stewartson kernel needs two distinct axes".into()));
                }
                Ok(())
            }
            KernelSpec::Tabulated(t) if t.grid.dim() != d => Err(Error::Param(format!(
                "tabulated kernel has dimension {}, model has {d}",
                t.grid.dim()
            ))),
            _ => Ok(()),
        }
    }
}

/// Symbol value at the wavevector `xi`.
pub fn kernel_symbol(spec: &KernelSpec, xi: &[f64]) -> Result<f64> {
    match spec {
        KernelSpec::Identity => Ok(1.0),
        KernelSpec::Zero => Ok(0.0),
        KernelSpec::DaveyStewartson { p, q } => {
            let dim = xi.len();
            if *p >= dim || *q >= dim {
                return Err(Error::Axis { axis: (*p).max(*q), dim });
            }
            let num = xi[*p] * xi[*p];
            let den = num + xi[*q] * xi[*q];
            Ok(if den == 0.0 { 0.0 } else { num / den })
        }
        KernelSpec::Tabulated(table) => table.lookup(xi),
    }
}

/// Symbol on every mode of `grid`.
pub fn symbol_on(spec: &KernelSpec, grid: &Grid) -> Result<Vec<f64>> {
    (0..grid.len()).map(|flat| kernel_symbol(spec, &grid.wavevector(flat))).collect()
}

/// `sup |symbol|` over the lattice of `grid`.
pub fn symbol_bound(spec: &KernelSpec, grid: &Grid) -> Result<f64> {
    Ok(symbol_on(spec, grid)?.iter().fold(0.0, |acc, v| acc.max(v.abs())))
}

/// `K * rho` for a real density `rho`.
pub fn apply_kernel(spec: &KernelSpec, rho: &SpectralField) -> Result<SpectralField> {
    let asym = rho.conjugate_asymmetry();
    if asym > REALNESS_TOL {
        return Err(Error::NotReal(asym));
    }
    let symbol = symbol_on(spec, rho.grid())?;
    let mut out = rho.clone();
    out.apply_real_multiplier(&symbol);
    Ok(out)
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Identity => write!(f, "identity"),
            KernelSpec::Zero => write!(f, "zero"),
            KernelSpec::DaveyStewartson { p, q } => write!(f, "ds({},{})", p + 1, q + 1),
            KernelSpec::Tabulated(t) => write!(f, "table({})", t.source),
        }
    }
}
