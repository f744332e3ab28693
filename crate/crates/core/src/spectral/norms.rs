use std::f64::consts::PI;

use num_complex::Complex64;

use super::field::SpectralField;
use crate::error::{Error, Result};

/// Largest admissible `2 w <xi>` at a populated mode.
pub const EXPONENT_LIMIT: f64 = 700.0;

/// Regularity index and analyticity weight of `H^l_w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    pub ell: f64,
    pub w: f64,
}

impl NormSpec {
    pub fn new(ell: f64, w: f64) -> Result<Self> {
        if !(ell >= 0.0 && w >= 0.0) {
            return Err(Error::Param(format!("norm index needs l >= 0 and w >= 0, got l={ell}, w={w}")));
        }
        Ok(NormSpec { ell, w })
    }
}

/// Linearly decaying weight `w(t) = w0 - M t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSchedule {
    pub w0: f64,
    pub m: f64,
}

impl WeightSchedule {
    pub fn new(w0: f64, m: f64) -> Result<Self> {
        if !(w0 > 0.0 && m > 0.0 && w0.is_finite() && m.is_finite()) {
            return Err(Error::Param(format!("weight schedule needs w0 > 0 and M > 0, got w0={w0}, M={m}")));
        }
        Ok(WeightSchedule { w0, m })
    }

    /// Time at which the weight reaches zero.
    pub fn horizon(&self) -> f64 {
        self.w0 / self.m
    }

    pub fn weight(&self, t: f64) -> Result<f64> {
        if t >= self.horizon() || t < 0.0 {
            return Err(Error::ScheduleExhausted {
                t,
                limit: self.horizon(),
            });
        }
        Ok(self.w0 - self.m * t)
    }
}

/// Per-mode weights `<xi>^{2l} e^{2 w <xi>}`, checking the exponent guard on
/// the populated modes of `fields`.
fn weights_for(fields: &[&SpectralField], spec: NormSpec) -> Result<Vec<f64>> {
    let brackets = fields[0].grid().brackets();
    for f in fields {
        for (b, c) in brackets.iter().zip(f.coeffs()) {
            let exponent = 2.0 * spec.w * b;
            if exponent > EXPONENT_LIMIT && (c.re != 0.0 || c.im != 0.0) {
                return Err(Error::Range {
                    exponent,
                    limit: EXPONENT_LIMIT,
                });
            }
        }
    }
    Ok(brackets
        .iter()
        .map(|b| {
            let exponent = (2.0 * spec.w * b).min(EXPONENT_LIMIT);
            b.powf(2.0 * spec.ell) * exponent.exp()
        })
        .collect())
}

/// `sum_m <xi>^{2l} e^{2 w <xi>} |f^(m)|^2`.
pub fn analytic_norm_sq(f: &SpectralField, spec: NormSpec) -> Result<f64> {
    let weights = weights_for(&[f], spec)?;
    Ok(weights.iter().zip(f.coeffs()).map(|(w, c)| w * c.norm_sqr()).sum())
}

/// `||f||_{H^l_w}`.
pub fn analytic_norm(f: &SpectralField, spec: NormSpec) -> Result<f64> {
    analytic_norm_sq(f, spec).map(f64::sqrt)
}

/// `(f, g)_{H^l_w} = sum_m <xi>^{2l} e^{2w<xi>} conj(f^(m)) g^(m)`.
pub fn inner_product(f: &SpectralField, g: &SpectralField, spec: NormSpec) -> Result<Complex64> {
    f.check_grid(g)?;
    let weights = weights_for(&[f, g], spec)?;
    Ok(weights
        .iter()
        .zip(f.coeffs().iter().zip(g.coeffs()))
        .map(|(w, (x, y))| x.conj() * y * w)
        .sum())
}

/// Running computation of the triple norm
///
/// ```text
/// |||psi|||_{l,t}^2 = max( sup_{s<=t} ||psi(s)||^2_{H^l_{w(s)}},
///                          2M int_0^t ||psi(s)||^2_{H^{l+1/2}_{w(s)}} ds )
/// ```
///
/// over samples pushed at `t = 0, h, 2h, ...` (trapezoid in time).
#[derive(Clone, Debug)]
pub struct TripleNorm {
    ell: f64,
    schedule: WeightSchedule,
    spacing: f64,
    count: usize,
    sup_sq: f64,
    integral: f64,
    last_half_sq: f64,
}

impl TripleNorm {
    pub fn new(ell: f64, schedule: WeightSchedule, spacing: f64) -> Self {
        TripleNorm {
            ell,
            schedule,
            spacing,
            count: 0,
            sup_sq: 0.0,
            integral: 0.0,
            last_half_sq: 0.0,
        }
    }

    /// Time of the next sample.
    pub fn next_time(&self) -> f64 {
        self.count as f64 * self.spacing
    }

    pub fn push(&mut self, f: &SpectralField) -> Result<()> {
        let t = self.next_time();
        let w = self.schedule.weight(t)?;
        let sq = analytic_norm_sq(f, NormSpec { ell: self.ell, w })?;
        let half_sq = analytic_norm_sq(f, NormSpec { ell: self.ell + 0.5, w })?;
        self.sup_sq = self.sup_sq.max(sq);
        if self.count > 0 {
            self.integral += 0.5 * self.spacing * (self.last_half_sq + half_sq);
        }
        self.last_half_sq = half_sq;
        self.count += 1;
        Ok(())
    }

    /// `sup_s ||psi(s)||^2_{H^l_{w(s)}}` so far.
    pub fn sup_part(&self) -> f64 {
        self.sup_sq
    }

    /// `2M int ||psi(s)||^2_{H^{l+1/2}_{w(s)}} ds` so far.
    pub fn integral_part(&self) -> f64 {
        2.0 * self.schedule.m * self.integral
    }

    pub fn value_sq(&self) -> f64 {
        self.sup_sq.max(2.0 * self.schedule.m * self.integral)
    }

    pub fn value(&self) -> f64 {
        self.value_sq().sqrt()
    }

    pub fn samples(&self) -> usize {
        self.count
    }
}

/// Triple norm of a uniformly sampled trajectory starting at `t = 0`.
pub fn triple_norm<'a>(
    samples: impl IntoIterator<Item = &'a SpectralField>,
    spacing: f64,
    ell: f64,
    schedule: WeightSchedule,
) -> Result<f64> {
    let mut acc = TripleNorm::new(ell, schedule, spacing);
    for f in samples {
        acc.push(f)?;
    }
    Ok(acc.value())
}

/// Upper bound on the bilinear constant
/// `C_{l,s} = 2^l (2 pi)^{-d/2} || <.>^{-s} ||_{l^2(Z^d)}`.
///
/// The lattice sum runs over the cube `|m_i| <= R`; the remainder is bounded
/// by `2 d 3^{d-1} R^{d-2s} / (2s - d)` (shell counting plus an integral
/// comparison), so the value never undershoots the true constant and is
/// nonincreasing in `R`.
pub fn bilinear_constant(ell: f64, s: f64, d: usize, truncation: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::Param("dimension must be at least 1".into()));
    }
    if s <= d as f64 / 2.0 {
        return Err(Error::Param(format!("bilinear constant needs s > d/2, got s={s}, d={d}")));
    }
    if truncation < 8 {
        return Err(Error::Param(format!("truncation radius must be >= 8, got {truncation}")));
    }
    if ell < 0.0 {
        return Err(Error::Param(format!("l must be >= 0, got {ell}")));
    }
    let sum = lattice_sum(s, d, truncation) + lattice_tail_bound(s, d, truncation);
    Ok(2f64.powf(ell) * (2.0 * PI).powf(-(d as f64) / 2.0) * sum.sqrt())
}

/// `sum_{|m_i| <= R} (1 + |m|^2)^{-s}`, folded onto the nonnegative orthant.
pub(crate) fn lattice_sum(s: f64, d: usize, r: usize) -> f64 {
    let integer = s.fract() == 0.0 && s <= i32::MAX as f64;
    let term = |x: f64| -> f64 {
        if integer {
            (1.0 / (1.0 + x)).powi(s as i32)
        } else {
            (1.0 + x).powf(-s)
        }
    };
    fn recurse(axis: usize, d: usize, r: usize, partial: f64, mult: f64, term: &dyn Fn(f64) -> f64) -> f64 {
        if axis == d - 1 {
            let mut acc = mult * term(partial);
            for k in 1..=r {
                let kf = k as f64;
                acc += 2.0 * mult * term(partial + kf * kf);
            }
            return acc;
        }
        let mut acc = recurse(axis + 1, d, r, partial, mult, term);
        for k in 1..=r {
            let kf = k as f64;
            acc += recurse(axis + 1, d, r, partial + kf * kf, 2.0 * mult, term);
        }
        acc
    }
    recurse(0, d, r, 0.0, 1.0, &term)
}

pub(crate) fn lattice_tail_bound(s: f64, d: usize, r: usize) -> f64 {
    let df = d as f64;
    2.0 * df * 3f64.powi(d as i32 - 1) * (r as f64).powf(df - 2.0 * s) / (2.0 * s - df)
}
