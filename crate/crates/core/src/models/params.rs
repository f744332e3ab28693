use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::spectral::{analytic_norm_sq, NormSpec, SpectralField, SymMatrix, WeightSchedule};

/// One nonlocal term `weight * (K * |u|^{2 sigma}) u`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlocalTerm {
    pub sigma: u32,
    pub kernel: KernelSpec,
    pub weight: f64,
}

impl NonlocalTerm {
    pub fn new(sigma: u32, kernel: KernelSpec, weight: f64) -> Self {
        NonlocalTerm { sigma, kernel, weight }
    }
}

/// External potential.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Zero,
    Static(SpectralField),
    /// Fields at increasing times, interpolated linearly and held constant
    /// outside the stamped range.
    TimeStamped(Vec<(f64, SpectralField)>),
}

impl Potential {
    pub fn time_stamped(mut stamps: Vec<(f64, SpectralField)>) -> Result<Self> {
        if stamps.is_empty() {
            return Err(Error::Param("time-stamped potential needs at least one field".into()));
        }
        stamps.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in stamps.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Param(format!("duplicate potential time stamp {}", w[0].0)));
            }
            w[0].1.check_grid(&w[1].1)?;
        }
        Ok(Potential::TimeStamped(stamps))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Static(v) => v.max_abs() == 0.0,
            Potential::TimeStamped(s) => s.iter().all(|(_, v)| v.max_abs() == 0.0),
        }
    }

    fn fields(&self) -> Vec<&SpectralField> {
        match self {
            Potential::Zero => Vec::new(),
            Potential::Static(v) => vec![v],
            Potential::TimeStamped(s) => s.iter().map(|(_, v)| v).collect(),
        }
    }

    /// `V(t)`, or `None` for the zero potential.
    pub fn at(&self, t: f64) -> Option<SpectralField> {
        match self {
            Potential::Zero => None,
            Potential::Static(v) => Some(v.clone()),
            Potential::TimeStamped(stamps) => {
                let first = &stamps[0];
                let last = &stamps[stamps.len() - 1];
                if t <= first.0 {
                    return Some(first.1.clone());
                }
                if t >= last.0 {
                    return Some(last.1.clone());
                }
                let k = stamps.partition_point(|(s, _)| *s <= t);
                let (t0, v0) = &stamps[k - 1];
                let (t1, v1) = &stamps[k];
                let theta = (t - t0) / (t1 - t0);
                let mut out = v0.scaled((1.0 - theta).into());
                out.axpy(theta.into(), v1);
                Some(out)
            }
        }
    }

    /// `||V||_{L^2(0,T0; H^{l}_{w})}`, trapezoid over the stamps (exact for
    /// a static potential).
    pub fn l2_time_norm(&self, ell: f64, w: f64, t0: f64) -> Result<f64> {
        let spec = NormSpec::new(ell, w)?;
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Static(v) => Ok((t0 * analytic_norm_sq(v, spec)?).sqrt()),
            Potential::TimeStamped(_) => {
                let nodes = 256;
                let h = t0 / nodes as f64;
                let mut acc = 0.0;
                for k in 0..=nodes {
                    let v = self.at(k as f64 * h).expect("nonzero potential");
                    let weight = if k == 0 || k == nodes { 0.5 } else { 1.0 };
                    acc += weight * h * analytic_norm_sq(&v, spec)?;
                }
                Ok(acc.sqrt())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        for v in self.fields() {
            let asym = v.conjugate_asymmetry();
            if asym > crate::kernels::REALNESS_TOL {
                return Err(Error::NotReal(asym).context("potential"));
            }
        }
        Ok(())
    }
}

/// All model symbols: `D^2 = <grad, H grad>`, `beta`, `g(s) = alpha s^gamma`,
/// the nonlocal terms, `V`, `epsilon`, the regularity index and the weight
/// schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub h: SymMatrix,
    pub beta: Vec<f64>,
    pub alpha: f64,
    pub gamma: u32,
    pub nonlocal: Vec<NonlocalTerm>,
    pub potential: Potential,
    pub epsilon: f64,
    pub ell: f64,
    pub w0: f64,
    /// Decay rate of the weight; `None` until selected.
    pub m: Option<f64>,
}

impl ModelParams {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.beta.len() != d {
            return Err(Error::Param(format!("beta has {} entries, expected {d}", self.beta.len())));
        }
        if self.beta.iter().any(|b| !b.is_finite()) || !self.alpha.is_finite() {
            return Err(Error::Param("alpha and beta must be finite".into()));
        }
        if self.gamma < 1 {
            return Err(Error::Param("gamma must be >= 1".into()));
        }
        for term in &self.nonlocal {
            if term.sigma < 1 {
                return Err(Error::Param("every sigma must be >= 1".into()));
            }
            if !term.weight.is_finite() {
                return Err(Error::Param("kernel weights must be finite".into()));
            }
            term.kernel.validate(d)?;
        }
        if !(self.ell > (d as f64 + 1.0) / 2.0) {
            return Err(Error::Param(format!("l must exceed (d+1)/2 = {}, got {}", (d as f64 + 1.0) / 2.0, self.ell)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Param(format!("epsilon must lie in [0, 1], got {}", self.epsilon)));
        }
        if !(self.w0 > 0.0 && self.w0.is_finite()) {
            return Err(Error::Param(format!("w0 must be positive, got {}", self.w0)));
        }
        if let Some(m) = self.m {
            WeightSchedule::new(self.w0, m)?;
        }
        self.potential.validate()
    }

    pub fn schedule(&self) -> Result<WeightSchedule> {
        let m = self
            .m
            .ok_or_else(|| Error::Param("decay rate M has not been selected".into()))?;
        WeightSchedule::new(self.w0, m)
    }

    pub fn sigma_max(&self) -> u32 {
        self.nonlocal.iter().map(|t| t.sigma).max().unwrap_or(0)
    }

    /// Largest number of factors in any nonlinear product of the model.
    pub fn product_order(&self) -> usize {
        let s = self.sigma_max() as usize;
        let g = self.gamma as usize;
        (2 * s + 1).max(2 * g + 1).max(2)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        ModelParams {
            epsilon,
            ..self.clone()
        }
    }
}
