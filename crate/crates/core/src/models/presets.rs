use super::params::{ModelParams, NonlocalTerm, Potential};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::spectral::SymMatrix;

/// Built-in model families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// `i psi_t + (1/2)(psi_11 - psi_22) +- |psi|^2 psi = 0` in 2D.
    HyperbolicNls,
    /// Davey-Stewartson II written with the multiplier `xi_1^2 / |xi|^2`.
    DaveyStewartson2,
    /// Linear Schrödinger, `H = I`, no nonlinearity.
    Free,
    Custom,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "hyperbolic-nls" => Ok(Preset::HyperbolicNls),
            "davey-stewartson-2" => Ok(Preset::DaveyStewartson2),
            "free" => Ok(Preset::Free),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::Param(format!("unknown preset '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::HyperbolicNls => "hyperbolic-nls",
            Preset::DaveyStewartson2 => "davey-stewartson-2",
            Preset::Free => "free",
            Preset::Custom => "custom",
        }
    }
}

fn base(h: SymMatrix, ell: f64, w0: f64) -> ModelParams {
    let d = h.dim();
    ModelParams {
        h,
        beta: vec![0.0; d],
        alpha: 1.0,
        gamma: 1,
        nonlocal: Vec::new(),
        potential: Potential::Zero,
        epsilon: 0.0,
        ell,
        w0,
        m: None,
    }
}

/// Hyperbolic cubic NLS on a 2D box. `sign = +1` is the `+|psi|^2 psi`
/// equation, which is the nonlocal weight `-1` (identity kernel, sigma 1).
pub fn hyperbolic_nls(sign: f64, ell: f64, w0: f64) -> ModelParams {
    let mut p = base(SymMatrix::diag(&[1.0, -1.0]), ell, w0);
    p.nonlocal = vec![NonlocalTerm::new(1, KernelSpec::Identity, -sign.signum())];
    p
}

/// Davey-Stewartson II: `(chi |psi|^2 + omega K * |psi|^2) psi` on the
/// right-hand side. `chi` and `omega` are the weights of the identity and
/// Davey-Stewartson kernels; `integrable` forces `omega = -2 chi`.
pub fn davey_stewartson(chi: f64, omega: f64, integrable: bool, ell: f64, w0: f64) -> ModelParams {
    let omega = if integrable { -2.0 * chi } else { omega };
    let mut p = base(SymMatrix::diag(&[1.0, -1.0]), ell, w0);
    p.nonlocal = vec![
        NonlocalTerm::new(1, KernelSpec::Identity, chi),
        NonlocalTerm::new(1, KernelSpec::DaveyStewartson { p: 0, q: 1 }, omega),
    ];
    p
}

/// Linear Schrödinger in dimension `d`.
pub fn free(d: usize, ell: f64, w0: f64) -> ModelParams {
    let mut p = base(SymMatrix::identity(d), ell, w0);
    p.alpha = 0.0;
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names_round_trip() {
        for p in [Preset::HyperbolicNls, Preset::DaveyStewartson2, Preset::Free, Preset::Custom] {
            assert_eq!(Preset::parse(p.name()).unwrap(), p);
        }
        assert!(Preset::parse("elliptic").is_err());
    }

    #[test]
    fn integrable_flag_sets_omega() {
        let p = davey_stewartson(1.5, 9.0, true, 2.0, 1.0);
        assert_eq!(p.nonlocal[1].weight, -3.0);
        assert_eq!(2.0 * p.nonlocal[0].weight + p.nonlocal[1].weight, 0.0);
        let q = davey_stewartson(1.5, 9.0, false, 2.0, 1.0);
        assert_eq!(q.nonlocal[1].weight, 9.0);
    }

    #[test]
    fn hyperbolic_sign_maps_to_weight() {
        assert_eq!(hyperbolic_nls(1.0, 2.0, 1.0).nonlocal[0].weight, -1.0);
        assert_eq!(hyperbolic_nls(-1.0, 2.0, 1.0).nonlocal[0].weight, 1.0);
        assert!(hyperbolic_nls(1.0, 2.0, 1.0).validate().is_ok());
    }
}
