use crate::error::{Error, Result};
use crate::models::{GrenierState, WkbData};

/// Inputs of the decay-rate selection. Norms are taken at the regularity
/// index the estimates are run at: `phi0` in `H^{l+1}_{w0}`, `a0` in
/// `H^l_{w0}` and `v` in `L^2_{T0} H^{l+1/2}_{w0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MInputs {
    pub phi0: f64,
    pub a0: f64,
    pub v: f64,
    pub sigmas: Vec<u32>,
    pub gamma: u32,
    /// Bilinear constant.
    pub c: f64,
    pub safety: f64,
    pub w0: f64,
    /// Horizon of the potential, `T0`.
    pub t0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MSelection {
    /// Smallest admissible decay rate.
    pub m_min: f64,
    /// `safety * m_min`.
    pub m: f64,
    /// `min(w0 / M, T0)`; horizons must stay below it.
    pub horizon_cap: f64,
}

impl MSelection {
    /// `fraction * min(w0 / M, T0)`.
    pub fn horizon(&self, fraction: f64) -> f64 {
        fraction * self.horizon_cap
    }
}

/// Left-hand side minus right-hand side of the phase condition
/// `4 |phi0|^2 + (8C^2/M^2) max_j (2|a0|^2)^{2 sigma_j} + (16C^2/M)|V|^2 <= M^2/(16C^2)`.
pub fn phase_condition_defect(inputs: &MInputs, m: f64) -> f64 {
    let c2 = inputs.c * inputs.c;
    let two_a = 2.0 * inputs.a0 * inputs.a0;
    let amp = inputs
        .sigmas
        .iter()
        .map(|&s| two_a.powi(2 * s as i32))
        .fold(0.0, f64::max);
    let v2 = inputs.v * inputs.v;
    let mut lhs = 4.0 * inputs.phi0 * inputs.phi0;
    if amp > 0.0 {
        lhs += 8.0 * c2 / (m * m) * amp;
    }
    if v2 > 0.0 {
        lhs += 16.0 * c2 / m * v2;
    }
    lhs - m * m / (16.0 * c2)
}

/// Smallest `M` satisfying both conditions (bisection on the phase
/// condition, closed form for `(2|a0|^2)^gamma <= M / (4C)`), times `safety`.
pub fn select_m(inputs: &MInputs) -> Result<MSelection> {
    let MInputs { c, safety, w0, t0, .. } = *inputs;
    for (name, v) in [("C", c), ("w0", w0), ("T0", t0)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Param(format!("{name} must be positive, got {v}")));
        }
    }
    if !(safety >= 1.0 && safety.is_finite()) {
        return Err(Error::Param(format!("safety factor must be >= 1, got {safety}")));
    }
    if [inputs.phi0, inputs.a0, inputs.v].iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Param("data norms must be finite and nonnegative".into()));
    }
    let amplitude = 4.0 * c * (2.0 * inputs.a0 * inputs.a0).powi(inputs.gamma as i32);
    let f = |m: f64| phase_condition_defect(inputs, m);
    let root = if f(f64::MIN_POSITIVE.sqrt()) <= 0.0 {
        0.0
    } else {
        let mut hi = 1.0;
        while f(hi) > 0.0 {
            hi *= 2.0;
        }
        let mut lo = hi / 2.0;
        while f(lo) <= 0.0 && lo > 1e-300 {
            lo /= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    };
    let m_min = root.max(amplitude);
    if m_min == 0.0 {
        return Err(Error::Param("zero data admit every decay rate; set M explicitly".into()));
    }
    let m = safety * m_min;
    Ok(MSelection {
        m_min,
        m,
        horizon_cap: (w0 / m).min(t0),
    })
}

/// `(phi0 + eps phi10, a0 + eps a10)`.
pub fn well_prepared_data(data: &WkbData, epsilon: f64) -> Result<GrenierState> {
    data.phi0.check_grid(&data.phi10)?;
    data.a0.check_grid(&data.a10)?;
    data.phi0.check_grid(&data.a0)?;
    let mut phi = data.phi0.clone();
    phi.axpy(epsilon.into(), &data.phi10);
    let mut a = data.a0.clone();
    a.axpy(epsilon.into(), &data.a10);
    GrenierState::new(phi, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{default_data, DataNorms};
    use crate::spectral::{analytic_norm, Grid, NormSpec, SpectralField};

    fn inputs(phi0: f64, a0: f64) -> MInputs {
        MInputs {
            phi0,
            a0,
            v: 0.0,
            sigmas: vec![1],
            gamma: 1,
            c: 2.5,
            safety: 1.0,
            w0: 1.0,
            t0: 0.5,
        }
    }

    #[test]
    fn zero_amplitude_gives_closed_form() {
        let mut i = inputs(0.7, 0.0);
        let sel = select_m(&i).unwrap();
        assert!((sel.m - 8.0 * 2.5 * 0.7).abs() < 1e-12 * sel.m);
        i.safety = 4.0;
        let sel4 = select_m(&i).unwrap();
        assert!((sel4.m - 4.0 * 8.0 * 2.5 * 0.7).abs() < 1e-12 * sel4.m);
        assert_eq!(sel4.horizon_cap, (1.0 / sel4.m).min(0.5));
    }

    #[test]
    fn zero_phase_root_satisfies_conditions() {
        let i = inputs(0.0, 0.6);
        let sel = select_m(&i).unwrap();
        assert!(phase_condition_defect(&i, sel.m) <= 1e-12);
        assert!((2.0f64 * 0.36) <= sel.m / (4.0 * 2.5) + 1e-12);
        // minimality: any smaller M violates one of the two conditions
        let smaller = sel.m * (1.0 - 1e-9);
        assert!(phase_condition_defect(&i, smaller) > 0.0 || 2.0 * 0.36 > smaller / 10.0);
        // the phase branch has the closed form M^4 = 128 C^4 (2|a0|^2)^2
        let phase_root = (128.0f64).powf(0.25) * 2.5 * (2.0f64 * 0.36).sqrt();
        assert!((sel.m - phase_root.max(4.0 * 2.5 * 0.72)).abs() < 1e-10 * sel.m);
    }

    #[test]
    fn monotone_in_amplitude() {
        for k in 0..20 {
            let a = 0.01 * 1.5f64.powi(k);
            let m = select_m(&inputs(0.3, a)).unwrap().m;
            let m2 = select_m(&inputs(0.3, 2.0 * a)).unwrap().m;
            assert!(m2 >= m, "{a}: {m} > {m2}");
        }
    }

    #[test]
    fn rejects_bad_inputs_and_zero_data() {
        let mut i = inputs(0.3, 0.3);
        i.safety = 0.5;
        assert!(select_m(&i).is_err());
        assert!(select_m(&inputs(0.0, 0.0)).is_err());
    }

    #[test]
    fn well_prepared_data_has_zero_second_order_defect() {
        let g = Grid::torus(&[16, 16]).unwrap();
        let norms = DataNorms {
            phi0: 0.4,
            a0: 0.5,
            phi10: 0.2,
            a10: 0.1,
        };
        let data = default_data(&g, 3, 2.0, 1.0, norms, 3).unwrap();
        let s0 = well_prepared_data(&data, 0.0).unwrap();
        assert_eq!((s0.phi.clone(), s0.a.clone()), (data.phi0.clone(), data.a0.clone()));
        let eps = 0.125;
        let s = well_prepared_data(&data, eps).unwrap();
        let mut defect = &s.phi - &data.phi0;
        defect.axpy((-eps).into(), &data.phi10);
        let spec = NormSpec::new(3.0, 1.0).unwrap();
        let r1 = analytic_norm(&defect, spec).unwrap();
        assert!(r1 < 1e-15 * analytic_norm(&data.phi0, spec).unwrap(), "{r1}");
        let mut still = data.clone();
        still.phi10 = SpectralField::zeros(&g);
        still.a10 = SpectralField::zeros(&g);
        assert_eq!(well_prepared_data(&still, 0.5).unwrap(), well_prepared_data(&still, 0.25).unwrap());
    }
}
