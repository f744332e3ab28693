//! Constructive iteration for the Grenier system: each iterate solves the
//! linear frozen-coefficient system built from the previous one, starting
//! from the time-independent initial pair.

use crate::error::{Error, Result};
use crate::models::{GrenierState, Model};
use crate::spectral::{analytic_norm_sq, NormSpec, SpectralField, TripleNorm, WeightSchedule};
use crate::stepping::{integrate_with, Evolution, GrenierEvolution, StepPlan, Trajectory};

/// Triple norms `(|||phi|||_{l+1,T}, |||a|||_{l,T})` of a recorded pair.
pub fn pair_triple_norms(traj: &Trajectory<GrenierState>, ell: f64, schedule: WeightSchedule) -> Result<(f64, f64)> {
    let mut phi = TripleNorm::new(ell + 1.0, schedule, traj.spacing);
    let mut a = TripleNorm::new(ell, schedule, traj.spacing);
    for s in &traj.samples {
        phi.push(&s.phi)?;
        a.push(&s.a)?;
    }
    Ok((phi.value(), a.value()))
}

/// Pointwise-in-time difference of two trajectories on the same time grid.
pub fn difference(x: &Trajectory<GrenierState>, y: &Trajectory<GrenierState>) -> Result<Trajectory<GrenierState>> {
    if x.len() != y.len() || (x.spacing - y.spacing).abs() > 1e-14 * x.spacing {
        return Err(Error::Param("trajectories are not on the same time grid".into()));
    }
    let samples = x
        .samples
        .iter()
        .zip(&y.samples)
        .map(|(p, q)| {
            p.phi.check_grid(&q.phi)?;
            Ok(GrenierState {
                phi: &p.phi - &q.phi,
                a: &p.a - &q.a,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        dt: x.dt,
        spacing: x.spacing,
        samples,
        diagnostics: Vec::new(),
    })
}

/// `|||phi|||_{l+1,T} + |||a|||_{l,T}` of `x - y`.
pub fn x_distance(x: &Trajectory<GrenierState>, y: &Trajectory<GrenierState>, ell: f64, schedule: WeightSchedule) -> Result<f64> {
    let (p, a) = pair_triple_norms(&difference(x, y)?, ell, schedule)?;
    Ok(p + a)
}

/// Frozen-coefficient linear system for the next iterate.
pub struct PicardEvolution<'a> {
    pub model: &'a Model,
    pub previous: &'a Trajectory<GrenierState>,
}

impl Evolution for PicardEvolution<'_> {
    type State = GrenierState;

    fn propagate(&self, state: &mut GrenierState, h: f64) {
        self.model.propagate_dispersion(&mut state.a, h);
    }

    fn nonlinear(&self, t: f64, state: &GrenierState) -> Result<GrenierState> {
        self.model.picard_rhs(state, self.previous.at_time(t)?, t)
    }
}

fn check_background(previous: &Trajectory<GrenierState>, data: &GrenierState, plan: &StepPlan) -> Result<()> {
    let expected = 2 * plan.steps + 1;
    if !plan.record_half_steps || plan.stride != 1 {
        return Err(Error::Param("iteration needs full half-step recording".into()));
    }
    if previous.len() != expected || (previous.spacing - 0.5 * plan.dt).abs() > 1e-14 * plan.dt {
        return Err(Error::Param(format!(
            "background has {} samples at spacing {}, plan needs {expected} at {}",
            previous.len(),
            previous.spacing,
            0.5 * plan.dt
        )));
    }
    previous.samples[0].phi.check_grid(&data.phi)?;
    previous.samples[0].a.check_grid(&data.a)
}

/// Next iterate from the previous one and the data.
pub fn picard_step(
    previous: &Trajectory<GrenierState>,
    model: &Model,
    data: &GrenierState,
    plan: &StepPlan,
) -> Result<Trajectory<GrenierState>> {
    check_background(previous, data, plan)?;
    let evo = PicardEvolution { model, previous };
    integrate_with(&evo, data, plan, |_, _| Ok(()))
}

/// The time-independent trajectory equal to `data`.
pub fn constant_trajectory(data: &GrenierState, plan: &StepPlan) -> Trajectory<GrenierState> {
    Trajectory {
        dt: plan.dt,
        spacing: 0.5 * plan.dt,
        samples: vec![data.clone(); 2 * plan.steps + 1],
        diagnostics: Vec::new(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions {
    pub j_max: usize,
    pub tol: f64,
    /// Stop after this many consecutive ratios above 1.
    pub divergence_window: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            j_max: 12,
            tol: 1e-10,
            divergence_window: 3,
        }
    }
}

/// A-priori bounds checked on every iterate:
/// `|||a_j|||^2_{l,T} <= 2 ||a0||^2_{H^l_{w0}}` and
/// `|||phi_j|||^2_{l+1,T} <= 4 ||phi0||^2 + max_j ||a0||^{4 sigma_j} + ||V||^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AprioriBounds {
    pub a_sq: f64,
    pub phi_sq: f64,
}

impl AprioriBounds {
    pub fn new(model: &Model, data: &GrenierState, horizon: f64) -> Result<Self> {
        let p = model.params();
        let w0 = p.w0;
        let phi0_sq = analytic_norm_sq(&data.phi, NormSpec::new(p.ell + 1.0, w0)?)?;
        let a0_sq = analytic_norm_sq(&data.a, NormSpec::new(p.ell, w0)?)?;
        let a_term = p
            .nonlocal
            .iter()
            .map(|t| a0_sq.powi(2 * t.sigma as i32))
            .fold(0.0, f64::max);
        let v = p.potential.l2_time_norm(p.ell + 0.5, w0, horizon)?;
        Ok(AprioriBounds {
            a_sq: 2.0 * a0_sq,
            phi_sq: 4.0 * phi0_sq + a_term + v * v,
        })
    }
}

/// Per-iterate bound check: squared triple norms against the bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub phi_sq: f64,
    pub a_sq: f64,
    pub phi_ok: bool,
    pub a_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardReport {
    /// Number of iterates computed after the initial pair.
    pub iterate_count: usize,
    /// `(|||delta phi_j|||_{l+1,T}, |||delta a_j|||_{l,T})` for `j = 1, 2, ...`.
    pub delta_norms: Vec<(f64, f64)>,
    /// `ratios[k]` is the quotient of the summed deltas of iterates `k + 2`
    /// and `k + 1`.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub diverged: bool,
    pub final_gap_to_direct: f64,
    /// Largest `L^2` residual of the Grenier equation along the final
    /// iterate, from a fourth-order time difference at interior samples.
    pub fixed_point_residual: f64,
    pub bounds: AprioriBounds,
    pub bound_checks: Vec<BoundCheck>,
}

impl PicardReport {
    /// Delta ratio for iterate `j >= 2`.
    pub fn ratio(&self, j: usize) -> Option<f64> {
        j.checked_sub(2).and_then(|k| self.ratios.get(k).copied())
    }

    pub fn bounds_hold(&self) -> bool {
        self.bound_checks.iter().all(|b| b.phi_ok && b.a_ok)
    }
}

fn l2(f: &SpectralField) -> f64 {
    f.energy().sqrt()
}

/// Largest `L^2` defect of `d/dt (phi, a) = grenier_rhs` at interior samples.
pub fn grenier_residual(model: &Model, traj: &Trajectory<GrenierState>) -> Result<f64> {
    let h = traj.spacing;
    let s = &traj.samples;
    let mut worst: f64 = 0.0;
    for k in 2..s.len().saturating_sub(2) {
        let rhs = model.grenier_rhs(&s[k], traj.time(k))?;
        let fd = |f: fn(&GrenierState) -> &SpectralField| {
            let mut d = f(&s[k + 1]) - f(&s[k - 1]);
            d.scale((8.0 / (12.0 * h)).into());
            d.axpy((-1.0 / (12.0 * h)).into(), f(&s[k + 2]));
            d.axpy((1.0 / (12.0 * h)).into(), f(&s[k - 2]));
            d
        };
        let rp = l2(&(&fd(|x| &x.phi) - &rhs.phi));
        let ra = l2(&(&fd(|x| &x.a) - &rhs.a));
        worst = worst.max(rp + ra);
    }
    Ok(worst)
}

/// Iterates from the constant pair `data` until the summed delta falls below
/// `tol`, `j_max` iterates are done, or divergence is detected, then compares
/// the last iterate with the direct Grenier solve.
pub fn picard_run(
    model: &Model,
    data: &GrenierState,
    plan: &StepPlan,
    options: PicardOptions,
) -> Result<(PicardReport, Trajectory<GrenierState>)> {
    if options.j_max < 2 {
        return Err(Error::Param(format!("j_max must be >= 2, got {}", options.j_max)));
    }
    let params = model.params();
    let schedule = params.schedule()?;
    let ell = params.ell;
    let bounds = AprioriBounds::new(model, data, plan.t_end)?;
    let mut current = constant_trajectory(data, plan);
    let mut delta_norms = Vec::new();
    let mut ratios = Vec::new();
    let mut bound_checks = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut above_one = 0;
    for j in 1..=options.j_max {
        let next = picard_step(&current, model, data, plan)?;
        let (dp, da) = pair_triple_norms(&difference(&next, &current)?, ell, schedule)?;
        let (np, na) = pair_triple_norms(&next, ell, schedule)?;
        bound_checks.push(BoundCheck {
            phi_sq: np * np,
            a_sq: na * na,
            phi_ok: np * np <= bounds.phi_sq,
            a_ok: na * na <= bounds.a_sq,
        });
        if let Some(&(pp, pa)) = delta_norms.last() {
            let prev_sum: f64 = pp + pa;
            let ratio = if prev_sum > 0.0 { (dp + da) / prev_sum } else { 0.0 };
            ratios.push(ratio);
            above_one = if ratio > 1.0 { above_one + 1 } else { 0 };
        }
        delta_norms.push((dp, da));
        log::debug!("iterate {j}: delta phi {dp:.3e}, delta a {da:.3e}");
        current = next;
        if dp.max(da) <= options.tol {
            converged = true;
            break;
        }
        if above_one >= options.divergence_window {
            diverged = true;
            log::warn!("iteration diverging: {above_one} consecutive delta ratios above 1");
            break;
        }
    }
    let direct = integrate_with(&GrenierEvolution { model }, data, plan, |_, _| Ok(()))?;
    let final_gap_to_direct = x_distance(&current, &direct, ell, schedule)?;
    let fixed_point_residual = grenier_residual(model, &current)?;
    let report = PicardReport {
        iterate_count: delta_norms.len(),
        delta_norms,
        ratios,
        converged,
        diverged,
        final_gap_to_direct,
        fixed_point_residual,
        bounds,
        bound_checks,
    };
    Ok((report, current))
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::kernels::KernelSpec;
    use crate::models::{presets, NonlocalTerm, Potential};
    use crate::spectral::{Grid, SymMatrix};
    use crate::stepping::LimitEvolution;

    fn smooth_pair(g: &Grid, amp: f64) -> GrenierState {
        let phi = SpectralField::from_fn(g, |y| Complex64::new(0.3 * y[0].sin() + 0.2 * (y[0] - y[1]).cos(), 0.0));
        let a = SpectralField::from_fn(g, |y| Complex64::new(amp * (1.0 + 0.3 * y[1].cos()), amp * 0.2 * y[0].sin()));
        GrenierState::new(phi, a).unwrap()
    }

    #[test]
    fn frozen_zero_dispersion_closed_form() {
        let g = Grid::torus(&[16, 16]).unwrap();
        let mut p = presets::free(2, 2.0, 1.0);
        p.h = SymMatrix::zeros(2);
        p.nonlocal = vec![NonlocalTerm::new(1, KernelSpec::Identity, 0.8)];
        let v = SpectralField::from_fn(&g, |y| Complex64::new(0.5 * y[1].sin(), 0.0));
        p.potential = Potential::Static(v.clone());
        p.m = Some(5.0);
        let model = Model::new(p.with_epsilon(0.2), &g).unwrap();
        let data = smooth_pair(&g, 1.0);
        let plan = StepPlan::new(0.01, 0.1).unwrap();
        let next = picard_step(&constant_trajectory(&data, &plan), &model, &data, &plan).unwrap();
        let rate: Vec<Complex64> = data
            .a
            .to_physical()
            .iter()
            .zip(v.to_physical())
            .map(|(a, v)| Complex64::new(0.8 * a.norm_sqr(), 0.0) + v)
            .collect();
        for (k, s) in next.samples.iter().enumerate() {
            let t = next.time(k);
            for ((got, p0), r) in s.phi.to_physical().iter().zip(data.phi.to_physical()).zip(&rate) {
                assert!((got - (p0 - r * t)).norm() < 1e-12);
            }
            assert!((&s.a - &data.a).sup_norm() < 1e-12);
        }
    }

    #[test]
    fn zero_data_and_background_give_zero() {
        let g = Grid::torus(&[8, 8]).unwrap();
        let mut p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        p.m = Some(10.0);
        let model = Model::new(p.with_epsilon(0.25), &g).unwrap();
        let z = SpectralField::zeros(&g);
        let data = GrenierState::new(z.clone(), z).unwrap();
        let plan = StepPlan::new(0.01, 0.05).unwrap();
        let next = picard_step(&constant_trajectory(&data, &plan), &model, &data, &plan).unwrap();
        assert!(next.samples.iter().all(|s| s.phi.max_abs() == 0.0 && s.a.max_abs() == 0.0));
    }

    #[test]
    fn zero_amplitude_converges_in_one_iterate() {
        let g = Grid::torus(&[8, 8]).unwrap();
        let mut p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        p.h = SymMatrix::zeros(2);
        p.m = Some(10.0);
        let model = Model::new(p.with_epsilon(0.25), &g).unwrap();
        let mut data = smooth_pair(&g, 0.0);
        data.a = SpectralField::zeros(&g);
        let plan = StepPlan::new(0.01, 0.05).unwrap();
        let (report, traj) = picard_run(&model, &data, &plan, PicardOptions::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.delta_norms[0], (0.0, 0.0));
        assert!(traj.samples.iter().all(|s| s.phi == data.phi));
    }

    #[test]
    fn exact_solution_is_a_fixed_point() {
        let g = Grid::torus(&[16, 16]).unwrap();
        let mut p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        p.beta = vec![0.3, -0.2];
        p.m = Some(10.0);
        let model = Model::new(p.with_epsilon(0.25), &g).unwrap();
        let data = smooth_pair(&g, 0.5);
        let plan = StepPlan::new(0.002, 0.05).unwrap();
        let direct = integrate_with(&GrenierEvolution { model: &model }, &data, &plan, |_, _| Ok(())).unwrap();
        let next = picard_step(&direct, &model, &data, &plan).unwrap();
        let gap = x_distance(&next, &direct, 2.0, model.params().schedule().unwrap()).unwrap();
        assert!(gap < 1e-8, "{gap}");
    }

    #[test]
    fn epsilon_zero_run_matches_limit_solve() {
        let g = Grid::torus(&[16, 16]).unwrap();
        let mut p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        p.m = Some(10.0);
        let model = Model::new(p.with_epsilon(0.0), &g).unwrap();
        let data = smooth_pair(&g, 0.5);
        let plan = StepPlan::new(0.002, 0.05).unwrap();
        let (report, traj) = picard_run(&model, &data, &plan, PicardOptions::default()).unwrap();
        let limit = integrate_with(&LimitEvolution { model: &model }, &data, &plan, |_, _| Ok(())).unwrap();
        let gap = x_distance(&traj, &limit, 2.0, model.params().schedule().unwrap()).unwrap();
        assert!(report.converged, "{report:?}");
        assert!(gap < 1e-6, "{gap}");
        assert!(report.fixed_point_residual < 1e-8, "{}", report.fixed_point_residual);
    }

    #[test]
    fn mismatched_background_is_rejected() {
        let g = Grid::torus(&[8, 8]).unwrap();
        let mut p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        p.m = Some(10.0);
        let model = Model::new(p.with_epsilon(0.25), &g).unwrap();
        let data = smooth_pair(&g, 0.5);
        let plan = StepPlan::new(0.01, 0.05).unwrap();
        let other = StepPlan::new(0.005, 0.05).unwrap();
        assert!(picard_step(&constant_trajectory(&data, &other), &model, &data, &plan).is_err());
        let opts = PicardOptions {
            j_max: 1,
            ..PicardOptions::default()
        };
        assert!(picard_run(&model, &data, &plan, opts).is_err());
    }
}
