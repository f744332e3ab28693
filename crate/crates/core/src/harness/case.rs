use num_complex::Complex64;

use super::select::{select_m, well_prepared_data, MInputs, MSelection};
use crate::error::{Error, Result};
use crate::models::{GrenierState, Model, ModelParams, WkbData};
use crate::picard::AprioriBounds;
use crate::spectral::{
    analytic_norm, bilinear_constant, gradient, Grid, NormSpec, SpectralField, TripleNorm, WeightSchedule,
};
use crate::stepping::{
    integrate, integrate_with, DiagnosticRow, LimitEvolution, LinearizedEvolution, NlsEvolution, StepPlan, SystemId,
    SystemState, SystemTrajectory, Trajectory,
};

/// Relative spectral energy allowed beyond two thirds of the lattice for the
/// NLS initial datum to count as resolved.
pub const RESOLVED_TAIL: f64 = 1e-24;

/// Relative slack within which a violation of the printed phase bound is
/// flagged as marginal instead of failing.
pub const PHASE_BOUND_SLACK: f64 = 0.05;

/// How the horizon is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    /// `fraction * min(w0 / M, t0)`.
    Auto { fraction: f64, t0: f64 },
    /// A fixed horizon, which must stay below `w0 / M`.
    Fixed { t: f64, t0: f64 },
}

impl Horizon {
    pub fn t0(&self) -> f64 {
        match *self {
            Horizon::Auto { t0, .. } | Horizon::Fixed { t0, .. } => t0,
        }
    }
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon::Auto { fraction: 0.8, t0: 0.5 }
    }
}

/// Everything needed to run the epsilon hierarchy for one model and data set.
#[derive(Clone, Debug)]
pub struct Scenario {
    /// `params.m = Some(M)` fixes the decay rate; `None` selects it.
    pub params: ModelParams,
    pub grid: Grid,
    pub data: WkbData,
    pub dt: f64,
    /// Relative spectral filter applied after every step.
    pub noise_floor: f64,
    pub horizon: Horizon,
    pub safety: f64,
    /// Truncation radius of the bilinear constant.
    pub truncation: usize,
    /// Also run the full NLS to measure the consistency gap when resolvable.
    pub compute_nls: bool,
}

/// Norms of the data at the index used for the decay-rate selection:
/// `phi0` in `H^{l+3}_{w0}`, `a0` in `H^{l+2}_{w0}`, the correctors one
/// index lower.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexNorms {
    pub phi0: f64,
    pub a0: f64,
    pub phi10: f64,
    pub a10: f64,
    pub v: f64,
}

/// Resolved decay rate, horizon, step plan and the epsilon-independent limit
/// and corrector runs.
#[derive(Clone, Debug)]
pub struct CaseContext {
    pub scenario: Scenario,
    pub index_norms: IndexNorms,
    /// Bilinear constant at index `l + 2`.
    pub constant: f64,
    /// `None` when `M` was given explicitly.
    pub selection: Option<MSelection>,
    pub m: f64,
    pub t: f64,
    pub plan: StepPlan,
    pub model: Model,
    pub limit: Trajectory<GrenierState>,
    pub corrector: Trajectory<GrenierState>,
}

impl CaseContext {
    pub fn prepare(scenario: Scenario) -> Result<Self> {
        let p = &scenario.params;
        p.validate()?;
        let ell = p.ell;
        let w0 = p.w0;
        let d = scenario.grid.dim();
        let t0 = scenario.horizon.t0();
        let norm = |f: &SpectralField, l: f64| analytic_norm(f, NormSpec::new(l, w0)?);
        let index_norms = IndexNorms {
            phi0: norm(&scenario.data.phi0, ell + 3.0)?,
            a0: norm(&scenario.data.a0, ell + 2.0)?,
            phi10: norm(&scenario.data.phi10, ell + 2.0)?,
            a10: norm(&scenario.data.a10, ell + 1.0)?,
            v: p.potential.l2_time_norm(ell + 2.5, w0, t0)?,
        };
        for (name, v) in [
            ("phi0", index_norms.phi0),
            ("a0", index_norms.a0),
            ("phi10", index_norms.phi10),
            ("a10", index_norms.a10),
            ("V", index_norms.v),
        ] {
            if !v.is_finite() {
                return Err(Error::Param(format!("{name} is not in the analytic space required at index l+2")));
            }
        }
        let constant = bilinear_constant(ell + 2.0, ell + 2.0, d, scenario.truncation)?;
        let (m, selection) = match p.m {
            Some(m) => (m, None),
            None => {
                let sel = select_m(&MInputs {
                    phi0: index_norms.phi0,
                    a0: index_norms.a0,
                    v: index_norms.v,
                    sigmas: p.nonlocal.iter().map(|t| t.sigma).collect(),
                    gamma: p.gamma,
                    c: constant,
                    safety: scenario.safety,
                    w0,
                    t0,
                })?;
                (sel.m, Some(sel))
            }
        };
        let cap = (w0 / m).min(t0);
        let t = match scenario.horizon {
            Horizon::Auto { fraction, .. } => {
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(Error::Param(format!("horizon fraction must lie in (0, 1), got {fraction}")));
                }
                fraction * cap
            }
            Horizon::Fixed { t, .. } => {
                if !(t > 0.0 && t < w0 / m && t <= t0) {
                    return Err(Error::Param(format!("horizon {t} must lie in (0, min(w0/M, T0)) = (0, {cap})")));
                }
                t
            }
        };
        let plan = StepPlan::new(scenario.dt, t)?.with_noise_floor(scenario.noise_floor);
        let mut params = p.with_epsilon(0.0);
        params.m = Some(m);
        let model = Model::new(params, &scenario.grid)?;
        let start = GrenierState::new(scenario.data.phi0.clone(), scenario.data.a0.clone())?;
        let limit = integrate_with(&LimitEvolution { model: &model }, &start, &plan, |_, _| Ok(()))
            .map_err(|e| e.context("limit system"))?;
        let corr0 = GrenierState::new(scenario.data.phi10.clone(), scenario.data.a10.clone())?;
        let corrector = integrate_with(
            &LinearizedEvolution {
                model: &model,
                background: &limit,
                source: true,
            },
            &corr0,
            &plan,
            |_, _| Ok(()),
        )
        .map_err(|e| e.context("linearized system"))?;
        log::info!("M = {m:.6}, T = {t:.6}, {} steps of {:.3e}", plan.steps, plan.dt);
        Ok(CaseContext {
            scenario,
            index_norms,
            constant,
            selection,
            m,
            t,
            plan,
            model,
            limit,
            corrector,
        })
    }

    pub fn schedule(&self) -> WeightSchedule {
        WeightSchedule::new(self.scenario.params.w0, self.m).expect("validated")
    }
}

/// Error norms of one epsilon run; time suprema are over all recorded
/// half steps.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CaseErrors {
    /// `|||phi^eps - phi|||_{l+1,T}`.
    pub phi_first: f64,
    /// `|||a^eps - a|||_{l,T}`.
    pub a_first: f64,
    /// `|||phi^eps - phi - eps phi_1|||_{l+1,T}`.
    pub phi_second: f64,
    /// `|||a^eps - a - eps a_1|||_{l,T}`.
    pub a_second: f64,
    /// `sup_t ||u^eps - a e^{i phi_1} e^{i phi / eps}||_{L^2}`.
    pub wave_l2: f64,
    pub wave_linf: f64,
    /// `sup_t || |u^eps|^2 - |a|^2 ||`.
    pub density_l1: f64,
    pub density_linf: f64,
    /// `sup_t max_j || Im(eps conj(u^eps) d_j u^eps) - |a|^2 d_j phi ||`.
    pub momentum_l1: f64,
    pub momentum_linf: f64,
    /// `||u_NLS(T) - a^eps e^{i phi^eps / eps}(T)||_{L^2} / ||u0||_{L^2}`;
    /// NaN when the NLS datum is not resolved on the grid.
    pub consistency_gap: f64,
}

impl CaseErrors {
    pub fn first_order(&self) -> f64 {
        self.phi_first + self.a_first
    }

    pub fn second_order(&self) -> f64 {
        self.phi_second + self.a_second
    }

    /// Norm in `L^2 cap L^infinity`.
    pub fn wave(&self) -> f64 {
        self.wave_l2 + self.wave_linf
    }
}

/// Runtime check of the a-priori bounds at every recorded time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub bounds: AprioriBounds,
    /// Largest `|||a|||^2_{l,t} / (2 ||a0||^2)` over recorded times.
    pub a_ratio: f64,
    /// Largest `|||phi|||^2_{l+1,t}` over the printed phase bound.
    pub phi_ratio: f64,
    /// Smallest `radius(a(t)) - (w(t) - 0.1 w0)` over full steps.
    pub radius_margin: f64,
}

impl BoundReport {
    pub fn a_holds(&self) -> bool {
        self.a_ratio <= 1.0
    }

    pub fn phi_holds(&self) -> bool {
        self.phi_ratio <= 1.0
    }

    /// Phase bound violated by less than the slack.
    pub fn phi_marginal(&self) -> bool {
        self.phi_ratio > 1.0 && self.phi_ratio <= 1.0 + PHASE_BOUND_SLACK
    }

    pub fn holds(&self) -> bool {
        self.a_holds() && (self.phi_holds() || self.phi_marginal())
    }
}

#[derive(Clone, Debug)]
pub struct CaseResult {
    pub epsilon: f64,
    pub errors: CaseErrors,
    pub bounds: BoundReport,
    /// Relative NLS mass drift over `[0, T]` (NaN when NLS was not run).
    pub mass_drift: f64,
    pub diagnostics: Vec<DiagnosticRow>,
}

fn l2_grid(v: &[Complex64], cell: f64) -> f64 {
    (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell).sqrt()
}

fn l1_grid(v: &[f64], cell: f64) -> f64 {
    v.iter().map(|x| x.abs()).sum::<f64>() * cell
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn real_samples(f: &SpectralField) -> Vec<f64> {
    f.to_physical().iter().map(|z| z.re).collect()
}

/// Fraction of the spectral energy of `f` outside the centered two-thirds
/// box.
pub fn tail_fraction(f: &SpectralField) -> f64 {
    let g = f.grid();
    let total = f.energy();
    if total == 0.0 {
        return 0.0;
    }
    let cut: Vec<i64> = g.n().iter().map(|&n| (n as i64) / 3).collect();
    let mut tail = 0.0;
    for (flat, c) in f.coeffs().iter().enumerate() {
        if g.mode_of(flat).iter().zip(&cut).any(|(m, k)| m.abs() > *k) {
            tail += c.norm_sqr();
        }
    }
    tail / total
}

/// Density and momentum densities of `a e^{i phi / eps}` written in terms of
/// the amplitude: `|a|^2` and `|a|^2 d_j phi + eps Im(conj(a) d_j a)`.
pub fn amplitude_observables(state: &GrenierState, epsilon: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let a = state.a.to_physical();
    let density: Vec<f64> = a.iter().map(|z| z.norm_sqr()).collect();
    let gphi = gradient(&state.phi);
    let ga = gradient(&state.a);
    let momentum = gphi
        .iter()
        .zip(&ga)
        .map(|(p, q)| {
            let p = p.to_physical();
            let q = q.to_physical();
            (0..a.len())
                .map(|k| density[k] * p[k].re + epsilon * (a[k].conj() * q[k]).im)
                .collect()
        })
        .collect();
    (density, momentum)
}

/// Runs the Grenier system (and the NLS when resolvable) at `epsilon` and
/// assembles every error norm against the limit and corrected limit.
pub fn run_case(ctx: &CaseContext, epsilon: f64) -> Result<CaseResult> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Param(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let sc = &ctx.scenario;
    let ell = sc.params.ell;
    let w0 = sc.params.w0;
    let schedule = ctx.schedule();
    let model = ctx.model.with_epsilon(epsilon)?;
    let data = well_prepared_data(&sc.data, epsilon)?;
    let run = integrate(SystemId::Grenier, &SystemState::Pair(data.clone()), &model, &ctx.plan, None)
        .map_err(|e| e.context(format!("grenier system at eps={epsilon}")))?;
    let (grenier, diagnostics) = match run {
        SystemTrajectory::Pair(mut t) => {
            let d = std::mem::take(&mut t.diagnostics);
            (t, d)
        }
        SystemTrajectory::Wave(_) => unreachable!("pair system"),
    };

    let spacing = grenier.spacing;
    let tn = |l: f64| TripleNorm::new(l, schedule, spacing);
    let (mut p1, mut a1, mut p2, mut a2) = (tn(ell + 1.0), tn(ell), tn(ell + 1.0), tn(ell));
    let (mut pn, mut an) = (tn(ell + 1.0), tn(ell));
    let bounds = AprioriBounds::new(&model, &data, sc.horizon.t0())?;
    let mut a_ratio: f64 = 0.0;
    let mut phi_ratio: f64 = 0.0;
    let cell = sc.grid.cell_volume();
    let mut errors = CaseErrors::default();
    for ((g, l), c) in grenier.samples.iter().zip(&ctx.limit.samples).zip(&ctx.corrector.samples) {
        let dphi = &g.phi - &l.phi;
        let da = &g.a - &l.a;
        p1.push(&dphi)?;
        a1.push(&da)?;
        let mut dphi2 = dphi.clone();
        dphi2.axpy((-epsilon).into(), &c.phi);
        let mut da2 = da.clone();
        da2.axpy((-epsilon).into(), &c.a);
        p2.push(&dphi2)?;
        a2.push(&da2)?;
        pn.push(&g.phi)?;
        an.push(&g.a)?;
        a_ratio = a_ratio.max(an.value_sq() / bounds.a_sq);
        phi_ratio = phi_ratio.max(pn.value_sq() / bounds.phi_sq);

        // u^eps - a e^{i phi_1} e^{i phi/eps} = e^{i phi/eps} (a^eps e^{i (phi^eps - phi)/eps} - a e^{i phi_1})
        let shift = real_samples(&dphi);
        let ae = g.a.to_physical();
        let al = l.a.to_physical();
        let ph1 = real_samples(&c.phi);
        let diff: Vec<Complex64> = (0..ae.len())
            .map(|k| ae[k] * Complex64::from_polar(1.0, shift[k] / epsilon) - al[k] * Complex64::from_polar(1.0, ph1[k]))
            .collect();
        errors.wave_l2 = errors.wave_l2.max(l2_grid(&diff, cell));
        errors.wave_linf = errors.wave_linf.max(diff.iter().fold(0.0, |m, z| m.max(z.norm())));

        let (de, me) = amplitude_observables(g, epsilon);
        let (dl, ml) = amplitude_observables(l, 0.0);
        let dd: Vec<f64> = de.iter().zip(&dl).map(|(x, y)| x - y).collect();
        errors.density_l1 = errors.density_l1.max(l1_grid(&dd, cell));
        errors.density_linf = errors.density_linf.max(linf(&dd));
        for (x, y) in me.iter().zip(&ml) {
            let dm: Vec<f64> = x.iter().zip(y).map(|(x, y)| x - y).collect();
            errors.momentum_l1 = errors.momentum_l1.max(l1_grid(&dm, cell));
            errors.momentum_linf = errors.momentum_linf.max(linf(&dm));
        }
    }
    errors.phi_first = p1.value();
    errors.a_first = a1.value();
    errors.phi_second = p2.value();
    errors.a_second = a2.value();

    let mut radius_margin = f64::INFINITY;
    for row in &diagnostics {
        let w = schedule.weight(row.t)?;
        if row.radius.is_finite() {
            radius_margin = radius_margin.min(row.radius - (w - 0.1 * w0));
        }
    }

    errors.consistency_gap = f64::NAN;
    let mut mass_drift = f64::NAN;
    if sc.compute_nls {
        let u0 = SpectralField::from_physical(&sc.grid, data.wave_function(epsilon))?;
        let tail = tail_fraction(&u0);
        if tail <= RESOLVED_TAIL {
            let m0 = u0.energy().sqrt();
            let mut drift: f64 = 0.0;
            let u = integrate_with(&NlsEvolution { model: &model }, &u0, &ctx.plan.full_steps_only(), |_, u| {
                drift = drift.max((u.energy().sqrt() - m0).abs() / m0);
                Ok(())
            })
            .map_err(|e| e.context(format!("nls at eps={epsilon}")))?;
            let recon = grenier.last().wave_function(epsilon);
            let un = u.last().to_physical();
            let diff: Vec<Complex64> = un.iter().zip(&recon).map(|(x, y)| x - y).collect();
            let norm0 = l2_grid(&u0.to_physical(), cell);
            errors.consistency_gap = l2_grid(&diff, cell) / norm0;
            mass_drift = drift;
        } else {
            log::info!("eps={epsilon}: NLS datum not resolved (tail fraction {tail:.2e}); skipping the NLS run");
        }
    }

    Ok(CaseResult {
        epsilon,
        errors,
        bounds: BoundReport {
            bounds,
            a_ratio,
            phi_ratio,
            radius_margin,
        },
        mass_drift,
        diagnostics,
    })
}
