//! Fixed-step integrating-factor Runge-Kutta integration on a shared
//! half-step time grid.
//!
//! States are recorded at every half step `k dt / 2`. Midpoint samples come
//! from cubic Hermite interpolation in the interaction picture
//! `v(s) = E(-s) u(t_n + s)` using `N(u_n)` and `N(u_{n+1})`, which the
//! stepper evaluates anyway; the interpolation error is `O(dt^4)`, matching
//! the scheme.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harness::radius_estimate;
use crate::models::{GrenierState, Model};
use crate::spectral::{analytic_norm, NormSpec, SpectralField, WeightSchedule};

/// Vector-space operations needed by the steppers.
pub trait OdeState: Clone + Send + Sync {
    /// `self += alpha * other`.
    fn axpy(&mut self, alpha: f64, other: &Self);
    fn all_finite(&self) -> bool;
    /// Clears Fourier coefficients below `relative` times the largest one.
    fn filter_below(&mut self, _relative: f64) {}
}

/// `du/dt = L u + N(t, u)` with `L` diagonal in Fourier.
pub trait Evolution: Sync {
    type State: OdeState;

    /// `u <- exp(h L) u`; the identity when there is no linear part.
    fn propagate(&self, _state: &mut Self::State, _h: f64) {}

    fn nonlinear(&self, t: f64, state: &Self::State) -> Result<Self::State>;
}

fn propagated<E: Evolution>(evo: &E, state: &E::State, h: f64) -> E::State {
    let mut out = state.clone();
    evo.propagate(&mut out, h);
    out
}

fn checked<S: OdeState>(state: S, t: f64) -> Result<S> {
    if state.all_finite() {
        Ok(state)
    } else {
        Err(Error::NonFinite { t })
    }
}

/// Lawson RK4 step given `k1 = N(t, u)`.
fn lawson_with_k1<E: Evolution>(evo: &E, u: &E::State, k1: &E::State, t: f64, h: f64) -> Result<E::State> {
    let half = 0.5 * h;
    let u_half = propagated(evo, u, half);
    let k1_half = propagated(evo, k1, half);

    let mut u2 = u_half.clone();
    u2.axpy(half, &k1_half);
    let k2 = evo.nonlinear(t + half, &u2)?;

    let mut u3 = u_half.clone();
    u3.axpy(half, &k2);
    let k3 = evo.nonlinear(t + half, &u3)?;

    let mut u4 = u_half.clone();
    u4.axpy(h, &k3);
    evo.propagate(&mut u4, half);
    let k4 = evo.nonlinear(t + h, &u4)?;

    let mut acc = u_half;
    acc.axpy(h / 6.0, &k1_half);
    acc.axpy(h / 3.0, &k2);
    acc.axpy(h / 3.0, &k3);
    evo.propagate(&mut acc, half);
    acc.axpy(h / 6.0, &k4);
    checked(acc, t + h)
}

/// One integrating-factor RK4 step: exact propagation of the diagonal linear
/// part composed with classical RK4 on the transformed nonlinearity. With no
/// linear part this is classical RK4.
pub fn lawson_rk4_step<E: Evolution>(evo: &E, state: &E::State, t: f64, dt: f64) -> Result<E::State> {
    let k1 = evo.nonlinear(t, state)?;
    lawson_with_k1(evo, state, &k1, t, dt)
}

struct Plain<'a, S, F> {
    rhs: &'a F,
    _s: std::marker::PhantomData<fn() -> S>,
}

impl<S, F> Evolution for Plain<'_, S, F>
where
    S: OdeState,
    F: Fn(f64, &S) -> Result<S> + Sync,
{
    type State = S;

    fn nonlinear(&self, t: f64, state: &S) -> Result<S> {
        (self.rhs)(t, state)
    }
}

/// Classical four-stage RK4 step for `du/dt = rhs(t, u)`.
pub fn rk4_step<S, F>(state: &S, rhs: &F, t: f64, dt: f64) -> Result<S>
where
    S: OdeState,
    F: Fn(f64, &S) -> Result<S> + Sync,
{
    let evo = Plain {
        rhs,
        _s: std::marker::PhantomData,
    };
    lawson_rk4_step(&evo, state, t, dt)
}

/// Multiplication by `exp(h symbol)` for a single field.
#[derive(Clone, Debug)]
pub struct DiagonalLinear {
    pub symbol: Vec<Complex64>,
}

impl DiagonalLinear {
    pub fn propagate(&self, f: &mut SpectralField, h: f64) {
        for (c, s) in f.coeffs_mut().iter_mut().zip(&self.symbol) {
            *c *= (s * h).exp();
        }
    }
}

/// Default relative noise floor of [`StepPlan`].
pub const DEFAULT_NOISE_FLOOR: f64 = 1e-20;

/// Step size and horizon; `dt` is adjusted so that `T / dt` is an integer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPlan {
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
    pub record_half_steps: bool,
    /// Record every `stride`-th sample.
    pub stride: usize,
    /// Coefficients below this fraction of the largest one are cleared after
    /// every step (0 disables). Roundoff in high modes sits near `1e-23` of
    /// the peak and is otherwise amplified by the analytic weights.
    pub noise_floor: f64,
}

impl StepPlan {
    pub fn new(dt_target: f64, t_end: f64) -> Result<Self> {
        if !(dt_target > 0.0 && t_end > 0.0 && dt_target.is_finite() && t_end.is_finite()) {
            return Err(Error::Param(format!("step plan needs dt > 0 and T > 0, got dt={dt_target}, T={t_end}")));
        }
        let steps = ((t_end / dt_target) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok(StepPlan {
            dt: t_end / steps as f64,
            t_end,
            steps,
            record_half_steps: true,
            stride: 1,
            noise_floor: DEFAULT_NOISE_FLOOR,
        })
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn with_noise_floor(mut self, relative: f64) -> Self {
        self.noise_floor = relative.max(0.0);
        self
    }

    pub fn full_steps_only(mut self) -> Self {
        self.record_half_steps = false;
        self
    }

    /// Half-step stride between recorded samples.
    fn half_stride(&self) -> usize {
        if self.record_half_steps {
            self.stride
        } else {
            2 * self.stride
        }
    }

    /// Time between recorded samples.
    pub fn spacing(&self) -> f64 {
        self.half_stride() as f64 * 0.5 * self.dt
    }
}

/// Per-step diagnostics: `t`, `||phi||_{H^{l+1}_{w(t)}}`, `||a||_{H^l_{w(t)}}`,
/// the mass `||a||_{L^2}^2` (or `||u||^2`) and the fitted analyticity radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub phi_norm: f64,
    pub a_norm: f64,
    pub mass: f64,
    pub radius: f64,
}

/// Uniformly spaced record of states starting at `t = 0`.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub dt: f64,
    /// Time between samples.
    pub spacing: f64,
    pub samples: Vec<S>,
    pub diagnostics: Vec<DiagnosticRow>,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.spacing
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.samples.len().saturating_sub(1))
    }

    pub fn last(&self) -> &S {
        self.samples.last().expect("trajectory has samples")
    }

    /// Index of the sample at exactly `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.spacing;
        let k = x.round();
        if k < 0.0 || (x - k).abs() > 1e-8 || k as usize >= self.samples.len() {
            return Err(Error::OffGrid { t });
        }
        Ok(k as usize)
    }

    /// Sample at exactly `t` (no interpolation).
    pub fn at_time(&self, t: f64) -> Result<&S> {
        Ok(&self.samples[self.index_of(t)?])
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> Trajectory<T> {
        Trajectory {
            dt: self.dt,
            spacing: self.spacing,
            samples: self.samples.iter().map(f).collect(),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// Integrates `evo` over `plan`, recording samples and calling `observe`
/// after every full step (and at `t = 0`).
pub fn integrate_with<E, O>(evo: &E, initial: &E::State, plan: &StepPlan, mut observe: O) -> Result<Trajectory<E::State>>
where
    E: Evolution,
    O: FnMut(f64, &E::State) -> Result<()>,
{
    let dt = plan.dt;
    let stride = plan.half_stride();
    let mut samples = vec![initial.clone()];
    observe(0.0, initial)?;
    let mut u = checked(initial.clone(), 0.0)?;
    let mut k1 = evo.nonlinear(0.0, &u)?;
    for n in 0..plan.steps {
        let t = n as f64 * dt;
        let mut next = lawson_with_k1(evo, &u, &k1, t, dt)?;
        if plan.noise_floor > 0.0 {
            next.filter_below(plan.noise_floor);
        }
        let k1_next = if n + 1 < plan.steps || (2 * n + 1) % stride == 0 {
            Some(evo.nonlinear(t + dt, &next)?)
        } else {
            None
        };
        if (2 * n + 1) % stride == 0 {
            let k1n = k1_next.as_ref().expect("needed for the midpoint");
            // u_mid = E(h/2)[(u_n + E(-h) u_{n+1}) / 2 + h/8 (N_n - E(-h) N_{n+1})]
            let mut mid = u.clone();
            mid.axpy(-0.5, &u);
            mid.axpy(dt / 8.0, &k1);
            mid.axpy(0.5, &propagated(evo, &next, -dt));
            mid.axpy(-dt / 8.0, &propagated(evo, k1n, -dt));
            evo.propagate(&mut mid, 0.5 * dt);
            if plan.noise_floor > 0.0 {
                mid.filter_below(plan.noise_floor);
            }
            samples.push(mid);
        }
        if (2 * n + 2) % stride == 0 {
            samples.push(next.clone());
        }
        observe(t + dt, &next)?;
        u = next;
        if let Some(k) = k1_next {
            k1 = k;
        }
    }
    Ok(Trajectory {
        dt,
        spacing: plan.spacing(),
        samples,
        diagnostics: Vec::new(),
    })
}

/// Limit system (Grenier at `epsilon = 0`).
pub struct LimitEvolution<'a> {
    pub model: &'a Model,
}

impl Evolution for LimitEvolution<'_> {
    type State = GrenierState;

    fn nonlinear(&self, t: f64, state: &GrenierState) -> Result<GrenierState> {
        self.model.limit_rhs(state, t)
    }
}

/// Grenier system; the dispersive term acts on `a` through the integrating factor.
pub struct GrenierEvolution<'a> {
    pub model: &'a Model,
}

impl Evolution for GrenierEvolution<'_> {
    type State = GrenierState;

    fn propagate(&self, state: &mut GrenierState, h: f64) {
        self.model.propagate_dispersion(&mut state.a, h);
    }

    fn nonlinear(&self, t: f64, state: &GrenierState) -> Result<GrenierState> {
        self.model.limit_rhs(state, t)
    }
}

/// Linearized system about a recorded background.
pub struct LinearizedEvolution<'a> {
    pub model: &'a Model,
    pub background: &'a Trajectory<GrenierState>,
    pub source: bool,
}

impl Evolution for LinearizedEvolution<'_> {
    type State = GrenierState;

    fn nonlinear(&self, t: f64, state: &GrenierState) -> Result<GrenierState> {
        let bg = self.background.at_time(t)?;
        self.model.linearized_parts(state, bg, t, self.source)
    }
}

/// Full NLS.
pub struct NlsEvolution<'a> {
    pub model: &'a Model,
}

impl Evolution for NlsEvolution<'_> {
    type State = SpectralField;

    fn propagate(&self, state: &mut SpectralField, h: f64) {
        self.model.propagate_dispersion(state, h);
    }

    fn nonlinear(&self, t: f64, state: &SpectralField) -> Result<SpectralField> {
        self.model.nls_nonlinear(state, t)
    }
}

/// The four systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemId {
    Nls,
    Grenier,
    Limit,
    Linearized,
}

impl SystemId {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "nls" => Ok(SystemId::Nls),
            "grenier" => Ok(SystemId::Grenier),
            "limit" => Ok(SystemId::Limit),
            "linearized" => Ok(SystemId::Linearized),
            other => Err(Error::Param(format!("unknown system '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemId::Nls => "nls",
            SystemId::Grenier => "grenier",
            SystemId::Limit => "limit",
            SystemId::Linearized => "linearized",
        }
    }
}

/// Initial state for [`integrate`].
#[derive(Clone, Debug)]
pub enum SystemState {
    Wave(SpectralField),
    Pair(GrenierState),
}

/// Recorded run of one of the systems.
#[derive(Clone, Debug)]
pub enum SystemTrajectory {
    Wave(Trajectory<SpectralField>),
    Pair(Trajectory<GrenierState>),
}

impl SystemTrajectory {
    pub fn diagnostics(&self) -> &[DiagnosticRow] {
        match self {
            SystemTrajectory::Wave(t) => &t.diagnostics,
            SystemTrajectory::Pair(t) => &t.diagnostics,
        }
    }
}

fn diagnostics_row(t: f64, phi: Option<&SpectralField>, a: &SpectralField, ell: f64, schedule: Option<WeightSchedule>) -> Result<DiagnosticRow> {
    let (phi_norm, a_norm) = match schedule {
        Some(s) => {
            let w = s.weight(t)?;
            let pn = match phi {
                Some(p) => analytic_norm(p, NormSpec::new(ell + 1.0, w)?)?,
                None => f64::NAN,
            };
            (pn, analytic_norm(a, NormSpec::new(ell, w)?)?)
        }
        None => (f64::NAN, f64::NAN),
    };
    Ok(DiagnosticRow {
        t,
        phi_norm,
        a_norm,
        mass: a.energy(),
        radius: radius_estimate(a).unwrap_or(f64::NAN),
    })
}

fn warn_cfl(model: &Model, plan: &StepPlan) {
    let eps = model.epsilon();
    let hnorm = model.params().h.row_sum_norm();
    if eps == 0.0 || hnorm == 0.0 {
        return;
    }
    let grid = model.grid();
    let dx = grid
        .lengths()
        .iter()
        .zip(grid.n())
        .map(|(l, &n)| l / n as f64)
        .fold(f64::INFINITY, f64::min);
    let guide = dx * dx / (eps * hnorm);
    if plan.dt > guide {
        log::warn!("dt = {:.3e} exceeds the guidance threshold {:.3e} = dx^2 / (eps |H|)", plan.dt, guide);
    }
}

/// Integrates one of the four systems. The linearized system needs the limit
/// background on the same half-step grid. Diagnostics are recorded after
/// every full step; analytic norms are evaluated at `w(t)` when the model
/// has a weight schedule.
pub fn integrate(
    system: SystemId,
    initial: &SystemState,
    model: &Model,
    plan: &StepPlan,
    background: Option<&Trajectory<GrenierState>>,
) -> Result<SystemTrajectory> {
    let ell = model.params().ell;
    let schedule = model.params().schedule().ok();
    let mut rows = Vec::new();
    warn_cfl(model, plan);
    let result = match (system, initial) {
        (SystemId::Nls, SystemState::Wave(u0)) => {
            let evo = NlsEvolution { model };
            let mut traj = integrate_with(&evo, u0, plan, |t, u| {
                rows.push(diagnostics_row(t, None, u, ell, schedule)?);
                Ok(())
            })?;
            traj.diagnostics = rows;
            SystemTrajectory::Wave(traj)
        }
        (SystemId::Grenier | SystemId::Limit | SystemId::Linearized, SystemState::Pair(s0)) => {
            let mut observe = |t: f64, s: &GrenierState| {
                rows.push(diagnostics_row(t, Some(&s.phi), &s.a, ell, schedule)?);
                Ok(())
            };
            let mut traj = match system {
                SystemId::Grenier => integrate_with(&GrenierEvolution { model }, s0, plan, &mut observe)?,
                SystemId::Limit => integrate_with(&LimitEvolution { model }, s0, plan, &mut observe)?,
                _ => {
                    let background = background
                        .ok_or_else(|| Error::Param("the linearized system needs a background".into()))?;
                    let evo = LinearizedEvolution {
                        model,
                        background,
                        source: true,
                    };
                    integrate_with(&evo, s0, plan, &mut observe)?
                }
            };
            traj.diagnostics = rows;
            SystemTrajectory::Pair(traj)
        }
        _ => {
            return Err(Error::Param(format!(
                "initial state does not match system '{}'",
                system.name()
            )))
        }
    };
    Ok(result)
}
