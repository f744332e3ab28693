use crate::error::Result;
use crate::rng::CounterRng;
use crate::spectral::{
    analytic_norm, analytic_norm_sq, bilinear_constant, dealiased_product, inner_product, triple_norm, Grid, NormSpec,
    SpectralField, WeightSchedule,
};

/// Sizes of the property suite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacesOptions {
    pub seed: u64,
    /// Random pairs per `(d, l, s)` combination of the product estimate.
    pub tame_trials: usize,
    /// Random fields for the monotonicity and comparison checks.
    pub field_trials: usize,
    /// Truncation radius of the bilinear constant.
    pub truncation: usize,
}

impl Default for SpacesOptions {
    fn default() -> Self {
        SpacesOptions {
            seed: 7,
            tame_trials: 10_000,
            field_trials: 1_000,
            truncation: 10_000,
        }
    }
}

/// Product-estimate trials for one `(d, l, s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TameSummary {
    pub d: usize,
    pub ell: f64,
    pub s: f64,
    pub constant: f64,
    pub trials: usize,
    pub violations: usize,
    /// Largest `||f g|| / (C (||f||_l ||g||_s + ||f||_s ||g||_l))`.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpacesReport {
    pub tame: Vec<TameSummary>,
    /// Relative gap between the triple norm of a constant trajectory and the
    /// initial analytic norm.
    pub constant_triple_error: f64,
    /// Residuals of the norm-evolution identity under central differences
    /// at steps `h, h/2, h/4`.
    pub evolution_residuals: [f64; 3],
    /// Observed order of those residuals (least-squares slope).
    pub evolution_order: f64,
    pub monotone_trials: usize,
    pub monotone_violations: usize,
    pub comparison_trials: usize,
    pub comparison_violations: usize,
}

impl SpacesReport {
    pub fn tame_ok(&self) -> bool {
        self.tame.iter().all(|t| t.violations == 0)
    }

    pub fn norms_ok(&self) -> bool {
        self.constant_triple_error <= 1e-6
            && self.evolution_order >= 1.9
            && self.monotone_violations == 0
            && self.comparison_violations == 0
    }

    pub fn passed(&self) -> bool {
        self.tame_ok() && self.norms_ok()
    }
}

/// Random field with modes `|m_i| <= band` and coefficient envelope
/// `exp(-decay <m>)`.
fn random_field(grid: &Grid, band: i64, decay: f64, rng: &mut CounterRng) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    let brackets = grid.brackets().to_vec();
    for (flat, c) in f.coeffs_mut().iter_mut().enumerate() {
        let z = rng.complex_normal();
        if !grid.is_nyquist(flat) && grid.mode_of(flat).iter().all(|m| m.abs() <= band) {
            *c = z * (-decay * brackets[flat]).exp();
        }
    }
    f
}

fn tame_trials(d: usize, ell: f64, s: f64, opts: &SpacesOptions, label: u64) -> Result<TameSummary> {
    let constant = bilinear_constant(ell, s, d, opts.truncation)?;
    let (n, max_band) = if d == 1 { (32usize, 7i64) } else { (16, 3) };
    let grid = Grid::torus(&vec![n; d])?;
    let mut rng = CounterRng::substream(opts.seed, label);
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for _ in 0..opts.tame_trials {
        let w = rng.uniform_in(0.0, 1.5);
        let b1 = 1 + (rng.uniform() * max_band as f64) as i64;
        let b2 = 1 + (rng.uniform() * max_band as f64) as i64;
        let f = random_field(&grid, b1.min(max_band), rng.uniform_in(-0.5, 1.0), &mut rng);
        let g = random_field(&grid, b2.min(max_band), rng.uniform_in(-0.5, 1.0), &mut rng);
        let fg = dealiased_product(&[&f, &g])?;
        let nl = |h: &SpectralField, k: f64| analytic_norm(h, NormSpec { ell: k, w });
        let lhs = nl(&fg, ell)?;
        let rhs = constant * (nl(&f, ell)? * nl(&g, s)? + nl(&f, s)? * nl(&g, ell)?);
        let ratio = lhs / rhs;
        if ratio > 1.0 {
            violations += 1;
        }
        max_ratio = max_ratio.max(ratio);
    }
    Ok(TameSummary {
        d,
        ell,
        s,
        constant,
        trials: opts.tame_trials,
        violations,
        max_ratio,
    })
}

fn evolution_residual(psi0: &SpectralField, rate: &SpectralField, ell: f64, schedule: WeightSchedule, t: f64, h: f64) -> Result<f64> {
    // psi(t) = psi0 + t rate, so d/dt psi = rate.
    let at = |s: f64| {
        let mut f = psi0.clone();
        f.axpy(s.into(), rate);
        f
    };
    let norm_sq = |s: f64| -> Result<f64> { analytic_norm_sq(&at(s), NormSpec::new(ell, schedule.weight(s)?)?) };
    let fd = (norm_sq(t + h)? - norm_sq(t - h)?) / (2.0 * h);
    let w = schedule.weight(t)?;
    let psi = at(t);
    let exact = 2.0 * inner_product(&psi, rate, NormSpec::new(ell, w)?)?.re
        - 2.0 * schedule.m * analytic_norm_sq(&psi, NormSpec::new(ell + 0.5, w)?)?;
    Ok((fd - exact).abs())
}

/// Product estimate trials on `T^1` and `T^2` for `(l, s) in {(2, 2), (3, 2)}`
/// plus the analytic-norm identities.
pub fn check_spaces(opts: &SpacesOptions) -> Result<SpacesReport> {
    let mut tame = Vec::new();
    let mut label = 100;
    for d in [1usize, 2] {
        for (ell, s) in [(2.0, 2.0), (3.0, 2.0)] {
            tame.push(tame_trials(d, ell, s, opts, label)?);
            label += 1;
        }
    }

    let grid = Grid::torus(&[16, 16])?;
    let mut rng = CounterRng::substream(opts.seed, 1);
    let psi0 = random_field(&grid, 5, 0.8, &mut rng);
    let rate = random_field(&grid, 5, 0.8, &mut rng);

    let schedule = WeightSchedule::new(1.0, 4.0)?;
    let horizon = 0.2;
    let steps = 4000;
    let spacing = horizon / steps as f64;
    let samples = vec![psi0.clone(); steps + 1];
    let triple = triple_norm(samples.iter(), spacing, 2.0, schedule)?;
    let initial = analytic_norm(&psi0, NormSpec::new(2.0, 1.0)?)?;
    let constant_triple_error = (triple - initial).abs() / initial;

    let h0 = 1e-2;
    let mut evolution_residuals = [0.0; 3];
    for (k, r) in evolution_residuals.iter_mut().enumerate() {
        *r = evolution_residual(&psi0, &rate, 2.0, schedule, 0.1, h0 / 2f64.powi(k as i32))?;
    }
    let evolution_order = ((evolution_residuals[0] / evolution_residuals[1]).log2()
        + (evolution_residuals[1] / evolution_residuals[2]).log2())
        / 2.0;

    let mut monotone_violations = 0;
    let mut comparison_violations = 0;
    let tol = 1e-13;
    for _ in 0..opts.field_trials {
        let f = random_field(&grid, 6, rng.uniform_in(0.0, 1.0), &mut rng);
        let ell = rng.uniform_in(0.0, 4.0);
        let w1 = rng.uniform_in(0.0, 1.5);
        let w2 = w1 + rng.uniform_in(0.0, 1.0);
        let n1 = analytic_norm(&f, NormSpec::new(ell, w1)?)?;
        let n2 = analytic_norm(&f, NormSpec::new(ell, w2)?)?;
        if n1 > n2 * (1.0 + tol) {
            monotone_violations += 1;
        }
        let sobolev = analytic_norm(&f, NormSpec::new(ell, 0.0)?)?;
        if sobolev > n1 * (1.0 + tol) {
            comparison_violations += 1;
        }
    }

    Ok(SpacesReport {
        tame,
        constant_triple_error,
        evolution_residuals,
        evolution_order,
        monotone_trials: opts.field_trials,
        monotone_violations,
        comparison_trials: opts.field_trials,
        comparison_violations,
    })
}
