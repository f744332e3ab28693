use rayon::prelude::*;

use super::case::{run_case, CaseContext, CaseResult};
use super::fit::{fit_rate, RateFit};
use crate::error::{Error, Result};

/// Rate fits of every error family against epsilon.
#[derive(Clone, Debug, Default)]
pub struct SweepFits {
    pub first_order: Option<RateFit>,
    pub second_order: Option<RateFit>,
    pub wave: Option<RateFit>,
    pub wave_l2: Option<RateFit>,
    pub wave_linf: Option<RateFit>,
    pub density_l1: Option<RateFit>,
    pub density_linf: Option<RateFit>,
    pub momentum_l1: Option<RateFit>,
    pub momentum_linf: Option<RateFit>,
}

impl SweepFits {
    /// `(name, fit)` pairs in a fixed order.
    pub fn named(&self) -> Vec<(&'static str, Option<&RateFit>)> {
        vec![
            ("first_order", self.first_order.as_ref()),
            ("second_order", self.second_order.as_ref()),
            ("wave", self.wave.as_ref()),
            ("wave_l2", self.wave_l2.as_ref()),
            ("wave_linf", self.wave_linf.as_ref()),
            ("density_l1", self.density_l1.as_ref()),
            ("density_linf", self.density_linf.as_ref()),
            ("momentum_l1", self.momentum_l1.as_ref()),
            ("momentum_linf", self.momentum_linf.as_ref()),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    /// One row per epsilon, in the order given.
    pub rows: Vec<CaseResult>,
    pub fits: SweepFits,
}

fn fit_of(rows: &[CaseResult], f: impl Fn(&CaseResult) -> f64) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon, f(r))).collect();
    match fit_rate(&pts) {
        Ok(fit) => Some(fit),
        Err(e) => {
            log::warn!("rate fit skipped: {e}");
            None
        }
    }
}

pub fn fit_all(rows: &[CaseResult]) -> SweepFits {
    SweepFits {
        first_order: fit_of(rows, |r| r.errors.first_order()),
        second_order: fit_of(rows, |r| r.errors.second_order()),
        wave: fit_of(rows, |r| r.errors.wave()),
        wave_l2: fit_of(rows, |r| r.errors.wave_l2),
        wave_linf: fit_of(rows, |r| r.errors.wave_linf),
        density_l1: fit_of(rows, |r| r.errors.density_l1),
        density_linf: fit_of(rows, |r| r.errors.density_linf),
        momentum_l1: fit_of(rows, |r| r.errors.momentum_l1),
        momentum_linf: fit_of(rows, |r| r.errors.momentum_linf),
    }
}

/// Runs every epsilon as an independent job on `jobs` threads (0 = all
/// cores). Results are returned in input order regardless of scheduling.
pub fn sweep(ctx: &CaseContext, epsilons: &[f64], jobs: usize) -> Result<SweepResult> {
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Param("sweep epsilons must be strictly decreasing".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Param(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        epsilons
            .par_iter()
            .map(|&eps| run_case(ctx, eps))
            .collect::<Result<Vec<_>>>()
    })?;
    let fits = fit_all(&rows);
    Ok(SweepResult { rows, fits })
}
