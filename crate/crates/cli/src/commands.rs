//! Subcommands: building the model, data and scenario from a configuration
//! and writing the artifacts.

use std::path::PathBuf;

use wkb_core::harness::{
    amplitude_observables, check_spaces, observables, sweep, well_prepared_data, CaseContext, Scenario,
    SpacesOptions,
};
use wkb_core::kernels::KernelSpec;
use wkb_core::models::{default_data, scale_to_norm, NonlocalTerm, Potential, WkbData};
use wkb_core::picard::{picard_run, PicardOptions};
use wkb_core::spectral::{load_snapshot, save_snapshot};
use wkb_core::stepping::{integrate, SystemId, SystemState, SystemTrajectory};
use wkb_core::{Error, GrenierState, Grid, ModelParams, NormSpec, SpectralField};

use crate::config::{DataSpec, KernelChoice, RunConfig};
use crate::error::CliError;
use crate::io::{self, num, Provenance};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Run,
    Sweep,
    Picard,
    CheckSpaces,
    Observables,
    Info,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Sweep => "sweep",
            Command::Picard => "picard",
            Command::CheckSpaces => "check-spaces",
            Command::Observables => "observables",
            Command::Info => "info",
        }
    }
}

/// Printed summary and the files written.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub summary: Vec<(String, String)>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    fn put(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }
}

pub fn build_grid(cfg: &RunConfig) -> Result<Grid, CliError> {
    Ok(match &cfg.grid.lengths {
        Some(l) => Grid::new(&cfg.grid.n, l)?,
        None => Grid::torus(&cfg.grid.n)?,
    })
}

fn load_on(path: &PathBuf, grid: &Grid, what: &str) -> Result<SpectralField, CliError> {
    let f = load_snapshot(path).map_err(|e| e.context(format!("{what} ({})", path.display())))?;
    if f.grid() != grid {
        return Err(Error::GridMismatch.context(format!("{what} ({})", path.display())).into());
    }
    Ok(f)
}

pub fn build_params(cfg: &RunConfig, grid: &Grid) -> Result<ModelParams, CliError> {
    let m = &cfg.model;
    let mut nonlocal = Vec::with_capacity(m.terms.len());
    for t in &m.terms {
        let kernel = match &t.kernel {
            KernelChoice::Builtin(k) => k.clone(),
            KernelChoice::Table(path) => {
                let field = load_snapshot(path).map_err(|e| e.context(format!("kernel table ({})", path.display())))?;
                KernelSpec::tabulated(&field, path.display().to_string())?
            }
        };
        nonlocal.push(NonlocalTerm::new(t.sigma, kernel, t.weight));
    }
    let potential = match &m.potential {
        Some(path) => Potential::Static(load_on(path, grid, "potential")?),
        None => Potential::Zero,
    };
    let params = ModelParams {
        h: m.h.clone(),
        beta: m.beta.clone(),
        alpha: m.alpha,
        gamma: m.gamma,
        nonlocal,
        potential,
        epsilon: 0.0,
        ell: m.ell,
        w0: m.w0,
        m: cfg.m,
    };
    params.validate()?;
    Ok(params)
}

pub fn build_data(cfg: &RunConfig, grid: &Grid) -> Result<WkbData, CliError> {
    match &cfg.data {
        DataSpec::Builtin { band, norms } => {
            Ok(default_data(grid, *band, cfg.model.ell, cfg.model.w0, *norms, cfg.seed)?)
        }
        DataSpec::Snapshots { phi0, a0, phi10, a10 } => {
            let phi0 = load_on(phi0, grid, "phi0")?;
            let a0 = load_on(a0, grid, "a0")?;
            let opt = |p: &Option<PathBuf>, what| match p {
                Some(p) => load_on(p, grid, what),
                None => Ok(SpectralField::zeros(grid)),
            };
            Ok(WkbData {
                phi10: opt(phi10, "phi10")?,
                a10: opt(a10, "a10")?,
                phi0,
                a0,
            })
        }
    }
}

pub fn build_scenario(cfg: &RunConfig) -> Result<Scenario, CliError> {
    let grid = build_grid(cfg)?;
    let params = build_params(cfg, &grid)?;
    let data = build_data(cfg, &grid)?;
    Ok(Scenario {
        params,
        grid,
        data,
        dt: cfg.plan.dt,
        noise_floor: cfg.plan.noise_floor,
        horizon: cfg.plan.horizon,
        safety: cfg.safety,
        truncation: cfg.truncation,
        compute_nls: cfg.compute_nls,
    })
}

fn resolved(prov: &mut Provenance, ctx: &CaseContext) {
    prov.resolve("M", num(ctx.m));
    prov.resolve("T", num(ctx.t));
    prov.resolve("steps", ctx.plan.steps);
    prov.resolve("dt", num(ctx.plan.dt));
}

fn context_summary(out: &mut Outcome, ctx: &CaseContext) {
    let p = &ctx.scenario.params;
    out.put("dimension", ctx.scenario.grid.dim());
    out.put("grid", format!("{:?}", ctx.scenario.grid.n()));
    out.put("ell", num(p.ell));
    out.put("w0", num(p.w0));
    out.put("bilinear_constant", num(ctx.constant));
    out.put("norm_phi0", num(ctx.index_norms.phi0));
    out.put("norm_a0", num(ctx.index_norms.a0));
    out.put("norm_V", num(ctx.index_norms.v));
    match &ctx.selection {
        Some(sel) => {
            out.put("M_source", "auto");
            out.put("M_min", num(sel.m_min));
            out.put("safety", num(ctx.scenario.safety));
            out.put("T_cap", num(sel.horizon_cap));
        }
        None => out.put("M_source", "explicit"),
    }
    out.put("M", num(ctx.m));
    out.put("T", num(ctx.t));
    out.put("steps", ctx.plan.steps);
    out.put("dt", num(ctx.plan.dt));
}

fn prepare(cfg: &RunConfig) -> Result<CaseContext, CliError> {
    Ok(CaseContext::prepare(build_scenario(cfg)?)?)
}

fn info(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ctx = prepare(cfg)?;
    let mut out = Outcome::default();
    out.put("preset", cfg.model.preset.name());
    context_summary(&mut out, &ctx);
    Ok(out)
}

fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ctx = prepare(cfg)?;
    let eps = cfg.run.epsilon;
    let system = cfg.run.system;
    let (model, initial, background) = match system {
        SystemId::Grenier => (
            ctx.model.with_epsilon(eps)?,
            SystemState::Pair(well_prepared_data(&ctx.scenario.data, eps)?),
            None,
        ),
        SystemId::Nls => {
            let pair = well_prepared_data(&ctx.scenario.data, eps)?;
            let u0 = SpectralField::from_physical(&ctx.scenario.grid, pair.wave_function(eps))?;
            (ctx.model.with_epsilon(eps)?, SystemState::Wave(u0), None)
        }
        SystemId::Limit => (
            ctx.model.clone(),
            SystemState::Pair(GrenierState::new(ctx.scenario.data.phi0.clone(), ctx.scenario.data.a0.clone())?),
            None,
        ),
        SystemId::Linearized => (
            ctx.model.clone(),
            SystemState::Pair(GrenierState::new(ctx.scenario.data.phi10.clone(), ctx.scenario.data.a10.clone())?),
            Some(&ctx.limit),
        ),
    };
    let traj = integrate(system, &initial, &model, &ctx.plan, background)?;

    let dir = cfg.out.clone();
    io::ensure_dir(&dir)?;
    let mut prov = Provenance::new("run", cfg);
    resolved(&mut prov, &ctx);
    let mut out = Outcome::default();
    let diag = io::artifact(&dir, "diagnostics.csv");
    io::write_table(&diag, &prov, &io::DIAGNOSTIC_COLUMNS, &io::diagnostics_rows(traj.diagnostics()))?;
    out.artifacts.push(diag);
    let snaps: Vec<(&str, &SpectralField)> = match &traj {
        SystemTrajectory::Wave(t) => vec![("final_u.wkbf", t.last())],
        SystemTrajectory::Pair(t) => vec![("final_phi.wkbf", &t.last().phi), ("final_a.wkbf", &t.last().a)],
    };
    for (name, field) in snaps {
        let path = io::artifact(&dir, name);
        save_snapshot(&path, field).map_err(|e| e.context(path.display().to_string()))?;
        out.artifacts.push(path);
    }
    out.put("system", system.name());
    out.put("epsilon", num(model.epsilon()));
    out.put("M", num(ctx.m));
    out.put("T", num(ctx.t));
    out.put("steps", ctx.plan.steps);
    if let Some(last) = traj.diagnostics().last() {
        out.put("final_mass", num(last.mass));
        out.put("final_a_norm", num(last.a_norm));
        out.put("final_radius", num(last.radius));
    }
    Ok(out)
}

fn sweep_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ctx = prepare(cfg)?;
    let result = sweep(&ctx, &cfg.epsilons, cfg.jobs)?;
    let dir = cfg.out.clone();
    io::ensure_dir(&dir)?;
    let mut prov = Provenance::new("sweep", cfg);
    resolved(&mut prov, &ctx);
    let mut out = Outcome::default();
    let table = io::artifact(&dir, "sweep.csv");
    io::write_table(&table, &prov, &io::SWEEP_COLUMNS, &io::sweep_rows(&result.rows))?;
    let rates = io::artifact(&dir, "rates.csv");
    io::write_table(&rates, &prov, &io::RATE_COLUMNS, &io::rate_rows(&result.fits))?;
    out.artifacts = vec![table, rates];
    out.put("M", num(ctx.m));
    out.put("T", num(ctx.t));
    out.put("rows", result.rows.len());
    for (name, fit) in result.fits.named() {
        match fit {
            Some(f) => out.put(&format!("slope_{name}"), format!("{:.4} (r2 {:.5})", f.slope, f.r_squared)),
            None => out.put(&format!("slope_{name}"), "unavailable"),
        }
    }
    let bounds = result.rows.iter().all(|r| r.bounds.holds());
    out.put("bounds_hold", bounds);
    Ok(out)
}

fn picard_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut scenario = build_scenario(cfg)?;
    if let Some(target) = cfg.picard.a0_norm {
        let spec = NormSpec::new(scenario.params.ell, scenario.params.w0)?;
        scenario.data.a0 = scale_to_norm(&scenario.data.a0, spec, target)?;
    }
    let ctx = CaseContext::prepare(scenario)?;
    let eps = cfg.picard.epsilon;
    let model = ctx.model.with_epsilon(eps)?;
    let data = well_prepared_data(&ctx.scenario.data, eps)?;
    let options = PicardOptions {
        j_max: cfg.picard.j_max,
        tol: cfg.picard.tol,
        ..PicardOptions::default()
    };
    let (report, _) = picard_run(&model, &data, &ctx.plan, options)?;

    let dir = cfg.out.clone();
    io::ensure_dir(&dir)?;
    let mut prov = Provenance::new("picard", cfg);
    resolved(&mut prov, &ctx);
    let table = io::artifact(&dir, "picard.csv");
    io::write_table(&table, &prov, &io::PICARD_COLUMNS, &io::picard_rows(&report))?;
    let summary = io::picard_summary(&report);
    let sum_path = io::artifact(&dir, "picard_summary.csv");
    io::write_summary(&sum_path, &prov, &summary)?;
    let mut out = Outcome {
        summary: Vec::new(),
        artifacts: vec![table, sum_path],
    };
    out.put("M", num(ctx.m));
    out.put("T", num(ctx.t));
    out.put("epsilon", num(eps));
    out.summary.extend(summary);
    Ok(out)
}

fn spaces_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let opts = SpacesOptions {
        seed: cfg.seed,
        tame_trials: cfg.spaces.tame_trials,
        field_trials: cfg.spaces.field_trials,
        truncation: cfg.truncation,
    };
    let report = check_spaces(&opts)?;
    let dir = cfg.out.clone();
    io::ensure_dir(&dir)?;
    let prov = Provenance::new("check-spaces", cfg);
    let rows: Vec<Vec<String>> = report
        .tame
        .iter()
        .map(|t| {
            vec![
                t.d.to_string(),
                num(t.ell),
                num(t.s),
                num(t.constant),
                t.trials.to_string(),
                t.violations.to_string(),
                num(t.max_ratio),
            ]
        })
        .collect();
    let tame = io::artifact(&dir, "spaces_tame.csv");
    io::write_table(&tame, &prov, &["d", "ell", "s", "constant", "trials", "violations", "max_ratio"], &rows)?;
    let mut out = Outcome::default();
    for t in &report.tame {
        out.put(
            &format!("tame_d{}_l{}_s{}", t.d, t.ell, t.s),
            format!("{} trials, {} violations, max ratio {:.4}", t.trials, t.violations, t.max_ratio),
        );
    }
    out.put("constant_triple_error", num(report.constant_triple_error));
    out.put("evolution_order", format!("{:.4}", report.evolution_order));
    out.put(
        "monotone",
        format!("{} trials, {} violations", report.monotone_trials, report.monotone_violations),
    );
    out.put(
        "comparison",
        format!("{} trials, {} violations", report.comparison_trials, report.comparison_violations),
    );
    out.put("passed", report.passed());
    let sum_path = io::artifact(&dir, "spaces_summary.csv");
    io::write_summary(&sum_path, &prov, &out.summary)?;
    out.artifacts = vec![tame, sum_path];
    if !report.passed() {
        return Err(CliError::Check("property suite reported violations".into()));
    }
    Ok(out)
}

fn observables_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let eps = cfg.observables.epsilon;
    let mut prov = Provenance::new("observables", cfg);
    let (grid, density, momentum) = match &cfg.observables.snapshot {
        Some(path) => {
            let u = load_snapshot(path).map_err(|e| e.context(path.display().to_string()))?;
            let obs = observables(&u, eps)?;
            let real = |f: &SpectralField| f.to_physical().iter().map(|z| z.re).collect::<Vec<f64>>();
            let momentum = obs.momentum.iter().map(real).collect();
            (u.grid().clone(), real(&obs.density), momentum)
        }
        None => {
            let ctx = prepare(cfg)?;
            resolved(&mut prov, &ctx);
            let model = ctx.model.with_epsilon(eps)?;
            let start = SystemState::Pair(well_prepared_data(&ctx.scenario.data, eps)?);
            let traj = integrate(SystemId::Grenier, &start, &model, &ctx.plan, None)?;
            let SystemTrajectory::Pair(t) = traj else {
                unreachable!("Grenier runs produce pairs")
            };
            let (density, momentum) = amplitude_observables(t.last(), eps);
            (ctx.scenario.grid.clone(), density, momentum)
        }
    };
    let d = grid.dim();
    let mut columns: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    columns.push("density".into());
    columns.extend((1..=d).map(|j| format!("momentum_{j}")));
    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|flat| {
            let mut row: Vec<String> = grid.point(flat).into_iter().map(num).collect();
            row.push(num(density[flat]));
            row.extend(momentum.iter().map(|m| num(m[flat])));
            row
        })
        .collect();
    let dir = cfg.out.clone();
    io::ensure_dir(&dir)?;
    let path = io::artifact(&dir, "observables.csv");
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    io::write_table(&path, &prov, &cols, &rows)?;
    let cell = grid.cell_volume();
    let mut out = Outcome::default();
    out.put("epsilon", num(eps));
    out.put("mass", num(density.iter().sum::<f64>() * cell));
    for (j, m) in momentum.iter().enumerate() {
        out.put(&format!("momentum_{}", j + 1), num(m.iter().sum::<f64>() * cell));
    }
    out.artifacts.push(path);
    Ok(out)
}

/// Runs one subcommand.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Run => run(cfg),
        Command::Sweep => sweep_cmd(cfg),
        Command::Picard => picard_cmd(cfg),
        Command::CheckSpaces => spaces_cmd(cfg),
        Command::Observables => observables_cmd(cfg),
        Command::Info => info(cfg),
    }
}

