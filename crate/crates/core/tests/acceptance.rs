//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::Instant;

use wkb_core::harness::{
    acceptance_scenario, check_spaces, run_case, sweep, well_prepared_data, CaseContext, RateFit,
    ScenarioModel, SpacesOptions, SweepResult,
};
use wkb_core::kernels::kernel_symbol;
use wkb_core::models::{presets, scale_to_norm, NonlocalTerm};
use wkb_core::picard::{picard_run, PicardOptions};
use wkb_core::stepping::{integrate_with, GrenierEvolution, NlsEvolution, StepPlan};
use wkb_core::{Complex64, GrenierState, Grid, KernelSpec, Model, NormSpec, SpectralField, SymMatrix};

const EPSILONS: [f64; 6] = [0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125];

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: &'static str, pass: bool, detail: String) -> Verdict {
    println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    Verdict { id, pass, detail }
}

fn slope(fit: &Option<RateFit>) -> (f64, f64) {
    fit.as_ref().map_or((f64::NAN, f64::NAN), |f| (f.slope, f.r_squared))
}

fn prepared(model: ScenarioModel) -> CaseContext {
    CaseContext::prepare(acceptance_scenario(model, 64).expect("scenario")).expect("prepare")
}

fn equivalence(id: &'static str, model: ScenarioModel) -> Verdict {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let gap = pool.install(|| run_case(&prepared(model), 0.25).expect("case").errors.consistency_gap);
    let secs = start.elapsed().as_secs_f64();
    verdict(id, gap <= 1e-6 && secs <= 120.0, format!("relative L2 gap {gap:.3e} at eps=0.25, {secs:.2} s single-threaded"))
}

fn rates(model: ScenarioModel, res: &SweepResult, tag: &str) -> Vec<Verdict> {
    let f = &res.fits;
    let (s1, r1) = slope(&f.first_order);
    let (s2, _) = slope(&f.second_order);
    let (sw, _) = slope(&f.wave);
    let obs = [
        ("density L1", slope(&f.density_l1).0),
        ("density Linf", slope(&f.density_linf).0),
        ("momentum L1", slope(&f.momentum_l1).0),
        ("momentum Linf", slope(&f.momentum_linf).0),
    ];
    let ids: [&'static str; 3] = match model {
        ScenarioModel::Hyperbolic => ["2", "3", "4"],
        ScenarioModel::DaveyStewartson => ["10.2", "10.3", "10.4"],
    };
    vec![
        verdict(
            ids[0],
            (0.85..=1.15).contains(&s1) && r1 >= 0.99,
            format!("{tag} first-order slope {s1:.4}, r2 {r1:.5}"),
        ),
        verdict(
            ids[1],
            (1.7..=2.3).contains(&s2) && (0.85..=1.15).contains(&sw),
            format!("{tag} second-order slope {s2:.4}, wave-function slope {sw:.4}"),
        ),
        verdict(
            ids[2],
            obs.iter().all(|(_, s)| *s >= 0.85),
            format!(
                "{tag} observable slopes {}",
                obs.iter().map(|(n, s)| format!("{n} {s:.4}")).collect::<Vec<_>>().join(", ")
            ),
        ),
    ]
}

fn apriori(res: &SweepResult, ctx: &CaseContext) -> Verdict {
    let a = res.rows.iter().map(|r| r.bounds.a_ratio).fold(0.0, f64::max);
    let p = res.rows.iter().map(|r| r.bounds.phi_ratio).fold(0.0, f64::max);
    let ok = res.rows.iter().all(|r| r.bounds.holds());
    verdict(
        "5",
        ok && ctx.scenario.safety == 4.0,
        format!("max amplitude ratio {a:.4}, max phase ratio {p:.4} at safety {}", ctx.scenario.safety),
    )
}

fn picard() -> Verdict {
    let mut scenario = acceptance_scenario(ScenarioModel::Hyperbolic, 64).unwrap();
    let spec = NormSpec::new(scenario.params.ell, scenario.params.w0).unwrap();
    scenario.data.a0 = scale_to_norm(&scenario.data.a0, spec, 0.5).unwrap();
    let ctx = CaseContext::prepare(scenario).unwrap();
    let model = ctx.model.with_epsilon(0.25).unwrap();
    let data = well_prepared_data(&ctx.scenario.data, 0.25).unwrap();
    let opts = PicardOptions {
        j_max: 12,
        tol: 1e-10,
        ..PicardOptions::default()
    };
    let (report, _) = picard_run(&model, &data, &ctx.plan, opts).unwrap();
    let late: Vec<f64> = (3..=report.iterate_count).filter_map(|j| report.ratio(j)).collect();
    let worst = late.iter().copied().fold(0.0, f64::max);
    let ok = report.converged
        && report.iterate_count <= 12
        && report.final_gap_to_direct <= 1e-6
        && late.iter().all(|r| *r <= 0.8);
    verdict(
        "6",
        ok,
        format!(
            "{} iterates, max ratio for j>=3 {worst:.3e}, gap to direct solve {:.3e}, M {:.2}",
            report.iterate_count, report.final_gap_to_direct, ctx.m
        ),
    )
}

fn spaces() -> Vec<Verdict> {
    let report = check_spaces(&SpacesOptions {
        seed: 20240917,
        tame_trials: 10_000,
        field_trials: 1_000,
        truncation: 10_000,
    })
    .unwrap();
    let tame = report
        .tame
        .iter()
        .map(|t| format!("d={} (l,s)=({},{}) {} violations, max ratio {:.4}", t.d, t.ell, t.s, t.violations, t.max_ratio))
        .collect::<Vec<_>>()
        .join("; ");
    vec![
        verdict("7", report.tame_ok(), tame),
        verdict(
            "8",
            report.norms_ok(),
            format!(
                "constant triple error {:.2e}, evolution order {:.3}, monotone {}/{} ok, comparison {}/{} ok",
                report.constant_triple_error,
                report.evolution_order,
                report.monotone_trials - report.monotone_violations,
                report.monotone_trials,
                report.comparison_trials - report.comparison_violations,
                report.comparison_trials
            ),
        ),
    ]
}

/// Grenier with no dispersion keeps `a` fixed and moves the phase linearly;
/// NLS without dispersion rotates a constant-modulus wave.
fn exact_solutions(res: &SweepResult) -> Verdict {
    let g = Grid::torus(&[32, 32]).unwrap();
    let (alpha, gamma, w) = (0.6, 0.3, 0.9);
    let mut worst: f64 = 0.0;
    for kernel in [KernelSpec::Identity, KernelSpec::DaveyStewartson { p: 0, q: 1 }] {
        let mut p = presets::free(2, 2.0, 1.0);
        p.h = SymMatrix::zeros(2);
        p.beta = vec![0.0, 0.0];
        p.m = None;
        p.nonlocal = vec![NonlocalTerm::new(1, kernel.clone(), w)];
        let model = Model::new(p.with_epsilon(0.1), &g).unwrap();
        let phi0 = |y: &[f64]| 0.2 * y[0].cos() - 0.1 * (y[1]).sin();
        let a0 = |y: &[f64]| Complex64::new(alpha, 0.0) + Complex64::from_polar(gamma, y[0] + y[1]);
        // |a0|^2 = alpha^2 + gamma^2 + 2 alpha gamma cos(x + y); the DS symbol is 0 at the
        // zero mode and 1/2 at (1, 1).
        let forced = |y: &[f64]| match kernel {
            KernelSpec::Identity => alpha * alpha + gamma * gamma + 2.0 * alpha * gamma * (y[0] + y[1]).cos(),
            _ => alpha * gamma * (y[0] + y[1]).cos(),
        };
        let s0 = GrenierState::new(
            SpectralField::from_fn(&g, |y| phi0(y).into()),
            SpectralField::from_fn(&g, a0),
        )
        .unwrap();
        let plan = StepPlan::new(0.01, 1.0).unwrap();
        let traj = integrate_with(&GrenierEvolution { model: &model }, &s0, &plan, |_, _| Ok(())).unwrap();
        for (k, s) in traj.samples.iter().enumerate() {
            let t = traj.time(k);
            let phi = s.phi.to_physical();
            let a = s.a.to_physical();
            for flat in 0..g.len() {
                let y = g.point(flat);
                worst = worst.max((phi[flat] - Complex64::from(phi0(&y) - t * w * forced(&y))).norm());
                worst = worst.max((a[flat] - a0(&y)).norm());
            }
        }
    }
    let grenier = worst;
    worst = 0.0;
    let mut p = presets::free(2, 2.0, 1.0);
    p.h = SymMatrix::zeros(2);
    p.beta = vec![0.0, 0.0];
    p.m = None;
    p.nonlocal = vec![NonlocalTerm::new(1, KernelSpec::Identity, w)];
    let eps = 0.1;
    let model = Model::new(p.with_epsilon(eps), &g).unwrap();
    let amp = 0.7;
    let u0 = |y: &[f64]| Complex64::from_polar(amp, y[0] - 2.0 * y[1]);
    let traj = integrate_with(
        &NlsEvolution { model: &model },
        &SpectralField::from_fn(&g, u0),
        &StepPlan::new(5e-4, 1.0).unwrap(),
        |_, _| Ok(()),
    )
    .unwrap();
    for (k, u) in traj.samples.iter().enumerate() {
        let rot = Complex64::from_polar(1.0, -w * amp * amp * traj.time(k) / eps);
        let phys = u.to_physical();
        for flat in 0..g.len() {
            worst = worst.max((phys[flat] - u0(&g.point(flat)) * rot).norm());
        }
    }
    let drift = res.rows.iter().map(|r| r.mass_drift).fold(0.0, f64::max);
    verdict(
        "9",
        grenier <= 1e-10 && worst <= 1e-10 && drift <= 1e-8,
        format!(
            "zero-dispersion Linf error {grenier:.2e} (Grenier), {worst:.2e} (NLS) over [0,1], max NLS mass drift {drift:.2e} over [0,T]"
        ),
    )
}

fn ds_symbol() -> Verdict {
    let k = KernelSpec::DaveyStewartson { p: 0, q: 1 };
    let vals: Vec<f64> = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
        .iter()
        .map(|xi| kernel_symbol(&k, xi).unwrap())
        .collect();
    verdict(
        "10.1",
        vals == [1.0, 0.0, 0.5],
        format!("symbol at (1,0), (0,1), (1,1) = {vals:?}"),
    )
}

fn main() {
    let start = Instant::now();
    let mut verdicts = vec![equivalence("1", ScenarioModel::Hyperbolic)];

    let ctx = prepared(ScenarioModel::Hyperbolic);
    let res = sweep(&ctx, &EPSILONS, 0).expect("sweep");
    verdicts.extend(rates(ScenarioModel::Hyperbolic, &res, "hyperbolic"));
    verdicts.push(apriori(&res, &ctx));
    verdicts.push(picard());
    verdicts.extend(spaces());
    verdicts.push(exact_solutions(&res));

    verdicts.push(ds_symbol());
    let ds_ctx = prepared(ScenarioModel::DaveyStewartson);
    let ds = sweep(&ds_ctx, &EPSILONS, 0).expect("ds sweep");
    let gap = ds.rows[0].errors.consistency_gap;
    verdicts.push(verdict("10.1b", gap <= 1e-6, format!("Davey-Stewartson relative L2 gap {gap:.3e} at eps=0.25")));
    verdicts.extend(rates(ScenarioModel::DaveyStewartson, &ds, "Davey-Stewartson"));

    let failed: Vec<&Verdict> = verdicts.iter().filter(|v| !v.pass).collect();
    println!(
        "acceptance: {}/{} passed in {:.1} s",
        verdicts.len() - failed.len(),
        verdicts.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        for v in failed {
            eprintln!("failed criterion {}: {}", v.id, v.detail);
        }
        std::process::exit(1);
    }
}
