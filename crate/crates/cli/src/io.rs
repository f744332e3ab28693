//! CSV artifacts. Every file starts with `#` lines holding the command, the
//! tool version, the resolved configuration and resolved quantities such as
//! `M` and `T`, followed by a plain CSV table.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use wkb_core::harness::{CaseResult, RateFit, SweepFits};
use wkb_core::picard::PicardReport;
use wkb_core::stepping::DiagnosticRow;

use crate::config::RunConfig;
use crate::error::CliError;

/// Header shared by every artifact of one command invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub command: String,
    pub config: String,
    pub resolved: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Provenance {
            command: command.to_string(),
            config: config.render(),
            resolved: Vec::new(),
        }
    }

    pub fn resolve(&mut self, key: &str, value: impl ToString) {
        self.resolved.push((key.to_string(), value.to_string()));
    }

    pub fn header(&self) -> String {
        let mut out = format!("# wkb {} {}\n", self.command, env!("CARGO_PKG_VERSION"));
        for line in self.config.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        for (k, v) in &self.resolved {
            out.push_str(&format!("# resolved.{k} = {v}\n"));
        }
        out
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

fn io_err(path: &Path, e: impl ToString) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Writes the provenance header followed by a CSV table.
pub fn write_table(path: &Path, provenance: &Provenance, columns: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(provenance.header().as_bytes()).map_err(|e| io_err(path, e))?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(columns).map_err(|e| io_err(path, e))?;
        for row in rows {
            w.write_record(row).map_err(|e| io_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Two-column `key,value` table.
pub fn write_summary(path: &Path, provenance: &Provenance, pairs: &[(String, String)]) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = pairs.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect();
    write_table(path, provenance, &["key", "value"], &rows)
}

pub const DIAGNOSTIC_COLUMNS: [&str; 5] = ["t", "phi_norm", "a_norm", "mass", "radius"];

pub fn diagnostics_rows(rows: &[DiagnosticRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| vec![num(r.t), num(r.phi_norm), num(r.a_norm), num(r.mass), num(r.radius)])
        .collect()
}

pub const SWEEP_COLUMNS: [&str; 16] = [
    "epsilon",
    "err_phi_1st",
    "err_a_1st",
    "err_phi_2nd",
    "err_a_2nd",
    "err_u_L2",
    "err_u_Linf",
    "err_dens_L1",
    "err_dens_Linf",
    "err_mom_L1",
    "err_mom_Linf",
    "consistency_gap",
    "mass_drift",
    "a_bound_ratio",
    "phi_bound_ratio",
    "radius_margin",
];

pub fn sweep_rows(rows: &[CaseResult]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let e = &r.errors;
            vec![
                num(r.epsilon),
                num(e.phi_first),
                num(e.a_first),
                num(e.phi_second),
                num(e.a_second),
                num(e.wave_l2),
                num(e.wave_linf),
                num(e.density_l1),
                num(e.density_linf),
                num(e.momentum_l1),
                num(e.momentum_linf),
                num(e.consistency_gap),
                num(r.mass_drift),
                num(r.bounds.a_ratio),
                num(r.bounds.phi_ratio),
                num(r.bounds.radius_margin),
            ]
        })
        .collect()
}

pub const RATE_COLUMNS: [&str; 5] = ["quantity", "slope", "intercept", "r_squared", "points"];

pub fn rate_rows(fits: &SweepFits) -> Vec<Vec<String>> {
    fits.named()
        .into_iter()
        .map(|(name, fit): (&str, Option<&RateFit>)| match fit {
            Some(f) => vec![
                name.to_string(),
                num(f.slope),
                num(f.intercept),
                num(f.r_squared),
                f.points.len().to_string(),
            ],
            None => vec![name.to_string(), "NaN".into(), "NaN".into(), "NaN".into(), "0".into()],
        })
        .collect()
}

pub const PICARD_COLUMNS: [&str; 6] = ["iterate", "delta_phi", "delta_a", "ratio", "phi_sq", "a_sq"];

pub fn picard_rows(report: &PicardReport) -> Vec<Vec<String>> {
    report
        .delta_norms
        .iter()
        .enumerate()
        .map(|(k, (dp, da))| {
            let j = k + 1;
            let check = &report.bound_checks[k];
            vec![
                j.to_string(),
                num(*dp),
                num(*da),
                report.ratio(j).map_or_else(|| "NaN".to_string(), num),
                num(check.phi_sq),
                num(check.a_sq),
            ]
        })
        .collect()
}

pub fn picard_summary(report: &PicardReport) -> Vec<(String, String)> {
    vec![
        ("iterate_count".into(), report.iterate_count.to_string()),
        ("converged".into(), report.converged.to_string()),
        ("diverged".into(), report.diverged.to_string()),
        ("final_gap_to_direct".into(), num(report.final_gap_to_direct)),
        ("fixed_point_residual".into(), num(report.fixed_point_residual)),
        ("bound_a_sq".into(), num(report.bounds.a_sq)),
        ("bound_phi_sq".into(), num(report.bounds.phi_sq)),
        ("bounds_hold".into(), report.bounds_hold().to_string()),
    ]
}

/// `dir/name`.
pub fn artifact(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
