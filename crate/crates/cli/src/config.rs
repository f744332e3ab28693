//! Run configuration: `key = value` lines with `#` comments and dotted
//! section keys, read through the TOML span parser so that every problem is
//! reported with its line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;
use toml::de::{DeTable, DeValue};
use wkb_core::harness::{Horizon, DEFAULT_BAND, DEFAULT_DT, DEFAULT_NORMS, DEFAULT_SAFETY, DEFAULT_SEED, DEFAULT_TRUNCATION};
use wkb_core::models::{presets, DataNorms, NonlocalTerm, Preset};
use wkb_core::stepping::{SystemId, DEFAULT_NOISE_FLOOR};
use wkb_core::{KernelSpec, SymMatrix};

/// One problem found in a configuration. `line` is 1-based; `None` for
/// problems not tied to a single line (missing keys, cross-field checks on
/// defaults, command-line overrides).
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "{key}: ")?;
        }
        f.write_str(&self.message)
    }
}

/// Every problem found in a configuration, in line order.
#[derive(Clone, Debug, PartialEq, Error)]
pub struct ConfigError(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Kernel of one nonlocal term as written in a configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelChoice {
    Builtin(KernelSpec),
    /// Symbol values stored in a snapshot file.
    Table(PathBuf),
}

impl KernelChoice {
    /// `identity`, `zero`, `ds(p,q)` with 1-based axes, or `table(path)`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        let lower = t.to_ascii_lowercase();
        if lower == "identity" {
            return Ok(KernelChoice::Builtin(KernelSpec::Identity));
        }
        if lower == "zero" {
            return Ok(KernelChoice::Builtin(KernelSpec::Zero));
        }
        let inner = |prefix: &str| {
            lower
                .strip_prefix(prefix)
                .and_then(|r| r.strip_suffix(')'))
                .map(|_| t[prefix.len()..t.len() - 1].trim().to_string())
        };
        if let Some(args) = inner("ds(") {
            let axes: Vec<&str> = args.split(',').map(str::trim).collect();
            if axes.len() != 2 {
                return Err(format!("ds kernel needs two axes, got '{t}'"));
            }
            let axis = |s: &str| match s.parse::<usize>() {
                Ok(a) if a >= 1 => Ok(a - 1),
                _ => Err(format!("ds axes are 1-based integers, got '{s}'")),
            };
            return Ok(KernelChoice::Builtin(KernelSpec::DaveyStewartson {
                p: axis(axes[0])?,
                q: axis(axes[1])?,
            }));
        }
        if let Some(path) = inner("table(") {
            if path.is_empty() {
                return Err("table kernel needs a path".into());
            }
            return Ok(KernelChoice::Table(PathBuf::from(path)));
        }
        Err(format!("unknown kernel '{t}' (expected identity, zero, ds(p,q) or table(path))"))
    }
}

impl fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelChoice::Builtin(KernelSpec::Identity) => f.write_str("identity"),
            KernelChoice::Builtin(KernelSpec::Zero) => f.write_str("zero"),
            KernelChoice::Builtin(KernelSpec::DaveyStewartson { p, q }) => write!(f, "ds({},{})", p + 1, q + 1),
            KernelChoice::Builtin(KernelSpec::Tabulated(t)) => write!(f, "table({})", t.source()),
            KernelChoice::Table(path) => write!(f, "table({})", path.display()),
        }
    }
}

/// One nonlocal term `weight * (K * |u|^{2 sigma}) u`.
#[derive(Clone, Debug, PartialEq)]
pub struct TermSpec {
    pub sigma: u32,
    pub kernel: KernelChoice,
    pub weight: f64,
}

/// Model symbols with the preset already expanded.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub preset: Preset,
    pub h: SymMatrix,
    pub beta: Vec<f64>,
    pub alpha: f64,
    pub gamma: u32,
    pub terms: Vec<TermSpec>,
    /// Static potential snapshot.
    pub potential: Option<PathBuf>,
    pub ell: f64,
    pub w0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub n: Vec<usize>,
    /// Box lengths; `None` is the `2 pi` torus.
    pub lengths: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSpec {
    /// Seeded analytic profiles rescaled to the given norms.
    Builtin { band: i64, norms: DataNorms },
    /// Snapshot files; missing correctors are zero.
    Snapshots {
        phi0: PathBuf,
        a0: PathBuf,
        phi10: Option<PathBuf>,
        a10: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanSpec {
    pub dt: f64,
    pub horizon: Horizon,
    pub noise_floor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub system: SystemId,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardSettings {
    pub epsilon: f64,
    /// Rescale `a0` to this `H^l_{w0}` norm before selecting `M`.
    pub a0_norm: Option<f64>,
    pub j_max: usize,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpacesSettings {
    pub tame_trials: usize,
    pub field_trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservablesSettings {
    /// Wave-function snapshot; `None` evaluates the Grenier solution of the
    /// configured data at `T`.
    pub snapshot: Option<PathBuf>,
    pub epsilon: f64,
}

/// Fully validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub data: DataSpec,
    /// Sweep list, strictly decreasing in `(0, 1]`.
    pub epsilons: Vec<f64>,
    pub plan: PlanSpec,
    /// `None` selects `M` automatically.
    pub m: Option<f64>,
    pub safety: f64,
    pub truncation: usize,
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub compute_nls: bool,
    pub run: RunOptions,
    pub picard: PicardSettings,
    pub spaces: SpacesSettings,
    pub observables: ObservablesSettings,
}

pub fn default_epsilons() -> Vec<f64> {
    (2..=7).map(|k| 2f64.powi(-k)).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = presets::hyperbolic_nls(1.0, 2.0, 1.0);
        RunConfig {
            model: ModelSpec {
                preset: Preset::HyperbolicNls,
                terms: terms_of(&p.nonlocal),
                h: p.h,
                beta: p.beta,
                alpha: p.alpha,
                gamma: p.gamma,
                potential: None,
                ell: p.ell,
                w0: p.w0,
            },
            grid: GridSpec {
                n: vec![64, 64],
                lengths: None,
            },
            data: DataSpec::Builtin {
                band: DEFAULT_BAND,
                norms: DEFAULT_NORMS,
            },
            epsilons: default_epsilons(),
            plan: PlanSpec {
                dt: DEFAULT_DT,
                horizon: Horizon::default(),
                noise_floor: DEFAULT_NOISE_FLOOR,
            },
            m: None,
            safety: DEFAULT_SAFETY,
            truncation: DEFAULT_TRUNCATION,
            out: PathBuf::from("out"),
            seed: DEFAULT_SEED,
            jobs: 0,
            compute_nls: true,
            run: RunOptions {
                system: SystemId::Grenier,
                epsilon: 0.25,
            },
            picard: PicardSettings {
                epsilon: 0.25,
                a0_norm: None,
                j_max: 12,
                tol: 1e-10,
            },
            spaces: SpacesSettings {
                tame_trials: 10_000,
                field_trials: 1_000,
            },
            observables: ObservablesSettings {
                snapshot: None,
                epsilon: 0.25,
            },
        }
    }
}

fn terms_of(nonlocal: &[NonlocalTerm]) -> Vec<TermSpec> {
    nonlocal
        .iter()
        .map(|t| TermSpec {
            sigma: t.sigma,
            kernel: KernelChoice::Builtin(t.kernel.clone()),
            weight: t.weight,
        })
        .collect()
}

/// Checks a sweep list: nonempty, every value in `(0, 1]`, strictly decreasing.
pub fn check_epsilons(eps: &[f64]) -> Result<(), String> {
    if eps.is_empty() {
        return Err("epsilon list is empty".into());
    }
    if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(format!("epsilon values must lie in (0, 1], got {bad}"));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err("epsilon values must be strictly decreasing".into());
    }
    Ok(())
}

/// Comma-separated list of numbers, as accepted for `epsilon`.
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("'{s}' is not a number")))
        .collect()
}

#[derive(Clone, Debug)]
enum Val {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Array(Vec<Val>),
    Other(&'static str),
}

impl Val {
    fn from_de(v: &DeValue<'_>) -> Self {
        match v {
            DeValue::String(s) => Val::Str(s.to_string()),
            DeValue::Integer(i) => match i64::from_str_radix(i.as_str(), i.radix()) {
                Ok(x) => Val::Int(x),
                Err(_) => Val::Other("out-of-range integer"),
            },
            DeValue::Float(x) => match x.as_str().parse::<f64>() {
                Ok(x) => Val::Float(x),
                Err(_) => Val::Other("float"),
            },
            DeValue::Boolean(b) => Val::Bool(*b),
            DeValue::Array(a) => Val::Array(a.iter().map(|x| Val::from_de(x.get_ref())).collect()),
            DeValue::Datetime(_) => Val::Other("datetime"),
            DeValue::Table(_) => Val::Other("table"),
        }
    }

    fn type_name(&self) -> &'static str {
        match self {
            Val::Str(_) => "string",
            Val::Int(_) => "integer",
            Val::Float(_) => "float",
            Val::Bool(_) => "boolean",
            Val::Array(_) => "array",
            Val::Other(t) => t,
        }
    }

    fn number(&self) -> Option<f64> {
        match self {
            Val::Int(i) => Some(*i as f64),
            Val::Float(x) => Some(*x),
            _ => None,
        }
    }
}

struct Entry {
    line: usize,
    value: Val,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn flatten(text: &str, table: &DeTable<'_>, prefix: &str, out: &mut BTreeMap<String, Entry>) {
    for (key, value) in table.iter() {
        let name = if prefix.is_empty() {
            key.get_ref().to_string()
        } else {
            format!("{prefix}.{}", key.get_ref())
        };
        match value.get_ref() {
            DeValue::Table(inner) => flatten(text, inner, &name, out),
            v => {
                out.insert(
                    name,
                    Entry {
                        line: line_of(text, key.span().start),
                        value: Val::from_de(v),
                    },
                );
            }
        }
    }
}

/// Consumes entries, recording every problem instead of stopping at the first.
struct Reader {
    entries: BTreeMap<String, Entry>,
    lines: BTreeMap<String, usize>,
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn issue(&mut self, key: &str, message: impl Into<String>) {
        let line = self.lines.get(key).copied();
        self.issues.push(ConfigIssue {
            line,
            key: Some(key.to_string()),
            message: message.into(),
        });
    }

    /// Removes `key` and converts it; conversion failures are recorded as
    /// type mismatches.
    fn take<T>(&mut self, key: &str, expected: &str, conv: impl FnOnce(&Val) -> Result<T, String>) -> Option<T> {
        let entry = self.entries.remove(key)?;
        match conv(&entry.value) {
            Ok(v) => Some(v),
            Err(msg) => {
                let detail = if msg.is_empty() {
                    format!("expected {expected}, found {}", entry.value.type_name())
                } else {
                    format!("expected {expected}: {msg}")
                };
                self.issue(key, detail);
                None
            }
        }
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        self.take(key, "a number", |v| v.number().ok_or_else(String::new))
    }

    fn positive(&mut self, key: &str) -> Option<f64> {
        let v = self.f64(key)?;
        if v > 0.0 && v.is_finite() {
            Some(v)
        } else {
            self.issue(key, format!("must be positive and finite, got {v}"));
            None
        }
    }

    fn uint(&mut self, key: &str) -> Option<u64> {
        self.take(key, "a nonnegative integer", |v| match v {
            Val::Int(i) if *i >= 0 => Ok(*i as u64),
            Val::Int(i) => Err(format!("got {i}")),
            _ => Err(String::new()),
        })
    }

    fn boolean(&mut self, key: &str) -> Option<bool> {
        self.take(key, "a boolean", |v| match v {
            Val::Bool(b) => Ok(*b),
            _ => Err(String::new()),
        })
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.take(key, "a string", |v| match v {
            Val::Str(s) => Ok(s.clone()),
            _ => Err(String::new()),
        })
    }

    fn path(&mut self, key: &str) -> Option<PathBuf> {
        let s = self.string(key)?;
        if s.trim().is_empty() {
            self.issue(key, "path is empty");
            return None;
        }
        Some(PathBuf::from(s))
    }

    /// A number or the word `auto` (`None`).
    fn number_or_auto(&mut self, key: &str) -> Option<Option<f64>> {
        self.take(key, "a number or \"auto\"", |v| match v {
            Val::Str(s) if s.trim().eq_ignore_ascii_case("auto") => Ok(None),
            v => v.number().map(Some).ok_or_else(String::new),
        })
    }

    fn f64_list(&mut self, key: &str) -> Option<Vec<f64>> {
        self.take(key, "a list of numbers", |v| match v {
            Val::Str(s) => parse_f64_list(s),
            Val::Array(items) => items
                .iter()
                .map(|x| x.number().ok_or_else(|| format!("found {}", x.type_name())))
                .collect(),
            v => v.number().map(|x| vec![x]).ok_or_else(String::new),
        })
    }

    fn uint_list(&mut self, key: &str) -> Option<Vec<u64>> {
        self.take(key, "a list of nonnegative integers", |v| {
            let one = |x: &Val| match x {
                Val::Int(i) if *i >= 0 => Ok(*i as u64),
                other => Err(format!("found {}", other.type_name())),
            };
            match v {
                Val::Str(s) => s
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<u64>().map_err(|_| format!("'{s}' is not a nonnegative integer")))
                    .collect(),
                Val::Array(items) => items.iter().map(one).collect(),
                v => one(v).map(|x| vec![x]),
            }
        })
    }

    fn str_list(&mut self, key: &str) -> Option<Vec<String>> {
        self.take(key, "a list of names", |v| match v {
            Val::Str(s) => Ok(split_top_level(s)),
            Val::Array(items) => items
                .iter()
                .map(|x| match x {
                    Val::Str(s) => Ok(s.trim().to_string()),
                    other => Err(format!("found {}", other.type_name())),
                })
                .collect(),
            _ => Err(String::new()),
        })
    }

    fn matrix(&mut self, key: &str) -> Option<SymMatrix> {
        let rows: Vec<Vec<f64>> = self.take(key, "a matrix such as \"1 0; 0 -1\"", |v| match v {
            Val::Str(s) => s
                .split(';')
                .map(|row| {
                    row.split(|c: char| c.is_whitespace() || c == ',')
                        .filter(|x| !x.is_empty())
                        .map(|x| x.parse::<f64>().map_err(|_| format!("'{x}' is not a number")))
                        .collect()
                })
                .collect(),
            Val::Array(rows) => rows
                .iter()
                .map(|r| match r {
                    Val::Array(xs) => xs
                        .iter()
                        .map(|x| x.number().ok_or_else(|| format!("found {}", x.type_name())))
                        .collect(),
                    other => Err(format!("row is {}", other.type_name())),
                })
                .collect(),
            _ => Err(String::new()),
        })?;
        match SymMatrix::from_rows(&rows) {
            Ok(h) => Some(h),
            Err(e) => {
                self.issue(key, e.to_string());
                None
            }
        }
    }
}

/// Splits on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn model_section(r: &mut Reader, defaults: &ModelSpec) -> ModelSpec {
    let preset = match r.string("preset") {
        Some(name) => match Preset::parse(name.trim()) {
            Ok(p) => p,
            Err(e) => {
                r.issue("preset", e.to_string());
                defaults.preset
            }
        },
        None => defaults.preset,
    };
    let ell = r.f64("model.ell").unwrap_or(defaults.ell);
    let w0 = r.f64("model.w0").unwrap_or(defaults.w0);
    let sign = r.f64("model.sign");
    let chi = r.f64("model.chi");
    let omega = r.f64("model.omega");
    let integrable = r.boolean("model.integrable");
    let h_given = r.matrix("model.H");

    let base = match preset {
        Preset::HyperbolicNls => Some(presets::hyperbolic_nls(sign.unwrap_or(1.0), ell, w0)),
        Preset::DaveyStewartson2 => {
            let chi = chi.unwrap_or(1.0);
            let integrable = integrable.unwrap_or(omega.is_none());
            Some(presets::davey_stewartson(chi, omega.unwrap_or(-2.0 * chi), integrable, ell, w0))
        }
        Preset::Free => {
            let d = h_given.as_ref().map_or(2, SymMatrix::dim);
            Some(presets::free(d, ell, w0))
        }
        Preset::Custom => {
            if let Some(h) = &h_given {
                let mut p = presets::free(h.dim(), ell, w0);
                p.alpha = 1.0;
                Some(p)
            } else {
                if !r.issues.iter().any(|i| i.key.as_deref() == Some("model.H")) {
                    r.issues.push(ConfigIssue {
                        line: r.lines.get("preset").copied(),
                        key: Some("model.H".into()),
                        message: "custom preset needs model.H".into(),
                    });
                }
                None
            }
        }
    };
    for (key, used, allowed) in [
        ("model.sign", sign.is_some(), preset == Preset::HyperbolicNls),
        ("model.chi", chi.is_some(), preset == Preset::DaveyStewartson2),
        ("model.omega", omega.is_some(), preset == Preset::DaveyStewartson2),
        ("model.integrable", integrable.is_some(), preset == Preset::DaveyStewartson2),
    ] {
        if used && !allowed {
            r.issue(key, format!("not a parameter of preset '{}'", preset.name()));
        }
    }
    let base = base.unwrap_or_else(|| presets::hyperbolic_nls(1.0, ell, w0));
    let h = h_given.unwrap_or(base.h.clone());
    let d = h.dim();
    let beta = match r.f64_list("model.beta") {
        Some(b) => b,
        None if base.beta.len() == d => base.beta.clone(),
        None => vec![0.0; d],
    };
    let alpha = r.f64("model.alpha").unwrap_or(base.alpha);
    let gamma = r
        .uint("model.gamma")
        .map(|g| g as u32)
        .unwrap_or(base.gamma);
    let potential = r.path("model.potential");

    let sigmas = r.uint_list("model.sigma");
    let kernels = r.str_list("model.kernels").map(|names| {
        names
            .iter()
            .map(|n| KernelChoice::parse(n))
            .collect::<Result<Vec<_>, _>>()
    });
    let kernels = match kernels {
        Some(Ok(k)) => Some(k),
        Some(Err(e)) => {
            r.issue("model.kernels", e);
            None
        }
        None => None,
    };
    let weights = r.f64_list("model.weights");
    let terms = if sigmas.is_none() && kernels.is_none() && weights.is_none() {
        terms_of(&base.nonlocal)
    } else {
        let n = [
            sigmas.as_ref().map(Vec::len),
            kernels.as_ref().map(Vec::len),
            weights.as_ref().map(Vec::len),
        ];
        let lens: Vec<usize> = n.iter().flatten().copied().collect();
        if lens.windows(2).any(|w| w[0] != w[1]) {
            r.issue(
                "model.sigma",
                format!("model.sigma, model.kernels and model.weights have different lengths {n:?}"),
            );
            Vec::new()
        } else {
            let count = lens[0];
            (0..count)
                .map(|k| TermSpec {
                    sigma: sigmas.as_ref().map_or(1, |s| s[k] as u32),
                    kernel: kernels
                        .as_ref()
                        .map_or(KernelChoice::Builtin(KernelSpec::Identity), |s| s[k].clone()),
                    weight: weights.as_ref().map_or(1.0, |s| s[k]),
                })
                .collect()
        }
    };
    ModelSpec {
        preset,
        h,
        beta,
        alpha,
        gamma,
        terms,
        potential,
        ell,
        w0,
    }
}

/// Parses and validates a configuration, collecting every problem.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let (doc, syntax) = DeTable::parse_recoverable(text);
    let mut issues: Vec<ConfigIssue> = syntax
        .iter()
        .map(|e| ConfigIssue {
            line: e.span().map(|s| line_of(text, s.start)),
            key: None,
            message: e.message().trim().to_string(),
        })
        .collect();
    let mut entries = BTreeMap::new();
    flatten(text, doc.get_ref(), "", &mut entries);
    let lines = entries.iter().map(|(k, e)| (k.clone(), e.line)).collect();
    let mut r = Reader {
        entries,
        lines,
        issues: Vec::new(),
    };
    let d = RunConfig::default();

    let model = model_section(&mut r, &d.model);

    let grid = GridSpec {
        n: r
            .uint_list("grid.n")
            .map(|v| v.into_iter().map(|x| x as usize).collect())
            .unwrap_or_else(|| vec![64; model.h.dim()]),
        lengths: r.f64_list("grid.L"),
    };

    let profile = r.string("data.profile");
    let band = r.uint("data.band");
    let norms = r.f64_list("data.norms");
    let paths = ["data.phi0", "data.a0", "data.phi10", "data.a10"].map(|k| (k, r.path(k)));
    let snapshot = match profile.as_deref().map(str::trim) {
        None => paths.iter().any(|(_, p)| p.is_some()),
        Some("builtin") => false,
        Some("snapshot") => true,
        Some(other) => {
            r.issue("data.profile", format!("expected \"builtin\" or \"snapshot\", got '{other}'"));
            false
        }
    };
    let data = if snapshot {
        for key in ["data.band", "data.norms"] {
            if r.lines.contains_key(key) {
                r.issue(key, "only used by the builtin profile");
            }
        }
        let [(_, phi0), (_, a0), (_, phi10), (_, a10)] = paths;
        for (key, p) in [("data.phi0", &phi0), ("data.a0", &a0)] {
            if p.is_none() && !r.lines.contains_key(key) {
                r.issues.push(ConfigIssue {
                    line: r.lines.get("data.profile").copied(),
                    key: Some(key.into()),
                    message: "snapshot data needs this path".into(),
                });
            }
        }
        DataSpec::Snapshots {
            phi0: phi0.unwrap_or_default(),
            a0: a0.unwrap_or_default(),
            phi10,
            a10,
        }
    } else {
        for (key, p) in &paths {
            if p.is_some() {
                r.issue(key, "snapshot paths need data.profile = \"snapshot\"");
            }
        }
        let norms = match norms {
            Some(v) if v.len() == 4 && v.iter().all(|x| *x >= 0.0 && x.is_finite()) => DataNorms {
                phi0: v[0],
                a0: v[1],
                phi10: v[2],
                a10: v[3],
            },
            Some(v) => {
                r.issue("data.norms", format!("expected 4 nonnegative norms (phi0, a0, phi10, a10), got {v:?}"));
                DEFAULT_NORMS
            }
            None => DEFAULT_NORMS,
        };
        DataSpec::Builtin {
            band: band.map_or(DEFAULT_BAND, |b| b as i64),
            norms,
        }
    };

    let epsilons = r.f64_list("epsilon").unwrap_or(d.epsilons.clone());

    let dt = r.positive("plan.dt").unwrap_or(d.plan.dt);
    let t_fixed = r.number_or_auto("plan.T").flatten();
    let fraction = r.f64("plan.fraction");
    let t0 = r.positive("plan.T0").unwrap_or(0.5);
    let horizon = match t_fixed {
        Some(t) => {
            if fraction.is_some() {
                r.issue("plan.fraction", "only used when plan.T = \"auto\"");
            }
            Horizon::Fixed { t, t0 }
        }
        None => {
            let fraction = fraction.unwrap_or(0.8);
            if !(fraction > 0.0 && fraction < 1.0) {
                r.issue("plan.fraction", format!("must lie in (0, 1), got {fraction}"));
            }
            Horizon::Auto { fraction, t0 }
        }
    };
    let noise_floor = r.f64("plan.noise_floor").unwrap_or(d.plan.noise_floor);
    if !(0.0..1.0).contains(&noise_floor) {
        r.issue("plan.noise_floor", format!("must lie in [0, 1), got {noise_floor}"));
    }

    let m = r.number_or_auto("M").flatten();
    if let Some(mv) = m {
        if !(mv > 0.0 && mv.is_finite()) {
            r.issue("M", format!("must be positive, got {mv}"));
        }
    }
    let safety = r.f64("select.safety").unwrap_or(d.safety);
    if !(safety >= 1.0) {
        r.issue("select.safety", format!("must be >= 1, got {safety}"));
    }
    let truncation = r.uint("select.truncation").map_or(d.truncation, |t| t as usize);

    let out = r.path("out").unwrap_or(d.out.clone());
    let seed = r.uint("seed").unwrap_or(d.seed);
    let jobs = r.uint("jobs").map_or(0, |j| j as usize);
    let compute_nls = r.boolean("sweep.nls").unwrap_or(true);

    let system = match r.string("run.system") {
        Some(s) => SystemId::parse(s.trim()).unwrap_or_else(|e| {
            r.issue("run.system", e.to_string());
            d.run.system
        }),
        None => d.run.system,
    };
    let unit_eps = |r: &mut Reader, key: &str, default: f64| {
        let v = r.f64(key).unwrap_or(default);
        if !(v > 0.0 && v <= 1.0) {
            r.issue(key, format!("must lie in (0, 1], got {v}"));
        }
        v
    };
    let run = RunOptions {
        system,
        epsilon: unit_eps(&mut r, "run.epsilon", d.run.epsilon),
    };
    let picard = PicardSettings {
        epsilon: unit_eps(&mut r, "picard.epsilon", d.picard.epsilon),
        a0_norm: r.positive("picard.a0"),
        j_max: r.uint("picard.j_max").map_or(d.picard.j_max, |j| j as usize),
        tol: r.positive("picard.tol").unwrap_or(d.picard.tol),
    };
    if picard.j_max < 2 {
        r.issue("picard.j_max", "must be >= 2");
    }
    let spaces = SpacesSettings {
        tame_trials: r.uint("spaces.tame_trials").map_or(d.spaces.tame_trials, |x| x as usize),
        field_trials: r.uint("spaces.field_trials").map_or(d.spaces.field_trials, |x| x as usize),
    };
    let observables = ObservablesSettings {
        snapshot: r.path("observables.snapshot"),
        epsilon: unit_eps(&mut r, "observables.epsilon", d.observables.epsilon),
    };

    let leftover: Vec<String> = r.entries.keys().cloned().collect();
    for key in leftover {
        r.issue(&key, "unknown key");
    }

    let config = RunConfig {
        model,
        grid,
        data,
        epsilons,
        plan: PlanSpec {
            dt,
            horizon,
            noise_floor,
        },
        m,
        safety,
        truncation,
        out,
        seed,
        jobs,
        compute_nls,
        run,
        picard,
        spaces,
        observables,
    };
    for (key, message) in config.structural_problems() {
        r.issue(key, message);
    }
    issues.append(&mut r.issues);
    if issues.is_empty() {
        Ok(config)
    } else {
        issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        Err(ConfigError(issues))
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_list<T: fmt::Display>(xs: &[T]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    parts.join(", ")
}

fn fmt_f64_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| fmt_f64(*x)).collect();
    parts.join(", ")
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

impl RunConfig {
    /// Cross-field constraints: `l > (d+1)/2`, matching dimensions, a
    /// valid grid and sweep list.
    pub fn structural_problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let d = self.model.h.dim();
        if !(self.model.ell > (d as f64 + 1.0) / 2.0) {
            out.push(("model.ell", format!("l must exceed (d+1)/2 = {}, got {}", (d as f64 + 1.0) / 2.0, self.model.ell)));
        }
        if !(self.model.w0 > 0.0 && self.model.w0.is_finite()) {
            out.push(("model.w0", format!("must be positive, got {}", self.model.w0)));
        }
        if self.model.beta.len() != d {
            out.push(("model.beta", format!("has {} entries, model dimension is {d}", self.model.beta.len())));
        }
        if self.model.gamma < 1 {
            out.push(("model.gamma", "must be >= 1".into()));
        }
        if self.model.terms.iter().any(|t| t.sigma < 1) {
            out.push(("model.sigma", "every sigma must be >= 1".into()));
        }
        for t in &self.model.terms {
            if let KernelChoice::Builtin(k) = &t.kernel {
                if let Err(e) = k.validate(d) {
                    out.push(("model.kernels", e.to_string()));
                }
            }
        }
        if self.grid.n.len() != d {
            out.push(("grid.n", format!("has {} axes, model dimension is {d}", self.grid.n.len())));
        }
        if self.grid.n.iter().any(|&n| n < 4 || n % 2 != 0) {
            out.push(("grid.n", format!("sizes must be even and >= 4, got {:?}", self.grid.n)));
        }
        if let Some(l) = &self.grid.lengths {
            if l.len() != self.grid.n.len() || l.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                out.push(("grid.L", format!("needs {} positive lengths, got {l:?}", self.grid.n.len())));
            }
        }
        if let Err(e) = check_epsilons(&self.epsilons) {
            out.push(("epsilon", e));
        }
        if let Horizon::Fixed { t, t0 } = self.plan.horizon {
            if !(t > 0.0 && t <= t0) {
                out.push(("plan.T", format!("must lie in (0, T0 = {t0}], got {t}")));
            }
        }
        out
    }

    /// Configuration text that parses back to `self`.
    pub fn render(&self) -> String {
        let m = &self.model;
        let mut lines = vec![format!("preset = {}", quote(m.preset.name()))];
        let rows: Vec<String> = (0..m.h.dim())
            .map(|i| {
                let row: Vec<String> = (0..m.h.dim()).map(|j| fmt_f64(m.h.get(i, j))).collect();
                row.join(" ")
            })
            .collect();
        lines.push(format!("model.H = {}", quote(&rows.join("; "))));
        lines.push(format!("model.beta = {}", quote(&fmt_f64_list(&m.beta))));
        lines.push(format!("model.alpha = {}", fmt_f64(m.alpha)));
        lines.push(format!("model.gamma = {}", m.gamma));
        let sigmas: Vec<u32> = m.terms.iter().map(|t| t.sigma).collect();
        let kernels: Vec<String> = m.terms.iter().map(|t| t.kernel.to_string()).collect();
        let weights: Vec<f64> = m.terms.iter().map(|t| t.weight).collect();
        lines.push(format!("model.sigma = {}", quote(&fmt_list(&sigmas))));
        lines.push(format!("model.kernels = {}", quote(&kernels.join(", "))));
        lines.push(format!("model.weights = {}", quote(&fmt_f64_list(&weights))));
        if let Some(p) = &m.potential {
            lines.push(format!("model.potential = {}", quote(&p.display().to_string())));
        }
        lines.push(format!("model.ell = {}", fmt_f64(m.ell)));
        lines.push(format!("model.w0 = {}", fmt_f64(m.w0)));
        lines.push(format!("grid.n = {}", quote(&fmt_list(&self.grid.n))));
        if let Some(l) = &self.grid.lengths {
            lines.push(format!("grid.L = {}", quote(&fmt_f64_list(l))));
        }
        match &self.data {
            DataSpec::Builtin { band, norms } => {
                lines.push(format!("data.profile = {}", quote("builtin")));
                lines.push(format!("data.band = {band}"));
                lines.push(format!(
                    "data.norms = {}",
                    quote(&fmt_f64_list(&[norms.phi0, norms.a0, norms.phi10, norms.a10]))
                ));
            }
            DataSpec::Snapshots { phi0, a0, phi10, a10 } => {
                lines.push(format!("data.profile = {}", quote("snapshot")));
                for (key, p) in [("phi0", Some(phi0)), ("a0", Some(a0)), ("phi10", phi10.as_ref()), ("a10", a10.as_ref())] {
                    if let Some(p) = p {
                        lines.push(format!("data.{key} = {}", quote(&p.display().to_string())));
                    }
                }
            }
        }
        lines.push(format!("epsilon = {}", quote(&fmt_f64_list(&self.epsilons))));
        lines.push(format!("plan.dt = {}", fmt_f64(self.plan.dt)));
        match self.plan.horizon {
            Horizon::Auto { fraction, t0 } => {
                lines.push(format!("plan.T = {}", quote("auto")));
                lines.push(format!("plan.fraction = {}", fmt_f64(fraction)));
                lines.push(format!("plan.T0 = {}", fmt_f64(t0)));
            }
            Horizon::Fixed { t, t0 } => {
                lines.push(format!("plan.T = {}", fmt_f64(t)));
                lines.push(format!("plan.T0 = {}", fmt_f64(t0)));
            }
        }
        lines.push(format!("plan.noise_floor = {}", fmt_f64(self.plan.noise_floor)));
        lines.push(match self.m {
            Some(mv) => format!("M = {}", fmt_f64(mv)),
            None => format!("M = {}", quote("auto")),
        });
        lines.push(format!("select.safety = {}", fmt_f64(self.safety)));
        lines.push(format!("select.truncation = {}", self.truncation));
        lines.push(format!("out = {}", quote(&self.out.display().to_string())));
        lines.push(format!("seed = {}", self.seed));
        lines.push(format!("jobs = {}", self.jobs));
        lines.push(format!("sweep.nls = {}", self.compute_nls));
        lines.push(format!("run.system = {}", quote(self.run.system.name())));
        lines.push(format!("run.epsilon = {}", fmt_f64(self.run.epsilon)));
        lines.push(format!("picard.epsilon = {}", fmt_f64(self.picard.epsilon)));
        if let Some(a) = self.picard.a0_norm {
            lines.push(format!("picard.a0 = {}", fmt_f64(a)));
        }
        lines.push(format!("picard.j_max = {}", self.picard.j_max));
        lines.push(format!("picard.tol = {}", fmt_f64(self.picard.tol)));
        lines.push(format!("spaces.tame_trials = {}", self.spaces.tame_trials));
        lines.push(format!("spaces.field_trials = {}", self.spaces.field_trials));
        if let Some(p) = &self.observables.snapshot {
            lines.push(format!("observables.snapshot = {}", quote(&p.display().to_string())));
        }
        lines.push(format!("observables.epsilon = {}", fmt_f64(self.observables.epsilon)));
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
        let c = parse_config("# only a comment\npreset = \"hyperbolic-nls\"\n").unwrap();
        assert_eq!(c.model.ell, 2.0);
        assert_eq!(c.model.w0, 1.0);
        assert_eq!(c.model.terms.len(), 1);
        assert_eq!(c.model.terms[0].weight, -1.0);
    }

    #[test]
    fn kernel_names_round_trip() {
        for name in ["identity", "zero", "ds(1,2)", "ds(2,1)", "table(k.bin)"] {
            let k = KernelChoice::parse(name).unwrap();
            assert_eq!(k.to_string(), name);
        }
        assert_eq!(
            KernelChoice::parse(" DS( 1 , 2 ) ").unwrap(),
            KernelChoice::Builtin(KernelSpec::DaveyStewartson { p: 0, q: 1 })
        );
        assert!(KernelChoice::parse("ds(0,1)").is_err());
        assert!(KernelChoice::parse("gauss").is_err());
    }

    #[test]
    fn split_respects_parentheses() {
        assert_eq!(split_top_level("identity, ds(1,2)"), vec!["identity", "ds(1,2)"]);
        assert!(split_top_level("  ").is_empty());
    }

    #[test]
    fn reports_all_errors_with_lines() {
        let text = "preset = \"custom\"\nmodel.H = \"1 0; 0 -1\"\nmodel.bogus = 3\nmodel.alpha = \"x\"\nepsilon = \"0.1, 0.2\"\n";
        let err = parse_config(text).unwrap_err();
        let lines: Vec<Option<usize>> = err.0.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![Some(3), Some(4), Some(5)], "{err}");
        assert!(err.0[0].message.contains("unknown key"));
        assert!(err.0[1].message.contains("expected a number"));
        assert!(err.0[2].message.contains("strictly decreasing"));
    }

    #[test]
    fn custom_needs_h() {
        let err = parse_config("preset = \"custom\"\n").unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].key.as_deref(), Some("model.H"));
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let err = parse_config("seed = 1\njobs = = 2\n").unwrap_err();
        assert_eq!(err.0[0].line, Some(2), "{err}");
    }

    #[test]
    fn low_regularity_is_rejected() {
        let err = parse_config("model.ell = 1.25\n").unwrap_err();
        assert_eq!(err.0[0].line, Some(1));
        assert!(err.0[0].message.contains("(d+1)/2"));
    }

    #[test]
    fn sections_and_dotted_keys_agree() {
        let a = parse_config("[plan]\ndt = 1e-3\nT = 0.01\n").unwrap();
        let b = parse_config("plan.dt = 0.001\nplan.T = 0.01\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.plan.horizon, Horizon::Fixed { t: 0.01, t0: 0.5 });
    }

    #[test]
    fn two_nonlocal_terms_round_trip() {
        let text = "preset = \"custom\"\nmodel.H = \"1 0; 0 -1\"\nmodel.sigma = \"1, 2\"\nmodel.kernels = \"identity, ds(1,2)\"\nmodel.weights = \"1, -0.5\"\nepsilon = \"0.5, 0.25, 0.125, 0.0625\"\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.model.terms.len(), 2);
        assert_eq!(c.model.terms[1].sigma, 2);
        assert_eq!(
            c.model.terms[1].kernel,
            KernelChoice::Builtin(KernelSpec::DaveyStewartson { p: 0, q: 1 })
        );
        assert_eq!(c.epsilons, vec![0.5, 0.25, 0.125, 0.0625]);
        assert_eq!(parse_config(&c.render()).unwrap(), c);
        let d = RunConfig::default();
        assert_eq!(parse_config(&d.render()).unwrap(), d);
    }

    #[test]
    fn preset_parameters_expand() {
        let c = parse_config("preset = \"davey-stewartson-2\"\nmodel.chi = 0.5\n").unwrap();
        assert_eq!(c.model.terms.len(), 2);
        assert_eq!(c.model.terms[1].weight, -1.0);
        let err = parse_config("model.chi = 0.5\n").unwrap_err();
        assert!(err.0[0].message.contains("not a parameter"));
    }
}
