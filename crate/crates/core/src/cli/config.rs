//! Experiment configuration.
//!
//! The config file is TOML restricted to scalar and array values under dotted
//! keys, e.g.
//!
//! ```toml
//! seed = 7
//! env.family = "pareto"
//! env.alpha = 0.5
//! walk.kind = "srw"
//! walk.d = 3
//! theta_grid = [1.0, 2.0]
//! M = 5000
//! ```
//!
//! Unknown keys are rejected. See `KEYS` for the full list.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use toml::Value;

use crate::env::{TailFamily, TailLaw};
use crate::limit::SmallJumps;
use crate::trap::AgingMode;
use crate::walk::{JumpLaw, WalkModel, DEFAULT_KMAX};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Aging,
    LimitAging,
    ScalingTable,
    Diagnose,
    Marginal,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Aging => "aging",
            Kind::LimitAging => "limit-aging",
            Kind::ScalingTable => "scaling-table",
            Kind::Diagnose => "diagnose",
            Kind::Marginal => "marginal",
        }
    }

    fn parse(s: &str) -> Option<Kind> {
        match s {
            "aging" => Some(Kind::Aging),
            "limit-aging" => Some(Kind::LimitAging),
            "scaling-table" => Some(Kind::ScalingTable),
            "diagnose" | "assumption-diagnostics" => Some(Kind::Diagnose),
            "marginal" | "marginal-convergence" => Some(Kind::Marginal),
            _ => None,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown output format '{other}' (expected csv, json or svg)")),
        }
    }
}

/// A field-level configuration problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field '{}': {}", self.field, self.message)
    }
}

type CResult<T> = Result<T, ConfigError>;

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "kind",
    "seed",
    "workers",
    "alpha",
    "M",
    "N",
    "env.family",
    "env.alpha",
    "env.seed",
    "walk.kind",
    "walk.d",
    "walk.p",
    "walk.beta",
    "walk.kmax",
    "walk.table_path",
    "theta_grid",
    "t_grid",
    "t_n_grid",
    "eps_grid",
    "eps_n_grid",
    "modes",
    "scaling.n_max",
    "scaling.M",
    "limit.delta0",
    "limit.small_jumps",
    "diagnose.n_grid",
    "diagnose.env_count",
    "diagnose.M_per_env",
    "diagnose.theta",
    "marginal.t",
    "output.dir",
    "output.formats",
    "output.plot",
];

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub workers: Option<usize>,
    pub law: TailLaw,
    /// Fixed environment seed; when present the aging estimate is quenched.
    pub env_seed: Option<u64>,
    pub walk: WalkModel,
    pub theta_grid: Vec<f64>,
    /// Explicit times.
    pub t_grid: Vec<f64>,
    /// Times given through `n(t)`: each entry `n` becomes `t = nu_n`.
    pub t_n_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    /// Scale parameters given through `n(1/eps)`.
    pub eps_n_grid: Vec<f64>,
    pub modes: Vec<AgingMode>,
    pub m: u64,
    pub scaling_n_max: u64,
    pub scaling_m: u64,
    pub delta0: f64,
    pub small_jumps: SmallJumps,
    pub n_grid: Vec<u64>,
    pub env_count: u64,
    pub m_per_env: u64,
    pub quenched_theta: f64,
    pub marginal_t: f64,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    /// Canonical `key = value` lines of every resolved setting, used for the
    /// config hash.
    canonical: BTreeMap<String, String>,
}

/// Overrides taken from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) -> CResult<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out)?,
            other => {
                out.insert(key, other.clone());
            }
        }
    }
    Ok(())
}

struct Fields {
    map: BTreeMap<String, Value>,
    canonical: BTreeMap<String, String>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    fn record(&mut self, key: &str, value: impl fmt::Debug) {
        self.canonical.insert(key.to_string(), format!("{value:?}"));
    }

    fn float(&mut self, key: &str, default: Option<f64>) -> CResult<Option<f64>> {
        let v = match self.take(key) {
            None => default,
            Some(Value::Float(f)) => Some(f),
            Some(Value::Integer(i)) => Some(i as f64),
            Some(other) => return Err(ConfigError::new(key, format!("expected a number, got {other}"))),
        };
        if let Some(x) = v {
            self.record(key, x);
        }
        Ok(v)
    }

    fn uint(&mut self, key: &str, default: Option<u64>) -> CResult<Option<u64>> {
        let v = match self.take(key) {
            None => default,
            Some(Value::Integer(i)) if i >= 0 => Some(i as u64),
            Some(Value::Float(f)) if f >= 0.0 && f.fract() == 0.0 && f < 9.007e15 => Some(f as u64),
            // seeds above i64::MAX can be written as strings
            Some(Value::String(s)) => Some(
                s.parse()
                    .map_err(|_| ConfigError::new(key, format!("expected a nonnegative integer, got \"{s}\"")))?,
            ),
            Some(other) => return Err(ConfigError::new(key, format!("expected a nonnegative integer, got {other}"))),
        };
        if let Some(x) = v {
            self.record(key, x);
        }
        Ok(v)
    }

    fn string(&mut self, key: &str, default: Option<&str>) -> CResult<Option<String>> {
        let v = match self.take(key) {
            None => default.map(str::to_string),
            Some(Value::String(s)) => Some(s),
            Some(other) => return Err(ConfigError::new(key, format!("expected a string, got {other}"))),
        };
        if let Some(x) = &v {
            self.record(key, x);
        }
        Ok(v)
    }

    fn boolean(&mut self, key: &str, default: bool) -> CResult<bool> {
        let v = match self.take(key) {
            None => default,
            Some(Value::Boolean(b)) => b,
            Some(other) => return Err(ConfigError::new(key, format!("expected true or false, got {other}"))),
        };
        self.record(key, v);
        Ok(v)
    }

    fn floats(&mut self, key: &str, default: &[f64]) -> CResult<Vec<f64>> {
        let v = match self.take(key) {
            None => default.to_vec(),
            Some(Value::Array(a)) => {
                if a.is_empty() {
                    return Err(ConfigError::new(key, "grid must not be empty"));
                }
                a.iter()
                    .map(|x| match x {
                        Value::Float(f) => Ok(*f),
                        Value::Integer(i) => Ok(*i as f64),
                        other => Err(ConfigError::new(key, format!("expected numbers, got {other}"))),
                    })
                    .collect::<CResult<Vec<_>>>()?
            }
            Some(Value::Float(f)) => vec![f],
            Some(Value::Integer(i)) => vec![i as f64],
            Some(other) => return Err(ConfigError::new(key, format!("expected an array of numbers, got {other}"))),
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ConfigError::new(key, "grid values must be finite"));
        }
        self.record(key, &v);
        Ok(v)
    }

    fn strings(&mut self, key: &str, default: &[&str]) -> CResult<Vec<String>> {
        let v = match self.take(key) {
            None => default.iter().map(|s| s.to_string()).collect(),
            Some(Value::Array(a)) => {
                if a.is_empty() {
                    return Err(ConfigError::new(key, "list must not be empty"));
                }
                a.iter()
                    .map(|x| match x {
                        Value::String(s) => Ok(s.clone()),
                        other => Err(ConfigError::new(key, format!("expected strings, got {other}"))),
                    })
                    .collect::<CResult<Vec<_>>>()?
            }
            Some(Value::String(s)) => s.split(',').map(|p| p.trim().to_string()).collect(),
            Some(other) => return Err(ConfigError::new(key, format!("expected a list of strings, got {other}"))),
        };
        self.record(key, &v);
        Ok(v)
    }
}

fn positive(key: &str, x: f64) -> CResult<f64> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::new(key, format!("must be positive, got {x}")))
    }
}

impl ExperimentConfig {
    /// Parses `text` for subcommand `kind` and applies the command-line overrides.
    pub fn parse(kind: Kind, text: &str, base_dir: &Path, ov: &Overrides) -> CResult<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("<file>", e.message().to_string()))?;
        let mut map = BTreeMap::new();
        flatten("", &table, &mut map)?;
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(ConfigError::new(k, "unknown key"));
        }
        let mut f = Fields {
            map,
            canonical: BTreeMap::new(),
        };
        if let Some(k) = f.string("kind", None)? {
            match Kind::parse(&k) {
                Some(parsed) if parsed == kind => {}
                Some(_) => {
                    return Err(ConfigError::new("kind", format!("config is for '{k}' but the subcommand is '{kind}'")));
                }
                None => return Err(ConfigError::new("kind", format!("unknown experiment kind '{k}'"))),
            }
        }
        f.record("kind", kind.as_str());

        let seed = match ov.seed {
            Some(s) => {
                f.take("seed");
                f.record("seed", s);
                s
            }
            None => f
                .uint("seed", None)?
                .ok_or_else(|| ConfigError::new("seed", "a seed is required (set seed in the config or pass --seed)"))?,
        };
        // the worker count never influences results, so it is not part of the hash
        let workers = match f.take("workers") {
            None => None,
            Some(Value::Integer(i)) if i >= 1 => Some(i as usize),
            Some(other) => return Err(ConfigError::new("workers", format!("expected a positive integer, got {other}"))),
        };

        let top_alpha = f.float("alpha", None)?;
        let env_alpha = f.float("env.alpha", None)?;
        let alpha = match (top_alpha, env_alpha) {
            (Some(a), Some(b)) if a != b => {
                return Err(ConfigError::new("alpha", format!("alpha = {a} conflicts with env.alpha = {b}")));
            }
            (a, b) => a.or(b).unwrap_or(0.5),
        };
        let family: TailFamily = f
            .string("env.family", Some("pareto"))?
            .unwrap()
            .parse()
            .map_err(|e: crate::Error| ConfigError::new("env.family", e.to_string()))?;
        let law = TailLaw::new(alpha, family).map_err(|e| ConfigError::new("alpha", e.to_string()))?;
        let env_seed = f.uint("env.seed", None)?;

        let walk = parse_walk(&mut f, base_dir)?;

        let theta_grid = f.floats("theta_grid", &[0.5, 1.0, 2.0])?;
        if let Some(th) = theta_grid.iter().find(|t| **t < 0.0) {
            return Err(ConfigError::new("theta_grid", format!("theta must be >= 0, got {th}")));
        }
        let t_grid = f.floats("t_grid", &[])?;
        let t_n_grid = f.floats("t_n_grid", if t_grid.is_empty() { &[1e2, 1e3] } else { &[] })?;
        for (key, grid) in [("t_grid", &t_grid), ("t_n_grid", &t_n_grid)] {
            if let Some(x) = grid.iter().find(|x| **x <= 0.0) {
                return Err(ConfigError::new(key, format!("values must be positive, got {x}")));
            }
        }
        let eps_grid = f.floats("eps_grid", &[])?;
        if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(ConfigError::new("eps_grid", format!("eps must lie in (0,1), got {e}")));
        }
        let eps_n_grid = f.floats("eps_n_grid", if eps_grid.is_empty() { &[10.0, 100.0, 1000.0] } else { &[] })?;
        if let Some(x) = eps_n_grid.iter().find(|x| **x < 1.0) {
            return Err(ConfigError::new("eps_n_grid", format!("values must be >= 1, got {x}")));
        }

        let default_modes: &[&str] = match kind {
            Kind::LimitAging => &["R", "Pi_laplace", "Omega"],
            _ => &["R", "Pi", "Pi_laplace", "Omega"],
        };
        let modes = f
            .strings("modes", default_modes)?
            .iter()
            .map(|s| s.parse::<AgingMode>().map_err(|e| ConfigError::new("modes", e.to_string())))
            .collect::<CResult<Vec<_>>>()?;
        if kind == Kind::LimitAging && modes.contains(&AgingMode::Pi) {
            return Err(ConfigError::new("modes", "mode Pi is not defined for the limit process; use Pi_laplace"));
        }

        let m = match (f.uint("M", None)?, f.uint("N", None)?) {
            (Some(a), Some(b)) if a != b => return Err(ConfigError::new("N", format!("N = {b} conflicts with M = {a}"))),
            (a, b) => a.or(b).unwrap_or(1000),
        };
        if m == 0 {
            return Err(ConfigError::new("M", "must be at least 1"));
        }
        let scaling_n_max = f.uint("scaling.n_max", Some(100_000))?.unwrap();
        let scaling_m = f.uint("scaling.M", Some(1000))?.unwrap();
        if scaling_n_max == 0 || scaling_m == 0 {
            return Err(ConfigError::new("scaling", "scaling.n_max and scaling.M must be at least 1"));
        }
        let delta0 = positive("limit.delta0", f.float("limit.delta0", Some(1e-4))?.unwrap())?;
        let small_jumps = match f.string("limit.small_jumps", Some("compensate"))?.unwrap().as_str() {
            "compensate" => SmallJumps::Compensate,
            "discard" => SmallJumps::Discard,
            other => {
                return Err(ConfigError::new("limit.small_jumps", format!("expected compensate or discard, got '{other}'")));
            }
        };
        let n_grid_f = f.floats("diagnose.n_grid", &[1e2, 1e3, 1e4])?;
        if n_grid_f.iter().any(|x| *x < 0.0 || x.fract() != 0.0) {
            return Err(ConfigError::new("diagnose.n_grid", "values must be nonnegative integers"));
        }
        let mut n_grid: Vec<u64> = n_grid_f.iter().map(|x| *x as u64).collect();
        n_grid.sort_unstable();
        n_grid.dedup();
        let env_count = f.uint("diagnose.env_count", Some(0))?.unwrap();
        if env_count == 1 {
            return Err(ConfigError::new("diagnose.env_count", "need at least 2 environments (or 0 to skip)"));
        }
        let m_per_env = f.uint("diagnose.M_per_env", Some(500))?.unwrap();
        if m_per_env < 2 {
            return Err(ConfigError::new("diagnose.M_per_env", "need at least 2 walks per environment"));
        }
        let quenched_theta = f.float("diagnose.theta", Some(1.0))?.unwrap();
        if !(quenched_theta >= 0.0) {
            return Err(ConfigError::new("diagnose.theta", "must be >= 0"));
        }
        let marginal_t = f.float("marginal.t", Some(1.0))?.unwrap();
        if !(marginal_t >= 0.0) {
            return Err(ConfigError::new("marginal.t", "must be >= 0"));
        }

        // output settings do not change results and stay out of the hash
        let out_dir = match (&ov.out, f.take("output.dir")) {
            (Some(p), _) => p.clone(),
            (None, Some(Value::String(s))) => base_dir.join(s),
            (None, None) => PathBuf::from("."),
            (None, Some(other)) => return Err(ConfigError::new("output.dir", format!("expected a string, got {other}"))),
        };
        let mut formats = match (&ov.formats, f.take("output.formats")) {
            (Some(v), _) => v.clone(),
            (None, None) => vec![Format::Csv, Format::Json],
            (None, Some(v)) => {
                let list: Vec<String> = match v {
                    Value::Array(a) => a.iter().map(|x| x.as_str().map(str::to_string).unwrap_or_default()).collect(),
                    Value::String(s) => s.split(',').map(str::to_string).collect(),
                    other => return Err(ConfigError::new("output.formats", format!("expected a list of strings, got {other}"))),
                };
                list.iter()
                    .map(|s| s.parse::<Format>().map_err(|e| ConfigError::new("output.formats", e)))
                    .collect::<CResult<Vec<_>>>()?
            }
        };
        if f.boolean("output.plot", false)? {
            formats.push(Format::Svg);
        }
        f.canonical.remove("output.plot");
        formats.sort();
        formats.dedup();
        if formats.is_empty() {
            return Err(ConfigError::new("output.formats", "at least one format is required"));
        }

        Ok(ExperimentConfig {
            kind,
            seed,
            workers,
            law,
            env_seed,
            walk,
            theta_grid,
            t_grid,
            t_n_grid,
            eps_grid,
            eps_n_grid,
            modes,
            m,
            scaling_n_max,
            scaling_m,
            delta0,
            small_jumps,
            n_grid,
            env_count,
            m_per_env,
            quenched_theta,
            marginal_t,
            out_dir,
            formats,
            canonical: f.canonical,
        })
    }

    /// SHA-256 over the canonical resolved settings.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.canonical {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn canonical(&self) -> &BTreeMap<String, String> {
        &self.canonical
    }
}

fn parse_walk(f: &mut Fields, base_dir: &Path) -> CResult<WalkModel> {
    let kind = f.string("walk.kind", Some("srw"))?.unwrap();
    let law = match kind.as_str() {
        "srw" => {
            let d = f.uint("walk.d", Some(3))?.unwrap();
            JumpLaw::Srw { dim: d as usize }
        }
        "asym1d" => JumpLaw::Asym1d {
            p: f.float("walk.p", Some(1.0))?.unwrap(),
        },
        "heavy1d" => JumpLaw::Heavy1d {
            beta: f.float("walk.beta", Some(1.5))?.unwrap(),
            kmax: f.uint("walk.kmax", Some(DEFAULT_KMAX))?.unwrap(),
        },
        "table" => {
            let path = f
                .string("walk.table_path", None)?
                .ok_or_else(|| ConfigError::new("walk.table_path", "required when walk.kind = \"table\""))?;
            let model = WalkModel::table_from_csv(&base_dir.join(&path))
                .map_err(|e| ConfigError::new("walk.table_path", e.to_string()))?;
            // hash the law itself, not the file name
            f.record("walk.table", model.law());
            return Ok(model);
        }
        other => {
            return Err(ConfigError::new(
                "walk.kind",
                format!("unknown walk '{other}' (expected srw, asym1d, heavy1d or table)"),
            ));
        }
    };
    for key in ["walk.d", "walk.p", "walk.beta", "walk.kmax", "walk.table_path"] {
        if f.map.contains_key(key) {
            return Err(ConfigError::new(key, format!("not used by walk.kind = \"{kind}\"")));
        }
    }
    WalkModel::new(law).map_err(|e| ConfigError::new("walk", e.to_string()))
}
