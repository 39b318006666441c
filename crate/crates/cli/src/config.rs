use std::fmt;
use std::path::{Path, PathBuf};

use inls_core::evolution::EvolveConfig;
use inls_core::ground_state::{InitPreset, SolverOptions};
use inls_core::{GridKind, GridSpec, PhysParams};
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "INLSLAB_";

/// A configuration problem, reported with the file, line (when known) and offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        write!(f, ": ")?;
        if let Some(key) = &self.key {
            write!(f, "{key}: ")?;
        }
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn d_gaussian_width() -> f64 {
    1.0
}

fn d_tol() -> f64 {
    1e-8
}

fn d_max_iter() -> usize {
    50_000
}

fn d_dt() -> f64 {
    1e-4
}

fn d_one() -> f64 {
    1.0
}

fn d_stride() -> usize {
    1
}

fn d_k_factor() -> f64 {
    1e3
}

fn d_energy_tol() -> f64 {
    1e-8
}

fn d_out() -> PathBuf {
    PathBuf::from("out")
}

fn d_max_runs() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub kind: GridKind,
    pub extent: f64,
    pub counts: Vec<usize>,
}

impl GridConfig {
    pub fn spec(&self, d: usize) -> GridSpec {
        GridSpec { kind: self.kind, d, extent: self.extent, counts: self.counts.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitConfig {
    Gaussian {
        #[serde(default = "d_gaussian_width")]
        width: f64,
    },
    /// Seeded by the top-level `seed`.
    Random,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig::Gaussian { width: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub init: InitConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: d_tol(), max_iter: d_max_iter(), init: InitConfig::default() }
    }
}

impl SolverConfig {
    pub fn options(&self, seed: u64) -> SolverOptions {
        let init = match self.init {
            InitConfig::Gaussian { width } => InitPreset::Gaussian { width },
            InitConfig::Random => InitPreset::Random { seed },
        };
        SolverOptions { tol: self.tol, max_iter: self.max_iter, init }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    #[serde(default = "d_dt")]
    pub dt: f64,
    pub t_end: f64,
    /// Defaults to `dt * 1e-4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_min: Option<f64>,
    #[serde(default = "d_stride")]
    pub diag_stride: usize,
    pub cutoff_r: f64,
    #[serde(default = "d_k_factor")]
    pub blowup_k_factor: f64,
    #[serde(default = "d_energy_tol")]
    pub energy_tol: f64,
    #[serde(default)]
    pub snapshot_every: usize,
}

impl EvolveSection {
    pub fn config(&self, p: PhysParams) -> EvolveConfig {
        EvolveConfig {
            p,
            dt: self.dt,
            t_end: self.t_end,
            dt_min: self.dt_min.unwrap_or(self.dt * 1e-4),
            diag_stride: self.diag_stride,
            cutoff_r: self.cutoff_r,
            blowup_k_factor: self.blowup_k_factor,
            energy_tol: self.energy_tol,
            snapshot_every: self.snapshot_every,
        }
    }
}

/// Initial data for `evolve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// A profile file, multiplied by `scale`. Relative paths resolve against the config file.
    Profile {
        path: PathBuf,
        #[serde(default = "d_one")]
        scale: f64,
    },
    /// The ground state for `[params]` on `[grid]`, computed first and multiplied by `scale`.
    GroundState {
        #[serde(default = "d_one")]
        scale: f64,
    },
    /// `(a_u e^{-r^2/w_u^2}, a_v e^{-r^2/w_v^2})` on `[grid]`.
    Gaussian {
        amp_u: f64,
        amp_v: f64,
        #[serde(default = "d_one")]
        width_u: f64,
        #[serde(default = "d_one")]
        width_v: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySection {
    pub state: PathBuf,
    pub ground_state: PathBuf,
    /// Level below which `A_omega` puts a state in `K-`; computed from the ground state when
    /// `compute_wp` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wp: Option<f64>,
    #[serde(default)]
    pub compute_wp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Alpha,
    Mu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    #[serde(default = "d_max_runs")]
    pub max_runs: usize,
    /// Evolve every amplitude-sweep row with `[evolve]`.
    #[serde(default)]
    pub evolve: bool,
    /// Repeat each evolution with `dt / 2`.
    #[serde(default)]
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "d_out")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: d_out() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub params: PhysParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<ClassifySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory of the config file, for resolving relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    source: String,
    #[serde(skip)]
    text: String,
}

/// Line number (1-based) of `key` inside `[section]`, or of a top-level key when `section` is empty.
pub fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn env_overrides(vars: &[(String, String)]) -> Vec<(Vec<String>, String, String)> {
    let mut out: Vec<_> = vars
        .iter()
        .filter_map(|(k, v)| {
            let rest = k.strip_prefix(ENV_PREFIX)?;
            let path: Vec<String> = rest.split("__").map(|s| s.to_ascii_lowercase()).collect();
            if path.iter().any(|s| s.is_empty()) {
                return None;
            }
            Some((path, k.clone(), v.clone()))
        })
        .collect();
    out.sort();
    out
}

fn parse_scalar(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed table has key v"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn toml_error(source: &str, text: &str, e: toml::de::Error) -> ConfigError {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    ConfigError { source: source.to_string(), line, key: None, message: e.message().trim().to_string() }
}

impl RunConfig {
    /// Parses config text, then applies `INLSLAB_SECTION__KEY=value` overrides from `env`.
    pub fn parse(text: &str, source: &str, env: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| toml_error(source, text, e))?;
        let overrides = env_overrides(env);
        if !overrides.is_empty() {
            let mut table: toml::Table = text.parse().map_err(|e| toml_error(source, text, e))?;
            for (path, var, raw) in &overrides {
                let mut node = &mut table;
                for part in &path[..path.len() - 1] {
                    let entry = node.entry(part.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
                    node = match entry {
                        toml::Value::Table(t) => t,
                        _ => {
                            return Err(ConfigError {
                                source: var.clone(),
                                line: None,
                                key: Some(path.join(".")),
                                message: format!("{part} is not a section"),
                            })
                        }
                    };
                }
                node.insert(path[path.len() - 1].clone(), parse_scalar(raw));
            }
            cfg = RunConfig::deserialize(table).map_err(|e| ConfigError {
                source: format!("{source} (after {ENV_PREFIX}* overrides)"),
                line: None,
                key: None,
                message: e.message().trim().to_string(),
            })?;
        }
        cfg.source = source.to_string();
        cfg.text = text.to_string();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, env: &[(String, String)]) -> Result<Self, ConfigError> {
        let source = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: source.clone(),
            line: None,
            key: None,
            message: format!("cannot read config: {e}"),
        })?;
        let mut cfg = Self::parse(&text, &source, env)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// An error pinned to `section.key`, with the line where that key appears.
    pub fn error(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        let name = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        ConfigError {
            source: self.source.clone(),
            line: locate(&self.text, section, key),
            key: Some(name),
            message: message.into(),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        if let Err(e) = inls_core::check_gate(p.d, p.alpha) {
            let key = if (1..=5).contains(&p.d) { "alpha" } else { "d" };
            return Err(self.error("params", key, e.to_string()));
        }
        if !(p.kappa > 0.0 && p.kappa.is_finite()) {
            return Err(self.error("params", "kappa", format!("kappa = {} must be positive", p.kappa)));
        }
        if !p.gamma.is_finite() {
            return Err(self.error("params", "gamma", "gamma must be finite"));
        }
        if !p.omega.is_finite() {
            return Err(self.error("params", "omega", "omega must be finite"));
        }
        if let Some(g) = &self.grid {
            if let Err(e) = g.spec(p.d).shape() {
                return Err(self.error("grid", "counts", e.to_string()));
            }
            if !(g.extent > 0.0 && g.extent.is_finite()) {
                return Err(self.error("grid", "extent", format!("extent = {} must be positive", g.extent)));
            }
        }
        if !(self.solver.tol > 0.0) {
            return Err(self.error("solver", "tol", "tol must be positive"));
        }
        if self.solver.max_iter == 0 {
            return Err(self.error("solver", "max_iter", "max_iter must be at least 1"));
        }
        if let Some(ev) = &self.evolve {
            let cfg = ev.config(*p);
            if let Err(e) = cfg.validate() {
                let key = if !(ev.dt > 0.0) {
                    "dt"
                } else if !(ev.t_end > 0.0) {
                    "t_end"
                } else if !(cfg.dt_min > 0.0 && cfg.dt_min < cfg.dt) {
                    "dt_min"
                } else if ev.diag_stride == 0 {
                    "diag_stride"
                } else if !(ev.blowup_k_factor > 1.0) {
                    "blowup_k_factor"
                } else {
                    "energy_tol"
                };
                return Err(self.error("evolve", key, e.to_string()));
            }
            if !(ev.cutoff_r > 0.0) {
                return Err(self.error("evolve", "cutoff_r", "cutoff_r must be positive"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(self.error("sweep", "values", "sweep axis is empty"));
            }
            if s.values.len() > s.max_runs {
                return Err(self.error(
                    "sweep",
                    "values",
                    format!("{} runs exceed max_runs = {}", s.values.len(), s.max_runs),
                ));
            }
        }
        Ok(())
    }

    /// Canonical text form: every default spelled out, fixed section order.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec, ConfigError> {
        self.grid
            .as_ref()
            .map(|g| g.spec(self.params.d))
            .ok_or_else(|| self.missing("grid"))
    }

    pub fn evolve_config(&self) -> Result<EvolveConfig, ConfigError> {
        self.evolve.as_ref().map(|e| e.config(self.params)).ok_or_else(|| self.missing("evolve"))
    }

    pub fn missing(&self, section: &str) -> ConfigError {
        ConfigError {
            source: self.source.clone(),
            line: None,
            key: Some(section.to_string()),
            message: format!("section [{section}] is required by this command"),
        }
    }
}

/// The process environment as key/value pairs.
pub fn process_env() -> Vec<(String, String)> {
    std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect()
}
