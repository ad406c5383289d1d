//! Run configuration from flags and an optional `key = value` file.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use goafem::catalog::{catalog, lookup, GenericData, ProblemParams};
use goafem::{EstimatorKind, IndicatorScaling, Rect, Symmetry};

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "goafem", version, about = "Goal-oriented adaptive residual-minimization runs")]
pub struct Cli {
    /// Catalog problem name.
    #[arg(long)]
    pub problem: Option<String>,
    /// energy, goa-dg or goa-residual.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Trial polynomial degree.
    #[arg(long)]
    pub p: Option<usize>,
    /// Test-space degree increment (0 or 1).
    #[arg(long)]
    pub dp: Option<usize>,
    /// -1 for the symmetric, +1 for the nonsymmetric interior penalty form.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<i32>,
    /// Reaction coefficient.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Dörfler bulk fraction in (0, 1].
    #[arg(long)]
    pub theta: Option<f64>,
    /// Number of adaptive levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Stop before a level with more total dofs than this.
    #[arg(long = "ndof-cap")]
    pub ndof_cap: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the mesh and indicators of every level.
    #[arg(long = "emit-mesh")]
    pub emit_mesh: bool,
    /// `key = value` file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub estimator: EstimatorKind,
    pub p: usize,
    pub dp: usize,
    pub epsilon: i32,
    pub theta: f64,
    pub levels: usize,
    pub ndof_cap: usize,
    pub out: PathBuf,
    pub emit_mesh: bool,
    pub scaling: IndicatorScaling,
    pub params: ProblemParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "cross_diffusion".into(),
            estimator: EstimatorKind::GoaAdjointResidual,
            p: 1,
            dp: 0,
            epsilon: -1,
            theta: 0.2,
            levels: 14,
            ndof_cap: 2_000_000,
            out: PathBuf::from("out"),
            emit_mesh: false,
            scaling: IndicatorScaling::Standard,
            params: ProblemParams::default(),
        }
    }
}

pub fn unknown_problem(name: &str) -> ConfigError {
    let mut msg = format!("unknown problem {name:?}; available problems:");
    for e in catalog() {
        msg.push_str(&format!("\n  {e}"));
    }
    ConfigError(msg)
}

/// Raw settings before validation, as strings keyed by file key.
#[derive(Debug, Default)]
struct Settings(Vec<(String, String)>);

impl Settings {
    fn set(&mut self, key: &str, value: String) {
        self.0.retain(|(k, _)| k != key);
        self.0.push((key.to_string(), value));
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

const KEYS: [&str; 18] = [
    "problem", "estimator", "p", "dp", "epsilon", "gamma", "theta", "levels", "ndof_cap", "out", "emit_mesh", "scaling",
    "kappa", "bx", "by", "source", "dirichlet", "omega0",
];

fn parse_file(text: &str, path: &Path) -> Result<Settings, ConfigError> {
    let mut s = Settings::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!("{}:{}: expected `key = value`", path.display(), n + 1));
        };
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return err(format!("{}:{}: unknown key {key:?}", path.display(), n + 1));
        }
        s.set(&key, v.trim().to_string());
    }
    Ok(s)
}

fn parse<T: std::str::FromStr>(s: &Settings, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    match s.get(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|e| ConfigError(format!("invalid {key} {v:?}: {e}"))),
    }
}

fn parse_bool(v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => err(format!("invalid emit_mesh {v:?}: expected true or false")),
    }
}

fn parse_rect(v: &str) -> Result<Rect, ConfigError> {
    let c: Vec<f64> = v
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| ConfigError(format!("invalid omega0 {v:?}: {e}")))?;
    match c[..] {
        [x0, x1, y0, y1] if x0 < x1 && y0 < y1 => Ok(Rect::new(x0, x1, y0, y1)),
        _ => err(format!("invalid omega0 {v:?}: expected x0, x1, y0, y1 with x0 < x1 and y0 < y1")),
    }
}

/// Merges the optional config file with the flags and validates the result.
pub fn parse_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut s = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            parse_file(&text, path)?
        }
        None => Settings::default(),
    };
    let flags: [(&str, Option<String>); 10] = [
        ("problem", cli.problem.clone()),
        ("estimator", cli.estimator.clone()),
        ("p", cli.p.map(|v| v.to_string())),
        ("dp", cli.dp.map(|v| v.to_string())),
        ("epsilon", cli.epsilon.map(|v| v.to_string())),
        ("gamma", cli.gamma.map(|v| v.to_string())),
        ("theta", cli.theta.map(|v| v.to_string())),
        ("levels", cli.levels.map(|v| v.to_string())),
        ("ndof_cap", cli.ndof_cap.map(|v| v.to_string())),
        ("out", cli.out.as_ref().map(|v| v.display().to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, v);
        }
    }
    if cli.emit_mesh {
        s.set("emit_mesh", "true".into());
    }

    let mut c = RunConfig::default();
    if let Some(name) = s.get("problem") {
        c.problem = name.to_string();
    }
    let entry = lookup(&c.problem).ok_or_else(|| unknown_problem(&c.problem))?;
    c.levels = entry.default_levels;
    if let Some(v) = s.get("estimator") {
        c.estimator = v.parse().map_err(ConfigError)?;
    }
    c.p = parse(&s, "p")?.unwrap_or(c.p);
    c.dp = parse(&s, "dp")?.unwrap_or(c.dp);
    c.epsilon = parse(&s, "epsilon")?.unwrap_or(c.epsilon);
    c.theta = parse(&s, "theta")?.unwrap_or(c.theta);
    c.levels = parse(&s, "levels")?.unwrap_or(c.levels);
    c.ndof_cap = parse(&s, "ndof_cap")?.unwrap_or(c.ndof_cap);
    if let Some(v) = s.get("out") {
        c.out = PathBuf::from(v);
    }
    if let Some(v) = s.get("emit_mesh") {
        c.emit_mesh = parse_bool(v)?;
    }
    c.scaling = match s.get("scaling") {
        None | Some("standard") => IndicatorScaling::Standard,
        Some("inverted") => IndicatorScaling::Inverted,
        Some(v) => return err(format!("invalid scaling {v:?}: expected standard or inverted")),
    };

    let mut g = GenericData::default();
    g.kappa = parse(&s, "kappa")?.unwrap_or(g.kappa);
    g.velocity[0] = parse(&s, "bx")?.unwrap_or(g.velocity[0]);
    g.velocity[1] = parse(&s, "by")?.unwrap_or(g.velocity[1]);
    g.source = parse(&s, "source")?.unwrap_or(g.source);
    g.dirichlet = parse(&s, "dirichlet")?.unwrap_or(g.dirichlet);
    if let Some(v) = s.get("omega0") {
        g.omega0 = parse_rect(v)?;
    }
    let symmetry = Symmetry::from_epsilon(c.epsilon)
        .ok_or_else(|| ConfigError(format!("invalid epsilon {}: expected -1 or 1", c.epsilon)))?;
    c.params = ProblemParams { symmetry, gamma: parse(&s, "gamma")?.unwrap_or(0.0), generic: g };

    if c.p < 1 || c.p > 3 {
        return err(format!("invalid p {}: expected 1, 2 or 3", c.p));
    }
    if c.dp > 1 {
        return err(format!("invalid dp {}: expected 0 or 1", c.dp));
    }
    if !(c.theta > 0.0 && c.theta <= 1.0) {
        return err(format!("invalid theta {}: expected a value in (0, 1]", c.theta));
    }
    if c.levels == 0 {
        return err("invalid levels 0: expected at least 1");
    }
    if !(c.params.gamma.is_finite() && c.params.gamma >= 0.0) {
        return err(format!("invalid gamma {}: expected a nonnegative number", c.params.gamma));
    }
    for (k, v) in [("kappa", g.kappa), ("bx", g.velocity[0]), ("by", g.velocity[1]), ("source", g.source), ("dirichlet", g.dirichlet)] {
        if !v.is_finite() {
            return err(format!("invalid {k} {v}"));
        }
    }
    if g.kappa < 0.0 {
        return err(format!("invalid kappa {}: expected a nonnegative number", g.kappa));
    }
    Ok(c)
}
