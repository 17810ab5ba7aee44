//! Run configuration: a flat `key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! problem.name = lasso
//! problem.seed = 3
//! problem.noise = 0.05
//! solver[0].algorithm = fw
//! solver[1].algorithm = kfw
//! solver[1].k = 20
//! output.dir = runs/lasso
//! ```
//!
//! `solver.key` is shorthand for `solver[0].key`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use kfw::bench::BenchmarkSpec;
use kfw::error::KfwError;
use kfw::solver::{Algorithm, SolverConfig};
use kfw::subsolver::LineSearchMode;

use crate::error::{CliError, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

/// A built-in generator with per-parameter overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchProblem {
    pub name: String,
    pub scale: Scale,
    pub seed: u64,
    /// `(parameter, value)` in file order.
    pub overrides: Vec<(String, String)>,
}

impl BenchProblem {
    pub fn spec(&self) -> Result<BenchmarkSpec, KfwError> {
        let mut spec = match self.scale {
            Scale::Desk => BenchmarkSpec::desk(&self.name, self.seed)?,
            Scale::Paper => BenchmarkSpec::paper_scale(&self.name, self.seed)?,
        };
        for (k, v) in &self.overrides {
            spec.set_param(k, v)?;
        }
        Ok(spec)
    }
}

pub const SET_KINDS: [&str; 6] = [
    "simplex",
    "l1_ball",
    "hypercube",
    "group_ball",
    "spectrahedron",
    "nuclear_ball",
];

/// `min w‖Ax − b‖² + ⟨c, x⟩` or `min xᵀQx + ⟨c, x⟩` from Matrix Market files.
/// Relative paths are resolved against the configuration file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalProblem {
    pub set: String,
    pub matrix: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub quadratic: Option<PathBuf>,
    pub linear: Option<PathBuf>,
    pub start: Option<PathBuf>,
    pub radius: Option<f64>,
    /// Factor on the squared residual; 1 when absent.
    pub weight: Option<f64>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    /// Contiguous groups of this size for `group_ball`.
    pub group_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Bench(BenchProblem),
    External(ExternalProblem),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub source: ProblemSource,
    /// Overrides the estimated smoothness constant.
    pub lipschitz: Option<f64>,
}

impl ProblemConfig {
    pub fn name(&self) -> &str {
        match &self.source {
            ProblemSource::Bench(b) => &b.name,
            ProblemSource::External(_) => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverEntry {
    pub label: String,
    pub config: SolverConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub jobs: usize,
    pub certify: bool,
    pub rank_tol: f64,
    pub growth_samples: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("kfw_out"),
            jobs: 1,
            certify: true,
            rank_tol: 1e-6,
            growth_samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub solvers: Vec<SolverEntry>,
    pub output: OutputConfig,
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

struct Errors(Vec<ConfigError>);

impl Errors {
    fn push(&mut self, line: usize, key: &str, message: impl Into<String>) {
        self.0.push(ConfigError {
            line,
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn parse<T: FromStr>(&mut self, e: &Entry, kind: &str) -> Option<T> {
        let v = e.value.parse().ok();
        if v.is_none() {
            self.push(e.line, e.key, format!("expected {kind}, got '{}'", e.value));
        }
        v
    }

    fn real(&mut self, e: &Entry) -> Option<f64> {
        let v: f64 = self.parse(e, "a real number")?;
        if v.is_finite() {
            Some(v)
        } else {
            self.push(e.line, e.key, format!("expected a finite number, got '{}'", e.value));
            None
        }
    }
}

/// Parses and validates a configuration, collecting every error found.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let mut errors = Errors(Vec::new());
    let mut entries = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(line, content, "expected 'key = value'");
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let canonical = key.replacen("solver.", "solver[0].", 1);
        if let Some(first) = seen.insert(canonical, line) {
            errors.push(line, key, format!("duplicate key (first set on line {first})"));
            continue;
        }
        entries.push(Entry { line, key, value });
    }

    let mut problem = Vec::new();
    let mut solvers: Vec<Vec<(String, Entry)>> = Vec::new();
    let mut output = Vec::new();
    for e in entries {
        if let Some(field) = e.key.strip_prefix("problem.") {
            problem.push((field.to_string(), e));
        } else if let Some(field) = e.key.strip_prefix("output.") {
            output.push((field.to_string(), e));
        } else if let Some((index, field)) = solver_key(e.key) {
            if index > 10_000 {
                errors.push(e.line, e.key, "solver index too large");
                continue;
            }
            if solvers.len() <= index {
                solvers.resize_with(index + 1, Vec::new);
            }
            solvers[index].push((field, e));
        } else {
            errors.push(e.line, e.key, "unknown key");
        }
    }

    let problem = parse_problem(problem, &mut errors);
    if solvers.is_empty() {
        errors.push(0, "solver[0].algorithm", "at least one solver is required");
    }
    let mut parsed = Vec::new();
    for (i, fields) in solvers.into_iter().enumerate() {
        if fields.is_empty() {
            errors.push(0, &format!("solver[{i}]"), "solver indices must be contiguous from 0");
            continue;
        }
        parsed.extend(parse_solver(i, fields, &mut errors));
    }
    let mut labels: HashMap<&str, usize> = HashMap::new();
    for (i, s) in parsed.iter().enumerate() {
        if let Some(j) = labels.insert(&s.label, i) {
            errors.push(
                0,
                &format!("solver[{i}].label"),
                format!("label '{}' is also used by solver[{j}]", s.label),
            );
        }
    }
    let output = parse_output(output, &mut errors);
    match (problem, errors.0.is_empty()) {
        (Some(problem), true) => Ok(RunConfig {
            problem,
            solvers: parsed,
            output,
        }),
        _ => Err(errors.0),
    }
}

/// `solver[3].k` → `(3, "k")`, `solver.k` → `(0, "k")`.
fn solver_key(key: &str) -> Option<(usize, String)> {
    if let Some(field) = key.strip_prefix("solver.") {
        return Some((0, field.to_string()));
    }
    let rest = key.strip_prefix("solver[")?;
    let (index, field) = rest.split_once("].")?;
    Some((index.parse().ok()?, field.to_string()))
}

fn parse_problem(fields: Vec<(String, Entry)>, errors: &mut Errors) -> Option<ProblemConfig> {
    let Some(name) = fields.iter().find(|(f, _)| f == "name").map(|(_, e)| e.value) else {
        errors.push(0, "problem.name", "missing required key");
        return None;
    };
    let mut lipschitz = None;
    if name == "external" {
        let mut ext = ExternalProblem {
            set: String::new(),
            matrix: None,
            target: None,
            quadratic: None,
            linear: None,
            start: None,
            radius: None,
            weight: None,
            rows: None,
            cols: None,
            group_size: None,
        };
        let mut has_set = false;
        for (field, e) in &fields {
            match field.as_str() {
                "name" => {}
                "set" => {
                    has_set = true;
                    if SET_KINDS.contains(&e.value) {
                        ext.set = e.value.to_string();
                    } else {
                        errors.push(e.line, e.key, format!("expected one of {}", SET_KINDS.join(", ")));
                    }
                }
                "matrix" => ext.matrix = Some(PathBuf::from(e.value)),
                "target" => ext.target = Some(PathBuf::from(e.value)),
                "quadratic" => ext.quadratic = Some(PathBuf::from(e.value)),
                "linear" => ext.linear = Some(PathBuf::from(e.value)),
                "start" => ext.start = Some(PathBuf::from(e.value)),
                "radius" => ext.radius = errors.real(e),
                "weight" => ext.weight = errors.real(e),
                "rows" => ext.rows = errors.parse(e, "a nonnegative integer"),
                "cols" => ext.cols = errors.parse(e, "a nonnegative integer"),
                "group_size" => ext.group_size = errors.parse(e, "a nonnegative integer"),
                "lipschitz" => lipschitz = errors.real(e),
                _ => errors.push(e.line, e.key, "unknown key for an external problem"),
            }
        }
        let line = fields[0].1.line;
        if !has_set {
            errors.push(0, "problem.set", "missing required key");
        }
        match (&ext.target, &ext.quadratic) {
            (Some(_), Some(_)) => errors.push(line, "problem.quadratic", "conflicts with problem.target"),
            (None, None) => errors.push(0, "problem.target", "one of problem.target or problem.quadratic is required"),
            (None, Some(_)) if ext.matrix.is_some() => {
                errors.push(line, "problem.matrix", "cannot be combined with problem.quadratic")
            }
            _ => {}
        }
        let needs = |kind: &str| ext.set == kind;
        if needs("nuclear_ball") && (ext.rows.is_none() || ext.cols.is_none()) {
            errors.push(0, "problem.rows", "nuclear_ball needs problem.rows and problem.cols");
        }
        if needs("group_ball") && ext.group_size.is_none() {
            errors.push(0, "problem.group_size", "group_ball needs problem.group_size");
        }
        return Some(ProblemConfig {
            source: ProblemSource::External(ext),
            lipschitz,
        });
    }
    if !BenchmarkSpec::NAMES.contains(&name) {
        let line = fields.iter().find(|(f, _)| f == "name").map_or(0, |(_, e)| e.line);
        errors.push(
            line,
            "problem.name",
            format!("unknown problem '{name}'; expected external or one of {}", BenchmarkSpec::NAMES.join(", ")),
        );
        return None;
    }
    let mut bench = BenchProblem {
        name: name.to_string(),
        scale: Scale::Desk,
        seed: 0,
        overrides: Vec::new(),
    };
    let mut params = Vec::new();
    for (field, e) in fields {
        match field.as_str() {
            "name" => {}
            "seed" => bench.seed = errors.parse(&e, "an unsigned integer").unwrap_or(0),
            "lipschitz" => lipschitz = errors.real(&e),
            "scale" => match e.value {
                "desk" => bench.scale = Scale::Desk,
                "paper" => bench.scale = Scale::Paper,
                _ => errors.push(e.line, e.key, format!("expected desk or paper, got '{}'", e.value)),
            },
            _ => params.push((field, e)),
        }
    }
    let mut probe = BenchmarkSpec::desk(name, 0).ok()?;
    for (field, e) in params {
        match probe.set_param(&field, e.value) {
            Ok(()) => bench.overrides.push((field, e.value.to_string())),
            Err(err) => errors.push(e.line, e.key, message(err)),
        }
    }
    Some(ProblemConfig {
        source: ProblemSource::Bench(bench),
        lipschitz,
    })
}

fn message(err: KfwError) -> String {
    match err {
        KfwError::Config(m) | KfwError::Parameter(m) => m,
        other => other.to_string(),
    }
}

fn parse_solver(index: usize, fields: Vec<(String, Entry)>, errors: &mut Errors) -> Option<SolverEntry> {
    let mut config = SolverConfig::default();
    let mut label = None;
    let mut algorithm = None;
    for (field, e) in &fields {
        match field.as_str() {
            "algorithm" => match e.value.parse::<Algorithm>() {
                Ok(a) => algorithm = Some(a),
                Err(err) => errors.push(e.line, e.key, message(err)),
            },
            "label" => {
                if e.value.is_empty() || !e.value.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
                    errors.push(e.line, e.key, "labels use letters, digits, '_', '-' and '.'");
                } else {
                    label = Some(e.value.to_string());
                }
            }
            "k" => set(&mut config.k, errors.parse(e, "a positive integer")),
            "max_iter" => set(&mut config.max_iter, errors.parse(e, "a nonnegative integer")),
            "rel_change_tol" => set(&mut config.rel_change_tol, errors.real(e)),
            "fw_gap_tol" => set(&mut config.fw_gap_tol, errors.real(e)),
            "adaptive_factor" => set(&mut config.adaptive_factor, errors.real(e)),
            "k_max" => config.k_max = errors.parse(e, "a positive integer"),
            "memory" => config.memory = errors.parse(e, "a nonnegative integer"),
            "seed" => set(&mut config.seed, errors.parse(e, "an unsigned integer")),
            "line_search" => match e.value {
                "exact" => config.line_search = LineSearchMode::ExactQuadratic,
                "bisection" => config.line_search = LineSearchMode::Bisection,
                _ => errors.push(e.line, e.key, format!("expected exact or bisection, got '{}'", e.value)),
            },
            "apg_max_inner" => set(&mut config.apg.max_inner, errors.parse(e, "a positive integer")),
            "apg_rel_tol" => set(&mut config.apg.rel_tol, errors.real(e)),
            "apg_step_tol" => set(&mut config.apg.step_tol, errors.real(e)),
            _ => errors.push(e.line, e.key, "unknown key"),
        }
    }
    let Some(algorithm) = algorithm else {
        if !fields.iter().any(|(f, _)| f == "algorithm") {
            errors.push(0, &format!("solver[{index}].algorithm"), "missing required key");
        }
        return None;
    };
    config.algorithm = algorithm;
    let line = fields[0].1.line;
    if let Err(err) = config.validate() {
        errors.push(line, &format!("solver[{index}]"), message(err));
        return None;
    }
    Some(SolverEntry {
        label: label.unwrap_or_else(|| default_label(&config)),
        config,
    })
}

fn default_label(config: &SolverConfig) -> String {
    match config.algorithm {
        Algorithm::Kfw | Algorithm::KfwAdaptive | Algorithm::Lkfw => {
            format!("{}_k{}", config.algorithm, config.k)
        }
        a => a.name().to_string(),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn parse_output(fields: Vec<(String, Entry)>, errors: &mut Errors) -> OutputConfig {
    let mut out = OutputConfig::default();
    for (field, e) in &fields {
        match field.as_str() {
            "dir" => out.dir = PathBuf::from(e.value),
            "jobs" => match errors.parse(e, "a positive integer") {
                Some(0) => errors.push(e.line, e.key, "must be at least 1"),
                v => set(&mut out.jobs, v),
            },
            "certify" => set(&mut out.certify, errors.parse(e, "true or false")),
            "rank_tol" => match errors.real(e) {
                Some(v) if v < 0.0 => errors.push(e.line, e.key, "must be nonnegative"),
                v => set(&mut out.rank_tol, v),
            },
            "growth_samples" => set(&mut out.growth_samples, errors.parse(e, "a nonnegative integer")),
            _ => errors.push(e.line, e.key, "unknown key"),
        }
    }
    out
}

impl RunConfig {
    /// Text that [`parse_config`] maps back to an equal configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.problem.source {
            ProblemSource::Bench(b) => {
                put("problem.name", &b.name);
                let scale = match b.scale {
                    Scale::Desk => "desk",
                    Scale::Paper => "paper",
                };
                put("problem.scale", &scale);
                put("problem.seed", &b.seed);
                for (k, v) in &b.overrides {
                    put(&format!("problem.{k}"), v);
                }
            }
            ProblemSource::External(x) => {
                put("problem.name", &"external");
                put("problem.set", &x.set);
                let paths = [
                    ("matrix", &x.matrix),
                    ("target", &x.target),
                    ("quadratic", &x.quadratic),
                    ("linear", &x.linear),
                    ("start", &x.start),
                ];
                for (k, p) in paths {
                    if let Some(p) = p {
                        put(&format!("problem.{k}"), &p.display());
                    }
                }
                for (k, v) in [("radius", x.radius), ("weight", x.weight)] {
                    if let Some(v) = v {
                        put(&format!("problem.{k}"), &Real(v));
                    }
                }
                for (k, v) in [("rows", x.rows), ("cols", x.cols), ("group_size", x.group_size)] {
                    if let Some(v) = v {
                        put(&format!("problem.{k}"), &v);
                    }
                }
            }
        }
        if let Some(l) = self.problem.lipschitz {
            put("problem.lipschitz", &Real(l));
        }
        for (i, entry) in self.solvers.iter().enumerate() {
            let c = &entry.config;
            let mut field = |k: &str, v: &dyn std::fmt::Display| put(&format!("solver[{i}].{k}"), v);
            field("algorithm", &c.algorithm);
            field("label", &entry.label);
            field("k", &c.k);
            field("max_iter", &c.max_iter);
            field("rel_change_tol", &Real(c.rel_change_tol));
            field("fw_gap_tol", &Real(c.fw_gap_tol));
            field("adaptive_factor", &Real(c.adaptive_factor));
            if let Some(v) = c.k_max {
                field("k_max", &v);
            }
            if let Some(v) = c.memory {
                field("memory", &v);
            }
            field("seed", &c.seed);
            let ls = match c.line_search {
                LineSearchMode::ExactQuadratic => "exact",
                LineSearchMode::Bisection => "bisection",
            };
            field("line_search", &ls);
            field("apg_max_inner", &c.apg.max_inner);
            field("apg_rel_tol", &Real(c.apg.rel_tol));
            field("apg_step_tol", &Real(c.apg.step_tol));
        }
        let o = &self.output;
        put("output.dir", &o.dir.display());
        put("output.jobs", &o.jobs);
        put("output.certify", &o.certify);
        put("output.rank_tol", &Real(o.rank_tol));
        put("output.growth_samples", &o.growth_samples);
        s
    }
}

/// Shortest text that parses back to the same `f64`.
struct Real(f64);

impl std::fmt::Display for Real {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Parses a configuration, mapping errors into [`CliError::Config`].
pub fn load_config(text: &str) -> Result<RunConfig, CliError> {
    parse_config(text).map_err(CliError::Config)
}
