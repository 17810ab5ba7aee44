//! Problem construction, parallel solver runs and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kfw::bench::problem_hash;
use kfw::certificates::{certify, Certificate, SupportDescriptor};
use kfw::error::KfwError;
use kfw::linalg::DenseOperator;
use kfw::objective::{CompositeObjective, LinearMap, Outer};
use kfw::sets::FeasibleSet;
use kfw::solver::{solve, Problem, SolveOutput, SolveTrace};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExternalProblem, OutputConfig, ProblemConfig, ProblemSource, RunConfig, SolverEntry};
use crate::error::CliError;
use crate::mm;

/// The trace columns, in order.
pub const TRACE_HEADER: [&str; 9] = [
    "iter",
    "elapsed_s",
    "objective",
    "fw_gap",
    "rel_change",
    "k_used",
    "support_size",
    "kloo_s",
    "kds_s",
];

/// Largest dense operator materialized when exporting a problem.
const EXPORT_LIMIT: usize = 20_000_000;

/// Builds the configured problem; relative paths are resolved against `base`.
pub fn build_problem(config: &ProblemConfig, base: &Path) -> Result<Problem, CliError> {
    let mut problem = match &config.source {
        ProblemSource::Bench(b) => b.spec()?.build()?,
        ProblemSource::External(x) => build_external(x, base)?,
    };
    if let Some(l) = config.lipschitz {
        if !(l > 0.0) {
            return Err(KfwError::Parameter("lipschitz must be positive".into()).into());
        }
        problem.objective = problem.objective.clone().with_lipschitz(l);
    }
    Ok(problem)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn build_external(x: &ExternalProblem, base: &Path) -> Result<Problem, CliError> {
    let vector = |p: &Option<PathBuf>| p.as_ref().map(|p| mm::read_vector(&resolve(base, p))).transpose();
    let linear = vector(&x.linear)?;
    let (outer, map) = match (&x.target, &x.quadratic) {
        (Some(_), _) => {
            let target = vector(&x.target)?.unwrap_or_default();
            let map = match &x.matrix {
                Some(p) => LinearMap::Dense(DenseOperator::new(mm::read_matrix(&resolve(base, p))?)),
                None => LinearMap::Identity(target.len()),
            };
            let weight = x.weight.unwrap_or(1.0);
            if !(weight > 0.0) {
                return Err(KfwError::Parameter("weight must be positive".into()).into());
            }
            (Outer::SquaredResidual { target, weight }, map)
        }
        (None, Some(p)) => {
            let q = mm::read_matrix(&resolve(base, p))?;
            let n = q.nrows();
            (
                Outer::QuadraticForm {
                    q: DenseOperator::symmetric(q)?,
                },
                LinearMap::Identity(n),
            )
        }
        (None, None) => return Err(KfwError::Config("external problem has no objective data".into()).into()),
    };
    let n = map.input_dim();
    let radius = x.radius.unwrap_or(1.0);
    let set = match x.set.as_str() {
        "simplex" => FeasibleSet::simplex(n)?,
        "l1_ball" => FeasibleSet::l1_ball(n, radius)?,
        "hypercube" => FeasibleSet::hypercube(n)?,
        "group_ball" => {
            let size = x.group_size.unwrap_or(0);
            if size == 0 || n % size != 0 {
                return Err(KfwError::Parameter(format!("group size {size} does not divide dimension {n}")).into());
            }
            let groups = (0..n / size).map(|g| (g * size..(g + 1) * size).collect()).collect();
            FeasibleSet::group_ball(n, groups, radius)?
        }
        "spectrahedron" => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return Err(KfwError::Parameter(format!("dimension {n} is not a square")).into());
            }
            FeasibleSet::spectrahedron(side)?
        }
        "nuclear_ball" => {
            let (rows, cols) = (x.rows.unwrap_or(0), x.cols.unwrap_or(0));
            if rows * cols != n {
                return Err(KfwError::Dimension { expected: n, got: rows * cols }.into());
            }
            FeasibleSet::nuclear_ball(rows, cols, radius)?
        }
        other => return Err(KfwError::Config(format!("unknown set '{other}'")).into()),
    };
    let obj = CompositeObjective::new(outer, map, linear)?;
    let mut problem = Problem::new("external", obj, set)?;
    if let Some(start) = vector(&x.start)? {
        problem = problem.with_start(start)?;
    }
    Ok(problem)
}

/// Writes `problem` as Matrix Market files plus a `problem.cfg` that loads it
/// back as an external problem. Returns the configuration path.
pub fn export_problem(problem: &Problem, dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let unsupported = |what: String| CliError::Solver(KfwError::Unsupported(what));
    let obj = &problem.objective;
    let mut cfg = String::from("problem.name = external\n");
    match obj.outer() {
        Outer::SquaredResidual { target, weight } => {
            mm::write_vector(&dir.join("target.mtx"), target)?;
            cfg.push_str("problem.target = target.mtx\n");
            if *weight != 1.0 {
                cfg.push_str(&format!("problem.weight = {weight:?}\n"));
            }
            match obj.map() {
                LinearMap::Identity(_) => {}
                map => {
                    let size = map.input_dim().saturating_mul(map.output_dim());
                    if size > EXPORT_LIMIT {
                        return Err(unsupported(format!("operator with {size} entries is too large to export")));
                    }
                    let a = match map {
                        LinearMap::Dense(a) => a.values().clone(),
                        _ => map.apply_columns(&DMatrix::identity(map.input_dim(), map.input_dim())),
                    };
                    mm::write_matrix(&dir.join("matrix.mtx"), &a)?;
                    cfg.push_str("problem.matrix = matrix.mtx\n");
                }
            }
        }
        Outer::QuadraticForm { q } if matches!(obj.map(), LinearMap::Identity(_)) => {
            mm::write_matrix(&dir.join("quadratic.mtx"), q.values())?;
            cfg.push_str("problem.quadratic = quadratic.mtx\n");
        }
        other => return Err(unsupported(format!("exporting objective {other:?}"))),
    }
    if obj.linear().iter().any(|&v| v != 0.0) {
        mm::write_vector(&dir.join("linear.mtx"), obj.linear())?;
        cfg.push_str("problem.linear = linear.mtx\n");
    }
    match &problem.set {
        FeasibleSet::Simplex { .. } => cfg.push_str("problem.set = simplex\n"),
        FeasibleSet::Hypercube { .. } => cfg.push_str("problem.set = hypercube\n"),
        FeasibleSet::Spectrahedron { .. } => cfg.push_str("problem.set = spectrahedron\n"),
        FeasibleSet::L1Ball { radius, .. } => {
            cfg.push_str(&format!("problem.set = l1_ball\nproblem.radius = {radius:?}\n"))
        }
        FeasibleSet::NuclearBall { rows, cols, radius } => cfg.push_str(&format!(
            "problem.set = nuclear_ball\nproblem.rows = {rows}\nproblem.cols = {cols}\nproblem.radius = {radius:?}\n"
        )),
        FeasibleSet::GroupNormBall { n, groups, radius } => {
            let size = groups.first().map_or(0, Vec::len);
            let contiguous = groups
                .iter()
                .enumerate()
                .all(|(g, idx)| idx.iter().copied().eq(g * size..(g + 1) * size));
            if size == 0 || !contiguous || size * groups.len() != *n {
                return Err(unsupported("group ball without equal contiguous groups".into()));
            }
            cfg.push_str(&format!(
                "problem.set = group_ball\nproblem.group_size = {size}\nproblem.radius = {radius:?}\n"
            ));
        }
        other => return Err(unsupported(format!("exporting set {}", other.kind()))),
    }
    if let Some(x0) = &problem.x0 {
        mm::write_vector(&dir.join("start.mtx"), x0)?;
        cfg.push_str("problem.start = start.mtx\n");
    }
    if let Some(x) = &problem.solution {
        mm::write_vector(&dir.join("solution.mtx"), x)?;
    }
    cfg.push_str("solver.algorithm = kfw\n");
    let path = dir.join("problem.cfg");
    fs::write(&path, cfg).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub r_star: f64,
    pub support_size: usize,
    pub delta: f64,
    pub gamma_lower: f64,
    pub lipschitz: f64,
    pub diameter: f64,
    pub t_bound: f64,
    pub support_kind: &'static str,
}

impl From<&Certificate> for CertificateSummary {
    fn from(c: &Certificate) -> Self {
        Self {
            r_star: c.r_star,
            support_size: c.support_size,
            delta: c.delta,
            gamma_lower: c.gamma_lower,
            lipschitz: c.lipschitz,
            diameter: c.diameter,
            t_bound: c.t_bound,
            support_kind: match c.support {
                SupportDescriptor::Indices(_) => "indices",
                SupportDescriptor::Fractional(_) => "fractional",
                SupportDescriptor::Groups(_) => "groups",
                SupportDescriptor::Vertices(_) => "vertices",
                SupportDescriptor::Subspace(_) => "subspace",
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub label: String,
    pub algorithm: String,
    pub k: usize,
    pub problem_hash: String,
    pub final_objective: Option<f64>,
    pub final_fw_gap: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub stop_reason: Option<&'static str>,
    pub total_seconds: f64,
    pub kloo_seconds: Option<f64>,
    pub kds_seconds: Option<f64>,
    pub kloo_kds_ratio: Option<f64>,
    pub certificate: Option<CertificateSummary>,
    pub error: Option<String>,
    #[serde(skip)]
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemSummary {
    pub name: String,
    pub hash: String,
    pub dim: usize,
    pub set: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub problem: ProblemSummary,
    pub solvers: Vec<SolverSummary>,
}

impl RunSummary {
    /// 2 if any solver failed numerically, else 1 if any failed, else 0.
    pub fn exit_code(&self) -> i32 {
        self.solvers.iter().map(|s| s.exit_code).max().unwrap_or(0)
    }
}

/// CSV text of a trace with the [`TRACE_HEADER`] columns.
pub fn trace_csv(trace: &SolveTrace) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Format(e.to_string());
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in &trace.records {
        w.write_record([
            r.iter.to_string(),
            format!("{:?}", r.elapsed_s),
            format!("{:?}", r.objective),
            format!("{:?}", r.fw_gap),
            format!("{:?}", r.rel_change),
            r.k_used.to_string(),
            r.support_size.to_string(),
            format!("{:?}", r.kloo_s),
            format!("{:?}", r.kds_s),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn certificate_seed(config: &ProblemConfig) -> u64 {
    match &config.source {
        ProblemSource::Bench(b) => b.seed,
        ProblemSource::External(_) => 0,
    }
}

fn run_one(
    problem: &Problem,
    hash: &str,
    entry: &SolverEntry,
    output: &OutputConfig,
    seed: u64,
) -> Result<SolverSummary, CliError> {
    let clock = Instant::now();
    let result: Result<SolveOutput, KfwError> = solve(problem, &entry.config);
    let total_seconds = clock.elapsed().as_secs_f64();
    let mut summary = SolverSummary {
        label: entry.label.clone(),
        algorithm: entry.config.algorithm.to_string(),
        k: entry.config.k,
        problem_hash: hash.to_string(),
        final_objective: None,
        final_fw_gap: None,
        iterations: None,
        converged: false,
        stop_reason: None,
        total_seconds,
        kloo_seconds: None,
        kds_seconds: None,
        kloo_kds_ratio: None,
        certificate: None,
        error: None,
        exit_code: 0,
    };
    let out = match result {
        Ok(out) => out,
        Err(e) => {
            summary.exit_code = CliError::Solver(e.clone()).exit_code();
            summary.error = Some(e.to_string());
            return Ok(summary);
        }
    };
    let trace_path = output.dir.join(format!("trace_{}.csv", entry.label));
    fs::write(&trace_path, trace_csv(&out.trace)?).map_err(|e| CliError::io(&trace_path, e))?;
    mm::write_vector(&output.dir.join(format!("x_{}.mtx", entry.label)), &out.x)?;
    let last = out.trace.last();
    let (kloo, kds) = (out.trace.kloo_seconds(), out.trace.kds_seconds());
    summary.final_objective = last.map(|r| r.objective);
    summary.final_fw_gap = last.map(|r| r.fw_gap);
    summary.iterations = Some(out.trace.iterations());
    summary.converged = out.stop.converged();
    summary.stop_reason = Some(out.stop.name());
    summary.kloo_seconds = Some(kloo);
    summary.kds_seconds = Some(kds);
    summary.kloo_kds_ratio = (kds > 0.0).then(|| kloo / kds);
    if output.certify {
        match certify(problem, &out.x, output.rank_tol, output.growth_samples, seed) {
            Ok(c) => summary.certificate = Some((&c).into()),
            Err(e) => {
                summary.exit_code = CliError::Solver(e.clone()).exit_code();
                summary.error = Some(format!("certificate: {e}"));
            }
        }
    }
    Ok(summary)
}

/// Runs every configured solver on one problem, `jobs` at a time, and writes
/// `trace_<label>.csv`, `x_<label>.mtx` and `summary.json` into the output
/// directory. A failing solver is recorded in the summary; its siblings still run.
pub fn run_compare(config: &RunConfig, base: &Path) -> Result<RunSummary, CliError> {
    let problem = build_problem(&config.problem, base)?;
    let hash = problem_hash(&problem);
    let output = &config.output;
    fs::create_dir_all(&output.dir).map_err(|e| CliError::io(&output.dir, e))?;
    let seed = certificate_seed(&config.problem);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(output.jobs)
        .build()
        .map_err(|e| CliError::Format(e.to_string()))?;
    let solvers = pool.install(|| {
        config
            .solvers
            .par_iter()
            .map(|entry| {
                let own = problem.clone();
                run_one(&own, &hash, entry, output, seed)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let summary = RunSummary {
        problem: ProblemSummary {
            name: config.problem.name().to_string(),
            hash,
            dim: problem.dim(),
            set: problem.set.kind(),
        },
        solvers,
    };
    let path = output.dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Format(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(summary)
}

/// Certificate of a point read from a Matrix Market file.
pub fn certify_point(
    config: &RunConfig,
    base: &Path,
    point: &Path,
) -> Result<CertificateSummary, CliError> {
    let problem = build_problem(&config.problem, base)?;
    let x: DVector<f64> = mm::read_vector(point)?;
    if x.len() != problem.dim() {
        return Err(KfwError::Dimension {
            expected: problem.dim(),
            got: x.len(),
        }
        .into());
    }
    let out = &config.output;
    let c = certify(&problem, &x, out.rank_tol, out.growth_samples, certificate_seed(&config.problem))?;
    Ok((&c).into())
}
