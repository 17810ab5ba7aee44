//! Outer loops: FW, kFW, adaptive-k kFW, limited-memory variants, away-step
//! and pairwise FW, sharing one stopping and tracing contract.

mod active;
mod kfw;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;

pub use active::{run_away, run_pairwise, ActiveSet};
pub use kfw::{run_fw, run_kfw, run_kfw_adaptive, run_limited_memory, MemoryVariant};

use crate::certificates::sparsity_measure;
use crate::error::{check_dim, KfwError, Result};
use crate::objective::CompositeObjective;
use crate::sets::{FeasibleSet, CONTAINS_TOL};
use crate::subsolver::{ApgConfig, LineSearchMode};

/// An optimization problem `min f(x)` over a feasible set.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub objective: CompositeObjective,
    pub set: FeasibleSet,
    /// Start point; the set's canonical vertex when absent.
    pub x0: Option<DVector<f64>>,
    /// A planted or analytic solution, when known.
    pub solution: Option<DVector<f64>>,
    /// Known optimal value, when available.
    pub f_star: Option<f64>,
    /// Planted sparsity or rank.
    pub planted_sparsity: Option<usize>,
}

impl Problem {
    pub fn new(name: impl Into<String>, objective: CompositeObjective, set: FeasibleSet) -> Result<Self> {
        check_dim(set.dim(), objective.dim())?;
        Ok(Self {
            name: name.into(),
            objective,
            set,
            x0: None,
            solution: None,
            f_star: None,
            planted_sparsity: None,
        })
    }

    pub fn with_start(mut self, x0: DVector<f64>) -> Result<Self> {
        if !self.set.contains(&x0, CONTAINS_TOL)? {
            return Err(KfwError::Parameter("start point is not feasible".into()));
        }
        self.x0 = Some(x0);
        Ok(self)
    }

    pub fn start(&self) -> DVector<f64> {
        self.x0.clone().unwrap_or_else(|| self.set.canonical_vertex())
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Fw,
    Kfw,
    KfwAdaptive,
    Lfw,
    Lkfw,
    Away,
    Pairwise,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Fw,
        Algorithm::Kfw,
        Algorithm::KfwAdaptive,
        Algorithm::Lfw,
        Algorithm::Lkfw,
        Algorithm::Away,
        Algorithm::Pairwise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fw => "fw",
            Algorithm::Kfw => "kfw",
            Algorithm::KfwAdaptive => "kfw_adaptive",
            Algorithm::Lfw => "lfw",
            Algorithm::Lkfw => "lkfw",
            Algorithm::Away => "away",
            Algorithm::Pairwise => "pairwise",
        }
    }

    /// Whether the algorithm needs a set with an explicit vertex oracle.
    pub fn needs_vertices(self) -> bool {
        matches!(
            self,
            Algorithm::Lfw | Algorithm::Lkfw | Algorithm::Away | Algorithm::Pairwise
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = KfwError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| KfwError::Config(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub max_iter: usize,
    pub rel_change_tol: f64,
    /// Disabled when zero.
    pub fw_gap_tol: f64,
    /// Growth factor ς of adaptive k.
    pub adaptive_factor: f64,
    /// Cap on k; the set dimension when absent.
    pub k_max: Option<usize>,
    /// Memory size of the limited-memory variants; `k − 1` when absent.
    pub memory: Option<usize>,
    pub seed: u64,
    pub line_search: LineSearchMode,
    pub apg: ApgConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Kfw,
            k: 1,
            max_iter: 1000,
            rel_change_tol: 1e-6,
            fw_gap_tol: 0.0,
            adaptive_factor: 2.0,
            k_max: None,
            memory: None,
            seed: 0,
            line_search: LineSearchMode::ExactQuadratic,
            apg: ApgConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, k: usize) -> Self {
        Self {
            algorithm,
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(KfwError::Config("k must be at least 1".into()));
        }
        if !(self.rel_change_tol >= 0.0) || !(self.fw_gap_tol >= 0.0) {
            return Err(KfwError::Config("tolerances must be nonnegative".into()));
        }
        if !(self.adaptive_factor > 1.0) {
            return Err(KfwError::Config("adaptive factor must exceed 1".into()));
        }
        if self.k_max == Some(0) {
            return Err(KfwError::Config("k_max must be at least 1".into()));
        }
        self.apg.validate()
    }

    pub fn memory_size(&self) -> usize {
        self.memory.unwrap_or(self.k.saturating_sub(1))
    }
}

/// One row of a trace; iteration 0 is the start point.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub elapsed_s: f64,
    pub objective: f64,
    pub fw_gap: f64,
    /// NaN on iteration 0.
    pub rel_change: f64,
    pub k_used: usize,
    pub support_size: usize,
    pub kloo_s: f64,
    pub kds_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<IterRecord>,
}

impl SolveTrace {
    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// Number of iterations performed (records after the start point).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn kloo_seconds(&self) -> f64 {
        self.records.iter().map(|r| r.kloo_s).sum()
    }

    pub fn kds_seconds(&self) -> f64 {
        self.records.iter().map(|r| r.kds_s).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Continue,
    RelChange,
    MaxIter,
    FwGap,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Continue => "continue",
            StopReason::RelChange => "rel_change",
            StopReason::MaxIter => "max_iter",
            StopReason::FwGap => "fw_gap",
        }
    }

    /// Stopped by a convergence test rather than the iteration cap.
    pub fn converged(self) -> bool {
        matches!(self, StopReason::RelChange | StopReason::FwGap)
    }
}

pub fn stop_check(trace: &SolveTrace, config: &SolverConfig) -> StopReason {
    let Some(last) = trace.last() else {
        return StopReason::Continue;
    };
    if config.fw_gap_tol > 0.0 && last.fw_gap <= config.fw_gap_tol {
        return StopReason::FwGap;
    }
    if let [.., prev, cur] = trace.records.as_slice() {
        let rel = (cur.objective - prev.objective).abs() / prev.objective.abs().max(1e-300);
        if rel < config.rel_change_tol {
            return StopReason::RelChange;
        }
    }
    if last.iter >= config.max_iter {
        return StopReason::MaxIter;
    }
    StopReason::Continue
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub x: DVector<f64>,
    pub trace: SolveTrace,
    pub stop: StopReason,
}

/// Runs the configured algorithm.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<SolveOutput> {
    config.validate()?;
    if config.algorithm.needs_vertices() && !problem.set.is_vertex_representable() {
        return Err(KfwError::Config(format!(
            "{} needs a polytope with a vertex oracle, got {}",
            config.algorithm,
            problem.set.kind()
        )));
    }
    match config.algorithm {
        Algorithm::Fw => run_fw(problem, config),
        Algorithm::Kfw => run_kfw(problem, config),
        Algorithm::KfwAdaptive => run_kfw_adaptive(problem, config),
        Algorithm::Lfw => run_limited_memory(problem, config, MemoryVariant::Lfw),
        Algorithm::Lkfw => run_limited_memory(problem, config, MemoryVariant::Lkfw),
        Algorithm::Away => run_away(problem, config),
        Algorithm::Pairwise => run_pairwise(problem, config),
    }
}

/// State handed to a step function.
pub(crate) struct StepInput<'a> {
    pub t: usize,
    pub x: &'a DVector<f64>,
    pub grad: &'a DVector<f64>,
    pub trace: &'a SolveTrace,
}

pub(crate) struct StepOutput {
    pub x: DVector<f64>,
    pub k_used: usize,
    pub kloo_s: f64,
    pub kds_s: f64,
}

/// The shared outer loop: records the start point, calls `step` until
/// [`stop_check`] fires, and keeps `x_t` whenever a step would increase `f`
/// and `monotone` is set.
pub(crate) fn drive<S>(
    problem: &Problem,
    config: &SolverConfig,
    x0: DVector<f64>,
    monotone: bool,
    mut step: S,
) -> Result<SolveOutput>
where
    S: FnMut(StepInput<'_>) -> Result<StepOutput>,
{
    let obj = &problem.objective;
    let set = &problem.set;
    let clock = Instant::now();
    let mut x = x0;
    let (mut f, mut g) = obj.value_grad(&x)?;
    ensure_finite(f, 0)?;
    let mut trace = SolveTrace::default();
    trace.records.push(IterRecord {
        iter: 0,
        elapsed_s: clock.elapsed().as_secs_f64(),
        objective: f,
        fw_gap: fw_gap_at(set, &x, &g)?,
        rel_change: f64::NAN,
        k_used: 0,
        support_size: sparsity_measure(set, &x, 1e-8)?.count,
        kloo_s: 0.0,
        kds_s: 0.0,
    });
    let mut stop = stop_check(&trace, config);
    let mut t = 0;
    while stop == StopReason::Continue {
        t += 1;
        let out = step(StepInput {
            t,
            x: &x,
            grad: &g,
            trace: &trace,
        })?;
        let (f_new, g_new) = obj.value_grad(&out.x)?;
        ensure_finite(f_new, t)?;
        if !(monotone && f_new > f) {
            x = out.x;
            f = f_new;
            g = g_new;
        }
        let prev = trace.last().expect("start recorded").objective;
        trace.records.push(IterRecord {
            iter: t,
            elapsed_s: clock.elapsed().as_secs_f64(),
            objective: f,
            fw_gap: fw_gap_at(set, &x, &g)?,
            rel_change: (f - prev).abs() / prev.abs().max(1e-300),
            k_used: out.k_used,
            support_size: sparsity_measure(set, &x, 1e-8)?.count,
            kloo_s: out.kloo_s,
            kds_s: out.kds_s,
        });
        stop = stop_check(&trace, config);
    }
    Ok(SolveOutput { x, trace, stop })
}

fn ensure_finite(f: f64, t: usize) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(KfwError::Numerical(format!("objective is {f} at iteration {t}")))
    }
}

fn fw_gap_at(set: &FeasibleSet, x: &DVector<f64>, g: &DVector<f64>) -> Result<f64> {
    let v = set.loo(g)?;
    Ok(g.dot(&(x - v.point)))
}
