use std::time::Instant;

use nalgebra::DVector;

use super::{drive, Problem, SolveOutput, SolverConfig, StepOutput};
use crate::error::{KfwError, Result};
use crate::objective::{CompositeObjective, ParamObjective, RestrictedObjective};
use crate::sets::{AtomMemory, DsParametrization};
use crate::subsolver::{anchor_weight_search, apg_solve, line_search, ApgConfig};

/// Frank-Wolfe with line search.
pub fn run_fw(problem: &Problem, config: &SolverConfig) -> Result<SolveOutput> {
    let obj = &problem.objective;
    let set = &problem.set;
    drive(problem, config, problem.start(), true, |s| {
        let clock = Instant::now();
        let v = set.loo(s.grad)?;
        let kloo_s = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let d = v.point - s.x;
        let step = line_search(obj, s.x, s.grad, &d, 1.0, config.line_search);
        let x = s.x + d * step;
        Ok(StepOutput {
            x,
            k_used: 1,
            kloo_s,
            kds_s: clock.elapsed().as_secs_f64(),
        })
    })
}

/// kFW: kLOO, then the direction search over the returned directions and `x_t`.
pub fn run_kfw(problem: &Problem, config: &SolverConfig) -> Result<SolveOutput> {
    let k = config.k.min(problem.set.max_k());
    drive(problem, config, problem.start(), true, |s| {
        kfw_step(problem, &config.apg, s.x, s.grad, k)
    })
}

/// kFW with the adaptive rule: `k` is multiplied by ς at the third step and
/// afterwards for as long as the relative decrease keeps improving; once it
/// does not, `k` is frozen.
pub fn run_kfw_adaptive(problem: &Problem, config: &SolverConfig) -> Result<SolveOutput> {
    let cap = config
        .k_max
        .unwrap_or(problem.dim())
        .min(problem.set.max_k())
        .max(1);
    let mut k = config.k.min(cap);
    let mut inc = true;
    drive(problem, config, problem.start(), true, |s| {
        // s.t is one more than the iteration counter of the rule
        let t = s.t - 1;
        if t == 2 {
            k = grow(k, config.adaptive_factor, cap);
        } else if t > 2 && inc {
            let f = s.trace.objectives();
            let rel = |a: f64, b: f64| (a - b) / a.abs().max(1e-300);
            if rel(f[t - 1], f[t]) > rel(f[t - 2], f[t - 1]) {
                k = grow(k, config.adaptive_factor, cap);
            } else {
                inc = false;
            }
        }
        kfw_step(problem, &config.apg, s.x, s.grad, k)
    })
}

fn grow(k: usize, factor: f64, cap: usize) -> usize {
    ((k as f64 * factor).ceil() as usize).clamp(k, cap)
}

fn kfw_step(
    problem: &Problem,
    apg: &ApgConfig,
    x: &DVector<f64>,
    grad: &DVector<f64>,
    k: usize,
) -> Result<StepOutput> {
    let clock = Instant::now();
    let out = problem.set.kloo(grad, k)?;
    let kloo_s = clock.elapsed().as_secs_f64();
    let clock = Instant::now();
    let param = problem.set.build_ds(x, &out)?;
    let x_new = direction_search(&problem.objective, &param, apg)?;
    Ok(StepOutput {
        x: x_new,
        k_used: k,
        kloo_s,
        kds_s: clock.elapsed().as_secs_f64(),
    })
}

/// Minimizes `f` over the image of `param` by APG from the warm start.
pub fn direction_search(
    obj: &CompositeObjective,
    param: &DsParametrization,
    apg: &ApgConfig,
) -> Result<DVector<f64>> {
    let restricted = RestrictedObjective::new(obj, param)?;
    let theta0 = param.warm_start();
    let project = |z: &DVector<f64>| param.project(z);
    let reduced = restricted.reduce();
    let (obj, cfg): (&dyn ParamObjective, ApgConfig) = match &reduced {
        Some(r) => {
            let lip = r.lipschitz();
            let cfg = ApgConfig {
                initial_step: apg.initial_step.or((lip > 0.0).then(|| 1.0 / lip)),
                ..apg.clone()
            };
            (r, cfg)
        }
        None => (&restricted, apg.clone()),
    };
    let mut result = apg_solve(obj, project, &cfg, &theta0)?;
    if !result.converged && param.single_anchor() {
        let refined = anchor_weight_search(
            obj,
            |eta, rest| param.project_slice(eta, rest),
            param.anchor_scale(),
            &cfg,
            &result.theta,
        )?;
        if refined.objective < result.objective {
            result = refined;
        }
    }
    Ok(param.map_point(&result.theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryVariant {
    /// One LOO per iteration, search over `x_t`, the memory and the new atom.
    Lfw,
    /// kLOO per iteration, search over `x_t`, the memory and the k new atoms.
    Lkfw,
}

/// Limited-memory FW / kFW with a FIFO memory of the LOO vertices of recent
/// iterations.
pub fn run_limited_memory(
    problem: &Problem,
    config: &SolverConfig,
    variant: MemoryVariant,
) -> Result<SolveOutput> {
    let set = &problem.set;
    let mut memory = AtomMemory::new(config.memory_size());
    let k = match variant {
        MemoryVariant::Lfw => 1,
        MemoryVariant::Lkfw => config.k.min(set.max_k()),
    };
    drive(problem, config, problem.start(), true, |s| {
        let clock = Instant::now();
        let fresh = match variant {
            MemoryVariant::Lfw => vec![set.loo(s.grad)?],
            MemoryVariant::Lkfw => set.kloo(s.grad, k)?.atoms(set).ok_or_else(|| {
                KfwError::Config(format!("lkfw has no vertex list for {}", set.kind()))
            })?,
        };
        let kloo_s = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let points = fresh
            .iter()
            .chain(memory.atoms())
            .map(|a| a.point.clone())
            .collect();
        let param = DsParametrization::convex_hull(s.x.clone(), points);
        let x = direction_search(&problem.objective, &param, &config.apg)?;
        // the memory keeps the LOO vertex of each past iteration
        if let Some(best) = fresh.into_iter().next() {
            memory.push(best, s.t);
        }
        Ok(StepOutput {
            x,
            k_used: param.directions(),
            kloo_s,
            kds_s: clock.elapsed().as_secs_f64(),
        })
    })
}
