use std::time::Instant;

use nalgebra::DVector;

use super::{drive, Problem, SolveOutput, SolverConfig, StepOutput};
use crate::error::{KfwError, Result};
use crate::sets::{Atom, FeasibleSet};
use crate::subsolver::line_search;

const PRUNE_TOL: f64 = 1e-12;

/// Atoms and convex weights representing the iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    atoms: Vec<Atom>,
    weights: Vec<f64>,
}

impl ActiveSet {
    pub fn singleton(atom: Atom) -> Self {
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    /// Active set for a start point that is a vertex of `set`.
    pub fn from_vertex(set: &FeasibleSet, x: &DVector<f64>) -> Result<Self> {
        let atom = set.loo(&(-x))?;
        if atom.id.is_none() || atom.point != *x {
            return Err(KfwError::Config(
                "away and pairwise steps need a vertex start point".into(),
            ));
        }
        Ok(Self::singleton(atom))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iterate(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.atoms[0].point.len());
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            x.axpy(w, &a.point, 1.0);
        }
        x
    }

    fn position(&self, atom: &Atom) -> Option<usize> {
        self.atoms.iter().position(|a| a.id == atom.id)
    }

    /// Index of the active atom maximizing `<a, grad>`.
    pub fn away_atom(&self, grad: &DVector<f64>) -> usize {
        let mut best = 0;
        let mut score = f64::NEG_INFINITY;
        for (i, a) in self.atoms.iter().enumerate() {
            let s = a.point.dot(grad);
            if s > score {
                score = s;
                best = i;
            }
        }
        best
    }

    /// `x ← (1 − γ) x + γ s`.
    pub fn fw_update(&mut self, s: Atom, gamma: f64) {
        if gamma >= 1.0 {
            *self = Self::singleton(s);
            return;
        }
        for w in &mut self.weights {
            *w *= 1.0 - gamma;
        }
        self.add(s, gamma);
        self.prune();
    }

    /// `x ← (1 + γ) x − γ a` for the active atom `a = atoms[idx]`.
    pub fn away_update(&mut self, idx: usize, gamma: f64, drop: bool) {
        for w in &mut self.weights {
            *w *= 1.0 + gamma;
        }
        self.weights[idx] -= gamma;
        if drop {
            self.weights[idx] = 0.0;
        }
        self.prune();
    }

    /// Moves weight `γ` from `atoms[idx]` to `s`.
    pub fn pairwise_update(&mut self, s: Atom, idx: usize, gamma: f64, drop: bool) {
        self.weights[idx] -= gamma;
        if drop {
            self.weights[idx] = 0.0;
        }
        self.add(s, gamma);
        self.prune();
    }

    fn add(&mut self, s: Atom, gamma: f64) {
        match self.position(&s) {
            Some(i) => self.weights[i] += gamma,
            None => {
                self.atoms.push(s);
                self.weights.push(gamma);
            }
        }
    }

    fn prune(&mut self) {
        let mut i = 0;
        while i < self.atoms.len() {
            if self.weights[i] < PRUNE_TOL && self.atoms.len() > 1 {
                self.atoms.swap_remove(i);
                self.weights.swap_remove(i);
            } else {
                i += 1;
            }
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
    }

    /// Weights positive, summing to one, and reproducing `x`.
    pub fn is_consistent(&self, x: &DVector<f64>, tol: f64) -> bool {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().all(|&w| w > 0.0)
            && (total - 1.0).abs() <= 1e-10
            && (self.iterate() - x).amax() <= tol
    }
}

/// Away-step FW. The away direction is taken only when its gap strictly
/// exceeds the FW gap.
pub fn run_away(problem: &Problem, config: &SolverConfig) -> Result<SolveOutput> {
    run_active(problem, config, false)
}

/// Pairwise FW: weight moves from the away atom to the FW atom.
pub fn run_pairwise(problem: &Problem, config: &SolverConfig) -> Result<SolveOutput> {
    run_active(problem, config, true)
}

fn run_active(problem: &Problem, config: &SolverConfig, pairwise: bool) -> Result<SolveOutput> {
    let obj = &problem.objective;
    let set = &problem.set;
    let x0 = problem.start();
    let mut active = ActiveSet::from_vertex(set, &x0)?;
    drive(problem, config, x0, false, |st| {
        let clock = Instant::now();
        let s = set.loo(st.grad)?;
        let kloo_s = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let a_idx = active.away_atom(st.grad);
        let a = active.atoms()[a_idx].point.clone();
        let w_a = active.weights()[a_idx];
        if pairwise {
            let d = &s.point - &a;
            let gamma = line_search(obj, st.x, st.grad, &d, w_a, config.line_search);
            if gamma > 0.0 {
                active.pairwise_update(s, a_idx, gamma, gamma >= w_a);
            }
        } else {
            let d_fw = &s.point - st.x;
            let d_away = st.x - &a;
            let gap_fw = -st.grad.dot(&d_fw);
            let gap_away = -st.grad.dot(&d_away);
            if gap_away > gap_fw && w_a < 1.0 {
                let max_step = w_a / (1.0 - w_a);
                let gamma = line_search(obj, st.x, st.grad, &d_away, max_step, config.line_search);
                if gamma > 0.0 {
                    active.away_update(a_idx, gamma, gamma >= max_step);
                }
            } else {
                let gamma = line_search(obj, st.x, st.grad, &d_fw, 1.0, config.line_search);
                if gamma > 0.0 {
                    active.fw_update(s, gamma);
                }
            }
        }
        Ok(StepOutput {
            x: active.iterate(),
            k_used: 1,
            kloo_s,
            kds_s: clock.elapsed().as_secs_f64(),
        })
    })
}
