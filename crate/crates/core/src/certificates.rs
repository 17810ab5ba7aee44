//! Post-hoc optimality analysis: FW gap, sparsity `r⋆`, complementarity gap
//! `δ`, probed quadratic growth `γ` and the burn-in bound `T`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, KfwError, Result};
use crate::linalg::{eig_sym_ascending, svd_descending, symmetrize, SeededRng};
use crate::sets::{block_norm, hypercube_k_best, reshape, FeasibleSet};
use crate::solver::Problem;

/// Which part of the set the point lives on.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportDescriptor {
    /// Nonzero coordinates.
    Indices(Vec<usize>),
    /// Coordinates strictly inside `(0, 1)`.
    Fractional(Vec<usize>),
    /// Groups with a nonzero block.
    Groups(Vec<usize>),
    /// Vertices of the smallest face containing the point.
    Vertices(Vec<usize>),
    /// Orthonormal basis of the range (left singular vectors for rectangular).
    Subspace(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sparsity {
    /// Support size: nonzeros, fractional coordinates, live groups, face
    /// vertices or rank.
    pub count: usize,
    /// `r⋆`, the number of vertices of the smallest face for polytopes; equals
    /// `count` except on the hypercube, where it is `2^count`.
    pub r_star: f64,
    pub support: SupportDescriptor,
}

/// `<∇f(x), x − v>` for the LOO atom `v`.
pub fn fw_gap(problem: &Problem, x: &DVector<f64>) -> Result<f64> {
    let g = problem.objective.gradient(x)?;
    let v = problem.set.loo(&g)?;
    Ok(g.dot(&(x - v.point)))
}

/// Support of `x` at tolerance `rank_tol`: absolute for coordinates and group
/// norms, relative to the top eigen/singular value for spectral sets.
pub fn sparsity_measure(set: &FeasibleSet, x: &DVector<f64>, rank_tol: f64) -> Result<Sparsity> {
    check_dim(set.dim(), x.len())?;
    let plain = |count: usize, support| Sparsity {
        count,
        r_star: count as f64,
        support,
    };
    Ok(match set {
        FeasibleSet::Simplex { .. }
        | FeasibleSet::L1Ball { .. }
        | FeasibleSet::ProductSimplices { .. } => {
            let idx: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() > rank_tol).collect();
            plain(idx.len(), SupportDescriptor::Indices(idx))
        }
        FeasibleSet::Hypercube { .. } => {
            let idx: Vec<usize> = (0..x.len())
                .filter(|&i| x[i] > rank_tol && x[i] < 1.0 - rank_tol)
                .collect();
            Sparsity {
                count: idx.len(),
                r_star: 2f64.powi(idx.len() as i32),
                support: SupportDescriptor::Fractional(idx),
            }
        }
        FeasibleSet::GroupNormBall { groups, .. } => {
            let live: Vec<usize> = (0..groups.len())
                .filter(|&g| block_norm(x, &groups[g]) > rank_tol)
                .collect();
            plain(live.len(), SupportDescriptor::Groups(live))
        }
        FeasibleSet::Spectrahedron { n } => {
            let (lambda, v) = eig_sym_ascending(&symmetrize(&reshape(x, *n, *n)));
            let top = lambda.max().max(0.0);
            let keep: Vec<usize> = (0..*n).rev().filter(|&i| lambda[i] > rank_tol * top).collect();
            let basis = DMatrix::from_fn(*n, keep.len(), |r, c| v[(r, keep[c])]);
            plain(keep.len(), SupportDescriptor::Subspace(basis))
        }
        FeasibleSet::NuclearBall { rows, cols, .. } => {
            let (u, s, _) = svd_descending(&reshape(x, *rows, *cols));
            let top = s.max();
            let r = s.iter().filter(|&&v| v > rank_tol * top && top > 0.0).count();
            plain(r, SupportDescriptor::Subspace(u.columns(0, r).into_owned()))
        }
        FeasibleSet::VertexPolytope { vertices, facets } => {
            let face: Vec<usize> = match facets {
                Some(f) => {
                    let tight: Vec<&(DVector<f64>, f64)> =
                        f.iter().filter(|(a, b)| a.dot(x) >= b - rank_tol).collect();
                    (0..vertices.len())
                        .filter(|&i| tight.iter().all(|(a, b)| a.dot(&vertices[i]) >= b - rank_tol))
                        .collect()
                }
                None => (0..vertices.len()).collect(),
            };
            plain(face.len(), SupportDescriptor::Vertices(face))
        }
    })
}

/// The complementarity gap `δ` at a solution with gradient `grad` and
/// sparsity `r`: the gap between the `r`-th and `(r+1)`-th best vertex inner
/// products (polytopes), block norms (group ball, times the radius),
/// eigenvalues (spectrahedron) or singular values (nuclear ball, times the
/// radius). Infinite when no `(r+1)`-th direction exists.
pub fn delta_gap(set: &FeasibleSet, grad: &DVector<f64>, sparsity: &Sparsity) -> Result<f64> {
    check_dim(set.dim(), grad.len())?;
    let r = sparsity.r_star;
    if r < 1.0 {
        return Err(KfwError::Parameter("sparsity must be at least 1".into()));
    }
    let r = r as usize;
    let gap_ascending = |mut vals: Vec<f64>| {
        vals.sort_by(f64::total_cmp);
        if r >= vals.len() {
            f64::INFINITY
        } else {
            vals[r] - vals[r - 1]
        }
    };
    Ok(match set {
        FeasibleSet::Simplex { .. } => gap_ascending(grad.iter().copied().collect()),
        FeasibleSet::L1Ball { radius, .. } => {
            gap_ascending(grad.iter().flat_map(|&g| [radius * g, -radius * g]).collect())
        }
        FeasibleSet::Hypercube { n } => {
            if *n < usize::BITS as usize - 1 && r >= 1usize << n {
                return Ok(f64::INFINITY);
            }
            let best = hypercube_k_best(grad.as_slice(), r + 1);
            let score = |v: &Vec<bool>| -> f64 {
                v.iter().zip(grad.iter()).filter(|(b, _)| **b).map(|(_, g)| g).sum()
            };
            score(&best[r]) - score(&best[r - 1])
        }
        FeasibleSet::VertexPolytope { vertices, .. } => {
            gap_ascending(vertices.iter().map(|v| v.dot(grad)).collect())
        }
        FeasibleSet::GroupNormBall { groups, radius, .. } => {
            let mut norms: Vec<f64> = groups.iter().map(|g| block_norm(grad, g)).collect();
            norms.sort_by(|a, b| b.total_cmp(a));
            if r >= norms.len() {
                f64::INFINITY
            } else {
                radius * (norms[r - 1] - norms[r])
            }
        }
        FeasibleSet::Spectrahedron { n } => {
            let (lambda, _) = eig_sym_ascending(&symmetrize(&reshape(grad, *n, *n)));
            if r >= *n {
                f64::INFINITY
            } else {
                lambda[r] - lambda[r - 1]
            }
        }
        FeasibleSet::NuclearBall { rows, cols, radius } => {
            let (_, s, _) = svd_descending(&reshape(grad, *rows, *cols));
            if r >= s.len() {
                f64::INFINITY
            } else {
                radius * (s[r - 1] - s[r])
            }
        }
        FeasibleSet::ProductSimplices { .. } => {
            return Err(KfwError::Unsupported(
                "complementarity gap needs vertex enumeration for product simplices".into(),
            ))
        }
    })
}

/// A lower estimate of the quadratic-growth constant:
/// `min (f(x) − f(x⋆)) / ‖x − x⋆‖²` over `samples` seeded feasible points
/// and the segment endpoints they come from. Never a certificate.
pub fn probe_quadratic_growth(
    problem: &Problem,
    x_star: &DVector<f64>,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let obj = &problem.objective;
    let set = &problem.set;
    let f_star = obj.value(x_star)?;
    let mut rng = SeededRng::new(seed);
    let mut best = f64::INFINITY;
    let mut consider = |x: &DVector<f64>| -> Result<()> {
        let dist = (x - x_star).norm_squared();
        if dist > 1e-20 {
            best = best.min((obj.value(x)? - f_star) / dist);
        }
        Ok(())
    };
    for _ in 0..samples {
        // endpoint: a random convex combination of two oracle atoms
        let a = set.loo(&rng.normal_vector(set.dim()))?.point;
        let b = set.loo(&rng.normal_vector(set.dim()))?.point;
        let mix = rng.uniform();
        let end = &a * mix + &b * (1.0 - mix);
        consider(&end)?;
        let t = rng.uniform_in(1e-3, 1.0);
        consider(&(x_star + (&end - x_star) * t))?;
    }
    Ok(best.max(0.0))
}

/// Post-hoc certificate for a solved point.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub r_star: f64,
    pub support_size: usize,
    pub delta: f64,
    pub gamma_lower: f64,
    pub lipschitz: f64,
    pub diameter: f64,
    pub t_bound: f64,
    pub support: SupportDescriptor,
}

/// `T = 4 L³ D⁴ / (γ δ²)`; infinite unless `γ, δ > 0`.
pub fn burn_in_bound(lipschitz: f64, diameter: f64, gamma: f64, delta: f64) -> f64 {
    if gamma > 0.0 && delta > 0.0 {
        4.0 * lipschitz.powi(3) * diameter.powi(4) / (gamma * delta * delta)
    } else {
        f64::INFINITY
    }
}

/// Certificate at `x_star` with `rank_tol` and `samples` growth probes.
pub fn certify(
    problem: &Problem,
    x_star: &DVector<f64>,
    rank_tol: f64,
    samples: usize,
    seed: u64,
) -> Result<Certificate> {
    let sparsity = sparsity_measure(&problem.set, x_star, rank_tol)?;
    let grad = problem.objective.gradient(x_star)?;
    let delta = match delta_gap(&problem.set, &grad, &sparsity) {
        Ok(d) => d,
        Err(KfwError::Unsupported(_)) | Err(KfwError::Parameter(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    let gamma_lower = probe_quadratic_growth(problem, x_star, samples, seed)?;
    let lipschitz = problem.objective.estimate_lipschitz().unwrap_or(f64::NAN);
    let diameter = problem.set.diameter();
    Ok(Certificate {
        r_star: sparsity.r_star,
        support_size: sparsity.count,
        delta,
        gamma_lower,
        lipschitz,
        diameter,
        t_bound: burn_in_bound(lipschitz, diameter, gamma_lower, delta),
        support: sparsity.support,
    })
}

/// `‖U₁S₁U₁ᵀ − U₂S₂U₂ᵀ‖² + ‖V₁S₁V₁ᵀ − V₂S₂V₂ᵀ‖² − 2‖U₁S₁V₁ᵀ − U₂S₂V₂ᵀ‖²`.
///
/// For orthonormal `Uᵢ, Vᵢ` and PSD `Sᵢ` this equals
/// `−2‖S₂^½ (U₂ᵀU₁ − V₂ᵀV₁) S₁^½‖²`.
pub fn dilation_slack(
    u1: &DMatrix<f64>,
    s1: &DMatrix<f64>,
    v1: &DMatrix<f64>,
    u2: &DMatrix<f64>,
    s2: &DMatrix<f64>,
    v2: &DMatrix<f64>,
) -> f64 {
    let uu = u1 * s1 * u1.transpose() - u2 * s2 * u2.transpose();
    let vv = v1 * s1 * v1.transpose() - v2 * s2 * v2.transpose();
    let uv = u1 * s1 * v1.transpose() - u2 * s2 * v2.transpose();
    uu.norm_squared() + vv.norm_squared() - 2.0 * uv.norm_squared()
}
