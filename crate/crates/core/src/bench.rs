//! Seeded synthetic problems: Lasso, SVM dual, group Lasso, matrix
//! completion, the cone-polygon and hypercube examples, and planted
//! projection instances with known solutions and gaps.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{KfwError, Result};
use crate::linalg::{DenseOperator, SeededRng};
use crate::objective::{CompositeObjective, LinearMap, Outer};
use crate::projections::project_simplex;
use crate::sets::{flatten, FeasibleSet};
use crate::solver::Problem;

/// Generator parameters. `Default`-like desk sizes come from [`BenchmarkSpec::desk`].
#[derive(Debug, Clone, PartialEq)]
pub enum BenchmarkSpec {
    Lasso {
        m: usize,
        n: usize,
        sparsity: usize,
        noise: f64,
        seed: u64,
    },
    Svm {
        samples: usize,
        features: usize,
        c: f64,
        seed: u64,
    },
    GroupLasso {
        rows: usize,
        groups: usize,
        samples: usize,
        live: usize,
        noise: f64,
        seed: u64,
    },
    MatrixCompletion {
        n1: usize,
        n2: usize,
        rank: usize,
        obs_frac: f64,
        seed: u64,
    },
    ConePolygon {
        vertices: usize,
    },
    HypercubeProjection {
        n: usize,
        fractional: usize,
        seed: u64,
    },
    SimplexProjection {
        n: usize,
        support: usize,
        gap: f64,
        seed: u64,
    },
    GroupProjection {
        groups: usize,
        size: usize,
        live: usize,
        gap: f64,
        seed: u64,
    },
    SpectrahedronProjection {
        n: usize,
        rank: usize,
        gap: f64,
        seed: u64,
    },
    NuclearProjection {
        n1: usize,
        n2: usize,
        rank: usize,
        gap: f64,
        seed: u64,
    },
}

/// Mutable access to one generator parameter.
#[derive(Debug)]
pub enum ParamMut<'a> {
    Count(&'a mut usize),
    Real(&'a mut f64),
    Seed(&'a mut u64),
}

impl BenchmarkSpec {
    pub const NAMES: [&'static str; 10] = [
        "lasso",
        "svm",
        "group_lasso",
        "matrix_completion",
        "cone_polygon",
        "hypercube_projection",
        "simplex_projection",
        "group_projection",
        "spectrahedron_projection",
        "nuclear_projection",
    ];

    /// Desk-scale defaults for a named problem.
    pub fn desk(name: &str, seed: u64) -> Result<Self> {
        Ok(match name {
            "lasso" => BenchmarkSpec::Lasso {
                m: 200,
                n: 500,
                sparsity: 20,
                noise: 0.1,
                seed,
            },
            "svm" => BenchmarkSpec::Svm {
                samples: 200,
                features: 20,
                c: 10.0,
                seed,
            },
            "group_lasso" => BenchmarkSpec::GroupLasso {
                rows: 5,
                groups: 40,
                samples: 200,
                live: 4,
                noise: 0.01,
                seed,
            },
            "matrix_completion" => BenchmarkSpec::MatrixCompletion {
                n1: 100,
                n2: 100,
                rank: 3,
                obs_frac: 0.5,
                seed,
            },
            "cone_polygon" => BenchmarkSpec::ConePolygon { vertices: 200 },
            "hypercube_projection" => BenchmarkSpec::HypercubeProjection {
                n: 50,
                fractional: 10,
                seed,
            },
            "simplex_projection" => BenchmarkSpec::SimplexProjection {
                n: 50,
                support: 5,
                gap: 0.3,
                seed,
            },
            "group_projection" => BenchmarkSpec::GroupProjection {
                groups: 20,
                size: 4,
                live: 3,
                gap: 0.3,
                seed,
            },
            "spectrahedron_projection" => BenchmarkSpec::SpectrahedronProjection {
                n: 60,
                rank: 2,
                gap: 0.3,
                seed,
            },
            "nuclear_projection" => BenchmarkSpec::NuclearProjection {
                n1: 40,
                n2: 50,
                rank: 3,
                gap: 0.3,
                seed,
            },
            other => return Err(KfwError::Config(format!("unknown problem '{other}'"))),
        })
    }

    /// The experiment sizes of the original study, ten times the desk scale.
    pub fn paper_scale(name: &str, seed: u64) -> Result<Self> {
        Ok(match Self::desk(name, seed)? {
            BenchmarkSpec::Lasso { noise, .. } => BenchmarkSpec::Lasso {
                m: 2000,
                n: 5000,
                sparsity: 200,
                noise,
                seed,
            },
            BenchmarkSpec::Svm { c, .. } => BenchmarkSpec::Svm {
                samples: 1000,
                features: 20,
                c,
                seed,
            },
            BenchmarkSpec::GroupLasso { noise, .. } => BenchmarkSpec::GroupLasso {
                rows: 10,
                groups: 100,
                samples: 1000,
                live: 10,
                noise,
                seed,
            },
            BenchmarkSpec::MatrixCompletion { obs_frac, .. } => BenchmarkSpec::MatrixCompletion {
                n1: 500,
                n2: 500,
                rank: 5,
                obs_frac,
                seed,
            },
            other => other,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkSpec::Lasso { .. } => "lasso",
            BenchmarkSpec::Svm { .. } => "svm",
            BenchmarkSpec::GroupLasso { .. } => "group_lasso",
            BenchmarkSpec::MatrixCompletion { .. } => "matrix_completion",
            BenchmarkSpec::ConePolygon { .. } => "cone_polygon",
            BenchmarkSpec::HypercubeProjection { .. } => "hypercube_projection",
            BenchmarkSpec::SimplexProjection { .. } => "simplex_projection",
            BenchmarkSpec::GroupProjection { .. } => "group_projection",
            BenchmarkSpec::SpectrahedronProjection { .. } => "spectrahedron_projection",
            BenchmarkSpec::NuclearProjection { .. } => "nuclear_projection",
        }
    }

    /// The generator parameters by name, in declaration order.
    pub fn params_mut(&mut self) -> Vec<(&'static str, ParamMut<'_>)> {
        use ParamMut::{Count, Real, Seed};
        match self {
            BenchmarkSpec::Lasso {
                m,
                n,
                sparsity,
                noise,
                seed,
            } => vec![
                ("m", Count(m)),
                ("n", Count(n)),
                ("sparsity", Count(sparsity)),
                ("noise", Real(noise)),
                ("seed", Seed(seed)),
            ],
            BenchmarkSpec::Svm {
                samples,
                features,
                c,
                seed,
            } => vec![
                ("samples", Count(samples)),
                ("features", Count(features)),
                ("c", Real(c)),
                ("seed", Seed(seed)),
            ],
            BenchmarkSpec::GroupLasso {
                rows,
                groups,
                samples,
                live,
                noise,
                seed,
            } => vec![
                ("rows", Count(rows)),
                ("groups", Count(groups)),
                ("samples", Count(samples)),
                ("live", Count(live)),
                ("noise", Real(noise)),
                ("seed", Seed(seed)),
            ],
            BenchmarkSpec::MatrixCompletion {
                n1,
                n2,
                rank,
                obs_frac,
                seed,
            } => vec![
                ("n1", Count(n1)),
                ("n2", Count(n2)),
                ("rank", Count(rank)),
                ("obs_frac", Real(obs_frac)),
                ("seed", Seed(seed)),
            ],
            BenchmarkSpec::ConePolygon { vertices } => vec![("vertices", Count(vertices))],
            BenchmarkSpec::HypercubeProjection { n, fractional, seed } => vec![
                ("n", Count(n)),
                ("fractional", Count(fractional)),
                ("seed", Seed(seed)),
            ],
            BenchmarkSpec::SimplexProjection {
                n,
                support,
                gap,
                seed,
            } => vec![
                ("n", Count(n)),
                ("support", Count(support)),
                ("gap", Real(gap)),
                ("seed", Seed(seed)),
            ],
            BenchmarkSpec::GroupProjection {
                groups,
                size,
                live,
                gap,
                seed,
            } => vec![
                ("groups", Count(groups)),
                ("size", Count(size)),
                ("live", Count(live)),
                ("gap", Real(gap)),
                ("seed", Seed(seed)),
            ],
            BenchmarkSpec::SpectrahedronProjection { n, rank, gap, seed } => vec![
                ("n", Count(n)),
                ("rank", Count(rank)),
                ("gap", Real(gap)),
                ("seed", Seed(seed)),
            ],
            BenchmarkSpec::NuclearProjection {
                n1,
                n2,
                rank,
                gap,
                seed,
            } => vec![
                ("n1", Count(n1)),
                ("n2", Count(n2)),
                ("rank", Count(rank)),
                ("gap", Real(gap)),
                ("seed", Seed(seed)),
            ],
        }
    }

    /// `(name, value)` pairs with values in their shortest round-trip text form.
    pub fn params(&self) -> Vec<(&'static str, String)> {
        let mut copy = self.clone();
        copy.params_mut()
            .into_iter()
            .map(|(k, p)| {
                let text = match p {
                    ParamMut::Count(v) => v.to_string(),
                    ParamMut::Real(v) => v.to_string(),
                    ParamMut::Seed(v) => v.to_string(),
                };
                (k, text)
            })
            .collect()
    }

    /// Parses `text` into the parameter `key`.
    pub fn set_param(&mut self, key: &str, text: &str) -> Result<()> {
        let name = self.name();
        let Some((_, field)) = self.params_mut().into_iter().find(|(k, _)| *k == key) else {
            return Err(KfwError::Config(format!("{name} has no parameter '{key}'")));
        };
        let bad = |kind: &str| KfwError::Config(format!("'{key}' expects {kind}, got '{text}'"));
        match field {
            ParamMut::Count(v) => *v = text.parse().map_err(|_| bad("a nonnegative integer"))?,
            ParamMut::Seed(v) => *v = text.parse().map_err(|_| bad("an unsigned integer"))?,
            ParamMut::Real(v) => {
                let x: f64 = text.parse().map_err(|_| bad("a real number"))?;
                if !x.is_finite() {
                    return Err(bad("a finite real number"));
                }
                *v = x;
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Problem> {
        match *self {
            BenchmarkSpec::Lasso {
                m,
                n,
                sparsity,
                noise,
                seed,
            } => gen_lasso(m, n, sparsity, noise, seed),
            BenchmarkSpec::Svm {
                samples,
                features,
                c,
                seed,
            } => gen_svm(samples, features, seed, c).map(|s| s.problem),
            BenchmarkSpec::GroupLasso {
                rows,
                groups,
                samples,
                live,
                noise,
                seed,
            } => gen_group_lasso(rows, samples, groups, live, noise, seed),
            BenchmarkSpec::MatrixCompletion {
                n1,
                n2,
                rank,
                obs_frac,
                seed,
            } => gen_matrix_completion(n1, n2, rank, obs_frac, seed),
            BenchmarkSpec::ConePolygon { vertices } => gen_cone_polygon(vertices),
            BenchmarkSpec::HypercubeProjection { n, fractional, seed } => {
                gen_hypercube_projection(n, fractional, seed)
            }
            BenchmarkSpec::SimplexProjection {
                n,
                support,
                gap,
                seed,
            } => gen_simplex_projection(n, support, gap, seed),
            BenchmarkSpec::GroupProjection {
                groups,
                size,
                live,
                gap,
                seed,
            } => gen_group_projection(groups, size, live, gap, seed),
            BenchmarkSpec::SpectrahedronProjection { n, rank, gap, seed } => {
                gen_spectrahedron_projection(n, rank, gap, seed)
            }
            BenchmarkSpec::NuclearProjection {
                n1,
                n2,
                rank,
                gap,
                seed,
            } => gen_nuclear_projection(n1, n2, rank, gap, seed),
        }
    }
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(KfwError::Parameter(format!("{name} must be positive")))
    } else {
        Ok(())
    }
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// `min ‖Ax − b‖²` over the `ℓ1` ball of radius `‖x_true‖₁`, with Gaussian
/// `A`, an `s`-sparse Gaussian `x_true` and `b = A x_true + noise`, the noise
/// being `N(0, (noise·σ)²)` for the standard deviation `σ` of `A x_true`.
pub fn gen_lasso(m: usize, n: usize, s: usize, noise: f64, seed: u64) -> Result<Problem> {
    positive("m", m)?;
    positive("s", s)?;
    if s > n {
        return Err(KfwError::Parameter(format!("sparsity {s} exceeds dimension {n}")));
    }
    let mut rng = SeededRng::new(seed);
    let a = rng.normal_matrix(m, n);
    let mut x_true = DVector::zeros(n);
    for i in rng.sample_without_replacement(n, s) {
        x_true[i] = rng.normal();
    }
    let clean = &a * &x_true;
    let sigma = std_dev(clean.as_slice());
    let b = &clean + rng.normal_vector(m) * (noise * sigma);
    let radius = x_true.lp_norm(1);
    let obj = CompositeObjective::new(
        Outer::squared_residual(b),
        LinearMap::Dense(DenseOperator::new(a)),
        None,
    )?;
    let mut p = Problem::new("lasso", obj, FeasibleSet::l1_ball(n, radius)?)?;
    p.planted_sparsity = Some(s);
    if noise == 0.0 {
        p.f_star = Some(0.0);
    }
    p.solution = Some(x_true);
    Ok(p)
}

/// An SVM dual instance and the data it came from.
#[derive(Debug, Clone)]
pub struct SvmInstance {
    pub problem: Problem,
    /// Features as columns.
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SvmInstance {
    /// Decision value `Σ_j λ_j y_j k(x_j, x)` at sample `i`.
    pub fn decision(&self, lambda: &DVector<f64>, i: usize) -> f64 {
        let xi = self.features.column(i);
        self.train
            .iter()
            .zip(lambda.iter())
            .map(|(&j, &l)| l * self.labels[j] * poly_kernel(&self.features.column(j), &xi))
            .sum()
    }
}

fn poly_kernel<S1, S2>(
    x: &nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S1>,
    y: &nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S2>,
) -> f64
where
    S1: nalgebra::storage::Storage<f64, nalgebra::Dyn, nalgebra::U1>,
    S2: nalgebra::storage::Storage<f64, nalgebra::Dyn, nalgebra::U1>,
{
    (x.dot(y) + 1.0).powi(2)
}

/// `Q_ij = y_i y_j (x_iᵀx_j + 1)² + δ_ij / C` for feature columns `x`.
pub fn svm_dual_matrix(features: &DMatrix<f64>, labels: &[f64], c: f64) -> DMatrix<f64> {
    let n = labels.len();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = labels[i] * labels[j] * poly_kernel(&features.column(i), &features.column(j));
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
        q[(i, i)] += 1.0 / c;
    }
    q
}

/// Two low-rank clusters `U₁V₁ + 1` and `U₂V₂ − 1` (rank 5) plus noise at a
/// tenth of the entries' standard deviation; the dual `λᵀQλ` over the simplex
/// is built on a seeded 80% training split.
pub fn gen_svm(samples: usize, features: usize, seed: u64, c: f64) -> Result<SvmInstance> {
    if samples < 2 || !samples.is_multiple_of(2) {
        return Err(KfwError::Parameter("samples must be even and at least 2".into()));
    }
    positive("features", features)?;
    if !(c > 0.0) {
        return Err(KfwError::Parameter("C must be positive".into()));
    }
    let mut rng = SeededRng::new(seed);
    let half = samples / 2;
    let rank = 5.min(features);
    let mut x = DMatrix::zeros(features, samples);
    for (block, shift) in [(0, 1.0), (1, -1.0)] {
        let u = rng.normal_matrix(features, rank);
        let v = rng.normal_matrix(rank, half);
        let xb = (u * v).add_scalar(shift);
        x.columns_mut(block * half, half).copy_from(&xb);
    }
    let sigma = std_dev(x.as_slice());
    x += rng.normal_matrix(features, samples) * (0.1 * sigma);
    let labels: Vec<f64> = (0..samples).map(|i| if i < half { 1.0 } else { -1.0 }).collect();

    let order = rng.sample_without_replacement(samples, samples);
    let n_train = ((0.8 * samples as f64).round() as usize).max(2);
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();

    let xt = DMatrix::from_fn(features, train.len(), |r, c| x[(r, train[c])]);
    let yt: Vec<f64> = train.iter().map(|&i| labels[i]).collect();
    let q = svm_dual_matrix(&xt, &yt, c);
    let obj = CompositeObjective::new(
        Outer::QuadraticForm {
            q: DenseOperator::symmetric(q)?,
        },
        LinearMap::Identity(train.len()),
        None,
    )?;
    let problem = Problem::new("svm", obj, FeasibleSet::simplex(train.len())?)?;
    Ok(SvmInstance {
        problem,
        features: x,
        labels,
        train,
        test,
    })
}

/// `min ‖W X − Y‖_F²` over `vec W` (column-major `rows × groups`) in the
/// group ball whose groups are the columns of `W`, with radius `‖W_true‖_𝒢`.
pub fn gen_group_lasso(
    rows: usize,
    samples: usize,
    groups: usize,
    live: usize,
    noise: f64,
    seed: u64,
) -> Result<Problem> {
    positive("rows", rows)?;
    positive("samples", samples)?;
    positive("live", live)?;
    if live > groups {
        return Err(KfwError::Parameter(format!("{live} live groups exceed {groups}")));
    }
    let mut rng = SeededRng::new(seed);
    let x = rng.normal_matrix(groups, samples);
    let mut w = DMatrix::zeros(rows, groups);
    for j in rng.sample_without_replacement(groups, live) {
        w.set_column(j, &rng.normal_vector(rows));
    }
    let clean = &w * &x;
    let sigma = std_dev(clean.as_slice());
    let y = &clean + rng.normal_matrix(rows, samples) * (noise * sigma);
    let partition: Vec<Vec<usize>> = (0..groups).map(|j| (j * rows..(j + 1) * rows).collect()).collect();
    let radius: f64 = w.column_iter().map(|c| c.norm()).sum();
    let obj = CompositeObjective::new(
        Outer::squared_residual(flatten(&y)),
        LinearMap::RightMultiply { rows, right: x },
        None,
    )?;
    let mut p = Problem::new(
        "group_lasso",
        obj,
        FeasibleSet::group_ball(rows * groups, partition, radius)?,
    )?;
    p.planted_sparsity = Some(live);
    if noise == 0.0 {
        p.f_star = Some(0.0);
    }
    p.solution = Some(flatten(&w));
    Ok(p)
}

/// `min Σ_{(i,j) observed} (X_ij − M_ij)²` over the nuclear ball of radius
/// `‖M‖_nuc` for a Gaussian rank-`rank` `M = U Vᵀ`; the mask has
/// `round(obs_frac · n1 · n2)` entries drawn without replacement.
pub fn gen_matrix_completion(
    n1: usize,
    n2: usize,
    rank: usize,
    obs_frac: f64,
    seed: u64,
) -> Result<Problem> {
    positive("n1", n1)?;
    positive("n2", n2)?;
    positive("rank", rank)?;
    if !(obs_frac > 0.0 && obs_frac <= 1.0) {
        return Err(KfwError::Parameter("obs_frac must lie in (0, 1]".into()));
    }
    let mut rng = SeededRng::new(seed);
    let u = rng.normal_matrix(n1, rank);
    let v = rng.normal_matrix(n2, rank);
    let m = &u * v.transpose();
    let total = n1 * n2;
    let count = ((obs_frac * total as f64).round() as usize).clamp(1, total);
    let mut mask = rng.sample_without_replacement(total, count);
    mask.sort_unstable();
    let flat = flatten(&m);
    let target = DVector::from_iterator(count, mask.iter().map(|&i| flat[i]));
    let radius = crate::linalg::svd_descending(&m).1.sum();
    let obj = CompositeObjective::new(
        Outer::squared_residual(target),
        LinearMap::Sampling {
            input_dim: total,
            indices: mask,
        },
        None,
    )?;
    let mut p = Problem::new(
        "matrix_completion",
        obj,
        FeasibleSet::nuclear_ball(n1, n2, radius)?,
    )?;
    p.planted_sparsity = Some(rank);
    p.f_star = Some(0.0);
    p.solution = Some(flat);
    Ok(p)
}

/// `min x² + y² + z` over the cone with apex `(0,0,1)` on the regular
/// `n`-gon `(cos 2πi/n, sin 2πi/n, 0)`, started at `(0, 0, 0.1)`.
pub fn gen_cone_polygon(n: usize) -> Result<Problem> {
    if n < 3 {
        return Err(KfwError::Parameter("the polygon needs at least 3 vertices".into()));
    }
    let mut vertices: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            DVector::from_column_slice(&[a.cos(), a.sin(), 0.0])
        })
        .collect();
    vertices.push(DVector::from_column_slice(&[0.0, 0.0, 1.0]));
    let apothem = (PI / n as f64).cos();
    let mut facets: Vec<(DVector<f64>, f64)> = (0..n)
        .map(|i| {
            let phi = 2.0 * PI * (i as f64 + 0.5) / n as f64;
            (DVector::from_column_slice(&[phi.cos(), phi.sin(), apothem]), apothem)
        })
        .collect();
    facets.push((DVector::from_column_slice(&[0.0, 0.0, -1.0]), 0.0));
    let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let obj = CompositeObjective::new(
        Outer::squared_residual(DVector::zeros(2)),
        LinearMap::Dense(DenseOperator::new(a)),
        Some(DVector::from_column_slice(&[0.0, 0.0, 1.0])),
    )?;
    let set = FeasibleSet::vertex_polytope(vertices, Some(facets))?;
    let mut p = Problem::new("cone_polygon", obj, set)?
        .with_start(DVector::from_column_slice(&[0.0, 0.0, 0.1]))?;
    p.f_star = Some(0.0);
    p.solution = Some(DVector::zeros(3));
    Ok(p)
}

/// `min ‖x − x₀‖²` over `[0, 1]ⁿ` with the first `fractional` entries of `x₀`
/// uniform on `(0, 1)` and the rest equal to 2.
pub fn gen_hypercube_projection(n: usize, fractional: usize, seed: u64) -> Result<Problem> {
    positive("n", n)?;
    if fractional > n {
        return Err(KfwError::Parameter(format!("{fractional} fractional > n = {n}")));
    }
    let mut rng = SeededRng::new(seed);
    let x0 = DVector::from_fn(n, |i, _| if i < fractional { rng.uniform() } else { 2.0 });
    let solution = x0.map(|v| v.clamp(0.0, 1.0));
    let f_star = (&x0 - &solution).norm_squared();
    let obj = CompositeObjective::new(Outer::squared_residual(x0), LinearMap::Identity(n), None)?;
    let mut p = Problem::new("hypercube_projection", obj, FeasibleSet::hypercube(n)?)?;
    p.f_star = Some(f_star);
    p.solution = Some(solution);
    p.planted_sparsity = Some(fractional);
    Ok(p)
}

/// `min ½‖x − p‖²` over the simplex.
pub fn simplex_projection_problem(p: DVector<f64>) -> Result<Problem> {
    let n = p.len();
    let solution = project_simplex(&p)?;
    let obj = CompositeObjective::new(
        Outer::SquaredResidual {
            target: p.clone(),
            weight: 0.5,
        },
        LinearMap::Identity(n),
        None,
    )?;
    let mut prob = Problem::new("simplex_projection", obj, FeasibleSet::simplex(n)?)?;
    prob.f_star = Some(0.5 * (&solution - &p).norm_squared());
    prob.planted_sparsity = Some(solution.iter().filter(|&&v| v > 0.0).count());
    prob.solution = Some(solution);
    Ok(prob)
}

/// `min ½‖x − p‖²` over the simplex with a planted `support`-sparse
/// projection: `p = x⋆ + τ` on the support (`τ = 0.1`) and `p = τ − δ_i` off
/// it with `δ_i ∈ [gap, gap + 0.7]` and the minimum attained, so the
/// complementarity gap is exactly `gap`.
pub fn gen_simplex_projection(n: usize, support: usize, gap: f64, seed: u64) -> Result<Problem> {
    positive("support", support)?;
    if support >= n {
        return Err(KfwError::Parameter(format!("support {support} must be below n = {n}")));
    }
    if !(gap > 0.0) {
        return Err(KfwError::Parameter("gap must be positive".into()));
    }
    let tau = 0.1;
    let mut rng = SeededRng::new(seed);
    let idx = rng.sample_without_replacement(n, n);
    let weights: Vec<f64> = (0..support).map(|_| rng.uniform_in(0.5, 1.5)).collect();
    let total: f64 = weights.iter().sum();
    let mut p = DVector::zeros(n);
    for (j, &i) in idx.iter().enumerate() {
        p[i] = if j < support {
            weights[j] / total + tau
        } else if j == support {
            tau - gap
        } else {
            tau - gap - rng.uniform_in(0.0, 0.7)
        };
    }
    simplex_projection_problem(p)
}

/// `min ½‖x − p‖²` over the unit group ball (`groups` groups of `size`
/// coordinates) with `live` groups in the projection: live blocks of `p` have
/// norm `‖x⋆_g‖ + τ` (`τ = gap + 0.2`), dead blocks norms in
/// `[0, τ − gap]` with the maximum attained, so the dual-norm gap is exactly `gap`.
pub fn gen_group_projection(
    groups: usize,
    size: usize,
    live: usize,
    gap: f64,
    seed: u64,
) -> Result<Problem> {
    positive("size", size)?;
    positive("live", live)?;
    if live >= groups {
        return Err(KfwError::Parameter("live groups must be fewer than groups".into()));
    }
    let tau = gap + 0.2;
    let n = groups * size;
    let mut rng = SeededRng::new(seed);
    let order = rng.sample_without_replacement(groups, groups);
    let weights: Vec<f64> = (0..live).map(|_| rng.uniform_in(0.5, 1.5)).collect();
    let total: f64 = weights.iter().sum();
    let mut p = DVector::zeros(n);
    let mut star = DVector::zeros(n);
    for (j, &g) in order.iter().enumerate() {
        let mut dir = rng.normal_vector(size);
        dir /= dir.norm();
        let norm = if j < live {
            let s = weights[j] / total;
            star.rows_mut(g * size, size).copy_from(&(&dir * s));
            s + tau
        } else if j == live {
            tau - gap
        } else {
            rng.uniform_in(0.0, tau - gap)
        };
        p.rows_mut(g * size, size).copy_from(&(dir * norm));
    }
    let partition: Vec<Vec<usize>> = (0..groups).map(|g| (g * size..(g + 1) * size).collect()).collect();
    let obj = CompositeObjective::new(
        Outer::SquaredResidual {
            target: p.clone(),
            weight: 0.5,
        },
        LinearMap::Identity(n),
        None,
    )?;
    let mut prob = Problem::new("group_projection", obj, FeasibleSet::group_ball(n, partition, 1.0)?)?;
    prob.f_star = Some(0.5 * (&star - &p).norm_squared());
    prob.planted_sparsity = Some(live);
    prob.solution = Some(star);
    Ok(prob)
}

/// `min ½‖X − P‖_F²` over the `n × n` spectrahedron with
/// `P = Q diag(μ) Qᵀ`: the top `rank` values are `x⋆_i + τ` (`τ = 0.2`) and
/// the rest lie in `[τ − gap − 0.4, τ − gap]` with the maximum attained, so the
/// eigengap of `∇f(X⋆)` at the rank is exactly `gap`.
pub fn gen_spectrahedron_projection(n: usize, rank: usize, gap: f64, seed: u64) -> Result<Problem> {
    positive("rank", rank)?;
    if rank >= n {
        return Err(KfwError::Parameter("rank must be below n".into()));
    }
    let tau = 0.2;
    let mut rng = SeededRng::new(seed);
    let q = rng.orthonormal(n, n);
    let weights: Vec<f64> = (0..rank).map(|_| rng.uniform_in(0.5, 1.5)).collect();
    let total: f64 = weights.iter().sum();
    let mut mu = DVector::zeros(n);
    let mut star = DVector::zeros(n);
    for i in 0..rank {
        star[i] = weights[i] / total;
        mu[i] = star[i] + tau;
    }
    mu[rank] = tau - gap;
    for i in rank + 1..n {
        mu[i] = tau - gap - rng.uniform_in(0.0, 0.4);
    }
    let target = &q * DMatrix::from_diagonal(&mu) * q.transpose();
    let x_star = &q * DMatrix::from_diagonal(&star) * q.transpose();
    let obj = CompositeObjective::new(
        Outer::SquaredResidual {
            target: flatten(&crate::linalg::symmetrize(&target)),
            weight: 0.5,
        },
        LinearMap::Identity(n * n),
        None,
    )?;
    let mut p = Problem::new("spectrahedron_projection", obj, FeasibleSet::spectrahedron(n)?)?;
    p.f_star = Some(0.5 * (&x_star - &target).norm_squared());
    p.planted_sparsity = Some(rank);
    p.solution = Some(flatten(&crate::linalg::symmetrize(&x_star)));
    Ok(p)
}

/// `min ½‖X − P‖_F²` over the unit nuclear ball with `P = U diag(σ) Vᵀ`:
/// the top `rank` singular values are `σ⋆_i + τ` (`τ = gap + 0.2`) with
/// `Σσ⋆ = 1`, the rest lie in `[0, τ − gap]` with the maximum attained, so
/// the singular gap of `∇f(X⋆)` at the rank is exactly `gap`.
pub fn gen_nuclear_projection(
    n1: usize,
    n2: usize,
    rank: usize,
    gap: f64,
    seed: u64,
) -> Result<Problem> {
    positive("rank", rank)?;
    let p_min = n1.min(n2);
    if rank >= p_min {
        return Err(KfwError::Parameter("rank must be below min(n1, n2)".into()));
    }
    let tau = gap + 0.2;
    let mut rng = SeededRng::new(seed);
    let u = rng.orthonormal(n1, p_min);
    let v = rng.orthonormal(n2, p_min);
    let weights: Vec<f64> = (0..rank).map(|_| rng.uniform_in(0.5, 1.5)).collect();
    let total: f64 = weights.iter().sum();
    let mut sigma = DVector::zeros(p_min);
    let mut star = DVector::zeros(p_min);
    for i in 0..rank {
        star[i] = weights[i] / total;
        sigma[i] = star[i] + tau;
    }
    sigma[rank] = tau - gap;
    for i in rank + 1..p_min {
        sigma[i] = rng.uniform_in(0.0, tau - gap);
    }
    let target = &u * DMatrix::from_diagonal(&sigma) * v.transpose();
    let x_star = &u * DMatrix::from_diagonal(&star) * v.transpose();
    let obj = CompositeObjective::new(
        Outer::SquaredResidual {
            target: flatten(&target),
            weight: 0.5,
        },
        LinearMap::Identity(n1 * n2),
        None,
    )?;
    let mut p = Problem::new(
        "nuclear_projection",
        obj,
        FeasibleSet::nuclear_ball(n1, n2, 1.0)?,
    )?;
    p.f_star = Some(0.5 * (&x_star - &target).norm_squared());
    p.planted_sparsity = Some(rank);
    p.solution = Some(flatten(&x_star));
    Ok(p)
}

/// SHA-256 over the problem data (objective, map, linear term, set and start),
/// as lowercase hex.
pub fn problem_hash(problem: &Problem) -> String {
    let mut h = Sha256::new();
    let mut put = |tag: &str, vals: &[f64]| {
        h.update(tag.as_bytes());
        h.update((vals.len() as u64).to_le_bytes());
        for v in vals {
            h.update(v.to_le_bytes());
        }
    };
    let obj = &problem.objective;
    match obj.outer() {
        Outer::SquaredResidual { target, weight } => {
            put("residual", target.as_slice());
            put("weight", &[*weight]);
        }
        Outer::QuadraticForm { q } => put("form", q.values().as_slice()),
        Outer::Custom(g) => put("custom", &[g.dim() as f64]),
    }
    match obj.map() {
        LinearMap::Identity(n) => put("identity", &[*n as f64]),
        LinearMap::Dense(a) => {
            put("dense", &[a.nrows() as f64, a.ncols() as f64]);
            put("values", a.values().as_slice());
        }
        LinearMap::Sampling { input_dim, indices } => {
            put("sampling", &[*input_dim as f64]);
            put("indices", &indices.iter().map(|&i| i as f64).collect::<Vec<_>>());
        }
        LinearMap::RightMultiply { rows, right } => {
            put("right", &[*rows as f64, right.nrows() as f64, right.ncols() as f64]);
            put("values", right.as_slice());
        }
    }
    put("linear", obj.linear().as_slice());
    put(&format!("{:?}", problem.set), &[]);
    if let Some(x0) = &problem.x0 {
        put("start", x0.as_slice());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
