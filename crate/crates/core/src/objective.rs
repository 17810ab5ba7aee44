//! Composite objectives `f(x) = g(A x) + <c, x>` and their restrictions to a
//! direction-search parametrization.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, KfwError, Result};
use crate::linalg::{power_op_norm, DenseOperator};
use crate::sets::DsParametrization;

/// A user supplied smooth convex outer function.
pub trait SmoothOuter: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, z: &DVector<f64>) -> f64;
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64>;
    /// A bound on the Lipschitz constant of the gradient, if known.
    fn lipschitz(&self) -> Option<f64>;
}

/// The smooth convex outer function `g`.
#[derive(Clone)]
pub enum Outer {
    /// `g(z) = weight · ‖z − target‖²`.
    SquaredResidual { target: DVector<f64>, weight: f64 },
    /// `g(z) = zᵀ Q z` with `Q` symmetric positive semidefinite.
    QuadraticForm { q: DenseOperator },
    Custom(Arc<dyn SmoothOuter>),
}

impl fmt::Debug for Outer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outer::SquaredResidual { target, weight } => f
                .debug_struct("SquaredResidual")
                .field("dim", &target.len())
                .field("weight", weight)
                .finish(),
            Outer::QuadraticForm { q } => f
                .debug_struct("QuadraticForm")
                .field("dim", &q.nrows())
                .finish(),
            Outer::Custom(g) => f.debug_struct("Custom").field("dim", &g.dim()).finish(),
        }
    }
}

impl Outer {
    pub fn squared_residual(target: DVector<f64>) -> Self {
        Outer::SquaredResidual {
            target,
            weight: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Outer::SquaredResidual { target, .. } => target.len(),
            Outer::QuadraticForm { q } => q.nrows(),
            Outer::Custom(g) => g.dim(),
        }
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        match self {
            Outer::SquaredResidual { target, weight } => weight * (z - target).norm_squared(),
            Outer::QuadraticForm { q } => z.dot(&(q.values() * z)),
            Outer::Custom(g) => g.value(z),
        }
    }

    pub fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        match self {
            Outer::SquaredResidual { target, weight } => (z - target) * (2.0 * weight),
            Outer::QuadraticForm { q } => q.values() * z * 2.0,
            Outer::Custom(g) => g.gradient(z),
        }
    }

    fn lipschitz(&self) -> Option<f64> {
        match self {
            Outer::SquaredResidual { weight, .. } => Some(2.0 * weight),
            Outer::QuadraticForm { q } => {
                let m = q.values();
                Some(2.0 * power_op_norm(m.ncols(), |x| m * x, |y| m * y, 1e-12, 20_000))
            }
            Outer::Custom(g) => g.lipschitz(),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        !matches!(self, Outer::Custom(_))
    }
}

/// The linear map `A`. Structured variants avoid materializing large operators.
#[derive(Debug, Clone)]
pub enum LinearMap {
    Identity(usize),
    Dense(DenseOperator),
    /// Picks the listed coordinates: `(A x)_j = x[indices[j]]`.
    Sampling { input_dim: usize, indices: Vec<usize> },
    /// `vec(W) ↦ vec(W · right)` for a column-major `rows × right.nrows()` matrix `W`.
    RightMultiply { rows: usize, right: DMatrix<f64> },
}

impl LinearMap {
    pub fn input_dim(&self) -> usize {
        match self {
            LinearMap::Identity(n) => *n,
            LinearMap::Dense(a) => a.ncols(),
            LinearMap::Sampling { input_dim, .. } => *input_dim,
            LinearMap::RightMultiply { rows, right } => rows * right.nrows(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            LinearMap::Identity(n) => *n,
            LinearMap::Dense(a) => a.nrows(),
            LinearMap::Sampling { indices, .. } => indices.len(),
            LinearMap::RightMultiply { rows, right } => rows * right.ncols(),
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            LinearMap::Identity(_) => x.clone(),
            LinearMap::Dense(a) => a.values() * x,
            LinearMap::Sampling { indices, .. } => {
                DVector::from_iterator(indices.len(), indices.iter().map(|&i| x[i]))
            }
            LinearMap::RightMultiply { rows, right } => {
                let w = DMatrix::from_column_slice(*rows, right.nrows(), x.as_slice());
                let out = w * right;
                DVector::from_column_slice(out.as_slice())
            }
        }
    }

    pub fn apply_t(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            LinearMap::Identity(_) => y.clone(),
            LinearMap::Dense(a) => a.values().tr_mul(y),
            LinearMap::Sampling { input_dim, indices } => {
                let mut out = DVector::zeros(*input_dim);
                for (j, &i) in indices.iter().enumerate() {
                    out[i] += y[j];
                }
                out
            }
            LinearMap::RightMultiply { rows, right } => {
                let r = DMatrix::from_column_slice(*rows, right.ncols(), y.as_slice());
                let out = r * right.transpose();
                DVector::from_column_slice(out.as_slice())
            }
        }
    }

    /// Applies the map to every column of `m`.
    pub fn apply_columns(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            LinearMap::Identity(_) => m.clone(),
            LinearMap::Dense(a) => a.values() * m,
            LinearMap::Sampling { indices, .. } => {
                DMatrix::from_fn(indices.len(), m.ncols(), |r, c| m[(indices[r], c)])
            }
            LinearMap::RightMultiply { .. } => {
                let mut out = DMatrix::zeros(self.output_dim(), m.ncols());
                for j in 0..m.ncols() {
                    out.set_column(j, &self.apply(&m.column(j).into_owned()));
                }
                out
            }
        }
    }

    /// `‖A‖_op`; exact for the structured variants, power iteration otherwise.
    pub fn op_norm(&self) -> f64 {
        match self {
            LinearMap::Identity(n) => {
                if *n > 0 {
                    1.0
                } else {
                    0.0
                }
            }
            LinearMap::Sampling { input_dim, indices } => {
                let mut counts = vec![0usize; *input_dim];
                indices.iter().for_each(|&i| counts[i] += 1);
                (counts.into_iter().max().unwrap_or(0) as f64).sqrt()
            }
            _ => power_op_norm(
                self.input_dim(),
                |x| self.apply(x),
                |y| self.apply_t(y),
                1e-12,
                20_000,
            ),
        }
    }
}

/// `f(x) = g(A x) + <c, x>`.
#[derive(Debug, Clone)]
pub struct CompositeObjective {
    outer: Outer,
    map: LinearMap,
    linear: DVector<f64>,
    lipschitz: Arc<OnceLock<f64>>,
}

impl CompositeObjective {
    pub fn new(outer: Outer, map: LinearMap, linear: Option<DVector<f64>>) -> Result<Self> {
        check_dim(map.output_dim(), outer.dim())?;
        let n = map.input_dim();
        let linear = linear.unwrap_or_else(|| DVector::zeros(n));
        check_dim(n, linear.len())?;
        Ok(Self {
            outer,
            map,
            linear,
            lipschitz: Arc::new(OnceLock::new()),
        })
    }

    /// Overrides the estimated smoothness constant.
    pub fn with_lipschitz(self, l: f64) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(l);
        Self {
            lipschitz: Arc::new(cell),
            ..self
        }
    }

    pub fn dim(&self) -> usize {
        self.map.input_dim()
    }

    pub fn outer(&self) -> &Outer {
        &self.outer
    }

    pub fn map(&self) -> &LinearMap {
        &self.map
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.value_unchecked(x))
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self.value_grad_unchecked(x).1)
    }

    pub fn value_grad(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        check_dim(self.dim(), x.len())?;
        Ok(self.value_grad_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &DVector<f64>) -> f64 {
        self.outer.value(&self.map.apply(x)) + self.linear.dot(x)
    }

    pub(crate) fn value_grad_unchecked(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let z = self.map.apply(x);
        let v = self.outer.value(&z) + self.linear.dot(x);
        let g = self.map.apply_t(&self.outer.gradient(&z)) + &self.linear;
        (v, g)
    }

    /// `q` such that `f(x + t d) = f(x) + t <∇f(x), d> + t² q` for quadratic `g`.
    pub fn curvature_along(&self, d: &DVector<f64>) -> Option<f64> {
        match &self.outer {
            Outer::SquaredResidual { weight, .. } => Some(weight * self.map.apply(d).norm_squared()),
            Outer::QuadraticForm { q } => {
                let ad = self.map.apply(d);
                Some(ad.dot(&(q.values() * &ad)))
            }
            Outer::Custom(_) => None,
        }
    }

    /// `L_f = L_g · ‖A‖²`, computed once and cached.
    pub fn estimate_lipschitz(&self) -> Result<f64> {
        if let Some(l) = self.lipschitz.get() {
            return Ok(*l);
        }
        let lg = self.outer.lipschitz().ok_or_else(|| {
            KfwError::Unsupported("outer function has no curvature bound".into())
        })?;
        let a = self.map.op_norm();
        let l = lg * a * a;
        Ok(*self.lipschitz.get_or_init(|| l))
    }
}

/// A smooth function of the direction-search parameters.
pub trait ParamObjective {
    fn dim(&self) -> usize;
    fn value(&self, theta: &DVector<f64>) -> f64;
    fn value_grad(&self, theta: &DVector<f64>) -> (f64, DVector<f64>);
    /// Absolute error of `value` beyond the usual relative rounding.
    fn rounding(&self) -> f64 {
        0.0
    }
}

/// `θ ↦ f(map(θ))` with the chain-rule gradient `mapᵀ ∇f(map(θ))`.
pub struct RestrictedObjective<'a> {
    pub base: &'a CompositeObjective,
    pub param: &'a DsParametrization,
}

impl<'a> RestrictedObjective<'a> {
    pub fn new(base: &'a CompositeObjective, param: &'a DsParametrization) -> Result<Self> {
        check_dim(base.dim(), param.ambient_dim())?;
        Ok(Self { base, param })
    }

    pub fn value_grad_checked(&self, theta: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        check_dim(self.param.param_dim(), theta.len())?;
        Ok(self.value_grad(theta))
    }

    /// Precomputes the restricted quadratic when `g` is quadratic.
    pub fn reduce(&self) -> Option<ReducedQuadratic> {
        ReducedQuadratic::build(self.base, self.param)
    }
}

impl ParamObjective for RestrictedObjective<'_> {
    fn dim(&self) -> usize {
        self.param.param_dim()
    }

    fn value(&self, theta: &DVector<f64>) -> f64 {
        self.base.value_unchecked(&self.param.map_point(theta))
    }

    fn value_grad(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let x = self.param.map_point(theta);
        let (v, g) = self.base.value_grad_unchecked(&x);
        (v, self.param.adjoint(&g))
    }
}

/// The restricted objective of a quadratic `g` with the restricted operator
/// `B = A·M` formed once, where `M` is the (linear) parametrization matrix.
pub struct ReducedQuadratic {
    kind: ReducedKind,
    linear: DVector<f64>,
}

enum ReducedKind {
    /// `weight · ‖Bθ − b‖²` through `G = BᵀB`, `Bᵀb` and `‖b‖²`.
    Residual {
        gram: DMatrix<f64>,
        cross: DVector<f64>,
        target_sq: f64,
        weight: f64,
    },
    /// `θᵀ H θ`
    Form { hessian: DMatrix<f64> },
}

impl ReducedQuadratic {
    fn build(base: &CompositeObjective, param: &DsParametrization) -> Option<Self> {
        if !base.outer.is_quadratic() {
            return None;
        }
        let m = param.matrix();
        let b_op = base.map.apply_columns(&m);
        let linear = m.tr_mul(&base.linear);
        let kind = match &base.outer {
            Outer::SquaredResidual { target, weight } => ReducedKind::Residual {
                gram: crate::linalg::symmetrize(&b_op.tr_mul(&b_op)),
                cross: b_op.tr_mul(target),
                target_sq: target.norm_squared(),
                weight: *weight,
            },
            Outer::QuadraticForm { q } => {
                let hessian = b_op.tr_mul(&(q.values() * &b_op));
                ReducedKind::Form {
                    hessian: crate::linalg::symmetrize(&hessian),
                }
            }
            Outer::Custom(_) => unreachable!(),
        };
        Some(Self { kind, linear })
    }

    /// Largest curvature of the reduced quadratic (twice the top Hessian eigenvalue).
    pub fn lipschitz(&self) -> f64 {
        match &self.kind {
            ReducedKind::Residual { gram, weight, .. } => 2.0 * weight * top_eigenvalue(gram),
            ReducedKind::Form { hessian } => 2.0 * top_eigenvalue(hessian),
        }
    }
}

fn top_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

impl ParamObjective for ReducedQuadratic {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, theta: &DVector<f64>) -> f64 {
        let lin = self.linear.dot(theta);
        match &self.kind {
            ReducedKind::Residual {
                gram,
                cross,
                target_sq,
                weight,
            } => weight * (theta.dot(&(gram * theta)) - 2.0 * cross.dot(theta) + target_sq) + lin,
            ReducedKind::Form { hessian } => theta.dot(&(hessian * theta)) + lin,
        }
    }

    fn value_grad(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let lin = self.linear.dot(theta);
        match &self.kind {
            ReducedKind::Residual {
                gram,
                cross,
                target_sq,
                weight,
            } => {
                let gt = gram * theta;
                let v = weight * (theta.dot(&gt) - 2.0 * cross.dot(theta) + target_sq) + lin;
                (v, (gt - cross) * (2.0 * weight) + &self.linear)
            }
            ReducedKind::Form { hessian } => {
                let ht = hessian * theta;
                (theta.dot(&ht) + lin, ht * 2.0 + &self.linear)
            }
        }
    }

    fn rounding(&self) -> f64 {
        match &self.kind {
            ReducedKind::Residual {
                target_sq, weight, ..
            } => 1e-14 * weight * target_sq,
            ReducedKind::Form { .. } => 0.0,
        }
    }
}
