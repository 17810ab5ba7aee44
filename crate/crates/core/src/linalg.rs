//! Dense linear algebra primitives shared by every oracle and solver.
//!
//! Factorizations are computed with a full dense decomposition and then
//! truncated; at desk scale (n of a few hundred) this is cheaper than an
//! iterative eigensolver and gives exact subspaces for the tests.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{KfwError, Result};

/// A point of the ambient space. Matrix variables are stored column-major.
pub type DensePoint = DVector<f64>;

/// Returns an error if any entry of `x` is NaN or infinite.
pub fn ensure_finite(x: &DVector<f64>) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(KfwError::Numerical(format!(
            "non-finite entry {} at index {i}",
            x[i]
        ))),
    }
}

/// Dense real matrix, optionally tagged as symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    values: DMatrix<f64>,
    symmetric: bool,
}

impl DenseOperator {
    pub fn new(values: DMatrix<f64>) -> Self {
        Self {
            values,
            symmetric: false,
        }
    }

    /// Wraps a matrix that must equal its transpose to 1e-12 relative.
    pub fn symmetric(values: DMatrix<f64>) -> Result<Self> {
        if !is_symmetric(&values, 1e-12) {
            return Err(KfwError::Parameter(
                "matrix is not symmetric within 1e-12 relative".into(),
            ));
        }
        Ok(Self {
            values,
            symmetric: true,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// The k selected entries, ordered by value then index.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Ranked {
    value: f64,
    index: usize,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.index.cmp(&other.index))
    }
}

/// Selects the `k` smallest entries of `y` with a bounded max-heap, O(n log k).
/// Ties go to the smaller index.
pub fn select_k_smallest(y: &[f64], k: usize) -> Result<SelectionResult> {
    if k == 0 || k > y.len() {
        return Err(KfwError::Parameter(format!(
            "k = {k} must lie in 1..={}",
            y.len()
        )));
    }
    let mut heap: BinaryHeap<Ranked> = BinaryHeap::with_capacity(k + 1);
    for (index, &value) in y.iter().enumerate() {
        let item = Ranked { value, index };
        if heap.len() < k {
            heap.push(item);
        } else if let Some(top) = heap.peek() {
            if item < *top {
                heap.pop();
                heap.push(item);
            }
        }
    }
    let sorted = heap.into_sorted_vec();
    Ok(SelectionResult {
        indices: sorted.iter().map(|r| r.index).collect(),
        values: sorted.iter().map(|r| r.value).collect(),
    })
}

/// Selects the `k` largest entries of `y` (ties to the smaller index).
pub fn select_k_largest(y: &[f64], k: usize) -> Result<SelectionResult> {
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    let mut sel = select_k_smallest(&neg, k)?;
    sel.values.iter_mut().for_each(|v| *v = -*v);
    Ok(sel)
}

/// Orthonormal columns with their eigen- or singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub basis: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl SpectralBasis {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

/// Flips the column so its first entry above the noise floor is nonnegative.
/// Returns the applied sign.
fn fix_sign(col: &mut DMatrix<f64>, j: usize) -> f64 {
    let floor = 1e-12 * col.column(j).amax().max(f64::MIN_POSITIVE);
    let first = col.column(j).iter().copied().find(|v| v.abs() > floor);
    match first {
        Some(v) if v < 0.0 => {
            col.column_mut(j).neg_mut();
            -1.0
        }
        _ => 1.0,
    }
}

/// Full symmetric eigendecomposition with eigenvalues ascending.
pub fn eig_sym_ascending(y: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = y.clone().symmetric_eigen();
    let n = y.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
        fix_sign(&mut vectors, j);
    }
    (values, vectors)
}

/// Eigenvectors of the `k` algebraically smallest eigenvalues of a symmetric matrix.
pub fn eig_bottom_k(y: &DenseOperator, k: usize) -> Result<SpectralBasis> {
    let n = y.nrows();
    if !y.is_symmetric() && !is_symmetric(y.values(), 1e-12) {
        return Err(KfwError::Parameter("eig_bottom_k needs a symmetric matrix".into()));
    }
    if k == 0 || k > n {
        return Err(KfwError::Parameter(format!("k = {k} must lie in 1..={n}")));
    }
    let (values, vectors) = eig_sym_ascending(y.values());
    Ok(SpectralBasis {
        basis: vectors.columns(0, k).into_owned(),
        values: values.rows(0, k).into_owned(),
    })
}

/// Full thin SVD with singular values descending and the left-vector sign
/// convention applied. Returns `(U, σ, V)`.
pub fn svd_descending(y: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let svd = y.clone().svd(true, true);
    let u = svd.u.expect("svd computed with u");
    let v = svd.v_t.expect("svd computed with v_t").transpose();
    let p = svd.singular_values.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let mut left = DMatrix::zeros(y.nrows(), p);
    let mut right = DMatrix::zeros(y.ncols(), p);
    for (j, &i) in order.iter().enumerate() {
        left.set_column(j, &u.column(i));
        right.set_column(j, &v.column(i));
        if fix_sign(&mut left, j) < 0.0 {
            right.column_mut(j).neg_mut();
        }
    }
    let sigma = DVector::from_iterator(p, order.iter().map(|&i| svd.singular_values[i]));
    (left, sigma, right)
}

/// Top-`k` singular triplets as `(left, right)` bases sharing the singular values.
pub fn svd_top_k(y: &DenseOperator, k: usize) -> Result<(SpectralBasis, SpectralBasis)> {
    let p = y.nrows().min(y.ncols());
    if k == 0 || k > p {
        return Err(KfwError::Parameter(format!("k = {k} must lie in 1..={p}")));
    }
    let (u, s, v) = svd_descending(y.values());
    let values = s.rows(0, k).into_owned();
    Ok((
        SpectralBasis {
            basis: u.columns(0, k).into_owned(),
            values: values.clone(),
        },
        SpectralBasis {
            basis: v.columns(0, k).into_owned(),
            values,
        },
    ))
}

/// Largest singular value of a linear map given only its action and adjoint,
/// by power iteration on `AᵀA` to the requested relative tolerance.
pub fn power_op_norm(
    dim: usize,
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    apply_t: impl Fn(&DVector<f64>) -> DVector<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    // deterministic, non-degenerate start vector
    let mut x = DVector::from_fn(dim, |i, _| 1.0 + ((i * 7919) % 97) as f64 / 97.0);
    x /= x.norm();
    let mut est = 0.0;
    for _ in 0..max_iter {
        let y = apply_t(&apply(&x));
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        x = y / norm;
        if (next - est).abs() <= rel_tol * next {
            return next;
        }
        est = next;
    }
    est
}

/// Deterministic random stream backed by ChaCha8 (`rand_chacha`), seeded via
/// `seed_from_u64`. Normal draws use the ziggurat sampler of `rand_distr`.
/// Both are platform independent, so a seed fixes the stream everywhere.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn normal_vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.normal())
    }

    /// Filled column by column.
    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        let data: Vec<f64> = (0..rows * cols).map(|_| self.normal()).collect();
        DMatrix::from_vec(rows, cols, data)
    }

    /// `n × k` matrix with orthonormal columns (QR of a Gaussian matrix).
    pub fn orthonormal(&mut self, n: usize, k: usize) -> DMatrix<f64> {
        let g = self.normal_matrix(n, k);
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..k {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        q
    }

    /// `m` distinct indices from `0..n`, in draw order (partial Fisher-Yates).
    pub fn sample_without_replacement(&mut self, n: usize, m: usize) -> Vec<usize> {
        let m = m.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(m);
        pool
    }
}
