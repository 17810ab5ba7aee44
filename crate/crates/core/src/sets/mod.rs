//! Constraint sets: membership, diameter, linear minimization (LOO), the
//! k-best oracle (kLOO) and the direction-search parametrizations.
//!
//! Matrix-valued sets store points as column-major flattened vectors and use
//! the trace inner product.

mod cube;
mod memory;
mod param;

use nalgebra::{DMatrix, DVector};

pub use cube::hypercube_k_best;
pub use memory::AtomMemory;
pub use param::DsParametrization;

use crate::error::{check_dim, KfwError, Result};
use crate::linalg::{
    eig_bottom_k, eig_sym_ascending, select_k_largest, select_k_smallest, svd_descending,
    svd_top_k, symmetrize, DenseOperator, SpectralBasis,
};
use crate::projections::project_simplex;

/// Default additive tolerance for [`FeasibleSet::contains`].
pub const CONTAINS_TOL: f64 = 1e-9;

/// Supported constraint sets.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Simplex { n: usize },
    L1Ball { n: usize, radius: f64 },
    /// `[0, 1]ⁿ`
    Hypercube { n: usize },
    ProductSimplices { blocks: Vec<usize> },
    /// `{x : Σ_g ‖x_g‖₂ ≤ radius}` for a partition of the coordinates.
    GroupNormBall {
        n: usize,
        groups: Vec<Vec<usize>>,
        radius: f64,
    },
    /// `{X ⪰ 0, tr X = 1}` in `n × n` symmetric matrices.
    Spectrahedron { n: usize },
    NuclearBall {
        rows: usize,
        cols: usize,
        radius: f64,
    },
    /// Convex hull of an explicit vertex list, optionally with facets `aᵀx ≤ b`
    /// for exact membership tests.
    VertexPolytope {
        vertices: Vec<DVector<f64>>,
        facets: Option<Vec<(DVector<f64>, f64)>>,
    },
}

/// Identity of a vertex, used to deduplicate atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AtomId {
    Coord(usize),
    Signed { index: usize, negative: bool },
    Cube(Vec<bool>),
    Blocks(Vec<usize>),
    Vertex(usize),
}

/// A feasible point returned by an oracle. Non-polytope atoms carry no id.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub id: Option<AtomId>,
    pub point: DVector<f64>,
}

/// The k best directions of a set.
#[derive(Debug, Clone, PartialEq)]
pub enum KlooOutput {
    Vertices(Vec<Atom>),
    /// `(index, sign)` pairs of `ℓ1` atoms `sign · radius · e_index`.
    SignedCoords(Vec<(usize, f64)>),
    Groups(Vec<usize>),
    /// Per-block selected coordinates for a product of simplices.
    BlockCoords(Vec<Vec<usize>>),
    EigBasis(SpectralBasis),
    SingularBases {
        left: SpectralBasis,
        right: SpectralBasis,
    },
}

impl KlooOutput {
    pub fn count(&self) -> usize {
        match self {
            KlooOutput::Vertices(v) => v.len(),
            KlooOutput::SignedCoords(v) => v.len(),
            KlooOutput::Groups(g) => g.len(),
            KlooOutput::BlockCoords(b) => b.iter().map(Vec::len).max().unwrap_or(0),
            KlooOutput::EigBasis(b) => b.rank(),
            KlooOutput::SingularBases { left, .. } => left.rank(),
        }
    }

    /// Materializes vertex atoms where the output is vertex based.
    pub fn atoms(&self, set: &FeasibleSet) -> Option<Vec<Atom>> {
        match self {
            KlooOutput::Vertices(v) => Some(v.clone()),
            KlooOutput::SignedCoords(v) => {
                let (n, radius) = match set {
                    FeasibleSet::L1Ball { n, radius } => (*n, *radius),
                    _ => return None,
                };
                Some(v.iter().map(|&(i, s)| signed_atom(n, radius, i, s)).collect())
            }
            _ => None,
        }
    }
}

fn coord_atom(n: usize, i: usize) -> Atom {
    let mut p = DVector::zeros(n);
    p[i] = 1.0;
    Atom {
        id: Some(AtomId::Coord(i)),
        point: p,
    }
}

fn signed_atom(n: usize, radius: f64, i: usize, sign: f64) -> Atom {
    let mut p = DVector::zeros(n);
    p[i] = sign * radius;
    Atom {
        id: Some(AtomId::Signed {
            index: i,
            negative: sign < 0.0,
        }),
        point: p,
    }
}

fn cube_atom(bits: Vec<bool>) -> Atom {
    let point = DVector::from_iterator(bits.len(), bits.iter().map(|&b| if b { 1.0 } else { 0.0 }));
    Atom {
        id: Some(AtomId::Cube(bits)),
        point,
    }
}

pub(crate) fn reshape(x: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, x.as_slice())
}

pub(crate) fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

impl FeasibleSet {
    pub fn simplex(n: usize) -> Result<Self> {
        positive_dim(n)?;
        Ok(FeasibleSet::Simplex { n })
    }

    pub fn l1_ball(n: usize, radius: f64) -> Result<Self> {
        positive_dim(n)?;
        positive_radius(radius)?;
        Ok(FeasibleSet::L1Ball { n, radius })
    }

    pub fn hypercube(n: usize) -> Result<Self> {
        positive_dim(n)?;
        Ok(FeasibleSet::Hypercube { n })
    }

    pub fn product_simplices(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() || blocks.contains(&0) {
            return Err(KfwError::Parameter("blocks must be non-empty".into()));
        }
        Ok(FeasibleSet::ProductSimplices { blocks })
    }

    /// Validates that `groups` partitions `0..n`.
    pub fn group_ball(n: usize, groups: Vec<Vec<usize>>, radius: f64) -> Result<Self> {
        positive_dim(n)?;
        positive_radius(radius)?;
        let mut seen = vec![false; n];
        for g in &groups {
            if g.is_empty() {
                return Err(KfwError::Parameter("empty group".into()));
            }
            for &i in g {
                if i >= n || seen[i] {
                    return Err(KfwError::Parameter(format!(
                        "groups do not partition 0..{n}: index {i}"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(KfwError::Parameter(format!("index {i} not covered by any group")));
        }
        Ok(FeasibleSet::GroupNormBall { n, groups, radius })
    }

    pub fn spectrahedron(n: usize) -> Result<Self> {
        positive_dim(n)?;
        Ok(FeasibleSet::Spectrahedron { n })
    }

    pub fn nuclear_ball(rows: usize, cols: usize, radius: f64) -> Result<Self> {
        positive_dim(rows)?;
        positive_dim(cols)?;
        positive_radius(radius)?;
        Ok(FeasibleSet::NuclearBall { rows, cols, radius })
    }

    pub fn vertex_polytope(
        vertices: Vec<DVector<f64>>,
        facets: Option<Vec<(DVector<f64>, f64)>>,
    ) -> Result<Self> {
        let n = vertices
            .first()
            .map(|v| v.len())
            .ok_or_else(|| KfwError::Parameter("no vertices".into()))?;
        if vertices.iter().any(|v| v.len() != n) {
            return Err(KfwError::Parameter("vertices of mixed dimension".into()));
        }
        Ok(FeasibleSet::VertexPolytope { vertices, facets })
    }

    /// Short name used in logs and summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            FeasibleSet::Simplex { .. } => "simplex",
            FeasibleSet::L1Ball { .. } => "l1_ball",
            FeasibleSet::Hypercube { .. } => "hypercube",
            FeasibleSet::ProductSimplices { .. } => "product_simplices",
            FeasibleSet::GroupNormBall { .. } => "group_ball",
            FeasibleSet::Spectrahedron { .. } => "spectrahedron",
            FeasibleSet::NuclearBall { .. } => "nuclear_ball",
            FeasibleSet::VertexPolytope { .. } => "vertex_polytope",
        }
    }

    /// Dimension of the (flattened) ambient space.
    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Simplex { n }
            | FeasibleSet::L1Ball { n, .. }
            | FeasibleSet::Hypercube { n }
            | FeasibleSet::GroupNormBall { n, .. } => *n,
            FeasibleSet::ProductSimplices { blocks } => blocks.iter().sum(),
            FeasibleSet::Spectrahedron { n } => n * n,
            FeasibleSet::NuclearBall { rows, cols, .. } => rows * cols,
            FeasibleSet::VertexPolytope { vertices, .. } => vertices[0].len(),
        }
    }

    /// True when the set is a polytope whose vertices the oracles enumerate.
    pub fn is_vertex_representable(&self) -> bool {
        matches!(
            self,
            FeasibleSet::Simplex { .. }
                | FeasibleSet::L1Ball { .. }
                | FeasibleSet::Hypercube { .. }
                | FeasibleSet::ProductSimplices { .. }
                | FeasibleSet::VertexPolytope { .. }
        )
    }

    /// Matrix shape for spectral sets.
    pub fn matrix_shape(&self) -> Option<(usize, usize)> {
        match self {
            FeasibleSet::Spectrahedron { n } => Some((*n, *n)),
            FeasibleSet::NuclearBall { rows, cols, .. } => Some((*rows, *cols)),
            _ => None,
        }
    }

    /// Start offsets of the product-of-simplices blocks.
    pub fn block_offsets(&self) -> Vec<usize> {
        match self {
            FeasibleSet::ProductSimplices { blocks } => blocks
                .iter()
                .scan(0, |acc, &b| {
                    let start = *acc;
                    *acc += b;
                    Some(start)
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            FeasibleSet::Simplex { .. } => {
                x.iter().all(|&v| v >= -tol) && (x.sum() - 1.0).abs() <= tol
            }
            FeasibleSet::L1Ball { radius, .. } => x.lp_norm(1) <= radius + tol,
            FeasibleSet::Hypercube { .. } => x.iter().all(|&v| v >= -tol && v <= 1.0 + tol),
            FeasibleSet::ProductSimplices { blocks } => {
                let offsets = self.block_offsets();
                blocks.iter().zip(offsets).all(|(&len, start)| {
                    let b = x.rows(start, len);
                    b.iter().all(|&v| v >= -tol) && (b.sum() - 1.0).abs() <= tol
                })
            }
            FeasibleSet::GroupNormBall { groups, radius, .. } => {
                group_norm(x, groups) <= radius + tol
            }
            FeasibleSet::Spectrahedron { n } => {
                let m = reshape(x, *n, *n);
                let asym = (&m - m.transpose()).amax();
                let (lambda, _) = eig_sym_ascending(&symmetrize(&m));
                asym <= tol && lambda[0] >= -tol && (m.trace() - 1.0).abs() <= tol
            }
            FeasibleSet::NuclearBall { rows, cols, radius } => {
                let (_, s, _) = svd_descending(&reshape(x, *rows, *cols));
                s.sum() <= radius + tol
            }
            FeasibleSet::VertexPolytope { vertices, facets } => match facets {
                Some(f) => f.iter().all(|(a, b)| a.dot(x) <= b + tol),
                None => hull_distance(vertices, x) <= tol,
            },
        })
    }

    /// `sup ‖x − y‖` over the set.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Simplex { n } => {
                if *n > 1 {
                    2f64.sqrt()
                } else {
                    0.0
                }
            }
            FeasibleSet::L1Ball { radius, .. }
            | FeasibleSet::GroupNormBall { radius, .. }
            | FeasibleSet::NuclearBall { radius, .. } => 2.0 * radius,
            FeasibleSet::Hypercube { n } => (*n as f64).sqrt(),
            FeasibleSet::ProductSimplices { blocks } => {
                (2.0 * blocks.iter().filter(|&&b| b > 1).count() as f64).sqrt()
            }
            FeasibleSet::Spectrahedron { n } => {
                if *n > 1 {
                    2f64.sqrt()
                } else {
                    0.0
                }
            }
            FeasibleSet::VertexPolytope { vertices, .. } => {
                let mut d: f64 = 0.0;
                for (i, a) in vertices.iter().enumerate() {
                    for b in &vertices[i + 1..] {
                        d = d.max((a - b).norm());
                    }
                }
                d
            }
        }
    }

    /// A canonical vertex, used as the default start point.
    pub fn canonical_vertex(&self) -> DVector<f64> {
        match self {
            FeasibleSet::Simplex { n } => coord_atom(*n, 0).point,
            FeasibleSet::L1Ball { n, radius } => signed_atom(*n, *radius, 0, 1.0).point,
            FeasibleSet::Hypercube { n } => DVector::zeros(*n),
            FeasibleSet::ProductSimplices { .. } => {
                let mut x = DVector::zeros(self.dim());
                for start in self.block_offsets() {
                    x[start] = 1.0;
                }
                x
            }
            FeasibleSet::GroupNormBall { n, groups, radius } => {
                let mut x = DVector::zeros(*n);
                x[groups[0][0]] = *radius;
                x
            }
            FeasibleSet::Spectrahedron { n } => {
                let mut x = DVector::zeros(n * n);
                x[0] = 1.0;
                x
            }
            FeasibleSet::NuclearBall { rows, cols, radius } => {
                let mut x = DVector::zeros(rows * cols);
                x[0] = *radius;
                x
            }
            FeasibleSet::VertexPolytope { vertices, .. } => vertices[0].clone(),
        }
    }

    /// An exact minimizer of `<v, grad>` over the set. Ties go to the smallest
    /// index; a zero gradient block on group and spectral sets yields the
    /// canonical vertex.
    pub fn loo(&self, grad: &DVector<f64>) -> Result<Atom> {
        check_dim(self.dim(), grad.len())?;
        Ok(match self {
            FeasibleSet::Simplex { n } => coord_atom(*n, argmin(grad.as_slice())),
            FeasibleSet::L1Ball { n, radius } => {
                let i = argmax_abs(grad.as_slice());
                let sign = if grad[i] > 0.0 { -1.0 } else { 1.0 };
                signed_atom(*n, *radius, i, sign)
            }
            FeasibleSet::Hypercube { .. } => cube_atom(grad.iter().map(|&g| g < 0.0).collect()),
            FeasibleSet::ProductSimplices { blocks } => {
                let picks: Vec<usize> = blocks
                    .iter()
                    .zip(self.block_offsets())
                    .map(|(&len, start)| argmin(&grad.as_slice()[start..start + len]))
                    .collect();
                self.product_atom(&picks)
            }
            FeasibleSet::GroupNormBall { n, groups, radius } => {
                let norms: Vec<f64> = groups.iter().map(|g| block_norm(grad, g)).collect();
                let best = select_k_largest(&norms, 1)?.indices[0];
                let mut p = DVector::zeros(*n);
                if norms[best] > 0.0 {
                    for &i in &groups[best] {
                        p[i] = -radius * grad[i] / norms[best];
                    }
                } else {
                    p = self.canonical_vertex();
                }
                Atom { id: None, point: p }
            }
            FeasibleSet::Spectrahedron { n } => {
                if grad.iter().all(|&g| g == 0.0) {
                    return Ok(Atom {
                        id: None,
                        point: self.canonical_vertex(),
                    });
                }
                let y = symmetrize(&reshape(grad, *n, *n));
                let b = eig_bottom_k(&DenseOperator::symmetric(y)?, 1)?;
                let v = b.basis.column(0);
                Atom {
                    id: None,
                    point: flatten(&(v * v.transpose())),
                }
            }
            FeasibleSet::NuclearBall { rows, cols, radius } => {
                if grad.iter().all(|&g| g == 0.0) {
                    return Ok(Atom {
                        id: None,
                        point: self.canonical_vertex(),
                    });
                }
                let (u, v) = svd_top_k(&DenseOperator::new(reshape(grad, *rows, *cols)), 1)?;
                let atom = u.basis.column(0) * v.basis.column(0).transpose() * (-radius);
                Atom {
                    id: None,
                    point: flatten(&atom),
                }
            }
            FeasibleSet::VertexPolytope { vertices, .. } => {
                let scores: Vec<f64> = vertices.iter().map(|v| v.dot(grad)).collect();
                let i = argmin(&scores);
                Atom {
                    id: Some(AtomId::Vertex(i)),
                    point: vertices[i].clone(),
                }
            }
        })
    }

    fn product_atom(&self, picks: &[usize]) -> Atom {
        let mut p = DVector::zeros(self.dim());
        for (start, &i) in self.block_offsets().iter().zip(picks) {
            p[start + i] = 1.0;
        }
        Atom {
            id: Some(AtomId::Blocks(picks.to_vec())),
            point: p,
        }
    }

    /// Largest admissible `k` for [`FeasibleSet::kloo`].
    pub fn max_k(&self) -> usize {
        match self {
            FeasibleSet::Simplex { n } => *n,
            FeasibleSet::L1Ball { n, .. } => 2 * n,
            FeasibleSet::Hypercube { n } => {
                if *n >= usize::BITS as usize - 1 {
                    usize::MAX
                } else {
                    1usize << n
                }
            }
            FeasibleSet::ProductSimplices { blocks } => *blocks.iter().max().unwrap_or(&1),
            FeasibleSet::GroupNormBall { groups, .. } => groups.len(),
            FeasibleSet::Spectrahedron { n } => *n,
            FeasibleSet::NuclearBall { rows, cols, .. } => *rows.min(cols),
            FeasibleSet::VertexPolytope { vertices, .. } => vertices.len(),
        }
    }

    /// The k best directions for the gradient `grad`.
    pub fn kloo(&self, grad: &DVector<f64>, k: usize) -> Result<KlooOutput> {
        check_dim(self.dim(), grad.len())?;
        if k == 0 || k > self.max_k() {
            return Err(KfwError::Parameter(format!(
                "k = {k} must lie in 1..={} for {}",
                self.max_k(),
                self.kind()
            )));
        }
        Ok(match self {
            FeasibleSet::Simplex { n } => {
                let sel = select_k_smallest(grad.as_slice(), k)?;
                KlooOutput::Vertices(sel.indices.iter().map(|&i| coord_atom(*n, i)).collect())
            }
            FeasibleSet::L1Ball { radius, .. } => {
                // candidate 2i is +radius·e_i, 2i+1 is −radius·e_i
                let scores: Vec<f64> = grad
                    .iter()
                    .flat_map(|&g| [radius * g, -radius * g])
                    .collect();
                let sel = select_k_smallest(&scores, k)?;
                KlooOutput::SignedCoords(
                    sel.indices
                        .iter()
                        .map(|&c| (c / 2, if c % 2 == 0 { 1.0 } else { -1.0 }))
                        .collect(),
                )
            }
            FeasibleSet::Hypercube { .. } => KlooOutput::Vertices(
                hypercube_k_best(grad.as_slice(), k)
                    .into_iter()
                    .map(cube_atom)
                    .collect(),
            ),
            FeasibleSet::ProductSimplices { blocks } => KlooOutput::BlockCoords(
                blocks
                    .iter()
                    .zip(self.block_offsets())
                    .map(|(&len, start)| {
                        select_k_smallest(&grad.as_slice()[start..start + len], k.min(len))
                            .map(|s| s.indices)
                    })
                    .collect::<Result<_>>()?,
            ),
            FeasibleSet::GroupNormBall { groups, .. } => {
                let norms: Vec<f64> = groups.iter().map(|g| block_norm(grad, g)).collect();
                KlooOutput::Groups(select_k_largest(&norms, k)?.indices)
            }
            FeasibleSet::Spectrahedron { n } => {
                let y = symmetrize(&reshape(grad, *n, *n));
                KlooOutput::EigBasis(eig_bottom_k(&DenseOperator::symmetric(y)?, k)?)
            }
            FeasibleSet::NuclearBall { rows, cols, .. } => {
                let (left, right) = svd_top_k(&DenseOperator::new(reshape(grad, *rows, *cols)), k)?;
                KlooOutput::SingularBases { left, right }
            }
            FeasibleSet::VertexPolytope { vertices, .. } => {
                let scores: Vec<f64> = vertices.iter().map(|v| v.dot(grad)).collect();
                let sel = select_k_smallest(&scores, k)?;
                KlooOutput::Vertices(
                    sel.indices
                        .iter()
                        .map(|&i| Atom {
                            id: Some(AtomId::Vertex(i)),
                            point: vertices[i].clone(),
                        })
                        .collect(),
                )
            }
        })
    }

    /// Builds the direction-search parametrization around `anchor`.
    pub fn build_ds(&self, anchor: &DVector<f64>, out: &KlooOutput) -> Result<DsParametrization> {
        check_dim(self.dim(), anchor.len())?;
        match (self, out) {
            (
                FeasibleSet::Simplex { .. }
                | FeasibleSet::L1Ball { .. }
                | FeasibleSet::Hypercube { .. }
                | FeasibleSet::VertexPolytope { .. },
                KlooOutput::Vertices(_) | KlooOutput::SignedCoords(_),
            ) => {
                let atoms = out
                    .atoms(self)
                    .ok_or_else(|| KfwError::Parameter("kLOO output does not match set".into()))?;
                Ok(DsParametrization::convex_hull(
                    anchor.clone(),
                    atoms.into_iter().map(|a| a.point).collect(),
                ))
            }
            (FeasibleSet::GroupNormBall { groups, radius, .. }, KlooOutput::Groups(ids)) => {
                Ok(DsParametrization::group_support(
                    anchor.clone(),
                    ids.iter().map(|&g| groups[g].clone()).collect(),
                    *radius,
                ))
            }
            (FeasibleSet::Spectrahedron { .. }, KlooOutput::EigBasis(b)) => Ok(
                DsParametrization::spectral_simplex(anchor.clone(), b.basis.clone(), 1.0),
            ),
            (FeasibleSet::NuclearBall { radius, .. }, KlooOutput::SingularBases { left, right }) => {
                Ok(DsParametrization::spectral_nuclear(
                    anchor.clone(),
                    left.basis.clone(),
                    right.basis.clone(),
                    *radius,
                ))
            }
            (FeasibleSet::ProductSimplices { blocks }, KlooOutput::BlockCoords(sel)) => {
                Ok(DsParametrization::scaled_product(
                    anchor.clone(),
                    blocks.clone(),
                    sel.clone(),
                ))
            }
            _ => Err(KfwError::Parameter(format!(
                "kLOO output is incompatible with {}",
                self.kind()
            ))),
        }
    }
}

fn positive_dim(n: usize) -> Result<()> {
    if n == 0 {
        Err(KfwError::Parameter("dimension must be positive".into()))
    } else {
        Ok(())
    }
}

fn positive_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(KfwError::Parameter(format!("radius must be positive, got {r}")))
    }
}

fn argmin(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in y.iter().enumerate() {
        if v < y[best] {
            best = i;
        }
    }
    best
}

fn argmax_abs(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in y.iter().enumerate() {
        if v.abs() > y[best].abs() {
            best = i;
        }
    }
    best
}

pub(crate) fn block_norm(x: &DVector<f64>, group: &[usize]) -> f64 {
    group.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt()
}

/// `Σ_g ‖x_g‖₂`.
pub fn group_norm(x: &DVector<f64>, groups: &[Vec<usize>]) -> f64 {
    groups.iter().map(|g| block_norm(x, g)).sum()
}

/// Distance from `x` to the convex hull of `vertices`, by projected gradient on
/// the barycentric weights.
fn hull_distance(vertices: &[DVector<f64>], x: &DVector<f64>) -> f64 {
    let m = DMatrix::from_columns(vertices);
    let gram = m.tr_mul(&m);
    let lip = 2.0 * gram.clone().symmetric_eigen().eigenvalues.max().max(1e-300);
    let mut w = DVector::from_element(vertices.len(), 1.0 / vertices.len() as f64);
    for _ in 0..20_000 {
        let r = &m * &w - x;
        let g = m.tr_mul(&r) * 2.0;
        let next = project_simplex(&(&w - g / lip)).expect("non-empty");
        if (&next - &w).amax() < 1e-15 {
            w = next;
            break;
        }
        w = next;
    }
    (&m * w - x).norm()
}
