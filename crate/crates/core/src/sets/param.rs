use nalgebra::{DMatrix, DVector};

use super::{flatten, reshape};
use crate::error::{check_dim, Result};
use crate::linalg::SeededRng;
use crate::projections::{
    project_group_domain, project_simplex, project_spectral_nuclear, project_spectral_simplex,
    project_weighted_simplex,
};

/// A linear map `θ ↦ x` from a small parameter domain into the feasible set.
///
/// For the radius-`α` balls the anchor coefficient lives on the `α` scale: the
/// anchor enters as `(η/α)·w` so that the domain is `{η ≥ 0, η + ‖·‖ ≤ α}`
/// and the warm start `η = α` maps to the anchor.
#[derive(Debug, Clone, PartialEq)]
pub enum DsParametrization {
    /// `x = η w + Σ λ_i v_i` over `Δ^{k+1}`, `θ = (η, λ)`.
    ConvexHull {
        anchor: DVector<f64>,
        atoms: Vec<DVector<f64>>,
    },
    /// `x = (η/α) w + λ` with `λ` supported on `groups`, concatenated in order.
    GroupSupport {
        anchor: DVector<f64>,
        groups: Vec<Vec<usize>>,
        radius: f64,
    },
    /// `X = (η/α) W + V S Vᵀ`, `θ = (η, vec S)` with `S` column-major `k × k`.
    SpectralSimplex {
        anchor: DVector<f64>,
        basis: DMatrix<f64>,
        radius: f64,
    },
    /// `X = (η/α) W + U S Vᵀ`.
    SpectralNuclear {
        anchor: DVector<f64>,
        left: DMatrix<f64>,
        right: DMatrix<f64>,
        radius: f64,
    },
    /// Per block `j`: `Σ_{i∉I_j} η_j w_i e_i + Σ_{i∈I_j} α_i e_i`, with the
    /// block parameters laid out as `(α_i for i ∈ I_j, η_j)`.
    ScaledProductSimplices {
        anchor: DVector<f64>,
        blocks: Vec<usize>,
        selections: Vec<Vec<usize>>,
    },
}

impl DsParametrization {
    /// Drops atoms that exactly equal the anchor or an earlier atom.
    pub fn convex_hull(anchor: DVector<f64>, atoms: Vec<DVector<f64>>) -> Self {
        let mut kept: Vec<DVector<f64>> = Vec::with_capacity(atoms.len());
        for a in atoms {
            if a != anchor && !kept.contains(&a) {
                kept.push(a);
            }
        }
        DsParametrization::ConvexHull {
            anchor,
            atoms: kept,
        }
    }

    pub fn group_support(anchor: DVector<f64>, groups: Vec<Vec<usize>>, radius: f64) -> Self {
        DsParametrization::GroupSupport {
            anchor,
            groups,
            radius,
        }
    }

    pub fn spectral_simplex(anchor: DVector<f64>, basis: DMatrix<f64>, radius: f64) -> Self {
        DsParametrization::SpectralSimplex {
            anchor,
            basis,
            radius,
        }
    }

    pub fn spectral_nuclear(
        anchor: DVector<f64>,
        left: DMatrix<f64>,
        right: DMatrix<f64>,
        radius: f64,
    ) -> Self {
        DsParametrization::SpectralNuclear {
            anchor,
            left,
            right,
            radius,
        }
    }

    pub fn scaled_product(
        anchor: DVector<f64>,
        blocks: Vec<usize>,
        selections: Vec<Vec<usize>>,
    ) -> Self {
        DsParametrization::ScaledProductSimplices {
            anchor,
            blocks,
            selections,
        }
    }

    pub fn anchor(&self) -> &DVector<f64> {
        match self {
            DsParametrization::ConvexHull { anchor, .. }
            | DsParametrization::GroupSupport { anchor, .. }
            | DsParametrization::SpectralSimplex { anchor, .. }
            | DsParametrization::SpectralNuclear { anchor, .. }
            | DsParametrization::ScaledProductSimplices { anchor, .. } => anchor,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.anchor().len()
    }

    pub fn param_dim(&self) -> usize {
        match self {
            DsParametrization::ConvexHull { atoms, .. } => atoms.len() + 1,
            DsParametrization::GroupSupport { groups, .. } => {
                1 + groups.iter().map(Vec::len).sum::<usize>()
            }
            DsParametrization::SpectralSimplex { basis, .. } => 1 + basis.ncols().pow(2),
            DsParametrization::SpectralNuclear { left, .. } => 1 + left.ncols().pow(2),
            DsParametrization::ScaledProductSimplices { selections, .. } => {
                selections.iter().map(|s| s.len() + 1).sum()
            }
        }
    }

    /// Number of directions besides the anchor.
    pub fn directions(&self) -> usize {
        match self {
            DsParametrization::ConvexHull { atoms, .. } => atoms.len(),
            DsParametrization::GroupSupport { groups, .. } => groups.len(),
            DsParametrization::SpectralSimplex { basis, .. } => basis.ncols(),
            DsParametrization::SpectralNuclear { left, .. } => left.ncols(),
            DsParametrization::ScaledProductSimplices { selections, .. } => {
                selections.iter().map(Vec::len).max().unwrap_or(0)
            }
        }
    }

    fn radius(&self) -> f64 {
        match self {
            DsParametrization::GroupSupport { radius, .. }
            | DsParametrization::SpectralSimplex { radius, .. }
            | DsParametrization::SpectralNuclear { radius, .. } => *radius,
            _ => 1.0,
        }
    }

    /// The parameter that maps to the anchor.
    pub fn warm_start(&self) -> DVector<f64> {
        let mut t = DVector::zeros(self.param_dim());
        match self {
            DsParametrization::ScaledProductSimplices {
                anchor,
                blocks,
                selections,
            } => {
                let mut pos = 0;
                let mut start = 0;
                for (len, sel) in blocks.iter().zip(selections) {
                    for &i in sel {
                        t[pos] = anchor[start + i];
                        pos += 1;
                    }
                    t[pos] = 1.0;
                    pos += 1;
                    start += len;
                }
            }
            _ => t[0] = self.radius(),
        }
        t
    }

    pub fn map_point(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self {
            DsParametrization::ConvexHull { anchor, atoms } => {
                let mut x = anchor * theta[0];
                for (a, &l) in atoms.iter().zip(theta.iter().skip(1)) {
                    if l != 0.0 {
                        x.axpy(l, a, 1.0);
                    }
                }
                x
            }
            DsParametrization::GroupSupport {
                anchor,
                groups,
                radius,
            } => {
                let mut x = anchor * (theta[0] / radius);
                let mut pos = 1;
                for g in groups {
                    for &i in g {
                        x[i] += theta[pos];
                        pos += 1;
                    }
                }
                x
            }
            DsParametrization::SpectralSimplex {
                anchor,
                basis,
                radius,
            } => {
                let k = basis.ncols();
                let s = DMatrix::from_column_slice(k, k, &theta.as_slice()[1..]);
                let low = basis * s * basis.transpose();
                anchor * (theta[0] / radius) + flatten(&low)
            }
            DsParametrization::SpectralNuclear {
                anchor,
                left,
                right,
                radius,
            } => {
                let k = left.ncols();
                let s = DMatrix::from_column_slice(k, k, &theta.as_slice()[1..]);
                let low = left * s * right.transpose();
                anchor * (theta[0] / radius) + flatten(&low)
            }
            DsParametrization::ScaledProductSimplices {
                anchor,
                blocks,
                selections,
            } => {
                let mut x = DVector::zeros(anchor.len());
                let mut pos = 0;
                let mut start = 0;
                for (&len, sel) in blocks.iter().zip(selections) {
                    let eta = theta[pos + sel.len()];
                    for i in 0..len {
                        x[start + i] = eta * anchor[start + i];
                    }
                    for &i in sel {
                        x[start + i] = theta[pos];
                        pos += 1;
                    }
                    pos += 1;
                    start += len;
                }
                x
            }
        }
    }

    /// Transpose of [`Self::map_point`] applied to an ambient gradient.
    pub fn adjoint(&self, grad: &DVector<f64>) -> DVector<f64> {
        match self {
            DsParametrization::ConvexHull { anchor, atoms } => {
                let mut out = DVector::zeros(atoms.len() + 1);
                out[0] = anchor.dot(grad);
                for (i, a) in atoms.iter().enumerate() {
                    out[i + 1] = a.dot(grad);
                }
                out
            }
            DsParametrization::GroupSupport {
                anchor,
                groups,
                radius,
            } => {
                let mut out = DVector::zeros(self.param_dim());
                out[0] = anchor.dot(grad) / radius;
                let mut pos = 1;
                for g in groups {
                    for &i in g {
                        out[pos] = grad[i];
                        pos += 1;
                    }
                }
                out
            }
            DsParametrization::SpectralSimplex {
                anchor,
                basis,
                radius,
            } => {
                let n = basis.nrows();
                let g = reshape(grad, n, n);
                let s = basis.tr_mul(&(g * basis));
                spectral_param(anchor.dot(grad) / radius, &s)
            }
            DsParametrization::SpectralNuclear {
                anchor,
                left,
                right,
                radius,
            } => {
                let g = reshape(grad, left.nrows(), right.nrows());
                let s = left.tr_mul(&(g * right));
                spectral_param(anchor.dot(grad) / radius, &s)
            }
            DsParametrization::ScaledProductSimplices {
                anchor,
                blocks,
                selections,
            } => {
                let mut out = DVector::zeros(self.param_dim());
                let mut pos = 0;
                let mut start = 0;
                for (&len, sel) in blocks.iter().zip(selections) {
                    let mut eta_grad = 0.0;
                    for i in 0..len {
                        if !sel.contains(&i) {
                            eta_grad += anchor[start + i] * grad[start + i];
                        }
                    }
                    for &i in sel {
                        out[pos] = grad[start + i];
                        pos += 1;
                    }
                    out[pos] = eta_grad;
                    pos += 1;
                    start += len;
                }
                out
            }
        }
    }

    /// The map as an explicit `ambient_dim × param_dim` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let p = self.param_dim();
        let mut m = DMatrix::zeros(self.ambient_dim(), p);
        let mut e = DVector::zeros(p);
        for j in 0..p {
            e[j] = 1.0;
            m.set_column(j, &self.map_point(&e));
            e[j] = 0.0;
        }
        m
    }

    /// Euclidean projection onto the parameter domain.
    pub fn project(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.param_dim(), theta.len())?;
        Ok(match self {
            DsParametrization::ConvexHull { .. } => project_simplex(theta)?,
            DsParametrization::GroupSupport { groups, radius, .. } => {
                let mut blocks = Vec::with_capacity(groups.len());
                let mut pos = 1;
                for g in groups {
                    blocks.push(theta.rows(pos, g.len()).into_owned());
                    pos += g.len();
                }
                let (eta, out) = project_group_domain(theta[0], &blocks, *radius);
                let mut t = DVector::zeros(theta.len());
                t[0] = eta;
                let mut pos = 1;
                for b in out {
                    t.rows_mut(pos, b.len()).copy_from(&b);
                    pos += b.len();
                }
                t
            }
            DsParametrization::SpectralSimplex { basis, radius, .. } => {
                let k = basis.ncols();
                let s0 = DMatrix::from_column_slice(k, k, &theta.as_slice()[1..]);
                let (eta, s) = project_spectral_simplex(theta[0], &s0, *radius);
                spectral_param(eta, &s)
            }
            DsParametrization::SpectralNuclear { left, radius, .. } => {
                let k = left.ncols();
                let s0 = DMatrix::from_column_slice(k, k, &theta.as_slice()[1..]);
                let (eta, s) = project_spectral_nuclear(theta[0], &s0, *radius);
                spectral_param(eta, &s)
            }
            DsParametrization::ScaledProductSimplices {
                anchor,
                blocks,
                selections,
            } => {
                let mut t = DVector::zeros(theta.len());
                let mut pos = 0;
                let mut start = 0;
                for (&len, sel) in blocks.iter().zip(selections) {
                    let m = sel.len() + 1;
                    let scale: f64 = (0..len)
                        .filter(|i| !sel.contains(i))
                        .map(|i| anchor[start + i])
                        .sum();
                    let mut w = DVector::from_element(m, 1.0);
                    w[m - 1] = scale;
                    let y = theta.rows(pos, m).into_owned();
                    t.rows_mut(pos, m).copy_from(&project_weighted_simplex(&y, &w));
                    pos += m;
                    start += len;
                }
                t
            }
        })
    }

    /// Whether the anchor enters through the single weight `θ₀`.
    pub fn single_anchor(&self) -> bool {
        !matches!(self, DsParametrization::ScaledProductSimplices { .. })
    }

    /// Upper end of the anchor weight `θ₀`.
    pub fn anchor_scale(&self) -> f64 {
        self.radius()
    }

    /// Projection of the non-anchor parameters onto the slice of the domain
    /// where the anchor weight equals `eta`.
    pub fn project_slice(&self, eta: f64, rest: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.param_dim(), rest.len() + 1)?;
        if !self.single_anchor() {
            return Err(crate::error::KfwError::Unsupported(
                "product simplices carry one anchor weight per block".into(),
            ));
        }
        let alpha = self.radius();
        let scale = (alpha - eta) / alpha;
        if scale <= 0.0 {
            return Ok(DVector::zeros(rest.len()));
        }
        let z = rest / scale;
        // an anchor weight this negative is clipped to zero by the projection
        let mut theta = DVector::zeros(rest.len() + 1);
        theta[0] = -(2.0 * z.norm() + 2.0 * alpha + 1.0);
        theta.rows_mut(1, rest.len()).copy_from(&z);
        let p = self.project(&theta)?;
        Ok(p.rows(1, rest.len()) * scale)
    }

    /// A random feasible parameter: a projected Gaussian mixed with the warm start.
    pub fn random_param(&self, rng: &mut SeededRng) -> DVector<f64> {
        let z = rng.normal_vector(self.param_dim());
        let p = self.project(&z).expect("dimension matches");
        let t = rng.uniform();
        p * t + self.warm_start() * (1.0 - t)
    }
}

fn spectral_param(eta: f64, s: &DMatrix<f64>) -> DVector<f64> {
    let mut t = DVector::zeros(1 + s.len());
    t[0] = eta;
    t.rows_mut(1, s.len()).copy_from_slice(s.as_slice());
    t
}
