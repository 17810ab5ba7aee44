//! Euclidean projections onto the direction-search parameter domains.

use nalgebra::{DMatrix, DVector};

use crate::error::{KfwError, Result};
use crate::linalg::{eig_sym_ascending, svd_descending, symmetrize};

/// Projection onto the probability simplex `{a ≥ 0, Σa = 1}` by sort-and-scan.
pub fn project_simplex(z: &DVector<f64>) -> Result<DVector<f64>> {
    if z.is_empty() {
        return Err(KfwError::Parameter("cannot project an empty vector".into()));
    }
    let tau = simplex_threshold(z.as_slice(), 1.0);
    Ok(z.map(|v| (v - tau).max(0.0)))
}

/// Projection onto `radius · Δ`.
pub fn project_simplex_scaled(z: &DVector<f64>, radius: f64) -> Result<DVector<f64>> {
    Ok(project_simplex(&(z / radius))? * radius)
}

/// Threshold `τ` with `Σ max(z_i − τ, 0) = total`.
fn simplex_threshold(z: &[f64], total: f64) -> f64 {
    let mut u = z.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = (u[0] - total) / 1.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - total) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    tau
}

/// Projection onto `{a ≥ 0, Σa ≤ 1}`, the convex hull of the simplex and 0.
pub fn project_capped_simplex(z: &DVector<f64>) -> DVector<f64> {
    let clipped = z.map(|v| v.max(0.0));
    if clipped.sum() <= 1.0 || z.is_empty() {
        return clipped;
    }
    let tau = simplex_threshold(z.as_slice(), 1.0);
    z.map(|v| (v - tau).max(0.0))
}

/// Projection onto `radius · {a ≥ 0, Σa ≤ 1}`.
pub fn project_capped_simplex_scaled(z: &DVector<f64>, radius: f64) -> DVector<f64> {
    project_capped_simplex(&(z / radius)) * radius
}

/// Projection onto `{z ≥ 0, Σ a_i z_i = 1}` for weights `a_i ≥ 0` (not all zero).
/// Coordinates with zero weight are only clipped at zero.
pub fn project_weighted_simplex(y: &DVector<f64>, weights: &DVector<f64>) -> DVector<f64> {
    let mut active: Vec<usize> = (0..y.len()).filter(|&i| weights[i] > 0.0).collect();
    active.sort_by(|&i, &j| (y[j] / weights[j]).total_cmp(&(y[i] / weights[i])));
    let mut num = 0.0;
    let mut den = 0.0;
    let mut tau = f64::NEG_INFINITY;
    for &i in &active {
        let (a, v) = (weights[i], y[i]);
        let t = (num + a * v - 1.0) / (den + a * a);
        if v / a > t {
            num += a * v;
            den += a * a;
            tau = t;
        } else {
            break;
        }
    }
    DVector::from_fn(y.len(), |i, _| {
        if weights[i] > 0.0 {
            (y[i] - tau * weights[i]).max(0.0)
        } else {
            y[i].max(0.0)
        }
    })
}

/// Projection of `(η₀, λ₀)` onto `{η ≥ 0, η + Σ_g ‖λ_g‖₂ ≤ radius}` where the
/// blocks of `λ₀` are the support groups.
///
/// The block norms are projected jointly with `η` onto the scaled capped simplex,
/// then every block is rescaled to its projected norm.
pub fn project_group_domain(
    eta0: f64,
    blocks: &[DVector<f64>],
    radius: f64,
) -> (f64, Vec<DVector<f64>>) {
    let mut z = DVector::zeros(blocks.len() + 1);
    z[0] = eta0;
    for (i, b) in blocks.iter().enumerate() {
        z[i + 1] = b.norm();
    }
    let p = project_capped_simplex_scaled(&z, radius);
    let out = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let norm = z[i + 1];
            if norm > 0.0 {
                b * (p[i + 1] / norm)
            } else {
                // a zero block has projected norm zero, KKT holds with any direction
                DVector::zeros(b.len())
            }
        })
        .collect();
    (p[0], out)
}

/// Projection onto `{η ≥ 0, S ⪰ 0, η + tr S = radius}`. The input is
/// symmetrized first, which is exact for the projection from `ℝ^{k×k}`.
pub fn project_spectral_simplex(eta0: f64, s0: &DMatrix<f64>, radius: f64) -> (f64, DMatrix<f64>) {
    let k = s0.nrows();
    let (lambda, v) = eig_sym_ascending(&symmetrize(s0));
    let mut z = DVector::zeros(k + 1);
    z[0] = eta0;
    z.rows_mut(1, k).copy_from(&lambda);
    let p = project_simplex_scaled(&z, radius).expect("non-empty");
    let d = DMatrix::from_diagonal(&p.rows(1, k).into_owned());
    (p[0], &v * d * v.transpose())
}

/// Projection onto `{η ≥ 0, η + ‖S‖_nuc ≤ radius}`.
pub fn project_spectral_nuclear(eta0: f64, s0: &DMatrix<f64>, radius: f64) -> (f64, DMatrix<f64>) {
    let (u, sigma, v) = svd_descending(s0);
    let p_len = sigma.len();
    let mut z = DVector::zeros(p_len + 1);
    z[0] = eta0;
    z.rows_mut(1, p_len).copy_from(&sigma);
    let p = project_capped_simplex_scaled(&z, radius);
    let d = DMatrix::from_diagonal(&p.rows(1, p_len).into_owned());
    (p[0], &u * d * v.transpose())
}
