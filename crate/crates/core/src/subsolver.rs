//! Accelerated projected gradient for the direction-search subproblems and the
//! one-dimensional line search.

use nalgebra::DVector;

use crate::error::{KfwError, Result};
use crate::objective::{CompositeObjective, ParamObjective};

#[derive(Debug, Clone, PartialEq)]
pub struct ApgConfig {
    pub max_inner: usize,
    /// Relative objective change that counts as stalled.
    pub rel_tol: f64,
    /// Gradient-mapping step, relative to `max(1, ‖θ‖)`, below which a stalled
    /// run is declared converged.
    pub step_tol: f64,
    /// Factor in `(0, 1)` applied to the step on a failed sufficient-decrease test.
    pub backtrack: f64,
    /// `1/L̂`; `None` starts from 1.
    pub initial_step: Option<f64>,
    pub restart_on_increase: bool,
}

impl Default for ApgConfig {
    fn default() -> Self {
        Self {
            max_inner: 20_000,
            rel_tol: 1e-10,
            step_tol: 1e-12,
            backtrack: 0.5,
            initial_step: None,
            restart_on_increase: true,
        }
    }
}

impl ApgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.step_tol > 0.0) {
            return Err(KfwError::Config("APG tolerances must be positive".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(KfwError::Config("APG backtracking factor must lie in (0, 1)".into()));
        }
        if let Some(s) = self.initial_step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(KfwError::Config("APG initial step must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub theta: DVector<f64>,
    pub objective: f64,
    pub inner_iters: usize,
    pub converged: bool,
}

/// FISTA with backtracking, function-value and gradient restarts.
///
/// Objective comparisons allow a rounding margin of `1e-13·max(1, |f|)` (or the
/// objective's own [`ParamObjective::rounding`] if larger), below
/// which values of ill-conditioned quadratics carry no information. Stops when
/// the relative objective change has stayed below `rel_tol` for three
/// consecutive iterations and the last gradient-mapping step is below
/// `step_tol`, or at `max_inner`. The result never has a larger objective than
/// `theta0`.
pub fn apg_solve<P>(
    obj: &dyn ParamObjective,
    project: P,
    config: &ApgConfig,
    theta0: &DVector<f64>,
) -> Result<SubproblemResult>
where
    P: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let floor = obj.rounding();
    let noise = |f: f64| (1e-13 * f.abs().max(1.0)).max(floor);
    let f0 = obj.value(theta0);
    if !f0.is_finite() {
        return Err(KfwError::Numerical(format!(
            "direction search objective is {f0} at the warm start"
        )));
    }
    let mut x = theta0.clone();
    let mut fx = f0;
    let mut lip = config.initial_step.map_or(1.0, |s| 1.0 / s);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut stalled = 0;
    let mut iters = 0;
    let mut converged = false;

    while iters < config.max_inner {
        iters += 1;
        let (fy, gy) = obj.value_grad(&y);
        if !fy.is_finite() || gy.iter().any(|g| !g.is_finite()) {
            return Err(KfwError::Numerical(format!(
                "non-finite objective or gradient at inner iteration {iters}"
            )));
        }
        let (z, fz) = loop {
            let z = project(&(&y - &gy / lip))?;
            let fz = obj.value(&z);
            let d = &z - &y;
            let model = fy + gy.dot(&d) + 0.5 * lip * d.norm_squared();
            if fz <= model + noise(fy) || !lip.is_finite() {
                break (z, fz);
            }
            lip /= config.backtrack;
        };
        if !fz.is_finite() {
            return Err(KfwError::Numerical(format!(
                "non-finite objective at inner iteration {iters}"
            )));
        }
        let step = (&z - &y).norm();
        let plain = t <= 1.0 && y == x;

        if config.restart_on_increase && !plain && fz > fx + noise(fx) {
            t = 1.0;
            y = x.clone();
            continue;
        }

        let rel = (fx - fz).abs() / fx.abs().max(1e-300);
        let flat = rel < config.rel_tol || (fx - fz).abs() <= noise(fx);
        stalled = if flat { stalled + 1 } else { 0 };
        // gradient restart: the momentum points uphill of the new step
        let uphill = (&y - &z).dot(&(&z - &x)) > 0.0;
        let x_prev = std::mem::replace(&mut x, z);
        fx = fz;
        if uphill {
            t = 1.0;
            y = x.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &x + (&x - &x_prev) * ((t - 1.0) / t_next);
            t = t_next;
        }
        let small = step <= config.step_tol * x.norm().max(1.0);
        if small && (stalled >= 3 || plain) {
            converged = true;
            break;
        }
    }
    if fx > f0 {
        return Ok(SubproblemResult {
            theta: theta0.clone(),
            objective: f0,
            inner_iters: iters,
            converged,
        });
    }
    Ok(SubproblemResult {
        theta: x,
        objective: fx,
        inner_iters: iters,
        converged,
    })
}

/// `rest ↦ obj((eta, rest))`.
struct AnchorSlice<'a> {
    obj: &'a dyn ParamObjective,
    eta: f64,
}

impl AnchorSlice<'_> {
    fn join(&self, rest: &DVector<f64>) -> DVector<f64> {
        let mut theta = DVector::zeros(rest.len() + 1);
        theta[0] = self.eta;
        theta.rows_mut(1, rest.len()).copy_from(rest);
        theta
    }
}

impl ParamObjective for AnchorSlice<'_> {
    fn dim(&self) -> usize {
        self.obj.dim() - 1
    }

    fn value(&self, rest: &DVector<f64>) -> f64 {
        self.obj.value(&self.join(rest))
    }

    fn value_grad(&self, rest: &DVector<f64>) -> (f64, DVector<f64>) {
        let (f, g) = self.obj.value_grad(&self.join(rest));
        (f, g.rows(1, rest.len()).into_owned())
    }

    fn rounding(&self) -> f64 {
        self.obj.rounding()
    }
}

/// Golden-section search over the anchor weight `θ₀ ∈ [0, scale]`, with the
/// remaining parameters minimized by APG on each slice.
///
/// `project_slice(eta, rest)` projects `rest` onto the slice `θ₀ = eta`. The
/// slice value is convex in `eta`, and each slice problem is free of the
/// near-collinearity between the anchor and the new directions that stalls a
/// joint APG once the iterate is close to their span.
pub fn anchor_weight_search<P>(
    obj: &dyn ParamObjective,
    project_slice: P,
    scale: f64,
    config: &ApgConfig,
    start: &DVector<f64>,
) -> Result<SubproblemResult>
where
    P: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let n = start.len() - 1;
    let mut best = SubproblemResult {
        theta: start.clone(),
        objective: obj.value(start),
        inner_iters: 0,
        converged: false,
    };
    let mut warm = start.rows(1, n).into_owned();
    let mut inner_iters = 0;
    let mut slice = |eta: f64, warm: &mut DVector<f64>| -> Result<f64> {
        let piece = AnchorSlice { obj, eta };
        let w0 = project_slice(eta, warm)?;
        let r = apg_solve(&piece, |z| project_slice(eta, z), config, &w0)?;
        inner_iters += r.inner_iters;
        *warm = r.theta.clone();
        if r.objective < best.objective {
            best.theta = piece.join(&r.theta);
            best.objective = r.objective;
        }
        Ok(r.objective)
    };
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, scale);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = slice(c, &mut warm)?;
    let mut fd = slice(d, &mut warm)?;
    while b - a > 1e-13 * scale {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = slice(c, &mut warm)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = slice(d, &mut warm)?;
        }
    }
    best.inner_iters = inner_iters;
    best.converged = true;
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearchMode {
    /// Closed-form minimizer of the quadratic along the segment.
    ExactQuadratic,
    /// 60 bisection steps on the directional derivative.
    Bisection,
}

/// `argmin_{η ∈ [0, max_step]} f(x + η d)` given `grad = ∇f(x)`.
///
/// `ExactQuadratic` falls back to bisection when `f` has no closed-form
/// curvature.
pub fn line_search(
    obj: &CompositeObjective,
    x: &DVector<f64>,
    grad: &DVector<f64>,
    d: &DVector<f64>,
    max_step: f64,
    mode: LineSearchMode,
) -> f64 {
    let slope = grad.dot(d);
    if slope >= 0.0 || max_step <= 0.0 {
        return 0.0;
    }
    if mode == LineSearchMode::ExactQuadratic {
        if let Some(q) = obj.curvature_along(d) {
            if q <= 0.0 {
                return max_step;
            }
            return (-slope / (2.0 * q)).clamp(0.0, max_step);
        }
    }
    bisect(
        |eta| {
            let (_, g) = obj.value_grad_unchecked(&(x + d * eta));
            g.dot(d)
        },
        max_step,
    )
}

/// Root of a nondecreasing `dphi` on `[0, hi]`, clamped to the endpoints.
pub fn bisect<F: Fn(f64) -> f64>(dphi: F, hi: f64) -> f64 {
    if dphi(0.0) >= 0.0 {
        return 0.0;
    }
    if dphi(hi) <= 0.0 {
        return hi;
    }
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..60 {
        let mid = 0.5 * (lo + up);
        if dphi(mid) > 0.0 {
            up = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + up)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SeededRng;
    use crate::objective::{LinearMap, Outer, RestrictedObjective};
    use crate::projections::project_simplex;
    use crate::sets::{DsParametrization, FeasibleSet};
    use nalgebra::DMatrix;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    struct Quad {
        h: DMatrix<f64>,
        l: DVector<f64>,
    }

    impl ParamObjective for Quad {
        fn dim(&self) -> usize {
            self.l.len()
        }
        fn value(&self, t: &DVector<f64>) -> f64 {
            0.5 * t.dot(&(&self.h * t)) + self.l.dot(t)
        }
        fn value_grad(&self, t: &DVector<f64>) -> (f64, DVector<f64>) {
            (self.value(t), &self.h * t + &self.l)
        }
    }

    fn proj(z: &DVector<f64>) -> Result<DVector<f64>> {
        project_simplex(z)
    }

    /// Minimum of a quadratic over the simplex by enumerating every support
    /// and solving its KKT system.
    fn simplex_qp_by_supports(q: &Quad) -> f64 {
        let n = q.l.len();
        let mut best = f64::INFINITY;
        for mask in 1..(1usize << n) {
            let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let m = s.len();
            let mut kkt = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (a, &i) in s.iter().enumerate() {
                for (b, &j) in s.iter().enumerate() {
                    kkt[(a, b)] = q.h[(i, j)];
                }
                kkt[(a, m)] = 1.0;
                kkt[(m, a)] = 1.0;
                rhs[a] = -q.l[i];
            }
            rhs[m] = 1.0;
            let Some(sol) = kkt.lu().solve(&rhs) else { continue };
            if sol.rows(0, m).iter().any(|&x| x < -1e-12) {
                continue;
            }
            let mut theta = DVector::zeros(n);
            for (a, &i) in s.iter().enumerate() {
                theta[i] = sol[a].max(0.0);
            }
            theta /= theta.sum();
            best = best.min(q.value(&theta));
        }
        best
    }

    #[test]
    fn anchor_search_handles_collinear_anchor() {
        let mut rng = SeededRng::new(8);
        let mut m = rng.normal_matrix(12, 4);
        // the anchor column is almost the midpoint of two others
        let mid = (m.column(1) + m.column(2)) * 0.5 + rng.normal_vector(12) * 1e-5;
        m.set_column(0, &mid);
        let b = rng.normal_vector(12);
        let q = Quad {
            h: m.transpose() * &m,
            l: -(m.transpose() * b),
        };
        let exact = simplex_qp_by_supports(&q);
        let start = v(&[1.0, 0.0, 0.0, 0.0]);
        let cfg = ApgConfig {
            max_inner: 300,
            ..ApgConfig::default()
        };
        let slice = |eta: f64, rest: &DVector<f64>| -> Result<DVector<f64>> {
            if eta >= 1.0 {
                return Ok(DVector::zeros(rest.len()));
            }
            Ok(project_simplex(&(rest / (1.0 - eta)))? * (1.0 - eta))
        };
        let joint = apg_solve(&q, proj, &cfg, &start).unwrap();
        let r = anchor_weight_search(&q, slice, 1.0, &cfg, &joint.theta).unwrap();
        assert!(r.objective <= joint.objective);
        assert!((r.objective - exact).abs() <= 1e-9 * exact.abs().max(1.0));
        assert!((r.theta.sum() - 1.0).abs() < 1e-12 && r.theta.min() >= 0.0);
    }

    #[test]
    fn vertex_minimizer_on_two_simplex() {
        // min ½‖θ − (2, −1)‖² over Δ²: minimizer (1, 0)
        let q = Quad {
            h: DMatrix::identity(2, 2),
            l: v(&[-2.0, 1.0]),
        };
        let r = apg_solve(&q, proj, &ApgConfig::default(), &v(&[0.5, 0.5])).unwrap();
        assert!((r.theta - v(&[1.0, 0.0])).norm() < 1e-8);
        assert!(r.inner_iters <= 200);
    }

    #[test]
    fn optimal_warm_start_stops_fast() {
        let q = Quad {
            h: DMatrix::identity(3, 3),
            l: v(&[-5.0, 0.0, 0.0]),
        };
        let r = apg_solve(&q, proj, &ApgConfig::default(), &v(&[1.0, 0.0, 0.0])).unwrap();
        assert!(r.converged);
        assert!(r.inner_iters <= 3);
    }

    #[test]
    fn matches_long_projected_gradient() {
        let mut rng = SeededRng::new(31);
        let a = rng.normal_matrix(30, 40);
        let b = rng.normal_vector(30);
        let obj = CompositeObjective::new(
            Outer::squared_residual(b),
            LinearMap::Dense(crate::linalg::DenseOperator::new(a)),
            None,
        )
        .unwrap();
        let set = FeasibleSet::simplex(40).unwrap();
        let anchor = set.canonical_vertex();
        let out = set.kloo(&obj.gradient(&anchor).unwrap(), 6).unwrap();
        let param = set.build_ds(&anchor, &out).unwrap();
        let restricted = RestrictedObjective::new(&obj, &param).unwrap();
        let project = |z: &DVector<f64>| param.project(z);
        let r = apg_solve(&restricted, project, &ApgConfig::default(), &param.warm_start()).unwrap();

        // oracle: plain projected gradient with the exact constant
        let m = param.matrix();
        let lip = 2.0 * (obj.map().apply_columns(&m)).norm().powi(2);
        let mut th = param.warm_start();
        for _ in 0..100_000 {
            let (_, g) = restricted.value_grad(&th);
            th = param.project(&(&th - g / lip)).unwrap();
        }
        assert!((r.objective - restricted.value(&th)).abs() < 1e-8);
    }

    #[test]
    fn never_above_warm_start() {
        let mut rng = SeededRng::new(2);
        for _ in 0..20 {
            let h = rng.normal_matrix(5, 5);
            let q = Quad {
                h: h.tr_mul(&h),
                l: rng.normal_vector(5),
            };
            let t0 = project_simplex(&rng.normal_vector(5)).unwrap();
            let cfg = ApgConfig {
                max_inner: 7,
                ..ApgConfig::default()
            };
            let r = apg_solve(&q, proj, &cfg, &t0).unwrap();
            assert!(r.objective <= q.value(&t0) + 1e-12);
        }
    }

    #[test]
    fn non_finite_is_numerical_error() {
        struct Bad;
        impl ParamObjective for Bad {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, _: &DVector<f64>) -> f64 {
                f64::NAN
            }
            fn value_grad(&self, _: &DVector<f64>) -> (f64, DVector<f64>) {
                (f64::NAN, v(&[0.0]))
            }
        }
        let r = apg_solve(&Bad, proj, &ApgConfig::default(), &v(&[1.0]));
        assert!(matches!(r, Err(KfwError::Numerical(_))));
    }

    fn sq_norm_objective(n: usize) -> CompositeObjective {
        CompositeObjective::new(
            Outer::squared_residual(DVector::zeros(n)),
            LinearMap::Identity(n),
            None,
        )
        .unwrap()
    }

    #[test]
    fn line_search_examples() {
        let obj = sq_norm_objective(2);
        let x = v(&[1.0, 0.0]);
        let g = obj.gradient(&x).unwrap();
        let d = v(&[0.0, 0.0]) - &x;
        assert_eq!(line_search(&obj, &x, &g, &d, 1.0, LineSearchMode::ExactQuadratic), 1.0);
        // φ′(0) ≥ 0: stay put
        let d = v(&[2.0, 0.0]) - &x;
        assert_eq!(line_search(&obj, &x, &g, &d, 1.0, LineSearchMode::Bisection), 0.0);
    }

    #[test]
    fn bisection_matches_closed_form() {
        let mut rng = SeededRng::new(17);
        for _ in 0..20 {
            let a = rng.normal_matrix(8, 5);
            let obj = CompositeObjective::new(
                Outer::squared_residual(rng.normal_vector(8)),
                LinearMap::Dense(crate::linalg::DenseOperator::new(a)),
                Some(rng.normal_vector(5)),
            )
            .unwrap();
            let x = rng.normal_vector(5);
            let d = rng.normal_vector(5);
            let g = obj.gradient(&x).unwrap();
            let e = line_search(&obj, &x, &g, &d, 1.0, LineSearchMode::ExactQuadratic);
            let b = line_search(&obj, &x, &g, &d, 1.0, LineSearchMode::Bisection);
            assert!((e - b).abs() < 1e-12, "{e} vs {b}");
        }
    }

    #[test]
    fn restricted_hull_warm_start_value() {
        let obj = sq_norm_objective(3);
        let w = v(&[0.2, 0.3, 0.5]);
        let p = DsParametrization::convex_hull(w.clone(), vec![v(&[1.0, 0.0, 0.0])]);
        let r = RestrictedObjective::new(&obj, &p).unwrap();
        assert_eq!(r.value(&p.warm_start()), obj.value(&w).unwrap());
    }
}
