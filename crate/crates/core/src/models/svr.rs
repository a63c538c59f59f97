//! Linear ε-insensitive support vector regression.
//!
//! The dual is solved by pairwise coordinate updates with the equality
//! constraint kept exact: with `β_i = α_i - α_i*` the problem is
//!
//! ```text
//! min  ½‖Σ β_i x_i‖² − Σ y_i β_i + ε Σ |β_i|   s.t.  Σ β_i = 0,  |β_i| ≤ C
//! ```
//!
//! Each step takes the point with the largest feasible-bias lower end,
//! pairs it with the violating partner of largest second-order gain, and
//! minimizes the (piecewise quadratic) dual exactly along `e_i − e_j`. The weight vector
//! `w = Σ β_i x_i` is maintained explicitly because the kernel is linear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::preprocess::{Scaler, TargetScaler};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// Maximal KKT violation accepted at termination.
    pub tol: f64,
    /// Cap on passes; one pass is `n` pairwise updates.
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-4,
            max_iter: 100_000,
        }
    }
}

impl SvrParams {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.epsilon > 0.0 && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "SVR needs C > 0, epsilon > 0, tol > 0 (got C={}, epsilon={}, tol={})",
                self.c, self.epsilon, self.tol
            )));
        }
        Ok(())
    }
}

/// Hyperplane in the (already transformed) input space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvr<T> {
    pub w: Vec<T>,
    pub b: T,
    pub epsilon: T,
    pub c: T,
}

impl<T: Scalar> LinearSvr<T> {
    pub fn decision(&self, x: &[T]) -> Result<T> {
        if x.len() != self.w.len() {
            return Err(Error::ShapeMismatch {
                expected: self.w.len(),
                got: x.len(),
            });
        }
        Ok(dot(&self.w, x) + self.b)
    }
}

/// Diagnostics of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrTrace {
    pub iterations: usize,
    pub kkt_violation: f64,
    pub primal_objective: f64,
    /// Primal objective plus dual objective; zero at the optimum.
    pub duality_gap: f64,
    /// Dual objective (minimization form) after every update.
    pub dual_objective: Vec<f64>,
}

/// ½‖w‖² + C Σ max(0, |y_i − ⟨w, x_i⟩ − b| − ε).
pub fn svr_objective<T: Scalar>(model: &LinearSvr<T>, x: &Matrix<T>, y: &[T]) -> Result<T> {
    if x.rows() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if x.cols() != model.w.len() {
        return Err(Error::ShapeMismatch {
            expected: model.w.len(),
            got: x.cols(),
        });
    }
    let half = T::of(0.5);
    let mut slack = T::zero();
    for (row, &yi) in x.iter_rows().zip(y) {
        let r = (yi - dot(&model.w, row) - model.b).abs() - model.epsilon;
        slack = slack + r.max(T::zero());
    }
    Ok(half * dot(&model.w, &model.w) + model.c * slack)
}

/// Bias minimizing the primal for fixed `w`: a median of `{u_i ± ε}`,
/// clamped toward `hint` inside the optimal interval.
fn optimal_bias<T: Scalar>(residuals: &[T], eps: T, hint: T) -> T {
    let n = residuals.len();
    let mut pts: Vec<T> = residuals
        .iter()
        .flat_map(|&u| [u - eps, u + eps])
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let lo = pts[n - 1];
    let hi = pts[n];
    hint.max(lo).min(hi)
}

/// Minimizes `½k t² + g t + ε|t + a| + ε|t − c|` over `[lo, hi]` (which contains 0).
fn line_search<T: Scalar>(k: T, g: T, eps: T, a: T, c: T, lo: T, hi: T) -> T {
    let phi = |t: T| T::of(0.5) * k * t * t + g * t + eps * (t + a).abs() + eps * (t - c).abs();
    let mut knots = vec![lo, hi];
    for kn in [-a, c] {
        if kn > lo && kn < hi {
            knots.push(kn);
        }
    }
    knots.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let mut best_t = T::zero();
    let mut best = phi(T::zero());
    let mut consider = |t: T| {
        let v = phi(t);
        if v < best {
            best = v;
            best_t = t;
        }
    };
    for w in knots.windows(2) {
        let (s, e) = (w[0], w[1]);
        consider(s);
        consider(e);
        if k > T::zero() {
            let mid = (s + e) / T::of(2.0);
            let s1 = if mid + a >= T::zero() { T::one() } else { -T::one() };
            let s2 = if mid - c >= T::zero() { T::one() } else { -T::one() };
            let t = -(g + eps * (s1 + s2)) / k;
            consider(t.max(s).min(e));
        }
    }
    best_t
}

/// Trains the hyperplane on the given inputs as they are.
pub fn train_svr<T: Scalar>(x: &Matrix<T>, y: &[T], params: &SvrParams) -> Result<(LinearSvr<T>, SvrTrace)> {
    params.validate()?;
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: y.len() });
    }
    if n < 2 {
        return Err(Error::TooShort { required: 2, got: n });
    }
    let c = T::of(params.c);
    let eps = T::of(params.epsilon);
    let tol = T::of(params.tol);
    let half = T::of(0.5);
    // Relative slack for "at bound" tests.
    let bound_tol = c * T::of(1e-12);

    let mut beta = vec![T::zero(); n];
    let mut w = vec![T::zero(); p];
    let mut f = vec![T::zero(); n];
    let mut dual = T::zero();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut violation;

    let sq: Vec<T> = x.iter_rows().map(|r| dot(r, r)).collect();
    let mut ki = vec![T::zero(); n];
    let mut his = vec![T::zero(); n];
    let tiny = T::of(1e-12);
    let shrink_every = n.min(1000);
    let mut active: Vec<usize> = (0..n).collect();
    let mut since_shrink = 0;

    loop {
        // Feasible bias interval of every active point; the largest lower
        // end and the smallest upper end define the violation.
        let (mut i_up, mut lo_max) = (usize::MAX, T::neg_infinity());
        let mut hi_min = T::infinity();
        for &r in &active {
            let (lo, hi) = feasible_bias(beta[r], y[r] - f[r], eps, c, bound_tol);
            if lo > lo_max {
                lo_max = lo;
                i_up = r;
            }
            hi_min = hi_min.min(hi);
            his[r] = hi;
        }
        violation = lo_max - hi_min;
        if violation <= tol || i_up == usize::MAX {
            if active.len() == n {
                break;
            }
            for (r, fr) in f.iter_mut().enumerate() {
                *fr = dot(&w, x.row(r));
            }
            active = (0..n).collect();
            since_shrink = 0;
            continue;
        }
        if iterations >= params.max_iter.saturating_mul(n) {
            for (r, fr) in f.iter_mut().enumerate() {
                *fr = dot(&w, x.row(r));
            }
            let (lo_max, hi_min) = bias_interval(&beta, &f, y, eps, c);
            let model = finish(&w, &f, y, eps, c, lo_max, hi_min);
            let objective = svr_objective(&model, x, y)?;
            let mut best: Vec<f64> = model.w.iter().map(|v| v.to_f64_lossy()).collect();
            best.push(model.b.to_f64_lossy());
            return Err(Error::NotConverged {
                iterations,
                violation: (lo_max - hi_min).to_f64_lossy(),
                objective: objective.to_f64_lossy(),
                best,
            });
        }
        if since_shrink >= shrink_every {
            since_shrink = 0;
            active.retain(|&r| {
                let (lo, hi) = feasible_bias(beta[r], y[r] - f[r], eps, c, bound_tol);
                let at_bound = beta[r].abs() >= c - bound_tol || beta[r].abs() <= bound_tol;
                !(at_bound && lo < hi_min && hi > lo_max) || r == i_up
            });
        }
        let i = i_up;
        let xi = x.row(i);
        for &r in &active {
            ki[r] = dot(xi, x.row(r));
        }
        // Second-order choice of the partner: largest predicted decrease
        // (lo_i - hi_j)² / ‖x_i - x_j‖² among violating partners.
        let mut j = usize::MAX;
        let mut gain = T::neg_infinity();
        for &r in &active {
            let b = lo_max - his[r];
            if r == i || b <= T::zero() {
                continue;
            }
            let a = (sq[i] + sq[r] - ki[r] - ki[r]).max(tiny);
            let g = b * b / a;
            if g > gain {
                gain = g;
                j = r;
            }
        }
        if j == usize::MAX {
            break;
        }
        let xj = x.row(j);
        let k = (sq[i] + sq[j] - ki[j] - ki[j]).max(T::zero());
        let g = (y[j] - f[j]) - (y[i] - f[i]);
        let lo = (-c - beta[i]).max(beta[j] - c);
        let hi = (c - beta[i]).min(beta[j] + c);
        let t = line_search(k, g, eps, beta[i], beta[j], lo, hi);
        iterations += 1;
        since_shrink += 1;
        if t == T::zero() {
            // No descent along a violating pair: numerically converged.
            break;
        }
        let before = eps * (beta[i].abs() + beta[j].abs());
        beta[i] = beta[i] + t;
        beta[j] = beta[j] - t;
        let after = eps * (beta[i].abs() + beta[j].abs());
        dual = dual + half * k * t * t + g * t + after - before;
        history.push(dual.to_f64_lossy());
        for (wk, (&a, &b)) in w.iter_mut().zip(xi.iter().zip(xj)) {
            *wk = *wk + t * (a - b);
        }
        let refresh = iterations % 1000 == 0;
        for &r in &active {
            let row = x.row(r);
            f[r] = if refresh {
                dot(&w, row)
            } else {
                f[r] + t * (ki[r] - dot(xj, row))
            };
        }
    }

    for (r, fr) in f.iter_mut().enumerate() {
        *fr = dot(&w, x.row(r));
    }
    let (lo_max, hi_min) = bias_interval(&beta, &f, y, eps, c);
    violation = lo_max - hi_min;
    let model = finish(&w, &f, y, eps, c, lo_max, hi_min);
    let primal = svr_objective(&model, x, y)?;
    let trace = SvrTrace {
        iterations,
        kkt_violation: violation.max(T::zero()).to_f64_lossy(),
        primal_objective: primal.to_f64_lossy(),
        duality_gap: (primal + dual).to_f64_lossy(),
        dual_objective: history,
    };
    Ok((model, trace))
}

fn bias_interval<T: Scalar>(beta: &[T], f: &[T], y: &[T], eps: T, c: T) -> (T, T) {
    let bound_tol = c * T::of(1e-12);
    let mut lo_max = T::neg_infinity();
    let mut hi_min = T::infinity();
    for i in 0..beta.len() {
        let (lo, hi) = feasible_bias(beta[i], y[i] - f[i], eps, c, bound_tol);
        lo_max = lo_max.max(lo);
        hi_min = hi_min.min(hi);
    }
    (lo_max, hi_min)
}

/// Interval of biases for which point `i` satisfies its KKT condition,
/// given `u = y_i - <w, x_i>`.
fn feasible_bias<T: Scalar>(beta: T, u: T, eps: T, c: T, bound_tol: T) -> (T, T) {
    if beta >= c - bound_tol {
        (T::neg_infinity(), u - eps)
    } else if beta > bound_tol {
        (u - eps, u - eps)
    } else if beta >= -bound_tol {
        (u - eps, u + eps)
    } else if beta > -c + bound_tol {
        (u + eps, u + eps)
    } else {
        (u + eps, T::infinity())
    }
}

fn finish<T: Scalar>(w: &[T], f: &[T], y: &[T], eps: T, c: T, lo_max: T, hi_min: T) -> LinearSvr<T> {
    let hint = match (lo_max.is_finite(), hi_min.is_finite()) {
        (true, true) => (lo_max + hi_min) / T::of(2.0),
        (true, false) => lo_max,
        (false, true) => hi_min,
        (false, false) => T::zero(),
    };
    let residuals: Vec<T> = y.iter().zip(f).map(|(&a, &b)| a - b).collect();
    LinearSvr {
        w: w.to_vec(),
        b: optimal_bias(&residuals, eps, hint),
        epsilon: eps,
        c,
    }
}

/// Complete SVR regressor: input standardization, target standardization
/// and the hyperplane fitted in the standardized space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel<T> {
    pub svr: LinearSvr<T>,
    pub scaler: Scaler<T>,
    pub target: TargetScaler<T>,
    pub params: SvrParams,
}

impl<T: Scalar> SvrModel<T> {
    pub fn fit(x: &Matrix<T>, y: &[T], params: &SvrParams) -> Result<(Self, SvrTrace)> {
        let scaler = Scaler::fit(x)?;
        let target = TargetScaler::fit(y)?;
        let xs = scaler.transform(x)?;
        let ys: Vec<T> = y.iter().map(|&v| target.forward(v)).collect();
        let (svr, trace) = train_svr(&xs, &ys, params)?;
        Ok((
            SvrModel {
                svr,
                scaler,
                target,
                params: *params,
            },
            trace,
        ))
    }

    pub fn predict(&self, x: &[T]) -> Result<T> {
        predict_svr(self, x)
    }
}

/// `⟨w, scaled x⟩ + b`, mapped back to target units.
pub fn predict_svr<T: Scalar>(model: &SvrModel<T>, x: &[T]) -> Result<T> {
    let z = model.scaler.transform_row(x)?;
    Ok(model.target.inverse(model.svr.decision(&z)?))
}
