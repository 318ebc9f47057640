//! Nonlinear least-squares engine shared by the scaling-law fitters.
//!
//! The workflow mirrors the usual power-law fitting recipe: a closed-form
//! ordinary-least-squares solution on log-transformed data seeds a grid of
//! perturbed starts, each start runs bound-constrained L-BFGS on the sum of
//! squared residuals, and the lowest-SOS solution wins. Parameter
//! uncertainty comes from a central-difference Hessian of the SOS.
//!
//! Multiplicative constants are carried in log space and exponents in
//! linear space, so every parameter vector handled here is already in that
//! mixed internal parameterization.

mod lbfgsb;
mod student_t;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lbfgsb::projected_grad_norm;
pub use student_t::{incomplete_beta, inverse_incomplete_beta, ln_gamma, t_quantile};

/// Default cap on multi-start counts.
pub const DEFAULT_MAX_STARTS: usize = 2_000;
/// Seed for stratified start subsampling.
pub const DEFAULT_START_SEED: u64 = 0x5eed;
pub const DEFAULT_GRAD_TOL: f64 = 1e-10;
pub const DEFAULT_HESSIAN_STEP: f64 = 1e-5;
/// Relative step for forward finite-difference gradients.
const FD_REL_STEP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub fn new(lo: f64, hi: f64) -> Self {
        Bound { lo, hi }
    }

    pub fn free() -> Self {
        Bound {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// A parametric model `ŷ = m(θ, x)`. Must be callable from several threads.
pub trait Model: Sync {
    fn n_params(&self) -> usize;

    fn predict(&self, theta: &[f64], input: &[f64]) -> f64;

    /// Writes `∂m/∂θ` into `out` and returns `true`, or returns `false` to
    /// fall back to finite differences.
    fn gradient(&self, _theta: &[f64], _input: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

pub struct FitProblem<'a> {
    pub model: &'a dyn Model,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub bounds: Vec<Bound>,
    pub starts: Vec<Vec<f64>>,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl<'a> FitProblem<'a> {
    pub fn new(model: &'a dyn Model, inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Self {
        let p = model.n_params();
        FitProblem {
            model,
            inputs,
            targets,
            bounds: vec![Bound::free(); p],
            starts: Vec::new(),
            grad_tol: DEFAULT_GRAD_TOL,
            max_iter: 5_000,
        }
    }

    pub fn n(&self) -> usize {
        self.targets.len()
    }

    pub fn p(&self) -> usize {
        self.model.n_params()
    }

    fn check(&self) -> Result<()> {
        let p = self.p();
        if p == 0 {
            return Err(Error::Domain("model has no parameters".into()));
        }
        if self.inputs.len() != self.targets.len() {
            return Err(Error::Domain("inputs and targets differ in length".into()));
        }
        if self.n() < p {
            return Err(Error::InsufficientData(format!(
                "{} observations for {p} parameters",
                self.n()
            )));
        }
        if self.bounds.len() != p {
            return Err(Error::Domain("one bound per parameter required".into()));
        }
        if self.starts.is_empty() {
            return Err(Error::Domain("no starting points".into()));
        }
        for start in &self.starts {
            if start.len() != p || !start.iter().zip(&self.bounds).all(|(x, b)| b.contains(*x)) {
                return Err(Error::Domain(format!("start {start:?} outside bounds")));
            }
        }
        Ok(())
    }

    pub fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        self.inputs
            .iter()
            .zip(&self.targets)
            .map(|(x, y)| y - self.model.predict(theta, x))
            .collect()
    }

    /// Sum of squared residuals.
    pub fn sos(&self, theta: &[f64]) -> f64 {
        self.residuals(theta).iter().map(|r| r * r).sum()
    }

    fn sos_and_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let p = theta.len();
        let mut dm = vec![0.0; p];
        let mut f = 0.0;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut analytic = true;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            let r = y - self.model.predict(theta, x);
            f += r * r;
            if analytic && self.model.gradient(theta, x, &mut dm) {
                for k in 0..p {
                    grad[k] -= 2.0 * r * dm[k];
                }
            } else {
                analytic = false;
            }
        }
        if !analytic {
            self.fd_gradient(theta, f, grad);
        }
        f
    }

    /// Forward differences with per-parameter relative step; steps backwards
    /// when the forward point would leave the box.
    fn fd_gradient(&self, theta: &[f64], f0: f64, grad: &mut [f64]) {
        let mut probe = theta.to_vec();
        for k in 0..theta.len() {
            let mut h = FD_REL_STEP * theta[k].abs().max(1.0);
            if theta[k] + h > self.bounds[k].hi {
                h = -h;
            }
            probe[k] = theta[k] + h;
            grad[k] = (self.sos(&probe) - f0) / h;
            probe[k] = theta[k];
        }
    }

    pub fn diagnostics(&self, theta: &[f64]) -> FitDiagnostics {
        FitDiagnostics::from_residuals(&self.targets, &self.residuals(theta), self.p())
    }
}

/// JSON has no NaN; undefined statistics travel as `null`.
pub(crate) mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub rmse: f64,
    #[serde(with = "nan_as_null")]
    pub r2: f64,
    /// `1 − (1 − R²)·(n − 1)/(n − p)`; undefined (NaN) when `n ≤ p`.
    #[serde(with = "nan_as_null")]
    pub adj_r2: f64,
    pub n: usize,
    pub p: usize,
}

impl FitDiagnostics {
    pub fn from_residuals(targets: &[f64], residuals: &[f64], p: usize) -> Self {
        let n = targets.len();
        let mean = targets.iter().sum::<f64>() / n as f64;
        let sst: f64 = targets.iter().map(|y| (y - mean).powi(2)).sum();
        let sse: f64 = residuals.iter().map(|r| r * r).sum();
        let r2 = if sst > 0.0 { 1.0 - sse / sst } else if sse == 0.0 { 1.0 } else { 0.0 };
        let adj_r2 = if n > p {
            1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - p) as f64
        } else {
            f64::NAN
        };
        FitDiagnostics {
            rmse: (sse / n as f64).sqrt(),
            r2,
            adj_r2,
            n,
            p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: Vec<f64>,
    pub sos: f64,
    pub n_starts_tried: usize,
    pub converged: bool,
    pub projected_grad_norm: f64,
    /// Iterations used by the winning start.
    pub iterations: usize,
    pub diagnostics: FitDiagnostics,
}

/// Runs bounded L-BFGS from every start and keeps the lowest-SOS converged
/// solution. Ties go to the lexicographically smallest parameter vector, so
/// the result does not depend on evaluation order.
pub fn minimize_sos(problem: &FitProblem<'_>) -> Result<FitResult> {
    problem.check()?;
    let opts = lbfgsb::Options {
        grad_tol: problem.grad_tol,
        max_iter: problem.max_iter,
        ..lbfgsb::Options::default()
    };
    let outcomes: Vec<lbfgsb::Outcome> = problem
        .starts
        .par_iter()
        .map(|start| {
            lbfgsb::minimize(
                |theta, grad| problem.sos_and_grad(theta, grad),
                start,
                &problem.bounds,
                &opts,
            )
        })
        .collect();

    let better = |a: &lbfgsb::Outcome, b: &lbfgsb::Outcome| -> bool {
        match a.f.total_cmp(&b.f) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => {
                for (x, y) in a.x.iter().zip(&b.x) {
                    match x.total_cmp(y) {
                        std::cmp::Ordering::Less => return true,
                        std::cmp::Ordering::Greater => return false,
                        std::cmp::Ordering::Equal => {}
                    }
                }
                false
            }
        }
    };

    let mut best: Option<&lbfgsb::Outcome> = None;
    let mut best_any: Option<&lbfgsb::Outcome> = None;
    for out in outcomes.iter().filter(|o| o.f.is_finite()) {
        if best_any.is_none_or(|b| better(out, b)) {
            best_any = Some(out);
        }
        if out.converged && best.is_none_or(|b| better(out, b)) {
            best = Some(out);
        }
    }
    match best {
        Some(out) => Ok(FitResult {
            theta_hat: out.x.clone(),
            sos: out.f,
            n_starts_tried: outcomes.len(),
            converged: true,
            projected_grad_norm: out.projected_grad_norm,
            iterations: out.iterations,
            diagnostics: problem.diagnostics(&out.x),
        }),
        None => {
            let (theta, sos, grad_norm) = best_any
                .map(|o| (o.x.clone(), o.f, o.projected_grad_norm))
                .unwrap_or((problem.starts[0].clone(), f64::NAN, f64::NAN));
            Err(Error::NonConvergence {
                best_theta: theta,
                best_sos: sos,
                grad_norm,
            })
        }
    }
}

/// Closed-form least squares of `ln y` on `ln x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// `ln` of the multiplicative constant.
    pub log_intercept: f64,
    /// One exponent per input column.
    pub slopes: Vec<f64>,
}

impl OlsFit {
    /// `[log_intercept, slopes...]`.
    pub fn theta(&self) -> Vec<f64> {
        std::iter::once(self.log_intercept)
            .chain(self.slopes.iter().copied())
            .collect()
    }
}

pub fn ols_loglog(inputs: &[Vec<f64>], targets: &[f64]) -> Result<OlsFit> {
    let n = targets.len();
    if inputs.len() != n || n == 0 {
        return Err(Error::InsufficientData("no observations".into()));
    }
    let k = inputs[0].len();
    if inputs.iter().any(|row| row.len() != k) {
        return Err(Error::Domain("ragged input rows".into()));
    }
    if n < k + 1 {
        return Err(Error::SingularDesign(format!("{n} rows for {} unknowns", k + 1)));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !targets.iter().copied().all(positive) || !inputs.iter().flatten().copied().all(positive) {
        return Err(Error::Domain("log-log regression needs strictly positive data".into()));
    }
    let y: Vec<f64> = targets.iter().map(|v| v.ln()).collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = (0..k)
        .map(|j| inputs.iter().map(|row| row[j].ln()).sum::<f64>() / n as f64)
        .collect();
    if k == 0 {
        return Ok(OlsFit {
            log_intercept: y_mean,
            slopes: vec![],
        });
    }
    let x = DMatrix::from_fn(n, k, |i, j| inputs[i][j].ln() - means[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= smax * 1e-12 {
        return Err(Error::SingularDesign(
            "log-transformed design is rank deficient".into(),
        ));
    }
    let beta = svd
        .solve(&yc, smax * 1e-14)
        .map_err(|e| Error::SingularDesign(e.to_string()))?;
    let slopes: Vec<f64> = beta.iter().copied().collect();
    let log_intercept = y_mean - slopes.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    Ok(OlsFit {
        log_intercept,
        slopes,
    })
}

/// Per-parameter perturbation grid around a center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub half_width: f64,
    pub n_values: usize,
}

impl GridAxis {
    /// ±3 in log space, 13 values.
    pub fn log_constant() -> Self {
        GridAxis {
            half_width: 3.0,
            n_values: 13,
        }
    }

    /// ±0.3 in linear space, 13 values.
    pub fn exponent() -> Self {
        GridAxis {
            half_width: 0.3,
            n_values: 13,
        }
    }

    pub fn single() -> Self {
        GridAxis {
            half_width: 0.0,
            n_values: 1,
        }
    }

    fn offsets(&self) -> Vec<f64> {
        if self.n_values <= 1 {
            return vec![0.0];
        }
        let m = (self.n_values - 1) as f64;
        (0..self.n_values)
            .map(|i| -self.half_width + 2.0 * self.half_width * i as f64 / m)
            .collect()
    }
}

/// Cartesian product of evenly spaced perturbations of `center`.
pub fn grid_starts(center: &[f64], axes: &[GridAxis]) -> Result<Vec<Vec<f64>>> {
    if center.len() != axes.len() {
        return Err(Error::Domain("one grid axis per parameter required".into()));
    }
    if axes.iter().any(|a| a.n_values == 0) {
        return Err(Error::Domain("grid axes need at least one value".into()));
    }
    let mut starts = vec![Vec::with_capacity(center.len())];
    for (c, axis) in center.iter().zip(axes) {
        let offsets = axis.offsets();
        starts = starts
            .into_iter()
            .flat_map(|prefix| {
                offsets.iter().map(move |o| {
                    let mut next = prefix.clone();
                    next.push(c + o);
                    next
                })
            })
            .collect();
    }
    Ok(starts)
}

/// Stratified subsample: one seeded pick per equal-width stratum of the
/// enumeration order. Returns `starts` unchanged when already within `cap`.
pub fn cap_starts(starts: Vec<Vec<f64>>, cap: usize, seed: u64) -> Vec<Vec<f64>> {
    let total = starts.len();
    if cap == 0 || total <= cap {
        return starts;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = (0..cap)
        .map(|k| {
            let lo = k * total / cap;
            let hi = ((k + 1) * total / cap).max(lo + 1);
            rng.random_range(lo..hi)
        })
        .collect();
    picks.into_iter().map(|i| starts[i].clone()).collect()
}

/// Clamps every start into the box.
pub fn clamp_starts(starts: &mut [Vec<f64>], bounds: &[Bound]) {
    for start in starts {
        for (x, b) in start.iter_mut().zip(bounds) {
            *x = x.clamp(b.lo, b.hi);
        }
    }
}

/// Reads the start cap from `TOKESCALE_MAX_STARTS`, defaulting to 2,000.
pub fn max_starts_from_env() -> usize {
    std::env::var("TOKESCALE_MAX_STARTS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_STARTS)
}

/// Central-difference Hessian with the four-point stencil
/// `(f⁺⁺ − f⁺⁻ − f⁻⁺ + f⁻⁻) / (4ε²)`, symmetric by construction.
pub fn numerical_hessian<F>(objective: F, theta: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let p = theta.len();
    let mut h = DMatrix::zeros(p, p);
    let mut probe = theta.to_vec();
    let eval = |probe: &[f64]| -> Result<f64> {
        let v = objective(probe);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(probe.to_vec()))
        }
    };
    for i in 0..p {
        for j in i..p {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                probe.copy_from_slice(theta);
                probe[i] += si * step;
                probe[j] += sj * step;
                eval(&probe)
            };
            let value = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * step * step);
            h[(i, j)] = value;
            h[(j, i)] = value;
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub std_error: f64,
}

impl ConfidenceInterval {
    pub fn from_std_error(estimate: f64, std_error: f64, t: f64, level: f64) -> Self {
        ConfidenceInterval {
            estimate,
            low: estimate - t * std_error,
            high: estimate + t * std_error,
            level,
            std_error,
        }
    }

    /// Maps a log-space interval through `exp` (no longer symmetric).
    pub fn exp(&self) -> (f64, f64, f64) {
        (self.estimate.exp(), self.low.exp(), self.high.exp())
    }
}

/// Hessian-based confidence intervals at the fitted parameters.
///
/// The residual variance is `σ̂² = SOS/(n − p)`. The SOS Hessian near the
/// optimum is `2·JᵀJ`, so the covariance is `σ̂²·(H/2)⁻¹`, which equals the
/// textbook `σ̂²·(JᵀJ)⁻¹` for linear models.
pub fn confidence_intervals(
    result: &FitResult,
    problem: &FitProblem<'_>,
    level: f64,
) -> Result<Vec<ConfidenceInterval>> {
    confidence_intervals_with_step(result, problem, level, DEFAULT_HESSIAN_STEP)
}

pub fn confidence_intervals_with_step(
    result: &FitResult,
    problem: &FitProblem<'_>,
    level: f64,
    step: f64,
) -> Result<Vec<ConfidenceInterval>> {
    let (n, p) = (problem.n(), problem.p());
    if n <= p {
        return Err(Error::Domain(format!(
            "confidence intervals need n > p (n = {n}, p = {p})"
        )));
    }
    let theta = &result.theta_hat;
    let sigma2 = problem.sos(theta) / (n - p) as f64;
    let t = t_quantile(level, (n - p) as f64)?;
    if sigma2 == 0.0 {
        return Ok(theta
            .iter()
            .map(|&x| ConfidenceInterval::from_std_error(x, 0.0, t, level))
            .collect());
    }
    let hessian = numerical_hessian(|th| problem.sos(th), theta, step)?;
    let inverse = (hessian * 0.5)
        .try_inverse()
        .ok_or_else(|| Error::UncertaintyUnavailable("singular Hessian".into()))?;
    let mut out = Vec::with_capacity(p);
    for k in 0..p {
        let var = sigma2 * inverse[(k, k)];
        if !(var.is_finite() && var >= 0.0) {
            return Err(Error::UncertaintyUnavailable(format!(
                "non-positive variance for parameter {k}"
            )));
        }
        out.push(ConfidenceInterval::from_std_error(theta[k], var.sqrt(), t, level));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Shift;
    impl Model for Shift {
        fn n_params(&self) -> usize {
            1
        }
        fn predict(&self, theta: &[f64], _input: &[f64]) -> f64 {
            theta[0]
        }
    }

    struct Line;
    impl Model for Line {
        fn n_params(&self) -> usize {
            2
        }
        fn predict(&self, theta: &[f64], x: &[f64]) -> f64 {
            theta[0] + theta[1] * x[0]
        }
        fn gradient(&self, _theta: &[f64], x: &[f64], out: &mut [f64]) -> bool {
            out[0] = 1.0;
            out[1] = x[0];
            true
        }
    }

    #[test]
    fn linear_residual_unbounded() {
        // r(θ) = 3 − θ, start 0
        let mut problem = FitProblem::new(&Shift, vec![vec![]], vec![3.0]);
        problem.starts = vec![vec![0.0]];
        let fit = minimize_sos(&problem).unwrap();
        assert!((fit.theta_hat[0] - 3.0).abs() < 1e-6);
        assert!(fit.sos < 1e-12);
    }

    #[test]
    fn linear_residual_at_bound() {
        let mut problem = FitProblem::new(&Shift, vec![vec![]], vec![3.0]);
        problem.starts = vec![vec![0.0]];
        problem.bounds = vec![Bound::new(f64::NEG_INFINITY, 2.0)];
        let fit = minimize_sos(&problem).unwrap();
        assert_eq!(fit.theta_hat, vec![2.0]);
        assert!(fit.converged);
        assert_eq!(fit.projected_grad_norm, 0.0);
    }

    #[test]
    fn start_outside_bounds_is_rejected() {
        let mut problem = FitProblem::new(&Shift, vec![vec![]], vec![3.0]);
        problem.starts = vec![vec![5.0]];
        problem.bounds = vec![Bound::new(0.0, 2.0)];
        assert!(matches!(minimize_sos(&problem), Err(Error::Domain(_))));
    }

    #[test]
    fn ols_exact_power_law() {
        let xs: Vec<Vec<f64>> = (1..=8).map(|i| vec![i as f64 * 1.7]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x[0].powf(0.5)).collect();
        let fit = ols_loglog(&xs, &ys).unwrap();
        assert!((fit.slopes[0] - 0.5).abs() < 1e-12);
        assert!((fit.log_intercept - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ols_constant_targets() {
        let xs: Vec<Vec<f64>> = (1..=5).map(|i| vec![i as f64]).collect();
        let fit = ols_loglog(&xs, &[7.0; 5]).unwrap();
        assert!(fit.slopes[0].abs() < 1e-12);
        assert!((fit.log_intercept - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ols_errors() {
        let xs = vec![vec![1.0], vec![2.0], vec![-3.0]];
        assert!(matches!(ols_loglog(&xs, &[1.0, 2.0, 3.0]), Err(Error::Domain(_))));
        let xs = vec![vec![2.0], vec![2.0], vec![2.0]];
        assert!(matches!(ols_loglog(&xs, &[1.0, 2.0, 3.0]), Err(Error::SingularDesign(_))));
    }

    #[test]
    fn grid_sizes() {
        let four = grid_starts(
            &[0.0; 4],
            &[GridAxis::log_constant(), GridAxis::log_constant(), GridAxis::exponent(), GridAxis::exponent()],
        )
        .unwrap();
        assert_eq!(four.len(), 28_561);
        let two = grid_starts(&[1.0, 2.0], &[GridAxis::log_constant(), GridAxis::exponent()]).unwrap();
        assert_eq!(two.len(), 169);
        assert!(two.iter().any(|s| s == &vec![1.0, 2.0]));
        assert!(two.iter().any(|s| (s[0] + 2.0).abs() < 1e-12 && (s[1] - 1.7).abs() < 1e-12));
        let one = grid_starts(&[1.0, 2.0, 3.0], &[GridAxis::single(); 3]).unwrap();
        assert_eq!(one, vec![vec![1.0, 2.0, 3.0]]);
    }

    #[test]
    fn capped_starts_are_deterministic_and_spread() {
        let starts = grid_starts(&[0.0; 4], &[GridAxis::log_constant(); 4]).unwrap();
        let a = cap_starts(starts.clone(), 2_000, 7);
        let b = cap_starts(starts.clone(), 2_000, 7);
        assert_eq!(a.len(), 2_000);
        assert_eq!(a, b);
        let firsts: std::collections::BTreeSet<i64> = a.iter().map(|s| (s[0] * 10.0).round() as i64).collect();
        assert_eq!(firsts.len(), 13);
    }

    #[test]
    fn hessian_of_quadratic() {
        let h = numerical_hessian(|t| t[0] * t[0] + 3.0 * t[1] * t[1], &[0.7, -1.3], 1e-5).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-5);
        assert!((h[(1, 1)] - 6.0).abs() < 1e-5);
        assert!(h[(0, 1)].abs() < 1e-5);
        assert_eq!(h[(0, 1)], h[(1, 0)]);
    }

    #[test]
    fn hessian_of_bilinear() {
        let h = numerical_hessian(|t| t[0] * t[1], &[2.0, 5.0], 1e-5).unwrap();
        assert!((h[(0, 1)] - 1.0).abs() < 1e-5);
        assert!(h[(0, 0)].abs() < 1e-5 && h[(1, 1)].abs() < 1e-5);
    }

    #[test]
    fn hessian_of_least_squares_is_twice_gram() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 0.5 * x + (x * 7.0).sin() * 0.1).collect();
        let sos = |t: &[f64]| xs.iter().zip(&ys).map(|(x, y)| (y - t[0] - t[1] * x).powi(2)).sum::<f64>();
        let h = numerical_hessian(sos, &[1.0, 0.5], 1e-5).unwrap();
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let gram = [[n, sx], [sx, sxx]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - 2.0 * gram[i][j]).abs() < 1e-3 * (1.0 + gram[i][j]), "{i}{j}");
            }
        }
    }

    #[test]
    fn hessian_rejects_non_finite() {
        let r = numerical_hessian(|t| if t[0] > 0.0 { f64::NAN } else { 0.0 }, &[0.0], 1e-5);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn zero_residuals_give_zero_width() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 + 3.0 * x[0]).collect();
        let mut problem = FitProblem::new(&Line, xs, ys);
        problem.starts = vec![vec![0.0, 0.0]];
        let fit = minimize_sos(&problem).unwrap();
        let mut exact = fit.clone();
        exact.theta_hat = vec![2.0, 3.0];
        let cis = confidence_intervals(&exact, &problem, 0.95).unwrap();
        for ci in cis {
            assert_eq!(ci.low, ci.high);
            assert_eq!(ci.std_error, 0.0);
        }
    }

    #[test]
    fn intervals_need_more_points_than_parameters() {
        let mut problem = FitProblem::new(&Line, vec![vec![0.0], vec![1.0]], vec![1.0, 2.0]);
        problem.starts = vec![vec![0.0, 0.0]];
        let fit = minimize_sos(&problem).unwrap();
        assert!(matches!(confidence_intervals(&fit, &problem, 0.95), Err(Error::Domain(_))));
    }

    #[test]
    fn diagnostics_ordering() {
        let d = FitDiagnostics::from_residuals(&[1.0, 2.0, 3.0, 4.0, 6.0], &[0.1, -0.2, 0.1, 0.05, -0.1], 2);
        assert!(d.adj_r2 <= d.r2 && d.r2 <= 1.0 && d.rmse >= 0.0);
    }

    #[test]
    fn start_order_does_not_change_the_result() {
        let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 0.3 * x[0] + (x[0] * 3.1).cos() * 0.05).collect();
        let starts = grid_starts(&[0.0, 0.0], &[GridAxis::log_constant(), GridAxis::exponent()]).unwrap();
        let mut problem = FitProblem::new(&Line, xs.clone(), ys.clone());
        problem.starts = starts.clone();
        let a = minimize_sos(&problem).unwrap();
        let mut reversed = starts;
        reversed.reverse();
        problem.starts = reversed;
        let b = minimize_sos(&problem).unwrap();
        assert_eq!(a.theta_hat, b.theta_hat);
        assert_eq!(a.sos, b.sos);
    }
}
