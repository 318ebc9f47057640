//! Limited-memory BFGS with gradient projection onto box bounds.
//!
//! Variables sitting on a bound whose gradient pushes outward are frozen for
//! the step; the two-loop recursion runs on the remaining free subspace and
//! the step is projected back into the box before the Armijo test.

use std::collections::VecDeque;

use super::Bound;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Converged once the infinity norm of the projected gradient is below this.
    pub grad_tol: f64,
    /// Relative objective change treated as stagnation at machine precision.
    pub f_tol: f64,
    pub max_iter: usize,
    pub memory: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            grad_tol: 1e-10,
            f_tol: 1e-15,
            max_iter: 5_000,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub projected_grad_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn project(x: &mut [f64], bounds: &[Bound]) {
    for (xi, b) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(b.lo, b.hi);
    }
}

/// `‖P(x − g) − x‖∞`, zero exactly at a KKT point of the box problem.
pub fn projected_grad_norm(x: &[f64], g: &[f64], bounds: &[Bound]) -> f64 {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((&xi, &gi), b)| ((xi - gi).clamp(b.lo, b.hi) - xi).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn is_active(x: f64, g: f64, b: &Bound) -> bool {
    (x <= b.lo && g > 0.0) || (x >= b.hi && g < 0.0)
}

/// Minimizes `objective` (which returns `f` and writes the gradient) from `x0`.
pub fn minimize<F>(objective: F, x0: &[f64], bounds: &[Bound], opts: &Options) -> Outcome
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, bounds);
    let mut g = vec![0.0; n];
    let mut f = objective(&x, &mut g);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iterations = 0;
    let mut stalled = false;

    if !f.is_finite() {
        return Outcome {
            projected_grad_norm: f64::INFINITY,
            x,
            f,
            converged: false,
            iterations,
        };
    }

    while iterations < opts.max_iter {
        let pg = projected_grad_norm(&x, &g, bounds);
        if pg <= opts.grad_tol {
            return Outcome {
                x,
                f,
                projected_grad_norm: pg,
                converged: true,
                iterations,
            };
        }
        iterations += 1;

        let free: Vec<bool> = (0..n).map(|i| !is_active(x[i], g[i], &bounds[i])).collect();

        // two-loop recursion on the free subspace
        let mut d: Vec<f64> = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * (0..n).filter(|&i| free[i]).map(|i| s[i] * d[i]).sum::<f64>();
            for i in 0..n {
                if free[i] {
                    d[i] -= a * y[i];
                }
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let sy = dot(s, y);
            let yy = dot(y, y);
            if sy > 0.0 && yy > 0.0 {
                let scale = sy / yy;
                d.iter_mut().for_each(|di| *di *= scale);
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * (0..n).filter(|&i| free[i]).map(|i| y[i] * d[i]).sum::<f64>();
            for i in 0..n {
                if free[i] {
                    d[i] += s[i] * (a - b);
                }
            }
        }
        if dot(&d, &g) >= 0.0 {
            history.clear();
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
        }

        let mut step = if history.is_empty() {
            let norm = dot(&d, &d).sqrt();
            if norm > 1.0 {
                1.0 / norm
            } else {
                1.0
            }
        } else {
            1.0
        };

        // backtracking Armijo search along the projected path
        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..80 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            project(&mut x_new, bounds);
            let moved: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
            if (0..n).all(|i| x_new[i] == x[i]) {
                break;
            }
            f_new = objective(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= f + 1e-4 * moved {
                accepted = true;
                break;
            }
            step *= 0.5;
        }

        if !accepted {
            if history.is_empty() {
                // steepest descent cannot improve: numerical floor
                stalled = true;
                break;
            }
            history.clear();
            continue;
        }

        let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y) {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let f_old = f;
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;

        let scale = f_old.abs().max(f.abs()).max(f64::MIN_POSITIVE);
        if (f_old - f) <= opts.f_tol * scale {
            stalled = true;
            break;
        }
    }

    let pg = projected_grad_norm(&x, &g, bounds);
    Outcome {
        converged: pg <= opts.grad_tol || stalled,
        x,
        f,
        projected_grad_norm: pg,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unbounded(n: usize) -> Vec<Bound> {
        vec![Bound::free(); n]
    }

    #[test]
    fn rosenbrock() {
        let obj = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let out = minimize(obj, &[-1.2, 1.0], &unbounded(2), &Options::default());
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8, "{:?}", out.x);
    }

    #[test]
    fn active_bound() {
        let obj = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 2.0 * (x[1] + 1.0);
            (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2)
        };
        let bounds = [Bound::new(f64::NEG_INFINITY, 2.0), Bound::new(0.0, 5.0)];
        let out = minimize(obj, &[0.0, 4.0], &bounds, &Options::default());
        assert!(out.converged);
        assert_eq!(out.x, vec![2.0, 0.0]);
        assert_eq!(out.projected_grad_norm, 0.0);
    }
}
