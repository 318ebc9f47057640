//! A custom model through the bounded multi-start fitter, with Hessian-based intervals.
//!
//! cargo run --example uncertainty

use tokescale::optimizer::{confidence_intervals, grid_starts, minimize_sos, Bound, FitProblem, GridAxis, Model};

/// `y = a·exp(−k·x) + c`.
struct Decay;

impl Model for Decay {
    fn n_params(&self) -> usize {
        3
    }
    fn predict(&self, theta: &[f64], x: &[f64]) -> f64 {
        theta[0] * (-theta[1] * x[0]).exp() + theta[2]
    }
}

fn main() -> tokescale::Result<()> {
    let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
    let wiggle = [0.012, -0.008, 0.004, -0.015, 0.009, 0.001, -0.006, 0.011, -0.002, 0.007];
    let ys: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| 2.0 * (-0.8 * x).exp() + 0.5 + wiggle[i % wiggle.len()])
        .collect();

    let model = Decay;
    let mut problem = FitProblem::new(&model, xs.iter().map(|x| vec![*x]).collect(), ys);
    problem.bounds = vec![Bound::new(0.0, 10.0), Bound::new(0.0, 5.0), Bound::new(-5.0, 5.0)];
    problem.starts = grid_starts(&[1.0, 1.0, 0.0], &[GridAxis::exponent(), GridAxis::exponent(), GridAxis::exponent()])?;
    let fit = minimize_sos(&problem)?;
    let ci = confidence_intervals(&fit, &problem, 0.95)?;
    println!("{} starts, sos {:.3e}, rmse {:.4}", fit.n_starts_tried, fit.sos, fit.diagnostics.rmse);
    for (name, c) in ["a", "k", "c"].iter().zip(&ci) {
        println!("{name} = {:.4}  95% [{:.4}, {:.4}]  se {:.4}", c.estimate, c.low, c.high, c.std_error);
    }
    Ok(())
}
