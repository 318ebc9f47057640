//! Scaling Law I: compute-optimal bytes `B* = B₀·C^α·T^β`.
//!
//! Parameters and `N* = C·T/(6·B*)` follow by closing the approximate
//! compute identity, so `N₀ = 1/(6·B₀)` is derived rather than fitted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isoflop::Optimum;
use crate::optimizer::{
    cap_starts, clamp_starts, confidence_intervals, grid_starts, minimize_sos, ols_loglog, Bound,
    ConfidenceInterval, FitDiagnostics, FitProblem, GridAxis, Model, DEFAULT_MAX_STARTS,
    DEFAULT_START_SEED,
};
use crate::records::{sorted_distinct, Family};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawOneIntervals {
    /// Symmetric in `ln B₀`; `exp`-mapped bounds are in `b0_exp`.
    pub log_b0: ConfidenceInterval,
    pub b0_exp: (f64, f64),
    pub alpha: ConfidenceInterval,
    pub beta: Option<ConfidenceInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawOneParams {
    pub family: Family,
    #[serde(rename = "B0")]
    pub b0: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
    #[serde(default)]
    pub intervals: Option<LawOneIntervals>,
    #[serde(default)]
    pub diagnostics: Option<FitDiagnostics>,
}

impl LawOneParams {
    pub fn new(family: Family, b0: f64, alpha: f64, beta: f64) -> Self {
        LawOneParams {
            family,
            b0,
            alpha,
            beta,
            n0: 1.0 / (6.0 * b0),
            intervals: None,
            diagnostics: None,
        }
    }

    /// Published latent-family fit.
    pub fn latent_published() -> Self {
        Self::new(Family::LatentEntropy, 17.5, 0.465, 0.471)
    }

    /// Published subword-family fit.
    pub fn subword_published() -> Self {
        Self::new(Family::Subword, 2.8, 0.501, 0.446)
    }

    /// `B* = B₀·C^α·T^β`.
    pub fn predict_data(&self, budget: f64, compression: f64) -> f64 {
        self.b0 * budget.powf(self.alpha) * compression.powf(self.beta)
    }

    /// `N* = N₀·C^(1−α)·T^(1−β)`.
    pub fn predict_params(&self, budget: f64, compression: f64) -> f64 {
        self.n0 * budget.powf(1.0 - self.alpha) * compression.powf(1.0 - self.beta)
    }

    /// `ρ* = (B₀/N₀)·C^(2α−1)·T^(2β−1)`.
    pub fn predict_bpp(&self, budget: f64, compression: f64) -> f64 {
        self.b0 / self.n0
            * budget.powf(2.0 * self.alpha - 1.0)
            * compression.powf(2.0 * self.beta - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawOneOptions {
    pub max_starts: usize,
    pub seed: u64,
    pub level: f64,
    /// Pins `β` instead of fitting it.
    pub fixed_beta: Option<f64>,
}

impl Default for LawOneOptions {
    fn default() -> Self {
        LawOneOptions {
            max_starts: DEFAULT_MAX_STARTS,
            seed: DEFAULT_START_SEED,
            level: 0.95,
            fixed_beta: None,
        }
    }
}

/// `ln B = θ₀ + θ₁·ln C + θ₂·ln T`, input `[ln C, ln T]`.
struct LogPowerLaw;

impl Model for LogPowerLaw {
    fn n_params(&self) -> usize {
        3
    }

    fn predict(&self, theta: &[f64], x: &[f64]) -> f64 {
        theta[0] + theta[1] * x[0] + theta[2] * x[1]
    }

    fn gradient(&self, _theta: &[f64], x: &[f64], out: &mut [f64]) -> bool {
        out[0] = 1.0;
        out[1] = x[0];
        out[2] = x[1];
        true
    }
}

/// `ln B − β·ln T = θ₀ + θ₁·ln C` with `β` pinned.
struct PinnedBeta;

impl Model for PinnedBeta {
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

const LOG_B0_BOUND: Bound = Bound { lo: -60.0, hi: 60.0 };
const EXPONENT_BOUND: Bound = Bound { lo: -3.0, hi: 3.0 };

fn check_span(optima: &[Optimum]) -> Result<()> {
    if optima.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "Law I needs at least 4 optima, got {}",
            optima.len()
        )));
    }
    let budgets = sorted_distinct(optima.iter().map(|o| o.budget));
    let compressions = sorted_distinct(optima.iter().map(|o| o.compression));
    if budgets.len() < 2 || compressions.len() < 2 {
        return Err(Error::InsufficientVariation(format!(
            "optima span {} budget(s) and {} compression(s); need at least 2 of each",
            budgets.len(),
            compressions.len()
        )));
    }
    if optima
        .iter()
        .any(|o| !(o.budget > 0.0 && o.compression > 0.0 && o.opt_bytes > 0.0))
    {
        return Err(Error::Domain("optima must be positive".into()));
    }
    Ok(())
}

fn starts_around(center: &[f64], axes: &[GridAxis], bounds: &[Bound], opts: &LawOneOptions) -> Result<Vec<Vec<f64>>> {
    let mut starts = cap_starts(grid_starts(center, axes)?, opts.max_starts, opts.seed);
    if !starts.iter().any(|s| s == center) {
        starts.push(center.to_vec());
    }
    clamp_starts(&mut starts, bounds);
    Ok(starts)
}

/// Fits `(B₀, α, β)` by least squares on `ln B*`.
pub fn fit_law1(optima: &[Optimum], family: Family, opts: &LawOneOptions) -> Result<LawOneParams> {
    check_span(optima)?;
    let ln_c: Vec<f64> = optima.iter().map(|o| o.budget.ln()).collect();
    let ln_t: Vec<f64> = optima.iter().map(|o| o.compression.ln()).collect();

    if let Some(beta) = opts.fixed_beta {
        let inputs: Vec<Vec<f64>> = ln_c.iter().map(|&c| vec![c]).collect();
        let targets: Vec<f64> = optima
            .iter()
            .zip(&ln_t)
            .map(|(o, t)| o.opt_bytes.ln() - beta * t)
            .collect();
        let ols = ols_loglog(
            &optima.iter().map(|o| vec![o.budget]).collect::<Vec<_>>(),
            &targets.iter().map(|y| y.exp()).collect::<Vec<_>>(),
        )?;
        let mut problem = FitProblem::new(&PinnedBeta, inputs, targets);
        problem.bounds = vec![LOG_B0_BOUND, EXPONENT_BOUND];
        problem.starts = starts_around(
            &ols.theta(),
            &[GridAxis::log_constant(), GridAxis::exponent()],
            &problem.bounds,
            opts,
        )?;
        let fit = minimize_sos(&problem)?;
        let mut params = LawOneParams::new(family, fit.theta_hat[0].exp(), fit.theta_hat[1], beta);
        params.diagnostics = Some(fit.diagnostics);
        if let Ok(ci) = confidence_intervals(&fit, &problem, opts.level) {
            params.intervals = Some(LawOneIntervals {
                b0_exp: (ci[0].low.exp(), ci[0].high.exp()),
                log_b0: ci[0],
                alpha: ci[1],
                beta: None,
            });
        }
        return Ok(params);
    }

    let raw_inputs: Vec<Vec<f64>> = optima.iter().map(|o| vec![o.budget, o.compression]).collect();
    let raw_targets: Vec<f64> = optima.iter().map(|o| o.opt_bytes).collect();
    let ols = ols_loglog(&raw_inputs, &raw_targets)?;

    let inputs: Vec<Vec<f64>> = ln_c.iter().zip(&ln_t).map(|(&c, &t)| vec![c, t]).collect();
    let targets: Vec<f64> = raw_targets.iter().map(|b| b.ln()).collect();
    let mut problem = FitProblem::new(&LogPowerLaw, inputs, targets);
    problem.bounds = vec![LOG_B0_BOUND, EXPONENT_BOUND, EXPONENT_BOUND];
    problem.starts = starts_around(
        &ols.theta(),
        &[GridAxis::log_constant(), GridAxis::exponent(), GridAxis::exponent()],
        &problem.bounds,
        opts,
    )?;
    let fit = minimize_sos(&problem)?;
    let theta = &fit.theta_hat;
    let mut params = LawOneParams::new(family, theta[0].exp(), theta[1], theta[2]);
    params.diagnostics = Some(fit.diagnostics);
    if let Ok(ci) = confidence_intervals(&fit, &problem, opts.level) {
        params.intervals = Some(LawOneIntervals {
            b0_exp: (ci[0].low.exp(), ci[0].high.exp()),
            log_b0: ci[0],
            alpha: ci[1],
            beta: Some(ci[2]),
        });
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isoflop::OptimumSource;
    use proptest::prelude::*;

    const BUDGETS: [f64; 6] = [5e18, 2e19, 1e20, 2e20, 1e21, 2e21];
    const COMPRESSIONS: [f64; 6] = [1.0, 2.0, 4.0, 6.0, 8.0, 12.0];

    fn optima_from(law: &LawOneParams) -> Vec<Optimum> {
        let mut out = Vec::new();
        for c in BUDGETS {
            for t in COMPRESSIONS {
                out.push(Optimum {
                    budget: c,
                    compression: t,
                    opt_bytes: law.predict_data(c, t),
                    opt_params: Some(law.predict_params(c, t)),
                    opt_loss: 1.0,
                    source: OptimumSource::External,
                });
            }
        }
        out
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn published_forward_values() {
        let law = LawOneParams::latent_published();
        assert!(rel(law.predict_data(1e20, 4.0), 6.7e10) < 0.02);
        assert!(rel(law.predict_params(1e20, 4.0), 9.9e8) < 0.02);
        assert!((law.predict_bpp(1e20, 4.0) - 68.0).abs() < 2.0);
        assert!(rel(law.predict_data(1e20, 8.0) / law.predict_data(1e20, 4.0), 1.386) < 1e-3);
        assert!(rel(law.predict_data(3e19, 1.0), 17.5 * 3e19f64.powf(0.465)) < 1e-14);
        assert!((law.n0 - 9.5e-3).abs() < 0.03e-3);
    }

    #[test]
    fn balanced_exponents_freeze_bpp() {
        let law = LawOneParams::new(Family::LatentEntropy, 3.0, 0.5, 0.5);
        let r = law.predict_bpp(1e19, 1.0);
        for (c, t) in [(1e20, 4.0), (7e22, 13.0)] {
            assert!(rel(law.predict_bpp(c, t), r) < 1e-12);
        }
    }

    #[test]
    fn noiseless_recovery() {
        let truth = LawOneParams::latent_published();
        let fit = fit_law1(&optima_from(&truth), Family::LatentEntropy, &LawOneOptions::default()).unwrap();
        assert!((fit.alpha - truth.alpha).abs() < 1e-6);
        assert!((fit.beta - truth.beta).abs() < 1e-6);
        assert!(rel(fit.b0, truth.b0) < 1e-4);
        assert!((fit.n0 * 6.0 * fit.b0 - 1.0).abs() < 1e-12);
        let ci = fit.intervals.unwrap();
        assert!(ci.alpha.high - ci.alpha.low < 1e-6);
    }

    #[test]
    fn pinned_beta_one_makes_tokens_independent_of_t() {
        let truth = LawOneParams::new(Family::LatentEntropy, 5.0, 0.48, 1.0);
        let opts = LawOneOptions {
            fixed_beta: Some(1.0),
            ..LawOneOptions::default()
        };
        let fit = fit_law1(&optima_from(&truth), Family::LatentEntropy, &opts).unwrap();
        assert_eq!(fit.beta, 1.0);
        let d1 = fit.predict_data(1e20, 2.0) / 2.0;
        let d2 = fit.predict_data(1e20, 9.0) / 9.0;
        assert!(rel(d1, d2) < 1e-12);
        assert!((fit.alpha - 0.48).abs() < 1e-6);
    }

    #[test]
    fn narrow_span_is_rejected() {
        let truth = LawOneParams::latent_published();
        let one_budget: Vec<Optimum> = optima_from(&truth).into_iter().filter(|o| o.budget == 1e20).collect();
        assert!(matches!(
            fit_law1(&one_budget, Family::LatentEntropy, &LawOneOptions::default()),
            Err(Error::InsufficientVariation(_))
        ));
        let few: Vec<Optimum> = optima_from(&truth).into_iter().take(3).collect();
        assert!(matches!(
            fit_law1(&few, Family::LatentEntropy, &LawOneOptions::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn budget_units_do_not_move_exponents() {
        let truth = LawOneParams::subword_published();
        let base = optima_from(&truth);
        let k = 1e-15;
        let scaled: Vec<Optimum> = base.iter().map(|o| Optimum { budget: o.budget * k, ..o.clone() }).collect();
        let opts = LawOneOptions { max_starts: 50, ..LawOneOptions::default() };
        let a = fit_law1(&base, Family::Subword, &opts).unwrap();
        let b = fit_law1(&scaled, Family::Subword, &opts).unwrap();
        assert!((a.alpha - b.alpha).abs() < 1e-9);
        assert!((a.beta - b.beta).abs() < 1e-9);
        assert!(rel(b.b0, a.b0 * k.powf(-a.alpha)) < 1e-6);
    }

    #[test]
    fn json_round_trip() {
        let law = LawOneParams::latent_published();
        let text = serde_json::to_string(&law).unwrap();
        assert!(text.contains("\"B0\":17.5"));
        let back: LawOneParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back, law);
    }

    proptest! {
        #[test]
        fn closure_and_ratio_identities(c in 1e17f64..1e24, t in 1.0f64..16.0, b0 in 0.5f64..50.0, a in 0.3f64..0.7, b in 0.2f64..0.8) {
            let law = LawOneParams::new(Family::Subword, b0, a, b);
            let bytes = law.predict_data(c, t);
            let params = law.predict_params(c, t);
            prop_assert!(rel(6.0 * params * bytes / t, c) < 1e-12);
            prop_assert!(rel(bytes / params, law.predict_bpp(c, t)) < 1e-12);
        }
    }
}
