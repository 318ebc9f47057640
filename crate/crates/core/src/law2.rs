//! Scaling Law II: compute-optimal loss `L* = L₀·C^γ + f(C, T)`.
//!
//! Phase A fits `L₀`, `γ` and one free offset per compression. Phase B
//! models the residuals `f` with one of three forms:
//!
//! * mean:      `f = E`
//! * const-T:   `f = F·ln²(T/T₀) + E`
//! * compute-T: `f = F·ln²(C^δ·T/T₀) + E`, so `T*(C) = T₀/C^δ`
//!
//! Logarithms are natural throughout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isoflop::Optimum;
use crate::optimizer::{
    cap_starts, clamp_starts, confidence_intervals, grid_starts, minimize_sos, Bound,
    ConfidenceInterval, FitDiagnostics, FitProblem, FitResult, GridAxis, Model,
    DEFAULT_MAX_STARTS, DEFAULT_START_SEED,
};
use crate::records::{sorted_distinct, Family};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualVariant {
    Mean,
    ConstT,
    ComputeT,
}

impl ResidualVariant {
    pub const ALL: [ResidualVariant; 3] = [Self::Mean, Self::ConstT, Self::ComputeT];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::ConstT => "const-t",
            Self::ComputeT => "compute-t",
        }
    }

    /// Parameters of `f` itself: `E`, plus `F, T₀`, plus `δ`.
    pub fn n_params(&self) -> usize {
        match self {
            Self::Mean => 1,
            Self::ConstT => 3,
            Self::ComputeT => 4,
        }
    }
}

impl fmt::Display for ResidualVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResidualVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mean" => Ok(Self::Mean),
            "const-t" => Ok(Self::ConstT),
            "compute-t" => Ok(Self::ComputeT),
            _ => Err(Error::validation(
                "residual",
                format!("unknown residual model `{s}` (mean, const-t, compute-t)"),
            )),
        }
    }
}

/// How the residual parameters are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualFitMode {
    /// `E` from the mean stage, then `(F, T₀)` with `E` fixed, then
    /// `(T₀, δ)` with `E` and `F` fixed. Rows share `E` and `F`.
    #[default]
    Nested,
    /// Every parameter of the chosen form fitted together.
    Joint,
}

impl FromStr for ResidualFitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nested" => Ok(Self::Nested),
            "joint" => Ok(Self::Joint),
            _ => Err(Error::validation("residual-fit", format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offset {
    pub compression: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualParams {
    pub variant: ResidualVariant,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "F")]
    pub f: Option<f64>,
    #[serde(rename = "T0")]
    pub t0: Option<f64>,
    pub delta: Option<f64>,
    /// RMSE of the residual fit itself.
    pub rmse: f64,
}

impl ResidualParams {
    pub fn evaluate(&self, budget: f64, compression: f64) -> f64 {
        match self.variant {
            ResidualVariant::Mean => self.e,
            _ => {
                let (f, t0) = (self.f.unwrap_or(0.0), self.t0.unwrap_or(1.0));
                let d = self.delta.unwrap_or(0.0);
                let ln = d * budget.ln() + compression.ln() - t0.ln();
                f * ln * ln + self.e
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawTwoIntervals {
    pub log_l0: ConfidenceInterval,
    pub l0_exp: (f64, f64),
    pub gamma: ConfidenceInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawTwoParams {
    pub family: Family,
    #[serde(rename = "L0")]
    pub l0: f64,
    pub gamma: f64,
    pub residual_variant: ResidualVariant,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "F")]
    pub f: Option<f64>,
    #[serde(rename = "T0")]
    pub t0: Option<f64>,
    pub delta: Option<f64>,
    #[serde(default)]
    pub offsets: Option<Vec<Offset>>,
    #[serde(default)]
    pub intervals: Option<LawTwoIntervals>,
    #[serde(default)]
    pub diagnostics: Option<FitDiagnostics>,
}

impl LawTwoParams {
    pub fn compute_t(family: Family, l0: f64, gamma: f64, e: f64, f: f64, t0: f64, delta: f64) -> Self {
        LawTwoParams {
            family,
            l0,
            gamma,
            residual_variant: ResidualVariant::ComputeT,
            e,
            f: Some(f),
            t0: Some(t0),
            delta: Some(delta),
            offsets: None,
            intervals: None,
            diagnostics: None,
        }
    }

    /// Published latent-family constants.
    pub fn latent_published() -> Self {
        Self::compute_t(Family::LatentEntropy, 3342.0, -0.206, 0.70, 0.032, 18.2, 0.035)
    }

    /// Published subword-family constants.
    pub fn subword_published() -> Self {
        Self::compute_t(Family::Subword, 1087.0, -0.181, 0.680, 0.0575, 1577.0, 0.129)
    }

    pub fn with_residual(mut self, residual: &ResidualParams) -> Self {
        self.residual_variant = residual.variant;
        self.e = residual.e;
        self.f = residual.f;
        self.t0 = residual.t0;
        self.delta = residual.delta;
        self
    }

    pub fn residual(&self) -> ResidualParams {
        ResidualParams {
            variant: self.residual_variant,
            e: self.e,
            f: self.f,
            t0: self.t0,
            delta: self.delta,
            rmse: f64::NAN,
        }
    }

    /// `L₀·C^γ`, the compute term alone.
    pub fn power_term(&self, budget: f64) -> f64 {
        self.l0 * budget.powf(self.gamma)
    }

    pub fn predict_loss(&self, budget: f64, compression: f64) -> f64 {
        self.power_term(budget) + self.residual().evaluate(budget, compression)
    }

    /// `T*(C) = T₀/C^δ`; const-T has `δ = 0`.
    pub fn optimal_compression(&self, budget: f64) -> Result<f64> {
        match self.residual_variant {
            ResidualVariant::Mean => Err(Error::NoOptimum(self.residual_variant.to_string())),
            _ => {
                let t0 = self
                    .t0
                    .ok_or_else(|| Error::MissingField("T0".into()))?;
                Ok(t0 / budget.powf(self.delta.unwrap_or(0.0)))
            }
        }
    }

    /// `ΔL = F·ln²(T/T*(C)) ≥ 0`.
    pub fn loss_sensitivity(&self, budget: f64, compression: f64) -> Result<f64> {
        let t_star = self.optimal_compression(budget)?;
        let f = self.f.ok_or_else(|| Error::MissingField("F".into()))?;
        Ok(f * (compression / t_star).ln().powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawTwoOptions {
    pub max_starts: usize,
    pub seed: u64,
    pub level: f64,
    pub mode: ResidualFitMode,
}

impl Default for LawTwoOptions {
    fn default() -> Self {
        LawTwoOptions {
            max_starts: DEFAULT_MAX_STARTS,
            seed: DEFAULT_START_SEED,
            level: 0.95,
            mode: ResidualFitMode::Nested,
        }
    }
}

/// `L = exp(θ₀)·C^θ₁ + θ₂₊ₖ`, input `[ln C, k]`.
struct OffsetModel {
    n_offsets: usize,
}

impl Model for OffsetModel {
    fn n_params(&self) -> usize {
        2 + self.n_offsets
    }

    fn predict(&self, theta: &[f64], x: &[f64]) -> f64 {
        (theta[0] + theta[1] * x[0]).exp() + theta[2 + x[1] as usize]
    }

    fn gradient(&self, theta: &[f64], x: &[f64], out: &mut [f64]) -> bool {
        let p = (theta[0] + theta[1] * x[0]).exp();
        out.iter_mut().for_each(|o| *o = 0.0);
        out[0] = p;
        out[1] = p * x[0];
        out[2 + x[1] as usize] = 1.0;
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetsFit {
    #[serde(rename = "L0")]
    pub l0: f64,
    pub gamma: f64,
    pub offsets: Vec<Offset>,
    pub sos: f64,
    pub diagnostics: FitDiagnostics,
    pub intervals: Option<LawTwoIntervals>,
}

impl OffsetsFit {
    pub fn offset(&self, compression: f64) -> Option<f64> {
        self.offsets
            .iter()
            .find(|o| o.compression == compression)
            .map(|o| o.value)
    }
}

fn check_offsets_span(optima: &[Optimum]) -> Result<Vec<f64>> {
    if optima
        .iter()
        .any(|o| !(o.budget > 0.0 && o.compression > 0.0 && o.opt_loss.is_finite()))
    {
        return Err(Error::Domain("optima need positive budgets and compressions".into()));
    }
    let compressions = sorted_distinct(optima.iter().map(|o| o.compression));
    if compressions.len() < 2 {
        return Err(Error::InsufficientVariation(format!(
            "Law II needs at least 2 compressions, got {}",
            compressions.len()
        )));
    }
    for &t in &compressions {
        let budgets = sorted_distinct(optima.iter().filter(|o| o.compression == t).map(|o| o.budget));
        if budgets.len() < 2 {
            return Err(Error::InsufficientVariation(format!(
                "compression {t} has {} budget(s); γ is unidentifiable without at least 2",
                budgets.len()
            )));
        }
    }
    Ok(compressions)
}

/// Phase A: `L₀`, `γ` and per-compression offsets fitted simultaneously.
pub fn fit_law2_offsets(optima: &[Optimum], opts: &LawTwoOptions) -> Result<OffsetsFit> {
    let compressions = check_offsets_span(optima)?;
    let k = compressions.len();
    let index = |t: f64| compressions.iter().position(|&c| c == t).unwrap();
    let inputs: Vec<Vec<f64>> = optima
        .iter()
        .map(|o| vec![o.budget.ln(), index(o.compression) as f64])
        .collect();
    let targets: Vec<f64> = optima.iter().map(|o| o.opt_loss).collect();
    let means: Vec<f64> = compressions
        .iter()
        .map(|&t| {
            let ls: Vec<f64> = optima.iter().filter(|o| o.compression == t).map(|o| o.opt_loss).collect();
            ls.iter().sum::<f64>() / ls.len() as f64
        })
        .collect();

    let model = OffsetModel { n_offsets: k };
    let mut problem = FitProblem::new(&model, inputs, targets);
    problem.bounds = [Bound::new(-30.0, 30.0), Bound::new(-2.0, 0.0)]
        .into_iter()
        .chain(std::iter::repeat_n(Bound::new(-5.0, 5.0), k))
        .collect();
    // 13 × 13 over (ln L₀ ∈ [−3, 3], γ ∈ [−0.6, 0]); offsets start at the
    // mean loss per compression
    let mut center = vec![0.0, -0.3];
    center.extend(&means);
    let axes: Vec<GridAxis> = [GridAxis::log_constant(), GridAxis::exponent()]
        .into_iter()
        .chain(std::iter::repeat_n(GridAxis::single(), k))
        .collect();
    let mut starts = cap_starts(grid_starts(&center, &axes)?, opts.max_starts, opts.seed);
    clamp_starts(&mut starts, &problem.bounds);
    problem.starts = starts;

    let fit = minimize_sos(&problem)?;
    let theta = &fit.theta_hat;
    let intervals = confidence_intervals(&fit, &problem, opts.level).ok().map(|ci| LawTwoIntervals {
        l0_exp: (ci[0].low.exp(), ci[0].high.exp()),
        log_l0: ci[0],
        gamma: ci[1],
    });
    Ok(OffsetsFit {
        l0: theta[0].exp(),
        gamma: theta[1],
        offsets: compressions
            .iter()
            .zip(&theta[2..])
            .map(|(&compression, &value)| Offset { compression, value })
            .collect(),
        sos: fit.sos,
        diagnostics: fit.diagnostics,
        intervals,
    })
}

/// One residual observation `f(C, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub budget: f64,
    pub compression: f64,
    pub value: f64,
}

/// Residuals of the compute term: `L* − L₀·C^γ`.
pub fn residual_points(optima: &[Optimum], l0: f64, gamma: f64) -> Vec<ResidualPoint> {
    optima
        .iter()
        .map(|o| ResidualPoint {
            budget: o.budget,
            compression: o.compression,
            value: o.opt_loss - l0 * o.budget.powf(gamma),
        })
        .collect()
}

/// `f = F·(δ·(ln C − ln C_ref) + ln T − ln T_ref)² + E` with any subset of
/// `(E, F, ln T_ref, δ)` free; fixed entries come from `fixed`.
struct LogQuadratic {
    free: [bool; 4],
    fixed: [f64; 4],
    ln_c_ref: f64,
}

impl LogQuadratic {
    fn expand(&self, theta: &[f64]) -> [f64; 4] {
        let mut full = self.fixed;
        let mut it = theta.iter();
        for (slot, free) in full.iter_mut().zip(self.free) {
            if free {
                *slot = *it.next().unwrap();
            }
        }
        full
    }
}

impl Model for LogQuadratic {
    fn n_params(&self) -> usize {
        self.free.iter().filter(|f| **f).count()
    }

    fn predict(&self, theta: &[f64], x: &[f64]) -> f64 {
        let [e, f, ln_t_ref, delta] = self.expand(theta);
        let z = delta * (x[0] - self.ln_c_ref) + x[1] - ln_t_ref;
        f * z * z + e
    }

    fn gradient(&self, theta: &[f64], x: &[f64], out: &mut [f64]) -> bool {
        let [_, f, ln_t_ref, delta] = self.expand(theta);
        let z = delta * (x[0] - self.ln_c_ref) + x[1] - ln_t_ref;
        let full = [1.0, z * z, -2.0 * f * z, 2.0 * f * z * (x[0] - self.ln_c_ref)];
        let mut k = 0;
        for (g, free) in full.into_iter().zip(self.free) {
            if free {
                out[k] = g;
                k += 1;
            }
        }
        true
    }
}

const E_BOUND: Bound = Bound { lo: -5.0, hi: 5.0 };
const F_BOUND: Bound = Bound { lo: 0.0, hi: 10.0 };
const LN_T_BOUND: Bound = Bound { lo: -30.0, hi: 30.0 };
const DELTA_BOUND: Bound = Bound { lo: -1.0, hi: 1.0 };

fn f_axis() -> GridAxis {
    GridAxis { half_width: 0.05, n_values: 13 }
}

fn pick<T: Copy>(xs: &[T], free: [bool; 4]) -> Vec<T> {
    xs.iter().zip(free).filter(|(_, f)| *f).map(|(x, _)| *x).collect()
}

struct QuadFit {
    full: [f64; 4],
    rmse: f64,
}

fn fit_log_quadratic(
    points: &[ResidualPoint],
    free: [bool; 4],
    fixed: [f64; 4],
    ln_c_ref: f64,
    opts: &LawTwoOptions,
) -> Result<QuadFit> {
    let model = LogQuadratic { free, fixed, ln_c_ref };
    let inputs: Vec<Vec<f64>> = points.iter().map(|p| vec![p.budget.ln(), p.compression.ln()]).collect();
    let targets: Vec<f64> = points.iter().map(|p| p.value).collect();
    let all_bounds = [E_BOUND, F_BOUND, LN_T_BOUND, DELTA_BOUND];
    let all_axes = [GridAxis::single(), f_axis(), GridAxis::log_constant(), GridAxis::exponent()];
    let mut problem = FitProblem::new(&model, inputs, targets);
    problem.bounds = pick(&all_bounds, free);
    let center = pick(&fixed, free);
    let mut starts = cap_starts(grid_starts(&center, &pick(&all_axes, free))?, opts.max_starts, opts.seed);
    clamp_starts(&mut starts, &problem.bounds);
    problem.starts = starts;
    let fit: FitResult = minimize_sos(&problem)?;
    Ok(QuadFit {
        full: model.expand(&fit.theta_hat),
        rmse: fit.diagnostics.rmse,
    })
}

/// Fits one residual form. Nested mode fits the simpler forms first and
/// carries their estimates forward.
pub fn fit_residual_model(
    points: &[ResidualPoint],
    variant: ResidualVariant,
    opts: &LawTwoOptions,
) -> Result<ResidualParams> {
    if points.is_empty() {
        return Err(Error::InsufficientData("no residuals".into()));
    }
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.value).sum::<f64>() / n;
    let rmse_of = |r: &ResidualParams| {
        (points
            .iter()
            .map(|p| (p.value - r.evaluate(p.budget, p.compression)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    if variant == ResidualVariant::Mean {
        let mut r = ResidualParams {
            variant,
            e: mean,
            f: None,
            t0: None,
            delta: None,
            rmse: 0.0,
        };
        r.rmse = rmse_of(&r);
        return Ok(r);
    }

    let compressions = sorted_distinct(points.iter().map(|p| p.compression));
    if compressions.len() < 3 {
        return Err(Error::InsufficientVariation(format!(
            "{variant} needs at least 3 distinct compressions, got {}",
            compressions.len()
        )));
    }
    let ln_c: Vec<f64> = points.iter().map(|p| p.budget.ln()).collect();
    let ln_c_ref = ln_c.iter().sum::<f64>() / n;
    if variant == ResidualVariant::ComputeT && sorted_distinct(ln_c.iter().copied()).len() < 2 {
        return Err(Error::InsufficientVariation("compute-t needs at least 2 budgets".into()));
    }

    // the compression whose residuals are lowest on average seeds T₀
    let ln_t_seed = compressions
        .iter()
        .map(|&t| {
            let vs: Vec<f64> = points.iter().filter(|p| p.compression == t).map(|p| p.value).collect();
            (vs.iter().sum::<f64>() / vs.len() as f64, t.ln())
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, lt)| lt)
        .unwrap();

    let (e0, f0) = (mean, 0.05);
    let const_fit = match opts.mode {
        ResidualFitMode::Nested => {
            fit_log_quadratic(points, [false, true, true, false], [e0, f0, ln_t_seed, 0.0], ln_c_ref, opts)?
        }
        ResidualFitMode::Joint => {
            let min = points.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
            fit_log_quadratic(points, [true, true, true, false], [min, f0, ln_t_seed, 0.0], ln_c_ref, opts)?
        }
    };
    let [e, f, ln_t, _] = const_fit.full;
    if variant == ResidualVariant::ConstT {
        return Ok(ResidualParams {
            variant,
            e,
            f: Some(f),
            t0: Some(ln_t.exp()),
            delta: None,
            rmse: const_fit.rmse,
        });
    }

    let free = match opts.mode {
        ResidualFitMode::Nested => [false, false, true, true],
        ResidualFitMode::Joint => [true, true, true, true],
    };
    let fit = fit_log_quadratic(points, free, [e, f, ln_t, 0.0], ln_c_ref, opts)?;
    let [e, f, ln_t_ref, delta] = fit.full;
    Ok(ResidualParams {
        variant,
        e,
        f: Some(f),
        // ln T₀ = ln T_ref + δ·ln C_ref
        t0: Some((ln_t_ref + delta * ln_c_ref).exp()),
        delta: Some(delta),
        rmse: fit.rmse,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: ResidualVariant,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "F")]
    pub f: Option<f64>,
    #[serde(rename = "T0")]
    pub t0: Option<f64>,
    pub delta: Option<f64>,
    pub rmse_holdout: f64,
    #[serde(with = "crate::optimizer::nan_as_null")]
    pub r2: f64,
    #[serde(with = "crate::optimizer::nan_as_null")]
    pub adj_r2: f64,
    pub n_params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualModelReport {
    pub holdout_budget: f64,
    pub n_train: usize,
    pub n_holdout: usize,
    #[serde(rename = "L0")]
    pub l0: f64,
    pub gamma: f64,
    pub variants: Vec<VariantReport>,
    pub selected: ResidualVariant,
}

impl ResidualModelReport {
    pub fn get(&self, variant: ResidualVariant) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.variant == variant)
    }

    /// Comparison table as CSV.
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
        let mut out = String::from("residual_model,E,F,T0,delta,rmse_holdout,r2,adj_r2,selected\n");
        for v in &self.variants {
            out.push_str(&format!(
                "{},{:.4},{},{},{},{:.4},{:.3},{:.3},{}\n",
                v.variant,
                v.e,
                opt(v.f),
                opt(v.t0),
                opt(v.delta),
                v.rmse_holdout,
                v.r2,
                v.adj_r2,
                v.variant == self.selected
            ));
        }
        out
    }
}

const TIE_ABS: f64 = 1e-9;
const TIE_REL: f64 = 1e-6;

/// Fits all three forms on every budget except `holdout_budget`, scores
/// them on the held-out losses, and picks the lowest holdout RMSE (ties go
/// to the form with fewer parameters).
pub fn select_residual_model(
    optima: &[Optimum],
    holdout_budget: f64,
    opts: &LawTwoOptions,
) -> Result<ResidualModelReport> {
    let (holdout, train): (Vec<Optimum>, Vec<Optimum>) =
        optima.iter().cloned().partition(|o| o.budget == holdout_budget);
    if holdout.is_empty() {
        let budgets = sorted_distinct(optima.iter().map(|o| o.budget));
        return Err(Error::Domain(format!(
            "holdout budget {holdout_budget:e} not in data (budgets: {budgets:?})"
        )));
    }
    let phase_a = fit_law2_offsets(&train, opts)?;
    let residuals = residual_points(&train, phase_a.l0, phase_a.gamma);
    let train_losses: Vec<f64> = train.iter().map(|o| o.opt_loss).collect();

    let mut variants = Vec::new();
    for variant in ResidualVariant::ALL {
        let r = fit_residual_model(&residuals, variant, opts)?;
        let law = LawTwoParams {
            family: Family::LatentEntropy,
            l0: phase_a.l0,
            gamma: phase_a.gamma,
            residual_variant: variant,
            e: 0.0,
            f: None,
            t0: None,
            delta: None,
            offsets: None,
            intervals: None,
            diagnostics: None,
        }
        .with_residual(&r);
        let rmse_holdout = (holdout
            .iter()
            .map(|o| (o.opt_loss - law.predict_loss(o.budget, o.compression)).powi(2))
            .sum::<f64>()
            / holdout.len() as f64)
            .sqrt();
        let train_residuals: Vec<f64> = train
            .iter()
            .map(|o| o.opt_loss - law.predict_loss(o.budget, o.compression))
            .collect();
        let n_params = 2 + variant.n_params();
        let d = FitDiagnostics::from_residuals(&train_losses, &train_residuals, n_params);
        variants.push(VariantReport {
            variant,
            e: r.e,
            f: r.f,
            t0: r.t0,
            delta: r.delta,
            rmse_holdout,
            r2: d.r2,
            adj_r2: d.adj_r2,
            n_params,
        });
    }
    let best = variants.iter().map(|v| v.rmse_holdout).fold(f64::INFINITY, f64::min);
    let selected = variants
        .iter()
        .filter(|v| v.rmse_holdout <= best + TIE_ABS + TIE_REL * best)
        .min_by_key(|v| v.n_params)
        .map(|v| v.variant)
        .ok_or_else(|| Error::NonFinite(vec![best]))?;
    Ok(ResidualModelReport {
        holdout_budget,
        n_train: train.len(),
        n_holdout: holdout.len(),
        l0: phase_a.l0,
        gamma: phase_a.gamma,
        variants,
        selected,
    })
}

/// Full Law II fit on all optima with one residual form.
pub fn fit_law2(
    optima: &[Optimum],
    family: Family,
    variant: ResidualVariant,
    opts: &LawTwoOptions,
) -> Result<LawTwoParams> {
    let phase_a = fit_law2_offsets(optima, opts)?;
    let residuals = residual_points(optima, phase_a.l0, phase_a.gamma);
    let r = fit_residual_model(&residuals, variant, opts)?;
    let mut law = LawTwoParams {
        family,
        l0: phase_a.l0,
        gamma: phase_a.gamma,
        residual_variant: variant,
        e: r.e,
        f: None,
        t0: None,
        delta: None,
        offsets: Some(phase_a.offsets.clone()),
        intervals: phase_a.intervals.clone(),
        diagnostics: None,
    }
    .with_residual(&r);
    let losses: Vec<f64> = optima.iter().map(|o| o.opt_loss).collect();
    let res: Vec<f64> = optima
        .iter()
        .map(|o| o.opt_loss - law.predict_loss(o.budget, o.compression))
        .collect();
    law.diagnostics = Some(FitDiagnostics::from_residuals(&losses, &res, 2 + variant.n_params()));
    Ok(law)
}
