//! Synthetic experiment grids drawn from known laws, for recovery tests.
//!
//! Each `(C, T)` cell gets `models_per_cell` runs spaced evenly in `ln B`
//! over `±1.5` around the true `B*`, with losses on an exact parabola
//! `L(B) = L*(C, T) + a·(ln B − ln B*)²` and optional multiplicative
//! log-normal noise. Parameter counts close `C = 6·N·B/T` exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isoflop::{Optimum, OptimumSource};
use crate::law1::LawOneParams;
use crate::law2::LawTwoParams;
use crate::records::{Family, RunRecord, DEFAULT_LANGUAGE};

/// Half-width of the sampled `ln B` span around `B*`.
pub const LOG_SPAN: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub family: Family,
    pub law1: LawOneParams,
    pub law2: LawTwoParams,
    /// Standard deviation of `ln L` noise.
    pub noise_sigma: f64,
    /// Second derivative of loss in `ln B` is `2·curvature`.
    pub curvature: f64,
    pub seed: u64,
}

impl TruthSpec {
    pub fn latent() -> Self {
        TruthSpec {
            family: Family::LatentEntropy,
            law1: LawOneParams::latent_published(),
            law2: LawTwoParams::latent_published(),
            noise_sigma: 0.0,
            curvature: 0.02,
            seed: 7,
        }
    }

    pub fn subword() -> Self {
        TruthSpec {
            family: Family::Subword,
            law1: LawOneParams::subword_published(),
            law2: LawTwoParams::subword_published(),
            noise_sigma: 0.0,
            curvature: 0.02,
            seed: 7,
        }
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::validation("noise_sigma", "must be a finite value ≥ 0"));
        }
        if !(self.curvature > 0.0) {
            return Err(Error::validation("curvature", "must be positive"));
        }
        if !(self.law1.b0 > 0.0 && self.law2.l0 > 0.0) {
            return Err(Error::validation("truth", "B0 and L0 must be positive"));
        }
        Ok(())
    }
}

/// One RNG stream per cell so cells can be generated independently.
fn cell_rng(seed: u64, cell: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell);
    rng
}

fn check_axes(budgets: &[f64], compressions: &[f64]) -> Result<()> {
    if budgets.is_empty() || compressions.is_empty() {
        return Err(Error::Domain("need at least one budget and one compression".into()));
    }
    if budgets.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::validation("budget_flops", "budgets must be positive"));
    }
    if compressions.iter().any(|t| !(*t >= 1.0)) {
        return Err(Error::validation("compression", "compressions must be ≥ 1"));
    }
    Ok(())
}

/// Full run grid: budgets × compressions × models per cell.
pub fn generate_grid(
    spec: &TruthSpec,
    budgets: &[f64],
    compressions: &[f64],
    models_per_cell: usize,
) -> Result<Vec<RunRecord>> {
    spec.check()?;
    check_axes(budgets, compressions)?;
    if models_per_cell < 3 {
        return Err(Error::Domain(format!(
            "models_per_cell must be at least 3, got {models_per_cell}"
        )));
    }
    let mut out = Vec::with_capacity(budgets.len() * compressions.len() * models_per_cell);
    let mut cell = 0u64;
    for &c in budgets {
        for &t in compressions {
            let mut rng = cell_rng(spec.seed, cell);
            cell += 1;
            let ln_b_star = spec.law1.predict_data(c, t).ln();
            let l_star = spec.law2.predict_loss(c, t);
            for k in 0..models_per_cell {
                let offset = -LOG_SPAN + 2.0 * LOG_SPAN * k as f64 / (models_per_cell - 1) as f64;
                let bytes = (ln_b_star + offset).exp();
                let mut loss = l_star + spec.curvature * offset * offset;
                if spec.noise_sigma > 0.0 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    loss *= (spec.noise_sigma * z).exp();
                }
                out.push(RunRecord {
                    family: spec.family,
                    budget_flops: c,
                    compression: t,
                    scale: None,
                    latent_params: c * t / (6.0 * bytes),
                    total_params: None,
                    bytes,
                    loss_bpb: loss,
                    language: DEFAULT_LANGUAGE.to_string(),
                    dataset: Some("synthetic".into()),
                    extra: Vec::new(),
                });
            }
        }
    }
    Ok(out)
}

/// Optima drawn directly from the truth, with loss noise only.
pub fn generate_optima(spec: &TruthSpec, budgets: &[f64], compressions: &[f64]) -> Result<Vec<Optimum>> {
    spec.check()?;
    check_axes(budgets, compressions)?;
    let mut out = Vec::with_capacity(budgets.len() * compressions.len());
    let mut cell = 0u64;
    for &c in budgets {
        for &t in compressions {
            let mut rng = cell_rng(spec.seed, cell);
            cell += 1;
            let mut loss = spec.law2.predict_loss(c, t);
            if spec.noise_sigma > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                loss *= (spec.noise_sigma * z).exp();
            }
            out.push(Optimum {
                budget: c,
                compression: t,
                opt_bytes: spec.law1.predict_data(c, t),
                opt_params: Some(spec.law1.predict_params(c, t)),
                opt_loss: loss,
                source: OptimumSource::External,
            });
        }
    }
    Ok(out)
}
