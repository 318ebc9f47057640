//! Architecture recipes, parameter counts and FLOPs accounting.
//!
//! Both families share the same global module: at scale `s` it has `s`
//! layers, `s` heads and width `128·s`. Latent (byte-level hierarchical)
//! models wrap it with a shallow, wide local encoder and decoder joined by
//! cross-attention; subword models add a tied embedding matrix instead.
//!
//! Parameter counts use `12·d²` per transformer layer (attention `4·d²`,
//! feed-forward `8·d²` with inner width `4·d`) and ignore norms and biases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_SCALE: u32 = 64;
pub const DEFAULT_CONTEXT_BYTES: u64 = 8192;
/// Local-attention window (bytes), calibrated once against published global
/// compute shares; see [`calibrate_local_window`].
pub const DEFAULT_LOCAL_WINDOW_BYTES: u64 = 64;
/// Byte vocabulary of the local modules.
pub const BYTE_VOCAB: u64 = 256;

const HEAD_DIM_GLOBAL: u64 = 128;
const HEAD_DIM_LOCAL: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecipeFamily {
    Latent,
    Subword,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchRecipe {
    pub family: RecipeFamily,
    pub scale: u32,
    pub global_layers: u64,
    pub global_heads: u64,
    pub global_dim: u64,
    /// Layers in each local module (encoder and decoder are equal).
    pub local_layers: u64,
    pub local_heads: u64,
    pub local_dim: u64,
    pub crossattn_k: u64,
    pub vocab_size: Option<u64>,
    pub params_global: f64,
    /// Both local modules together, including byte (de-)embeddings; for
    /// subword models the tied embedding matrix.
    pub params_local: f64,
    pub params_cross: f64,
    pub params_total: f64,
}

impl ArchRecipe {
    /// Parameters of one local module (encoder or decoder).
    pub fn params_local_per_module(&self) -> f64 {
        match self.family {
            RecipeFamily::Latent => self.params_local / 2.0,
            RecipeFamily::Subword => self.params_local,
        }
    }

    fn local_layer_params(&self) -> f64 {
        2.0 * self.local_layers as f64 * layer_params(self.local_dim)
    }
}

fn layer_params(dim: u64) -> f64 {
    12.0 * (dim as f64) * (dim as f64)
}

fn check_scale(scale: u32) -> Result<()> {
    if !(1..=MAX_SCALE).contains(&scale) {
        return Err(Error::Domain(format!(
            "scale must be in 1..={MAX_SCALE}, got {scale}"
        )));
    }
    Ok(())
}

/// Global-module parameters at `scale`: `12·s·(128·s)² = 196608·s³`.
pub fn count_global_params(scale: u32) -> f64 {
    let s = scale as f64;
    196_608.0 * s * s * s
}

/// Byte-level hierarchical recipe at `scale`.
pub fn latent_recipe(scale: u32) -> Result<ArchRecipe> {
    check_scale(scale)?;
    let s = scale as u64;
    let k = s.div_ceil(8);
    // local heads follow the tabulated configurations: 2·⌈s/8⌉ + 8
    let local_heads = 2 * k + 8;
    let recipe = ArchRecipe {
        family: RecipeFamily::Latent,
        scale,
        global_layers: s,
        global_heads: s,
        global_dim: HEAD_DIM_GLOBAL * s,
        local_layers: s.div_ceil(4),
        local_heads,
        local_dim: HEAD_DIM_LOCAL * local_heads,
        crossattn_k: k,
        vocab_size: None,
        params_global: 0.0,
        params_local: 0.0,
        params_cross: 0.0,
        params_total: 0.0,
    };
    Ok(count_params(recipe))
}

/// Isotropic subword recipe: the global module plus a tied `V × d` embedding.
pub fn subword_recipe(scale: u32, vocab_size: u64) -> Result<ArchRecipe> {
    check_scale(scale)?;
    if vocab_size < 2 {
        return Err(Error::Domain(format!(
            "vocab_size must be >= 2, got {vocab_size}"
        )));
    }
    let s = scale as u64;
    let recipe = ArchRecipe {
        family: RecipeFamily::Subword,
        scale,
        global_layers: s,
        global_heads: s,
        global_dim: HEAD_DIM_GLOBAL * s,
        local_layers: 0,
        local_heads: 0,
        local_dim: 0,
        crossattn_k: 0,
        vocab_size: Some(vocab_size),
        params_global: 0.0,
        params_local: 0.0,
        params_cross: 0.0,
        params_total: 0.0,
    };
    Ok(count_params(recipe))
}

/// Cross-attention projection-set model: `modules · projections · d_local ·
/// d_global · k` parameters. Configuration, calibrated against tabulated totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossAttnModel {
    pub modules: f64,
    pub projections: f64,
}

impl Default for CrossAttnModel {
    fn default() -> Self {
        CrossAttnModel {
            modules: 2.0,
            projections: 4.0,
        }
    }
}

impl CrossAttnModel {
    pub fn params(&self, recipe: &ArchRecipe) -> f64 {
        self.modules
            * self.projections
            * recipe.local_dim as f64
            * recipe.global_dim as f64
            * recipe.crossattn_k as f64
    }
}

/// Fills every `params_*` field using the default cross-attention model.
pub fn count_params(recipe: ArchRecipe) -> ArchRecipe {
    count_params_with(recipe, &CrossAttnModel::default())
}

pub fn count_params_with(mut recipe: ArchRecipe, cross: &CrossAttnModel) -> ArchRecipe {
    recipe.params_global = recipe.global_layers as f64 * layer_params(recipe.global_dim);
    match recipe.family {
        RecipeFamily::Latent => {
            let embed = (BYTE_VOCAB * recipe.local_dim) as f64;
            recipe.params_local = 2.0 * (recipe.local_layers as f64 * layer_params(recipe.local_dim) + embed);
            recipe.params_cross = cross.params(&recipe);
        }
        RecipeFamily::Subword => {
            let v = recipe.vocab_size.unwrap_or(0) as f64;
            recipe.params_local = v * recipe.global_dim as f64;
            recipe.params_cross = 0.0;
        }
    }
    recipe.params_total = recipe.params_global + recipe.params_local + recipe.params_cross;
    recipe
}

/// `C ≈ 6·N·B/T`.
pub fn approx_compute(latent_params: f64, bytes: f64, compression: f64) -> Result<f64> {
    if !(compression > 0.0) {
        return Err(Error::Domain(format!(
            "compression must be positive, got {compression}"
        )));
    }
    if !(latent_params > 0.0 && bytes > 0.0) {
        return Err(Error::Domain("latent_params and bytes must be positive".into()));
    }
    Ok(approx_compute_unchecked(latent_params, bytes, compression))
}

pub(crate) fn approx_compute_unchecked(latent_params: f64, bytes: f64, compression: f64) -> f64 {
    6.0 * latent_params * bytes / compression
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSplit {
    pub bytes: f64,
    pub bytes_per_param: f64,
}

/// Inverse of [`approx_compute`]: `B = C·T/(6·N)`, plus `ρ = B/N`.
pub fn bytes_for_budget(budget: f64, latent_params: f64, compression: f64) -> Result<BudgetSplit> {
    if !(budget > 0.0 && latent_params > 0.0 && compression > 0.0) {
        return Err(Error::Domain(
            "budget, latent_params and compression must be positive".into(),
        ));
    }
    let bytes = budget * compression / (6.0 * latent_params);
    Ok(BudgetSplit {
        bytes,
        bytes_per_param: bytes / latent_params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlopsConfig {
    pub context_bytes: u64,
    pub include_attention: bool,
    pub local_window_bytes: u64,
    /// Share of cross-attention projections applied per byte; the remainder
    /// is applied once per latent token.
    pub cross_per_byte_fraction: f64,
}

impl Default for FlopsConfig {
    fn default() -> Self {
        FlopsConfig {
            context_bytes: DEFAULT_CONTEXT_BYTES,
            include_attention: true,
            local_window_bytes: DEFAULT_LOCAL_WINDOW_BYTES,
            cross_per_byte_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsBreakdown {
    pub global_per_byte: f64,
    pub local_per_byte: f64,
    pub cross_per_byte: f64,
    pub total_per_byte: f64,
    pub global_share: f64,
    pub context_bytes: u64,
    pub attention_included: bool,
}

/// Forward (inference) FLOPs per byte, split by module.
pub fn inference_flops_per_byte(
    recipe: &ArchRecipe,
    compression: f64,
    config: &FlopsConfig,
) -> Result<FlopsBreakdown> {
    if config.context_bytes == 0 {
        return Err(Error::Domain("context_bytes must be positive".into()));
    }
    if !(compression >= 1.0) {
        return Err(Error::Domain(format!(
            "compression must be >= 1, got {compression}"
        )));
    }
    let t = compression;
    let ctx = config.context_bytes as f64;
    let attn = if config.include_attention { 1.0 } else { 0.0 };

    let global_attention = 2.0 * recipe.global_layers as f64 * recipe.global_dim as f64 * (ctx / t);
    let global_per_byte = (2.0 * recipe.params_global + attn * global_attention) / t;

    let (local_per_byte, cross_per_byte) = match recipe.family {
        RecipeFamily::Latent => {
            let window = (config.local_window_bytes as f64).min(ctx);
            let d = recipe.local_dim as f64;
            let local_attention = 2.0 * (2 * recipe.local_layers) as f64 * d * window;
            let unembed = 2.0 * BYTE_VOCAB as f64 * d;
            let local = 2.0 * recipe.local_layer_params() + attn * local_attention + unembed;
            let f = config.cross_per_byte_fraction;
            let cross = 2.0 * recipe.params_cross * (f + (1.0 - f) / t);
            (local, cross)
        }
        RecipeFamily::Subword => {
            // de-embedding once per token
            let v = recipe.vocab_size.unwrap_or(0) as f64;
            (2.0 * v * recipe.global_dim as f64 / t, 0.0)
        }
    };

    let total = global_per_byte + local_per_byte + cross_per_byte;
    Ok(FlopsBreakdown {
        global_per_byte,
        local_per_byte,
        cross_per_byte,
        total_per_byte: total,
        global_share: if total > 0.0 { global_per_byte / total } else { 0.0 },
        context_bytes: config.context_bytes,
        attention_included: config.include_attention,
    })
}

/// Training FLOPs over `bytes`: three forward passes' worth (backward = 2× forward).
pub fn training_flops(
    recipe: &ArchRecipe,
    bytes: f64,
    compression: f64,
    config: &FlopsConfig,
) -> Result<f64> {
    if !(bytes > 0.0) {
        return Err(Error::Domain(format!("bytes must be positive, got {bytes}")));
    }
    let per_byte = inference_flops_per_byte(recipe, compression, config)?;
    Ok(3.0 * bytes * per_byte.total_per_byte)
}

/// A target global-share cell: latent scale, compression, share in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareTarget {
    pub scale: u32,
    pub compression: f64,
    pub share: f64,
}

/// Picks the local window (from `candidates`) that minimizes the worst
/// absolute global-share error over latent `targets`. Returns the window and
/// that error.
pub fn calibrate_local_window(
    targets: &[ShareTarget],
    candidates: impl IntoIterator<Item = u64>,
    base: &FlopsConfig,
) -> Result<(u64, f64)> {
    let mut best: Option<(u64, f64)> = None;
    for window in candidates {
        let config = FlopsConfig {
            local_window_bytes: window,
            ..*base
        };
        let mut worst: f64 = 0.0;
        for target in targets {
            let recipe = latent_recipe(target.scale)?;
            let share = inference_flops_per_byte(&recipe, target.compression, &config)?.global_share;
            worst = worst.max((share - target.share).abs());
        }
        if best.is_none_or(|(_, e)| worst < e) {
            best = Some((window, worst));
        }
    }
    best.ok_or_else(|| Error::InsufficientData("no candidate windows".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Per-layer enumeration: q, k, v, o projections plus the two
    /// feed-forward matrices with inner width 4·d.
    fn enumerate_global_params(scale: u32) -> f64 {
        let d = 128 * scale as u64;
        let mut total = 0u64;
        for _layer in 0..scale {
            let attention = [d * d, d * d, d * d, d * d];
            let ffn = [d * 4 * d, 4 * d * d];
            total += attention.iter().sum::<u64>() + ffn.iter().sum::<u64>();
        }
        total as f64
    }

    #[test]
    fn global_params_match_enumeration() {
        assert_eq!(count_global_params(1), 196_608.0);
        assert_eq!(enumerate_global_params(1), 196_608.0);
        for s in 1..=MAX_SCALE {
            assert_eq!(count_global_params(s), enumerate_global_params(s));
            assert_eq!(latent_recipe(s).unwrap().params_global, count_global_params(s));
        }
        assert!((count_global_params(5) - 24.576e6).abs() < 1.0);
        assert!((count_global_params(32) / 6.4e9 - 1.0).abs() < 0.02);
    }

    #[test]
    fn latent_recipe_rows() {
        let r5 = latent_recipe(5).unwrap();
        assert_eq!((r5.global_layers, r5.global_heads, r5.global_dim), (5, 5, 640));
        assert_eq!((r5.local_layers, r5.local_heads, r5.local_dim, r5.crossattn_k), (2, 10, 640, 1));
        let r9 = latent_recipe(9).unwrap();
        assert_eq!((r9.local_layers, r9.local_heads, r9.local_dim, r9.crossattn_k), (3, 12, 768, 2));
        let r25 = latent_recipe(25).unwrap();
        assert_eq!((r25.local_layers, r25.local_heads, r25.local_dim, r25.crossattn_k), (7, 16, 1024, 4));
        for s in 1..=MAX_SCALE {
            let r = latent_recipe(s).unwrap();
            assert_eq!(r.global_dim, 128 * r.global_heads);
            assert_eq!(r.local_dim, 64 * r.local_heads);
            assert_eq!(r.params_total, r.params_global + r.params_local + r.params_cross);
        }
    }

    #[test]
    fn scale_out_of_range() {
        assert!(matches!(latent_recipe(0), Err(Error::Domain(_))));
        assert!(matches!(latent_recipe(65), Err(Error::Domain(_))));
        assert!(matches!(subword_recipe(5, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn subword_embeddings() {
        assert_eq!(subword_recipe(1, 2).unwrap().params_local, 256.0);
        let char5 = subword_recipe(5, 148_000).unwrap();
        assert!((char5.params_local - 94.72e6).abs() < 1.0);
        assert!((char5.params_local / 96e6 - 1.0).abs() < 0.03);
        let bpe5 = subword_recipe(5, 128_000).unwrap();
        assert!((bpe5.params_local / 82e6 - 1.0).abs() < 0.01);
        assert_eq!(char5.params_cross, 0.0);
    }

    #[test]
    fn latent_local_params_per_module() {
        let r5 = latent_recipe(5).unwrap();
        let per_module_layers = r5.local_layers as f64 * 12.0 * 640.0 * 640.0;
        assert!((per_module_layers - 9.8304e6).abs() < 1.0);
        assert!((r5.params_local_per_module() / 10e6 - 1.0).abs() < 0.05);
        assert!((r5.params_total / 50e6 - 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_local_layers_leaves_byte_embeddings() {
        let mut r = latent_recipe(5).unwrap();
        r.local_layers = 0;
        let r = count_params(r);
        assert_eq!(r.params_local, 2.0 * 256.0 * 640.0);
    }

    #[test]
    fn eq2_examples() {
        assert_eq!(approx_compute(1e9, 6e10, 4.0).unwrap(), 9e19);
        assert_eq!(approx_compute(3e8, 2e9, 1.0).unwrap(), 6.0 * 3e8 * 2e9);
        assert!((approx_compute(1.97e8, 4.74e10, 4.0).unwrap() / 1.40e19 - 1.0).abs() < 0.005);
        assert!(matches!(approx_compute(1e9, 1e9, 0.0), Err(Error::Domain(_))));

        let a = bytes_for_budget(1e20, 1e9, 4.0).unwrap();
        assert!((a.bytes / 6.6667e10 - 1.0).abs() < 1e-4);
        assert!((a.bytes_per_param - 66.667).abs() < 1e-3);
        let b = bytes_for_budget(1e20, 1e9, 8.0).unwrap();
        assert!((b.bytes / a.bytes - 2.0).abs() < 1e-14);
        let c = bytes_for_budget(6e18, 1e9, 1.0).unwrap();
        assert!((c.bytes - 1e9).abs() < 1e-3);
        assert!((c.bytes_per_param - 1.0).abs() < 1e-12);
    }

    #[test]
    fn share_vanishes_without_attention_at_high_compression() {
        let r = latent_recipe(5).unwrap();
        let config = FlopsConfig {
            include_attention: false,
            ..FlopsConfig::default()
        };
        let mut last = 1.0;
        for t in [1.0, 10.0, 1e3, 1e6, 1e9] {
            let b = inference_flops_per_byte(&r, t, &config).unwrap();
            assert!(b.global_share < last);
            last = b.global_share;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn breakdown_parts_sum() {
        let r = latent_recipe(12).unwrap();
        let b = inference_flops_per_byte(&r, 4.0, &FlopsConfig::default()).unwrap();
        assert!((b.global_per_byte + b.local_per_byte + b.cross_per_byte - b.total_per_byte).abs() < 1e-6);
        assert!((b.global_share - b.global_per_byte / b.total_per_byte).abs() < 1e-15);
        assert!(matches!(
            inference_flops_per_byte(&r, 0.5, &FlopsConfig::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn training_flops_reduce_to_approximation() {
        let mut r = latent_recipe(5).unwrap();
        r.local_layers = 0;
        r.local_dim = 0;
        r.crossattn_k = 0;
        let r = count_params(r);
        let config = FlopsConfig {
            include_attention: false,
            ..FlopsConfig::default()
        };
        let c = training_flops(&r, 1e10, 4.0, &config).unwrap();
        let eq2 = approx_compute(r.params_global, 1e10, 4.0).unwrap();
        assert!((c / eq2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn training_flops_linear_in_bytes() {
        let r = latent_recipe(9).unwrap();
        let config = FlopsConfig::default();
        let one = training_flops(&r, 1e10, 4.0, &config).unwrap();
        let two = training_flops(&r, 2e10, 4.0, &config).unwrap();
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn training_flops_exceed_approximation_by_non_global_share() {
        // consistency oracle: 3·B·(inference per byte) and the global share
        let r = latent_recipe(5).unwrap();
        let config = FlopsConfig {
            include_attention: false,
            ..FlopsConfig::default()
        };
        let bytes = 1e10;
        let full = training_flops(&r, bytes, 4.0, &config).unwrap();
        let eq2 = approx_compute(r.params_global, bytes, 4.0).unwrap();
        let share = inference_flops_per_byte(&r, 4.0, &config).unwrap().global_share;
        assert!(full > eq2);
        assert!((eq2 / full - share).abs() < 1e-12);
    }

    #[test]
    fn recipes_serialize() {
        let r = latent_recipe(7).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: ArchRecipe = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
