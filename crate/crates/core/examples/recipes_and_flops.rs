//! Parameter counts and per-byte compute shares across scales.
//!
//! cargo run --example recipes_and_flops

use tokescale::recipes::{inference_flops_per_byte, latent_recipe, subword_recipe, training_flops, FlopsConfig};

fn main() -> tokescale::Result<()> {
    let config = FlopsConfig::default();
    println!("scale   global     local/mod   total      share@T=1  share@T=4  share@T=12");
    for scale in [5, 8, 12, 16, 24, 32] {
        let r = latent_recipe(scale)?;
        let share = |t| inference_flops_per_byte(&r, t, &config).map(|b| 100.0 * b.global_share);
        println!(
            "{scale:>5}   {:>8.1}M  {:>8.1}M   {:>8.1}M  {:>8.1}%  {:>8.1}%  {:>8.1}%",
            r.params_global / 1e6,
            r.params_local_per_module() / 1e6,
            r.params_total / 1e6,
            share(1.0)?,
            share(4.0)?,
            share(12.0)?
        );
    }

    println!("\nsubword, 128k vocabulary at T = 4.57");
    for scale in [5, 16, 32] {
        let r = subword_recipe(scale, 128_000)?;
        let b = inference_flops_per_byte(&r, 4.57, &config)?;
        println!("{scale:>5}   embeddings {:>6.1}M   global share {:>5.1}%", r.params_local / 1e6, 100.0 * b.global_share);
    }

    let r = latent_recipe(16)?;
    let full = training_flops(&r, 1e11, 4.0, &config)?;
    let approx = 6.0 * r.params_global * 1e11 / 4.0;
    println!("\nscale 16, 1e11 bytes at T = 4: {full:.3e} FLOPs in full, {approx:.3e} from 6NB/T");
    Ok(())
}
