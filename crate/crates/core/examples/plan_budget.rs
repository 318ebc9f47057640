//! Compute-optimal configurations from the published latent-family laws.
//!
//! cargo run --example plan_budget

use tokescale::law1::LawOneParams;
use tokescale::law2::LawTwoParams;
use tokescale::recipes::{approx_compute, bytes_for_budget, count_global_params, latent_recipe, MAX_SCALE};

fn main() -> tokescale::Result<()> {
    let law1 = LawOneParams::latent_published();
    let law2 = LawTwoParams::latent_published();
    println!("budget    T*     B*          N*          rho*   loss    scale  bytes for recipe");
    for c in [1e19, 1e20, 1e21, 1e22] {
        let t = law2.optimal_compression(c)?;
        let n = law1.predict_params(c, t);
        let Some(scale) = (1..=MAX_SCALE).find(|&s| count_global_params(s) >= n) else {
            println!("{c:.0e}  N* = {n:.3e} is beyond the largest recipe");
            continue;
        };
        let recipe = latent_recipe(scale)?;
        let split = bytes_for_budget(c, recipe.params_global, t)?;
        assert!((approx_compute(recipe.params_global, split.bytes, t)? / c - 1.0).abs() < 1e-12);
        println!(
            "{c:.0e}  {t:.2}  {:.3e}  {n:.3e}  {:>5.1}  {:.4}  {scale:>5}  {:.3e}",
            law1.predict_data(c, t),
            law1.predict_bpp(c, t),
            law2.predict_loss(c, t),
            split.bytes
        );
    }

    let c = 1e20;
    println!("\nloss above the optimum at {c:.0e}:");
    for t in [1.0, 2.0, 4.0, 8.0, 12.0] {
        println!("  T = {t:>4}: +{:.4} bpb", law2.loss_sensitivity(c, t)?);
    }
    Ok(())
}
