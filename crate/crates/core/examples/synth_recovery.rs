//! How well the optimal-data exponents come back as loss noise grows.
//!
//! cargo run --release --example synth_recovery

use tokescale::isoflop::{fit_all_cells, Optimum, ParamBasis};
use tokescale::law1::{fit_law1, LawOneOptions};
use tokescale::records::Family;
use tokescale::synth::{generate_grid, TruthSpec};

fn main() -> tokescale::Result<()> {
    let budgets = [5e18, 1e19, 5e19, 1e20, 5e20, 2e21];
    let compressions = [1.0, 2.0, 4.0, 6.0, 8.0, 12.0];
    let opts = LawOneOptions { max_starts: 500, ..LawOneOptions::default() };
    println!("noise   seed  alpha    beta     |d alpha|  |d beta|");
    for noise in [0.0, 0.005, 0.01, 0.02] {
        for seed in [7, 8, 9] {
            let truth = TruthSpec::latent().with_noise(noise, seed);
            let runs = generate_grid(&truth, &budgets, &compressions, 7)?;
            let (fits, _) = fit_all_cells(&runs, None, ParamBasis::Latent);
            let optima: Vec<Optimum> = fits.iter().map(Optimum::from).collect();
            let law = fit_law1(&optima, Family::LatentEntropy, &opts)?;
            println!(
                "{noise:<6}  {seed:>4}  {:.4}   {:.4}   {:.1e}    {:.1e}",
                law.alpha,
                law.beta,
                (law.alpha - truth.law1.alpha).abs(),
                (law.beta - truth.law1.beta).abs()
            );
            if noise == 0.0 {
                break;
            }
        }
    }
    Ok(())
}
