//! Both laws fitted to noisy synthetic optima, with confidence intervals.
//!
//! cargo run --release --example fit_scaling_laws

use tokescale::isoflop::{fit_all_cells, Optimum, ParamBasis};
use tokescale::law1::{fit_law1, LawOneOptions};
use tokescale::law2::{fit_law2, LawTwoOptions, ResidualVariant};
use tokescale::records::Family;
use tokescale::synth::{generate_grid, TruthSpec};

fn main() -> tokescale::Result<()> {
    let truth = TruthSpec::latent().with_noise(0.01, 7);
    let budgets = [5e18, 1e19, 5e19, 1e20, 5e20, 2e21];
    let compressions = [1.0, 2.0, 4.0, 6.0, 8.0, 12.0];
    let runs = generate_grid(&truth, &budgets, &compressions, 7)?;
    let (fits, _) = fit_all_cells(&runs, None, ParamBasis::Latent);
    let optima: Vec<Optimum> = fits.iter().map(Optimum::from).collect();

    let law1 = fit_law1(&optima, Family::LatentEntropy, &LawOneOptions::default())?;
    println!("optimal data   B0 {:.3}  alpha {:.4}  beta {:.4}  N0 {:.3e}", law1.b0, law1.alpha, law1.beta, law1.n0);
    if let Some(ci) = &law1.intervals {
        println!("  95% alpha [{:.4}, {:.4}]", ci.alpha.low, ci.alpha.high);
        if let Some(beta) = &ci.beta {
            println!("  95% beta  [{:.4}, {:.4}]", beta.low, beta.high);
        }
    }
    println!("  truth        B0 {:.3}  alpha {:.4}  beta {:.4}", truth.law1.b0, truth.law1.alpha, truth.law1.beta);

    let law2 = fit_law2(&optima, Family::LatentEntropy, ResidualVariant::ComputeT, &LawTwoOptions::default())?;
    println!(
        "\nloss           L0 {:.1}  gamma {:.4}  E {:.4}  F {:.4}  T0 {:.2}  delta {:.4}",
        law2.l0,
        law2.gamma,
        law2.e,
        law2.f.unwrap_or(f64::NAN),
        law2.t0.unwrap_or(f64::NAN),
        law2.delta.unwrap_or(f64::NAN)
    );
    for c in [1e20, 1e21, 1e22] {
        println!("  T*({c:.0e}) = {:.2}", law2.optimal_compression(c)?);
    }
    Ok(())
}
