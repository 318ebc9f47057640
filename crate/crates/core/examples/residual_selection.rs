//! Chooses the residual form of the loss law by extrapolation to a held-out budget.
//!
//! cargo run --release --example residual_selection

use tokescale::law2::{select_residual_model, LawTwoOptions, LawTwoParams, ResidualFitMode};
use tokescale::records::Family;
use tokescale::synth::{generate_optima, TruthSpec};

fn main() -> tokescale::Result<()> {
    let law2 = LawTwoParams::compute_t(Family::LatentEntropy, 3342.0, -0.206, 0.7075, 0.0341, 14.9, 0.0302);
    let spec = TruthSpec { law2, ..TruthSpec::latent() }.with_noise(0.01, 7);
    let train = [5e18, 1e19, 2e19, 5e19, 1e20, 2e20, 5e20, 1e21];
    let mut optima = generate_optima(&spec, &train, &[1.0, 2.0, 4.0, 6.0, 8.0, 12.0])?;
    let holdout = TruthSpec { seed: 8, ..spec.clone() };
    optima.extend(generate_optima(&holdout, &[2e21], &[1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0])?);

    for mode in [ResidualFitMode::Nested, ResidualFitMode::Joint] {
        let opts = LawTwoOptions { mode, ..LawTwoOptions::default() };
        let report = select_residual_model(&optima, 2e21, &opts)?;
        println!("{mode:?}: trained on {} optima, scored on {}", report.n_train, report.n_holdout);
        print!("{}", report.to_csv());
        println!();
    }
    Ok(())
}
