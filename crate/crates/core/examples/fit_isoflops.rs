//! IsoFLOP parabolas per (budget, compression) cell and one surface per budget.
//!
//! cargo run --example fit_isoflops

use tokescale::isoflop::{fit_all_cells, fit_budget_3d, ParamBasis};
use tokescale::synth::{generate_grid, TruthSpec};

fn main() -> tokescale::Result<()> {
    let truth = TruthSpec::latent().with_noise(0.005, 1);
    let budgets = [1e19, 1e20, 1e21];
    let compressions = [1.0, 2.0, 4.0, 6.0, 8.0, 12.0];
    let runs = generate_grid(&truth, &budgets, &compressions, 7)?;

    let (fits, failures) = fit_all_cells(&runs, None, ParamBasis::Latent);
    println!("budget     T     B* fitted   B* true     rho*    L*");
    for f in &fits {
        println!(
            "{:.0e}  {:>4}  {:.3e}  {:.3e}  {:>6.1}  {:.4}",
            f.budget,
            f.compression,
            f.opt_bytes,
            truth.law1.predict_data(f.budget, f.compression),
            f.opt_bpp.unwrap_or(f64::NAN),
            f.opt_loss
        );
    }
    for (c, t, e) in &failures {
        println!("cell {c:e} / {t}: {e}");
    }

    for c in budgets {
        let surface = fit_budget_3d(&runs, c, ParamBasis::Latent)?;
        println!(
            "\n{c:.0e}: surface minimum at T = {:.2}, rho = {:.1}, loss {:.4} (positive definite: {})",
            surface.opt_compression, surface.opt_bpp, surface.opt_loss, surface.hessian_pd
        );
    }
    Ok(())
}
