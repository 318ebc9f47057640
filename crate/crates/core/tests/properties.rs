use proptest::prelude::*;

use tokescale::isoflop::{fit_all_cells, Optimum, ParamBasis};
use tokescale::law1::{fit_law1, LawOneOptions, LawOneParams};
use tokescale::law2::LawTwoParams;
use tokescale::records::{validate_grid, Family};
use tokescale::synth::{generate_grid, TruthSpec};

const BUDGETS: [f64; 4] = [1e19, 1e20, 1e21, 1e22];
const COMPRESSIONS: [f64; 4] = [1.0, 3.0, 6.0, 12.0];

fn truth(b0: f64, alpha: f64, beta: f64) -> TruthSpec {
    TruthSpec {
        law1: LawOneParams::new(Family::LatentEntropy, b0, alpha, beta),
        ..TruthSpec::latent()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn noiseless_grids_round_trip_through_both_stages(
        b0 in 1.0f64..50.0,
        alpha in 0.35f64..0.65,
        beta in 0.3f64..0.7,
    ) {
        let spec = truth(b0, alpha, beta);
        let runs = generate_grid(&spec, &BUDGETS, &COMPRESSIONS, 5).unwrap();
        prop_assert!(validate_grid(&runs, 1e-9).offending_records.is_empty());
        let (fits, failures) = fit_all_cells(&runs, None, ParamBasis::Latent);
        prop_assert!(failures.is_empty());
        let optima: Vec<Optimum> = fits.iter().map(Optimum::from).collect();
        let opts = LawOneOptions { max_starts: 100, ..LawOneOptions::default() };
        let law = fit_law1(&optima, Family::LatentEntropy, &opts).unwrap();
        prop_assert!((law.alpha - alpha).abs() < 1e-6);
        prop_assert!((law.beta - beta).abs() < 1e-6);
        prop_assert!(((law.b0 - b0) / b0).abs() < 1e-5);
    }

    #[test]
    fn optimal_compression_minimizes_predicted_loss(budget_exp in 18.0f64..23.0, factor in 1.01f64..4.0) {
        let law = LawTwoParams::latent_published();
        let c = 10f64.powf(budget_exp);
        let t = law.optimal_compression(c).unwrap();
        let best = law.predict_loss(c, t);
        prop_assert!(law.predict_loss(c, t * factor) > best);
        prop_assert!(law.predict_loss(c, (t / factor).max(1e-3)) > best);
    }
}
