//! Writes plot descriptions and their flat CSV series for external plotting.
//!
//! cargo run --example plot_data -- /tmp/plots

use std::path::PathBuf;

use tokescale::law1::LawOneParams;
use tokescale::law2::LawTwoParams;
use tokescale::plot::{law_fit_lines, sensitivity_curve};

fn main() -> tokescale::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "plots".into()));
    std::fs::create_dir_all(&dir)?;
    let specs = [
        ("optimal_bytes", law_fit_lines(&LawOneParams::latent_published(), &[1.0, 4.0, 12.0], (1e18, 1e22))),
        ("loss_vs_compression", sensitivity_curve(&LawTwoParams::latent_published(), &[1e19, 1e20, 1e21], (1.0, 16.0))),
    ];
    for (name, spec) in specs {
        spec.validate()?;
        std::fs::write(dir.join(format!("{name}.json")), serde_json::to_vec_pretty(&spec)?)?;
        std::fs::write(dir.join(format!("{name}.csv")), spec.to_csv())?;
        println!("wrote {name}.json and {name}.csv ({} series)", spec.series.len());
    }
    Ok(())
}
