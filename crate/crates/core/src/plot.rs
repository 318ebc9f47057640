//! Plot data: a small JSON description plus flat CSV series. Nothing here
//! renders; external tools draw from these files.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isoflop::{Isoflop2D, Isoflop3D};
use crate::law1::LawOneParams;
use crate::law2::LawTwoParams;
use crate::multilingual::LanguageReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    Isoflop2d,
    Isoflop3dHeatmap,
    LawFitLines,
    SensitivityCurve,
    ParityScatter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub log: bool,
}

impl Axis {
    pub fn new(name: &str, log: bool) -> Self {
        Axis { name: name.into(), log }
    }
}

/// One labelled series. Heatmaps use `grid[i][j]` over `x[j]`, `y[i]`;
/// everything else uses `y[k]` against `x[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub title: String,
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub series: Vec<Series>,
}

impl PlotSpec {
    pub fn validate(&self) -> Result<()> {
        for s in &self.series {
            match &s.grid {
                Some(grid) => {
                    if grid.len() != s.y.len() || grid.iter().any(|row| row.len() != s.x.len()) {
                        return Err(Error::validation(
                            "series",
                            format!("grid of '{}' does not match its axes", s.label),
                        ));
                    }
                }
                None => {
                    if s.x.len() != s.y.len() {
                        return Err(Error::validation(
                            "series",
                            format!("'{}' has {} x values and {} y values", s.label, s.x.len(), s.y.len()),
                        ));
                    }
                }
            }
            for (axis, values) in [(&self.x_axis, &s.x), (&self.y_axis, &s.y)] {
                if axis.log && values.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::validation(
                        "series",
                        format!("'{}' has non-positive values on log axis '{}'", s.label, axis.name),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Long-format CSV: `series,x,y,value` (`value` only for heatmaps).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,x,y,value\n");
        for s in &self.series {
            match &s.grid {
                Some(grid) => {
                    for (i, row) in grid.iter().enumerate() {
                        for (j, v) in row.iter().enumerate() {
                            let _ = writeln!(out, "{},{},{},{}", s.label, s.x[j], s.y[i], v);
                        }
                    }
                }
                None => {
                    for (x, y) in s.x.iter().zip(&s.y) {
                        let _ = writeln!(out, "{},{},{},", s.label, x, y);
                    }
                }
            }
        }
        out
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

/// Fitted parabolas, one series per `(C, T)` cell, over `±span` in `ln B`.
pub fn isoflop2d(fits: &[Isoflop2D], span: f64) -> PlotSpec {
    let series = fits
        .iter()
        .map(|f| {
            let x = log_space(f.opt_bytes * (-span).exp(), f.opt_bytes * span.exp(), 41);
            let y = x.iter().map(|&b| f.predict(b)).collect();
            Series { label: format!("C={:e} T={}", f.budget, f.compression), x, y, grid: None }
        })
        .collect();
    PlotSpec {
        kind: PlotKind::Isoflop2d,
        title: "IsoFLOP parabolas".into(),
        x_axis: Axis::new("bytes", true),
        y_axis: Axis::new("loss_bpb", false),
        series,
    }
}

/// Fitted loss surface over compression × bytes-per-parameter.
pub fn isoflop3d_heatmap(fit: &Isoflop3D, compressions: (f64, f64), bpp: (f64, f64), n: usize) -> PlotSpec {
    let x = log_space(compressions.0, compressions.1, n);
    let y = log_space(bpp.0, bpp.1, n);
    let grid = y.iter().map(|&r| x.iter().map(|&t| fit.predict(t, r)).collect()).collect();
    PlotSpec {
        kind: PlotKind::Isoflop3dHeatmap,
        title: format!("IsoFLOP surface at C={:e}", fit.budget),
        x_axis: Axis::new("compression", true),
        y_axis: Axis::new("bytes_per_param", true),
        series: vec![Series { label: "loss_bpb".into(), x, y, grid: Some(grid) }],
    }
}

/// `B*(C)` lines per compression.
pub fn law_fit_lines(law: &LawOneParams, compressions: &[f64], budgets: (f64, f64)) -> PlotSpec {
    let x = log_space(budgets.0, budgets.1, 41);
    let series = compressions
        .iter()
        .map(|&t| Series {
            label: format!("T={t}"),
            y: x.iter().map(|&c| law.predict_data(c, t)).collect(),
            x: x.clone(),
            grid: None,
        })
        .collect();
    PlotSpec {
        kind: PlotKind::LawFitLines,
        title: "Optimal bytes".into(),
        x_axis: Axis::new("budget_flops", true),
        y_axis: Axis::new("bytes", true),
        series,
    }
}

/// Predicted loss against compression, one series per budget.
pub fn sensitivity_curve(law: &LawTwoParams, budgets: &[f64], compressions: (f64, f64)) -> PlotSpec {
    let x = log_space(compressions.0, compressions.1, 41);
    let series = budgets
        .iter()
        .map(|&c| Series {
            label: format!("C={c:e}"),
            y: x.iter().map(|&t| law.predict_loss(c, t)).collect(),
            x: x.clone(),
            grid: None,
        })
        .collect();
    PlotSpec {
        kind: PlotKind::SensitivityCurve,
        title: "Loss against compression".into(),
        x_axis: Axis::new("compression", true),
        y_axis: Axis::new("loss_bpb", false),
        series,
    }
}

/// Parity against optimal compression per language.
pub fn parity_scatter(report: &LanguageReport) -> PlotSpec {
    let rows = &report.rows;
    PlotSpec {
        kind: PlotKind::ParityScatter,
        title: "Parity and optimal compression".into(),
        x_axis: Axis::new("parity", true),
        y_axis: Axis::new("opt_compression", true),
        series: rows
            .iter()
            .map(|r| Series { label: r.language.clone(), x: vec![r.parity], y: vec![r.opt_compression], grid: None })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensitivity_curve_validates_and_round_trips() {
        let spec = sensitivity_curve(&LawTwoParams::latent_published(), &[1e20, 1e21], (1.0, 16.0));
        spec.validate().unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"sensitivity-curve\""));
        assert_eq!(serde_json::from_str::<PlotSpec>(&json).unwrap(), spec);
        assert_eq!(spec.to_csv().lines().count(), 1 + 2 * 41);
    }

    #[test]
    fn rejects_ragged_and_nonpositive_series() {
        let mut spec = law_fit_lines(&LawOneParams::latent_published(), &[4.0], (1e19, 1e21));
        spec.validate().unwrap();
        spec.series[0].y.pop();
        assert!(spec.validate().is_err());
        spec.series[0].y.push(0.0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn heatmap_shape() {
        let fit = Isoflop3D {
            budget: 1e20,
            coeffs: [1.0, 0.0, 0.0, 0.1, 0.0, 0.1],
            opt_compression: 1.0,
            opt_bpp: 1.0,
            opt_loss: 1.0,
            opt_bytes: 1.0,
            opt_params: 1.0,
            hessian_pd: true,
            n_points: 6,
            rmse: 0.0,
        };
        let spec = isoflop3d_heatmap(&fit, (1.0, 12.0), (10.0, 400.0), 5);
        spec.validate().unwrap();
        assert_eq!(spec.to_csv().lines().count(), 1 + 25);
    }
}
