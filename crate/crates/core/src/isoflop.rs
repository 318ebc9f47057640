//! IsoFLOP analysis: parabolas in log-bytes per (budget, compression) cell
//! and paraboloids in (log-compression, log-bytes-per-parameter) per budget.
//!
//! Designs are centered and scaled before solving the normal equations;
//! optima are extracted in the centered coordinates and mapped back.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::{sorted_distinct, Family, RunRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Isoflop2D {
    pub budget: f64,
    pub compression: f64,
    /// `(a, b, c)` of `L = a·x² + b·x + c`, `x = ln B`.
    pub coeffs: [f64; 3],
    pub opt_log_bytes: f64,
    pub opt_bytes: f64,
    pub opt_loss: f64,
    pub opt_params: Option<f64>,
    pub opt_bpp: Option<f64>,
    /// The vertex lies outside the sampled range of `ln B`.
    pub vertex_outside_span: bool,
    /// `opt_params` came from extrapolating the end segment of the grid.
    pub params_extrapolated: bool,
    pub n_points: usize,
    pub rmse: f64,
}

impl Isoflop2D {
    pub fn predict(&self, bytes: f64) -> f64 {
        let x = bytes.ln();
        let [a, b, c] = self.coeffs;
        a * x * x + b * x + c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Isoflop3D {
    pub budget: f64,
    /// `q(u, v) = c0 + c1·u + c2·v + c3·u² + c4·u·v + c5·v²`, `u = ln T`, `v = ln ρ`.
    pub coeffs: [f64; 6],
    pub opt_compression: f64,
    pub opt_bpp: f64,
    pub opt_loss: f64,
    /// Bytes and parameters at the minimizer, from `C = 6·N·B/T` and `ρ = B/N`.
    pub opt_bytes: f64,
    pub opt_params: f64,
    pub hessian_pd: bool,
    pub n_points: usize,
    pub rmse: f64,
}

impl Isoflop3D {
    pub fn predict(&self, compression: f64, bpp: f64) -> f64 {
        let (u, v) = (compression.ln(), bpp.ln());
        let c = &self.coeffs;
        c[0] + c[1] * u + c[2] * v + c[3] * u * u + c[4] * u * v + c[5] * v * v
    }

    /// `∇q` at `(ln T, ln ρ)`.
    pub fn gradient(&self, compression: f64, bpp: f64) -> [f64; 2] {
        let (u, v) = (compression.ln(), bpp.ln());
        let c = &self.coeffs;
        [
            c[1] + 2.0 * c[3] * u + c[4] * v,
            c[2] + c[4] * u + 2.0 * c[5] * v,
        ]
    }
}

/// Where an optimum came from; Law I accepts either.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimumSource {
    Isoflop2d,
    Isoflop3d,
    External,
}

/// A compute-optimal point consumed by the scaling-law fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub budget: f64,
    pub compression: f64,
    pub opt_bytes: f64,
    pub opt_params: Option<f64>,
    pub opt_loss: f64,
    pub source: OptimumSource,
}

impl From<&Isoflop2D> for Optimum {
    fn from(fit: &Isoflop2D) -> Self {
        Optimum {
            budget: fit.budget,
            compression: fit.compression,
            opt_bytes: fit.opt_bytes,
            opt_params: fit.opt_params,
            opt_loss: fit.opt_loss,
            source: OptimumSource::Isoflop2d,
        }
    }
}

impl From<&Isoflop3D> for Optimum {
    fn from(fit: &Isoflop3D) -> Self {
        Optimum {
            budget: fit.budget,
            compression: fit.opt_compression,
            opt_bytes: fit.opt_bytes,
            opt_params: Some(fit.opt_params),
            opt_loss: fit.opt_loss,
            source: OptimumSource::Isoflop3d,
        }
    }
}

/// Which parameter count the interpolated `N*` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamBasis {
    /// Global/latent module only.
    #[default]
    Latent,
    /// Everything, including local modules and embeddings.
    Total,
}

fn mean_and_scale(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    (m, if sd > 0.0 { sd } else { 1.0 })
}

/// Least squares through the normal equations `XᵀX β = Xᵀy`.
fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let scale = xtx.diagonal().max();
    // Cholesky succeeds on nearly-singular matrices; guard on conditioning
    let eig = xtx.clone().symmetric_eigenvalues();
    if !(eig.min() > scale * 1e-12) {
        return None;
    }
    xtx.cholesky().map(|c| c.solve(&xty))
}

fn rmse(residuals: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = residuals.fold((0.0, 0usize), |(s, n), r| (s + r * r, n + 1));
    (sum / n as f64).sqrt()
}

/// Fits `L = a·(ln B)² + b·ln B + c` and extracts the vertex.
pub fn fit_parabola(points: &[(f64, f64)], budget: f64, compression: f64) -> Result<Isoflop2D> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a parabola needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(b, l)| !(b > 0.0 && b.is_finite() && l.is_finite())) {
        return Err(Error::Domain("bytes must be positive and losses finite".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    if sorted_distinct(xs.iter().copied()).len() < 3 {
        return Err(Error::InsufficientData("fewer than 3 distinct byte counts".into()));
    }
    let (m, s) = mean_and_scale(&xs);
    let design = DMatrix::from_fn(points.len(), 3, |i, j| ((xs[i] - m) / s).powi(2 - j as i32));
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let beta = normal_equations(&design, &y)
        .ok_or_else(|| Error::InsufficientData("degenerate byte grid".into()))?;
    let (a_z, b_z, c_z) = (beta[0], beta[1], beta[2]);
    let a = a_z / (s * s);
    if !(a > 0.0) {
        return Err(Error::NonConvex { leading: a });
    }
    let b = b_z / s - 2.0 * a * m;
    let c = a_z * m * m / (s * s) - b_z * m / s + c_z;

    let z_star = -b_z / (2.0 * a_z);
    let opt_log_bytes = m + s * z_star;
    let opt_loss = c_z - b_z * b_z / (4.0 * a_z);
    let fitted = |z: f64| a_z * z * z + b_z * z + c_z;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Isoflop2D {
        budget,
        compression,
        coeffs: [a, b, c],
        opt_log_bytes,
        opt_bytes: opt_log_bytes.exp(),
        opt_loss,
        opt_params: None,
        opt_bpp: None,
        vertex_outside_span: opt_log_bytes < lo || opt_log_bytes > hi,
        params_extrapolated: false,
        n_points: points.len(),
        rmse: rmse(xs.iter().zip(points).map(|(x, p)| p.1 - fitted((x - m) / s))),
    })
}

/// Log-linear interpolation result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interpolated {
    pub value: f64,
    pub extrapolated: bool,
}

/// `ln N` piecewise linear in `ln B` through the grid; continues the end
/// segment (and flags it) outside the span.
pub fn interpolate_params(target_bytes: f64, grid: &[(f64, f64)]) -> Result<Interpolated> {
    if grid.len() < 2 {
        return Err(Error::InsufficientData(
            "interpolation needs at least 2 grid points".into(),
        ));
    }
    if !(target_bytes > 0.0) || grid.iter().any(|&(b, n)| !(b > 0.0 && n > 0.0)) {
        return Err(Error::Domain("interpolation needs positive bytes and params".into()));
    }
    if let Some(&(_, n)) = grid.iter().find(|p| p.0 == target_bytes) {
        return Ok(Interpolated {
            value: n,
            extrapolated: false,
        });
    }
    let mut pts: Vec<(f64, f64)> = grid.iter().map(|&(b, n)| (b.ln(), n.ln())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < 2 {
        return Err(Error::InsufficientData("grid has a single distinct byte count".into()));
    }
    let x = target_bytes.ln();
    let last = pts.len() - 1;
    let extrapolated = x < pts[0].0 || x > pts[last].0;
    let k = pts
        .windows(2)
        .position(|w| x <= w[1].0)
        .unwrap_or(last - 1);
    let (x0, y0) = pts[k];
    let (x1, y1) = pts[k + 1];
    let y = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    Ok(Interpolated {
        value: y.exp(),
        extrapolated,
    })
}

/// Fits the full bivariate quadratic in `(ln T, ln ρ)` and solves for the
/// stationary point, which must be a minimum.
pub fn fit_paraboloid(points: &[(f64, f64, f64)], budget: f64) -> Result<Isoflop3D> {
    if points.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "a paraboloid needs at least 6 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(t, r, l)| !(t > 0.0 && r > 0.0 && l.is_finite()))
    {
        return Err(Error::Domain("compression and bpp must be positive".into()));
    }
    let us: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let vs: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    if sorted_distinct(us.iter().copied()).len() < 2 || sorted_distinct(vs.iter().copied()).len() < 3 {
        return Err(Error::InsufficientData(
            "need at least 2 distinct compressions and 3 distinct bpp values".into(),
        ));
    }
    let (mu, su) = mean_and_scale(&us);
    let (mv, sv) = mean_and_scale(&vs);
    let n = points.len();
    let design = DMatrix::from_fn(n, 6, |i, j| {
        let p = (us[i] - mu) / su;
        let q = (vs[i] - mv) / sv;
        [1.0, p, q, p * p, p * q, q * q][j]
    });
    let y = DVector::from_iterator(n, points.iter().map(|p| p.2));
    let k = normal_equations(&design, &y)
        .ok_or_else(|| Error::InsufficientData("rank-deficient paraboloid design".into()))?;

    let hess = Matrix2::new(2.0 * k[3], k[4], k[4], 2.0 * k[5]);
    let eig = hess.symmetric_eigenvalues();
    let sign = |e: f64| if e > 0.0 { 1 } else if e < 0.0 { -1 } else { 0 };
    let mut signs = [sign(eig[0]), sign(eig[1])];
    signs.sort();
    if signs != [1, 1] {
        return Err(Error::Saddle { signs });
    }
    let stationary = hess
        .lu()
        .solve(&Vector2::new(-k[1], -k[2]))
        .ok_or_else(|| Error::SingularDesign("singular quadratic form".into()))?;
    let (p, q) = (stationary[0], stationary[1]);
    let opt_loss = k[0] + k[1] * p + k[2] * q + k[3] * p * p + k[4] * p * q + k[5] * q * q;

    // raw-coordinate coefficients: p = (u − mu)/su, q = (v − mv)/sv
    let (a3, a4, a5) = (k[3] / (su * su), k[4] / (su * sv), k[5] / (sv * sv));
    let a1 = k[1] / su - 2.0 * a3 * mu - a4 * mv;
    let a2 = k[2] / sv - a4 * mu - 2.0 * a5 * mv;
    let a0 = k[0] - k[1] * mu / su - k[2] * mv / sv + a3 * mu * mu + a4 * mu * mv + a5 * mv * mv;

    let opt_compression = (mu + su * p).exp();
    let opt_bpp = (mv + sv * q).exp();
    let opt_params = (budget * opt_compression / (6.0 * opt_bpp)).sqrt();
    let fitted = |i: usize| {
        let (p, q) = ((us[i] - mu) / su, (vs[i] - mv) / sv);
        k[0] + k[1] * p + k[2] * q + k[3] * p * p + k[4] * p * q + k[5] * q * q
    };
    Ok(Isoflop3D {
        budget,
        coeffs: [a0, a1, a2, a3, a4, a5],
        opt_compression,
        opt_bpp,
        opt_loss,
        opt_bytes: opt_bpp * opt_params,
        opt_params,
        hessian_pd: true,
        n_points: n,
        rmse: rmse((0..n).map(|i| points[i].2 - fitted(i))),
    })
}

fn params_of(record: &RunRecord, basis: ParamBasis) -> Result<f64> {
    match basis {
        ParamBasis::Latent => Ok(record.latent_params),
        ParamBasis::Total => record.total_params_required(),
    }
}

/// Groups records into `(budget, compression)` cells, in ascending order.
pub fn cells(records: &[RunRecord]) -> BTreeMap<(u64, u64), Vec<&RunRecord>> {
    let mut map: BTreeMap<(u64, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        map.entry((r.budget_flops.to_bits(), r.compression.to_bits()))
            .or_default()
            .push(r);
    }
    map
}

/// 2D fit of one cell, with `N*` interpolated from the cell's `(B, N)` grid.
pub fn fit_cell(cell: &[&RunRecord], basis: ParamBasis) -> Result<Isoflop2D> {
    let first = cell
        .first()
        .ok_or_else(|| Error::InsufficientData("empty cell".into()))?;
    let points: Vec<(f64, f64)> = cell.iter().map(|r| (r.bytes, r.loss_bpb)).collect();
    let mut fit = fit_parabola(&points, first.budget_flops, first.compression)?;
    let grid = cell
        .iter()
        .map(|r| Ok((r.bytes, params_of(r, basis)?)))
        .collect::<Result<Vec<_>>>()?;
    let n = interpolate_params(fit.opt_bytes, &grid)?;
    fit.opt_params = Some(n.value);
    fit.opt_bpp = Some(fit.opt_bytes / n.value);
    fit.params_extrapolated = n.extrapolated;
    Ok(fit)
}

/// Fits every cell of a family; non-convex cells are reported separately
/// rather than aborting the whole sweep.
pub fn fit_all_cells(
    records: &[RunRecord],
    family: Option<Family>,
    basis: ParamBasis,
) -> (Vec<Isoflop2D>, Vec<(f64, f64, Error)>) {
    let selected: Vec<RunRecord> = records
        .iter()
        .filter(|r| family.is_none_or(|f| r.family == f))
        .cloned()
        .collect();
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for cell in cells(&selected).values() {
        match fit_cell(cell, basis) {
            Ok(fit) => fits.push(fit),
            Err(e) => failures.push((cell[0].budget_flops, cell[0].compression, e)),
        }
    }
    (fits, failures)
}

/// 3D fit over all records at one budget, using each record's `ρ = B/N`.
pub fn fit_budget_3d(records: &[RunRecord], budget: f64, basis: ParamBasis) -> Result<Isoflop3D> {
    let points = records
        .iter()
        .filter(|r| r.budget_flops == budget)
        .map(|r| Ok((r.compression, r.bytes / params_of(r, basis)?, r.loss_bpb)))
        .collect::<Result<Vec<_>>>()?;
    fit_paraboloid(&points, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn known_vertex() {
        let pts: Vec<(f64, f64)> = [23.5, 24.0, 24.7, 25.3, 26.0, 26.4]
            .iter()
            .map(|&x: &f64| (x.exp(), (x - 25.0).powi(2) + 0.9))
            .collect();
        let fit = fit_parabola(&pts, 1e20, 4.0).unwrap();
        assert!(rel(fit.opt_log_bytes, 25.0) < 1e-12);
        assert!(rel(fit.opt_bytes, 25f64.exp()) < 1e-10);
        assert!((fit.opt_loss - 0.9).abs() < 1e-12);
        assert!(fit.rmse < 1e-12);
        assert!(!fit.vertex_outside_span);
        assert!((fit.coeffs[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        let r = fit_parabola(&[(1e9, 1.0), (2e9, 0.9)], 1e20, 1.0);
        assert!(matches!(r, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn concave_cell_is_rejected() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| ((20.0 + i as f64).exp(), -((i as f64) - 2.0).powi(2))).collect();
        assert!(matches!(fit_parabola(&pts, 1e20, 1.0), Err(Error::NonConvex { .. })));
    }

    #[test]
    fn vertex_near_rho_sixty() {
        // loss vs ln B at C = 1e20, T = 4 with the vertex placed at ρ = 60
        let (c, t) = (1e20f64, 4.0f64);
        let n_star = (c * t / (6.0 * 60.0)).sqrt();
        let b_star = 60.0 * n_star;
        let pts: Vec<(f64, f64)> = (-4..=4)
            .map(|k| {
                let x = b_star.ln() + 0.35 * k as f64;
                (x.exp(), 0.96 + 0.02 * (x - b_star.ln()).powi(2))
            })
            .collect();
        let grid: Vec<(f64, f64)> = pts.iter().map(|&(b, _)| (b, c * t / (6.0 * b))).collect();
        let mut fit = fit_parabola(&pts, c, t).unwrap();
        let n = interpolate_params(fit.opt_bytes, &grid).unwrap();
        fit.opt_bpp = Some(fit.opt_bytes / n.value);
        assert!(rel(fit.opt_bpp.unwrap(), 60.0) < 0.10);
    }

    #[test]
    fn interpolation_examples() {
        let grid = [(5e10, 1e9), (1e11, 2e9)];
        let mid = interpolate_params((5e10f64 * 1e11).sqrt(), &grid).unwrap();
        assert!(rel(mid.value, 2f64.sqrt() * 1e9) < 1e-12);
        assert!(!mid.extrapolated);
        assert_eq!(interpolate_params(1e11, &grid).unwrap().value, 2e9);

        // hand continuation of the end segment: ln N slope 1 in ln B
        let out = interpolate_params(2e11, &grid).unwrap();
        assert!(out.extrapolated);
        assert!(rel(out.value, 4e9) < 1e-12);
        let below = interpolate_params(2.5e10, &grid).unwrap();
        assert!(below.extrapolated && rel(below.value, 5e8) < 1e-12);

        assert!(matches!(interpolate_params(1.0, &[(1.0, 1.0)]), Err(Error::InsufficientData(_))));
        assert!(matches!(interpolate_params(1.0, &[]), Err(Error::InsufficientData(_))));
    }

    fn quadratic_surface(t_star: f64, rho_star: f64, l_star: f64) -> Vec<(f64, f64, f64)> {
        let mut pts = Vec::new();
        for t in [1.0, 2.0, 4.0, 6.0, 8.0, 12.0] {
            for k in -3..=3 {
                let rho = rho_star * (0.4 * k as f64).exp();
                let du = (t / t_star).ln();
                let dv = (rho / rho_star).ln();
                pts.push((t, rho, l_star + 0.03 * du * du + 0.01 * du * dv + 0.05 * dv * dv));
            }
        }
        pts
    }

    #[test]
    fn paraboloid_exact_minimum() {
        let fit = fit_paraboloid(&quadratic_surface(4.0, 60.0, 0.95), 1e20).unwrap();
        assert!(rel(fit.opt_compression, 4.0) < 1e-9);
        assert!(rel(fit.opt_bpp, 60.0) < 1e-9);
        assert!((fit.opt_loss - 0.95).abs() < 1e-12);
        let g = fit.gradient(fit.opt_compression, fit.opt_bpp);
        assert!(g[0].abs() < 1e-10 && g[1].abs() < 1e-10, "{g:?}");
        assert!(fit.hessian_pd);
        assert!(rel(6.0 * fit.opt_params * fit.opt_bytes / fit.opt_compression, 1e20) < 1e-12);
    }

    #[test]
    fn language_shaped_surfaces() {
        // English and Russian rows at C = 1e20
        for (t, rho) in [(3.71, 62.1), (5.67, 96.3)] {
            let fit = fit_paraboloid(&quadratic_surface(t, rho, 0.9), 1e20).unwrap();
            assert!(rel(fit.opt_compression, t) < 1e-9);
            assert!(rel(fit.opt_bpp, rho) < 1e-9);
        }
    }

    #[test]
    fn saddle_is_rejected() {
        let pts: Vec<(f64, f64, f64)> = quadratic_surface(4.0, 60.0, 0.9)
            .into_iter()
            .map(|(t, r, _)| {
                let (u, v) = ((t / 4.0f64).ln(), (r / 60.0f64).ln());
                (t, r, u * u - v * v)
            })
            .collect();
        match fit_paraboloid(&pts, 1e20) {
            Err(Error::Saddle { signs }) => assert_eq!(signs, [-1, 1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn paraboloid_needs_spread() {
        let pts: Vec<(f64, f64, f64)> = (0..8).map(|i| (4.0, 10.0 * (i + 1) as f64, 1.0)).collect();
        assert!(matches!(fit_paraboloid(&pts, 1e20), Err(Error::InsufficientData(_))));
        let pts: Vec<(f64, f64, f64)> = (0..8)
            .map(|i| (if i % 2 == 0 { 2.0 } else { 4.0 }, 10.0 * (i + 1) as f64, 1.0))
            .collect();
        // two compressions cannot pin the u² term
        assert!(matches!(fit_paraboloid(&pts, 1e20), Err(Error::InsufficientData(_))));
    }

    proptest! {
        #[test]
        fn unit_change_rescales_vertex(x0 in 18.0f64..30.0, a in 0.01f64..1.0, k in 1e-9f64..1e3) {
            let pts: Vec<(f64, f64)> = (-3..=3).map(|i| {
                let x = x0 + 0.5 * i as f64;
                (x.exp(), a * (x - x0).powi(2) + 0.8)
            }).collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(b, l)| (b * k, l)).collect();
            let f1 = fit_parabola(&pts, 1e20, 1.0).unwrap();
            let f2 = fit_parabola(&scaled, 1e20, 1.0).unwrap();
            prop_assert!(rel(f2.opt_bytes, f1.opt_bytes * k) < 1e-9);
            prop_assert!((f2.coeffs[0] - f1.coeffs[0]).abs() < 1e-9 * f1.coeffs[0].abs().max(1.0));
            prop_assert!((f1.opt_loss - f2.opt_loss).abs() < 1e-10);
        }

        #[test]
        fn exact_point_does_not_raise_rmse(x0 in 20.0f64..28.0, noise in proptest::collection::vec(-0.01f64..0.01, 6)) {
            let pts: Vec<(f64, f64)> = noise.iter().enumerate().map(|(i, e)| {
                let x = x0 + 0.4 * (i as f64 - 2.5);
                (x.exp(), (x - x0).powi(2) * 0.1 + 0.9 + e)
            }).collect();
            let fit = fit_parabola(&pts, 1e20, 1.0).unwrap();
            let x_new = x0 + 0.13;
            let mut more = pts.clone();
            more.push((x_new.exp(), fit.predict(x_new.exp())));
            let refit = fit_parabola(&more, 1e20, 1.0).unwrap();
            prop_assert!(refit.rmse <= fit.rmse * (1.0 + 1e-9) + 1e-15);
        }

        #[test]
        fn paraboloid_vertex_exact(t in 1.5f64..10.0, rho in 10.0f64..200.0, l in 0.5f64..1.5) {
            let fit = fit_paraboloid(&quadratic_surface(t, rho, l), 1e20).unwrap();
            prop_assert!(rel(fit.opt_compression, t) < 1e-9);
            prop_assert!(rel(fit.opt_bpp, rho) < 1e-9);
            let g = fit.gradient(fit.opt_compression, fit.opt_bpp);
            prop_assert!(g[0].abs() < 1e-10 && g[1].abs() < 1e-10);
        }
    }
}
