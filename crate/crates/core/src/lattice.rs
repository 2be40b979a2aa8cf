//! Thermal-expansion correlation: hexagonal cell volume, a Varshni-form fit
//! of the inverse volume against temperature, and the straight-line
//! regression of D against 1/V.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::{eval_model, fit_calibration, CalibrationModel, ModelKind, Series};

/// Lattice constants at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeRecord {
    /// K.
    pub t: f64,
    /// In-plane constant, Å.
    pub a: f64,
    /// Out-of-plane constant, Å.
    pub c: f64,
}

impl LatticeRecord {
    pub fn new(t: f64, a: f64, c: f64) -> Result<Self> {
        if !(t.is_finite() && a.is_finite() && c.is_finite()) || t < 0.0 || a <= 0.0 || c <= 0.0 {
            return Err(Error::InvalidParameter(format!("invalid lattice record (T = {t}, a = {a}, c = {c})")));
        }
        Ok(Self { t, a, c })
    }
}

/// Hexagonal cell volume `(sqrt(3)/2) a^2 c` in Å^3.
pub fn cell_volume(r: &LatticeRecord) -> f64 {
    0.5 * 3f64.sqrt() * r.a * r.a * r.c
}

/// Fits `1/V(T)` (Å^-3) with the Varshni form. The returned model maps any
/// temperature inside the record range to an inverse-volume estimate.
pub fn fit_inverse_volume(records: &[LatticeRecord]) -> Result<CalibrationModel> {
    if records.len() < 4 {
        return Err(Error::InsufficientData(format!("need at least 4 lattice records, got {}", records.len())));
    }
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let span = t.iter().copied().fold(f64::NEG_INFINITY, f64::max) - t.iter().copied().fold(f64::INFINITY, f64::min);
    if span <= 50.0 {
        return Err(Error::InsufficientData(format!("lattice records must span more than 50 K, got {span} K")));
    }
    let vinv = records.iter().map(|r| 1.0 / cell_volume(r)).collect();
    fit_calibration(ModelKind::Varshni, &Series::new(t, vinv, None)?)
}

/// Ordinary least-squares line with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub slope_sigma: f64,
    pub intercept_sigma: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// `y = slope * x + intercept` by ordinary least squares.
///
/// Standard errors use `s^2 = SSR / (n - 2)`; with exactly two points the
/// line interpolates and both sigmas are reported as zero.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidParameter("x and y lengths differ".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("regression needs at least 2 points, got {n}")));
    }
    if !x.iter().chain(y).all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("regression inputs must be finite".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("regression needs at least two distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ssr / syy).clamp(0.0, 1.0) };
    let (slope_sigma, intercept_sigma) = if n > 2 {
        let s2 = ssr / (nf - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(RegressionResult { slope, intercept, slope_sigma, intercept_sigma, r_squared, n })
}

/// One (1/V, D) point produced by [`regress_d_vs_vinv`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VinvPoint {
    pub t: f64,
    /// Å^-3.
    pub vinv: f64,
    /// MHz.
    pub d: f64,
}

/// Maps each temperature to `1/V` through the fitted curve and regresses D on
/// it. D is converted to GHz, so the slope is in GHz·Å³ and the intercept in
/// GHz.
pub fn regress_d_vs_vinv(d_series: &Series, vinv_model: &CalibrationModel) -> Result<(RegressionResult, Vec<VinvPoint>)> {
    let mut points = Vec::with_capacity(d_series.len());
    for (&t, &d) in d_series.t.iter().zip(&d_series.y) {
        if t < vinv_model.t_min || t > vinv_model.t_max {
            return Err(Error::RangeMismatch { t, t_min: vinv_model.t_min, t_max: vinv_model.t_max });
        }
        points.push(VinvPoint { t, vinv: eval_model(vinv_model, t)?, d });
    }
    let x: Vec<f64> = points.iter().map(|p| p.vinv).collect();
    let y: Vec<f64> = points.iter().map(|p| p.d * 1e-3).collect();
    Ok((linear_regression(&x, &y)?, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cell_volume() {
        let v = cell_volume(&LatticeRecord::new(0.0, 1.0, 1.0).unwrap());
        assert!((v - 0.866_025_403_784_438_6).abs() < 1e-15);
    }

    #[test]
    fn hbn_scale_volume() {
        let v = cell_volume(&LatticeRecord::new(10.0, 2.504, 6.661).unwrap());
        assert!((v - 0.866_025_403_784_438_6 * 2.504 * 2.504 * 6.661).abs() < 1e-12);
        assert!((v - 36.17).abs() < 5e-3, "{v}");
    }

    #[test]
    fn volume_scales_with_a_squared() {
        let v1 = cell_volume(&LatticeRecord::new(0.0, 2.5, 6.6).unwrap());
        let v2 = cell_volume(&LatticeRecord::new(0.0, 5.0, 6.6).unwrap());
        assert!((v2 - 4.0 * v1).abs() < 1e-12 * v2);
    }

    #[test]
    fn invalid_records() {
        assert!(LatticeRecord::new(-1.0, 2.5, 6.6).is_err());
        assert!(LatticeRecord::new(10.0, 0.0, 6.6).is_err());
        assert!(LatticeRecord::new(10.0, 2.5, -6.6).is_err());
    }

    #[test]
    fn two_point_regression_interpolates() {
        let r = linear_regression(&[1.0, 3.0], &[2.0, 8.0]).unwrap();
        assert_eq!((r.slope, r.intercept, r.r_squared), (3.0, -1.0, 1.0));
    }

    #[test]
    fn regression_needs_distinct_x() {
        assert!(linear_regression(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(linear_regression(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn too_few_records() {
        let recs: Vec<_> = (0..3).map(|i| LatticeRecord::new(100.0 * i as f64, 2.5, 6.6).unwrap()).collect();
        assert!(matches!(fit_inverse_volume(&recs), Err(Error::InsufficientData(_))));
        let recs: Vec<_> = (0..6).map(|i| LatticeRecord::new(10.0 + 5.0 * i as f64, 2.5, 6.6).unwrap()).collect();
        assert!(matches!(fit_inverse_volume(&recs), Err(Error::InsufficientData(_))));
    }
}
