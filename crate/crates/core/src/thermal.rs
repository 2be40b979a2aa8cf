//! Temperature calibration laws for the zero-field splitting.
//!
//! Supported laws:
//!
//! * Varshni, `D(T) = D0 - alpha T^2 / (beta + T)` with `alpha, beta > 0`.
//! * Modified Varshni, `D(T) = D0 - A T^4 / (B + T)^2` with `B` free in sign.
//! * Third- and fifth-order polynomials in `T`.
//! * Straight line, used for `E(T)`.
//!
//! Every fit reports its largest absolute residual and whether the fitted
//! curve is monotonically decreasing over the fit range. Only monotone models
//! can be inverted for thermometry.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{self, ResidualProblem, SolveOptions, Termination, Transform};

/// Bisection stops once the bracket is narrower than this (K).
pub const INVERSION_TOL_K: f64 = 1e-6;

/// Spacing of the grid on which monotonicity is checked (K).
pub const MONOTONE_GRID_STEP_K: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Varshni,
    ModifiedVarshni,
    Poly3,
    Poly5,
    Linear,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] =
        [ModelKind::Varshni, ModelKind::ModifiedVarshni, ModelKind::Poly3, ModelKind::Poly5, ModelKind::Linear];

    pub fn param_count(self) -> usize {
        match self {
            ModelKind::Varshni | ModelKind::ModifiedVarshni => 3,
            ModelKind::Poly3 => 4,
            ModelKind::Poly5 => 6,
            ModelKind::Linear => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Varshni => "varshni",
            ModelKind::ModifiedVarshni => "modified-varshni",
            ModelKind::Poly3 => "poly3",
            ModelKind::Poly5 => "poly5",
            ModelKind::Linear => "linear",
        }
    }

    pub fn param_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            ModelKind::Varshni => &["d0", "alpha", "beta"],
            ModelKind::ModifiedVarshni => &["d0", "a", "b"],
            ModelKind::Poly3 => &["c0", "c1", "c2", "c3"],
            ModelKind::Poly5 => &["c0", "c1", "c2", "c3", "c4", "c5"],
            ModelKind::Linear => &["intercept", "slope"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    fn poly_degree(self) -> Option<usize> {
        match self {
            ModelKind::Poly3 => Some(3),
            ModelKind::Poly5 => Some(5),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarshniParams {
    /// MHz at T = 0.
    pub d0: f64,
    /// MHz/K.
    pub alpha: f64,
    /// K.
    pub beta: f64,
}

impl VarshniParams {
    pub fn new(d0: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(d0.is_finite() && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter("Varshni parameters must be finite".into()));
        }
        if alpha <= 0.0 || beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Varshni alpha and beta must be positive, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Self { d0, alpha, beta })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.d0 - self.alpha * t * t / (self.beta + t)
    }

    /// `dD/dT = -alpha T (T + 2 beta) / (beta + T)^2`.
    pub fn derivative(&self, t: f64) -> f64 {
        -self.alpha * t * (t + 2.0 * self.beta) / (self.beta + t).powi(2)
    }

    /// Gradient with respect to `(d0, alpha, beta)`.
    pub fn gradient(&self, t: f64) -> [f64; 3] {
        let s = self.beta + t;
        [1.0, -t * t / s, self.alpha * t * t / (s * s)]
    }
}

/// Analytic temperature derivative of the Varshni law.
pub fn varshni_derivative(p: &VarshniParams, t: f64) -> Result<f64> {
    check_temperature(t)?;
    Ok(p.derivative(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModVarshniParams {
    pub d0: f64,
    /// MHz/K^2.
    pub a: f64,
    /// K, either sign.
    pub b: f64,
}

impl ModVarshniParams {
    pub fn eval(&self, t: f64) -> f64 {
        let s = self.b + t;
        self.d0 - self.a * t.powi(4) / (s * s)
    }

    /// `dD/dT = -A T^3 (2T + 4B) / (B + T)^3`.
    pub fn derivative(&self, t: f64) -> f64 {
        -self.a * t.powi(3) * (2.0 * t + 4.0 * self.b) / (self.b + t).powi(3)
    }

    pub fn gradient(&self, t: f64) -> [f64; 3] {
        let s = self.b + t;
        let t4 = t.powi(4);
        [1.0, -t4 / (s * s), 2.0 * self.a * t4 / (s * s * s)]
    }
}

/// Polynomial in `T`. Coefficients are reported in the plain power basis;
/// evaluation uses the scaled variable `x = (T - center) / half_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyParams {
    /// `c_i` multiplies `T^i`.
    pub coefficients: Vec<f64>,
    pub center: f64,
    pub half_range: f64,
    /// Coefficients of `x^i`.
    pub scaled_coefficients: Vec<f64>,
}

impl PolyParams {
    fn x(&self, t: f64) -> f64 {
        (t - self.center) / self.half_range
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = self.x(t);
        self.scaled_coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let x = self.x(t);
        let k = self.scaled_coefficients.len();
        let mut acc = 0.0;
        for i in (1..k).rev() {
            acc = acc * x + i as f64 * self.scaled_coefficients[i];
        }
        acc / self.half_range
    }

    /// Evaluates the power-basis coefficients directly.
    pub fn eval_power_basis(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }
}

/// Matrix `M` with `power = M * scaled` for `x = (T - center) / h`.
fn scaled_to_power_matrix(degree: usize, center: f64, h: f64) -> DMatrix<f64> {
    let k = degree + 1;
    let mut binom = vec![vec![0.0_f64; k]; k];
    for n in 0..k {
        binom[n][0] = 1.0;
        for r in 1..=n {
            binom[n][r] = binom[n - 1][r - 1] + if r < n { binom[n - 1][r] } else { 0.0 };
        }
    }
    DMatrix::from_fn(k, k, |i, j| {
        if i > j {
            0.0
        } else {
            binom[j][i] * (-center).powi((j - i) as i32) / h.powi(j as i32)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub intercept: f64,
    /// Per kelvin.
    pub slope: f64,
}

impl LinearParams {
    pub fn eval(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ModelParams {
    Varshni(VarshniParams),
    ModifiedVarshni(ModVarshniParams),
    Polynomial(PolyParams),
    Linear(LinearParams),
}

impl ModelParams {
    fn kind_matches(&self, kind: ModelKind) -> bool {
        match (self, kind) {
            (ModelParams::Varshni(_), ModelKind::Varshni)
            | (ModelParams::ModifiedVarshni(_), ModelKind::ModifiedVarshni)
            | (ModelParams::Linear(_), ModelKind::Linear) => true,
            (ModelParams::Polynomial(p), k) => k.poly_degree().is_some_and(|d| p.coefficients.len() == d + 1),
            _ => false,
        }
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        match self {
            ModelParams::Varshni(p) => p.eval(t),
            ModelParams::ModifiedVarshni(p) => p.eval(t),
            ModelParams::Polynomial(p) => p.eval(t),
            ModelParams::Linear(p) => p.eval(t),
        }
    }

    fn derivative_unchecked(&self, t: f64) -> f64 {
        match self {
            ModelParams::Varshni(p) => p.derivative(t),
            ModelParams::ModifiedVarshni(p) => p.derivative(t),
            ModelParams::Polynomial(p) => p.derivative(t),
            ModelParams::Linear(p) => p.slope,
        }
    }
}

/// A fitted calibration law together with its fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub param_names: Vec<String>,
    /// Parameter covariance in `param_names` order.
    pub covariance: Vec<Vec<f64>>,
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    pub ssr: f64,
    pub max_abs_residual: f64,
    /// dD/dT <= 0 on a 1 K grid over `[t_min, t_max]`.
    pub monotone_decreasing: bool,
    /// dD/dT <= 0 on a 1 K grid over `[t_max, 2 t_max]`.
    pub extrapolation_monotone: bool,
    pub converged: bool,
    pub warnings: Vec<String>,
    /// SSR after each accepted step; empty for models not produced by a fit.
    #[serde(skip)]
    pub ssr_history: Vec<f64>,
}

impl CalibrationModel {
    /// Assembles a model from known parameters, e.g. literature values, with
    /// the monotonicity diagnostics evaluated over `[t_min, t_max]`.
    pub fn from_params(kind: ModelKind, params: ModelParams, t_min: f64, t_max: f64) -> Result<Self> {
        if !params.kind_matches(kind) {
            return Err(Error::InvalidParameter(format!("parameters do not match model kind {kind}")));
        }
        check_range(t_min, t_max)?;
        let p = kind.param_count();
        let mut m = CalibrationModel {
            kind,
            params,
            param_names: kind.param_names(),
            covariance: vec![vec![0.0; p]; p],
            t_min,
            t_max,
            n_points: 0,
            ssr: 0.0,
            max_abs_residual: 0.0,
            monotone_decreasing: false,
            extrapolation_monotone: false,
            converged: true,
            warnings: Vec::new(),
            ssr_history: Vec::new(),
        };
        m.refresh_diagnostics();
        Ok(m)
    }

    pub fn varshni(&self) -> Option<&VarshniParams> {
        match &self.params {
            ModelParams::Varshni(p) => Some(p),
            _ => None,
        }
    }

    pub fn std_errors(&self) -> Vec<f64> {
        self.covariance.iter().enumerate().map(|(i, row)| row[i].max(0.0).sqrt()).collect()
    }

    fn refresh_diagnostics(&mut self) {
        self.monotone_decreasing = self.decreasing_on(self.t_min, self.t_max);
        self.extrapolation_monotone = self.decreasing_on(self.t_max, 2.0 * self.t_max);
        self.warnings.clear();
        if let ModelParams::ModifiedVarshni(p) = &self.params {
            if p.b < 0.0 {
                self.monotone_decreasing = false;
                self.warnings.push(format!(
                    "fitted B = {} K is negative: the modified Varshni law is not monotonic at low temperature",
                    p.b
                ));
            }
        }
        if !self.monotone_decreasing {
            self.warnings.push(format!(
                "{} fit is not monotonically decreasing over [{}, {}] K",
                self.kind, self.t_min, self.t_max
            ));
        }
        if self.kind.poly_degree().is_some() && !self.extrapolation_monotone {
            self.warnings.push(format!(
                "{} fit loses monotonicity above the fit range ({} to {} K)",
                self.kind,
                self.t_max,
                2.0 * self.t_max
            ));
        }
    }

    fn decreasing_on(&self, lo: f64, hi: f64) -> bool {
        let steps = ((hi - lo) / MONOTONE_GRID_STEP_K).ceil() as usize;
        (0..=steps).all(|k| {
            let t = (lo + k as f64 * MONOTONE_GRID_STEP_K).min(hi);
            let d = self.params.derivative_unchecked(t);
            d.is_finite() && d <= 0.0
        })
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!("temperature must be finite and >= 0 K, got {t}")));
    }
    Ok(())
}

fn check_range(t_min: f64, t_max: f64) -> Result<()> {
    if !(t_min.is_finite() && t_max.is_finite()) || t_min < 0.0 || t_min >= t_max {
        return Err(Error::InvalidParameter(format!("invalid temperature range [{t_min}, {t_max}]")));
    }
    Ok(())
}

fn check_pole(m: &CalibrationModel, t: f64) -> Result<()> {
    if let ModelParams::ModifiedVarshni(p) = &m.params {
        if p.b + t == 0.0 {
            return Err(Error::InvalidParameter(format!("T = {t} K is a pole of the modified Varshni law")));
        }
    }
    Ok(())
}

/// Closed-form evaluation of the calibration law.
pub fn eval_model(m: &CalibrationModel, t: f64) -> Result<f64> {
    check_temperature(t)?;
    check_pole(m, t)?;
    Ok(m.params.eval_unchecked(t))
}

/// Analytic `dD/dT`.
pub fn model_derivative(m: &CalibrationModel, t: f64) -> Result<f64> {
    check_temperature(t)?;
    check_pole(m, t)?;
    Ok(m.params.derivative_unchecked(t))
}

/// One temperature series, e.g. D(T) or E(T), in K and MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl Series {
    pub fn new(t: Vec<f64>, y: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if t.len() != y.len() || sigma.as_ref().is_some_and(|s| s.len() != t.len()) {
            return Err(Error::InvalidParameter("series columns have different lengths".into()));
        }
        for &x in &t {
            check_temperature(x)?;
        }
        if !y.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("series values must be finite".into()));
        }
        if let Some(s) = &sigma {
            if !s.iter().all(|x| x.is_finite() && *x > 0.0) {
                return Err(Error::InvalidParameter("series sigmas must be finite and positive".into()));
            }
        }
        Ok(Self { t, y, sigma })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn distinct_temperatures(&self) -> usize {
        let mut t = self.t.clone();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t.len()
    }

    fn weight(&self, i: usize) -> f64 {
        self.sigma.as_ref().map_or(1.0, |s| 1.0 / s[i])
    }
}

struct CalibrationProblem<'a> {
    kind: ModelKind,
    series: &'a Series,
    /// `(center, half_range)` of the scaled polynomial variable.
    poly_scale: (f64, f64),
}

impl CalibrationProblem<'_> {
    fn predict(&self, theta: &[f64], t: f64) -> f64 {
        match self.kind {
            ModelKind::Varshni => VarshniParams { d0: theta[0], alpha: theta[1], beta: theta[2] }.eval(t),
            ModelKind::ModifiedVarshni => ModVarshniParams { d0: theta[0], a: theta[1], b: theta[2] }.eval(t),
            ModelKind::Linear => theta[0] + theta[1] * t,
            ModelKind::Poly3 | ModelKind::Poly5 => {
                let x = (t - self.poly_scale.0) / self.poly_scale.1;
                theta.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
        }
    }

    fn gradient(&self, theta: &[f64], t: f64, out: &mut [f64]) {
        match self.kind {
            ModelKind::Varshni => {
                out.copy_from_slice(&VarshniParams { d0: theta[0], alpha: theta[1], beta: theta[2] }.gradient(t))
            }
            ModelKind::ModifiedVarshni => {
                out.copy_from_slice(&ModVarshniParams { d0: theta[0], a: theta[1], b: theta[2] }.gradient(t))
            }
            ModelKind::Linear => {
                out[0] = 1.0;
                out[1] = t;
            }
            ModelKind::Poly3 | ModelKind::Poly5 => {
                let x = (t - self.poly_scale.0) / self.poly_scale.1;
                let mut xi = 1.0;
                for o in out.iter_mut() {
                    *o = xi;
                    xi *= x;
                }
            }
        }
    }
}

impl ResidualProblem for CalibrationProblem<'_> {
    fn num_params(&self) -> usize {
        self.kind.param_count()
    }

    fn num_residuals(&self) -> usize {
        self.series.len()
    }

    fn residuals(&self, theta: &[f64]) -> DVector<f64> {
        let s = self.series;
        DVector::from_iterator(
            s.len(),
            (0..s.len()).map(|i| (self.predict(theta, s.t[i]) - s.y[i]) * s.weight(i)),
        )
    }

    fn jacobian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let s = self.series;
        let p = self.num_params();
        let mut j = DMatrix::zeros(s.len(), p);
        let mut g = vec![0.0; p];
        for i in 0..s.len() {
            self.gradient(theta, s.t[i], &mut g);
            let w = s.weight(i);
            for k in 0..p {
                j[(i, k)] = g[k] * w;
            }
        }
        Some(j)
    }

    fn transforms(&self) -> Vec<Transform> {
        match self.kind {
            ModelKind::Varshni => vec![Transform::Free, Transform::Positive, Transform::Positive],
            k => vec![Transform::Free; k.param_count()],
        }
    }
}

/// Weighted least squares for `y ~ c0 + c1 * f(t)`; returns `(c0, c1, ssr)`.
fn two_term_ls(series: &Series, f: impl Fn(f64) -> f64) -> Option<(f64, f64, f64)> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..series.len() {
        let w = series.weight(i).powi(2);
        let x = f(series.t[i]);
        let y = series.y[i];
        if !x.is_finite() {
            return None;
        }
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() <= 1e-300 || !det.is_finite() {
        return None;
    }
    let c1 = (sw * sxy - sx * sy) / det;
    let c0 = (sy - c1 * sx) / sw;
    let ssr = (0..series.len())
        .map(|i| (series.weight(i) * (c0 + c1 * f(series.t[i]) - series.y[i])).powi(2))
        .sum();
    Some((c0, c1, ssr))
}

fn geomspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

fn initial_params(kind: ModelKind, series: &Series, t_min: f64, t_max: f64) -> Vec<f64> {
    let y_scale = series.y.iter().fold(0.0_f64, |a, &y| a.max(y.abs())) + 1.0;
    let tiny_alpha = 1e-12 * y_scale / t_max.max(1.0);
    match kind {
        ModelKind::Varshni => {
            // Linear in (d0, alpha) for fixed beta: scan beta.
            let best = geomspace(1.0, 1e5, 61)
                .filter_map(|beta| {
                    let (d0, neg_alpha, ssr) = two_term_ls(series, |t| t * t / (beta + t))?;
                    (-neg_alpha > 0.0).then_some((ssr, d0, -neg_alpha, beta))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((_, d0, alpha, beta)) => vec![d0, alpha, beta],
                None => {
                    let mean = series.y.iter().sum::<f64>() / series.len() as f64;
                    vec![mean, tiny_alpha, t_max.max(1.0)]
                }
            }
        }
        ModelKind::ModifiedVarshni => {
            let positive = geomspace(1.0, 1e5, 61);
            let negative = geomspace(1e-3, 1e5, 81).map(|b| -b).filter(|b| -b < t_min || -b > t_max);
            let best = positive
                .chain(negative)
                .filter_map(|b| {
                    let (d0, neg_a, ssr) = two_term_ls(series, |t| t.powi(4) / (b + t).powi(2))?;
                    Some((ssr, d0, -neg_a, b))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((_, d0, a, b)) => vec![d0, a, b],
                None => vec![series.y[0], 0.0, t_max],
            }
        }
        ModelKind::Linear => match two_term_ls(series, |t| t) {
            Some((c0, c1, _)) => vec![c0, c1],
            None => vec![series.y[0], 0.0],
        },
        ModelKind::Poly3 | ModelKind::Poly5 => {
            let mut v = vec![0.0; kind.param_count()];
            v[0] = series.y.iter().sum::<f64>() / series.len() as f64;
            v
        }
    }
}

fn poly_scale(series: &Series) -> (f64, f64) {
    let t_min = series.t.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = series.t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0.5 * (t_max + t_min), 0.5 * (t_max - t_min))
}

/// The residual problem solved by [`fit_calibration`]. Polynomial parameters
/// are coefficients in the scaled variable `(T - center) / half_range`.
pub fn calibration_problem(kind: ModelKind, series: &Series) -> impl ResidualProblem + '_ {
    CalibrationProblem { kind, series, poly_scale: poly_scale(series) }
}

/// Least-squares fit of a calibration law to a temperature series.
pub fn fit_calibration(kind: ModelKind, series: &Series) -> Result<CalibrationModel> {
    fit_calibration_with(kind, series, &SolveOptions::default())
}

pub fn fit_calibration_with(kind: ModelKind, series: &Series, options: &SolveOptions) -> Result<CalibrationModel> {
    let p = kind.param_count();
    let distinct = series.distinct_temperatures();
    if distinct < p + 1 {
        return Err(Error::InsufficientData(format!(
            "{kind} needs at least {} distinct temperatures, got {distinct}",
            p + 1
        )));
    }
    let t_min = series.t.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = series.t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let poly_scale = poly_scale(series);

    // Every law is affine-equivariant in D, so the fit runs on standardized
    // values and the stopping tolerances do not depend on units.
    let n = series.len() as f64;
    let shift = series.y.iter().sum::<f64>() / n;
    let spread = (series.y.iter().map(|y| (y - shift).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if spread > 0.0 && spread.is_finite() { spread } else { 1.0 };
    let standardized = Series {
        t: series.t.clone(),
        y: series.y.iter().map(|y| (y - shift) / scale).collect(),
        sigma: series.sigma.as_ref().map(|s| s.iter().map(|x| x / scale).collect()),
    };
    let problem = calibration_problem(kind, &standardized);
    let theta0 = initial_params(kind, &standardized, t_min, t_max);
    let report = optim::solve(&problem, &theta0, options)?;
    if report.termination == Termination::MaxIterations {
        return Err(Error::FitDiverged { iterations: report.iterations });
    }
    let factors: Vec<f64> = match kind {
        ModelKind::Varshni | ModelKind::ModifiedVarshni => vec![scale, scale, 1.0],
        _ => vec![scale; p],
    };
    let mut th: Vec<f64> = report.theta.iter().zip(&factors).map(|(x, f)| x * f).collect();
    th[0] += shift;
    let th = &th;
    let unscale = DMatrix::from_diagonal(&DVector::from_column_slice(&factors));
    let cov_fit = &unscale * &report.covariance * &unscale;
    // A weighted SSR is already in units of the sigmas.
    let ssr_factor = if series.sigma.is_some() { 1.0 } else { scale * scale };

    let (params, cov) = match kind {
        ModelKind::Varshni => {
            (ModelParams::Varshni(VarshniParams { d0: th[0], alpha: th[1], beta: th[2] }), cov_fit)
        }
        ModelKind::ModifiedVarshni => {
            (ModelParams::ModifiedVarshni(ModVarshniParams { d0: th[0], a: th[1], b: th[2] }), cov_fit)
        }
        ModelKind::Linear => (ModelParams::Linear(LinearParams { intercept: th[0], slope: th[1] }), cov_fit),
        ModelKind::Poly3 | ModelKind::Poly5 => {
            let m = scaled_to_power_matrix(p - 1, poly_scale.0, poly_scale.1);
            let scaled = DVector::from_column_slice(th);
            let power = &m * &scaled;
            let cov = &m * &cov_fit * m.transpose();
            (
                ModelParams::Polynomial(PolyParams {
                    coefficients: power.iter().copied().collect(),
                    center: poly_scale.0,
                    half_range: poly_scale.1,
                    scaled_coefficients: th.clone(),
                }),
                cov,
            )
        }
    };

    let max_abs_residual = series
        .t
        .iter()
        .zip(&series.y)
        .map(|(&t, &y)| (params.eval_unchecked(t) - y).abs())
        .fold(0.0, f64::max);

    let mut model = CalibrationModel {
        kind,
        params,
        param_names: kind.param_names(),
        covariance: (0..p).map(|i| (0..p).map(|j| cov[(i, j)]).collect()).collect(),
        t_min,
        t_max,
        n_points: series.len(),
        ssr: report.ssr * ssr_factor,
        max_abs_residual,
        monotone_decreasing: false,
        extrapolation_monotone: false,
        converged: report.converged,
        warnings: Vec::new(),
        ssr_history: report.ssr_history.iter().map(|x| x * ssr_factor).collect(),
    };
    model.refresh_diagnostics();
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub temperature: f64,
    pub sigma_t: f64,
}

/// Temperature at which the calibration law equals `d_meas`, with the
/// first-order uncertainty `sigma_d / |dD/dT|`.
pub fn invert_temperature(m: &CalibrationModel, d_meas: f64, sigma_d: f64) -> Result<Inversion> {
    if !m.monotone_decreasing {
        return Err(Error::NonMonotoneModel);
    }
    if !d_meas.is_finite() || !(sigma_d >= 0.0 && sigma_d.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid measurement {d_meas} +/- {sigma_d}")));
    }
    let high = eval_model(m, m.t_min)?;
    let low = eval_model(m, m.t_max)?;
    if d_meas > high || d_meas < low {
        return Err(Error::OutOfCalibrationRange { value: d_meas, low, high });
    }
    let (mut lo, mut hi) = (m.t_min, m.t_max);
    while hi - lo > INVERSION_TOL_K {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m.params.eval_unchecked(mid) > d_meas {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let temperature = if d_meas == high {
        m.t_min
    } else if d_meas == low {
        m.t_max
    } else {
        0.5 * (lo + hi)
    };
    let slope = m.params.derivative_unchecked(temperature).abs();
    let sigma_t = if sigma_d == 0.0 { 0.0 } else { sigma_d / slope };
    Ok(Inversion { temperature, sigma_t })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub kind: ModelKind,
    pub ssr: f64,
    pub max_abs_residual: f64,
    pub monotone_decreasing: bool,
    pub extrapolation_monotone: bool,
    pub param_count: usize,
}

/// Fits every requested law to the same series and tabulates diagnostics.
pub fn model_compare(series: &Series, kinds: &[ModelKind]) -> Result<Vec<ComparisonRow>> {
    if series.len() < 7 {
        return Err(Error::InsufficientData(format!("model comparison needs at least 7 points, got {}", series.len())));
    }
    kinds
        .iter()
        .map(|&kind| {
            let m = fit_calibration(kind, series)?;
            Ok(ComparisonRow {
                kind,
                ssr: m.ssr,
                max_abs_residual: m.max_abs_residual,
                monotone_decreasing: m.monotone_decreasing,
                extrapolation_monotone: m.extrapolation_monotone,
                param_count: kind.param_count(),
            })
        })
        .collect()
}
