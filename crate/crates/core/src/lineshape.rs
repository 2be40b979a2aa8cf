//! Two-Lorentzian ODMR dip model, synthetic spectra and doublet fitting.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{self, FitReport, ResidualProblem, SolveOptions, Termination, Transform};
use crate::spin::{zfs_from_transitions, TransitionPair, ZfsParams};

/// Minimum number of samples in a spectrum.
pub const MIN_POINTS: usize = 8;

/// Moving-average window used by [`initial_guess`].
pub const SMOOTHING_WINDOW: usize = 5;

/// Minimum separation, in grid steps, between two dip candidates.
const MIN_DIP_SEPARATION: usize = 5;

/// Number of fitted doublet parameters.
pub const N_PARAMS: usize = 7;

/// Parameter order used by the fitter and in covariance matrices.
pub const PARAM_NAMES: [&str; N_PARAMS] = ["nu1", "nu2", "gamma1", "gamma2", "c1", "c2", "baseline"];

/// A sampled ODMR spectrum: microwave frequency (MHz) against normalized
/// photoluminescence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdmrSpectrum {
    freqs: Vec<f64>,
    signal: Vec<f64>,
    sigma: Option<Vec<f64>>,
}

impl OdmrSpectrum {
    pub fn new(freqs: Vec<f64>, signal: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if freqs.len() < MIN_POINTS {
            return Err(Error::InsufficientData(format!(
                "spectrum needs at least {MIN_POINTS} points, got {}",
                freqs.len()
            )));
        }
        if signal.len() != freqs.len() {
            return Err(Error::InvalidParameter(format!(
                "signal has {} samples but there are {} frequencies",
                signal.len(),
                freqs.len()
            )));
        }
        if !freqs.iter().chain(&signal).all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("spectrum contains non-finite values".into()));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("frequencies must be strictly increasing".into()));
        }
        if let Some(s) = &sigma {
            if s.len() != freqs.len() {
                return Err(Error::InvalidParameter("sigma length does not match frequencies".into()));
            }
            if !s.iter().all(|x| x.is_finite() && *x > 0.0) {
                return Err(Error::InvalidParameter("sigma values must be finite and positive".into()));
            }
        }
        Ok(Self { freqs, signal, sigma })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub fn sigma(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

/// Parameters of the two-dip model. Widths are FWHM in MHz; contrasts are
/// positive fractional dip depths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubletParams {
    pub nu1: f64,
    pub nu2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    pub baseline: f64,
}

impl DoubletParams {
    pub fn validate(&self) -> Result<()> {
        let all = self.to_array();
        if !all.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("doublet parameters must be finite".into()));
        }
        if self.gamma1 <= 0.0 || self.gamma2 <= 0.0 {
            return Err(Error::InvalidParameter("linewidths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.c1) || !(0.0..1.0).contains(&self.c2) {
            return Err(Error::InvalidParameter("contrasts must lie in [0, 1)".into()));
        }
        if self.baseline <= 0.0 {
            return Err(Error::InvalidParameter("baseline must be positive".into()));
        }
        if self.nu1 > self.nu2 {
            return Err(Error::InvalidParameter("centers must be ordered nu1 <= nu2".into()));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; N_PARAMS] {
        [self.nu1, self.nu2, self.gamma1, self.gamma2, self.c1, self.c2, self.baseline]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self { nu1: v[0], nu2: v[1], gamma1: v[2], gamma2: v[3], c1: v[4], c2: v[5], baseline: v[6] }
    }

    /// Same dips with the labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            nu1: self.nu2,
            nu2: self.nu1,
            gamma1: self.gamma2,
            gamma2: self.gamma1,
            c1: self.c2,
            c2: self.c1,
            baseline: self.baseline,
        }
    }
}

/// Peak-normalized Lorentzian, equal to 1 at `center`.
pub fn lorentzian(nu: f64, center: f64, fwhm: f64) -> f64 {
    let q = 0.25 * fwhm * fwhm;
    let x = nu - center;
    q / (x * x + q)
}

/// `baseline * (1 - c1 L1 - c2 L2)`.
pub fn doublet_model(p: &DoubletParams, nu: f64) -> f64 {
    p.baseline * (1.0 - p.c1 * lorentzian(nu, p.nu1, p.gamma1) - p.c2 * lorentzian(nu, p.nu2, p.gamma2))
}

/// Gradient of [`doublet_model`] with respect to the parameters in
/// [`PARAM_NAMES`] order.
pub fn doublet_gradient(p: &DoubletParams, nu: f64) -> [f64; N_PARAMS] {
    let lobe = |center: f64, fwhm: f64| {
        let q = 0.25 * fwhm * fwhm;
        let x = nu - center;
        let den = x * x + q;
        let l = q / den;
        let d_center = 2.0 * x * q / (den * den);
        let d_width = 0.5 * fwhm * x * x / (den * den);
        (l, d_center, d_width)
    };
    let (l1, dc1, dw1) = lobe(p.nu1, p.gamma1);
    let (l2, dc2, dw2) = lobe(p.nu2, p.gamma2);
    let b = p.baseline;
    [
        -b * p.c1 * dc1,
        -b * p.c2 * dc2,
        -b * p.c1 * dw1,
        -b * p.c2 * dw2,
        -b * l1,
        -b * l2,
        1.0 - p.c1 * l1 - p.c2 * l2,
    ]
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            (0..points).map(|i| if i == points - 1 { stop } else { start + step * i as f64 }).collect()
        }
    }
}

/// Model samples on `freqs` plus i.i.d. Gaussian noise. Deterministic for a
/// given seed.
pub fn simulate_spectrum(p: &DoubletParams, freqs: &[f64], noise_sigma: f64, seed: u64) -> Result<OdmrSpectrum> {
    p.validate()?;
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    let mut signal: Vec<f64> = freqs.iter().map(|&f| doublet_model(p, f)).collect();
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("valid sigma");
        for s in &mut signal {
            *s += normal.sample(&mut rng);
        }
    }
    OdmrSpectrum::new(freqs.to_vec(), signal, None)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Centered moving average; the window shrinks at the edges.
fn smooth(signal: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = signal.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            signal[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Robust per-point noise estimate from the median absolute successive
/// difference.
fn noise_estimate(signal: &[f64]) -> f64 {
    let diffs: Vec<f64> = signal.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    median(&diffs) / (0.6745 * std::f64::consts::SQRT_2)
}

/// Half-depth crossing distance from index `i` walking in direction `dir`,
/// bounded by `limit` (exclusive). `None` if not crossed.
fn half_width(freqs: &[f64], depth: &[f64], i: usize, dir: isize, limit: usize) -> Option<f64> {
    let half = 0.5 * depth[i];
    let mut k = i;
    loop {
        let next = k as isize + dir;
        if next < 0 || next as usize >= depth.len() || next as usize == limit {
            return None;
        }
        let next = next as usize;
        if depth[next] <= half {
            // Linear interpolation between k and next.
            let t = (depth[k] - half) / (depth[k] - depth[next]);
            let f = freqs[k] + t * (freqs[next] - freqs[k]);
            return Some((f - freqs[i]).abs());
        }
        k = next;
    }
}

/// Starting point for [`fit_doublet`] from the two deepest smoothed dips.
pub fn initial_guess(s: &OdmrSpectrum) -> Result<DoubletParams> {
    let freqs = s.freqs();
    let n = freqs.len();
    let baseline = median(s.signal());
    let sm = smooth(s.signal(), SMOOTHING_WINDOW);
    let noise = noise_estimate(s.signal());
    let (lo, hi) = sm.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let range = hi - lo;
    if range < 3.0 * noise || range <= 1e-12 * baseline.abs().max(f64::MIN_POSITIVE) || baseline <= 0.0 {
        return Err(Error::FlatSpectrum);
    }

    let depth: Vec<f64> = sm.iter().map(|&x| baseline - x).collect();
    let mut minima: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || sm[i] < sm[i - 1];
            let right = i == n - 1 || sm[i] <= sm[i + 1];
            left && right && depth[i] > 0.0
        })
        .collect();
    minima.sort_by(|&a, &b| depth[b].total_cmp(&depth[a]).then(a.cmp(&b)));
    let Some(&first) = minima.first() else {
        return Err(Error::FlatSpectrum);
    };
    if depth[first] < 3.0 * noise {
        return Err(Error::FlatSpectrum);
    }

    // A second dip must be deep enough and separated from the first by a
    // genuine rise of the smoothed signal.
    let threshold = (0.25 * depth[first]).max(3.0 * noise);
    let second = minima.iter().copied().skip(1).find(|&j| {
        if depth[j] < threshold || j.abs_diff(first) < MIN_DIP_SEPARATION {
            return false;
        }
        let (a, b) = (first.min(j), first.max(j));
        let ridge = sm[a..=b].iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        ridge - sm[j] > 3.0 * noise.max(1e-12 * baseline)
    });

    let width_at = |i: usize, limit: usize| -> f64 {
        let left = half_width(freqs, &depth, i, -1, if limit < i { limit } else { usize::MAX });
        let right = half_width(freqs, &depth, i, 1, if limit > i { limit } else { usize::MAX });
        let hw = match (left, right) {
            (Some(l), Some(r)) => l.min(r),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => 0.05 * (freqs[n - 1] - freqs[0]),
        };
        (2.0 * hw).max(freqs[1] - freqs[0])
    };

    let params = match second {
        Some(j) => {
            let (a, b) = (first.min(j), first.max(j));
            DoubletParams {
                nu1: freqs[a],
                nu2: freqs[b],
                gamma1: width_at(a, b),
                gamma2: width_at(b, a),
                c1: (depth[a] / baseline).clamp(1e-6, 0.9),
                c2: (depth[b] / baseline).clamp(1e-6, 0.9),
                baseline,
            }
        }
        None => {
            let w = width_at(first, usize::MAX);
            let c = (0.5 * depth[first] / baseline).clamp(1e-6, 0.45);
            DoubletParams {
                nu1: freqs[first] - 0.5 * w,
                nu2: freqs[first] + 0.5 * w,
                gamma1: w,
                gamma2: w,
                c1: c,
                c2: c,
                baseline,
            }
        }
    };
    Ok(params)
}

/// Doublet fit with the derived zero-field parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubletFit {
    pub params: DoubletParams,
    /// 7x7, in [`PARAM_NAMES`] order.
    pub covariance: DMatrix<f64>,
    pub residual_rms: f64,
    pub zfs: ZfsParams,
    pub sigma_d: f64,
    pub sigma_e: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub ssr_history: Vec<f64>,
}

impl DoubletFit {
    pub fn std_errors(&self) -> [f64; N_PARAMS] {
        let mut out = [0.0; N_PARAMS];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.covariance[(i, i)].max(0.0).sqrt();
        }
        out
    }
}

struct DoubletProblem<'a> {
    spectrum: &'a OdmrSpectrum,
    weights: Option<Vec<f64>>,
}

impl DoubletProblem<'_> {
    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }
}

impl ResidualProblem for DoubletProblem<'_> {
    fn num_params(&self) -> usize {
        N_PARAMS
    }

    fn num_residuals(&self) -> usize {
        self.spectrum.len()
    }

    fn residuals(&self, theta: &[f64]) -> DVector<f64> {
        let p = DoubletParams::from_slice(theta);
        let s = self.spectrum;
        DVector::from_iterator(
            s.len(),
            s.freqs().iter().zip(s.signal()).enumerate().map(|(i, (&f, &y))| (doublet_model(&p, f) - y) * self.weight(i)),
        )
    }

    fn jacobian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let p = DoubletParams::from_slice(theta);
        let s = self.spectrum;
        let mut j = DMatrix::zeros(s.len(), N_PARAMS);
        for (i, &f) in s.freqs().iter().enumerate() {
            let w = self.weight(i);
            for (k, g) in doublet_gradient(&p, f).iter().enumerate() {
                j[(i, k)] = g * w;
            }
        }
        Some(j)
    }

    fn transforms(&self) -> Vec<Transform> {
        let contrast = Transform::Boxed { min: 0.0, max: 1.0 };
        vec![
            Transform::Free,
            Transform::Free,
            Transform::Positive,
            Transform::Positive,
            contrast,
            contrast,
            Transform::Positive,
        ]
    }
}

/// The residual problem solved by [`fit_doublet`], parameters in
/// [`PARAM_NAMES`] order.
pub fn doublet_problem(s: &OdmrSpectrum) -> impl ResidualProblem + '_ {
    DoubletProblem { spectrum: s, weights: s.sigma().map(|sig| sig.iter().map(|x| 1.0 / x).collect()) }
}

/// Exchanges rows/columns of the two dips in a 7x7 covariance.
fn swap_covariance(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let perm = [1, 0, 3, 2, 5, 4, 6];
    DMatrix::from_fn(N_PARAMS, N_PARAMS, |i, j| cov[(perm[i], perm[j])])
}

/// Least-squares two-Lorentzian fit. Without `guess`, [`initial_guess`]
/// provides the starting point. Per-point sigmas in the spectrum weight the
/// residuals.
pub fn fit_doublet(s: &OdmrSpectrum, guess: Option<&DoubletParams>) -> Result<DoubletFit> {
    fit_doublet_with(s, guess, &SolveOptions::default())
}

pub fn fit_doublet_with(s: &OdmrSpectrum, guess: Option<&DoubletParams>, options: &SolveOptions) -> Result<DoubletFit> {
    let start = match guess {
        Some(g) => {
            g.validate()?;
            *g
        }
        None => initial_guess(s)?,
    };
    let problem = doublet_problem(s);
    let report: FitReport = optim::solve(&problem, &start.to_array(), options)?;
    if report.termination == Termination::MaxIterations {
        return Err(Error::FitDiverged { iterations: report.iterations });
    }

    let mut params = DoubletParams::from_slice(&report.theta);
    let mut cov = report.covariance.clone();
    if params.nu1 > params.nu2 {
        params = params.swapped();
        cov = swap_covariance(&cov);
    }

    let ssr_unweighted: f64 = s
        .freqs()
        .iter()
        .zip(s.signal())
        .map(|(&f, &y)| (doublet_model(&params, f) - y).powi(2))
        .sum();
    let residual_rms = (ssr_unweighted / s.len() as f64).sqrt();

    let zfs = zfs_from_transitions(&TransitionPair::new(params.nu1, params.nu2)?)?;
    let (v1, v2, c12) = (cov[(0, 0)], cov[(1, 1)], cov[(0, 1)]);
    let sigma_d = 0.5 * (v1 + v2 + 2.0 * c12).max(0.0).sqrt();
    let sigma_e = 0.5 * (v1 + v2 - 2.0 * c12).max(0.0).sqrt();

    Ok(DoubletFit {
        params,
        covariance: cov,
        residual_rms,
        zfs,
        sigma_d,
        sigma_e,
        iterations: report.iterations,
        converged: report.converged,
        termination: report.termination,
        ssr_history: report.ssr_history,
    })
}
