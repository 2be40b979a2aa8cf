//! C ABI for the vb-odmr analysis core.
//!
//! Every function returns a [`VbStatus`]. On failure a description is kept in
//! thread-local storage and can be read with [`vb_last_error_message`].
//! Calibration laws are passed around as opaque [`VbCalibration`] handles
//! that must be released with [`vb_calibration_free`]. Strings returned by
//! the library are released with [`vb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vb_odmr::ensemble::summarize;
use vb_odmr::io::{parse_calibration, write_calibration, FormatError};
use vb_odmr::lattice::{self, LatticeRecord};
use vb_odmr::lineshape::{self, DoubletParams, OdmrSpectrum};
use vb_odmr::spin::{self, TransitionPair, ZfsParams};
use vb_odmr::thermal::{self, CalibrationModel, ModelKind, ModelParams, Series, VarshniParams};
use vb_odmr::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    FlatSpectrum = 3,
    FitDiverged = 4,
    SingularMatrix = 5,
    InsufficientData = 6,
    OutOfCalibrationRange = 7,
    NonMonotoneModel = 8,
    RangeMismatch = 9,
    Parse = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VbModelKind {
    Varshni = 0,
    ModifiedVarshni = 1,
    Poly3 = 2,
    Poly5 = 3,
    Linear = 4,
}

impl From<VbModelKind> for ModelKind {
    fn from(k: VbModelKind) -> Self {
        match k {
            VbModelKind::Varshni => ModelKind::Varshni,
            VbModelKind::ModifiedVarshni => ModelKind::ModifiedVarshni,
            VbModelKind::Poly3 => ModelKind::Poly3,
            VbModelKind::Poly5 => ModelKind::Poly5,
            VbModelKind::Linear => ModelKind::Linear,
        }
    }
}

impl From<ModelKind> for VbModelKind {
    fn from(k: ModelKind) -> Self {
        match k {
            ModelKind::Varshni => VbModelKind::Varshni,
            ModelKind::ModifiedVarshni => VbModelKind::ModifiedVarshni,
            ModelKind::Poly3 => VbModelKind::Poly3,
            ModelKind::Poly5 => VbModelKind::Poly5,
            ModelKind::Linear => VbModelKind::Linear,
        }
    }
}

/// Two-dip lineshape parameters. Frequencies and widths in MHz.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VbDoubletParams {
    pub nu1: f64,
    pub nu2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    pub baseline: f64,
}

impl From<VbDoubletParams> for DoubletParams {
    fn from(p: VbDoubletParams) -> Self {
        DoubletParams { nu1: p.nu1, nu2: p.nu2, gamma1: p.gamma1, gamma2: p.gamma2, c1: p.c1, c2: p.c2, baseline: p.baseline }
    }
}

impl From<DoubletParams> for VbDoubletParams {
    fn from(p: DoubletParams) -> Self {
        VbDoubletParams { nu1: p.nu1, nu2: p.nu2, gamma1: p.gamma1, gamma2: p.gamma2, c1: p.c1, c2: p.c2, baseline: p.baseline }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VbDoubletFit {
    pub params: VbDoubletParams,
    /// Standard errors in the field order of `params`.
    pub std_errors: [f64; 7],
    pub d: f64,
    pub e: f64,
    pub sigma_d: f64,
    pub sigma_e: f64,
    pub residual_rms: f64,
    pub iterations: u32,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VbCalibrationInfo {
    pub kind: VbModelKind,
    pub n_params: u32,
    pub n_points: u32,
    pub t_min: f64,
    pub t_max: f64,
    pub ssr: f64,
    pub max_abs_residual: f64,
    pub monotone_decreasing: bool,
    pub extrapolation_monotone: bool,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VbRegression {
    pub slope: f64,
    pub intercept: f64,
    pub slope_sigma: f64,
    pub intercept_sigma: f64,
    pub r_squared: f64,
    pub n: u32,
}

impl From<lattice::RegressionResult> for VbRegression {
    fn from(r: lattice::RegressionResult) -> Self {
        VbRegression {
            slope: r.slope,
            intercept: r.intercept,
            slope_sigma: r.slope_sigma,
            intercept_sigma: r.intercept_sigma,
            r_squared: r.r_squared,
            n: r.n as u32,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VbSummary {
    pub n: u32,
    pub mean: f64,
    pub std_dev: f64,
    pub sem: f64,
    /// Lower edge of the first histogram bin.
    pub histogram_start: f64,
    pub bin_width: f64,
    pub n_bins: u32,
}

/// Opaque calibration law.
pub struct VbCalibration(CalibrationModel);

struct Failure(VbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParameter(_) | Error::NotSymmetric(_) | Error::EigenMismatch(_) => VbStatus::InvalidArgument,
            Error::FlatSpectrum => VbStatus::FlatSpectrum,
            Error::FitDiverged { .. } | Error::NonFiniteResidual => VbStatus::FitDiverged,
            Error::SingularNormalMatrix => VbStatus::SingularMatrix,
            Error::InsufficientData(_) | Error::TooFewSamples(_) => VbStatus::InsufficientData,
            Error::OutOfCalibrationRange { .. } => VbStatus::OutOfCalibrationRange,
            Error::NonMonotoneModel => VbStatus::NonMonotoneModel,
            Error::RangeMismatch { .. } => VbStatus::RangeMismatch,
        };
        Failure(status, e.to_string())
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Data(inner) => inner.into(),
            other => Failure(VbStatus::Parse, other.to_string()),
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(VbStatus::NullPointer, format!("{name} is null"))
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            VbStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {message}"));
            VbStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn slice<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn calibration<'a>(p: *const VbCalibration) -> Result<&'a CalibrationModel, Failure> {
    p.as_ref().map(|c| &c.0).ok_or_else(|| null("calibration"))
}

fn boxed(model: CalibrationModel) -> *mut VbCalibration {
    Box::into_raw(Box::new(VbCalibration(model)))
}

/// Message describing the last failed call on this thread, or NULL after a
/// successful call. The pointer stays valid until the next call on the same
/// thread.
#[no_mangle]
pub extern "C" fn vb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Resonance frequencies `nu1 = D - E`, `nu2 = D + E`.
///
/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_zfs_to_transitions(d: f64, e: f64, nu1: *mut f64, nu2: *mut f64) -> VbStatus {
    guard(|| {
        let (nu1, nu2) = (out(nu1, "nu1")?, out(nu2, "nu2")?);
        let t = spin::transitions_from_zfs(&ZfsParams::new(d, e)?);
        *nu1 = t.nu1();
        *nu2 = t.nu2();
        Ok(())
    })
}

/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_transitions_to_zfs(nu1: f64, nu2: f64, d: *mut f64, e: *mut f64) -> VbStatus {
    guard(|| {
        let (d, e) = (out(d, "d")?, out(e, "e")?);
        let z = spin::zfs_from_transitions(&TransitionPair::new(nu1, nu2)?)?;
        *d = z.d();
        *e = z.e();
        Ok(())
    })
}

/// Eigenvalues of the zero-field Hamiltonian, ascending.
///
/// # Safety
/// `energies` must point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vb_zfs_energies(d: f64, e: f64, energies: *mut f64) -> VbStatus {
    guard(|| {
        let dst = slice_mut(energies, 3, "energies")?;
        dst.copy_from_slice(&spin::zfs_energies(&ZfsParams::new(d, e)?));
        Ok(())
    })
}

/// Evaluates the two-dip model at `n` frequencies.
///
/// # Safety
/// `freqs` and `signal` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn vb_doublet_model(
    params: *const VbDoubletParams,
    freqs: *const f64,
    n: usize,
    signal: *mut f64,
) -> VbStatus {
    guard(|| {
        let p: DoubletParams = (*params.as_ref().ok_or_else(|| null("params"))?).into();
        p.validate()?;
        let freqs = slice(freqs, n, "freqs")?;
        let signal = slice_mut(signal, n, "signal")?;
        for (s, &f) in signal.iter_mut().zip(freqs) {
            *s = lineshape::doublet_model(&p, f);
        }
        Ok(())
    })
}

/// Model spectrum with seeded Gaussian noise of standard deviation `noise_sigma`.
///
/// # Safety
/// `freqs` and `signal` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn vb_simulate_spectrum(
    params: *const VbDoubletParams,
    freqs: *const f64,
    n: usize,
    noise_sigma: f64,
    seed: u64,
    signal: *mut f64,
) -> VbStatus {
    guard(|| {
        let p: DoubletParams = (*params.as_ref().ok_or_else(|| null("params"))?).into();
        let freqs = slice(freqs, n, "freqs")?;
        let signal = slice_mut(signal, n, "signal")?;
        let s = lineshape::simulate_spectrum(&p, freqs, noise_sigma, seed)?;
        signal.copy_from_slice(s.signal());
        Ok(())
    })
}

/// Fits the two-dip model. `sigma` and `guess` may be NULL.
///
/// # Safety
/// `freqs`, `signal` and a non-NULL `sigma` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn vb_fit_doublet(
    freqs: *const f64,
    signal: *const f64,
    sigma: *const f64,
    n: usize,
    guess: *const VbDoubletParams,
    result: *mut VbDoubletFit,
) -> VbStatus {
    guard(|| {
        let result = out(result, "result")?;
        let sigma = if sigma.is_null() { None } else { Some(slice(sigma, n, "sigma")?.to_vec()) };
        let spectrum =
            OdmrSpectrum::new(slice(freqs, n, "freqs")?.to_vec(), slice(signal, n, "signal")?.to_vec(), sigma)?;
        let guess = guess.as_ref().map(|g| DoubletParams::from(*g));
        let fit = lineshape::fit_doublet(&spectrum, guess.as_ref())?;
        *result = VbDoubletFit {
            params: fit.params.into(),
            std_errors: fit.std_errors(),
            d: fit.zfs.d(),
            e: fit.zfs.e(),
            sigma_d: fit.sigma_d,
            sigma_e: fit.sigma_e,
            residual_rms: fit.residual_rms,
            iterations: fit.iterations as u32,
            converged: fit.converged,
        };
        Ok(())
    })
}

/// Fits a calibration law to `n` (T, y) points. `sigma` may be NULL.
///
/// # Safety
/// `t`, `y` and a non-NULL `sigma` must each hold `n` doubles; `handle` must
/// be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_calibration_fit(
    kind: VbModelKind,
    t: *const f64,
    y: *const f64,
    sigma: *const f64,
    n: usize,
    handle: *mut *mut VbCalibration,
) -> VbStatus {
    guard(|| {
        let handle = out(handle, "handle")?;
        let sigma = if sigma.is_null() { None } else { Some(slice(sigma, n, "sigma")?.to_vec()) };
        let series = Series::new(slice(t, n, "t")?.to_vec(), slice(y, n, "y")?.to_vec(), sigma)?;
        *handle = boxed(thermal::fit_calibration(kind.into(), &series)?);
        Ok(())
    })
}

/// Builds a Varshni law from known parameters over `[t_min, t_max]`.
///
/// # Safety
/// `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_calibration_varshni(
    d0: f64,
    alpha: f64,
    beta: f64,
    t_min: f64,
    t_max: f64,
    handle: *mut *mut VbCalibration,
) -> VbStatus {
    guard(|| {
        let handle = out(handle, "handle")?;
        let params = ModelParams::Varshni(VarshniParams::new(d0, alpha, beta)?);
        *handle = boxed(CalibrationModel::from_params(ModelKind::Varshni, params, t_min, t_max)?);
        Ok(())
    })
}

/// Parses a calibration JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_calibration_from_json(json: *const c_char, handle: *mut *mut VbCalibration) -> VbStatus {
    guard(|| {
        let handle = out(handle, "handle")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(VbStatus::Parse, format!("json is not UTF-8: {e}")))?;
        *handle = boxed(parse_calibration(text)?);
        Ok(())
    })
}

/// Serializes a calibration as JSON. Release the string with [`vb_string_free`].
///
/// # Safety
/// `cal` must be a live handle; `json` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_calibration_to_json(cal: *const VbCalibration, json: *mut *mut c_char) -> VbStatus {
    guard(|| {
        let json = out(json, "json")?;
        let text = write_calibration(calibration(cal)?);
        *json = CString::new(text).map_err(|e| Failure(VbStatus::Parse, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `cal` must be a live handle; `info` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_calibration_info(cal: *const VbCalibration, info: *mut VbCalibrationInfo) -> VbStatus {
    guard(|| {
        let info = out(info, "info")?;
        let m = calibration(cal)?;
        *info = VbCalibrationInfo {
            kind: m.kind.into(),
            n_params: m.kind.param_count() as u32,
            n_points: m.n_points as u32,
            t_min: m.t_min,
            t_max: m.t_max,
            ssr: m.ssr,
            max_abs_residual: m.max_abs_residual,
            monotone_decreasing: m.monotone_decreasing,
            extrapolation_monotone: m.extrapolation_monotone,
            converged: m.converged,
        };
        Ok(())
    })
}

/// Copies the parameters and their standard errors. Both arrays must hold
/// at least `n_params` entries as reported by [`vb_calibration_info`];
/// `std_errors` may be NULL.
///
/// # Safety
/// `cal` must be a live handle; arrays must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn vb_calibration_params(
    cal: *const VbCalibration,
    params: *mut f64,
    std_errors: *mut f64,
    capacity: usize,
) -> VbStatus {
    guard(|| {
        let m = calibration(cal)?;
        let n = m.kind.param_count();
        if capacity < n {
            return Err(Failure(VbStatus::BufferTooSmall, format!("need {n} entries, got {capacity}")));
        }
        let values: Vec<f64> = match &m.params {
            ModelParams::Varshni(p) => vec![p.d0, p.alpha, p.beta],
            ModelParams::ModifiedVarshni(p) => vec![p.d0, p.a, p.b],
            ModelParams::Polynomial(p) => p.coefficients.clone(),
            ModelParams::Linear(p) => vec![p.intercept, p.slope],
        };
        slice_mut(params, n, "params")?.copy_from_slice(&values);
        if !std_errors.is_null() {
            slice_mut(std_errors, n, "std_errors")?.copy_from_slice(&m.std_errors());
        }
        Ok(())
    })
}

/// Law value at `t` (K). Temperatures beyond the fit range extrapolate.
///
/// # Safety
/// `cal` must be a live handle; `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_calibration_eval(cal: *const VbCalibration, t: f64, value: *mut f64) -> VbStatus {
    guard(|| {
        let value = out(value, "value")?;
        *value = thermal::eval_model(calibration(cal)?, t)?;
        Ok(())
    })
}

/// # Safety
/// `cal` must be a live handle; `slope` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_calibration_derivative(cal: *const VbCalibration, t: f64, slope: *mut f64) -> VbStatus {
    guard(|| {
        let slope = out(slope, "slope")?;
        *slope = thermal::model_derivative(calibration(cal)?, t)?;
        Ok(())
    })
}

/// Temperature where the law equals `d`, with `sigma_t = sigma_d / |dD/dT|`.
///
/// # Safety
/// `cal` must be a live handle; outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_calibration_invert(
    cal: *const VbCalibration,
    d: f64,
    sigma_d: f64,
    t: *mut f64,
    sigma_t: *mut f64,
) -> VbStatus {
    guard(|| {
        let (t, sigma_t) = (out(t, "t")?, out(sigma_t, "sigma_t")?);
        let inv = thermal::invert_temperature(calibration(cal)?, d, sigma_d)?;
        *t = inv.temperature;
        *sigma_t = inv.sigma_t;
        Ok(())
    })
}

/// Releases a calibration handle. NULL is ignored.
///
/// # Safety
/// `cal` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vb_calibration_free(cal: *mut VbCalibration) {
    if !cal.is_null() {
        drop(Box::from_raw(cal));
    }
}

/// Hexagonal cell volume in cubic angstrom.
///
/// # Safety
/// `volume` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_cell_volume(a: f64, c: f64, volume: *mut f64) -> VbStatus {
    guard(|| {
        let volume = out(volume, "volume")?;
        *volume = lattice::cell_volume(&LatticeRecord::new(0.0, a, c)?);
        Ok(())
    })
}

/// Fits a Varshni-form law to 1/V over `n` lattice records.
///
/// # Safety
/// `t`, `a`, `c` must each hold `n` doubles; `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_fit_inverse_volume(
    t: *const f64,
    a: *const f64,
    c: *const f64,
    n: usize,
    handle: *mut *mut VbCalibration,
) -> VbStatus {
    guard(|| {
        let handle = out(handle, "handle")?;
        let (t, a, c) = (slice(t, n, "t")?, slice(a, n, "a")?, slice(c, n, "c")?);
        let records = (0..n).map(|i| LatticeRecord::new(t[i], a[i], c[i])).collect::<Result<Vec<_>, _>>()?;
        *handle = boxed(lattice::fit_inverse_volume(&records)?);
        Ok(())
    })
}

/// Ordinary least-squares line through `n` points.
///
/// # Safety
/// `x` and `y` must each hold `n` doubles; `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vb_linear_regression(
    x: *const f64,
    y: *const f64,
    n: usize,
    result: *mut VbRegression,
) -> VbStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = lattice::linear_regression(slice(x, n, "x")?, slice(y, n, "y")?)?.into();
        Ok(())
    })
}

/// Regresses D (MHz) against 1/V interpolated from `vinv` at the same
/// temperatures. D is converted to GHz, so the slope is in GHz·Å³.
///
/// # Safety
/// `t` and `d` must each hold `n` doubles; `vinv` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vb_regress_d_vs_vinv(
    t: *const f64,
    d: *const f64,
    n: usize,
    vinv: *const VbCalibration,
    result: *mut VbRegression,
) -> VbStatus {
    guard(|| {
        let result = out(result, "result")?;
        let series = Series::new(slice(t, n, "t")?.to_vec(), slice(d, n, "d")?.to_vec(), None)?;
        let (reg, _) = lattice::regress_d_vs_vinv(&series, calibration(vinv)?)?;
        *result = reg.into();
        Ok(())
    })
}

/// Mean, standard error and a `bin_width` histogram of `n` values. Counts are
/// written to `counts` when it is non-NULL and holds at least as many bins as
/// reported in `summary.n_bins`; otherwise the call returns
/// `BufferTooSmall` with `summary` filled in.
///
/// # Safety
/// `values` must hold `n` doubles, `counts` `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn vb_summarize(
    values: *const f64,
    n: usize,
    bin_width: f64,
    summary: *mut VbSummary,
    counts: *mut u64,
    capacity: usize,
) -> VbStatus {
    guard(|| {
        let summary = out(summary, "summary")?;
        let s = summarize(slice(values, n, "values")?, bin_width)?;
        *summary = VbSummary {
            n: s.n as u32,
            mean: s.mean,
            std_dev: s.std_dev,
            sem: s.sem,
            histogram_start: s.histogram.first().map_or(f64::NAN, |b| b.lower),
            bin_width,
            n_bins: s.histogram.len() as u32,
        };
        if counts.is_null() {
            return Ok(());
        }
        if capacity < s.histogram.len() {
            return Err(Failure(
                VbStatus::BufferTooSmall,
                format!("need {} bins, got {capacity}", s.histogram.len()),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(counts, s.histogram.len());
        for (c, b) in dst.iter_mut().zip(&s.histogram) {
            *c = b.count as u64;
        }
        Ok(())
    })
}
