#ifndef VB_ODMR_H
#define VB_ODMR_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every exported function.
typedef enum VbStatus {
  VB_STATUS_OK = 0,
  VB_STATUS_NULL_POINTER = 1,
  VB_STATUS_INVALID_ARGUMENT = 2,
  VB_STATUS_FLAT_SPECTRUM = 3,
  VB_STATUS_FIT_DIVERGED = 4,
  VB_STATUS_SINGULAR_MATRIX = 5,
  VB_STATUS_INSUFFICIENT_DATA = 6,
  VB_STATUS_OUT_OF_CALIBRATION_RANGE = 7,
  VB_STATUS_NON_MONOTONE_MODEL = 8,
  VB_STATUS_RANGE_MISMATCH = 9,
  VB_STATUS_PARSE = 10,
  VB_STATUS_BUFFER_TOO_SMALL = 11,
  VB_STATUS_PANIC = 12,
} VbStatus;

typedef enum VbModelKind {
  VB_MODEL_KIND_VARSHNI = 0,
  VB_MODEL_KIND_MODIFIED_VARSHNI = 1,
  VB_MODEL_KIND_POLY3 = 2,
  VB_MODEL_KIND_POLY5 = 3,
  VB_MODEL_KIND_LINEAR = 4,
} VbModelKind;

// Opaque calibration law.
typedef struct VbCalibration VbCalibration;

// Two-dip lineshape parameters. Frequencies and widths in MHz.
typedef struct VbDoubletParams {
  double nu1;
  double nu2;
  double gamma1;
  double gamma2;
  double c1;
  double c2;
  double baseline;
} VbDoubletParams;

typedef struct VbDoubletFit {
  struct VbDoubletParams params;
  // Standard errors in the field order of `params`.
  double std_errors[7];
  double d;
  double e;
  double sigma_d;
  double sigma_e;
  double residual_rms;
  uint32_t iterations;
  bool converged;
} VbDoubletFit;

typedef struct VbCalibrationInfo {
  enum VbModelKind kind;
  uint32_t n_params;
  uint32_t n_points;
  double t_min;
  double t_max;
  double ssr;
  double max_abs_residual;
  bool monotone_decreasing;
  bool extrapolation_monotone;
  bool converged;
} VbCalibrationInfo;

typedef struct VbRegression {
  double slope;
  double intercept;
  double slope_sigma;
  double intercept_sigma;
  double r_squared;
  uint32_t n;
} VbRegression;

typedef struct VbSummary {
  uint32_t n;
  double mean;
  double std_dev;
  double sem;
  // Lower edge of the first histogram bin.
  double histogram_start;
  double bin_width;
  uint32_t n_bins;
} VbSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failed call on this thread, or NULL after a
// successful call. The pointer stays valid until the next call on the same
// thread.
const char *vb_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *vb_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void vb_string_free(char *s);

// Resonance frequencies `nu1 = D - E`, `nu2 = D + E`.
//
// # Safety
// Output pointers must be valid for writes.
enum VbStatus vb_zfs_to_transitions(double d, double e, double *nu1, double *nu2);

// # Safety
// Output pointers must be valid for writes.
enum VbStatus vb_transitions_to_zfs(double nu1, double nu2, double *d, double *e);

// Eigenvalues of the zero-field Hamiltonian, ascending.
//
// # Safety
// `energies` must point to 3 writable doubles.
enum VbStatus vb_zfs_energies(double d, double e, double *energies);

// Evaluates the two-dip model at `n` frequencies.
//
// # Safety
// `freqs` and `signal` must each hold `n` doubles.
enum VbStatus vb_doublet_model(const struct VbDoubletParams *params,
                               const double *freqs,
                               size_t n,
                               double *signal);

// Model spectrum with seeded Gaussian noise of standard deviation `noise_sigma`.
//
// # Safety
// `freqs` and `signal` must each hold `n` doubles.
enum VbStatus vb_simulate_spectrum(const struct VbDoubletParams *params,
                                   const double *freqs,
                                   size_t n,
                                   double noise_sigma,
                                   uint64_t seed,
                                   double *signal);

// Fits the two-dip model. `sigma` and `guess` may be NULL.
//
// # Safety
// `freqs`, `signal` and a non-NULL `sigma` must each hold `n` doubles.
enum VbStatus vb_fit_doublet(const double *freqs,
                             const double *signal,
                             const double *sigma,
                             size_t n,
                             const struct VbDoubletParams *guess,
                             struct VbDoubletFit *result);

// Fits a calibration law to `n` (T, y) points. `sigma` may be NULL.
//
// # Safety
// `t`, `y` and a non-NULL `sigma` must each hold `n` doubles; `handle` must
// be valid for writes.
enum VbStatus vb_calibration_fit(enum VbModelKind kind,
                                 const double *t,
                                 const double *y,
                                 const double *sigma,
                                 size_t n,
                                 struct VbCalibration **handle);

// Builds a Varshni law from known parameters over `[t_min, t_max]`.
//
// # Safety
// `handle` must be valid for writes.
enum VbStatus vb_calibration_varshni(double d0,
                                     double alpha,
                                     double beta,
                                     double t_min,
                                     double t_max,
                                     struct VbCalibration **handle);

// Parses a calibration JSON document.
//
// # Safety
// `json` must be a NUL-terminated string; `handle` must be valid for writes.
enum VbStatus vb_calibration_from_json(const char *json, struct VbCalibration **handle);

// Serializes a calibration as JSON. Release the string with [`vb_string_free`].
//
// # Safety
// `cal` must be a live handle; `json` must be valid for writes.
enum VbStatus vb_calibration_to_json(const struct VbCalibration *cal, char **json);

// # Safety
// `cal` must be a live handle; `info` must be valid for writes.
enum VbStatus vb_calibration_info(const struct VbCalibration *cal, struct VbCalibrationInfo *info);

// Copies the parameters and their standard errors. Both arrays must hold
// at least `n_params` entries as reported by [`vb_calibration_info`];
// `std_errors` may be NULL.
//
// # Safety
// `cal` must be a live handle; arrays must hold `capacity` doubles.
enum VbStatus vb_calibration_params(const struct VbCalibration *cal,
                                    double *params,
                                    double *std_errors,
                                    size_t capacity);

// Law value at `t` (K). Temperatures beyond the fit range extrapolate.
//
// # Safety
// `cal` must be a live handle; `value` must be valid for writes.
enum VbStatus vb_calibration_eval(const struct VbCalibration *cal, double t, double *value);

// # Safety
// `cal` must be a live handle; `slope` must be valid for writes.
enum VbStatus vb_calibration_derivative(const struct VbCalibration *cal, double t, double *slope);

// Temperature where the law equals `d`, with `sigma_t = sigma_d / |dD/dT|`.
//
// # Safety
// `cal` must be a live handle; outputs must be valid for writes.
enum VbStatus vb_calibration_invert(const struct VbCalibration *cal,
                                    double d,
                                    double sigma_d,
                                    double *t,
                                    double *sigma_t);

// Releases a calibration handle. NULL is ignored.
//
// # Safety
// `cal` must come from this library and not have been freed.
void vb_calibration_free(struct VbCalibration *cal);

// Hexagonal cell volume in cubic angstrom.
//
// # Safety
// `volume` must be valid for writes.
enum VbStatus vb_cell_volume(double a, double c, double *volume);

// Fits a Varshni-form law to 1/V over `n` lattice records.
//
// # Safety
// `t`, `a`, `c` must each hold `n` doubles; `handle` must be valid for writes.
enum VbStatus vb_fit_inverse_volume(const double *t,
                                    const double *a,
                                    const double *c,
                                    size_t n,
                                    struct VbCalibration **handle);

// Ordinary least-squares line through `n` points.
//
// # Safety
// `x` and `y` must each hold `n` doubles; `result` must be valid for writes.
enum VbStatus vb_linear_regression(const double *x,
                                   const double *y,
                                   size_t n,
                                   struct VbRegression *result);

// Regresses D (MHz) against 1/V interpolated from `vinv` at the same
// temperatures. D is converted to GHz, so the slope is in GHz·Å³.
//
// # Safety
// `t` and `d` must each hold `n` doubles; `vinv` must be a live handle.
enum VbStatus vb_regress_d_vs_vinv(const double *t,
                                   const double *d,
                                   size_t n,
                                   const struct VbCalibration *vinv,
                                   struct VbRegression *result);

// Mean, standard error and a `bin_width` histogram of `n` values. Counts are
// written to `counts` when it is non-NULL and holds at least as many bins as
// reported in `summary.n_bins`; otherwise the call returns
// `BufferTooSmall` with `summary` filled in.
//
// # Safety
// `values` must hold `n` doubles, `counts` `capacity` entries.
enum VbStatus vb_summarize(const double *values,
                           size_t n,
                           double bin_width,
                           struct VbSummary *summary,
                           uint64_t *counts,
                           size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VB_ODMR_H */
