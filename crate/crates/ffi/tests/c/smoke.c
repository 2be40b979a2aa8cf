#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "vb_odmr.h"

static int fail(const char *what) {
    const char *msg = vb_last_error_message();
    fprintf(stderr, "%s: %s\n", what, msg ? msg : "(no message)");
    return 1;
}

int main(void) {
    double nu1, nu2;
    if (vb_zfs_to_transitions(3480.0, 70.0, &nu1, &nu2) != VB_STATUS_OK) return fail("transitions");
    if (nu1 != 3410.0 || nu2 != 3550.0) return fail("transition values");

    VbDoubletParams p = {3410.0, 3550.0, 40.0, 40.0, 0.046, 0.046, 1.0};
    enum { N = 201 };
    double freqs[N], signal[N];
    for (int i = 0; i < N; i++) freqs[i] = 3280.0 + 2.0 * i;
    if (vb_simulate_spectrum(&p, freqs, N, 0.0, 1, signal) != VB_STATUS_OK) return fail("simulate");
    VbDoubletFit fit;
    if (vb_fit_doublet(freqs, signal, NULL, N, NULL, &fit) != VB_STATUS_OK) return fail("fit");
    if (fabs(fit.d - 3480.0) > 1e-3 || fabs(fit.e - 70.0) > 1e-3) return fail("fit values");

    VbCalibration *cal = NULL;
    if (vb_calibration_varshni(3584.0, 1.06, 559.0, 5.0, 600.0, &cal) != VB_STATUS_OK) return fail("varshni");
    double d300, t, sigma_t;
    if (vb_calibration_eval(cal, 300.0, &d300) != VB_STATUS_OK) return fail("eval");
    if (vb_calibration_invert(cal, d300, 0.5, &t, &sigma_t) != VB_STATUS_OK) return fail("invert");
    if (fabs(t - 300.0) > 1e-5) return fail("inverted temperature");
    if (vb_calibration_invert(cal, 9999.0, 0.5, &t, &sigma_t) != VB_STATUS_OUT_OF_CALIBRATION_RANGE)
        return fail("range check");
    if (vb_last_error_message() == NULL) return fail("missing message");

    char *json = NULL;
    if (vb_calibration_to_json(cal, &json) != VB_STATUS_OK) return fail("to_json");
    VbCalibration *copy = NULL;
    if (vb_calibration_from_json(json, &copy) != VB_STATUS_OK) return fail("from_json");
    vb_string_free(json);
    vb_calibration_free(copy);
    vb_calibration_free(cal);

    printf("ok %s\n", vb_version());
    return 0;
}
