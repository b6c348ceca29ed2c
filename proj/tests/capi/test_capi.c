/* Exercises the C interface from plain C. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "trapsim/trapsim.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

#define EXPECT_NEAR(a, b, tol) EXPECT(fabs((a) - (b)) <= (tol))

static void test_errors(void) {
  double x = 0.0;
  EXPECT(trapsim_poisson_pmf(3, -1.0, &x) == TRAPSIM_ERR_DOMAIN);
  EXPECT(strlen(trapsim_last_error()) > 0);
  EXPECT(trapsim_poisson_pmf(3, 1.0, NULL) == TRAPSIM_ERR_INVALID_ARGUMENT);
  EXPECT(strcmp(trapsim_status_name(TRAPSIM_ERR_CONFIG), "config error") == 0);
  EXPECT(strcmp(trapsim_version(), "1.0.0") == 0);
  EXPECT(trapsim_config_schema_version() == 1);
  trapsim_detector_destroy(NULL);
  trapsim_histogram_destroy(NULL);
}

static void test_numerics(void) {
  double p = 0.0, q = 0.0;
  EXPECT(trapsim_gamma_p(2.5, 1.7, &p) == TRAPSIM_OK);
  EXPECT(trapsim_gamma_q(2.5, 1.7, &q) == TRAPSIM_OK);
  EXPECT_NEAR(p + q, 1.0, 1e-14);
  EXPECT(trapsim_poisson_cdf(4, 25.37, &p) == TRAPSIM_OK);
  EXPECT_NEAR(p, 1.950317379366453e-07, 1e-12 * 1.950317379366453e-07);

  trapsim_estimate e;
  EXPECT(trapsim_binomial_estimate(1770, 100000, &e) == TRAPSIM_OK);
  EXPECT_NEAR(e.value, 0.0177, 1e-15);
  EXPECT_NEAR(e.std_error, 4.1697e-4, 1e-7);

  double t[6], c[6], err[6];
  for (int i = 0; i < 6; ++i) {
    t[i] = 0.01 * (i + 1);
    c[i] = exp(-t[i] * t[i] / (2.0 * 0.03 * 0.03));
    err[i] = 0.01;
  }
  trapsim_decay_fit fit;
  EXPECT(trapsim_fit_gaussian_decay(t, c, err, 6, &fit) == TRAPSIM_OK);
  EXPECT_NEAR(fit.tau_d.value, 0.03, 1e-9);
  for (int i = 0; i < 6; ++i) c[i] = 1.0;
  EXPECT(trapsim_fit_gaussian_decay(t, c, err, 6, &fit) == TRAPSIM_ERR_FIT_UNBOUNDED);
  EXPECT(trapsim_fit_gaussian_decay(t, c, err, 2, &fit) == TRAPSIM_ERR_DOMAIN);
}

static void test_detection(void) {
  trapsim_detection_params params;
  trapsim_detection_params_default(&params);
  trapsim_detector* det = NULL;
  EXPECT(trapsim_detector_create(&params, &det) == TRAPSIM_OK);

  trapsim_threshold_report r;
  EXPECT(trapsim_detector_threshold(det, 5, &r) == TRAPSIM_OK);
  EXPECT_NEAR(r.eps_avg.value, 3.099068528703529e-05, 1e-15);
  EXPECT_NEAR(r.fidelity, 1.0 - 3.099068528703529e-05, 1e-15);
  EXPECT(trapsim_detector_optimal_threshold(det, 20, &r) == TRAPSIM_OK);
  EXPECT(r.threshold == 6);

  double sum = 0.0, v = 0.0;
  for (uint64_t n = 0; n < 200; ++n) {
    EXPECT(trapsim_detector_dark_pmf(det, n, &v) == TRAPSIM_OK);
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);

  trapsim_histogram *bright = NULL, *dark = NULL, *dark8 = NULL;
  EXPECT(trapsim_detector_simulate(det, TRAPSIM_BRIGHT, 50000, 9, 1, 1, &bright) == TRAPSIM_OK);
  EXPECT(trapsim_detector_simulate(det, TRAPSIM_DARK, 50000, 9, 2, 1, &dark) == TRAPSIM_OK);
  EXPECT(trapsim_detector_simulate(det, TRAPSIM_DARK, 50000, 9, 2, 8, &dark8) == TRAPSIM_OK);
  EXPECT(trapsim_histogram_total(dark) == 50000);
  for (uint64_t n = 0; n <= trapsim_histogram_max_count(dark); ++n) {
    EXPECT(trapsim_histogram_at(dark, n) == trapsim_histogram_at(dark8, n));
  }
  EXPECT(trapsim_histogram_errors(bright, dark, 5, &r) == TRAPSIM_OK);
  EXPECT(r.eps_avg.value < 1e-3);

  size_t len = 0;
  EXPECT(trapsim_histogram_csv(dark, NULL, 0, &len) == TRAPSIM_OK);
  EXPECT(len > 20);
  char small[8];
  EXPECT(trapsim_histogram_csv(dark, small, sizeof small, &len) == TRAPSIM_ERR_BUFFER_TOO_SMALL);
  char* buf = malloc(len + 1);
  EXPECT(trapsim_histogram_csv(dark, buf, len + 1, &len) == TRAPSIM_OK);
  EXPECT(strncmp(buf, "photon_count,trials\n", 20) == 0);
  free(buf);

  trapsim_histogram_destroy(bright);
  trapsim_histogram_destroy(dark);
  trapsim_histogram_destroy(dark8);
  trapsim_detector_destroy(det);

  params.tau = -1.0;
  EXPECT(trapsim_detector_create(&params, &det) == TRAPSIM_ERR_DOMAIN);
  EXPECT(det == NULL);
}

static void test_efficiency(void) {
  double f = 0.0;
  EXPECT(trapsim_solid_angle_fraction(0.6, &f) == TRAPSIM_OK);
  EXPECT_NEAR(f, 0.1, 1e-12);
  const double stages[] = {0.917};
  EXPECT(trapsim_chain_efficiency(0.6, stages, 1, &f) == TRAPSIM_OK);
  EXPECT_NEAR(f, 0.0917, 1e-12);
  trapsim_comparison c;
  EXPECT(trapsim_compare_measurement(0.0196, 1770, 100000, &c) == TRAPSIM_OK);
  EXPECT(c.sigma_distance > 4.4 && c.sigma_distance < 4.7);
  EXPECT(trapsim_compare_measurement(0.5, 0, 10, &c) == TRAPSIM_OK);
  EXPECT(c.degenerate_error == 1 && isinf(c.sigma_distance));
}

static void test_coherence(void) {
  trapsim_noise* noise = NULL;
  EXPECT(trapsim_noise_create(&noise) == TRAPSIM_OK);
  const double sigma = 1.0 / (2.0 * 3.141592653589793 * 0.024);
  EXPECT(trapsim_noise_add_quasi_static(noise, sigma) == TRAPSIM_OK);
  EXPECT(trapsim_noise_add_ou(noise, 1.0, -2.0) == TRAPSIM_ERR_DOMAIN);

  double delays[8];
  for (int i = 0; i < 8; ++i) delays[i] = 0.0075 * (i + 1);
  trapsim_scan_settings s = {"ramsey", delays, 8, 0.0, 0.0, 0.0, 4000, TRAPSIM_MODE_AUTOMATIC};
  trapsim_curve* curve = NULL;
  EXPECT(trapsim_coherence_scan(noise, &s, 42, 1, 1, &curve) == TRAPSIM_OK);
  EXPECT(trapsim_curve_size(curve) == 8);
  trapsim_decay_fit fit;
  EXPECT(trapsim_curve_fit(curve, &fit) == TRAPSIM_OK);
  EXPECT(fabs(fit.tau_d.value / 0.024 - 1.0) < 0.05);

  size_t len = 0;
  EXPECT(trapsim_curve_csv(curve, NULL, 0, &len) == TRAPSIM_OK);
  char* text = malloc(len + 1);
  EXPECT(trapsim_curve_csv(curve, text, len + 1, &len) == TRAPSIM_OK);
  trapsim_curve* back = NULL;
  EXPECT(trapsim_curve_from_csv(text, &back) == TRAPSIM_OK);
  double t0 = 0.0, c0 = 0.0, c1 = 0.0;
  EXPECT(trapsim_curve_point(back, 3, &t0, &c0, NULL) == TRAPSIM_OK);
  EXPECT(trapsim_curve_point(curve, 3, NULL, &c1, NULL) == TRAPSIM_OK);
  EXPECT(c0 == c1);
  EXPECT(trapsim_curve_point(back, 8, &t0, &c0, NULL) == TRAPSIM_ERR_INVALID_ARGUMENT);
  free(text);

  s.sequence = "xy7";
  trapsim_curve* bad = NULL;
  EXPECT(trapsim_coherence_scan(noise, &s, 42, 1, 1, &bad) == TRAPSIM_ERR_DOMAIN);
  EXPECT(bad == NULL);

  EXPECT_NEAR(trapsim_gradient_detuning(350.0, 2.8e6, 1e-6), 980.0, 0.1);
  double rabi = 0.0;
  EXPECT(trapsim_pi_time_to_rabi(40e-6, &rabi) == TRAPSIM_OK);
  EXPECT_NEAR(rabi, 78539.81633974483, 1e-6);

  trapsim_curve_destroy(curve);
  trapsim_curve_destroy(back);
  trapsim_noise_destroy(noise);
}

static void test_vibration(void) {
  const trapsim_tone tones[] = {{1.2, 10.76, 0.0}, {2.4, 3.0, 0.5}, {3.6, 1.5, 1.0}};
  trapsim_series* series = NULL;
  EXPECT(trapsim_series_synthesize(tones, 3, 0.0, 0.0, 20.0, 1000.0, 42, 0, &series) == TRAPSIM_OK);
  EXPECT(trapsim_series_size(series) == 20000);

  trapsim_series* one = NULL;
  EXPECT(trapsim_series_synthesize(tones, 1, 0.0, 0.0, 20.0, 1000.0, 42, 0, &one) == TRAPSIM_OK);
  double r = 0.0;
  EXPECT(trapsim_series_rms(one, &r) == TRAPSIM_OK);
  EXPECT_NEAR(r, 7.61, 0.01);

  trapsim_series* filtered = NULL;
  EXPECT(trapsim_series_high_pass(series, 0.03, &filtered) == TRAPSIM_OK);
  EXPECT(trapsim_series_high_pass(series, 600.0, &filtered) == TRAPSIM_ERR_DOMAIN);
  trapsim_spectrum* spec = NULL;
  EXPECT(trapsim_spectrum_compute(series, &spec) == TRAPSIM_OK);
  EXPECT(trapsim_spectrum_rbw(spec) == 0.05);
  EXPECT(trapsim_spectrum_size(spec) == 10001);

  trapsim_peak peaks[8];
  size_t count = 0;
  EXPECT(trapsim_spectrum_peaks(spec, 1.0, 1.2, peaks, 8, &count) == TRAPSIM_OK);
  EXPECT(count == 3);
  EXPECT(peaks[0].harmonic_index == 1 && peaks[1].harmonic_index == 2 && peaks[2].harmonic_index == 3);
  EXPECT_NEAR(peaks[0].amplitude, 10.76, 1e-6);

  const trapsim_tone aliased = {600.0, 1.0, 0.0};
  trapsim_series* bad = NULL;
  EXPECT(trapsim_series_synthesize(&aliased, 1, 0.0, 0.0, 1.0, 1000.0, 1, 0, &bad) == TRAPSIM_ERR_DOMAIN);

  const double samples[] = {1.0, 2.0, 3.0, 4.0};
  trapsim_series* small = NULL;
  EXPECT(trapsim_series_create(100.0, samples, 4, &small) == TRAPSIM_OK);
  EXPECT(trapsim_series_data(small)[2] == 3.0);

  trapsim_series_destroy(small);
  trapsim_spectrum_destroy(spec);
  trapsim_series_destroy(filtered);
  trapsim_series_destroy(one);
  trapsim_series_destroy(series);
}

static void test_harness(const char* config_dir, const char* scratch) {
  char cfg[1024], out[1024];
  snprintf(cfg, sizeof cfg, "%s/detect_model.yaml", config_dir);
  snprintf(out, sizeof out, "%s/capi_detect_model", scratch);
  const char* summary = NULL;
  EXPECT(trapsim_run(NULL, cfg, 0, 0, out, 1, &summary) == TRAPSIM_OK);
  EXPECT(summary != NULL && strstr(summary, "detect-model") != NULL);
  EXPECT(trapsim_run("efficiency", cfg, 0, 0, out, 1, &summary) == TRAPSIM_ERR_CONFIG);
  EXPECT(strstr(trapsim_last_error(), "experiment") != NULL);

  int n = 0;
  for (const char* const* e = trapsim_experiments(); *e != NULL; ++e) ++n;
  EXPECT(n == 8);
}

int main(int argc, char** argv) {
  if (argc < 3) {
    fprintf(stderr, "usage: %s <config-dir> <scratch-dir>\n", argv[0]);
    return 2;
  }
  test_errors();
  test_numerics();
  test_detection();
  test_efficiency();
  test_coherence();
  test_vibration();
  test_harness(argv[1], argv[2]);
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  puts("C API: all checks passed");
  return 0;
}
