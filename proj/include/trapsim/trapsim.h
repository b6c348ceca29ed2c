/* C interface to the trapsim library.
 *
 * Conventions:
 *  - Every fallible call returns trapsim_status; TRAPSIM_OK is 0.
 *  - On failure, trapsim_last_error() describes the most recent error on the
 *    calling thread. The pointer stays valid until the next failing call on
 *    that thread.
 *  - Objects are opaque handles created by *_create / *_new functions and
 *    released with the matching *_destroy. Destroying NULL is a no-op.
 *  - Text outputs use caller buffers: pass buf/cap and receive the full
 *    length (excluding the terminator) in *len. When cap is too small the
 *    call returns TRAPSIM_ERR_BUFFER_TOO_SMALL and writes nothing; pass
 *    buf = NULL, cap = 0 to query the size.
 *  - Times are in seconds, frequencies in Hz, displacements in nm.
 */
#ifndef TRAPSIM_TRAPSIM_H
#define TRAPSIM_TRAPSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TRAPSIM_BUILDING)
#    define TRAPSIM_API __declspec(dllexport)
#  else
#    define TRAPSIM_API __declspec(dllimport)
#  endif
#else
#  define TRAPSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum trapsim_status {
  TRAPSIM_OK = 0,
  TRAPSIM_ERR_INVALID_ARGUMENT = 1, /* NULL handle, bad enum, and similar */
  TRAPSIM_ERR_CONFIG = 2,           /* config file invalid */
  TRAPSIM_ERR_DOMAIN = 3,           /* precondition of the model violated */
  TRAPSIM_ERR_FIT = 4,              /* fit did not converge or data not Gaussian */
  TRAPSIM_ERR_FIT_UNBOUNDED = 5,    /* no decay resolved; tau_d unbounded */
  TRAPSIM_ERR_IO = 6,
  TRAPSIM_ERR_CRITERIA_FAILED = 7,  /* reproduce: some criterion failed */
  TRAPSIM_ERR_BUFFER_TOO_SMALL = 8,
  TRAPSIM_ERR_INTERNAL = 9
} trapsim_status;

typedef struct trapsim_estimate {
  double value;
  double std_error;
} trapsim_estimate;

TRAPSIM_API const char* trapsim_version(void);
TRAPSIM_API int trapsim_config_schema_version(void);
TRAPSIM_API const char* trapsim_last_error(void);
TRAPSIM_API const char* trapsim_status_name(trapsim_status status);

/* ---- numerics ---------------------------------------------------------- */

TRAPSIM_API trapsim_status trapsim_poisson_pmf(uint64_t n, double mean, double* out);
TRAPSIM_API trapsim_status trapsim_poisson_cdf(uint64_t n, double mean, double* out);
TRAPSIM_API trapsim_status trapsim_gamma_p(double s, double x, double* out);
TRAPSIM_API trapsim_status trapsim_gamma_q(double s, double x, double* out);
TRAPSIM_API trapsim_status trapsim_binomial_estimate(uint64_t successes, uint64_t trials,
                                                     trapsim_estimate* out);

typedef struct trapsim_decay_fit {
  trapsim_estimate tau_d;
  double reduced_chi2;
  double residual_norm;
  int iterations;
} trapsim_decay_fit;

/* Weighted fit of exp(-t^2 / (2 tau_d^2)) to n points. */
TRAPSIM_API trapsim_status trapsim_fit_gaussian_decay(const double* t, const double* contrast,
                                                      const double* contrast_err, size_t n,
                                                      trapsim_decay_fit* out);

/* ---- detection ---------------------------------------------------------- */

typedef struct trapsim_detection_params {
  double n_bar_bright;
  double n_bar_dark;
  double t_det;
  double t_delay;
  double tau;
} trapsim_detection_params;

typedef struct trapsim_threshold_report {
  uint64_t threshold;
  trapsim_estimate eps_bright;
  trapsim_estimate eps_dark;
  trapsim_estimate eps_avg;
  double fidelity;
} trapsim_threshold_report;

typedef enum trapsim_ion_state { TRAPSIM_BRIGHT = 0, TRAPSIM_DARK = 1 } trapsim_ion_state;

typedef struct trapsim_detector trapsim_detector;
typedef struct trapsim_histogram trapsim_histogram;

/* Fills the reference parameters (25.37, 0.18, 50 us, 20 us, 1 s). */
TRAPSIM_API void trapsim_detection_params_default(trapsim_detection_params* out);
TRAPSIM_API trapsim_status trapsim_detector_create(const trapsim_detection_params* params,
                                                   trapsim_detector** out);
TRAPSIM_API void trapsim_detector_destroy(trapsim_detector* det);
TRAPSIM_API trapsim_status trapsim_detector_bright_pmf(const trapsim_detector* det, uint64_t n,
                                                       double* out);
TRAPSIM_API trapsim_status trapsim_detector_dark_pmf(const trapsim_detector* det, uint64_t n,
                                                     double* out);
TRAPSIM_API trapsim_status trapsim_detector_threshold(const trapsim_detector* det,
                                                      uint64_t threshold,
                                                      trapsim_threshold_report* out);
TRAPSIM_API trapsim_status trapsim_detector_optimal_threshold(const trapsim_detector* det,
                                                              uint64_t max_threshold,
                                                              trapsim_threshold_report* out);
/* Trial i draws from stream (seed, stream_id).child(i); any thread count
 * gives identical results. */
TRAPSIM_API trapsim_status trapsim_detector_simulate(const trapsim_detector* det,
                                                     trapsim_ion_state state, uint64_t trials,
                                                     uint64_t seed, uint64_t stream_id,
                                                     unsigned threads, trapsim_histogram** out);

TRAPSIM_API void trapsim_histogram_destroy(trapsim_histogram* h);
TRAPSIM_API uint64_t trapsim_histogram_max_count(const trapsim_histogram* h);
TRAPSIM_API uint64_t trapsim_histogram_total(const trapsim_histogram* h);
TRAPSIM_API uint64_t trapsim_histogram_at(const trapsim_histogram* h, uint64_t photon_count);
TRAPSIM_API trapsim_status trapsim_histogram_errors(const trapsim_histogram* bright,
                                                    const trapsim_histogram* dark,
                                                    uint64_t threshold,
                                                    trapsim_threshold_report* out);
TRAPSIM_API trapsim_status trapsim_histogram_csv(const trapsim_histogram* h, char* buf,
                                                 size_t cap, size_t* len);

/* ---- efficiency --------------------------------------------------------- */

typedef struct trapsim_comparison {
  double predicted;
  trapsim_estimate measured;
  double sigma_distance; /* +inf when the measured error is zero and values differ */
  int degenerate_error;
} trapsim_comparison;

TRAPSIM_API trapsim_status trapsim_solid_angle_fraction(double na, double* out);
TRAPSIM_API trapsim_status trapsim_chain_efficiency(double na, const double* transmissions,
                                                    size_t n_stages, double* out);
TRAPSIM_API trapsim_status trapsim_compare_measurement(double predicted, uint64_t detections,
                                                       uint64_t trials, trapsim_comparison* out);

/* ---- coherence ---------------------------------------------------------- */

typedef struct trapsim_noise trapsim_noise;
typedef struct trapsim_curve trapsim_curve;

typedef enum trapsim_mode {
  TRAPSIM_MODE_AUTOMATIC = 0,
  TRAPSIM_MODE_FAST = 1,
  TRAPSIM_MODE_FULL = 2
} trapsim_mode;

typedef struct trapsim_scan_settings {
  const char* sequence; /* "ramsey", "hahn", "xy4", "xy8", ..., "xy32" */
  const double* delays; /* s, strictly increasing */
  size_t n_delays;
  double pi_time;
  double amplitude_error;
  double detuning_offset_hz;
  uint64_t trials; /* >= 100 */
  trapsim_mode mode;
} trapsim_scan_settings;

/* Empty model; add components before scanning. */
TRAPSIM_API trapsim_status trapsim_noise_create(trapsim_noise** out);
/* The shipped composite: quasi-static plus a slow and a fast OU process. */
TRAPSIM_API trapsim_status trapsim_noise_create_default(trapsim_noise** out);
TRAPSIM_API void trapsim_noise_destroy(trapsim_noise* noise);
TRAPSIM_API trapsim_status trapsim_noise_add_static(trapsim_noise* noise, double delta0_hz);
TRAPSIM_API trapsim_status trapsim_noise_add_quasi_static(trapsim_noise* noise, double sigma_hz);
TRAPSIM_API trapsim_status trapsim_noise_add_ou(trapsim_noise* noise, double sigma_hz,
                                                double tau_c);

TRAPSIM_API trapsim_status trapsim_coherence_scan(const trapsim_noise* noise,
                                                  const trapsim_scan_settings* settings,
                                                  uint64_t seed, uint64_t stream_id,
                                                  unsigned threads, trapsim_curve** out);
TRAPSIM_API trapsim_status trapsim_curve_from_csv(const char* text, trapsim_curve** out);
TRAPSIM_API void trapsim_curve_destroy(trapsim_curve* curve);
TRAPSIM_API size_t trapsim_curve_size(const trapsim_curve* curve);
TRAPSIM_API trapsim_status trapsim_curve_point(const trapsim_curve* curve, size_t i, double* t,
                                               double* contrast, double* contrast_err);
TRAPSIM_API trapsim_status trapsim_curve_fit(const trapsim_curve* curve, trapsim_decay_fit* out);
TRAPSIM_API trapsim_status trapsim_curve_csv(const trapsim_curve* curve, char* buf, size_t cap,
                                             size_t* len);

TRAPSIM_API double trapsim_gradient_detuning(double gradient_g_per_m, double sensitivity_hz_per_g,
                                             double displacement_m);
TRAPSIM_API trapsim_status trapsim_pi_time_to_rabi(double pi_time, double* out);

/* ---- vibration ---------------------------------------------------------- */

typedef struct trapsim_series trapsim_series;
typedef struct trapsim_spectrum trapsim_spectrum;

typedef struct trapsim_tone {
  double frequency;
  double amplitude;
  double phase;
} trapsim_tone;

typedef struct trapsim_peak {
  double frequency;
  double amplitude;
  int harmonic_index; /* 0 when unlabelled */
} trapsim_peak;

TRAPSIM_API trapsim_status trapsim_series_create(double sample_rate, const double* samples,
                                                 size_t n, trapsim_series** out);
TRAPSIM_API trapsim_status trapsim_series_from_csv(const char* text, trapsim_series** out);
TRAPSIM_API trapsim_status trapsim_series_synthesize(const trapsim_tone* tones, size_t n_tones,
                                                     double drift_nm_per_s, double noise_rms,
                                                     double duration, double sample_rate,
                                                     uint64_t seed, uint64_t stream_id,
                                                     trapsim_series** out);
TRAPSIM_API void trapsim_series_destroy(trapsim_series* series);
TRAPSIM_API size_t trapsim_series_size(const trapsim_series* series);
TRAPSIM_API const double* trapsim_series_data(const trapsim_series* series);
TRAPSIM_API double trapsim_series_sample_rate(const trapsim_series* series);
TRAPSIM_API trapsim_status trapsim_series_high_pass(const trapsim_series* series,
                                                    double cutoff_hz, trapsim_series** out);
TRAPSIM_API trapsim_status trapsim_series_rms(const trapsim_series* series, double* out);
TRAPSIM_API trapsim_status trapsim_series_csv(const trapsim_series* series, char* buf, size_t cap,
                                              size_t* len);

TRAPSIM_API trapsim_status trapsim_spectrum_compute(const trapsim_series* series,
                                                    trapsim_spectrum** out);
TRAPSIM_API void trapsim_spectrum_destroy(trapsim_spectrum* spectrum);
TRAPSIM_API double trapsim_spectrum_rbw(const trapsim_spectrum* spectrum);
TRAPSIM_API size_t trapsim_spectrum_size(const trapsim_spectrum* spectrum);
TRAPSIM_API trapsim_status trapsim_spectrum_bin(const trapsim_spectrum* spectrum, size_t i,
                                                double* frequency, double* amplitude);
/* Writes up to cap peaks into out and the total count into *count.
 * fundamental <= 0 disables harmonic labelling. */
TRAPSIM_API trapsim_status trapsim_spectrum_peaks(const trapsim_spectrum* spectrum,
                                                  double min_amplitude, double fundamental,
                                                  trapsim_peak* out, size_t cap, size_t* count);

/* ---- harness ------------------------------------------------------------ */

/* Runs one experiment from a YAML config and writes its outputs and
 * manifest.json into out_dir. experiment may be NULL to use the config's.
 * has_seed = 0 keeps the config's seed (or the default). summary, if not
 * NULL, receives a one-line description valid until the next call on this
 * thread. */
TRAPSIM_API trapsim_status trapsim_run(const char* experiment, const char* config_path,
                                       int has_seed, uint64_t seed, const char* out_dir,
                                       unsigned threads, const char** summary);

/* Runs the acceptance suite and writes data CSVs, acceptance.json,
 * timing.json and manifest.json into out_dir. Returns
 * TRAPSIM_ERR_CRITERIA_FAILED when any criterion fails; the report is
 * written regardless. table receives one line per criterion. */
TRAPSIM_API trapsim_status trapsim_reproduce(uint64_t seed, double tolerance_scale,
                                             const char* out_dir, unsigned threads,
                                             const char** table);

/* NULL-terminated list of experiment names. */
TRAPSIM_API const char* const* trapsim_experiments(void);

#ifdef __cplusplus
}
#endif

#endif
