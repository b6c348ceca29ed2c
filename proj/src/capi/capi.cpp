#include "trapsim/trapsim.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "coherence.hpp"
#include "config.hpp"
#include "detection.hpp"
#include "efficiency.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "reproduce.hpp"
#include "version.hpp"
#include "vibration.hpp"

struct trapsim_detector {
  trapsim::DetectionParams params;
};
struct trapsim_histogram {
  trapsim::CountHistogram hist;
};
struct trapsim_noise {
  trapsim::NoiseModel model;
};
struct trapsim_curve {
  trapsim::CoherenceCurve curve;
};
struct trapsim_series {
  trapsim::TimeSeries series;
};
struct trapsim_spectrum {
  trapsim::Spectrum spectrum;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_text;  // summary / table handed back to callers

trapsim_status fail(trapsim_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs f, translating exceptions into status codes.
template <class F>
trapsim_status guard(F&& f) {
  try {
    f();
    return TRAPSIM_OK;
  } catch (const trapsim::ConfigError& e) {
    return fail(TRAPSIM_ERR_CONFIG, e.what());
  } catch (const trapsim::UnboundedFitError& e) {
    return fail(TRAPSIM_ERR_FIT_UNBOUNDED, e.what());
  } catch (const trapsim::FitError& e) {
    return fail(TRAPSIM_ERR_FIT, e.what());
  } catch (const trapsim::DomainError& e) {
    return fail(TRAPSIM_ERR_DOMAIN, e.what());
  } catch (const trapsim::IoError& e) {
    return fail(TRAPSIM_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TRAPSIM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TRAPSIM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TRAPSIM_ERR_INTERNAL, "unknown error");
  }
}

trapsim_status null_arg(const char* what) {
  return fail(TRAPSIM_ERR_INVALID_ARGUMENT, std::string(what) + " must not be NULL");
}

trapsim_status copy_text(const std::string& text, char* buf, size_t cap, size_t* len) {
  if (len == nullptr) return null_arg("len");
  *len = text.size();
  if (buf == nullptr && cap == 0) return TRAPSIM_OK;
  if (buf == nullptr) return null_arg("buf");
  if (cap < text.size() + 1) {
    return fail(TRAPSIM_ERR_BUFFER_TOO_SMALL,
                "buffer holds " + std::to_string(cap) + " bytes, need " +
                    std::to_string(text.size() + 1));
  }
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return TRAPSIM_OK;
}

trapsim_estimate to_c(const trapsim::EstimateWithError& e) { return {e.value, e.std_error}; }

trapsim_threshold_report to_c(const trapsim::ThresholdReport& r) {
  return {r.threshold, to_c(r.eps_bright), to_c(r.eps_dark), to_c(r.eps_avg), r.fidelity};
}

trapsim_decay_fit to_c(const trapsim::GaussianDecayFit& f) {
  return {to_c(f.tau_d), f.reduced_chi2, f.residual_norm, f.iterations};
}

trapsim::DetectionParams from_c(const trapsim_detection_params& p) {
  trapsim::DetectionParams out;
  out.n_bar_bright = p.n_bar_bright;
  out.n_bar_dark = p.n_bar_dark;
  out.t_det = p.t_det;
  out.t_delay = p.t_delay;
  out.tau = p.tau;
  return out;
}

}  // namespace

extern "C" {

const char* trapsim_version(void) { return TRAPSIM_VERSION; }

int trapsim_config_schema_version(void) { return trapsim::runner::kConfigSchemaVersion; }

const char* trapsim_last_error(void) { return g_last_error.c_str(); }

const char* trapsim_status_name(trapsim_status status) {
  switch (status) {
    case TRAPSIM_OK: return "ok";
    case TRAPSIM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TRAPSIM_ERR_CONFIG: return "config error";
    case TRAPSIM_ERR_DOMAIN: return "domain error";
    case TRAPSIM_ERR_FIT: return "fit error";
    case TRAPSIM_ERR_FIT_UNBOUNDED: return "unbounded fit";
    case TRAPSIM_ERR_IO: return "i/o error";
    case TRAPSIM_ERR_CRITERIA_FAILED: return "criteria failed";
    case TRAPSIM_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case TRAPSIM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

// ---- numerics

trapsim_status trapsim_poisson_pmf(uint64_t n, double mean, double* out) {
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = trapsim::poisson_pmf(n, mean); });
}

trapsim_status trapsim_poisson_cdf(uint64_t n, double mean, double* out) {
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = trapsim::poisson_cdf(n, mean); });
}

trapsim_status trapsim_gamma_p(double s, double x, double* out) {
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = trapsim::reg_lower_incomplete_gamma(s, x); });
}

trapsim_status trapsim_gamma_q(double s, double x, double* out) {
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = trapsim::reg_upper_incomplete_gamma(s, x); });
}

trapsim_status trapsim_binomial_estimate(uint64_t successes, uint64_t trials,
                                         trapsim_estimate* out) {
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = to_c(trapsim::binomial_estimate(successes, trials)); });
}

trapsim_status trapsim_fit_gaussian_decay(const double* t, const double* contrast,
                                          const double* contrast_err, size_t n,
                                          trapsim_decay_fit* out) {
  if (out == nullptr) return null_arg("out");
  if (n > 0 && (t == nullptr || contrast == nullptr || contrast_err == nullptr)) {
    return null_arg("point arrays");
  }
  return guard([&] {
    std::vector<trapsim::DecayPoint> pts(n);
    for (size_t i = 0; i < n; ++i) pts[i] = {t[i], contrast[i], contrast_err[i]};
    *out = to_c(trapsim::fit_gaussian_decay(pts));
  });
}

// ---- detection

void trapsim_detection_params_default(trapsim_detection_params* out) {
  if (out == nullptr) return;
  const trapsim::DetectionParams p;
  *out = {p.n_bar_bright, p.n_bar_dark, p.t_det, p.t_delay, p.tau};
}

trapsim_status trapsim_detector_create(const trapsim_detection_params* params,
                                       trapsim_detector** out) {
  if (params == nullptr) return null_arg("params");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guard([&] {
    auto p = from_c(*params);
    p.validate();
    *out = new trapsim_detector{p};
  });
}

void trapsim_detector_destroy(trapsim_detector* det) { delete det; }

trapsim_status trapsim_detector_bright_pmf(const trapsim_detector* det, uint64_t n, double* out) {
  if (det == nullptr) return null_arg("detector");
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = trapsim::bright_pmf(det->params, n); });
}

trapsim_status trapsim_detector_dark_pmf(const trapsim_detector* det, uint64_t n, double* out) {
  if (det == nullptr) return null_arg("detector");
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = trapsim::dark_pmf(det->params, n); });
}

trapsim_status trapsim_detector_threshold(const trapsim_detector* det, uint64_t threshold,
                                          trapsim_threshold_report* out) {
  if (det == nullptr) return null_arg("detector");
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = to_c(trapsim::threshold_errors(det->params, threshold)); });
}

trapsim_status trapsim_detector_optimal_threshold(const trapsim_detector* det,
                                                  uint64_t max_threshold,
                                                  trapsim_threshold_report* out) {
  if (det == nullptr) return null_arg("detector");
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = to_c(trapsim::optimal_threshold(det->params, max_threshold)); });
}

trapsim_status trapsim_detector_simulate(const trapsim_detector* det, trapsim_ion_state state,
                                         uint64_t trials, uint64_t seed, uint64_t stream_id,
                                         unsigned threads, trapsim_histogram** out) {
  if (det == nullptr) return null_arg("detector");
  if (out == nullptr) return null_arg("out");
  if (state != TRAPSIM_BRIGHT && state != TRAPSIM_DARK) {
    return fail(TRAPSIM_ERR_INVALID_ARGUMENT, "state must be TRAPSIM_BRIGHT or TRAPSIM_DARK");
  }
  *out = nullptr;
  return guard([&] {
    auto h = trapsim::simulate_detection(
        det->params, state == TRAPSIM_BRIGHT ? trapsim::IonState::bright : trapsim::IonState::dark,
        trials, trapsim::derive_stream(seed, stream_id), threads == 0 ? 1 : threads);
    *out = new trapsim_histogram{std::move(h)};
  });
}

void trapsim_histogram_destroy(trapsim_histogram* h) { delete h; }

uint64_t trapsim_histogram_max_count(const trapsim_histogram* h) {
  return h == nullptr ? 0 : h->hist.max_count();
}

uint64_t trapsim_histogram_total(const trapsim_histogram* h) {
  return h == nullptr ? 0 : h->hist.total_trials();
}

uint64_t trapsim_histogram_at(const trapsim_histogram* h, uint64_t photon_count) {
  if (h == nullptr || photon_count > h->hist.max_count()) return 0;
  return h->hist.at(photon_count);
}

trapsim_status trapsim_histogram_errors(const trapsim_histogram* bright,
                                        const trapsim_histogram* dark, uint64_t threshold,
                                        trapsim_threshold_report* out) {
  if (bright == nullptr || dark == nullptr) return null_arg("histogram");
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = to_c(trapsim::histogram_errors(bright->hist, dark->hist, threshold)); });
}

trapsim_status trapsim_histogram_csv(const trapsim_histogram* h, char* buf, size_t cap,
                                     size_t* len) {
  if (h == nullptr) return null_arg("histogram");
  std::string text;
  const auto s = guard([&] { text = trapsim::histogram_to_csv(h->hist); });
  return s != TRAPSIM_OK ? s : copy_text(text, buf, cap, len);
}

// ---- efficiency

trapsim_status trapsim_solid_angle_fraction(double na, double* out) {
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = trapsim::na_to_solid_angle_fraction(na); });
}

trapsim_status trapsim_chain_efficiency(double na, const double* transmissions, size_t n_stages,
                                        double* out) {
  if (out == nullptr) return null_arg("out");
  if (n_stages > 0 && transmissions == nullptr) return null_arg("transmissions");
  return guard([&] {
    trapsim::EfficiencyBudget b;
    b.na = na;
    for (size_t i = 0; i < n_stages; ++i) {
      b.stages.push_back({"stage " + std::to_string(i + 1), transmissions[i]});
    }
    *out = trapsim::chain_efficiency(b);
  });
}

trapsim_status trapsim_compare_measurement(double predicted, uint64_t detections, uint64_t trials,
                                           trapsim_comparison* out) {
  if (out == nullptr) return null_arg("out");
  return guard([&] {
    const auto c = trapsim::compare_with_measurement(predicted, detections, trials);
    *out = {c.predicted, to_c(c.measured), c.sigma_distance, c.degenerate_error ? 1 : 0};
  });
}

// ---- coherence

trapsim_status trapsim_noise_create(trapsim_noise** out) {
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guard([&] { *out = new trapsim_noise{}; });
}

trapsim_status trapsim_noise_create_default(trapsim_noise** out) {
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guard([&] { *out = new trapsim_noise{trapsim::default_composite_noise()}; });
}

void trapsim_noise_destroy(trapsim_noise* noise) { delete noise; }

namespace {
trapsim_status add_component(trapsim_noise* noise, trapsim::NoiseComponent c) {
  if (noise == nullptr) return null_arg("noise");
  return guard([&] {
    trapsim::NoiseModel candidate = noise->model;
    candidate.components.push_back(c);
    candidate.validate();
    noise->model = std::move(candidate);
  });
}
}  // namespace

trapsim_status trapsim_noise_add_static(trapsim_noise* noise, double delta0_hz) {
  return add_component(noise, trapsim::StaticOffset{delta0_hz});
}

trapsim_status trapsim_noise_add_quasi_static(trapsim_noise* noise, double sigma_hz) {
  return add_component(noise, trapsim::QuasiStaticGaussian{sigma_hz});
}

trapsim_status trapsim_noise_add_ou(trapsim_noise* noise, double sigma_hz, double tau_c) {
  return add_component(noise, trapsim::OrnsteinUhlenbeck{sigma_hz, tau_c});
}

trapsim_status trapsim_coherence_scan(const trapsim_noise* noise,
                                      const trapsim_scan_settings* settings, uint64_t seed,
                                      uint64_t stream_id, unsigned threads, trapsim_curve** out) {
  if (noise == nullptr) return null_arg("noise");
  if (settings == nullptr) return null_arg("settings");
  if (out == nullptr) return null_arg("out");
  if (settings->sequence == nullptr) return null_arg("settings->sequence");
  if (settings->n_delays > 0 && settings->delays == nullptr) return null_arg("settings->delays");
  if (settings->mode < TRAPSIM_MODE_AUTOMATIC || settings->mode > TRAPSIM_MODE_FULL) {
    return fail(TRAPSIM_ERR_INVALID_ARGUMENT, "unknown propagation mode");
  }
  *out = nullptr;
  return guard([&] {
    trapsim::ScanSettings s;
    s.sequence = trapsim::SequenceSpec::parse(settings->sequence);
    s.delays.assign(settings->delays, settings->delays + settings->n_delays);
    s.pi_time = settings->pi_time;
    s.pulse_errors = {settings->amplitude_error, settings->detuning_offset_hz};
    s.trials = settings->trials;
    s.mode = static_cast<trapsim::PropagationMode>(settings->mode);
    auto curve = trapsim::coherence_scan(noise->model, s, trapsim::derive_stream(seed, stream_id),
                                         threads == 0 ? 1 : threads);
    *out = new trapsim_curve{std::move(curve)};
  });
}

trapsim_status trapsim_curve_from_csv(const char* text, trapsim_curve** out) {
  if (text == nullptr) return null_arg("text");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guard([&] { *out = new trapsim_curve{trapsim::curve_from_csv(text)}; });
}

void trapsim_curve_destroy(trapsim_curve* curve) { delete curve; }

size_t trapsim_curve_size(const trapsim_curve* curve) {
  return curve == nullptr ? 0 : curve->curve.points.size();
}

trapsim_status trapsim_curve_point(const trapsim_curve* curve, size_t i, double* t,
                                   double* contrast, double* contrast_err) {
  if (curve == nullptr) return null_arg("curve");
  if (i >= curve->curve.points.size()) {
    return fail(TRAPSIM_ERR_INVALID_ARGUMENT, "point index out of range");
  }
  const auto& p = curve->curve.points[i];
  if (t != nullptr) *t = p.t;
  if (contrast != nullptr) *contrast = p.contrast;
  if (contrast_err != nullptr) *contrast_err = p.contrast_err;
  return TRAPSIM_OK;
}

trapsim_status trapsim_curve_fit(const trapsim_curve* curve, trapsim_decay_fit* out) {
  if (curve == nullptr) return null_arg("curve");
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = to_c(trapsim::fit_coherence(curve->curve)); });
}

trapsim_status trapsim_curve_csv(const trapsim_curve* curve, char* buf, size_t cap, size_t* len) {
  if (curve == nullptr) return null_arg("curve");
  return copy_text(trapsim::curve_to_csv(curve->curve), buf, cap, len);
}

double trapsim_gradient_detuning(double gradient_g_per_m, double sensitivity_hz_per_g,
                                 double displacement_m) {
  return trapsim::gradient_detuning({gradient_g_per_m, sensitivity_hz_per_g}, displacement_m);
}

trapsim_status trapsim_pi_time_to_rabi(double pi_time, double* out) {
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = trapsim::pi_time_to_rabi(pi_time); });
}

// ---- vibration

trapsim_status trapsim_series_create(double sample_rate, const double* samples, size_t n,
                                     trapsim_series** out) {
  if (out == nullptr) return null_arg("out");
  if (n > 0 && samples == nullptr) return null_arg("samples");
  *out = nullptr;
  return guard([&] {
    trapsim::TimeSeries s{sample_rate, std::vector<double>(samples, samples + n)};
    s.validate();
    *out = new trapsim_series{std::move(s)};
  });
}

trapsim_status trapsim_series_from_csv(const char* text, trapsim_series** out) {
  if (text == nullptr) return null_arg("text");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guard([&] { *out = new trapsim_series{trapsim::series_from_csv(text)}; });
}

trapsim_status trapsim_series_synthesize(const trapsim_tone* tones, size_t n_tones,
                                         double drift_nm_per_s, double noise_rms, double duration,
                                         double sample_rate, uint64_t seed, uint64_t stream_id,
                                         trapsim_series** out) {
  if (out == nullptr) return null_arg("out");
  if (n_tones > 0 && tones == nullptr) return null_arg("tones");
  *out = nullptr;
  return guard([&] {
    std::vector<trapsim::Tone> t;
    for (size_t i = 0; i < n_tones; ++i) t.push_back({tones[i].frequency, tones[i].amplitude, tones[i].phase});
    *out = new trapsim_series{trapsim::synthesize(t, drift_nm_per_s, noise_rms, duration,
                                                  sample_rate,
                                                  trapsim::derive_stream(seed, stream_id))};
  });
}

void trapsim_series_destroy(trapsim_series* series) { delete series; }

size_t trapsim_series_size(const trapsim_series* series) {
  return series == nullptr ? 0 : series->series.samples.size();
}

const double* trapsim_series_data(const trapsim_series* series) {
  return series == nullptr ? nullptr : series->series.samples.data();
}

double trapsim_series_sample_rate(const trapsim_series* series) {
  return series == nullptr ? 0.0 : series->series.sample_rate;
}

trapsim_status trapsim_series_high_pass(const trapsim_series* series, double cutoff_hz,
                                        trapsim_series** out) {
  if (series == nullptr) return null_arg("series");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guard([&] { *out = new trapsim_series{trapsim::high_pass(series->series, cutoff_hz)}; });
}

trapsim_status trapsim_series_rms(const trapsim_series* series, double* out) {
  if (series == nullptr) return null_arg("series");
  if (out == nullptr) return null_arg("out");
  return guard([&] { *out = trapsim::rms(series->series); });
}

trapsim_status trapsim_series_csv(const trapsim_series* series, char* buf, size_t cap,
                                  size_t* len) {
  if (series == nullptr) return null_arg("series");
  return copy_text(trapsim::series_to_csv(series->series), buf, cap, len);
}

trapsim_status trapsim_spectrum_compute(const trapsim_series* series, trapsim_spectrum** out) {
  if (series == nullptr) return null_arg("series");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guard([&] { *out = new trapsim_spectrum{trapsim::amplitude_spectrum(series->series)}; });
}

void trapsim_spectrum_destroy(trapsim_spectrum* spectrum) { delete spectrum; }

double trapsim_spectrum_rbw(const trapsim_spectrum* spectrum) {
  return spectrum == nullptr ? 0.0 : spectrum->spectrum.rbw;
}

size_t trapsim_spectrum_size(const trapsim_spectrum* spectrum) {
  return spectrum == nullptr ? 0 : spectrum->spectrum.bins.size();
}

trapsim_status trapsim_spectrum_bin(const trapsim_spectrum* spectrum, size_t i, double* frequency,
                                    double* amplitude) {
  if (spectrum == nullptr) return null_arg("spectrum");
  if (i >= spectrum->spectrum.bins.size()) {
    return fail(TRAPSIM_ERR_INVALID_ARGUMENT, "bin index out of range");
  }
  if (frequency != nullptr) *frequency = spectrum->spectrum.bins[i].frequency;
  if (amplitude != nullptr) *amplitude = spectrum->spectrum.bins[i].amplitude;
  return TRAPSIM_OK;
}

trapsim_status trapsim_spectrum_peaks(const trapsim_spectrum* spectrum, double min_amplitude,
                                      double fundamental, trapsim_peak* out, size_t cap,
                                      size_t* count) {
  if (spectrum == nullptr) return null_arg("spectrum");
  if (count == nullptr) return null_arg("count");
  if (cap > 0 && out == nullptr) return null_arg("out");
  return guard([&] {
    std::optional<double> f0;
    if (fundamental > 0.0) f0 = fundamental;
    const auto peaks = trapsim::find_peaks(spectrum->spectrum, min_amplitude, f0);
    *count = peaks.size();
    for (size_t i = 0; i < peaks.size() && i < cap; ++i) {
      out[i] = {peaks[i].frequency, peaks[i].amplitude,
                peaks[i].harmonic_index ? static_cast<int>(*peaks[i].harmonic_index) : 0};
    }
  });
}

// ---- harness

trapsim_status trapsim_run(const char* experiment, const char* config_path, int has_seed,
                           uint64_t seed, const char* out_dir, unsigned threads,
                           const char** summary) {
  if (config_path == nullptr) return null_arg("config_path");
  if (out_dir == nullptr) return null_arg("out_dir");
  return guard([&] {
    trapsim::runner::RunRequest req;
    if (experiment != nullptr) req.experiment = experiment;
    req.config = config_path;
    if (has_seed) req.seed = seed;
    req.out_dir = out_dir;
    req.threads = threads;
    const auto result = trapsim::runner::run_experiment(req);
    g_text = result.experiment + " (seed " + std::to_string(result.seed) + "): " + result.summary;
    if (summary != nullptr) *summary = g_text.c_str();
  });
}

trapsim_status trapsim_reproduce(uint64_t seed, double tolerance_scale, const char* out_dir,
                                 unsigned threads, const char** table) {
  if (out_dir == nullptr) return null_arg("out_dir");
  if (!(tolerance_scale >= 0.0) || !std::isfinite(tolerance_scale)) {
    return fail(TRAPSIM_ERR_INVALID_ARGUMENT, "tolerance_scale must be finite and >= 0");
  }
  bool passed = false;
  const auto s = guard([&] {
    trapsim::runner::AcceptanceOptions opt;
    opt.seed = seed;
    opt.tolerance_scale = tolerance_scale;
    opt.threads = threads;
    const auto report = trapsim::runner::run_acceptance(opt);
    trapsim::runner::write_acceptance(report, out_dir);
    g_text = trapsim::runner::format_acceptance(report);
    if (table != nullptr) *table = g_text.c_str();
    passed = report.all_passed();
  });
  if (s != TRAPSIM_OK) return s;
  return passed ? TRAPSIM_OK : fail(TRAPSIM_ERR_CRITERIA_FAILED, "acceptance criteria failed");
}

const char* const* trapsim_experiments(void) {
  static const std::vector<const char*> names = [] {
    std::vector<const char*> v;
    for (const auto& n : trapsim::runner::experiment_names()) v.push_back(n.c_str());
    v.push_back(nullptr);
    return v;
  }();
  return names.data();
}

}  // extern "C"
