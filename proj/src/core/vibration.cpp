#include "vibration.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace trapsim {

namespace {

struct Biquad {
  double b0, b1, b2, a1, a2;
};

Biquad butterworth_high_pass(double cutoff, double sample_rate) {
  const double k = std::tan(std::numbers::pi * cutoff / sample_rate);
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
  return {norm, -2.0 * norm, norm, 2.0 * (k * k - 1.0) * norm,
          (1.0 - std::numbers::sqrt2 * k + k * k) * norm};
}

// Direct form II transposed from a zero state.
void filter_in_place(const Biquad& f, std::vector<double>& x) {
  double z1 = 0.0;
  double z2 = 0.0;
  for (auto& v : x) {
    const double in = v;
    const double out = f.b0 * in + z1;
    z1 = f.b1 * in - f.a1 * out + z2;
    z2 = f.b2 * in - f.a2 * out;
    v = out;
  }
}

// Samples after which the impulse response has decayed below ~1e-20. The
// poles are a conjugate pair of radius sqrt(a2).
std::size_t decay_length(const Biquad& f) {
  const double log_r = 0.5 * std::log(f.a2);
  if (!(log_r < 0.0)) return 64;
  return std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(60.0 / -log_r)));
}

// FFTW's planner is not reentrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void TimeSeries::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw DomainError("sample_rate must be positive and finite");
  }
  if (samples.size() < 2) throw DomainError("time series needs at least 2 samples");
}

FilterDescription describe_high_pass(double cutoff_hz) {
  FilterDescription d;
  d.cutoff_hz = cutoff_hz;
  return d;
}

TimeSeries high_pass(const TimeSeries& series, double cutoff_hz) {
  series.validate();
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < series.sample_rate / 2.0)) {
    throw DomainError("high-pass cutoff must lie in (0, sample_rate / 2)");
  }
  const std::size_t n = series.samples.size();

  // Remove the least-squares line, then filter the record as if it were zero
  // outside. Both steps are contractions, so the output never carries more
  // energy than the input about its mean.
  const double nd = static_cast<double>(n);
  const double t_mean = 0.5 * (nd - 1.0);
  double mean = 0.0;
  for (double v : series.samples) mean += v;
  mean /= nd;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - t_mean;
    sxy += dt * (series.samples[i] - mean);
    sxx += dt * dt;
  }
  const double slope = sxy / sxx;

  const Biquad f = butterworth_high_pass(cutoff_hz, series.sample_rate);
  std::vector<double> work(n + decay_length(f), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    work[i] = series.samples[i] - mean - slope * (static_cast<double>(i) - t_mean);
  }
  filter_in_place(f, work);
  std::reverse(work.begin(), work.end());
  filter_in_place(f, work);
  std::reverse(work.begin(), work.end());

  TimeSeries out;
  out.sample_rate = series.sample_rate;
  out.samples.assign(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

double rms(const TimeSeries& series) {
  if (series.samples.empty()) throw DomainError("rms of an empty series");
  const double n = static_cast<double>(series.samples.size());
  double mean = 0.0;
  for (double v : series.samples) mean += v;
  mean /= n;
  double sq = 0.0;
  for (double v : series.samples) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / n);
}

Spectrum amplitude_spectrum(const TimeSeries& series) {
  series.validate();
  const std::size_t n = series.samples.size();
  const std::size_t m = n / 2 + 1;
  std::vector<double> in(series.samples);
  fftw_complex* out = fftw_alloc_complex(m);
  if (out == nullptr) throw std::bad_alloc();
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);

  Spectrum s;
  s.rbw = series.sample_rate / static_cast<double>(n);
  s.bins.reserve(m);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < m; ++k) {
    const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
    const double magnitude = std::hypot(out[k][0], out[k][1]) * scale;
    s.bins.push_back({static_cast<double>(k) * series.sample_rate / static_cast<double>(n),
                      unpaired ? magnitude : 2.0 * magnitude});
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(out);
  return s;
}

std::vector<Peak> find_peaks(const Spectrum& spectrum, double min_amplitude,
                             std::optional<double> fundamental) {
  if (fundamental && !(*fundamental > 0.0)) throw DomainError("fundamental must be > 0");
  std::vector<Peak> peaks;
  const auto& b = spectrum.bins;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double a = b[k].amplitude;
    if (a < min_amplitude || a <= 0.0) continue;
    const bool above_left = k == 0 || a > b[k - 1].amplitude;
    const bool above_right = k + 1 == b.size() || a >= b[k + 1].amplitude;
    if (!above_left || !above_right) continue;
    Peak p{b[k].frequency, a, std::nullopt};
    if (fundamental) {
      const double ratio = std::round(p.frequency / *fundamental);
      if (ratio >= 1.0 &&
          std::fabs(p.frequency - ratio * *fundamental) <= spectrum.rbw * (1.0 + 1e-9)) {
        p.harmonic_index = static_cast<unsigned>(ratio);
      }
    }
    peaks.push_back(p);
  }
  return peaks;
}

TimeSeries synthesize(std::span<const Tone> tones, double drift_nm_per_s, double noise_rms,
                      double duration, double sample_rate, RandomStream stream) {
  if (!(sample_rate > 0.0) || !(duration > 0.0)) {
    throw DomainError("duration and sample_rate must be positive");
  }
  if (!(noise_rms >= 0.0)) throw DomainError("noise_rms must be >= 0");
  for (const auto& t : tones) {
    if (!(sample_rate > 2.0 * std::fabs(t.frequency))) {
      throw DomainError("tone at " + std::to_string(t.frequency) +
                        " Hz aliases: sample_rate must exceed twice the tone frequency");
    }
  }
  const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
  if (n < 2) throw DomainError("synthesized record needs at least 2 samples");
  TimeSeries s;
  s.sample_rate = sample_rate;
  s.samples.resize(n);
  CounterRng rng(stream);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double v = drift_nm_per_s * t;
    for (const auto& tone : tones) {
      v += tone.amplitude * std::sin(2.0 * std::numbers::pi * tone.frequency * t + tone.phase);
    }
    if (noise_rms > 0.0) v += noise_rms * rng.normal();
    s.samples[i] = v;
  }
  return s;
}

TimeSeries series_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DomainError("time-series CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time_s,displacement_nm") {
    throw DomainError("time-series CSV header must be 'time_s,displacement_nm', got '" + line + "'");
  }
  std::vector<double> times;
  std::vector<double> values;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    double t = 0.0, v = 0.0;
    char comma = 0;
    if (!(row >> t >> comma >> v) || comma != ',' || !std::isfinite(t) || !std::isfinite(v)) {
      throw DomainError("time-series CSV line " + std::to_string(line_no) +
                        ": expected '<time_s>,<displacement_nm>'");
    }
    times.push_back(t);
    values.push_back(v);
  }
  if (times.size() < 2) throw DomainError("time-series CSV needs at least 2 rows");
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(dt > 0.0)) throw DomainError("time-series CSV times must increase");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::fabs((times[k] - times[k - 1]) - dt) > 1e-6 * dt) {
      throw DomainError("time-series CSV row " + std::to_string(k + 2) +
                        ": sample spacing deviates from uniform by more than 1e-6 relative");
    }
  }
  return TimeSeries{1.0 / dt, std::move(values)};
}

std::string series_to_csv(const TimeSeries& series) {
  std::ostringstream out;
  out.precision(17);
  out << "time_s,displacement_nm\n";
  for (std::size_t i = 0; i < series.samples.size(); ++i) {
    out << static_cast<double>(i) / series.sample_rate << ',' << series.samples[i] << '\n';
  }
  return out.str();
}

std::string spectrum_to_csv(const Spectrum& spectrum) {
  std::ostringstream out;
  out.precision(17);
  out << "frequency_hz,amplitude_nm\n";
  for (const auto& b : spectrum.bins) out << b.frequency << ',' << b.amplitude << '\n';
  return out.str();
}

std::string peaks_to_csv(std::span<const Peak> peaks) {
  std::ostringstream out;
  out.precision(17);
  out << "frequency_hz,amplitude_nm,harmonic_index\n";
  for (const auto& p : peaks) {
    out << p.frequency << ',' << p.amplitude << ',';
    if (p.harmonic_index) out << *p.harmonic_index;
    out << '\n';
  }
  return out.str();
}

}  // namespace trapsim
