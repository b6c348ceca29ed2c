#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "vibration.hpp"

using namespace trapsim;

namespace {

constexpr double kPi = std::numbers::pi;

TimeSeries tone_series(double f, double amp, double duration, double fs, double offset = 0.0) {
  TimeSeries s{fs, {}};
  const auto n = static_cast<std::size_t>(std::llround(duration * fs));
  for (std::size_t i = 0; i < n; ++i) {
    s.samples.push_back(offset + amp * std::sin(2.0 * kPi * f * static_cast<double>(i) / fs));
  }
  return s;
}

double mean_square(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s / static_cast<double>(v.size());
}

// Steady-state amplitude over the middle half, away from edge effects.
double middle_amplitude(const TimeSeries& s) {
  const std::size_t n = s.samples.size();
  std::vector<double> mid(s.samples.begin() + static_cast<long>(n / 4),
                          s.samples.begin() + static_cast<long>(3 * n / 4));
  return std::sqrt(2.0 * mean_square(mid));
}

}  // namespace

TEST_SUITE("vibration") {

TEST_CASE("high-pass removes DC and keeps the passband") {
  const auto flat = tone_series(1.0, 0.0, 20.0, 1000.0, 42.0);
  const auto out = high_pass(flat, 0.1);
  for (double v : out.samples) CHECK(std::fabs(v) < 1e-9);

  const auto pass = high_pass(tone_series(1.2, 5.0, 20.0, 1000.0, 3.0), 0.1);
  CHECK(middle_amplitude(pass) == doctest::Approx(5.0).epsilon(0.01));
  // Edge transients die out within a few cutoff periods.
  double worst_edge = 0.0, worst_inner = 0.0;
  const auto ref = tone_series(1.2, 5.0, 20.0, 1000.0);
  for (std::size_t i = 0; i < ref.samples.size(); ++i) {
    const double err = std::fabs(pass.samples[i] - ref.samples[i]);
    const bool inner = i >= 5000 && i + 5000 < ref.samples.size();
    (inner ? worst_inner : worst_edge) = std::max(inner ? worst_inner : worst_edge, err);
  }
  CHECK(worst_inner < 0.01 * 5.0);
  CHECK(worst_edge < 0.1 * 5.0);

  const auto stop = high_pass(tone_series(0.01, 5.0, 400.0, 50.0), 0.1);
  CHECK(middle_amplitude(stop) < 0.5 * 5.0);

  // A 30 mHz cutoff, as used on the displacement records.
  CHECK(rms(high_pass(tone_series(1.2, 5.0, 20.0, 1000.0, 2.0), 0.03)) ==
        doctest::Approx(5.0 / std::sqrt(2.0)).epsilon(0.01));
  CHECK(middle_amplitude(high_pass(tone_series(0.01, 5.0, 1000.0, 20.0), 0.03)) < 0.5 * 5.0);
  CHECK(rms(high_pass(flat, 0.03)) < 1e-3 * 42.0);
}

TEST_CASE("high-pass matches the Butterworth magnitude squared") {
  // Forward-backward gives |H|^2 with |H|^2 = 1 / (1 + (fc/f)^4) after prewarp.
  const double fs = 200.0, fc = 1.0;
  for (double f : {0.5, 1.0, 2.0, 5.0}) {
    const auto out = high_pass(tone_series(f, 1.0, 200.0, fs), fc);
    const double wf = std::tan(kPi * f / fs), wc = std::tan(kPi * fc / fs);
    const double h2 = 1.0 / (1.0 + std::pow(wc / wf, 4));
    CHECK(middle_amplitude(out) == doctest::Approx(h2).epsilon(0.01));
  }
}

TEST_CASE("high-pass removes a linear drift and never adds energy") {
  TimeSeries ramp{1000.0, {}};
  for (int i = 0; i < 20000; ++i) ramp.samples.push_back(1.0 * i / 1000.0);
  const auto out = high_pass(ramp, 0.03);
  CHECK(rms(out) < 0.1 * rms(ramp));

  CounterRng rng(derive_stream(9, 0));
  for (int trial = 0; trial < 20; ++trial) {
    TimeSeries s{500.0, {}};
    for (int i = 0; i < 4000; ++i) s.samples.push_back(rng.normal());
    for (int i = 0; i < 4000; ++i) s.samples[i] += 3.0 * std::sin(0.002 * i) + 0.001 * i;
    const auto f = high_pass(s, 0.01 + 10.0 * rng.uniform());
    CHECK(rms(f) <= rms(s) + 1e-9);
  }
}

TEST_CASE("high-pass on short records and bad cutoffs") {
  TimeSeries tiny{1000.0, {1.0, 2.0, 3.0}};
  const auto out = high_pass(tiny, 0.1);
  CHECK(out.samples.size() == 3);
  for (double v : out.samples) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(high_pass(tiny, 0.0), DomainError);
  CHECK_THROWS_AS(high_pass(tiny, 500.0), DomainError);
  CHECK_THROWS_AS(high_pass(TimeSeries{1000.0, {}}, 1.0), DomainError);
  CHECK(describe_high_pass(0.1).cutoff_hz == 0.1);
}

TEST_CASE("rms") {
  CHECK(rms(tone_series(1.0, 10.76, 10.0, 1000.0, 7.0)) == doctest::Approx(10.76 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(10.76 / std::sqrt(2.0) == doctest::Approx(7.61).epsilon(1e-3));
  CHECK(rms(TimeSeries{10.0, {3.0, 3.0, 3.0}}) == 0.0);
}

TEST_CASE("amplitude spectrum") {
  const auto s = tone_series(5.0, 5.0, 20.0, 1000.0, 1.5);
  const auto spec = amplitude_spectrum(s);
  CHECK(spec.rbw == doctest::Approx(0.05));
  REQUIRE(spec.bins.size() == 10001);
  CHECK(spec.bins[100].frequency == doctest::Approx(5.0));
  CHECK(spec.bins[100].amplitude == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(spec.bins[0].amplitude == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(spec.bins[101].amplitude < 1e-6);
  CHECK(spec.bins.back().frequency == doctest::Approx(500.0));
}

TEST_CASE("spectrum agrees with a naive DFT and with Parseval") {
  CounterRng rng(derive_stream(10, 0));
  for (std::size_t n : {2u, 7u, 16u, 33u, 128u}) {
    TimeSeries s{100.0, {}};
    for (std::size_t i = 0; i < n; ++i) s.samples.push_back(rng.normal());
    const auto spec = amplitude_spectrum(s);
    REQUIRE(spec.bins.size() == n / 2 + 1);
    double parseval = 0.0;
    for (std::size_t k = 0; k <= n / 2; ++k) {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t j = 0; j < n; ++j) {
        acc += s.samples[j] * std::polar(1.0, -2.0 * kPi * static_cast<double>(j * k) / static_cast<double>(n));
      }
      const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
      const double expected = std::abs(acc) / static_cast<double>(n) * (edge ? 1.0 : 2.0);
      CHECK(spec.bins[k].amplitude == doctest::Approx(expected).epsilon(1e-10));
      const double a = spec.bins[k].amplitude;
      parseval += edge ? a * a : a * a / 2.0;
    }
    CHECK(parseval == doctest::Approx(mean_square(s.samples)).epsilon(1e-10));
  }
}

TEST_CASE("harmonic labelling") {
  const std::vector<Tone> tones{{1.2, 10.0, 0.0}, {2.4, 4.0, 0.3}, {3.6, 2.0, 1.0}, {5.03, 3.0, 0.0}};
  const auto s = synthesize(tones, 0.0, 0.0, 100.0, 1000.0, derive_stream(1, 0));
  const auto peaks = find_peaks(amplitude_spectrum(s), 1.0, 1.2);
  REQUIRE(peaks.size() == 4);
  CHECK(peaks[0].harmonic_index == 1u);
  CHECK(peaks[1].harmonic_index == 2u);
  CHECK(peaks[2].harmonic_index == 3u);
  CHECK(peaks[0].amplitude == doctest::Approx(10.0).epsilon(1e-3));
  CHECK(peaks[3].frequency == doctest::Approx(5.03).epsilon(1e-3));
  CHECK_FALSE(peaks[3].harmonic_index.has_value());

  const auto unlabeled = find_peaks(amplitude_spectrum(s), 1.0);
  for (const auto& p : unlabeled) CHECK_FALSE(p.harmonic_index.has_value());
  CHECK(find_peaks(amplitude_spectrum(s), 100.0).empty());
}

TEST_CASE("synthesis") {
  const std::vector<Tone> bad{{600.0, 1.0, 0.0}};
  CHECK_THROWS_AS(synthesize(bad, 0.0, 0.0, 1.0, 1000.0, derive_stream(1, 0)), DomainError);
  const std::vector<Tone> nyquist{{500.0, 1.0, 0.0}};
  CHECK_THROWS_AS(synthesize(nyquist, 0.0, 0.0, 1.0, 1000.0, derive_stream(1, 0)), DomainError);

  const auto noise = synthesize({}, 0.0, 2.0, 100.0, 1000.0, derive_stream(1, 1));
  CHECK(rms(noise) == doctest::Approx(2.0).epsilon(0.02));
  const auto again = synthesize({}, 0.0, 2.0, 100.0, 1000.0, derive_stream(1, 1));
  CHECK(noise.samples == again.samples);

  const auto drift = synthesize({}, 0.5, 0.0, 2.0, 10.0, derive_stream(1, 1));
  CHECK(drift.samples[10] == doctest::Approx(0.5));
}

TEST_CASE("vibration CSV") {
  const auto s = tone_series(3.0, 2.0, 1.0, 100.0);
  const auto back = series_from_csv(series_to_csv(s));
  CHECK(back.sample_rate == doctest::Approx(100.0));
  REQUIRE(back.samples.size() == s.samples.size());
  for (std::size_t i = 0; i < s.samples.size(); ++i) CHECK(back.samples[i] == doctest::Approx(s.samples[i]).epsilon(1e-12));

  CHECK_THROWS_AS(series_from_csv("time_s,displacement_nm\n0,1\n0.01,2\n0.03,3\n"), DomainError);
  CHECK_THROWS_AS(series_from_csv("time,x\n0,1\n"), DomainError);
  CHECK_THROWS_AS(series_from_csv("time_s,displacement_nm\n0,1\n"), DomainError);

  const std::vector<Peak> peaks{{1.2, 3.0, 1u}, {5.03, 1.0, std::nullopt}};
  const auto csv = peaks_to_csv(peaks);
  CHECK(csv.rfind("frequency_hz,amplitude_nm,harmonic_index\n", 0) == 0);
  CHECK(csv.substr(csv.size() - 4) == ",1,\n");
  CHECK(spectrum_to_csv(Spectrum{0.5, {{0.0, 1.0}}}).rfind("frequency_hz,amplitude_nm\n", 0) == 0);
}

}  // TEST_SUITE
