#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "random.hpp"

namespace trapsim {

// Uniformly sampled displacement record, nm.
struct TimeSeries {
  double sample_rate = 1000.0;  // Hz
  std::vector<double> samples;

  void validate() const;
  [[nodiscard]] double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct SpectrumBin {
  double frequency = 0.0;  // Hz
  double amplitude = 0.0;  // nm
};

struct Spectrum {
  double rbw = 0.0;  // Hz
  std::vector<SpectrumBin> bins;
};

struct Peak {
  double frequency = 0.0;
  double amplitude = 0.0;
  std::optional<unsigned> harmonic_index;
};

struct Tone {
  double frequency = 0.0;  // Hz
  double amplitude = 0.0;  // nm
  double phase = 0.0;      // rad
};

// Realization of the high-pass stage, reported alongside analysis outputs.
struct FilterDescription {
  std::string topology = "butterworth biquad (bilinear transform), forward-backward";
  int order = 2;              // per pass
  int effective_order = 4;    // magnitude response after both passes
  std::string detrend = "least-squares line removed before filtering";
  std::string boundary = "zero outside the record; forward pass runs until the response decays";
  double cutoff_hz = 0.0;
};

// Zero-phase second-order Butterworth high-pass applied forward and backward
// to the linearly detrended record. The record is treated as zero outside its
// span, so rms(high_pass(x)) <= rms(x) holds for every input. Throws
// DomainError unless 0 < cutoff < sample_rate / 2.
TimeSeries high_pass(const TimeSeries& series, double cutoff_hz);
FilterDescription describe_high_pass(double cutoff_hz);

// Root mean square about the mean.
double rms(const TimeSeries& series);

// Rectangular-window DFT of the whole record; rbw = 1 / duration and bin k sits
// at k * rbw. Single-sided amplitudes: a bin-centred sinusoid of amplitude A
// reads A in its bin (DC and Nyquist bins are not doubled).
Spectrum amplitude_spectrum(const TimeSeries& series);

// Local maxima with amplitude >= min_amplitude. With a fundamental, a peak
// within one rbw of k * fundamental (k >= 1) gets harmonic_index k.
std::vector<Peak> find_peaks(const Spectrum& spectrum, double min_amplitude,
                             std::optional<double> fundamental = std::nullopt);

// Sum of tones + drift * t + white Gaussian noise of rms noise_rms. Throws
// DomainError when a tone sits at or above Nyquist.
TimeSeries synthesize(std::span<const Tone> tones, double drift_nm_per_s, double noise_rms,
                      double duration, double sample_rate, RandomStream stream);

// Two-column CSV "time_s,displacement_nm". Reading checks that the spacing is
// uniform to 1e-6 relative.
TimeSeries series_from_csv(const std::string& text);
std::string series_to_csv(const TimeSeries& series);
std::string spectrum_to_csv(const Spectrum& spectrum);
std::string peaks_to_csv(std::span<const Peak> peaks);

}  // namespace trapsim
