#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "numerics.hpp"
#include "random.hpp"

namespace trapsim {

// Photon-count model of a single ion read out by state-dependent fluorescence.
struct DetectionParams {
  double n_bar_bright = 25.37;  // mean counts per window, bright ion
  double n_bar_dark = 0.18;     // mean counts per window, shelved ion (background)
  double t_det = 50e-6;         // detection window, s
  double t_delay = 20e-6;       // effective delay between shelving and detection, s
  double tau = 1.0;             // metastable lifetime, s

  // Throws DomainError unless n_bar_bright > n_bar_dark >= 0, t_det > 0,
  // t_delay >= 0 and tau > 0.
  void validate() const;
};

// Mixture weights of the dark-state count distribution. They sum to one.
struct DecayWeights {
  double stays_shelved;     // exp(-(t_det + t_delay) / tau)
  double decays_before;     // 1 - exp(-t_delay / tau)
  double decays_in_window;  // exp(-t_delay / tau) (1 - exp(-t_det / tau))
};

DecayWeights decay_weights(const DetectionParams& params);

double bright_pmf(const DetectionParams& params, std::uint64_t n);

// Dark-state count distribution: shelved background, plus fluorescence from
// ions that decayed before the window, plus ions decaying inside the window
// whose counts interpolate linearly between the dark and bright means. The
// in-window term is (P(n+1, n_B) - P(n+1, n_D)) / (n_B - n_D) with P the
// regularized lower incomplete gamma function.
double dark_pmf(const DetectionParams& params, std::uint64_t n);

// Classification errors at a count threshold; counts >= threshold read bright.
// Analytic reports carry zero standard errors.
struct ThresholdReport {
  std::uint64_t threshold = 0;
  EstimateWithError eps_bright;  // bright read as dark (false negative)
  EstimateWithError eps_dark;    // dark read as bright (false positive)
  EstimateWithError eps_avg;     // (eps_bright + eps_dark) / 2
  double fidelity = 1.0;         // 1 - eps_avg
};

ThresholdReport threshold_errors(const DetectionParams& params, std::uint64_t threshold);

// Reports for thresholds 1..max_threshold.
std::vector<ThresholdReport> threshold_scan(const DetectionParams& params,
                                            std::uint64_t max_threshold);

// Threshold in [1, max_threshold] minimizing eps_avg, smallest on ties.
ThresholdReport optimal_threshold(const DetectionParams& params, std::uint64_t max_threshold);

enum class IonState { bright, dark };

// Photon-number histogram with a dense support [0, max_count]. Samples above
// max_count are clamped into the last bin.
class CountHistogram {
 public:
  CountHistogram() = default;
  explicit CountHistogram(std::uint64_t max_count);
  CountHistogram(std::vector<std::uint64_t> bins);

  void add(std::uint64_t photon_count, std::uint64_t trials = 1);
  void merge(const CountHistogram& other);

  [[nodiscard]] std::uint64_t max_count() const { return bins_.empty() ? 0 : bins_.size() - 1; }
  [[nodiscard]] std::uint64_t total_trials() const { return total_; }
  [[nodiscard]] std::uint64_t at(std::uint64_t photon_count) const;
  [[nodiscard]] const std::vector<std::uint64_t>& bins() const { return bins_; }
  // Trials with photon_count >= threshold.
  [[nodiscard]] std::uint64_t at_or_above(std::uint64_t threshold) const;
  [[nodiscard]] double mean() const;

  friend bool operator==(const CountHistogram&, const CountHistogram&) = default;

 private:
  std::vector<std::uint64_t> bins_;
  std::uint64_t total_ = 0;
};

// Histogram support cap n_bar_B + 20 sqrt(n_bar_B) + 50.
std::uint64_t histogram_support(const DetectionParams& params);

// Monte Carlo oracle for the count model. Bright trials draw Poisson(n_B).
// Dark trials draw a decay time from Exponential(tau) measured from the start
// of the delay: before the window the ion fluoresces for the whole window,
// after it the ion stays dark, and in between the count mean mixes n_D and n_B
// by the fraction of the window spent dark. Trial i uses stream.child(i).
CountHistogram simulate_detection(const DetectionParams& params, IonState state,
                                  std::uint64_t trials, RandomStream stream,
                                  unsigned threads = 1);

// Empirical classification errors with binomial standard errors.
ThresholdReport histogram_errors(const CountHistogram& bright, const CountHistogram& dark,
                                 std::uint64_t threshold);

// Bernoulli(p_detect) per trial; detected fraction with binomial error.
EstimateWithError single_photon_experiment(double p_detect, std::uint64_t trials,
                                           RandomStream stream, unsigned threads = 1);

// CSV with header "photon_count,trials", one row per bin.
std::string histogram_to_csv(const CountHistogram& histogram);
CountHistogram histogram_from_csv(const std::string& text);

}  // namespace trapsim
