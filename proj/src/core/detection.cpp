#include "detection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "parallel.hpp"

namespace trapsim {

void DetectionParams::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(n_bar_bright) || !finite(n_bar_dark) || !finite(t_det) || !finite(t_delay) ||
      !finite(tau)) {
    throw DomainError("detection parameters must be finite");
  }
  if (!(n_bar_dark >= 0.0)) throw DomainError("n_bar_dark must be >= 0");
  if (!(n_bar_bright > n_bar_dark)) throw DomainError("n_bar_bright must exceed n_bar_dark");
  if (!(t_det > 0.0)) throw DomainError("t_det must be > 0");
  if (!(t_delay >= 0.0)) throw DomainError("t_delay must be >= 0");
  if (!(tau > 0.0)) throw DomainError("tau must be > 0");
}

DecayWeights decay_weights(const DetectionParams& p) {
  p.validate();
  const double survive_delay = std::exp(-p.t_delay / p.tau);
  // expm1 keeps 1 - exp(-t/tau) accurate when t << tau.
  const double decay_delay = -std::expm1(-p.t_delay / p.tau);
  const double decay_window = -std::expm1(-p.t_det / p.tau);
  return {std::exp(-(p.t_det + p.t_delay) / p.tau), decay_delay, survive_delay * decay_window};
}

double bright_pmf(const DetectionParams& params, std::uint64_t n) {
  params.validate();
  return poisson_pmf(n, params.n_bar_bright);
}

double dark_pmf(const DetectionParams& params, std::uint64_t n) {
  const DecayWeights w = decay_weights(params);
  const double shape = static_cast<double>(n) + 1.0;
  // Difference of lower functions, or equivalently of upper functions; pick
  // the pair that avoids subtracting two values close to one.
  double spread;
  if (shape < params.n_bar_dark + 1.0) {
    spread = reg_lower_incomplete_gamma(shape, params.n_bar_bright) -
             reg_lower_incomplete_gamma(shape, params.n_bar_dark);
  } else {
    spread = reg_upper_incomplete_gamma(shape, params.n_bar_dark) -
             reg_upper_incomplete_gamma(shape, params.n_bar_bright);
  }
  const double in_window = std::max(spread, 0.0) / (params.n_bar_bright - params.n_bar_dark);
  return w.stays_shelved * poisson_pmf(n, params.n_bar_dark) +
         w.decays_before * poisson_pmf(n, params.n_bar_bright) + w.decays_in_window * in_window;
}

ThresholdReport threshold_errors(const DetectionParams& params, std::uint64_t threshold) {
  params.validate();
  double bright_below = 0.0;
  double dark_below = 0.0;
  for (std::uint64_t n = 0; n < threshold; ++n) {
    bright_below += bright_pmf(params, n);
    dark_below += dark_pmf(params, n);
  }
  ThresholdReport r;
  r.threshold = threshold;
  r.eps_bright = {std::clamp(bright_below, 0.0, 1.0), 0.0};
  r.eps_dark = {std::clamp(1.0 - dark_below, 0.0, 1.0), 0.0};
  r.eps_avg = {(r.eps_bright.value + r.eps_dark.value) / 2.0, 0.0};
  r.fidelity = 1.0 - r.eps_avg.value;
  return r;
}

std::vector<ThresholdReport> threshold_scan(const DetectionParams& params,
                                            std::uint64_t max_threshold) {
  if (max_threshold < 1) throw DomainError("max_threshold must be >= 1");
  params.validate();
  std::vector<ThresholdReport> out;
  out.reserve(max_threshold);
  double bright_below = 0.0;
  double dark_below = 0.0;
  for (std::uint64_t t = 1; t <= max_threshold; ++t) {
    bright_below += bright_pmf(params, t - 1);
    dark_below += dark_pmf(params, t - 1);
    ThresholdReport r;
    r.threshold = t;
    r.eps_bright = {std::clamp(bright_below, 0.0, 1.0), 0.0};
    r.eps_dark = {std::clamp(1.0 - dark_below, 0.0, 1.0), 0.0};
    r.eps_avg = {(r.eps_bright.value + r.eps_dark.value) / 2.0, 0.0};
    r.fidelity = 1.0 - r.eps_avg.value;
    out.push_back(r);
  }
  return out;
}

ThresholdReport optimal_threshold(const DetectionParams& params, std::uint64_t max_threshold) {
  const auto scan = threshold_scan(params, max_threshold);
  return *std::min_element(scan.begin(), scan.end(), [](const auto& a, const auto& b) {
    return a.eps_avg.value < b.eps_avg.value;
  });
}

CountHistogram::CountHistogram(std::uint64_t max_count) : bins_(max_count + 1, 0) {}

CountHistogram::CountHistogram(std::vector<std::uint64_t> bins) : bins_(std::move(bins)) {
  if (bins_.empty()) bins_.push_back(0);
  for (auto b : bins_) total_ += b;
}

void CountHistogram::add(std::uint64_t photon_count, std::uint64_t trials) {
  if (bins_.empty()) bins_.push_back(0);
  bins_[std::min<std::uint64_t>(photon_count, bins_.size() - 1)] += trials;
  total_ += trials;
}

void CountHistogram::merge(const CountHistogram& other) {
  if (other.bins_.size() > bins_.size()) bins_.resize(other.bins_.size(), 0);
  for (std::size_t i = 0; i < other.bins_.size(); ++i) bins_[i] += other.bins_[i];
  total_ += other.total_;
}

std::uint64_t CountHistogram::at(std::uint64_t photon_count) const {
  return photon_count < bins_.size() ? bins_[photon_count] : 0;
}

std::uint64_t CountHistogram::at_or_above(std::uint64_t threshold) const {
  std::uint64_t s = 0;
  for (std::uint64_t n = threshold; n < bins_.size(); ++n) s += bins_[n];
  return s;
}

double CountHistogram::mean() const {
  if (total_ == 0) return 0.0;
  double s = 0.0;
  for (std::size_t n = 0; n < bins_.size(); ++n) s += static_cast<double>(n) * bins_[n];
  return s / static_cast<double>(total_);
}

std::uint64_t histogram_support(const DetectionParams& params) {
  params.validate();
  return static_cast<std::uint64_t>(
      std::ceil(params.n_bar_bright + 20.0 * std::sqrt(params.n_bar_bright) + 50.0));
}

CountHistogram simulate_detection(const DetectionParams& params, IonState state,
                                  std::uint64_t trials, RandomStream stream, unsigned threads) {
  params.validate();
  if (trials < 1) throw DomainError("simulate_detection needs at least one trial");
  const std::uint64_t support = histogram_support(params);
  std::vector<CountHistogram> partial(block_count(trials), CountHistogram(support));
  const double window_end = params.t_delay + params.t_det;

  for_each_block(trials, threads, [&](std::size_t block, std::uint64_t first, std::uint64_t last) {
    CountHistogram& h = partial[block];
    for (std::uint64_t i = first; i < last; ++i) {
      CounterRng rng(stream.child(i));
      double mean = params.n_bar_bright;
      if (state == IonState::dark) {
        const double t_decay = rng.exponential(params.tau);
        if (t_decay >= window_end) {
          mean = params.n_bar_dark;
        } else if (t_decay > params.t_delay) {
          const double dark_fraction = (t_decay - params.t_delay) / params.t_det;
          mean = params.n_bar_dark * dark_fraction + params.n_bar_bright * (1.0 - dark_fraction);
        }
      }
      h.add(rng.poisson(mean));
    }
  });

  CountHistogram total(support);
  for (const auto& h : partial) total.merge(h);
  return total;
}

ThresholdReport histogram_errors(const CountHistogram& bright, const CountHistogram& dark,
                                 std::uint64_t threshold) {
  if (bright.total_trials() == 0 || dark.total_trials() == 0) {
    throw DomainError("histogram_errors needs non-empty bright and dark histograms");
  }
  ThresholdReport r;
  r.threshold = threshold;
  r.eps_bright = binomial_estimate(bright.total_trials() - bright.at_or_above(threshold),
                                   bright.total_trials());
  r.eps_dark = binomial_estimate(dark.at_or_above(threshold), dark.total_trials());
  r.eps_avg = {(r.eps_bright.value + r.eps_dark.value) / 2.0,
               0.5 * std::hypot(r.eps_bright.std_error, r.eps_dark.std_error)};
  r.fidelity = 1.0 - r.eps_avg.value;
  return r;
}

EstimateWithError single_photon_experiment(double p_detect, std::uint64_t trials,
                                           RandomStream stream, unsigned threads) {
  if (!(p_detect >= 0.0 && p_detect <= 1.0)) throw DomainError("p_detect must lie in [0, 1]");
  if (trials < 1) throw DomainError("single_photon_experiment needs at least one trial");
  std::vector<std::uint64_t> partial(block_count(trials), 0);
  for_each_block(trials, threads, [&](std::size_t block, std::uint64_t first, std::uint64_t last) {
    std::uint64_t hits = 0;
    for (std::uint64_t i = first; i < last; ++i) {
      CounterRng rng(stream.child(i));
      hits += rng.bernoulli(p_detect) ? 1 : 0;
    }
    partial[block] = hits;
  });
  std::uint64_t detected = 0;
  for (auto h : partial) detected += h;
  return binomial_estimate(detected, trials);
}

std::string histogram_to_csv(const CountHistogram& histogram) {
  std::ostringstream out;
  out << "photon_count,trials\n";
  for (std::size_t n = 0; n < histogram.bins().size(); ++n) {
    out << n << ',' << histogram.bins()[n] << '\n';
  }
  return out.str();
}

CountHistogram histogram_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DomainError("histogram CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "photon_count,trials") {
    throw DomainError("histogram CSV header must be 'photon_count,trials', got '" + line + "'");
  }
  std::vector<std::uint64_t> bins;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    std::uint64_t count = 0;
    std::uint64_t trials = 0;
    try {
      if (comma == std::string::npos || line.find_first_of("-+") != std::string::npos) {
        throw std::invalid_argument("bad row");
      }
      std::size_t used = 0;
      count = std::stoull(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("bad count");
      const std::string tail = line.substr(comma + 1);
      trials = std::stoull(tail, &used);
      if (used != tail.size()) throw std::invalid_argument("bad trials");
    } catch (const std::exception&) {
      throw DomainError("histogram CSV line " + std::to_string(line_no) +
                        ": expected '<photon_count>,<trials>' with nonnegative integers");
    }
    if (count >= bins.size()) bins.resize(count + 1, 0);
    bins[count] += trials;
  }
  return CountHistogram(std::move(bins));
}

}  // namespace trapsim
