#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"

namespace trapsim {

namespace {

void require_mean(double mean) {
  if (!std::isfinite(mean) || mean < 0.0) {
    throw DomainError("Poisson mean must be finite and nonnegative, got " + std::to_string(mean));
  }
}

void require_gamma_args(double s, double x) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw DomainError("incomplete gamma shape must be positive and finite, got " +
                      std::to_string(s));
  }
  if (!(x >= 0.0) || std::isnan(x)) {
    throw DomainError("incomplete gamma argument must be nonnegative, got " + std::to_string(x));
  }
}

constexpr int kMaxGammaIterations = 100000;
constexpr double kGammaEps = 1e-16;

// Series for P(s, x), valid and fast for x < s + 1.
double gamma_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  double denom = s;
  for (int i = 0; i < kMaxGammaIterations; ++i) {
    denom += 1.0;
    term *= x / denom;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kGammaEps) break;
  }
  return std::exp(-x + s * std::log(x) - std::lgamma(s)) * sum;
}

// Continued fraction for Q(s, x), x >= s + 1 (modified Lentz).
double gamma_continued_fraction(double s, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kGammaEps;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxGammaIterations; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kGammaEps) break;
  }
  return std::exp(-x + s * std::log(x) - std::lgamma(s)) * h;
}

}  // namespace

double poisson_log_pmf(std::uint64_t n, double mean) {
  require_mean(mean);
  if (mean == 0.0) {
    return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  const double k = static_cast<double>(n);
  return -mean + k * std::log(mean) - std::lgamma(k + 1.0);
}

double poisson_pmf(std::uint64_t n, double mean) { return std::exp(poisson_log_pmf(n, mean)); }

double poisson_cdf(std::uint64_t n, double mean) {
  require_mean(mean);
  double sum = 0.0;
  for (std::uint64_t k = 0; k <= n; ++k) {
    const double term = poisson_pmf(k, mean);
    sum += term;
    // Past the mode the remaining terms cannot change the sum.
    if (static_cast<double>(k) > mean && term < sum * 1e-18) break;
  }
  return std::min(sum, 1.0);
}

double reg_lower_incomplete_gamma(double s, double x) {
  require_gamma_args(s, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < s + 1.0) return std::clamp(gamma_series(s, x), 0.0, 1.0);
  return std::clamp(1.0 - gamma_continued_fraction(s, x), 0.0, 1.0);
}

double reg_upper_incomplete_gamma(double s, double x) {
  require_gamma_args(s, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < s + 1.0) return std::clamp(1.0 - gamma_series(s, x), 0.0, 1.0);
  return std::clamp(gamma_continued_fraction(s, x), 0.0, 1.0);
}

EstimateWithError binomial_estimate(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) throw DomainError("binomial estimate needs at least one trial");
  if (successes > trials) {
    throw DomainError("binomial estimate: successes (" + std::to_string(successes) +
                      ") exceed trials (" + std::to_string(trials) + ")");
  }
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

namespace {

struct WeightedPoint {
  double t2;  // t squared
  double c;
  double w;
};

double decay_model(double t2, double tau) { return std::exp(-t2 / (2.0 * tau * tau)); }

double chi_square(const std::vector<WeightedPoint>& pts, double tau) {
  double s = 0.0;
  for (const auto& p : pts) {
    const double r = p.c - decay_model(p.t2, tau);
    s += p.w * r * r;
  }
  return s;
}

}  // namespace

GaussianDecayFit fit_gaussian_decay(std::span<const DecayPoint> points) {
  if (points.size() < 3) throw DomainError("Gaussian decay fit needs at least 3 points");
  std::vector<WeightedPoint> pts;
  pts.reserve(points.size());
  double t_max = 0.0;
  bool all_unity = true;
  for (const auto& p : points) {
    if (!std::isfinite(p.t) || p.t < 0.0) throw DomainError("delay times must be finite and >= 0");
    if (!(p.contrast >= -0.05 && p.contrast <= 1.05)) {
      throw DomainError("contrast " + std::to_string(p.contrast) + " outside [-0.05, 1.05]");
    }
    if (!(p.contrast_err >= 0.0)) throw DomainError("contrast errors must be >= 0");
    const double sigma = std::max(p.contrast_err, kContrastErrorFloor);
    pts.push_back({p.t * p.t, p.contrast, 1.0 / (sigma * sigma)});
    t_max = std::max(t_max, p.t);
    if (std::fabs(p.contrast - 1.0) > sigma) all_unity = false;
  }
  if (t_max <= 0.0) throw DomainError("Gaussian decay fit needs a point with t > 0");
  if (all_unity) {
    throw UnboundedFitError("all contrasts equal 1 within errors; coherence time is unbounded");
  }

  double tau0 = t_max;
  for (const auto& p : points) {
    if (p.t > 0.0 && p.contrast < std::exp(-0.5)) {
      tau0 = p.t;
      break;
    }
  }

  // Coarse log-spaced scan over six decades around the start value brackets
  // the global minimum before golden-section refinement.
  constexpr int kGrid = 241;
  constexpr double kSpanDecades = 3.0;
  const double log_lo = std::log(tau0) - kSpanDecades * std::log(10.0);
  const double log_hi = std::log(tau0) + kSpanDecades * std::log(10.0);
  const double step = (log_hi - log_lo) / (kGrid - 1);
  int best = 0;
  double best_chi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double chi = chi_square(pts, std::exp(log_lo + i * step));
    if (chi < best_chi) {
      best_chi = chi;
      best = i;
    }
  }
  if (best == kGrid - 1) {
    throw UnboundedFitError("fit optimum runs to the upper tau bound; no decay resolved");
  }
  if (best == 0) throw FitError("fit optimum runs to the lower tau bound");

  double a = log_lo + (best - 1) * step;
  double b = log_lo + (best + 1) * step;
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - golden * (b - a);
  double x2 = a + golden * (b - a);
  double f1 = chi_square(pts, std::exp(x1));
  double f2 = chi_square(pts, std::exp(x2));
  int iterations = 0;
  while (b - a > 1e-12 && iterations < 200) {
    ++iterations;
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - golden * (b - a);
      f1 = chi_square(pts, std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + golden * (b - a);
      f2 = chi_square(pts, std::exp(x2));
    }
  }
  double tau = std::exp(0.5 * (a + b));

  // Gauss-Newton polish; accepted only while it lowers chi-square.
  for (int it = 0; it < 50; ++it) {
    ++iterations;
    double jtj = 0.0;
    double jtr = 0.0;
    for (const auto& p : pts) {
      const double m = decay_model(p.t2, tau);
      const double j = m * p.t2 / (tau * tau * tau);
      jtj += p.w * j * j;
      jtr += p.w * j * (p.c - m);
    }
    if (!(jtj > 0.0)) break;
    const double candidate = tau + jtr / jtj;
    if (!(candidate > 0.0) || chi_square(pts, candidate) > chi_square(pts, tau)) break;
    const bool converged = std::fabs(candidate - tau) <= 1e-14 * tau;
    tau = candidate;
    if (converged) break;
  }

  double jtj = 0.0;
  for (const auto& p : pts) {
    const double m = decay_model(p.t2, tau);
    const double j = m * p.t2 / (tau * tau * tau);
    jtj += p.w * j * j;
  }
  if (!(jtj > 0.0) || !std::isfinite(tau)) throw FitError("Gaussian decay fit did not converge");

  const double chi = chi_square(pts, tau);
  const double dof = static_cast<double>(pts.size() - 1);
  GaussianDecayFit fit;
  fit.reduced_chi2 = chi / dof;
  if (fit.reduced_chi2 > kMaxReducedChi2) {
    throw FitError("data inconsistent with a Gaussian decay (reduced chi-square " +
                   std::to_string(fit.reduced_chi2) + ")");
  }
  fit.tau_d = {tau, std::sqrt(fit.reduced_chi2 / jtj)};
  fit.residual_norm = std::sqrt(chi);
  fit.iterations = iterations;
  return fit;
}

}  // namespace trapsim
