#pragma once

#include <cstdint>
#include <span>

namespace trapsim {

struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;
};

// Poisson probabilities are evaluated in log space so that tails far below
// double-precision underflow of naive factorials stay accurate.
double poisson_log_pmf(std::uint64_t n, double mean);
double poisson_pmf(std::uint64_t n, double mean);
// Sum of poisson_pmf over 0..n by direct summation; clamped to [0, 1].
double poisson_cdf(std::uint64_t n, double mean);

// P(s, x) = gamma(s, x) / Gamma(s), the regularized lower incomplete gamma
// function. Series expansion for x < s + 1, Lentz continued fraction for the
// complement otherwise.
double reg_lower_incomplete_gamma(double s, double x);
// Q(s, x) = 1 - P(s, x), evaluated without cancellation.
double reg_upper_incomplete_gamma(double s, double x);

// Proportion k/N with the binomial standard error sqrt(p(1-p)/N).
EstimateWithError binomial_estimate(std::uint64_t successes, std::uint64_t trials);

struct DecayPoint {
  double t = 0.0;         // s
  double contrast = 0.0;
  double contrast_err = 0.0;
};

struct GaussianDecayFit {
  EstimateWithError tau_d;  // s
  double residual_norm = 0.0;  // sqrt of the weighted sum of squared residuals
  double reduced_chi2 = 0.0;
  int iterations = 0;
};

// Contrast errors below this floor are raised to it before weighting.
inline constexpr double kContrastErrorFloor = 0.01;

// Fits whose reduced chi-square exceeds this are rejected as not describing a
// Gaussian decay (a typical residual of 20 error floors).
inline constexpr double kMaxReducedChi2 = 400.0;

// Weighted least-squares fit of C(t) = exp(-t^2 / (2 tau_d^2)).
//
// Weights are 1/max(c_err, kContrastErrorFloor)^2. The start value is the first
// delay where the contrast drops below exp(-1/2), or the largest delay when it
// never does. A bracketing golden-section search on log(tau_d) is followed by
// Gauss-Newton polishing. The reported standard error is the curvature error
// scaled by the reduced chi-square.
//
// Throws DomainError for fewer than 3 points, no point with t > 0, or contrasts
// outside [-0.05, 1.05]; UnboundedFitError when every contrast equals 1 within
// its error; FitError when the optimum runs into the search bracket, the
// iteration does not converge, or the reduced chi-square exceeds
// kMaxReducedChi2.
GaussianDecayFit fit_gaussian_decay(std::span<const DecayPoint> points);

}  // namespace trapsim
