#include "efficiency.hpp"

#include <cmath>
#include <limits>

#include "errors.hpp"

namespace trapsim {

void EfficiencyBudget::validate() const {
  if (!(na > 0.0 && na < 1.0)) {
    throw DomainError("numerical aperture must lie in (0, 1), got " + std::to_string(na));
  }
  for (const auto& s : stages) {
    if (!(s.transmission > 0.0 && s.transmission <= 1.0)) {
      throw DomainError("stage '" + s.name + "' transmission must lie in (0, 1], got " +
                        std::to_string(s.transmission));
    }
  }
}

double na_to_solid_angle_fraction(double na) {
  if (!(na > 0.0 && na < 1.0)) {
    throw DomainError("numerical aperture must lie in (0, 1), got " + std::to_string(na));
  }
  // 1 - sqrt(1 - na^2) == na^2 / (1 + sqrt(1 - na^2)); the second form keeps
  // precision for small apertures.
  return 0.5 * na * na / (1.0 + std::sqrt(1.0 - na * na));
}

double chain_efficiency(const EfficiencyBudget& budget) {
  budget.validate();
  double eff = na_to_solid_angle_fraction(budget.na);
  for (const auto& s : budget.stages) eff *= s.transmission;
  return eff;
}

MeasurementComparison compare_with_measurement(double predicted, std::uint64_t detections,
                                               std::uint64_t trials) {
  if (!(predicted >= 0.0 && predicted <= 1.0)) throw DomainError("predicted must lie in [0, 1]");
  MeasurementComparison c;
  c.predicted = predicted;
  c.measured = binomial_estimate(detections, trials);
  const double diff = std::fabs(predicted - c.measured.value);
  if (c.measured.std_error > 0.0) {
    c.sigma_distance = diff / c.measured.std_error;
  } else {
    c.degenerate_error = true;
    c.sigma_distance = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return c;
}

}  // namespace trapsim
