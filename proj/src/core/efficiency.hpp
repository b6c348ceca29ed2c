#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "numerics.hpp"

namespace trapsim {

struct EfficiencyStage {
  std::string name;
  double transmission = 1.0;  // (0, 1]
};

struct EfficiencyBudget {
  double na = 0.6;
  std::vector<EfficiencyStage> stages;

  void validate() const;
};

// Fraction of isotropic emission inside a cone of half-angle asin(na):
// (1 - sqrt(1 - na^2)) / 2.
double na_to_solid_angle_fraction(double na);

// Solid-angle fraction times the product of stage transmissions.
double chain_efficiency(const EfficiencyBudget& budget);

struct MeasurementComparison {
  double predicted = 0.0;
  EstimateWithError measured;
  // |predicted - measured| / std_error; +inf when the measurement has zero
  // standard error and disagrees, 0 when it agrees exactly.
  double sigma_distance = 0.0;
  bool degenerate_error = false;
};

MeasurementComparison compare_with_measurement(double predicted, std::uint64_t detections,
                                               std::uint64_t trials);

}  // namespace trapsim
