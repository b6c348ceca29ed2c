#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "efficiency.hpp"
#include "errors.hpp"

using namespace trapsim;

TEST_SUITE("efficiency") {

TEST_CASE("solid-angle fraction") {
  CHECK(na_to_solid_angle_fraction(0.6) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(na_to_solid_angle_fraction(0.999999) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK_THROWS_AS(na_to_solid_angle_fraction(0.0), DomainError);
  CHECK_THROWS_AS(na_to_solid_angle_fraction(1.0), DomainError);
  // Direct cone integral as the oracle.
  for (double na : {1e-6, 0.1, 0.3, 0.9, 0.999}) {
    const double theta = std::asin(na);
    const int n = 20000;
    double integral = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = (i + 0.5) * theta / n;
      integral += std::sin(t) * theta / n;
    }
    CHECK(na_to_solid_angle_fraction(na) == doctest::Approx(0.5 * integral).epsilon(1e-7));
  }
  CHECK_THROWS_AS(na_to_solid_angle_fraction(1.1), DomainError);
  CHECK_THROWS_AS(na_to_solid_angle_fraction(-0.1), DomainError);
}

TEST_CASE("chain efficiency") {
  EfficiencyBudget b;
  CHECK(chain_efficiency(b) == doctest::Approx(0.1));
  b.stages = {{"lens coating", 0.917}};
  CHECK(chain_efficiency(b) == doctest::Approx(0.0917));
  b.stages.push_back({"remaining optics and detector", 0.2138});
  CHECK(chain_efficiency(b) == doctest::Approx(0.0196).epsilon(1e-3));

  EfficiencyBudget reordered = b;
  std::reverse(reordered.stages.begin(), reordered.stages.end());
  CHECK(chain_efficiency(reordered) == doctest::Approx(chain_efficiency(b)).epsilon(1e-15));

  double previous = chain_efficiency(b);
  for (double t : {0.9, 0.5, 0.1}) {
    b.stages.push_back({"extra", t});
    const double now = chain_efficiency(b);
    CHECK(now < previous);
    previous = now;
  }
  EfficiencyBudget wider{0.7, {{"x", 0.5}}};
  EfficiencyBudget narrower{0.5, {{"x", 0.5}}};
  CHECK(chain_efficiency(wider) > chain_efficiency(narrower));

  CHECK_THROWS_AS(chain_efficiency({0.6, {{"bad", 0.0}}}), DomainError);
  CHECK_THROWS_AS(chain_efficiency({0.6, {{"bad", 1.5}}}), DomainError);
}

TEST_CASE("comparison with a measured detection rate") {
  const auto c = compare_with_measurement(0.0196, 1770, 100000);
  CHECK(c.measured.value == doctest::Approx(0.0177));
  CHECK(c.measured.std_error == doctest::Approx(std::sqrt(0.0177 * 0.9823 / 1e5)));
  CHECK(c.sigma_distance == doctest::Approx(4.55).epsilon(0.01));
  CHECK_FALSE(c.degenerate_error);

  CHECK(compare_with_measurement(0.0177, 1770, 100000).sigma_distance < 1.0);
  CHECK(compare_with_measurement(0.0180, 1770, 100000).sigma_distance < 1.0);

  const auto zero = compare_with_measurement(0.02, 0, 1000);
  CHECK(zero.degenerate_error);
  CHECK(std::isinf(zero.sigma_distance));
  CHECK(compare_with_measurement(0.0, 0, 1000).sigma_distance == 0.0);
  CHECK_THROWS_AS(compare_with_measurement(0.1, 1, 0), DomainError);
  CHECK_THROWS_AS(compare_with_measurement(1.5, 1, 10), DomainError);
}

}  // TEST_SUITE
