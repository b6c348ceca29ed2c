#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trapsim::runner {

struct CheckResult {
  std::string quantity;
  // "within": |measured - expected| <= tolerance
  // "at_most": measured <= tolerance
  // "holds": measured == 1 (a boolean property; not scaled)
  std::string rule;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;  // after scaling
  bool passed = false;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<CheckResult> checks;
  double runtime_s = 0.0;
  std::optional<double> runtime_budget_s;
  bool passed = false;
};

struct AcceptanceOptions {
  std::uint64_t seed = 42;
  double tolerance_scale = 1.0;  // multiplies every numeric tolerance
  unsigned threads = 1;
  // Regenerate the data serially and with 8 threads and compare bytes.
  bool verify_determinism = true;
};

struct AcceptanceReport {
  AcceptanceOptions options;
  std::vector<CriterionResult> criteria;  // ids 1..10, once each
  std::map<std::string, std::string> data_files;

  [[nodiscard]] bool all_passed() const;
};

AcceptanceReport run_acceptance(const AcceptanceOptions& options);

// Data CSVs, acceptance.json (deterministic), timing.json and manifest.json.
std::vector<std::string> write_acceptance(const AcceptanceReport& report,
                                          const std::filesystem::path& out_dir);

// One line per criterion: "[PASS] 1 title: quantity=measured (expected ...)".
std::string format_acceptance(const AcceptanceReport& report);

}  // namespace trapsim::runner
