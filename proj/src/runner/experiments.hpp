#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace trapsim::runner {

struct RunRequest {
  std::string experiment;  // empty: take it from the config
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  std::filesystem::path out_dir;
  unsigned threads = 1;
};

struct RunResult {
  std::string experiment;
  std::uint64_t seed = 0;
  std::vector<std::string> files;  // written, manifest last
  std::string summary;             // one or two human-readable lines
};

inline constexpr std::uint64_t kDefaultSeed = 42;

const std::vector<std::string>& experiment_names();

// Parses and validates the whole config before computing anything, then
// writes the outputs and manifest.json. Throws ConfigError for invalid
// configs, DomainError / FitError from the computation, IoError for files.
RunResult run_experiment(const RunRequest& request);

}  // namespace trapsim::runner
