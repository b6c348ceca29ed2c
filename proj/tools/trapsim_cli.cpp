// Command-line front end. Talks to the library only through the C API.
#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "trapsim/trapsim.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// 0 success, 2 invalid config or usage, 3 model/domain errors, 1 otherwise.
int exit_code(trapsim_status s) {
  switch (s) {
    case TRAPSIM_OK: return 0;
    case TRAPSIM_ERR_CONFIG:
    case TRAPSIM_ERR_INVALID_ARGUMENT: return kExitUsage;
    case TRAPSIM_ERR_DOMAIN:
    case TRAPSIM_ERR_FIT:
    case TRAPSIM_ERR_FIT_UNBOUNDED: return 3;
    case TRAPSIM_ERR_IO: return 4;
    default: return kExitFailure;
  }
}

std::string version_text() {
  return std::string("trapsim ") + trapsim_version() + " (config schema " +
         std::to_string(trapsim_config_schema_version()) + ")";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trapped-ion qubit detection, coherence and vibration simulator"};
  app.set_version_flag("--version", version_text());
  app.require_subcommand(1);

  struct ExperimentArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 1;
  };
  std::vector<std::string> names;
  for (const char* const* n = trapsim_experiments(); *n != nullptr; ++n) names.emplace_back(*n);

  ExperimentArgs args;
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", args.config, "YAML config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", args.seed, "64-bit seed (overrides the config)");
    sub->add_option("--out", args.out, "output directory")->required();
    sub->add_option("--threads", args.threads, "worker threads")->check(CLI::Range(1u, 1024u));
  }

  std::uint64_t repro_seed = 42;
  std::string repro_out = "reproduce_out";
  double tolerance_scale = 1.0;
  unsigned repro_threads = 1;
  auto* repro = app.add_subcommand("reproduce", "run the acceptance suite");
  repro->add_option("--seed", repro_seed, "64-bit seed")->capture_default_str();
  repro->add_option("--out", repro_out, "output directory")->capture_default_str();
  repro->add_option("--tolerance-scale", tolerance_scale, "multiplies every tolerance")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  repro->add_option("--threads", repro_threads, "worker threads")->check(CLI::Range(1u, 1024u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (repro->parsed()) {
    const char* table = nullptr;
    const trapsim_status s =
        trapsim_reproduce(repro_seed, tolerance_scale, repro_out.c_str(), repro_threads, &table);
    if (table != nullptr) std::cout << table;
    if (s != TRAPSIM_OK) {
      std::cerr << "reproduce: " << trapsim_last_error() << '\n';
      return s == TRAPSIM_ERR_CRITERIA_FAILED ? kExitFailure : exit_code(s);
    }
    std::cout << "all criteria passed; report in " << repro_out << '\n';
    return 0;
  }

  for (const auto& name : names) {
    if (!app.got_subcommand(name)) continue;
    const char* summary = nullptr;
    const trapsim_status s =
        trapsim_run(name.c_str(), args.config.c_str(), args.seed.has_value() ? 1 : 0,
                    args.seed.value_or(0), args.out.c_str(), args.threads, &summary);
    if (s != TRAPSIM_OK) {
      std::cerr << name << ": " << trapsim_status_name(s) << ": " << trapsim_last_error() << '\n';
      return exit_code(s);
    }
    std::cout << summary << '\n';
    return 0;
  }
  return kExitUsage;
}
