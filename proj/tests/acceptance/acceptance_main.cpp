// Runs the acceptance suite with default tolerances and prints one PASS/FAIL
// line per criterion. Exit status is nonzero when any criterion fails.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "reproduce.hpp"

int main(int argc, char** argv) {
  trapsim::runner::AcceptanceOptions opt;
  std::filesystem::path out = std::filesystem::temp_directory_path() / "trapsim_acceptance";
  if (argc > 1) out = argv[1];
  if (argc > 2) opt.seed = std::strtoull(argv[2], nullptr, 10);

  const auto report = trapsim::runner::run_acceptance(opt);
  trapsim::runner::write_acceptance(report, out);
  std::cout << trapsim::runner::format_acceptance(report);
  int failed = 0;
  for (const auto& c : report.criteria) failed += c.passed ? 0 : 1;
  std::cout << report.criteria.size() - failed << "/" << report.criteria.size()
            << " criteria passed (seed " << opt.seed << ", report in " << out.string() << ")\n";
  return failed == 0 ? 0 : 1;
}
