#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace trapsim::runner {

std::string sha256_hex(const std::string& bytes);

// Writes `content` to a temporary sibling and renames it over `target`.
void write_atomic(const std::filesystem::path& target, const std::string& content);

// Output directory that remembers what it wrote, for the manifest.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);

  void write(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::ordered_json& doc);

  [[nodiscard]] const std::filesystem::path& path() const { return dir_; }
  // File name -> sha256, sorted by name.
  [[nodiscard]] const std::map<std::string, std::string>& checksums() const { return sums_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> sums_;
};

std::string dump_json(const nlohmann::ordered_json& doc);

// Library versions linked into this build.
nlohmann::ordered_json library_versions();

// Config hash, seed, versions and output checksums. Deliberately free of
// timings, thread counts and absolute paths so reruns compare equal.
nlohmann::ordered_json make_manifest(const std::string& experiment, std::uint64_t seed,
                                     const std::string& config_name,
                                     const std::string& config_bytes, const OutputDir& out);

}  // namespace trapsim::runner
