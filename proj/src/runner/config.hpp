#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trapsim::runner {

inline constexpr int kConfigSchemaVersion = 1;

// A YAML node together with its dotted key path, for diagnostics of the form
// "file:line: key 'a.b': message". Every failure throws ConfigError.
class ConfigNode {
 public:
  ConfigNode(YAML::Node node, std::string path, std::string file);

  [[noreturn]] void fail(const std::string& message) const;

  [[nodiscard]] bool has(const std::string& key) const;
  [[nodiscard]] ConfigNode at(const std::string& key) const;
  [[nodiscard]] std::optional<ConfigNode> find(const std::string& key) const;
  [[nodiscard]] std::vector<ConfigNode> items() const;  // sequence elements

  [[nodiscard]] double as_number() const;
  [[nodiscard]] std::uint64_t as_count() const;
  [[nodiscard]] std::string as_string() const;

  [[nodiscard]] double number(const std::string& key) const { return at(key).as_number(); }
  [[nodiscard]] double number(const std::string& key, double fallback) const;
  [[nodiscard]] std::uint64_t count(const std::string& key) const { return at(key).as_count(); }
  [[nodiscard]] std::uint64_t count(const std::string& key, std::uint64_t fallback) const;
  [[nodiscard]] std::string string(const std::string& key) const { return at(key).as_string(); }
  [[nodiscard]] std::string string(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] std::vector<double> numbers(const std::string& key) const;

  // Rejects keys outside `allowed`, which catches misspelled parameters.
  void allow_only(std::initializer_list<std::string_view> allowed) const;

  [[nodiscard]] const std::string& path() const { return path_; }
  [[nodiscard]] const YAML::Node& node() const { return node_; }

 private:
  [[nodiscard]] std::string child_path(const std::string& key) const;

  YAML::Node node_;
  std::string path_;
  std::string file_;
};

struct RunConfig {
  std::filesystem::path path;
  std::string raw;  // file bytes, hashed into the manifest
  std::string experiment;
  std::optional<std::uint64_t> seed;
  YAML::Node root;

  [[nodiscard]] ConfigNode top() const;
  // Resolves a path given in the config relative to the config's directory.
  [[nodiscard]] std::filesystem::path resolve(const std::string& relative) const;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& origin);

}  // namespace trapsim::runner
