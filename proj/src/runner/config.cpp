#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace trapsim::runner {

ConfigNode::ConfigNode(YAML::Node node, std::string path, std::string file)
    : node_(std::move(node)), path_(std::move(path)), file_(std::move(file)) {}

void ConfigNode::fail(const std::string& message) const {
  std::string where = file_;
  if (node_.IsDefined() && node_.Mark().line >= 0) {
    where += ":" + std::to_string(node_.Mark().line + 1);
  }
  std::string key = path_.empty() ? std::string("<root>") : path_;
  throw ConfigError(where + ": key '" + key + "': " + message);
}

std::string ConfigNode::child_path(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

bool ConfigNode::has(const std::string& key) const {
  return node_.IsMap() && node_[key].IsDefined() && !node_[key].IsNull();
}

ConfigNode ConfigNode::at(const std::string& key) const {
  if (!node_.IsMap()) fail("expected a mapping");
  if (!has(key)) {
    // Report the parent's position; the missing key has none.
    std::string where = file_;
    if (node_.Mark().line >= 0) where += ":" + std::to_string(node_.Mark().line + 1);
    throw ConfigError(where + ": key '" + child_path(key) + "': missing required key");
  }
  return {node_[key], child_path(key), file_};
}

std::optional<ConfigNode> ConfigNode::find(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return at(key);
}

std::vector<ConfigNode> ConfigNode::items() const {
  if (!node_.IsSequence()) fail("expected a list");
  std::vector<ConfigNode> out;
  for (std::size_t i = 0; i < node_.size(); ++i) {
    out.emplace_back(node_[i], path_ + "[" + std::to_string(i) + "]", file_);
  }
  return out;
}

double ConfigNode::as_number() const {
  if (!node_.IsScalar()) fail("expected a number");
  const std::string text = node_.Scalar();
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    fail("expected a finite number, got '" + text + "'");
  }
  return value;
}

std::uint64_t ConfigNode::as_count() const {
  if (!node_.IsScalar()) fail("expected a nonnegative integer");
  const std::string text = node_.Scalar();
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec == std::errc() && ptr == end) return value;
  // Allow integral values written in exponent form, such as 1e7.
  double d = 0.0;
  const auto [dptr, dec] = std::from_chars(text.data(), end, d);
  if (dec == std::errc() && dptr == end && d >= 0.0 && d < 1.8e19 && std::floor(d) == d) {
    return static_cast<std::uint64_t>(d);
  }
  fail("expected a nonnegative integer, got '" + text + "'");
}

std::string ConfigNode::as_string() const {
  if (!node_.IsScalar()) fail("expected a string");
  return node_.Scalar();
}

double ConfigNode::number(const std::string& key, double fallback) const {
  const auto n = find(key);
  return n ? n->as_number() : fallback;
}

std::uint64_t ConfigNode::count(const std::string& key, std::uint64_t fallback) const {
  const auto n = find(key);
  return n ? n->as_count() : fallback;
}

std::string ConfigNode::string(const std::string& key, const std::string& fallback) const {
  const auto n = find(key);
  return n ? n->as_string() : fallback;
}

std::vector<double> ConfigNode::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : at(key).items()) out.push_back(item.as_number());
  return out;
}

void ConfigNode::allow_only(std::initializer_list<std::string_view> allowed) const {
  if (!node_.IsMap()) fail("expected a mapping");
  for (const auto& kv : node_) {
    const std::string key = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) ConfigNode(kv.first, child_path(key), file_).fail("unknown key");
  }
}

ConfigNode RunConfig::top() const { return {root, "", path.filename().string()}; }

std::filesystem::path RunConfig::resolve(const std::string& relative) const {
  const std::filesystem::path p(relative);
  if (p.is_absolute()) return p;
  return path.parent_path() / p;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& origin) {
  RunConfig cfg;
  cfg.path = origin;
  cfg.raw = text;
  const std::string name = origin.filename().string();
  try {
    cfg.root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(name + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!cfg.root.IsMap()) throw ConfigError(name + ": top level must be a mapping");
  const ConfigNode top = cfg.top();
  const auto version = top.at("schema_version");
  if (version.as_count() != static_cast<std::uint64_t>(kConfigSchemaVersion)) {
    version.fail("unsupported schema version (this build reads " +
                 std::to_string(kConfigSchemaVersion) + ")");
  }
  if (const auto e = top.find("experiment")) cfg.experiment = e->as_string();
  if (const auto s = top.find("seed")) cfg.seed = s->as_count();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace trapsim::runner
