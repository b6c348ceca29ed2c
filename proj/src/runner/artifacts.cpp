#include "artifacts.hpp"

#include <fftw3.h>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <system_error>

#include "config.hpp"
#include "errors.hpp"
#include "version.hpp"

namespace trapsim::runner {

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

void write_atomic(const std::filesystem::path& target, const std::string& content) {
  const auto tmp = target.parent_path() / ("." + target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place: " + target.string());
  }
}

OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw IoError("cannot create output directory " + dir_.string());
  }
}

void OutputDir::write(const std::string& name, const std::string& content) {
  write_atomic(dir_ / name, content);
  sums_[name] = sha256_hex(content);
}

std::string dump_json(const nlohmann::ordered_json& doc) { return doc.dump(2) + "\n"; }

void OutputDir::write_json(const std::string& name, const nlohmann::ordered_json& doc) {
  write(name, dump_json(doc));
}

nlohmann::ordered_json library_versions() {
  nlohmann::ordered_json v;
  v["fftw"] = std::string(fftw_version);
  v["yaml-cpp"] = TRAPSIM_YAML_CPP_VERSION;
  v["openssl"] = OPENSSL_VERSION_TEXT;
  return v;
}

nlohmann::ordered_json make_manifest(const std::string& experiment, std::uint64_t seed,
                                     const std::string& config_name,
                                     const std::string& config_bytes, const OutputDir& out) {
  nlohmann::ordered_json m;
  m["tool"] = "trapsim";
  m["tool_version"] = TRAPSIM_VERSION;
  m["config_schema_version"] = kConfigSchemaVersion;
  m["report_schema_version"] = kReportSchemaVersion;
  m["experiment"] = experiment;
  m["seed"] = seed;
  m["config"] = {{"file", config_name}, {"sha256", sha256_hex(config_bytes)}};
  m["libraries"] = library_versions();
  nlohmann::ordered_json outputs = nlohmann::ordered_json::array();
  for (const auto& [name, sum] : out.checksums()) {
    outputs.push_back({{"file", name}, {"sha256", sum}});
  }
  m["outputs"] = outputs;
  return m;
}

}  // namespace trapsim::runner
