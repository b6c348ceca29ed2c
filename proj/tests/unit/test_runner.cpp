#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "artifacts.hpp"
#include "coherence.hpp"
#include "config.hpp"
#include "detection.hpp"
#include "errors.hpp"
#include "experiments.hpp"

using namespace trapsim;
using namespace trapsim::runner;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(TRAPSIM_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("trapsim_runner_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string config_error(const std::string& text, const std::string& experiment = "detect-model") {
  const auto dir = scratch("err");
  RunRequest req{experiment, write(dir / "c.yaml", text), std::nullopt, dir / "out", 1};
  try {
    run_experiment(req);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const std::string kDetection = R"(schema_version: 1
detection:
  n_bar_bright: 25.37
  n_bar_dark: 0.18
  t_det_us: 50
  t_delay_us: 20
  tau_s: 1.0
)";

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config diagnostics name the key and line") {
  std::string text = kDetection;
  text.replace(text.find("  n_bar_bright: 25.37\n"), 22, "");
  const auto missing = config_error(text);
  CHECK(missing.find("detection.n_bar_bright") != std::string::npos);
  CHECK(missing.find("missing") != std::string::npos);
  CHECK(missing.find("c.yaml:3") != std::string::npos);

  const auto negative = config_error(kDetection + "  threshold: -3\n");
  CHECK(negative.find("detection.threshold") != std::string::npos);
  CHECK(negative.find("c.yaml:8") != std::string::npos);

  const auto typo = config_error(kDetection + "  treshold: 3\n");
  CHECK(typo.find("detection.treshold") != std::string::npos);
  CHECK(typo.find("unknown key") != std::string::npos);

  std::string invalid = kDetection;
  invalid.replace(invalid.find("0.18"), 4, "-0.5");
  CHECK(config_error(invalid).find("detection") != std::string::npos);

  CHECK(config_error("schema_version: 2\n").find("schema_version") != std::string::npos);
  CHECK(config_error("detection: {}\n").find("schema_version") != std::string::npos);
  CHECK(config_error(kDetection + "t_det_us: 5\n").find("not used") != std::string::npos);
  CHECK(config_error(kDetection + "experiment: efficiency\n").find("experiment") != std::string::npos);
  CHECK(config_error("schema_version: 1\ndetection: [1, 2\n").find("c.yaml") != std::string::npos);
  CHECK_FALSE(config_error(kDetection, "no-such-experiment").empty());

  const std::string noise = R"(schema_version: 1
noise:
  - {type: ou, sigma_hz: 1.0, tau_c_s: 0}
coherence:
  sequences: [ramsey]
)";
  CHECK(config_error(noise, "coherence-scan").find("noise") != std::string::npos);
  const std::string infeasible = R"(schema_version: 1
noise: [{type: quasi_static, sigma_hz: 1.0}]
coherence:
  sequences: [xy32]
  delays_ms: [1, 2]
  pi_time_us: 40
)";
  CHECK(config_error(infeasible, "coherence-scan").find("coherence") != std::string::npos);
  const std::string aliased = R"(schema_version: 1
vibration_synth:
  duration_s: 1
  sample_rate_hz: 100
  tones: [{frequency_hz: 60, amplitude_nm: 1}]
)";
  CHECK(config_error(aliased, "vibration-synth").find("tones[0].frequency_hz") != std::string::npos);
}

TEST_CASE("invalid configs write nothing") {
  const auto dir = scratch("nothing");
  RunRequest req{"detect-model", write(dir / "c.yaml", kDetection + "  bogus: 1\n"), 1, dir / "out", 1};
  CHECK_THROWS_AS(run_experiment(req), ConfigError);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("shipped configs mirror the library defaults") {
  const auto noise_cfg = load_config(kConfigs / "coherence_default.yaml");
  const auto items = noise_cfg.top().at("noise").items();
  const auto defaults = default_composite_noise();
  REQUIRE(items.size() == defaults.components.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& c = defaults.components[i];
    if (const auto* q = std::get_if<QuasiStaticGaussian>(&c)) {
      CHECK(items[i].string("type") == "quasi_static");
      CHECK(items[i].number("sigma_hz") == q->sigma_hz);
    } else if (const auto* o = std::get_if<OrnsteinUhlenbeck>(&c)) {
      CHECK(items[i].string("type") == "ou");
      CHECK(items[i].number("sigma_hz") == o->sigma_hz);
      CHECK(items[i].number("tau_c_s") == o->tau_c);
    } else {
      FAIL("unexpected component");
    }
  }

  const auto det = load_config(kConfigs / "detect_model.yaml").top().at("detection");
  const DetectionParams ref;
  CHECK(det.number("n_bar_bright") == ref.n_bar_bright);
  CHECK(det.number("n_bar_dark") == ref.n_bar_dark);
  CHECK(det.number("t_det_us") * 1e-6 == doctest::Approx(ref.t_det));
  CHECK(det.number("t_delay_us") * 1e-6 == doctest::Approx(ref.t_delay));
  CHECK(det.number("tau_s") == ref.tau);
}

TEST_CASE("detect-model run writes report and manifest deterministically") {
  const auto dir = scratch("model");
  RunRequest req{"", kConfigs / "detect_model.yaml", std::nullopt, dir / "a", 1};
  const auto r = run_experiment(req);
  CHECK(r.experiment == "detect-model");
  CHECK(r.seed == kDefaultSeed);
  CHECK(r.files.back() == "manifest.json");
  const auto report = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report["at_threshold"]["eps_avg"]["value"].get<double>() ==
        doctest::Approx(3.099068528703529e-05).epsilon(1e-9));
  CHECK(report["optimal"]["threshold"].get<int>() == 6);

  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["config"]["sha256"] == sha256_hex(slurp(kConfigs / "detect_model.yaml")));
  CHECK(manifest["outputs"].size() == 2);
  for (const auto& o : manifest["outputs"]) {
    CHECK(o["sha256"] == sha256_hex(slurp(dir / "a" / o["file"].get<std::string>())));
  }
  CHECK_FALSE(manifest.contains("threads"));

  req.out_dir = dir / "b";
  req.threads = 4;
  run_experiment(req);
  for (const auto* f : {"report.json", "pmf.csv", "manifest.json"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
  }
}

TEST_CASE("seeded runs are reproducible and seed-sensitive") {
  const auto dir = scratch("sim");
  const auto cfg = write(dir / "c.yaml", kDetection + "  trials: 20000\n");
  run_experiment({"detect-sim", cfg, 5, dir / "a", 1});
  run_experiment({"detect-sim", cfg, 5, dir / "b", 3});
  run_experiment({"detect-sim", cfg, 6, dir / "c", 1});
  CHECK(slurp(dir / "a" / "histogram_dark.csv") == slurp(dir / "b" / "histogram_dark.csv"));
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
  CHECK(slurp(dir / "a" / "histogram_dark.csv") != slurp(dir / "c" / "histogram_dark.csv"));
}

TEST_CASE("efficiency and vibration runs") {
  const auto dir = scratch("eff");
  run_experiment({"efficiency", kConfigs / "efficiency.yaml", std::nullopt, dir / "e", 1});
  const auto e = nlohmann::json::parse(slurp(dir / "e" / "report.json"));
  CHECK(e["predicted_efficiency"].get<double>() == doctest::Approx(0.0196).epsilon(1e-3));
  CHECK(e["measurement"]["sigma_distance"].get<double>() == doctest::Approx(4.57).epsilon(0.01));

  run_experiment({"vibration-analyze", kConfigs / "vibration_analyze.yaml", std::nullopt, dir / "v", 1});
  const auto v = nlohmann::json::parse(slurp(dir / "v" / "report.json"));
  CHECK(v["rbw_hz"].get<double>() == doctest::Approx(0.05));
  const auto peaks = slurp(dir / "v" / "peaks.csv");
  CHECK(peaks.find(",1\n") != std::string::npos);
  CHECK(peaks.find(",3\n") != std::string::npos);

  run_experiment({"coherence-fit", kConfigs / "coherence_fit.yaml", std::nullopt, dir / "f", 1});
  const auto f = nlohmann::json::parse(slurp(dir / "f" / "report.json"));
  CHECK(f["fit"]["tau_d_s"]["value"].get<double>() == doctest::Approx(0.024).epsilon(0.05));
}

}  // TEST_SUITE
