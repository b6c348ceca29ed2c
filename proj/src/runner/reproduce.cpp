#include "reproduce.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "artifacts.hpp"
#include "coherence.hpp"
#include "detection.hpp"
#include "efficiency.hpp"
#include "errors.hpp"
#include "version.hpp"
#include "vibration.hpp"

namespace trapsim::runner {

using json = nlohmann::ordered_json;

namespace {

DetectionParams reference_detection() {
  DetectionParams p;
  p.n_bar_bright = 25.37;
  p.n_bar_dark = 0.18;
  p.t_det = 50e-6;
  p.t_delay = 20e-6;
  p.tau = 1.0;
  return p;
}

constexpr std::uint64_t kThreshold = 5;
constexpr double kRamseyTarget = 0.024;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string csv_rows(const std::string& header,
                     const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  return out.str();
}

// Everything the criteria look at. Data files are byte-compared across runs.
struct DataSet {
  std::map<std::string, std::string> files;
  std::map<int, double> seconds;

  ThresholdReport model_at_threshold;
  double dark_tv = 0.0;
  ThresholdReport empirical_at_threshold;
  double max_normalization_error = 0.0;
  GaussianDecayFit quasi_static_fit;
  double hahn_min_contrast = 1.0;
  std::vector<std::pair<std::string, double>> composite_tau;
  std::vector<std::string> composite_fit_errors;
  double tone_rms = 0.0;
  double record_rbw = 0.0;
  double drift_rms_ratio = 0.0;
  std::vector<Peak> comb_peaks;
};

DataSet generate(std::uint64_t seed, unsigned threads) {
  DataSet d;
  const auto params = reference_detection();

  {  // 1, 3
    Stopwatch sw;
    d.model_at_threshold = threshold_errors(params, kThreshold);
    std::vector<std::vector<double>> rows;
    for (const auto& r : threshold_scan(params, 15)) {
      rows.push_back({static_cast<double>(r.threshold), r.eps_bright.value, r.eps_dark.value,
                      r.eps_avg.value, r.fidelity});
    }
    d.files["detection_threshold_scan.csv"] =
        csv_rows("threshold,eps_bright,eps_dark,eps_avg,fidelity", rows);
    d.seconds[1] = sw.seconds();
  }

  {  // 2
    Stopwatch sw;
    const auto dark = simulate_detection(params, IonState::dark, 10'000'000,
                                         derive_stream(seed, 10), threads);
    const auto last = dark.max_count();
    double tv = 0.0;
    double below = 0.0;
    for (std::uint64_t n = 0; n < last; ++n) {
      const double p = dark_pmf(params, n);
      below += p;
      tv += std::fabs(static_cast<double>(dark.at(n)) / 1e7 - p);
    }
    tv += std::fabs(static_cast<double>(dark.at(last)) / 1e7 - std::max(0.0, 1.0 - below));
    d.dark_tv = 0.5 * tv;
    d.files["dark_histogram_1e7.csv"] = histogram_to_csv(dark);

    const auto bright = simulate_detection(params, IonState::bright, 1'020'000,
                                           derive_stream(seed, 11), threads);
    const auto dark2 = simulate_detection(params, IonState::dark, 1'020'000,
                                          derive_stream(seed, 12), threads);
    d.empirical_at_threshold = histogram_errors(bright, dark2, kThreshold);
    d.files["detect_sim_bright.csv"] = histogram_to_csv(bright);
    d.files["detect_sim_dark.csv"] = histogram_to_csv(dark2);
    d.seconds[2] = sw.seconds();
  }

  {  // 5
    Stopwatch sw;
    CounterRng rng(derive_stream(seed, 13));
    std::vector<DetectionParams> sets{params};
    for (int i = 0; i < 20; ++i) {
      DetectionParams p;
      p.n_bar_bright = 1.0 + 59.0 * rng.uniform();
      p.n_bar_dark = 0.01 + 2.0 * rng.uniform();
      p.t_det = 1e-5 + 5e-4 * rng.uniform();
      p.t_delay = 1e-4 * rng.uniform();
      p.tau = std::pow(10.0, -4.0 + 5.0 * rng.uniform());
      sets.push_back(p);
    }
    std::vector<std::vector<double>> rows;
    for (const auto& p : sets) {
      double sum = 0.0;
      for (std::uint64_t n = 0; n <= histogram_support(p); ++n) sum += dark_pmf(p, n);
      d.max_normalization_error = std::max(d.max_normalization_error, std::fabs(sum - 1.0));
      rows.push_back({p.n_bar_bright, p.n_bar_dark, p.t_det, p.t_delay, p.tau, sum});
    }
    d.files["dark_pmf_normalization.csv"] =
        csv_rows("n_bar_bright,n_bar_dark,t_det_s,t_delay_s,tau_s,pmf_sum", rows);
    d.seconds[5] = sw.seconds();
  }

  {  // 6
    Stopwatch sw;
    const double sigma = 1.0 / (2.0 * std::numbers::pi * kRamseyTarget);
    const NoiseModel model{QuasiStaticGaussian{sigma}};
    ScanSettings s;
    for (int k = 1; k <= 12; ++k) s.delays.push_back(0.005 * k);
    s.trials = 10000;
    s.sequence = {SequenceKind::ramsey};
    const auto ramsey = coherence_scan(model, s, derive_stream(seed, 20), threads);
    d.quasi_static_fit = fit_coherence(ramsey);
    s.sequence = {SequenceKind::hahn};
    const auto hahn = coherence_scan(model, s, derive_stream(seed, 21), threads);
    for (const auto& p : hahn.points) d.hahn_min_contrast = std::min(d.hahn_min_contrast, p.contrast);
    d.files["quasi_static_ramsey.csv"] = curve_to_csv(ramsey);
    d.files["quasi_static_hahn.csv"] = curve_to_csv(hahn);
    d.seconds[6] = sw.seconds();
  }

  {  // 7
    Stopwatch sw;
    const std::vector<SequenceSpec> specs{{SequenceKind::ramsey},
                                          {SequenceKind::hahn},
                                          {SequenceKind::xy4},
                                          {SequenceKind::xyn, 8}};
    for (std::size_t i = 0; i < specs.size(); ++i) {
      ScanSettings s;
      s.sequence = specs[i];
      s.delays = default_delays(specs[i]);
      s.trials = 10000;
      const auto curve = coherence_scan(default_composite_noise(), s, derive_stream(seed, 30 + i),
                                        threads);
      d.files["composite_" + specs[i].name() + ".csv"] = curve_to_csv(curve);
      try {
        d.composite_tau.emplace_back(specs[i].name(), fit_coherence(curve).tau_d.value);
      } catch (const FitError& e) {
        d.composite_tau.emplace_back(specs[i].name(), NAN);
        d.composite_fit_errors.push_back(specs[i].name() + ": " + e.what());
      }
    }
    d.seconds[7] = sw.seconds();
  }

  {  // 9
    Stopwatch sw;
    const std::vector<Tone> tone{{1.2, 10.76, 0.0}};
    const auto series = synthesize(tone, 0.0, 0.0, 20.0, 1000.0, derive_stream(seed, 40));
    const auto filtered = high_pass(series, 0.03);
    d.tone_rms = rms(filtered);
    const auto spectrum = amplitude_spectrum(filtered);
    d.record_rbw = spectrum.rbw;
    d.files["vibration_tone_spectrum.csv"] = spectrum_to_csv(spectrum);

    const auto ramp = synthesize({}, 1.0, 0.0, 20.0, 1000.0, derive_stream(seed, 41));
    d.drift_rms_ratio = rms(high_pass(ramp, 0.03)) / rms(ramp);

    const std::vector<Tone> comb{{1.2, 10.76, 0.0}, {2.4, 3.0, 0.7}, {3.6, 1.5, 1.9}};
    const auto comb_series = synthesize(comb, 0.0, 0.2, 20.0, 1000.0, derive_stream(seed, 42));
    d.comb_peaks = find_peaks(amplitude_spectrum(high_pass(comb_series, 0.03)), 0.5, 1.2);
    d.files["vibration_comb_peaks.csv"] = peaks_to_csv(d.comb_peaks);
    d.seconds[9] = sw.seconds();
  }
  return d;
}

CheckResult within(std::string q, double measured, double expected, double tol, double scale) {
  const double t = tol * scale;
  return {std::move(q), "within", measured, expected, t, std::fabs(measured - expected) <= t};
}

CheckResult at_most(std::string q, double measured, double limit, double scale) {
  const double t = limit * scale;
  return {std::move(q), "at_most", measured, 0.0, t, measured <= t};
}

CheckResult holds(std::string q, bool ok) {
  return {std::move(q), "holds", ok ? 1.0 : 0.0, 1.0, 0.0, ok};
}

CriterionResult criterion(int id, std::string title, std::vector<CheckResult> checks,
                          double runtime, std::optional<double> budget) {
  CriterionResult c{id, std::move(title), std::move(checks), runtime, budget, true};
  for (const auto& k : c.checks) c.passed = c.passed && k.passed;
  if (budget) c.passed = c.passed && runtime < *budget;
  return c;
}

}  // namespace

bool AcceptanceReport::all_passed() const {
  for (const auto& c : criteria) {
    if (!c.passed) return false;
  }
  return !criteria.empty();
}

AcceptanceReport run_acceptance(const AcceptanceOptions& options) {
  AcceptanceReport report;
  report.options = options;
  const double s = options.tolerance_scale;
  const unsigned threads = std::max(1u, options.threads);
  const DataSet d = generate(options.seed, threads);
  report.data_files = d.files;
  auto& out = report.criteria;

  out.push_back(criterion(1, "detection-model error at threshold 5",
                          {within("eps_avg", d.model_at_threshold.eps_avg.value, 3.1e-5, 0.5e-5, s)},
                          d.seconds.at(1), 1.0));

  {
    const auto& e = d.empirical_at_threshold;
    out.push_back(criterion(
        2, "Monte Carlo agrees with the count model",
        {at_most("dark total-variation distance (1e7 trials)", d.dark_tv, 5e-4, s),
         within("empirical eps_avg (1.02e6 + 1.02e6 trials)", e.eps_avg.value,
                d.model_at_threshold.eps_avg.value, 3.0 * e.eps_avg.std_error, s)},
        d.seconds.at(2), 60.0));
  }

  out.push_back(criterion(3, "modeled fidelity at threshold 5",
                          {within("fidelity", d.model_at_threshold.fidelity, 0.9999725, 1.25e-5, s)},
                          d.seconds.at(1), std::nullopt));

  {
    Stopwatch sw;
    const double solid = na_to_solid_angle_fraction(0.6);
    const double lens = chain_efficiency({0.6, {{"lens coating", 0.917}}});
    const auto b = binomial_estimate(1770, 100000);
    out.push_back(criterion(4, "efficiency arithmetic",
                            {within("solid-angle fraction at NA 0.6", solid, 0.100, 0.001, s),
                             within("fraction after 91.7% coating", lens, 0.0917, 0.0005, s),
                             within("measured efficiency 1770/1e5", b.value, 0.0177, 0.00005, s),
                             within("its standard error", b.std_error, 0.00042, 0.000005, s)},
                            sw.seconds(), 1.0));
  }

  out.push_back(criterion(5, "dark count distribution is normalized",
                          {at_most("max |sum - 1| over 21 parameter sets",
                                   d.max_normalization_error, 1e-6, s)},
                          d.seconds.at(5), std::nullopt));

  out.push_back(criterion(
      6, "quasi-static Ramsey and echo",
      {within("Ramsey tau_d (s)", d.quasi_static_fit.tau_d.value, kRamseyTarget,
              0.05 * kRamseyTarget, s),
       at_most("1 - min Hahn contrast", 1.0 - d.hahn_min_contrast, 0.001, s)},
      d.seconds.at(6), 120.0));

  {
    std::vector<CheckResult> checks;
    for (const auto& [name, tau] : d.composite_tau) {
      checks.push_back(holds(name + " tau_d = " + std::to_string(tau) + " s fitted", std::isfinite(tau)));
    }
    const auto& t = d.composite_tau;
    checks.push_back(holds("ramsey < hahn", t[0].second < t[1].second));
    checks.push_back(holds("hahn < xy4", t[1].second < t[2].second));
    checks.push_back(holds("xy4 <= xy32", t[2].second <= t[3].second));
    out.push_back(criterion(7, "decoupling ordering under the default composite noise",
                            std::move(checks), d.seconds.at(7), std::nullopt));
  }

  {
    Stopwatch sw;
    const double g = gradient_detuning({350.0, 2.8e6}, 1e-6);
    out.push_back(criterion(8, "gradient arithmetic",
                            {within("detuning per micron (Hz)", g, 980.0, 0.1, s)}, sw.seconds(),
                            std::nullopt));
  }

  {
    bool labels = true;
    for (unsigned k = 1; k <= 3; ++k) {
      bool found = false;
      for (const auto& p : d.comb_peaks) found = found || p.harmonic_index == k;
      labels = labels && found;
    }
    out.push_back(criterion(
        9, "vibration pipeline",
        {within("RMS of a 10.76 nm tone (nm)", d.tone_rms, 7.61, 0.01, s),
         within("rbw of a 20 s record (Hz)", d.record_rbw, 0.05, 1e-12, s),
         at_most("drift RMS after / before high-pass", d.drift_rms_ratio, 0.1, s),
         holds("harmonics 1..3 of 1.2 Hz labelled", labels)},
        d.seconds.at(9), 5.0));
  }

  {
    Stopwatch sw;
    std::vector<CheckResult> checks;
    if (options.verify_determinism) {
      const DataSet serial = generate(options.seed, 1);
      const DataSet parallel = generate(options.seed, 8);
      checks.push_back(holds("second run byte-identical", serial.files == d.files));
      checks.push_back(holds("8 threads byte-identical to serial", parallel.files == serial.files));
    } else {
      checks.push_back(holds("determinism check skipped", false));
    }
    out.push_back(criterion(10, "determinism", std::move(checks), sw.seconds(), std::nullopt));
  }
  return report;
}

std::vector<std::string> write_acceptance(const AcceptanceReport& report,
                                          const std::filesystem::path& out_dir) {
  OutputDir out(out_dir);
  for (const auto& [name, content] : report.data_files) out.write("data_" + name, content);

  json criteria = json::array();
  json timing = json::array();
  for (const auto& c : report.criteria) {
    json checks = json::array();
    for (const auto& k : c.checks) {
      checks.push_back({{"quantity", k.quantity},
                        {"rule", k.rule},
                        {"measured", k.measured},
                        {"expected", k.expected},
                        {"tolerance", k.tolerance},
                        {"passed", k.passed}});
    }
    criteria.push_back({{"id", c.id}, {"title", c.title}, {"passed", c.passed}, {"checks", checks}});
    json t{{"id", c.id}, {"runtime_s", c.runtime_s}};
    if (c.runtime_budget_s) t["budget_s"] = *c.runtime_budget_s;
    timing.push_back(t);
  }
  json doc;
  doc["seed"] = report.options.seed;
  doc["tolerance_scale"] = report.options.tolerance_scale;
  doc["all_passed"] = report.all_passed();
  doc["criteria"] = criteria;
  out.write_json("acceptance.json", doc);
  // Timings vary run to run, so they stay out of the checksummed outputs.
  write_atomic(out.path() / "timing.json", dump_json(json{{"criteria", timing}}));

  std::ostringstream cfg;
  cfg << "reproduce seed=" << report.options.seed
      << " tolerance_scale=" << report.options.tolerance_scale;
  auto manifest = make_manifest("reproduce", report.options.seed, "<built-in>", cfg.str(), out);
  manifest["unhashed_outputs"] = json::array({"timing.json"});
  out.write_json("manifest.json", manifest);
  std::vector<std::string> files;
  for (const auto& [name, sum] : out.checksums()) files.push_back(name);
  files.push_back("timing.json");
  return files;
}

std::string format_acceptance(const AcceptanceReport& report) {
  std::ostringstream out;
  out.precision(6);
  for (const auto& c : report.criteria) {
    out << (c.passed ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.title << ":";
    for (std::size_t i = 0; i < c.checks.size(); ++i) {
      const auto& k = c.checks[i];
      out << (i ? ";" : "") << ' ' << k.quantity;
      if (k.rule == "within") {
        out << " = " << k.measured << " (expect " << k.expected << " +- " << k.tolerance << ")";
      } else if (k.rule == "at_most") {
        out << " = " << k.measured << " (limit " << k.tolerance << ")";
      } else {
        out << (k.passed ? " yes" : " NO");
      }
    }
    out << "; " << c.runtime_s << " s";
    if (c.runtime_budget_s) out << " (budget " << *c.runtime_budget_s << " s)";
    out << '\n';
  }
  return out.str();
}

}  // namespace trapsim::runner
