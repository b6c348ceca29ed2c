#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "artifacts.hpp"
#include "coherence.hpp"
#include "config.hpp"
#include "detection.hpp"
#include "efficiency.hpp"
#include "errors.hpp"
#include "vibration.hpp"

namespace trapsim::runner {

using json = nlohmann::ordered_json;

namespace {

json estimate_json(const EstimateWithError& e) {
  return {{"value", e.value}, {"std_error", e.std_error}};
}

json threshold_json(const ThresholdReport& r) {
  return {{"threshold", r.threshold},
          {"eps_bright", estimate_json(r.eps_bright)},
          {"eps_dark", estimate_json(r.eps_dark)},
          {"eps_avg", estimate_json(r.eps_avg)},
          {"fidelity", r.fidelity}};
}

json fit_json(const GaussianDecayFit& f) {
  return {{"tau_d_s", estimate_json(f.tau_d)},
          {"reduced_chi2", f.reduced_chi2},
          {"residual_norm", f.residual_norm}};
}

std::string read_file(const ConfigNode& key, const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) key.fail("cannot open input file " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <class F>
auto checked(const ConfigNode& where, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    where.fail(e.what());
  }
}

// ---------------------------------------------------------------------------
// Detection

struct DetectionSection {
  DetectionParams params;
  std::uint64_t threshold = 5;
  std::uint64_t max_threshold = 20;
  std::uint64_t trials = 1020000;
};

DetectionSection parse_detection(const ConfigNode& top) {
  const ConfigNode d = top.at("detection");
  d.allow_only({"n_bar_bright", "n_bar_dark", "t_det_us", "t_delay_us", "tau_s", "threshold",
                "max_threshold", "trials"});
  DetectionSection s;
  s.params.n_bar_bright = d.number("n_bar_bright");
  s.params.n_bar_dark = d.number("n_bar_dark");
  s.params.t_det = d.number("t_det_us") * 1e-6;
  s.params.t_delay = d.number("t_delay_us") * 1e-6;
  s.params.tau = d.number("tau_s");
  checked(d, [&] {
    s.params.validate();
    return 0;
  });
  s.threshold = d.count("threshold", 5);
  s.max_threshold = d.count("max_threshold", 20);
  s.trials = d.count("trials", 1020000);
  if (s.threshold < 1) d.at("threshold").fail("threshold must be >= 1");
  if (s.max_threshold < 1) d.at("max_threshold").fail("max_threshold must be >= 1");
  if (s.trials < 1) d.at("trials").fail("trials must be >= 1");
  return s;
}

json detection_params_json(const DetectionParams& p) {
  return {{"n_bar_bright", p.n_bar_bright},
          {"n_bar_dark", p.n_bar_dark},
          {"t_det_s", p.t_det},
          {"t_delay_s", p.t_delay},
          {"tau_s", p.tau}};
}

using Job = std::function<std::string(OutputDir&)>;

Job plan_detect_model(const RunConfig& cfg) {
  const auto s = parse_detection(cfg.top());
  return [s](OutputDir& out) {
    const auto w = decay_weights(s.params);
    const auto at = threshold_errors(s.params, s.threshold);
    const auto best = optimal_threshold(s.params, s.max_threshold);

    std::ostringstream pmf;
    pmf.precision(17);
    pmf << "photon_count,bright_pmf,dark_pmf\n";
    for (std::uint64_t n = 0; n <= histogram_support(s.params); ++n) {
      pmf << n << ',' << bright_pmf(s.params, n) << ',' << dark_pmf(s.params, n) << '\n';
    }
    out.write("pmf.csv", pmf.str());

    json r;
    r["experiment"] = "detect-model";
    r["parameters"] = detection_params_json(s.params);
    r["decay_weights"] = {{"stays_shelved", w.stays_shelved},
                          {"decays_before", w.decays_before},
                          {"decays_in_window", w.decays_in_window}};
    r["at_threshold"] = threshold_json(at);
    r["optimal"] = threshold_json(best);
    r["max_threshold_searched"] = s.max_threshold;
    out.write_json("report.json", r);

    std::ostringstream msg;
    msg << "threshold " << s.threshold << ": eps_avg = " << at.eps_avg.value
        << ", fidelity = " << at.fidelity << "; optimal threshold " << best.threshold;
    return msg.str();
  };
}

Job plan_threshold_scan(const RunConfig& cfg) {
  const auto s = parse_detection(cfg.top());
  return [s](OutputDir& out) {
    const auto scan = threshold_scan(s.params, s.max_threshold);
    std::ostringstream csv;
    csv.precision(17);
    csv << "threshold,eps_bright,eps_dark,eps_avg,fidelity\n";
    for (const auto& r : scan) {
      csv << r.threshold << ',' << r.eps_bright.value << ',' << r.eps_dark.value << ','
          << r.eps_avg.value << ',' << r.fidelity << '\n';
    }
    out.write("threshold_scan.csv", csv.str());
    const auto best = *std::min_element(scan.begin(), scan.end(), [](const auto& a, const auto& b) {
      return a.eps_avg.value < b.eps_avg.value;
    });
    json r;
    r["experiment"] = "threshold-scan";
    r["parameters"] = detection_params_json(s.params);
    r["optimal"] = threshold_json(best);
    out.write_json("report.json", r);
    return "optimal threshold " + std::to_string(best.threshold);
  };
}

Job plan_detect_sim(const RunConfig& cfg, std::uint64_t seed, unsigned threads) {
  const auto s = parse_detection(cfg.top());
  return [s, seed, threads](OutputDir& out) {
    const auto bright =
        simulate_detection(s.params, IonState::bright, s.trials, derive_stream(seed, 1), threads);
    const auto dark =
        simulate_detection(s.params, IonState::dark, s.trials, derive_stream(seed, 2), threads);
    out.write("histogram_bright.csv", histogram_to_csv(bright));
    out.write("histogram_dark.csv", histogram_to_csv(dark));
    const auto empirical = histogram_errors(bright, dark, s.threshold);
    const auto model = threshold_errors(s.params, s.threshold);
    json r;
    r["experiment"] = "detect-sim";
    r["parameters"] = detection_params_json(s.params);
    r["trials_per_state"] = s.trials;
    r["empirical"] = threshold_json(empirical);
    r["model"] = threshold_json(model);
    const double se = empirical.eps_avg.std_error;
    const double diff = std::fabs(empirical.eps_avg.value - model.eps_avg.value);
    r["eps_avg_sigma_distance"] = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : INFINITY);
    out.write_json("report.json", r);
    std::ostringstream msg;
    msg << "empirical eps_avg = " << empirical.eps_avg.value << " +- " << se << " (model "
        << model.eps_avg.value << ")";
    return msg.str();
  };
}

// ---------------------------------------------------------------------------
// Efficiency

Job plan_efficiency(const RunConfig& cfg) {
  const ConfigNode e = cfg.top().at("efficiency");
  e.allow_only({"na", "stages", "measured"});
  EfficiencyBudget budget;
  budget.na = e.number("na");
  if (const auto stages = e.find("stages")) {
    for (const auto& st : stages->items()) {
      st.allow_only({"name", "transmission"});
      budget.stages.push_back({st.string("name"), st.number("transmission")});
    }
  }
  checked(e, [&] {
    budget.validate();
    return 0;
  });
  std::optional<std::pair<std::uint64_t, std::uint64_t>> measured;
  if (const auto m = e.find("measured")) {
    m->allow_only({"detections", "trials"});
    const auto k = m->count("detections");
    const auto n = m->count("trials");
    if (n < 1) m->at("trials").fail("trials must be >= 1");
    if (k > n) m->at("detections").fail("detections exceed trials");
    measured = {k, n};
  }
  return [budget, measured](OutputDir& out) {
    json r;
    r["experiment"] = "efficiency";
    r["na"] = budget.na;
    const double solid = na_to_solid_angle_fraction(budget.na);
    r["solid_angle_fraction"] = solid;
    json stages = json::array();
    double running = solid;
    for (const auto& st : budget.stages) {
      running *= st.transmission;
      stages.push_back({{"name", st.name},
                        {"transmission", st.transmission},
                        {"cumulative_efficiency", running}});
    }
    r["stages"] = stages;
    const double predicted = chain_efficiency(budget);
    r["predicted_efficiency"] = predicted;
    std::ostringstream msg;
    msg << "predicted efficiency " << predicted;
    if (measured) {
      const auto c = compare_with_measurement(predicted, measured->first, measured->second);
      r["measurement"] = {{"detections", measured->first},
                          {"trials", measured->second},
                          {"measured", estimate_json(c.measured)},
                          {"sigma_distance", c.sigma_distance},
                          {"degenerate_error", c.degenerate_error}};
      msg << ", measured " << c.measured.value << " +- " << c.measured.std_error << " ("
          << c.sigma_distance << " sigma)";
    }
    out.write_json("report.json", r);
    return msg.str();
  };
}

// ---------------------------------------------------------------------------
// Coherence

NoiseModel parse_noise(const ConfigNode& top) {
  NoiseModel model;
  for (const auto& c : top.at("noise").items()) {
    const std::string type = c.string("type");
    if (type == "static") {
      c.allow_only({"type", "delta0_hz"});
      model.components.emplace_back(StaticOffset{c.number("delta0_hz")});
    } else if (type == "quasi_static") {
      c.allow_only({"type", "sigma_hz"});
      model.components.emplace_back(QuasiStaticGaussian{c.number("sigma_hz")});
    } else if (type == "ou") {
      c.allow_only({"type", "sigma_hz", "tau_c_s"});
      model.components.emplace_back(OrnsteinUhlenbeck{c.number("sigma_hz"), c.number("tau_c_s")});
    } else {
      c.at("type").fail("unknown noise type '" + type + "' (static, quasi_static, ou)");
    }
  }
  checked(top.at("noise"), [&] {
    model.validate();
    return 0;
  });
  return model;
}

json noise_json(const NoiseModel& m) {
  json out = json::array();
  for (const auto& c : m.components) {
    if (const auto* s = std::get_if<StaticOffset>(&c)) {
      out.push_back({{"type", "static"}, {"delta0_hz", s->delta0_hz}});
    } else if (const auto* q = std::get_if<QuasiStaticGaussian>(&c)) {
      out.push_back({{"type", "quasi_static"}, {"sigma_hz", q->sigma_hz}});
    } else if (const auto* o = std::get_if<OrnsteinUhlenbeck>(&c)) {
      out.push_back({{"type", "ou"}, {"sigma_hz", o->sigma_hz}, {"tau_c_s", o->tau_c}});
    }
  }
  return out;
}

PropagationMode parse_mode(const ConfigNode& n) {
  const auto s = n.as_string();
  if (s == "automatic") return PropagationMode::automatic;
  if (s == "fast") return PropagationMode::fast;
  if (s == "full") return PropagationMode::full;
  n.fail("mode must be automatic, fast or full");
}

Job plan_coherence_scan(const RunConfig& cfg, std::uint64_t seed, unsigned threads) {
  const ConfigNode top = cfg.top();
  const NoiseModel model = parse_noise(top);
  const ConfigNode c = top.at("coherence");
  c.allow_only({"sequences", "delays_ms", "pi_time_us", "amplitude_error", "detuning_offset_hz",
                "gradient", "trials", "mode"});

  std::vector<SequenceSpec> specs;
  for (const auto& item : c.at("sequences").items()) {
    specs.push_back(checked(item, [&] { return SequenceSpec::parse(item.as_string()); }));
  }
  if (specs.empty()) c.at("sequences").fail("list at least one sequence");

  ScanSettings base;
  base.pi_time = c.number("pi_time_us", 0.0) * 1e-6;
  if (!(base.pi_time >= 0.0)) c.at("pi_time_us").fail("pi_time_us must be >= 0");
  base.pulse_errors.amplitude_error = c.number("amplitude_error", 0.0);
  base.pulse_errors.detuning_offset_hz = c.number("detuning_offset_hz", 0.0);
  std::optional<double> gradient_offset;
  if (const auto g = c.find("gradient")) {
    g->allow_only({"gradient_g_per_m", "sensitivity_hz_per_g", "displacement_um"});
    const GradientSpec spec{g->number("gradient_g_per_m"), g->number("sensitivity_hz_per_g")};
    gradient_offset = gradient_detuning(spec, g->number("displacement_um") * 1e-6);
    base.pulse_errors.detuning_offset_hz += *gradient_offset;
  }
  base.trials = c.count("trials", 10000);
  if (base.trials < 100) c.at("trials").fail("trials must be >= 100");
  if (const auto m = c.find("mode")) base.mode = parse_mode(*m);
  const bool ideal = base.pi_time == 0.0 && base.pulse_errors.amplitude_error == 0.0 &&
                     base.pulse_errors.detuning_offset_hz == 0.0;
  if (base.mode == PropagationMode::fast && !ideal) {
    c.at("mode").fail("fast mode needs instantaneous, error-free pulses");
  }

  std::optional<std::vector<double>> delays;
  if (c.has("delays_ms")) {
    delays = c.numbers("delays_ms");
    for (double& d : *delays) d *= 1e-3;
    for (std::size_t i = 0; i < delays->size(); ++i) {
      if (!((*delays)[i] > 0.0) || (i > 0 && !((*delays)[i] > (*delays)[i - 1]))) {
        c.at("delays_ms").fail("delays must be positive and strictly increasing");
      }
    }
    if (delays->empty()) c.at("delays_ms").fail("list at least one delay");
  }

  std::vector<ScanSettings> scans;
  for (const auto& spec : specs) {
    ScanSettings s = base;
    s.sequence = spec;
    s.delays = delays ? *delays : default_delays(spec);
    checked(c, [&] {
      for (double d : s.delays) build_sequence(spec, d, s.pi_time, s.pulse_errors);
      return 0;
    });
    scans.push_back(s);
  }

  return [model, scans, seed, threads, gradient_offset](OutputDir& out) {
    json r;
    r["experiment"] = "coherence-scan";
    r["noise"] = noise_json(model);
    if (gradient_offset) r["gradient_detuning_hz"] = *gradient_offset;
    json results = json::array();
    std::ostringstream msg;
    for (std::size_t i = 0; i < scans.size(); ++i) {
      const auto& s = scans[i];
      const auto curve = coherence_scan(model, s, derive_stream(seed, 100 + i), threads);
      const std::string file = "coherence_" + s.sequence.name() + ".csv";
      out.write(file, curve_to_csv(curve));
      json entry{{"sequence", s.sequence.name()},
                 {"file", file},
                 {"pi_pulses", build_sequence(s.sequence, s.delays.front(), 0.0).pi_pulse_count()},
                 {"pi_time_s", s.pi_time},
                 {"trials", s.trials}};
      try {
        const auto fit = fit_coherence(curve);
        entry["fit"] = fit_json(fit);
        msg << s.sequence.name() << " tau_d = " << fit.tau_d.value << " s; ";
      } catch (const UnboundedFitError& e) {
        entry["fit_error"] = e.what();
        msg << s.sequence.name() << " shows no decay; ";
      } catch (const FitError& e) {
        entry["fit_error"] = e.what();
        msg << s.sequence.name() << " fit failed; ";
      }
      results.push_back(entry);
    }
    r["scans"] = results;
    out.write_json("report.json", r);
    return msg.str();
  };
}

Job plan_coherence_fit(const RunConfig& cfg) {
  const ConfigNode f = cfg.top().at("coherence_fit");
  f.allow_only({"input"});
  const ConfigNode input = f.at("input");
  const auto curve =
      checked(input, [&] { return curve_from_csv(read_file(input, cfg.resolve(input.as_string()))); });
  return [curve](OutputDir& out) {
    const auto fit = fit_coherence(curve);
    json r;
    r["experiment"] = "coherence-fit";
    r["points"] = curve.points.size();
    r["fit"] = fit_json(fit);
    out.write_json("report.json", r);
    std::ostringstream msg;
    msg << "tau_d = " << fit.tau_d.value << " +- " << fit.tau_d.std_error << " s";
    return msg.str();
  };
}

// ---------------------------------------------------------------------------
// Vibration

Job plan_vibration_analyze(const RunConfig& cfg) {
  const ConfigNode v = cfg.top().at("vibration");
  v.allow_only({"input", "cutoff_mhz", "min_peak_nm", "fundamental_hz"});
  const ConfigNode input = v.at("input");
  const auto series = checked(input, [&] {
    return series_from_csv(read_file(input, cfg.resolve(input.as_string())));
  });
  const double cutoff = v.number("cutoff_mhz", 30.0) * 1e-3;
  if (!(cutoff > 0.0) || !(cutoff < series.sample_rate / 2.0)) {
    (v.has("cutoff_mhz") ? v.at("cutoff_mhz") : v).fail("cutoff must lie in (0, sample_rate / 2)");
  }
  const double min_peak = v.number("min_peak_nm", 0.1);
  if (!(min_peak >= 0.0)) v.at("min_peak_nm").fail("min_peak_nm must be >= 0");
  std::optional<double> fundamental;
  if (v.has("fundamental_hz")) {
    fundamental = v.number("fundamental_hz");
    if (!(*fundamental > 0.0)) v.at("fundamental_hz").fail("fundamental_hz must be > 0");
  }
  return [series, cutoff, min_peak, fundamental](OutputDir& out) {
    const auto filtered = high_pass(series, cutoff);
    const auto spectrum = amplitude_spectrum(filtered);
    const auto peaks = find_peaks(spectrum, min_peak, fundamental);
    out.write("filtered.csv", series_to_csv(filtered));
    out.write("spectrum.csv", spectrum_to_csv(spectrum));
    out.write("peaks.csv", peaks_to_csv(peaks));
    const auto fd = describe_high_pass(cutoff);
    json r;
    r["experiment"] = "vibration-analyze";
    r["samples"] = series.samples.size();
    r["sample_rate_hz"] = series.sample_rate;
    r["duration_s"] = series.duration();
    r["rbw_hz"] = spectrum.rbw;
    r["rms_raw_nm"] = rms(series);
    r["rms_filtered_nm"] = rms(filtered);
    r["filter"] = {{"topology", fd.topology},
                   {"order", fd.order},
                   {"effective_order", fd.effective_order},
                   {"detrend", fd.detrend},
                   {"boundary", fd.boundary},
                   {"cutoff_hz", fd.cutoff_hz}};
    r["peak_count"] = peaks.size();
    out.write_json("report.json", r);
    std::ostringstream msg;
    msg << "filtered RMS " << rms(filtered) << " nm, " << peaks.size() << " peaks";
    return msg.str();
  };
}

Job plan_vibration_synth(const RunConfig& cfg, std::uint64_t seed) {
  const ConfigNode v = cfg.top().at("vibration_synth");
  v.allow_only({"duration_s", "sample_rate_hz", "drift_nm_per_s", "noise_rms_nm", "tones"});
  const double duration = v.number("duration_s");
  const double fs = v.number("sample_rate_hz", 1000.0);
  const double drift = v.number("drift_nm_per_s", 0.0);
  const double noise = v.number("noise_rms_nm", 0.0);
  if (!(duration > 0.0)) v.at("duration_s").fail("duration_s must be > 0");
  if (!(fs > 0.0)) v.at("sample_rate_hz").fail("sample_rate_hz must be > 0");
  if (!(noise >= 0.0)) v.at("noise_rms_nm").fail("noise_rms_nm must be >= 0");
  if (duration * fs < 2.0) v.fail("record must hold at least 2 samples");
  std::vector<Tone> tones;
  if (const auto t = v.find("tones")) {
    for (const auto& item : t->items()) {
      item.allow_only({"frequency_hz", "amplitude_nm", "phase_rad"});
      const Tone tone{item.number("frequency_hz"), item.number("amplitude_nm"),
                      item.number("phase_rad", 0.0)};
      if (!(tone.frequency > 0.0) || !(tone.frequency < fs / 2.0)) {
        item.at("frequency_hz").fail("tone frequency must lie in (0, sample_rate / 2)");
      }
      tones.push_back(tone);
    }
  }
  return [=](OutputDir& out) {
    const auto series = synthesize(tones, drift, noise, duration, fs, derive_stream(seed, 200));
    out.write("series.csv", series_to_csv(series));
    json r;
    r["experiment"] = "vibration-synth";
    r["samples"] = series.samples.size();
    r["sample_rate_hz"] = fs;
    r["rms_nm"] = rms(series);
    out.write_json("report.json", r);
    return std::to_string(series.samples.size()) + " samples written";
  };
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "detect-model",   "detect-sim",    "threshold-scan",    "efficiency",
      "coherence-scan", "coherence-fit", "vibration-analyze", "vibration-synth"};
  return names;
}

RunResult run_experiment(const RunRequest& request) {
  const RunConfig cfg = load_config(request.config);
  const ConfigNode top = cfg.top();

  std::string experiment = request.experiment;
  if (experiment.empty()) experiment = cfg.experiment;
  if (experiment.empty()) top.fail("no experiment given on the command line or in the config");
  if (!cfg.experiment.empty() && cfg.experiment != experiment) {
    top.at("experiment").fail("config is for '" + cfg.experiment + "', not '" + experiment + "'");
  }
  const std::uint64_t seed = request.seed ? *request.seed : cfg.seed.value_or(kDefaultSeed);
  const unsigned threads = std::max(1u, request.threads);

  std::vector<std::string> sections{"schema_version", "experiment", "seed"};
  Job job;
  if (experiment == "detect-model") {
    sections.push_back("detection");
    job = plan_detect_model(cfg);
  } else if (experiment == "threshold-scan") {
    sections.push_back("detection");
    job = plan_threshold_scan(cfg);
  } else if (experiment == "detect-sim") {
    sections.push_back("detection");
    job = plan_detect_sim(cfg, seed, threads);
  } else if (experiment == "efficiency") {
    sections.push_back("efficiency");
    job = plan_efficiency(cfg);
  } else if (experiment == "coherence-scan") {
    sections.insert(sections.end(), {"noise", "coherence"});
    job = plan_coherence_scan(cfg, seed, threads);
  } else if (experiment == "coherence-fit") {
    sections.push_back("coherence_fit");
    job = plan_coherence_fit(cfg);
  } else if (experiment == "vibration-analyze") {
    sections.push_back("vibration");
    job = plan_vibration_analyze(cfg);
  } else if (experiment == "vibration-synth") {
    sections.push_back("vibration_synth");
    job = plan_vibration_synth(cfg, seed);
  } else {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  for (const auto& kv : cfg.root) {
    const auto key = kv.first.as<std::string>();
    if (std::find(sections.begin(), sections.end(), key) == sections.end()) {
      ConfigNode(kv.first, key, cfg.path.filename().string())
          .fail("not used by experiment '" + experiment + "'");
    }
  }

  OutputDir out(request.out_dir);
  RunResult result;
  result.experiment = experiment;
  result.seed = seed;
  result.summary = job(out);
  out.write_json("manifest.json",
                 make_manifest(experiment, seed, cfg.path.filename().string(), cfg.raw, out));
  for (const auto& [name, sum] : out.checksums()) {
    if (name != "manifest.json") result.files.push_back(name);
  }
  result.files.push_back("manifest.json");
  return result;
}

}  // namespace trapsim::runner
