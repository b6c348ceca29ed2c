#include "coherence.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "errors.hpp"
#include "parallel.hpp"

namespace trapsim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// 2u - 3 + 4e^(-u) - e^(-2u), the scaled conditional variance of the OU
// integral. The power series avoids cancellation for small u.
double ou_integral_variance_factor(double u) {
  if (u < 0.5) {
    double sum = 0.0;
    double power = u * u;  // u^2
    double factorial = 2.0;
    for (int k = 3; k < 30; ++k) {
      power *= u;
      factorial *= k;
      const double sign_four = (k % 2 == 0) ? 4.0 : -4.0;
      const double two_k = std::ldexp(1.0, k);
      const double minus_two_pow = (k % 2 == 0) ? two_k : -two_k;
      const double term = (sign_four - minus_two_pow) / factorial * power;
      sum += term;
      if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
    }
    return sum;
  }
  const double a = std::exp(-u);
  return 2.0 * u - 3.0 + 4.0 * a - a * a;
}

using Spinor = std::array<std::complex<double>, 2>;

struct Su2 {
  std::complex<double> a, b, c, d;  // [[a, b], [c, d]]

  Spinor operator*(const Spinor& v) const { return {a * v[0] + b * v[1], c * v[0] + d * v[1]}; }
};

// exp(-i theta/2 n.sigma) for a unit axis n.
Su2 rotation(double theta, double nx, double ny, double nz) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const std::complex<double> i{0.0, 1.0};
  return {c - i * s * nz, -i * s * std::complex<double>(nx, -ny),
          -i * s * std::complex<double>(nx, ny), c + i * s * nz};
}

// Free precession by accumulated phase phi (rad) about z.
Spinor precess(const Spinor& v, double phi) {
  return {v[0] * std::polar(1.0, -0.5 * phi), v[1] * std::polar(1.0, 0.5 * phi)};
}

// Pulse propagator for one time slice with constant detuning (Hz).
Su2 pulse_slice(const Pulse& p, double slice, double detuning_hz, double phase) {
  if (p.duration <= 0.0) {
    return rotation(p.angle * (1.0 + p.amplitude_error), std::cos(phase), std::sin(phase), 0.0);
  }
  const double rabi = p.angle / p.duration * (1.0 + p.amplitude_error);
  const double delta = kTwoPi * (detuning_hz + p.detuning_offset_hz);
  const double omega_x = rabi * std::cos(phase);
  const double omega_y = rabi * std::sin(phase);
  const double generalized = std::sqrt(rabi * rabi + delta * delta);
  if (generalized == 0.0) return {1.0, 0.0, 0.0, 1.0};
  return rotation(generalized * slice, omega_x / generalized, omega_y / generalized,
                  delta / generalized);
}

int pulse_slices(const Pulse& p) {
  if (p.duration <= 0.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(20.0 * p.angle / kPi - 1e-9)));
}

bool is_angle(double angle, double target) { return std::fabs(angle - target) < 1e-12; }

constexpr int kAnalysisPhases = 8;

// Shared driver. `advance(h)` returns the detuning integral (Hz*s) over the
// next h seconds.
template <class Advance>
PropagationResult run_sequence(const PulseSequence& seq, Advance&& advance, PropagationMode mode) {
  if (seq.elements.empty() || !std::holds_alternative<Pulse>(seq.elements.back())) {
    throw DomainError("pulse sequence must end with a pulse");
  }
  if (mode == PropagationMode::automatic) {
    mode = seq.has_ideal_pulses() ? PropagationMode::fast : PropagationMode::full;
  }
  PropagationResult result;

  if (mode == PropagationMode::fast) {
    if (!seq.has_ideal_pulses()) {
      throw DomainError("fast propagation needs instantaneous, error-free pulses");
    }
    double sign = 1.0;
    double phase = 0.0;
    for (const auto& el : seq.elements) {
      if (const auto* d = std::get_if<Delay>(&el)) {
        phase += sign * kTwoPi * advance(d->duration);
      } else {
        const auto& p = std::get<Pulse>(el);
        if (is_angle(p.angle, kPi)) {
          sign = -sign;
        } else if (!is_angle(p.angle, kPi / 2.0)) {
          throw DomainError("fast propagation supports only pi/2 and pi pulses");
        }
      }
    }
    result.population = 0.5 * (1.0 + std::cos(phase));
    result.fringe = std::polar(1.0, phase);
    return result;
  }

  Spinor psi{1.0, 0.0};
  const std::size_t last = seq.elements.size() - 1;
  for (std::size_t k = 0; k < last; ++k) {
    const auto& el = seq.elements[k];
    if (const auto* d = std::get_if<Delay>(&el)) {
      psi = precess(psi, kTwoPi * advance(d->duration));
      continue;
    }
    const auto& p = std::get<Pulse>(el);
    const int slices = pulse_slices(p);
    const double h = p.duration / slices;
    for (int s = 0; s < slices; ++s) {
      const double detuning = h > 0.0 ? advance(h) / h : 0.0;
      psi = pulse_slice(p, h, detuning, p.phase) * psi;
    }
  }

  const auto& final_pulse = std::get<Pulse>(seq.elements[last]);
  const int slices = pulse_slices(final_pulse);
  const double h = final_pulse.duration / slices;
  std::vector<double> detunings(static_cast<std::size_t>(slices));
  for (auto& d : detunings) d = h > 0.0 ? advance(h) / h : 0.0;

  auto finish = [&](double phase) {
    Spinor out = psi;
    for (double d : detunings) out = pulse_slice(final_pulse, h, d, phase) * out;
    return out;
  };

  const Spinor out = finish(final_pulse.phase);
  result.population = std::norm(out[1]);
  result.norm = std::sqrt(std::norm(out[0]) + std::norm(out[1]));

  // Fringe: P_k = (1 + C cos(phi_k + phi_0)) / 2 over analysis phases phi_k,
  // so 4 * mean(P_k e^(-i phi_k)) = C e^(i phi_0).
  std::complex<double> acc{0.0, 0.0};
  for (int k = 0; k < kAnalysisPhases; ++k) {
    const double offset = kTwoPi * k / kAnalysisPhases;
    acc += std::norm(finish(final_pulse.phase + offset)[1]) * std::polar(1.0, -offset);
  }
  result.fringe = 4.0 * acc / static_cast<double>(kAnalysisPhases);
  return result;
}

// Piecewise-linear integral over a sampled trajectory, read forward.
class TrajectoryCursor {
 public:
  explicit TrajectoryCursor(const DetuningTrajectory& tr) : tr_(tr) {
    cumulative_.resize(tr.values_hz.size(), 0.0);
    for (std::size_t k = 1; k < tr.values_hz.size(); ++k) {
      cumulative_[k] = cumulative_[k - 1] + 0.5 * tr.dt * (tr.values_hz[k - 1] + tr.values_hz[k]);
    }
  }

  double advance(double h) {
    const double start = primitive(t_);
    t_ += h;
    return primitive(t_) - start;
  }

 private:
  double primitive(double t) const {
    const auto& v = tr_.values_hz;
    if (v.size() < 2) return v.empty() ? 0.0 : v[0] * t;
    const double pos = t / tr_.dt;
    auto k = static_cast<std::size_t>(std::floor(pos));
    k = std::min(k, v.size() - 2);
    const double u = pos - static_cast<double>(k);
    return cumulative_[k] + tr_.dt * (u * v[k] + 0.5 * u * u * (v[k + 1] - v[k]));
  }

  const DetuningTrajectory& tr_;
  std::vector<double> cumulative_;
  double t_ = 0.0;
};

}  // namespace

// ---------------------------------------------------------------------------
// Noise

void NoiseModel::validate() const {
  for (const auto& c : components) {
    std::visit(Overloaded{
                   [](const StaticOffset& s) {
                     if (!std::isfinite(s.delta0_hz)) throw DomainError("delta0 must be finite");
                   },
                   [](const QuasiStaticGaussian& q) {
                     if (!(q.sigma_hz >= 0.0) || !std::isfinite(q.sigma_hz)) {
                       throw DomainError("quasi-static sigma must be finite and >= 0");
                     }
                   },
                   [](const OrnsteinUhlenbeck& o) {
                     if (!(o.sigma_hz >= 0.0) || !std::isfinite(o.sigma_hz)) {
                       throw DomainError("OU sigma must be finite and >= 0");
                     }
                     if (!(o.tau_c > 0.0)) throw DomainError("OU tau_c must be > 0");
                   }},
               c);
  }
}

double NoiseModel::shortest_correlation_time() const {
  double shortest = std::numeric_limits<double>::infinity();
  for (const auto& c : components) {
    if (const auto* o = std::get_if<OrnsteinUhlenbeck>(&c)) shortest = std::min(shortest, o->tau_c);
  }
  return shortest;
}

NoiseRealization::NoiseRealization(const NoiseModel& model, RandomStream stream) : rng_(stream) {
  model.validate();
  for (const auto& c : model.components) {
    std::visit(Overloaded{[&](const StaticOffset& s) { constant_ += s.delta0_hz; },
                          [&](const QuasiStaticGaussian& q) {
                            constant_ += q.sigma_hz * rng_.normal();
                          },
                          [&](const OrnsteinUhlenbeck& o) {
                            ou_.push_back({o.sigma_hz, o.tau_c, o.sigma_hz * rng_.normal()});
                          }},
               c);
  }
}

double NoiseRealization::value() const {
  double v = constant_;
  for (const auto& o : ou_) v += o.x;
  return v;
}

double NoiseRealization::advance(double h) {
  if (h < 0.0) throw DomainError("cannot advance noise backwards in time");
  double integral = constant_ * h;
  if (h == 0.0) return integral;
  for (auto& o : ou_) {
    const double u = h / o.tau_c;
    const double a = std::exp(-u);
    const double one_minus_a = -std::expm1(-u);
    const double var_x = o.sigma * o.sigma * -std::expm1(-2.0 * u);
    const double var_i = o.sigma * o.sigma * o.tau_c * o.tau_c * ou_integral_variance_factor(u);
    const double cov = o.sigma * o.sigma * o.tau_c * one_minus_a * one_minus_a;
    const double mean_x = a * o.x;
    const double mean_i = o.x * o.tau_c * one_minus_a;
    const double z1 = rng_.normal();
    const double z2 = rng_.normal();
    const double dx = var_x > 0.0 ? std::sqrt(var_x) * z1 : 0.0;
    const double cond_var = var_x > 0.0 ? std::max(var_i - cov * cov / var_x, 0.0) : var_i;
    const double di = (var_x > 0.0 ? cov / var_x * dx : 0.0) + std::sqrt(cond_var) * z2;
    o.x = mean_x + dx;
    integral += mean_i + di;
  }
  return integral;
}

DetuningTrajectory sample_trajectory(const NoiseModel& model, double duration, double dt,
                                     RandomStream stream) {
  if (!(dt > 0.0) || !(dt <= duration) || !std::isfinite(duration)) {
    throw DomainError("sample_trajectory needs 0 < dt <= duration");
  }
  model.validate();
  CounterRng rng(stream);
  double constant = 0.0;
  std::vector<OrnsteinUhlenbeck> ou;
  std::vector<double> state;
  for (const auto& c : model.components) {
    std::visit(Overloaded{[&](const StaticOffset& s) { constant += s.delta0_hz; },
                          [&](const QuasiStaticGaussian& q) { constant += q.sigma_hz * rng.normal(); },
                          [&](const OrnsteinUhlenbeck& o) {
                            ou.push_back(o);
                            state.push_back(o.sigma_hz * rng.normal());
                          }},
               c);
  }
  const auto steps = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
  DetuningTrajectory tr;
  tr.dt = dt;
  tr.values_hz.reserve(steps + 1);
  std::vector<double> decay(ou.size());
  std::vector<double> kick(ou.size());
  for (std::size_t j = 0; j < ou.size(); ++j) {
    decay[j] = std::exp(-dt / ou[j].tau_c);
    kick[j] = ou[j].sigma_hz * std::sqrt(-std::expm1(-2.0 * dt / ou[j].tau_c));
  }
  for (std::size_t k = 0; k <= steps; ++k) {
    double v = constant;
    for (double x : state) v += x;
    tr.values_hz.push_back(v);
    for (std::size_t j = 0; j < ou.size(); ++j) state[j] = state[j] * decay[j] + kick[j] * rng.normal();
  }
  return tr;
}

double default_time_step(const NoiseModel& model, double shortest_delay, double pi_time) {
  double dt = std::min(model.shortest_correlation_time() / 100.0, shortest_delay / 100.0);
  if (pi_time > 0.0) dt = std::min(dt, pi_time / 20.0);
  return dt;
}

// ---------------------------------------------------------------------------
// Sequences

double PulseSequence::duration() const {
  double t = 0.0;
  for (const auto& el : elements) {
    std::visit([&](const auto& e) { t += e.duration; }, el);
  }
  return t;
}

std::size_t PulseSequence::pi_pulse_count() const {
  return static_cast<std::size_t>(std::count_if(elements.begin(), elements.end(), [](const auto& el) {
    const auto* p = std::get_if<Pulse>(&el);
    return p != nullptr && is_angle(p->angle, kPi);
  }));
}

std::vector<double> PulseSequence::delays() const {
  std::vector<double> out;
  for (const auto& el : elements) {
    if (const auto* d = std::get_if<Delay>(&el)) out.push_back(d->duration);
  }
  return out;
}

bool PulseSequence::has_ideal_pulses() const {
  return std::all_of(elements.begin(), elements.end(), [](const auto& el) {
    const auto* p = std::get_if<Pulse>(&el);
    return p == nullptr ||
           (p->duration == 0.0 && p->amplitude_error == 0.0 && p->detuning_offset_hz == 0.0);
  });
}

std::string SequenceSpec::name() const {
  switch (kind) {
    case SequenceKind::ramsey: return "ramsey";
    case SequenceKind::hahn: return "hahn";
    case SequenceKind::xy4: return "xy4";
    case SequenceKind::xyn: return "xy" + std::to_string(4 * cycles);
  }
  return "unknown";
}

SequenceSpec SequenceSpec::parse(const std::string& name) {
  if (name == "ramsey") return {SequenceKind::ramsey, 1};
  if (name == "hahn") return {SequenceKind::hahn, 1};
  if (name == "xy4") return {SequenceKind::xy4, 1};
  if (name.size() > 2 && name.starts_with("xy") &&
      name.find_first_not_of("0123456789", 2) == std::string::npos) {
    const unsigned long pulses = std::stoul(name.substr(2));
    if (pulses >= 4 && pulses % 4 == 0) {
      return {SequenceKind::xyn, static_cast<unsigned>(pulses / 4)};
    }
  }
  throw DomainError("unknown sequence kind '" + name +
                    "' (expected ramsey, hahn, xy4 or xy<4c> such as xy32)");
}

void align_final_pulse(PulseSequence& sequence) {
  if (sequence.elements.empty() || !std::holds_alternative<Pulse>(sequence.elements.back())) {
    throw DomainError("pulse sequence must end with a pulse");
  }
  Spinor psi{1.0, 0.0};
  for (std::size_t k = 0; k + 1 < sequence.elements.size(); ++k) {
    if (const auto* p = std::get_if<Pulse>(&sequence.elements[k])) {
      psi = rotation(p->angle, std::cos(p->phase), std::sin(p->phase), 0.0) * psi;
    }
  }
  // Bloch vector; a pi/2 pulse about azimuth phi maps an equatorial vector at
  // azimuth phi - pi/2 onto -z.
  const std::complex<double> coherence = std::conj(psi[0]) * psi[1];
  const double azimuth = std::atan2(2.0 * coherence.imag(), 2.0 * coherence.real());
  double phase = std::fmod(azimuth + kPi / 2.0, kTwoPi);
  if (phase < 0.0) phase += kTwoPi;
  if (std::fabs(phase - kTwoPi) < 1e-12 || std::fabs(phase) < 1e-12) phase = 0.0;
  std::get<Pulse>(sequence.elements.back()).phase = phase;
}

PulseSequence build_sequence(SequenceSpec spec, double total_delay, double pi_time,
                             const PulseErrors& errors) {
  if (!(total_delay > 0.0) || !std::isfinite(total_delay)) {
    throw DomainError("total_delay must be positive and finite");
  }
  if (!(pi_time >= 0.0) || !std::isfinite(pi_time)) throw DomainError("pi_time must be >= 0");
  if (spec.kind == SequenceKind::xyn && spec.cycles < 1) {
    throw DomainError("xyn needs at least one cycle");
  }

  auto make_pulse = [&](double phase, double angle) {
    return Pulse{phase, angle, pi_time * angle / kPi, errors.amplitude_error,
                 errors.detuning_offset_hz};
  };

  std::vector<double> refocus_phases;
  switch (spec.kind) {
    case SequenceKind::ramsey: break;
    case SequenceKind::hahn: refocus_phases = {0.0}; break;
    case SequenceKind::xy4: spec.cycles = 1; [[fallthrough]];
    case SequenceKind::xyn:
      for (unsigned c = 0; c < spec.cycles; ++c) {
        refocus_phases.insert(refocus_phases.end(), {0.0, kPi / 2.0, 0.0, kPi / 2.0});
      }
      break;
  }

  const std::size_t n_pi = refocus_phases.size();
  if (static_cast<double>(n_pi) * pi_time > total_delay) {
    throw DomainError("infeasible sequence: " + std::to_string(n_pi) + " pi pulses of " +
                      std::to_string(pi_time) + " s exceed the free evolution of " +
                      std::to_string(total_delay) + " s");
  }

  PulseSequence seq;
  seq.elements.push_back(make_pulse(0.0, kPi / 2.0));
  if (n_pi == 0) {
    seq.elements.push_back(Delay{total_delay});
  } else {
    const double spacing = total_delay / static_cast<double>(n_pi);
    for (std::size_t j = 0; j < n_pi; ++j) {
      seq.elements.push_back(Delay{j == 0 ? spacing / 2.0 : spacing});
      seq.elements.push_back(make_pulse(refocus_phases[j], kPi));
    }
    // Last gap closes the budget so the delays sum to total_delay exactly.
    seq.elements.push_back(Delay{spacing / 2.0});
  }
  seq.elements.push_back(make_pulse(0.0, kPi / 2.0));

  double sum = 0.0;
  for (const auto& el : seq.elements) {
    if (const auto* d = std::get_if<Delay>(&el)) sum += d->duration;
  }
  seq.total_free_evolution = sum;
  align_final_pulse(seq);
  return seq;
}

// ---------------------------------------------------------------------------
// Propagation

PropagationResult propagate(const PulseSequence& sequence, const DetuningTrajectory& trajectory,
                            PropagationMode mode) {
  const double needed = sequence.duration();
  if (trajectory.values_hz.empty() || trajectory.duration() < needed * (1.0 - 1e-12)) {
    throw DomainError("trajectory covers " + std::to_string(trajectory.duration()) +
                      " s but the sequence lasts " + std::to_string(needed) + " s");
  }
  TrajectoryCursor cursor(trajectory);
  return run_sequence(sequence, [&](double h) { return cursor.advance(h); }, mode);
}

PropagationResult propagate(const PulseSequence& sequence, NoiseRealization& noise,
                            PropagationMode mode) {
  return run_sequence(sequence, [&](double h) { return noise.advance(h); }, mode);
}

double single_pulse_transfer(const Pulse& pulse, double detuning_hz) {
  Spinor psi{1.0, 0.0};
  const int slices = pulse_slices(pulse);
  const double h = pulse.duration / slices;
  for (int s = 0; s < slices; ++s) psi = pulse_slice(pulse, h, detuning_hz, pulse.phase) * psi;
  return std::norm(psi[1]);
}

// ---------------------------------------------------------------------------
// Scans

namespace {

struct PhasorMoments {
  double re = 0.0, im = 0.0, re2 = 0.0, im2 = 0.0, reim = 0.0;

  void add(std::complex<double> z) {
    re += z.real();
    im += z.imag();
    re2 += z.real() * z.real();
    im2 += z.imag() * z.imag();
    reim += z.real() * z.imag();
  }
  void merge(const PhasorMoments& o) {
    re += o.re;
    im += o.im;
    re2 += o.re2;
    im2 += o.im2;
    reim += o.reim;
  }
};

}  // namespace

CoherenceCurve coherence_scan(const NoiseModel& model, const ScanSettings& settings,
                              RandomStream stream, unsigned threads) {
  model.validate();
  if (settings.trials < 100) throw DomainError("coherence_scan needs at least 100 trials");
  if (settings.delays.empty()) throw DomainError("coherence_scan needs at least one delay");
  for (std::size_t i = 0; i < settings.delays.size(); ++i) {
    if (!(settings.delays[i] > 0.0) || (i > 0 && !(settings.delays[i] > settings.delays[i - 1]))) {
      throw DomainError("delays must be positive and strictly increasing");
    }
  }
  PropagationMode mode = settings.mode;
  const bool ideal = settings.pi_time == 0.0 && settings.pulse_errors.amplitude_error == 0.0 &&
                     settings.pulse_errors.detuning_offset_hz == 0.0;
  if (mode == PropagationMode::automatic) mode = ideal ? PropagationMode::fast : PropagationMode::full;
  if (mode == PropagationMode::fast && !ideal) {
    throw DomainError("fast mode needs pi_time = 0 and no pulse errors");
  }

  CoherenceCurve curve;
  const double n = static_cast<double>(settings.trials);
  for (std::size_t i = 0; i < settings.delays.size(); ++i) {
    const PulseSequence seq =
        build_sequence(settings.sequence, settings.delays[i], settings.pi_time, settings.pulse_errors);
    const RandomStream delay_stream = stream.child(i);
    std::vector<PhasorMoments> partial(block_count(settings.trials));
    for_each_block(settings.trials, threads, [&](std::size_t b, std::uint64_t first, std::uint64_t last) {
      for (std::uint64_t j = first; j < last; ++j) {
        NoiseRealization noise(model, delay_stream.child(j));
        partial[b].add(propagate(seq, noise, mode).fringe);
      }
    });
    PhasorMoments m;
    for (const auto& p : partial) m.merge(p);
    const std::complex<double> mean{m.re / n, m.im / n};
    const double contrast = std::abs(mean);
    const double alpha = contrast > 0.0 ? std::arg(mean) : 0.0;
    const double c = std::cos(alpha);
    const double s = std::sin(alpha);
    const double second = (c * c * m.re2 + s * s * m.im2 + 2.0 * c * s * m.reim) / n;
    const double variance = std::max(second - contrast * contrast, 0.0) * n / (n - 1.0);
    curve.points.push_back({settings.delays[i], std::min(contrast, 1.0), std::sqrt(variance / n)});
  }
  return curve;
}

GaussianDecayFit fit_coherence(const CoherenceCurve& curve) {
  return fit_gaussian_decay(curve.points);
}

std::string curve_to_csv(const CoherenceCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "delay_s,contrast,contrast_err\n";
  for (const auto& p : curve.points) out << p.t << ',' << p.contrast << ',' << p.contrast_err << '\n';
  return out.str();
}

CoherenceCurve curve_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DomainError("coherence CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "delay_s,contrast,contrast_err") {
    throw DomainError("coherence CSV header must be 'delay_s,contrast,contrast_err', got '" + line + "'");
  }
  CoherenceCurve curve;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    DecayPoint p;
    char c1 = 0, c2 = 0;
    if (!(row >> p.t >> c1 >> p.contrast >> c2 >> p.contrast_err) || c1 != ',' || c2 != ',') {
      throw DomainError("coherence CSV line " + std::to_string(line_no) +
                        ": expected '<delay_s>,<contrast>,<contrast_err>'");
    }
    if (!curve.points.empty() && !(p.t > curve.points.back().t)) {
      throw DomainError("coherence CSV line " + std::to_string(line_no) +
                        ": delays must be strictly increasing");
    }
    if (p.contrast_err < 0.0) {
      throw DomainError("coherence CSV line " + std::to_string(line_no) + ": negative error");
    }
    curve.points.push_back(p);
  }
  return curve;
}

NoiseModel default_composite_noise() {
  return NoiseModel{QuasiStaticGaussian{4.4}, OrnsteinUhlenbeck{5.0, 10.0},
                    OrnsteinUhlenbeck{4.2, 1e-3}};
}

std::vector<double> default_delays(SequenceSpec spec) {
  double longest = 0.06;
  switch (spec.kind) {
    case SequenceKind::ramsey: longest = 0.06; break;
    case SequenceKind::hahn: longest = 0.8; break;
    case SequenceKind::xy4: longest = 1.6; break;
    case SequenceKind::xyn: longest = 2.5; break;
  }
  constexpr int kPoints = 12;
  std::vector<double> delays;
  for (int k = 1; k <= kPoints; ++k) delays.push_back(longest * k / kPoints);
  return delays;
}

// ---------------------------------------------------------------------------

double gradient_detuning(const GradientSpec& spec, double displacement_m) {
  return spec.gradient_g_per_m * spec.sensitivity_hz_per_g * displacement_m;
}

double pi_time_to_rabi(double pi_time) {
  if (!(pi_time > 0.0) || !std::isfinite(pi_time)) {
    throw DomainError("pi_time must be positive and finite");
  }
  return kPi / pi_time;
}

}  // namespace trapsim
