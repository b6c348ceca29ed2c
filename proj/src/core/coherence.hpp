#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "numerics.hpp"
#include "random.hpp"

namespace trapsim {

// ---------------------------------------------------------------------------
// Detuning noise

struct StaticOffset {
  double delta0_hz = 0.0;
};

// Detuning constant within one shot, Gaussian across shots.
struct QuasiStaticGaussian {
  double sigma_hz = 0.0;
};

// Stationary Gaussian process with exponential autocorrelation
// sigma^2 exp(-|t - t'| / tau_c).
struct OrnsteinUhlenbeck {
  double sigma_hz = 0.0;
  double tau_c = 1.0;  // s
};

using NoiseComponent = std::variant<StaticOffset, QuasiStaticGaussian, OrnsteinUhlenbeck>;

// Sum of independent components. A single-component model is the plain
// static, quasi-static or OU case.
struct NoiseModel {
  std::vector<NoiseComponent> components;

  NoiseModel() = default;
  NoiseModel(std::initializer_list<NoiseComponent> c) : components(c) {}

  void validate() const;
  // Smallest OU correlation time, or +inf when there is no OU component.
  [[nodiscard]] double shortest_correlation_time() const;
};

// One noise trajectory, advanced forward in time. advance(h) returns the exact
// integral of the detuning over the next h seconds, sampled jointly with the
// OU end points, so the result does not depend on how time is subdivided.
class NoiseRealization {
 public:
  NoiseRealization(const NoiseModel& model, RandomStream stream);

  // Current detuning, Hz.
  [[nodiscard]] double value() const;
  // Integral of the detuning over [t, t + h] in Hz*s; moves t to t + h.
  double advance(double h);

 private:
  struct OuState {
    double sigma;
    double tau_c;
    double x;
  };

  CounterRng rng_;
  double constant_ = 0.0;
  std::vector<OuState> ou_;
};

struct DetuningTrajectory {
  double dt = 0.0;               // s
  std::vector<double> values_hz;  // detuning at t = k * dt

  [[nodiscard]] double duration() const {
    return values_hz.empty() ? 0.0 : dt * static_cast<double>(values_hz.size() - 1);
  }
};

// Grid samples at t = 0, dt, ..., covering `duration`. OU components use the
// exact update x' = x e^(-dt/tau_c) + sigma sqrt(1 - e^(-2 dt/tau_c)) xi from a
// stationary start.
DetuningTrajectory sample_trajectory(const NoiseModel& model, double duration, double dt,
                                     RandomStream stream);

// min(tau_c / 100, shortest_delay / 100, pi_time / 20 when pi_time > 0).
double default_time_step(const NoiseModel& model, double shortest_delay, double pi_time);

// ---------------------------------------------------------------------------
// Pulse sequences

struct Pulse {
  double phase = 0.0;     // rotation-axis azimuth, rad (0 = X, pi/2 = Y)
  double angle = 0.0;     // nominal rotation, rad, in (0, 2 pi]
  double duration = 0.0;  // s; 0 is an instantaneous pulse
  double amplitude_error = 0.0;
  double detuning_offset_hz = 0.0;
};

struct Delay {
  double duration = 0.0;  // s
};

using SequenceElement = std::variant<Pulse, Delay>;

struct PulseSequence {
  std::vector<SequenceElement> elements;
  double total_free_evolution = 0.0;

  [[nodiscard]] double duration() const;
  [[nodiscard]] std::size_t pi_pulse_count() const;
  [[nodiscard]] std::vector<double> delays() const;
  // True when every pulse is instantaneous and error-free.
  [[nodiscard]] bool has_ideal_pulses() const;
};

enum class SequenceKind { ramsey, hahn, xy4, xyn };

struct SequenceSpec {
  SequenceKind kind = SequenceKind::ramsey;
  unsigned cycles = 1;  // XY4 blocks for xyn

  [[nodiscard]] std::string name() const;
  // "ramsey", "hahn", "xy4", or "xy<4c>" such as "xy32".
  static SequenceSpec parse(const std::string& name);
};

struct PulseErrors {
  double amplitude_error = 0.0;
  double detuning_offset_hz = 0.0;
};

// pi/2 - [free evolution with refocusing pi pulses] - pi/2. XY blocks follow
// X, Y, X, Y with spacing T / (4 cycles) and half spacings at the ends. Pulse
// durations scale with pi_time (pi/2 pulses last pi_time / 2) and come on top
// of the free evolution, which sums to total_delay exactly. The final pi/2
// phase is chosen so the noiseless sequence ends in the excited state.
//
// Throws DomainError for total_delay <= 0 or pi_time < 0, and when the pi
// pulses would take longer than total_delay.
PulseSequence build_sequence(SequenceSpec spec, double total_delay, double pi_time,
                             const PulseErrors& errors = {});

// Resets the last pulse's phase so the error-free, noise-free sequence ends in
// the excited state.
void align_final_pulse(PulseSequence& sequence);

// ---------------------------------------------------------------------------
// Propagation

enum class PropagationMode { automatic, fast, full };

struct PropagationResult {
  // Fast mode: (1 + cos phi) / 2 of the toggled phase phi.
  // Full mode: excited-state population after the final pulse.
  double population = 0.0;
  double norm = 1.0;  // |psi| after the sequence (full mode)
  // Per-shot fringe phasor; |mean| over shots is the contrast.
  std::complex<double> fringe{1.0, 0.0};
};

// Evolves the sequence through a sampled detuning series (piecewise-linear
// between samples). Throws DomainError when the series is shorter than the
// sequence.
PropagationResult propagate(const PulseSequence& sequence, const DetuningTrajectory& trajectory,
                            PropagationMode mode = PropagationMode::automatic);

PropagationResult propagate(const PulseSequence& sequence, NoiseRealization& noise,
                            PropagationMode mode = PropagationMode::automatic);

// Excited population after a single pulse acting on the ground state with a
// static detuning (Hz).
double single_pulse_transfer(const Pulse& pulse, double detuning_hz = 0.0);

// ---------------------------------------------------------------------------
// Scans and fits

struct CoherenceCurve {
  std::vector<DecayPoint> points;  // (delay s, contrast, standard error)
};

struct ScanSettings {
  SequenceSpec sequence;
  std::vector<double> delays;  // s, strictly increasing
  double pi_time = 0.0;        // s
  PulseErrors pulse_errors;
  std::uint64_t trials = 10000;
  PropagationMode mode = PropagationMode::automatic;
};

// Contrast |<fringe>| per delay with the standard error of the projection of
// each shot's phasor on the mean direction. Delay i, trial j uses
// stream.child(i).child(j). Full mode recovers each shot's fringe from an
// 8-point scan of the final pulse phase.
CoherenceCurve coherence_scan(const NoiseModel& model, const ScanSettings& settings,
                              RandomStream stream, unsigned threads = 1);

GaussianDecayFit fit_coherence(const CoherenceCurve& curve);

std::string curve_to_csv(const CoherenceCurve& curve);
CoherenceCurve curve_from_csv(const std::string& text);

// Shipped composite noise: quasi-static plus a slow and a fast OU process,
// tuned so fitted coherence times order ramsey < hahn < xy4 <= xy32.
NoiseModel default_composite_noise();
// Delay grid spanning the decay of `spec` under default_composite_noise().
std::vector<double> default_delays(SequenceSpec spec);

// ---------------------------------------------------------------------------
// Field gradient and pulse arithmetic

struct GradientSpec {
  double gradient_g_per_m = 0.0;
  double sensitivity_hz_per_g = 0.0;
};

// gradient * sensitivity * displacement, Hz.
double gradient_detuning(const GradientSpec& spec, double displacement_m);

// Rabi angular frequency pi / pi_time, rad/s.
double pi_time_to_rabi(double pi_time);

}  // namespace trapsim
