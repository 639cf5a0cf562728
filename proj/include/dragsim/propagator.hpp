#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "dragsim/model.hpp"

namespace dragsim {

struct PropagationSettings {
  double dt = 0.05;  // ns, target step for pulse integration
};

// Time-ordered product of exact exponentials of H(t_mid)*h over uniform
// steps (midpoint rule).  Throws IntegrityError if the result loses
// unitarity beyond 1e-9.
Mat propagate_unitary(const RotatingGenerator& gen, const PropagationSettings& s);

// Frame-phase increment, kept in exact bookkeeping units so that equal
// accumulated phases compare equal bit-for-bit: angle = quarters*(pi/2)
// + units*unit_value + extra.  Calibration compensation phases go through
// `units`, compiled right-angle rotations through `quarters`.
struct PhaseInc {
  int64_t quarters = 0;
  int64_t units = 0;
  double extra = 0.0;
};

struct SeqItem {
  enum class Kind { Pulse, Idle, VirtualZ, IdealSwap, ProjectGround };
  Kind kind = Kind::Idle;
  int gate = 0;          // Pulse: gate-table index
  int mode = 0;          // VirtualZ / ProjectGround target, IdealSwap first mode
  int mode_b = 0;        // IdealSwap second mode
  double idle_ns = 0.0;  // Idle duration
  PhaseInc phase{};      // VirtualZ angle
};

SeqItem make_pulse(int gate);
SeqItem make_idle(double tau_ns);
SeqItem make_virtual_z(int mode, double phi);
SeqItem make_virtual_z(int mode, PhaseInc inc);
SeqItem make_ideal_swap(int mode_a, int mode_b);
SeqItem make_project_ground(int mode);

struct GateDef {
  PulseSpec spec;
  int target = 0;
  LeakPort leak{};
};

// Runs item lists against states of one system at one carrier.  Pulse
// unitaries are memoized per (gate, accumulated frame phase); a virtual-Z
// is pure frame bookkeeping (zero duration) and advances the phase of
// every later pulse on its mode.  Identical item lists give bit-identical
// states regardless of what else the engine has run.
class SequenceEngine {
 public:
  SequenceEngine(SystemSpec sys, double carrier, PropagationSettings settings);

  int add_gate(const GateDef& def);
  void set_gate(int id, const GateDef& def);
  const GateDef& gate(int id) const;

  // Value of one bookkeeping `unit` of frame phase (the virtual-Z
  // compensation angle of the calibrated gate).
  void set_unit_value(double v);
  double unit_value() const { return unit_value_; }

  Vec ground_state() const;
  // use_cache should be off for throwaway gate sets (calibration scans)
  // where no frame phase ever repeats.
  void run(Vec& state, const std::vector<SeqItem>& items, bool use_cache = true);

  const SystemSpec& system() const { return sys_; }
  double carrier() const { return carrier_; }
  const PropagationSettings& settings() const { return settings_; }

  // Pulse unitary at an explicit frame phase, bypassing the cache.
  Mat pulse_unitary(int gate_id, double frame_phase) const;

 private:
  struct CacheKey {
    int gate;
    int64_t units;
    int quarters;
    uint64_t extra_bits;
    bool operator==(const CacheKey&) const = default;
  };
  struct CacheHash {
    size_t operator()(const CacheKey& k) const;
  };
  struct GateSlot {
    GateDef def;
    std::unique_ptr<RotatingGenerator> gen;
  };

  double frame_angle(const PhaseInc& p) const;
  void apply_pulse(Vec& state, int gate_id, const PhaseInc& frame, bool use_cache);
  void apply_idle(Vec& state, double tau) const;

  SystemSpec sys_;
  double carrier_;
  PropagationSettings settings_;
  double unit_value_ = 0.0;
  std::vector<GateSlot> gates_;
  std::unordered_map<CacheKey, Mat, CacheHash> cache_;
  Mat idle_vectors_;
  Eigen::VectorXd idle_energies_;
};

// One-shot convenience wrapper around SequenceEngine.
Vec evolve_sequence(const SystemSpec& sys, double carrier, const Vec& initial,
                    const std::vector<GateDef>& gates, const std::vector<SeqItem>& items,
                    const PropagationSettings& settings);

// State-level forms of the reset and exchange items, usable without an
// engine.  project_ground_state renormalizes and throws IntegrityError on
// a (near-)zero projection; ideal_swap_state exchanges the single-excitation
// amplitudes of two modes.
void project_ground_state(const SystemSpec& sys, Vec& state, int mode);
void ideal_swap_state(const SystemSpec& sys, Vec& state, int mode_a, int mode_b);

// Per-mode level populations of a state (partial trace in the bare basis).
std::vector<std::vector<double>> mode_populations(const SystemSpec& sys, const Vec& state);

// 1 - ground population of one mode (all excited levels summed).
double excited_population(const SystemSpec& sys, const Vec& state, int mode);

enum class ChannelKind { amplitude_damping, xy_twirl };
struct Channel {
  ChannelKind kind = ChannelKind::amplitude_damping;
  double param = 0.0;
};

// Single-qubit channel action on a 2x2 density matrix.  amplitude_damping
// uses Kraus pair {diag(1, sqrt(1-G)), sqrt(G)|g><e|}; xy_twirl mixes
// (1-g) rho + g/2 (X rho X + Y rho Y).
Eigen::Matrix2cd apply_channel(const Channel& ch, const Eigen::Matrix2cd& rho);

}  // namespace dragsim
