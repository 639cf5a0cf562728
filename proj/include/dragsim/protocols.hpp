#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dragsim/gatecal.hpp"

namespace dragsim {

// Excitation traces of the interference error filter: per waiting time tau,
// 2N repetitions of [pulse, pulse, idle(tau)] (a pi gate is two compensated
// pi/2 pulses) are run from the global ground state and the end-of-train
// excited populations of target and spectator are recorded.
struct ErrorFilterResult {
  std::vector<double> tau_grid;  // ns
  std::vector<double> p_e_target;
  std::vector<double> p_e_spectator;
  int pairs = 0;  // N, pi-gate pairs per point
};

ErrorFilterResult run_error_filter(const SystemSpec& sys, int target, int spectator,
                                   const GateCalibration& cal, int pairs,
                                   const std::vector<double>& tau_grid,
                                   const LeakPort& leak = {},
                                   const PropagationSettings& s = {});

// End-of-sequence spectator measurement: direct reads its excited
// population as is; swap_assisted resets the target and swaps the
// spectator excitation onto it first (the TLS readout scheme).
enum class SpectatorReadout { direct, swap_assisted };

struct RBOptions {
  std::vector<int> lengths{2, 30, 75, 150, 300, 600};
  int sequences_per_length = 30;
  uint64_t seed = 1u;
  int workers = 1;
  SpectatorReadout readout = SpectatorReadout::direct;
};

struct RBResult {
  std::vector<int> lengths;
  std::vector<double> survival;              // mean target ground recovery
  std::vector<double> spectator_excitation;  // mean spectator P_e
  int sequences_per_length = 0;
  uint64_t seed = 0;
};

// Randomized benchmarking with the calibrated gate: per length, K seeded
// Clifford sequences (plus exact inverse) are compiled to pulse/virtual-Z
// items and propagated from ground.  Sequence streams derive from
// (seed, length, sequence index), and every sequence owns a result slot,
// so the outcome is identical for any worker count.
RBResult run_rb(const SystemSpec& sys, int target, int spectator, const GateCalibration& cal,
                const RBOptions& opt = {}, const LeakPort& leak = {},
                const PropagationSettings& s = {});

struct FitParam {
  std::string name;
  double value = 0.0;
  double err = 0.0;  // standard error from the local Jacobian
};

struct FitReport {
  std::string model;
  std::vector<FitParam> params;
  double residual_norm = 0.0;
  std::string warning;  // empty when the fit is clean
  const FitParam& param(const std::string& name) const;  // LookupError if absent
};

// survival = A p^m + B least squares; reports A, B, p and EPC = (1 - p)/2.
// Non-decaying data clamps p at 1 (EPC 0) with a warning.
FitReport fit_epc(const RBResult& result);

// Spectator excitation fitted to the damped-excitation channel form
// p1(m) = r_e (1 - G) (1 - q^m) / (1 - q), q = 1 - G - 2 r_e + 2 r_e G;
// reports ExPC = r_e and gamma = G.  Negative fitted rates clamp at 0
// with a warning.
FitReport fit_expc(const RBResult& result);

// TLS readout: reset the qubit, swap the TLS excitation onto it, read the
// qubit.  Takes the state by value; the caller's state is untouched.
double tls_excitation_readout(const SystemSpec& sys, Vec state, int qubit, int tls);

// Excited population after m twirl-then-damp cycles from ground; the
// discrete channel model behind fit_expc, used to cross-check its closed
// form.
double channel_excitation(int m, double r_e, double gamma);

// Declarative drag-correction choice.  leakage adds the target
// anharmonicity hole; use_delta adds a hole at the spectator detuning,
// mirrored makes it a +-Delta pair; delta_mhz = 0 resolves to the dressed
// detuning between target and spectator.  extra_mhz appends raw entries.
struct DragPlan {
  bool leakage = true;
  bool use_delta = false;
  bool mirrored = false;
  double delta_mhz = 0.0;
  std::vector<double> extra_mhz;
};

std::vector<double> resolve_drag_set(const SystemSpec& sys, int target, int spectator,
                                     const DragPlan& plan);

struct CalibrateOptions {
  std::vector<int> refine_schedule{1, 2, 4, 8, 16};
  bool tune_delta = true;  // scan the mirrored pair before refining
  DeltaObjective delta_objective = DeltaObjective::pulse_train;
  DeltaScanOptions delta_options{};
};

// Full bring-up of one drive: carrier at the dressed target transition
// (plus eta), coarse amplitude and compensation scans, the mirrored-pair
// detuning scan when the plan carries one, then alternating refinement.
GateCalibration calibrate_full(const SystemSpec& sys, int target, int spectator, double t_g,
                               const DragPlan& plan, double eta_mhz = 0.0,
                               const CalibrateOptions& opt = {}, const LeakPort& leak = {},
                               const PropagationSettings& s = {});

enum class ScanKind { coupling_g, detuning, gate_time };

struct ScanRow {
  double param = 0.0;  // grid value: MHz for coupling/detuning, ns for gate_time
  double epc = 0.0;
  double epc_err = 0.0;
  double expc = 0.0;
  double expc_err = 0.0;
  bool ok = false;
  std::string error;  // failure description when !ok
};

struct ScanOptions {
  ScanKind kind = ScanKind::coupling_g;
  std::vector<double> grid;
  double t_g = 25.0;  // ns, base gate time
  double eta_mhz = 0.0;
  DragPlan plan{};
  CalibrateOptions cal{};
  RBOptions rb{};
};

// Per grid value: rebuild the system, recalibrate from scratch, run RB,
// fit both error metrics.  A point that throws is recorded as a failed
// row and the scan continues.
std::vector<ScanRow> parameter_scan(const SystemSpec& base, int target, int spectator,
                                    const ScanOptions& opt, const LeakPort& leak = {},
                                    const PropagationSettings& s = {});

}  // namespace dragsim
