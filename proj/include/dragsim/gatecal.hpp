#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dragsim/propagator.hpp"
#include "dragsim/rng.hpp"

namespace dragsim {

// Calibrated pi/2 drive for one mode.  Numbers are stored in the units the
// JSON document uses (MHz / GHz for frequencies) so that serialization is a
// plain field copy and survives a round trip bit-for-bit; the _rad accessors
// convert on demand for the solvers.
struct GateCalibration {
  double amplitude = 0.0;             // rad/ns, peak envelope
  double vz_phase = 0.0;              // rad, compensation applied after each pulse
  std::vector<double> drag_set_mhz;   // derivative-correction detunings
  double carrier_ghz = 0.0;           // drive carrier
  double t_g = 25.0;                  // ns
  double eta_mhz = 0.0;               // extra carrier detuning

  std::vector<double> drag_set_rad() const;
  double carrier_rad() const;
  double eta_rad() const;
  PulseSpec pulse() const;            // assembled drive envelope (phi0 = 0)
};

std::string calibration_to_json(const GateCalibration& cal);
GateCalibration calibration_from_json(const std::string& text);

// Engine with the calibrated drive installed as gate 0 and the unit frame
// phase set to the compensation angle.
SequenceEngine make_engine(const SystemSpec& sys, int target, const GateCalibration& cal,
                           const LeakPort& leak = {}, const PropagationSettings& s = {});

// Index of the mode with the given label.
int mode_index(const SystemSpec& sys, const std::string& label);

// Amplitude scan over [0, 2*(4pi/3t_g)]: one pulse from ground, linear
// interpolation to the first half-population crossing.  Throws
// CalibrationError when the scan never reaches P_e = 0.5.
double coarse_amplitude(const SystemSpec& sys, int target, const GateCalibration& proto,
                        const LeakPort& leak = {}, const PropagationSettings& s = {},
                        int points = 101);

// Compensation scan over [0, 2pi): pulse, virtual-Z, pulse from ground,
// quadratic-vertex argmax of P_e.  Throws CalibrationError on a flat
// landscape (variation below 1e-6).
double coarse_vz(const SystemSpec& sys, int target, const GateCalibration& cal,
                 const LeakPort& leak = {}, const PropagationSettings& s = {},
                 int points = 201);

// Alternating amplitude / phase refinement.  For each n: amplitude
// maximizes P_e after 4n+2 pulses, phase maximizes P_g after n repetitions
// of two gates plus two conjugate gates; each step is a golden-section
// search within +-(range/2n) of the current value, range being the current
// amplitude resp. pi.  Throws CalibrationError when the final step still
// moves a parameter by more than 10% of its entry value.
GateCalibration refine_calibration(const SystemSpec& sys, int target, GateCalibration cal,
                                   const std::vector<int>& n_schedule = {1, 2, 4, 8, 16},
                                   const LeakPort& leak = {},
                                   const PropagationSettings& s = {});

struct U3Params {
  double theta = 0.0;
  double phi = 0.0;
  double lam = 0.0;
};

Eigen::Matrix2cd u3_matrix(const U3Params& p);
Eigen::Matrix2cd sqrtx_matrix();

// Five-item realization VZ(lam) R VZ(theta+pi) R VZ(phi+pi) of U3 with the
// compensation unit folded into the virtual-Z items after each pulse.
// Right-angle phases are emitted as exact quarter counts.
std::vector<SeqItem> compile_u3(const U3Params& p, int gate, int mode);

// Ideal-algebra product of a compiled item list: pulses count as exact
// sqrt(X), virtual-Z items as diag(1, e^{i phi}) with the given unit value.
Eigen::Matrix2cd ideal_sequence_matrix(const std::vector<SeqItem>& items, double unit_value);

struct CliffordTable {
  std::array<U3Params, 24> elems;
  std::array<std::array<uint8_t, 24>, 24> compose;  // compose[i][j]: U_i * U_j
  std::array<uint8_t, 24> inverse;
  int identity = 0;
};

// The 24 single-qubit Cliffords as U3 parameters (quarter-angle exact),
// with composition and inversion tables verified against 2x2 products.
const CliffordTable& clifford_table();

// Random-Clifford sequence of the given length plus the exact inverse
// element, compiled to items.
std::vector<SeqItem> build_rb_items(Rng& rng, int length, int gate, int mode);

enum class DeltaObjective { pulse_train, rb_tail };

struct DeltaScanResult {
  double delta_opt_rad = 0.0;  // optimal mirrored-pair detuning, rad/ns
  bool insensitive = false;    // objective variation below threshold
  std::vector<double> grid;    // scanned detunings, rad/ns
  std::vector<double> objective;
};

struct DeltaScanOptions {
  double halfwidth_rad = 0.0;  // 0: default 2pi * 5e-3 rad/ns (5 MHz)
  int points = 41;
  int filter_pairs = 50;       // pulse_train objective
  int rb_length = 300;         // rb_tail objective
  uint64_t seed = 12u;
  bool iswap_readout = false;  // read the spectator through reset + swap
};

// Scans the mirrored +-Delta pair of the drag set around its current value
// and returns the argmin of the spectator-excitation objective with
// quadratic-vertex interpolation; when the minimum falls on a window edge
// the window slides toward it (a few hops) instead of clamping.
// pulse_train drives repeated pi pairs spaced by the first predicted
// crosstalk peak; rb_tail runs one seeded RB sequence.  Requires a
// mirrored pair in the drag set.
DeltaScanResult optimize_delta(const SystemSpec& sys, int target, int spectator,
                               const GateCalibration& cal, DeltaObjective objective,
                               const DeltaScanOptions& opt = {}, const LeakPort& leak = {},
                               const PropagationSettings& s = {});

// Replaces the mirrored pair of cal's drag set with +-delta.
GateCalibration apply_delta(GateCalibration cal, double delta_rad);

// Process fidelity of the calibrated (pulse + compensation) against the
// ideal sqrt(X) on the target mode's dressed {g, e} pair, maximized over
// the free Z-frame gauge that a virtual-Z calibration never pins.
double sqrtx_process_fidelity(const SystemSpec& sys, int target, const GateCalibration& cal,
                              const LeakPort& leak = {}, const PropagationSettings& s = {});

}  // namespace dragsim
