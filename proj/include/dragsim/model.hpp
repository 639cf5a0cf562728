#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dragsim/pulse.hpp"

namespace dragsim {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// One anharmonic mode.  levels counts the retained states (2 for a TLS,
// 3 for a transmon keeping the leakage level).  freq_ghz is the bare g-e
// transition; anharm_mhz shifts the second excited state by alpha.
struct ModeSpec {
  std::string label;
  int levels = 3;
  double freq_ghz = 0.0;
  double anharm_mhz = 0.0;
};

// Exchange coupling g (a_i^dag a_j + h.c.) between modes a and b.
struct CouplingSpec {
  int a = 0;
  int b = 1;
  double g_mhz = 0.0;
};

struct SystemSpec {
  std::vector<ModeSpec> modes;
  std::vector<CouplingSpec> couplings;
};

void validate_system(const SystemSpec& sys);
int system_dim(const SystemSpec& sys);

// Flat basis index <-> per-mode occupation; mode 0 varies slowest.
int pack_index(const SystemSpec& sys, const std::vector<int>& occ);
std::vector<int> unpack_index(const SystemSpec& sys, int index);

// Drift Hamiltonian in rad/ns:
//   H0 = sum_i [w_i n_i + (alpha_i/2) n_i (n_i - 1)] + sum_c g (a_a^dag a_b + h.c.)
Mat build_drift(const SystemSpec& sys);

// Lowering operator of one mode embedded in the full space.
Mat lowering_op(const SystemSpec& sys, int mode);

// Total excitation number operator.
Mat number_op(const SystemSpec& sys);

// Quadrature drive operators on one mode: X = (a + a^dag)/2, Y = i(a^dag - a)/2.
// A complex envelope e couples as Re(e) X + Im(e) Y = (e a^dag + e* a)/2.
struct DriveOps {
  Mat x;
  Mat y;
};
DriveOps drive_term(const SystemSpec& sys, int mode);

struct DressedLevel {
  std::vector<int> bare;   // occupation pattern of the dominant bare state
  double energy = 0.0;     // rad/ns, absolute
  double overlap = 0.0;    // squared overlap with that bare state
  bool low_overlap = false;  // overlap <= 0.5: the label is only nominal
};

struct DressedSpectrum {
  std::vector<DressedLevel> levels;  // ascending energy
  Mat vectors;  // column k = eigenvector of levels[k], dominant amplitude real positive
  // Index into levels of the dressed state labeled by a bare pattern;
  // throws LookupError if no level carries that label.
  int find(const std::vector<int>& bare) const;
  // Energy of the labeled level relative to the labeled global ground.
  double transition(const std::vector<int>& bare) const;
};

DressedSpectrum dressed_spectrum(const SystemSpec& sys);

// Single-excitation transition of one mode (all others in ground),
// relative to the dressed ground state.  rad/ns.
double dressed_mode_transition(const DressedSpectrum& ds, const SystemSpec& sys, int mode);

// Reports the bare along with the dressed detuning between two modes; the
// two differ by the level repulsion, and consumers should see both numbers.
struct DetuningReport {
  double bare = 0.0;     // rad/ns, w_b - w_a
  double dressed = 0.0;  // rad/ns, dressed transition difference
};
DetuningReport detuning_report(const SystemSpec& sys, int mode_a, int mode_b);

// Optional direct crosstalk drive bleeding onto another mode with relative
// amplitude nu (models classical IX leakage; off by default).
struct LeakPort {
  int mode = -1;
  double nu = 0.0;
};

// Rotating-frame generator at the drive carrier:
//   H(t) = (H0 - w_d N) + Re(e(t)) X + Im(e(t)) Y,
//   e(t) = env(t) * exp(i (phi0 + frame_phase - eta t)),
// with counter-rotating terms dropped.  frame_phase carries accumulated
// virtual-Z rotations of the target mode.
class RotatingGenerator {
 public:
  RotatingGenerator(const SystemSpec& sys, const PulseSpec& pulse, int target,
                    double carrier, LeakPort leak = {});

  const Mat& h_static() const { return h_static_; }
  Mat hamiltonian(double t) const;
  cplx drive_envelope(double t) const;

  double gate_time() const { return pulse_.base.t_g; }
  double carrier() const { return carrier_; }
  int target() const { return target_; }
  int dim() const { return static_cast<int>(h_static_.rows()); }

  double frame_phase = 0.0;

 private:
  PulseSpec pulse_;
  detail::HarmonicSeries series_;
  int target_;
  double carrier_;
  Mat h_static_;
  DriveOps drive_;
  LeakPort leak_;
  DriveOps leak_drive_;
};

}  // namespace dragsim
