#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dragsim {

// Closed-form crosstalk model for a square X pulse of amplitude omega and
// duration t_g on the target, with a spectator detuned by delta0 (all
// rad/ns, ns).  Basis order {gg, ge, eg, ee}; first letter target, second
// spectator... the target qubit flips (eg entry), and the residual
// coherent ZX / IX crosstalk appears in the small off-diagonal weights.
Eigen::Matrix4cd zx_gate_unitary(double omega, double g, double delta0, double t_g);

// Classical-crosstalk variant: a copy of the drive leaks onto the
// spectator with relative amplitude nu.
Eigen::Matrix4cd ix_gate_unitary(double nu, double delta0, double t_g);

// Free evolution for a buffer of t_b between gates: the spectator-excited
// levels wind phase at delta0.
Eigen::Matrix4cd buffer_unitary(double delta0, double t_b);

enum class TrainKind { zx_ge, zx_ee, ix_ge };

// Transition amplitude magnitude after n X-gate pairs separated by
// buffers: the per-pair amplitudes interfere as sin(n theta)/sin(theta)
// with theta = delta0*(t_g + t_b).
double train_amplitude(TrainKind kind, int n, double omega, double g, double nu,
                       double delta0, double t_g, double t_b);

enum class PeakKind { zx, ix };

// Buffer times (ns) at which the train interference is fully constructive:
// zx peaks need theta an odd multiple of pi, ix peaks an even one.
std::vector<double> predict_peaks(PeakKind kind, double delta0, double t_g, double tau_max);

// Drive-detuning correction accumulated by a traditional single-DRAG
// pulse; a spectrally balanced pair cancels it.
double eta_correction(double omega, double delta0);

// Spectator excited population after m cycles of excitation rate r_e with
// per-cycle damping gamma.
double p1_closed_form(int m, double r_e, double gamma);

struct PowerLawFit {
  double a = 0.0;             // least-squares coefficient of y = a x^2
  double loglog_slope = 0.0;  // free slope of log y vs log x
  bool dropped_points = false;  // nonpositive entries excluded from the log fit
};
PowerLawFit power_law_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dragsim
