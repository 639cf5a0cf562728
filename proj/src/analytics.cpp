#include "dragsim/analytics.hpp"

#include <cmath>
#include <complex>

#include "dragsim/errors.hpp"
#include "dragsim/units.hpp"

namespace dragsim {

namespace {

using cd = std::complex<double>;

void check_crosstalk_params(double omega, double delta0) {
  if (delta0 == 0.0) throw DomainError("analytics: zero spectator detuning");
  if (std::abs(std::abs(omega) - std::abs(delta0)) < 1e-12 * std::abs(delta0))
    throw DomainError("analytics: omega equal to delta0 is a resonance pole");
}

}  // namespace

Eigen::Matrix4cd zx_gate_unitary(double omega, double g, double delta0, double t_g) {
  check_crosstalk_params(omega, delta0);
  const cd phase = std::polar(1.0, -delta0 * t_g);
  const cd a = omega * omega * g / (-2.0 * delta0 * (delta0 * delta0 - omega * omega)) *
               (1.0 + phase);
  const cd b = omega * g / (-2.0 * (delta0 * delta0 - omega * omega)) * (1.0 + phase);
  const cd c = phase;
  const cd i(0.0, 1.0);
  Eigen::Matrix4cd u;
  u << 0.0, -i * a, -i, i * b,
      -i * a, 0.0, -i * b, -i * c,
      -i, -i * b, 0.0, i * a,
      i * b, -i * c, i * a, 0.0;
  return u;
}

Eigen::Matrix4cd ix_gate_unitary(double nu, double delta0, double t_g) {
  if (delta0 == 0.0) throw DomainError("analytics: zero spectator detuning");
  const cd phase = std::polar(1.0, -delta0 * t_g);
  const cd d = nu * (1.0 - phase);
  const cd c = phase;
  const cd i(0.0, 1.0);
  Eigen::Matrix4cd u;
  u << 0.0, 0.0, -i, i * d,
      0.0, 0.0, i * d, -i * c,
      -i, i * d, 0.0, 0.0,
      i * d, -i * c, 0.0, 0.0;
  return u;
}

Eigen::Matrix4cd buffer_unitary(double delta0, double t_b) {
  const cd phase = std::polar(1.0, -delta0 * t_b);
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
  u(0, 0) = 1.0;
  u(1, 1) = phase;
  u(2, 2) = 1.0;
  u(3, 3) = phase;
  return u;
}

double train_amplitude(TrainKind kind, int n, double omega, double g, double nu,
                       double delta0, double t_g, double t_b) {
  if (n < 1) throw DomainError("analytics: train needs at least one pair");
  const double theta = delta0 * (t_g + t_b);
  const double s = std::sin(theta);
  const double comb = std::abs(s) < 1e-9 ? static_cast<double>(n)
                                         : std::abs(std::sin(n * theta) / s);
  const cd gate_phase = std::polar(1.0, -delta0 * t_g);
  const cd buf_phase = std::polar(1.0, -delta0 * t_b);
  const cd ring = 1.0 - std::polar(1.0, -theta);
  switch (kind) {
    case TrainKind::zx_ge: {
      check_crosstalk_params(omega, delta0);
      const double bp = omega * g / (-2.0 * (delta0 * delta0 - omega * omega));
      return std::abs(bp * buf_phase * (1.0 + gate_phase) * ring) * comb;
    }
    case TrainKind::zx_ee: {
      check_crosstalk_params(omega, delta0);
      const double ap =
          omega * omega * g / (-2.0 * delta0 * (delta0 * delta0 - omega * omega));
      return std::abs(ap * buf_phase * (1.0 + gate_phase) * ring) * comb;
    }
    case TrainKind::ix_ge: {
      if (delta0 == 0.0) throw DomainError("analytics: zero spectator detuning");
      const cd ring_ix = 1.0 + std::polar(1.0, -theta);
      return std::abs(nu * (1.0 - gate_phase) * ring_ix) * comb;
    }
  }
  throw DomainError("analytics: unknown train kind");
}

std::vector<double> predict_peaks(PeakKind kind, double delta0, double t_g, double tau_max) {
  if (delta0 == 0.0) throw DomainError("analytics: zero spectator detuning");
  if (tau_max < 0.0) throw DomainError("analytics: tau_max must be >= 0");
  const double ad = std::abs(delta0);
  std::vector<double> taus;
  for (int k = 0;; ++k) {
    const double phase = kind == PeakKind::zx ? (2 * k + 1) * pi : 2 * (k + 1) * pi;
    const double tau = phase / ad - t_g;
    if (tau > tau_max) break;
    if (tau >= 0.0) taus.push_back(tau);
    if (k > 1000000) throw IntegrityError("analytics: peak enumeration runaway");
  }
  return taus;
}

double eta_correction(double omega, double delta0) {
  if (delta0 == 0.0) throw DomainError("analytics: zero spectator detuning");
  const double r = omega * omega / (2.0 * delta0 * delta0);
  if (std::abs(1.0 - r) < 1e-12)
    throw DomainError("analytics: eta correction pole at omega^2 = 2 delta0^2");
  return -omega * omega / (delta0 * (1.0 - r));
}

double p1_closed_form(int m, double r_e, double gamma) {
  if (m < 0) throw DomainError("analytics: cycle count must be >= 0");
  if (!(r_e >= 0.0 && r_e <= 1.0) || !(gamma >= 0.0 && gamma <= 1.0))
    throw DomainError("analytics: rates must lie in [0, 1]");
  const double q = 1.0 - gamma - 2.0 * r_e + 2.0 * r_e * gamma;
  const double step = r_e * (1.0 - gamma);
  if (std::abs(1.0 - q) < 1e-14) return m * step;
  return step * (1.0 - std::pow(q, m)) / (1.0 - q);
}

PowerLawFit power_law_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw DomainError("analytics: need matching x/y with at least three points");
  PowerLawFit fit;
  double sx4 = 0.0, sx2y = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx4 += x[i] * x[i] * x[i] * x[i];
    sx2y += x[i] * x[i] * y[i];
  }
  if (sx4 <= 0.0) throw DomainError("analytics: degenerate abscissa");
  fit.a = sx2y / sx4;
  double n = 0.0, su = 0.0, sv = 0.0, suu = 0.0, suv = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      fit.dropped_points = true;
      continue;
    }
    const double u = std::log(x[i]), v = std::log(y[i]);
    n += 1.0;
    su += u;
    sv += v;
    suu += u * u;
    suv += u * v;
  }
  if (n < 2.0) throw DomainError("analytics: too few positive points for a log fit");
  const double denom = n * suu - su * su;
  if (!(denom > 1e-12 * n * suu))
    throw DomainError("analytics: abscissa has no spread in log space");
  fit.loglog_slope = (n * suv - su * sv) / denom;
  return fit;
}

}  // namespace dragsim
