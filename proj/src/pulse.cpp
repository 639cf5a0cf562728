#include "dragsim/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "dragsim/errors.hpp"
#include "dragsim/io.hpp"
#include "dragsim/units.hpp"

namespace dragsim {

namespace {

constexpr double kScanHalfWidth = two_pi * 0.5;  // 500 MHz
constexpr int kScanPoints = 2001;

// Direct time-domain recursion is exact only while the corrected envelope
// still vanishes at both edges; sine4 guarantees that for up to four
// corrections.
constexpr int kMaxDirectTransform = 4;

}  // namespace

void validate_pulse(const PulseSpec& spec) {
  if (spec.base.shape != Shape::sine4)
    throw InvalidSpecError("pulse: unknown envelope shape");
  if (!(spec.base.t_g > 0.0) || !std::isfinite(spec.base.t_g))
    throw InvalidSpecError("pulse: gate time must be positive");
  if (!std::isfinite(spec.base.amp) || spec.base.amp < 0.0)
    throw InvalidSpecError("pulse: amplitude must be finite and nonnegative");
  for (double d : spec.drag) {
    if (d == 0.0 || !std::isfinite(d))
      throw InvalidSpecError("pulse: zero drag detuning makes a degenerate filter");
  }
  if (!std::isfinite(spec.eta) || !std::isfinite(spec.phi0))
    throw InvalidSpecError("pulse: eta/phi0 must be finite");
}

namespace detail {

cplx HarmonicSeries::eval(double t, int deriv_order) const {
  cplx acc = 0.0;
  for (int m = -2; m <= 2; ++m) {
    cplx cm = c[m + 2];
    if (cm == 0.0 && m != 0) continue;
    const double mw = m * w0;
    cplx term = cm * std::polar(1.0, mw * t);
    for (int k = 0; k < deriv_order; ++k) term *= cplx(0.0, mw);
    acc += term;
  }
  return acc;
}

HarmonicSeries harmonic_series(const PulseSpec& spec) {
  validate_pulse(spec);
  HarmonicSeries h;
  h.w0 = two_pi / spec.base.t_g;
  // sin^4(pi t / t_g) = 3/8 - cos(2 pi t/t_g)/2 + cos(4 pi t/t_g)/8
  h.c = {cplx(1.0 / 16.0), cplx(-0.25), cplx(0.375), cplx(-0.25), cplx(1.0 / 16.0)};
  for (auto& cm : h.c) cm *= spec.base.amp;
  for (double d : spec.drag) {
    for (int m = -2; m <= 2; ++m) h.c[m + 2] *= 1.0 + m * h.w0 / d;
  }
  return h;
}

}  // namespace detail

cplx eval_envelope(const PulseSpec& spec, double t) {
  const double tg = spec.base.t_g;
  if (t < -1e-12 || t > tg * (1.0 + 1e-12))
    throw DomainError("pulse: time outside [0, t_g]");
  return detail::harmonic_series(spec).eval(std::clamp(t, 0.0, tg));
}

cplx eval_envelope_derivative(const PulseSpec& spec, double t, int order) {
  if (order < 0) throw DomainError("pulse: derivative order must be >= 0");
  const double tg = spec.base.t_g;
  if (t < -1e-12 || t > tg * (1.0 + 1e-12))
    throw DomainError("pulse: time outside [0, t_g]");
  return detail::harmonic_series(spec).eval(std::clamp(t, 0.0, tg), order);
}

PulseSpec drag_extend(const PulseSpec& spec, const std::vector<double>& detunings) {
  PulseSpec out = spec;
  for (double d : detunings) {
    if (d == 0.0 || !std::isfinite(d))
      throw InvalidSpecError("pulse: zero drag detuning makes a degenerate filter");
    out.drag.push_back(d);
  }
  validate_pulse(out);
  return out;
}

SampledWaveform sample_waveform(const PulseSpec& spec, double dt) {
  validate_pulse(spec);
  if (!(dt > 0.0)) throw DomainError("pulse: sampling step must be positive");
  const double tg = spec.base.t_g;
  if (dt > tg / 50.0)
    throw ConfigError("pulse: sampling step coarser than t_g/50");
  const auto h = detail::harmonic_series(spec);
  const long long n = std::llround(tg / dt);
  SampledWaveform wf;
  wf.dt = dt;
  wf.samples.resize(static_cast<size_t>(n) + 1);
  for (long long i = 0; i <= n; ++i) {
    const double t = std::min(i * dt, tg);
    wf.samples[static_cast<size_t>(i)] =
        h.eval(t) * std::polar(1.0, spec.phi0 - spec.eta * t);
  }
  return wf;
}

namespace {

// Integral of exp(i u t) over [0, tg], written in the half-angle form
// tg * sinc(u tg / 2) * exp(i u tg / 2) so it stays smooth through u = 0.
cplx finite_wave_integral(double u, double tg) {
  const double x = 0.5 * u * tg;
  const double s = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
  return tg * s * std::polar(1.0, x);
}

cplx series_transform(const detail::HarmonicSeries& h, double tg, double omega) {
  cplx total = 0.0;
  for (int m = -2; m <= 2; ++m)
    total += h.c[m + 2] * finite_wave_integral(omega + m * h.w0, tg);
  return total;
}

}  // namespace

cplx fourier_spectrum_point(const PulseSpec& spec, double omega) {
  validate_pulse(spec);
  if (spec.drag.size() <= kMaxDirectTransform) {
    const auto h = detail::harmonic_series(spec);
    return series_transform(h, spec.base.t_g, omega);
  }
  PulseSpec base = spec;
  base.drag.clear();
  const auto h = detail::harmonic_series(base);
  cplx s = series_transform(h, spec.base.t_g, omega);
  for (double d : spec.drag) s *= 1.0 - omega / d;
  return s;
}

std::vector<cplx> fourier_spectrum(const PulseSpec& spec, const std::vector<double>& omegas) {
  std::vector<cplx> out;
  out.reserve(omegas.size());
  for (double w : omegas) out.push_back(fourier_spectrum_point(spec, w));
  return out;
}

namespace {

struct DenseScan {
  std::vector<double> omega;
  std::vector<double> mag;
  double peak_mag = 0.0;
  double peak_omega = 0.0;
};

DenseScan dense_scan(const PulseSpec& spec) {
  DenseScan scan;
  scan.omega.resize(kScanPoints);
  scan.mag.resize(kScanPoints);
  const double step = 2.0 * kScanHalfWidth / (kScanPoints - 1);
  int peak_i = 0;
  for (int i = 0; i < kScanPoints; ++i) {
    const double w = -kScanHalfWidth + i * step;
    scan.omega[i] = w;
    scan.mag[i] = std::abs(fourier_spectrum_point(spec, w));
    if (scan.mag[i] > scan.peak_mag) {
      scan.peak_mag = scan.mag[i];
      peak_i = i;
    }
  }
  scan.peak_omega = scan.omega[peak_i];
  if (peak_i > 0 && peak_i + 1 < kScanPoints) {
    // Parabolic refinement on the three points around the maximum.
    const double y0 = scan.mag[peak_i - 1], y1 = scan.mag[peak_i], y2 = scan.mag[peak_i + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (std::abs(denom) > 1e-300) {
      const double shift = 0.5 * (y0 - y2) / denom;
      if (std::abs(shift) <= 1.0) scan.peak_omega += shift * step;
    }
  }
  return scan;
}

}  // namespace

std::vector<HoleResidual> hole_residuals(const PulseSpec& spec, const std::vector<double>& targets) {
  const DenseScan scan = dense_scan(spec);
  if (!(scan.peak_mag > 0.0))
    throw IntegrityError("pulse: spectrum vanishes on the whole scan window");
  std::vector<HoleResidual> out;
  out.reserve(targets.size());
  for (double w : targets) {
    HoleResidual r;
    r.omega = w;
    r.residual = std::abs(fourier_spectrum_point(spec, w)) / scan.peak_mag;
    out.push_back(r);
  }
  return out;
}

double spectral_peak_shift(const PulseSpec& spec) {
  const DenseScan scan = dense_scan(spec);
  if (!(scan.peak_mag > 0.0))
    throw IntegrityError("pulse: spectrum vanishes on the whole scan window");
  return scan.peak_omega;
}

void write_waveform_csv(std::ostream& os, const PulseSpec& spec, double dt) {
  const SampledWaveform wf = sample_waveform(spec, dt);
  os << "t_ns,re,im\n";
  for (size_t i = 0; i < wf.samples.size(); ++i) {
    const double t = std::min(i * wf.dt, spec.base.t_g);
    os << io::fmt(t) << ',' << io::fmt(wf.samples[i].real()) << ','
       << io::fmt(wf.samples[i].imag()) << '\n';
  }
}

void write_spectrum_csv(std::ostream& os, const PulseSpec& spec, const std::vector<double>& f_mhz) {
  std::vector<double> omegas;
  omegas.reserve(f_mhz.size());
  for (double f : f_mhz) omegas.push_back(mhz_to_rad(f));
  const std::vector<cplx> s = fourier_spectrum(spec, omegas);
  double peak = 0.0;
  for (const cplx& v : s) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) peak = 1.0;
  os << "f_MHz,re,im,abs_norm\n";
  for (size_t i = 0; i < s.size(); ++i) {
    os << io::fmt(f_mhz[i]) << ',' << io::fmt(s[i].real()) << ',' << io::fmt(s[i].imag())
       << ',' << io::fmt(std::abs(s[i]) / peak) << '\n';
  }
}

}  // namespace dragsim
