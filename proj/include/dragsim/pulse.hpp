#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <vector>

namespace dragsim {

using cplx = std::complex<double>;

enum class Shape { sine4 };

// Base drive envelope before any derivative corrections.  amp is the peak
// amplitude in rad/ns; t_g is the gate time in ns.  sine4 rises and falls
// with vanishing first, second and third derivatives at both edges.
struct BaseEnvelope {
  Shape shape = Shape::sine4;
  double t_g = 25.0;
  double amp = 0.0;
};

// A shaped pulse: the base envelope plus an ordered list of derivative
// corrections.  Each entry D in drag applies  env -> env - i*env'/D, which
// multiplies the envelope transform by (1 - w/D) and so nulls the spectral
// weight at detuning D (rad/ns) from the carrier.  eta is an extra carrier
// detuning and phi0 a phase offset; both are applied at sampling time, not
// by eval_envelope.
struct PulseSpec {
  BaseEnvelope base;
  std::vector<double> drag;
  double eta = 0.0;
  double phi0 = 0.0;
};

// Throws InvalidSpecError / DomainError on a malformed spec.
void validate_pulse(const PulseSpec& spec);

// Complex envelope at time t in [0, t_g].  Corrections applied; eta and
// phi0 are not.
cplx eval_envelope(const PulseSpec& spec, double t);

// Exact time derivative of the corrected envelope, order >= 0.
cplx eval_envelope_derivative(const PulseSpec& spec, double t, int order);

// Returns a copy of spec with the given corrections appended.
PulseSpec drag_extend(const PulseSpec& spec, const std::vector<double>& detunings);

struct SampledWaveform {
  double dt = 0.0;
  std::vector<cplx> samples;  // eval_envelope(t) * exp(i*(phi0 - eta*t))
};

// Uniform sampling with round(t_g/dt)+1 points; the last sample time is
// clamped to t_g.  dt must be positive and no coarser than t_g/50.
SampledWaveform sample_waveform(const PulseSpec& spec, double dt);

// Continuous transform S(w) = integral over [0, t_g] of env(t)*exp(i*w*t),
// evaluated by adaptive quadrature of the exact envelope.  Pulses carrying
// more than four corrections are evaluated through the factored form
// S_base(w) * prod_k (1 - w/D_k) instead; the direct integral of such deep
// stacks picks up edge contributions that the corrections are not defined
// to cancel.  eta and phi0 are excluded (they shift and rotate the
// transform trivially).
cplx fourier_spectrum_point(const PulseSpec& spec, double omega);
std::vector<cplx> fourier_spectrum(const PulseSpec& spec, const std::vector<double>& omegas);

struct HoleResidual {
  double omega = 0.0;     // rad/ns
  double residual = 0.0;  // |S(omega)| / max_w |S(w)|
};

// Residual spectral weight at each target detuning, normalized by the peak
// magnitude over a dense scan of +-2*pi*0.5 rad/ns (500 MHz) around the
// carrier.
std::vector<HoleResidual> hole_residuals(const PulseSpec& spec, const std::vector<double>& targets);

// Location (rad/ns) of the magnitude peak of S over the same dense scan,
// refined parabolically.  Zero for an uncorrected symmetric pulse.
double spectral_peak_shift(const PulseSpec& spec);

// CSV exports.  Waveform rows: t_ns,re,im.  Spectrum rows:
// f_MHz,re,im,abs_norm with abs_norm = |S| / max |S| over the given grid.
void write_waveform_csv(std::ostream& os, const PulseSpec& spec, double dt);
void write_spectrum_csv(std::ostream& os, const PulseSpec& spec, const std::vector<double>& f_mhz);

namespace detail {

// Exact harmonic representation: env(t) = sum_m c[m+2] * exp(i*m*w0*t) with
// w0 = 2*pi/t_g.  sine4 is a five-term cosine series, and every correction
// maps c_m -> c_m * (1 + m*w0/D), so the representation stays closed and
// derivatives of any order stay exact.
struct HarmonicSeries {
  double w0 = 0.0;
  std::array<cplx, 5> c{};
  cplx eval(double t, int deriv_order = 0) const;
};

HarmonicSeries harmonic_series(const PulseSpec& spec);

}  // namespace detail

}  // namespace dragsim
