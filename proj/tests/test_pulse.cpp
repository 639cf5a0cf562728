#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "doctest.h"
#include "dragsim/errors.hpp"
#include "dragsim/pulse.hpp"
#include "dragsim/units.hpp"

using namespace dragsim;

namespace {

PulseSpec base_pulse(double t_g = 25.0, double amp = 0.11) {
  PulseSpec spec;
  spec.base.t_g = t_g;
  spec.base.amp = amp;
  return spec;
}

}  // namespace

TEST_CASE("sine4 envelope: peak, edges, exact edge flatness") {
  const PulseSpec spec = base_pulse();
  CHECK(eval_envelope(spec, 12.5).real() == doctest::Approx(0.11).epsilon(1e-12));
  CHECK(std::abs(eval_envelope(spec, 0.0)) < 1e-15);
  CHECK(std::abs(eval_envelope(spec, 25.0)) < 1e-15);
  // sin^4 rises with three vanishing derivatives at both edges.
  for (int order = 1; order <= 3; ++order) {
    CHECK(std::abs(eval_envelope_derivative(spec, 0.0, order)) < 1e-12);
    CHECK(std::abs(eval_envelope_derivative(spec, 25.0, order)) < 1e-12);
  }
  // Fourth derivative at the edge: 24 * amp * (pi/t_g)^4 from the cosine
  // series of sin^4.
  const double d4 = 24.0 * 0.11 * std::pow(M_PI / 25.0, 4);
  CHECK(std::abs(eval_envelope_derivative(spec, 0.0, 4)) == doctest::Approx(d4).epsilon(1e-9));
}

TEST_CASE("envelope equals its five-term harmonic series") {
  PulseSpec spec = base_pulse();
  spec.drag = {mhz_to_rad(-200.0), mhz_to_rad(45.0)};
  const auto series = detail::harmonic_series(spec);
  for (double t : {0.0, 1.7, 6.25, 12.5, 19.0, 25.0}) {
    const cplx direct = eval_envelope(spec, t);
    const cplx viaseries = series.eval(t);
    CHECK(std::abs(direct - viaseries) < 1e-12);
  }
  // Derivatives against a central difference of the envelope itself.
  const double h = 1e-5;
  for (double t : {3.0, 12.5, 20.0}) {
    const cplx fd = (eval_envelope(spec, t + h) - eval_envelope(spec, t - h)) / (2.0 * h);
    CHECK(std::abs(eval_envelope_derivative(spec, t, 1) - fd) < 1e-6);
  }
}

TEST_CASE("each correction multiplies the spectrum by (1 - w/D)") {
  const PulseSpec plain = base_pulse();
  const double d = mhz_to_rad(40.0);
  const PulseSpec dragged = drag_extend(plain, {d});
  for (double f_mhz : {-120.0, -40.0, -7.0, 0.0, 13.0, 40.0, 90.0}) {
    const double w = mhz_to_rad(f_mhz);
    const cplx expect = fourier_spectrum_point(plain, w) * (1.0 - w / d);
    const cplx got = fourier_spectrum_point(dragged, w);
    CHECK(std::abs(got - expect) < 1e-9);
  }
}

TEST_CASE("zero-frequency weight is the envelope area") {
  const PulseSpec spec = base_pulse();
  // Only the constant harmonic survives the full-period integral.
  const cplx s0 = fourier_spectrum_point(spec, 0.0);
  CHECK(s0.real() == doctest::Approx(0.375 * 0.11 * 25.0).epsilon(1e-10));
  CHECK(std::abs(s0.imag()) < 1e-12);
}

TEST_CASE("mirrored corrections carve both holes and keep the envelope real") {
  PulseSpec spec = base_pulse();
  spec.drag = {mhz_to_rad(40.0), mhz_to_rad(-40.0)};
  const auto res = hole_residuals(spec, spec.drag);
  REQUIRE(res.size() == 2);
  CHECK(res[0].residual < 1e-6);
  CHECK(res[1].residual < 1e-6);
  for (double t : {2.0, 8.0, 12.5, 17.0, 23.0})
    CHECK(std::abs(eval_envelope(spec, t).imag()) < 1e-14);
  // At 40 MHz and 25 ns the second-derivative term cancels the peak
  // exactly: amp * (1 - (2 pi / (t_g D))^2) with t_g D = 2 pi.
  CHECK(std::abs(eval_envelope(spec, 12.5)) < 1e-12);
}

TEST_CASE("one-sided correction leaves the mirrored hole open") {
  PulseSpec spec = base_pulse();
  spec.drag = {mhz_to_rad(40.0)};
  const auto res = hole_residuals(spec, {mhz_to_rad(40.0), mhz_to_rad(-40.0)});
  CHECK(res[0].residual < 1e-6);
  CHECK(res[1].residual > 0.1);
}

TEST_CASE("peak shift: one-sided correction drags the spectrum away") {
  CHECK(std::abs(rad_to_mhz(spectral_peak_shift(base_pulse()))) < 0.5);

  PulseSpec single = base_pulse();
  single.drag = {mhz_to_rad(40.0)};
  const double shift = rad_to_mhz(spectral_peak_shift(single));
  CHECK(shift == doctest::Approx(-30.0).epsilon(0.1));

  PulseSpec dual = base_pulse();
  dual.drag = {mhz_to_rad(40.0), mhz_to_rad(-40.0)};
  CHECK(std::abs(rad_to_mhz(spectral_peak_shift(dual))) < 1.0);
}

TEST_CASE("stacked same-sign corrections shift far more than a balanced stack") {
  const double alpha = mhz_to_rad(-210.0);
  PulseSpec twice = base_pulse(6.0);
  twice.drag = {alpha, alpha};
  const double shift_twice = rad_to_mhz(spectral_peak_shift(twice));
  CHECK(shift_twice > 155.0);
  CHECK(shift_twice < 185.0);

  PulseSpec balanced = base_pulse(6.0);
  balanced.drag = {alpha, -alpha, alpha};
  const double shift_bal = rad_to_mhz(spectral_peak_shift(balanced));
  CHECK(shift_bal > 40.0);
  CHECK(shift_bal < 60.0);
}

TEST_CASE("sampling applies carrier detuning and phase offset") {
  PulseSpec spec = base_pulse();
  spec.eta = mhz_to_rad(11.0);
  spec.phi0 = 0.4;
  const auto wf = sample_waveform(spec, 0.25);
  REQUIRE(wf.samples.size() == 101);
  CHECK(wf.dt == doctest::Approx(0.25));
  for (size_t k : {size_t(0), size_t(17), size_t(50), size_t(100)}) {
    const double t = std::min(25.0, 0.25 * static_cast<double>(k));
    const cplx expect =
        eval_envelope(spec, t) * std::exp(cplx(0.0, spec.phi0 - spec.eta * t));
    CHECK(std::abs(wf.samples[k] - expect) < 1e-14);
  }
}

TEST_CASE("csv exports are deterministic with fixed headers") {
  PulseSpec spec = base_pulse();
  spec.drag = {mhz_to_rad(40.0)};
  std::ostringstream a, b;
  write_waveform_csv(a, spec, 0.5);
  write_waveform_csv(b, spec, 0.5);
  CHECK(a.str() == b.str());
  CHECK(a.str().substr(0, 11) == "t_ns,re,im\n");

  std::ostringstream s;
  write_spectrum_csv(s, spec, {-50.0, 0.0, 50.0});
  const std::string text = s.str();
  CHECK(text.substr(0, 21) == "f_MHz,re,im,abs_norm\n");
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("malformed specs are rejected") {
  PulseSpec bad_tg = base_pulse();
  bad_tg.base.t_g = 0.0;
  CHECK_THROWS_AS(validate_pulse(bad_tg), InvalidSpecError);

  PulseSpec bad_amp = base_pulse();
  bad_amp.base.amp = -1.0;
  CHECK_THROWS_AS(validate_pulse(bad_amp), InvalidSpecError);

  PulseSpec zero_drag = base_pulse();
  zero_drag.drag = {0.0};
  CHECK_THROWS_AS(validate_pulse(zero_drag), InvalidSpecError);
  CHECK_THROWS_AS(drag_extend(base_pulse(), {0.0}), InvalidSpecError);

  CHECK_THROWS_AS(eval_envelope(base_pulse(), -0.1), DomainError);
  CHECK_THROWS_AS(eval_envelope(base_pulse(), 25.1), DomainError);
  CHECK_THROWS_AS(eval_envelope_derivative(base_pulse(), 1.0, -1), DomainError);
  CHECK_THROWS_AS(sample_waveform(base_pulse(), 0.0), DomainError);
  CHECK_THROWS_AS(sample_waveform(base_pulse(), 1.0), ConfigError);
}
