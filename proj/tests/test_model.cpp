#include <cmath>
#include <complex>

#include "doctest.h"
#include "dragsim/errors.hpp"
#include "dragsim/model.hpp"
#include "dragsim/units.hpp"

using namespace dragsim;

namespace {

SystemSpec transmon_pair(double f0_ghz, double f1_ghz, double g_mhz, int levels = 2) {
  SystemSpec sys;
  sys.modes.push_back({"q0", levels, f0_ghz, -194.6});
  sys.modes.push_back({"q1", levels, f1_ghz, -193.2});
  sys.couplings.push_back({0, 1, g_mhz});
  return sys;
}

}  // namespace

TEST_CASE("system validation rejects malformed specs") {
  SystemSpec empty;
  CHECK_THROWS_AS(validate_system(empty), InvalidSpecError);

  SystemSpec one_level;
  one_level.modes.push_back({"q", 1, 3.7, 0.0});
  CHECK_THROWS_AS(validate_system(one_level), InvalidSpecError);

  SystemSpec bad_coupling = transmon_pair(3.76, 3.80, 1.0);
  bad_coupling.couplings[0].b = 7;
  CHECK_THROWS_AS(validate_system(bad_coupling), InvalidSpecError);

  SystemSpec big;
  for (int i = 0; i < 7; ++i) big.modes.push_back({"m" + std::to_string(i), 3, 3.7, -200.0});
  CHECK_THROWS_AS(validate_system(big), CapacityError);
}

TEST_CASE("basis packing: mode 0 slowest, round trip everywhere") {
  SystemSpec sys;
  sys.modes.push_back({"a", 3, 3.7, -200.0});
  sys.modes.push_back({"b", 2, 3.8, 0.0});
  sys.modes.push_back({"c", 3, 3.9, -200.0});
  REQUIRE(system_dim(sys) == 18);
  CHECK(pack_index(sys, {0, 0, 1}) == 1);
  CHECK(pack_index(sys, {0, 1, 0}) == 3);
  CHECK(pack_index(sys, {1, 0, 0}) == 6);
  for (int i = 0; i < 18; ++i) CHECK(pack_index(sys, unpack_index(sys, i)) == i);
  CHECK_THROWS_AS(pack_index(sys, {0, 2, 0}), DomainError);
  CHECK_THROWS_AS(pack_index(sys, {0, 0}), DomainError);
}

TEST_CASE("drift spectrum of an isolated transmon") {
  SystemSpec sys;
  sys.modes.push_back({"q", 3, 3.76, -194.6});
  const Mat h = build_drift(sys);
  const double w = ghz_to_rad(3.76);
  const double a = mhz_to_rad(-194.6);
  CHECK(std::abs(h(0, 0)) < 1e-15);
  CHECK(h(1, 1).real() == doctest::Approx(w).epsilon(1e-14));
  CHECK(h(2, 2).real() == doctest::Approx(2.0 * w + a).epsilon(1e-14));
  CHECK(std::abs(h(1, 2)) < 1e-15);
}

TEST_CASE("dressed pair splitting follows the exact two-level closed form") {
  const double delta_mhz = 40.0, g_mhz = 5.0;
  const SystemSpec sys = transmon_pair(3.76, 3.76 + delta_mhz * 1e-3, g_mhz);
  const DetuningReport rep = detuning_report(sys, 0, 1);
  CHECK(rad_to_mhz(rep.bare) == doctest::Approx(delta_mhz).epsilon(1e-12));
  const double expect = std::sqrt(delta_mhz * delta_mhz + 4.0 * g_mhz * g_mhz);
  CHECK(rad_to_mhz(rep.dressed) == doctest::Approx(expect).epsilon(1e-12));

  // Level repulsion pushes the dressed transitions apart, never together.
  CHECK(rep.dressed > rep.bare);
}

TEST_CASE("dressed labels survive moderate mixing and flag strong mixing") {
  const DressedSpectrum ds = dressed_spectrum(transmon_pair(3.76, 3.80, 5.0));
  const int eg = ds.find({1, 0});
  const int ge = ds.find({0, 1});
  CHECK(ds.levels[eg].overlap > 0.9);
  CHECK(ds.levels[ge].overlap > 0.9);
  CHECK_FALSE(ds.levels[eg].low_overlap);
  CHECK_THROWS_AS(ds.transition({2, 0}), LookupError);

  // Near-degenerate pair: the single-excitation levels mix half and half,
  // so the dominant-component overlap collapses toward its 0.5 floor.
  const DressedSpectrum close = dressed_spectrum(transmon_pair(3.76, 3.7601, 5.0));
  CHECK(close.levels[close.find({1, 0})].overlap < 0.6);
  CHECK(close.levels[close.find({0, 1})].overlap < 0.6);
}

TEST_CASE("drive quadratures embed the right ladder elements") {
  SystemSpec sys;
  sys.modes.push_back({"q", 3, 3.76, -194.6});
  sys.modes.push_back({"s", 2, 3.80, 0.0});
  sys.couplings.push_back({0, 1, 1.0});
  const DriveOps ops = drive_term(sys, 0);
  // X couples |0,occ1> and |1,occ1> with 1/2, |1,occ1> and |2,occ1> with
  // sqrt(2)/2, diagonal zero.
  CHECK(ops.x(pack_index(sys, {0, 0}), pack_index(sys, {1, 0})).real() ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ops.x(pack_index(sys, {1, 1}), pack_index(sys, {2, 1})).real() ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));
  CHECK(std::abs(ops.x(pack_index(sys, {0, 0}), pack_index(sys, {0, 1}))) < 1e-15);
  // Y = i(a^dag - a)/2: raising entry +i/2, lowering entry -i/2.
  const cplx y10 = ops.y(pack_index(sys, {1, 0}), pack_index(sys, {0, 0}));
  CHECK(y10.imag() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK((ops.x - ops.x.adjoint()).norm() < 1e-15);
  CHECK((ops.y - ops.y.adjoint()).norm() < 1e-15);
}

TEST_CASE("rotating generator reproduces the dressed two-qubit drive matrix") {
  // Two-level pair driven on mode 0 at its dressed transition: in the
  // dressed basis (gg, ge, eg, ee) the generator must show the plain
  // Omega/2 ladder on the target, the state-dependent +-Omega g / 2 Delta0
  // cross-drive on the spectator, and diagonal (0, Delta0, 0, Delta0).
  const double g_mhz = 1.0;
  const SystemSpec sys = transmon_pair(3.76, 3.81, g_mhz);
  const DressedSpectrum ds = dressed_spectrum(sys);
  const double carrier = dressed_mode_transition(ds, sys, 0);
  const double delta0 = detuning_report(sys, 0, 1).dressed;
  const double g = mhz_to_rad(g_mhz);
  const double omega = 0.3 * delta0;

  PulseSpec pulse;
  pulse.base.t_g = 25.0;
  pulse.base.amp = omega;
  const RotatingGenerator gen(sys, pulse, 0, carrier);
  const Mat h_bare = gen.hamiltonian(12.5);  // envelope peak: amp exactly

  const int idx[4] = {ds.find({0, 0}), ds.find({0, 1}), ds.find({1, 0}), ds.find({1, 1})};
  Mat v(4, 4);
  for (int k = 0; k < 4; ++k) v.col(k) = ds.vectors.col(idx[k]);
  const Mat h_dressed = v.adjoint() * h_bare * v;

  Mat expect(4, 4);
  const double zx = omega * g / (2.0 * delta0);
  expect << 0.0, zx, omega / 2.0, 0.0,
      zx, delta0, 0.0, omega / 2.0,
      omega / 2.0, 0.0, 0.0, -zx,
      0.0, omega / 2.0, -zx, delta0;

  const double ratio = g / delta0;
  const double tol = 2.0 * ratio * ratio;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const double scale = std::max(std::abs(expect(r, c)), omega / 2.0);
      CHECK(std::abs(h_dressed(r, c) - expect(r, c)) <= tol * scale);
    }
}

TEST_CASE("generator wiring: static part, frame phase, leak port") {
  const SystemSpec sys = transmon_pair(3.76, 3.80, 1.0, 3);
  const DressedSpectrum ds = dressed_spectrum(sys);
  const double carrier = dressed_mode_transition(ds, sys, 0);

  PulseSpec pulse;
  pulse.base.t_g = 25.0;
  pulse.base.amp = 0.1;

  RotatingGenerator gen(sys, pulse, 0, carrier);
  CHECK((gen.h_static() - (build_drift(sys) - carrier * number_op(sys))).norm() < 1e-12);
  CHECK((gen.hamiltonian(3.0) - gen.hamiltonian(3.0).adjoint()).norm() < 1e-12);

  // frame_phase rotates the envelope sample.
  const cplx e0 = gen.drive_envelope(7.0);
  gen.frame_phase = 0.9;
  const cplx e1 = gen.drive_envelope(7.0);
  CHECK(std::abs(e1 - e0 * std::polar(1.0, 0.9)) < 1e-14);
  gen.frame_phase = 0.0;

  // A leak port adds the same envelope on the named mode, scaled by nu.
  RotatingGenerator leaky(sys, pulse, 0, carrier, LeakPort{1, 0.25});
  const DriveOps spect = drive_term(sys, 1);
  const cplx e = leaky.drive_envelope(7.0);
  const Mat diff = leaky.hamiltonian(7.0) - gen.hamiltonian(7.0);
  const cplx le = 0.25 * e;
  const Mat expect = le.real() * spect.x + le.imag() * spect.y;
  CHECK((diff - expect).norm() < 1e-13);

  CHECK_THROWS_AS(RotatingGenerator(sys, pulse, 0, carrier, LeakPort{0, 0.1}),
                  InvalidSpecError);
  CHECK_THROWS_AS(RotatingGenerator(sys, pulse, 0, carrier + ghz_to_rad(1.5)),
                  ConfigError);
}
