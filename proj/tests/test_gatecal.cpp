#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "doctest.h"
#include "dragsim/errors.hpp"
#include "dragsim/gatecal.hpp"
#include "dragsim/model.hpp"
#include "dragsim/propagator.hpp"
#include "dragsim/rng.hpp"
#include "dragsim/units.hpp"

using namespace dragsim;
using cd = std::complex<double>;

namespace {

SystemSpec ideal_qubit() {
  SystemSpec sys;
  sys.modes.push_back(ModeSpec{"q0", 2, 3.76, 0.0});
  return sys;
}

SystemSpec transmon3() {
  SystemSpec sys;
  sys.modes.push_back(ModeSpec{"q0", 3, 3.76, -194.6});
  return sys;
}

GateCalibration proto_cal(double carrier_ghz, double t_g = 25.0) {
  GateCalibration cal;
  cal.carrier_ghz = carrier_ghz;
  cal.t_g = t_g;
  return cal;
}

bool phase_equal(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b, double tol) {
  return std::abs((a.adjoint() * b).trace()) > 2.0 - tol;
}

}  // namespace

TEST_CASE("calibration survives a serialization round trip unchanged") {
  GateCalibration cal;
  cal.amplitude = 0.16755160819145563;
  cal.vz_phase = 1.9238476283764523;
  cal.drag_set_mhz = {-194.6, 40.0, -40.0};
  cal.carrier_ghz = 3.7598765432109876;
  cal.t_g = 25.0;
  cal.eta_mhz = 0.37;

  const std::string text = calibration_to_json(cal);
  CHECK(text.find("amplitude_rad_per_ns") != std::string::npos);
  CHECK(text.find("drag_set_MHz") != std::string::npos);
  CHECK(text.back() == '\n');

  const GateCalibration back = calibration_from_json(text);
  CHECK(back.amplitude == cal.amplitude);
  CHECK(back.vz_phase == cal.vz_phase);
  REQUIRE(back.drag_set_mhz.size() == 3);
  CHECK(back.drag_set_mhz[0] == cal.drag_set_mhz[0]);
  CHECK(back.drag_set_mhz[1] == cal.drag_set_mhz[1]);
  CHECK(back.drag_set_mhz[2] == cal.drag_set_mhz[2]);
  CHECK(back.carrier_ghz == cal.carrier_ghz);
  CHECK(back.t_g == cal.t_g);
  CHECK(back.eta_mhz == cal.eta_mhz);

  // and a second trip produces the identical document
  CHECK(calibration_to_json(back) == text);
}

TEST_CASE("calibration document rejections") {
  CHECK_THROWS_AS(calibration_from_json("not json"), ConfigError);
  CHECK_THROWS_AS(calibration_from_json("{}"), ConfigError);
  CHECK_THROWS_AS(calibration_from_json(R"({"amplitude_rad_per_ns": "big",
      "vz_phase_rad": 0, "drag_set_MHz": [], "carrier_GHz": 3.76,
      "t_g_ns": 25, "eta_MHz": 0})"),
                  ConfigError);
  CHECK_THROWS_AS(calibration_from_json(R"({"amplitude_rad_per_ns": 0.1,
      "vz_phase_rad": 0, "drag_set_MHz": 40.0, "carrier_GHz": 3.76,
      "t_g_ns": 25, "eta_MHz": 0})"),
                  ConfigError);
  CHECK_THROWS_AS(calibration_from_json(R"({"amplitude_rad_per_ns": 0.1,
      "vz_phase_rad": 0, "drag_set_MHz": [40.0, "x"], "carrier_GHz": 3.76,
      "t_g_ns": 25, "eta_MHz": 0})"),
                  ConfigError);
}

TEST_CASE("calibration assembles its drive in solver units") {
  GateCalibration cal;
  cal.amplitude = 0.12;
  cal.drag_set_mhz = {-194.6, 40.0};
  cal.carrier_ghz = 3.76;
  cal.t_g = 30.0;
  cal.eta_mhz = 2.5;
  const PulseSpec spec = cal.pulse();
  CHECK(spec.base.shape == Shape::sine4);
  CHECK(spec.base.amp == 0.12);
  CHECK(spec.base.t_g == 30.0);
  REQUIRE(spec.drag.size() == 2);
  CHECK(spec.drag[0] == mhz_to_rad(-194.6));
  CHECK(spec.drag[1] == mhz_to_rad(40.0));
  CHECK(spec.eta == mhz_to_rad(2.5));
  CHECK(spec.phi0 == 0.0);
  CHECK(cal.carrier_rad() == ghz_to_rad(3.76));
}

TEST_CASE("mode lookup by label") {
  SystemSpec sys;
  sys.modes.push_back(ModeSpec{"q0", 3, 3.76, -194.6});
  sys.modes.push_back(ModeSpec{"tls", 2, 3.80, 0.0});
  CHECK(mode_index(sys, "q0") == 0);
  CHECK(mode_index(sys, "tls") == 1);
  CHECK_THROWS_AS(mode_index(sys, "q9"), LookupError);
}

TEST_CASE("amplitude scan finds the analytic half-population crossing") {
  const SystemSpec sys = ideal_qubit();
  const GateCalibration proto = proto_cal(3.76);
  const double found = coarse_amplitude(sys, 0, proto);
  // a real resonant envelope rotates by its area, half population at
  // area = pi/2, and the flat-top area is 3/8 of peak * width
  const double expected = 4.0 * pi / (3.0 * proto.t_g);
  CHECK(found == doctest::Approx(expected).epsilon(1e-4));
  CHECK_THROWS_AS(coarse_amplitude(sys, 0, proto, {}, {}, 51), DomainError);

  // a far-detuned carrier never reaches half population
  const GateCalibration off = proto_cal(4.26);
  CHECK_THROWS_AS(coarse_amplitude(sys, 0, off), CalibrationError);
}

TEST_CASE("compensation scan lands on zero for a perfect quarter flip") {
  const SystemSpec sys = ideal_qubit();
  GateCalibration cal = proto_cal(3.76);
  cal.amplitude = 4.0 * pi / (3.0 * cal.t_g);
  const double phi = coarse_vz(sys, 0, cal);
  const bool near_zero = phi < 1e-5 || phi > two_pi - 1e-5;
  CHECK(near_zero);
  CHECK_THROWS_AS(coarse_vz(sys, 0, cal, {}, {}, 101), DomainError);

  // an idle drive has a flat landscape
  GateCalibration dead = cal;
  dead.amplitude = 0.0;
  CHECK_THROWS_AS(coarse_vz(sys, 0, dead), CalibrationError);
}

TEST_CASE("coarse passes plus refinement reach a high-fidelity quarter flip") {
  const SystemSpec sys = transmon3();
  GateCalibration cal = proto_cal(3.76);
  cal.drag_set_mhz = {-194.6};

  cal.amplitude = coarse_amplitude(sys, 0, cal);
  cal.vz_phase = coarse_vz(sys, 0, cal);
  const double before = sqrtx_process_fidelity(sys, 0, cal);
  cal = refine_calibration(sys, 0, cal);
  const double after = sqrtx_process_fidelity(sys, 0, cal);
  CHECK(after >= before - 1e-9);
  CHECK(after >= 0.999);

  CHECK_THROWS_AS(refine_calibration(sys, 0, proto_cal(3.76)), CalibrationError);
  CHECK_THROWS_AS(refine_calibration(sys, 0, cal, std::vector<int>{}), DomainError);
  CHECK_THROWS_AS(refine_calibration(sys, 0, cal, std::vector<int>{0}), DomainError);
}

TEST_CASE("engine wiring carries the compensation as the frame unit") {
  const SystemSpec sys = ideal_qubit();
  GateCalibration cal = proto_cal(3.76);
  cal.amplitude = 4.0 * pi / (3.0 * cal.t_g);
  cal.vz_phase = 0.7234;
  SequenceEngine eng = make_engine(sys, 0, cal);

  Vec a = eng.ground_state();
  eng.run(a, {make_pulse(0), make_virtual_z(0, PhaseInc{0, 1, 0.0}), make_pulse(0)});
  Vec b = eng.ground_state();
  eng.run(b, {make_pulse(0), make_virtual_z(0, cal.vz_phase), make_pulse(0)});
  CHECK((a - b).norm() < 1e-15);
}

TEST_CASE("explicit rotation matrices") {
  const Eigen::Matrix2cd sx = sqrtx_matrix();
  CHECK((sx * sx * sx * sx + Eigen::Matrix2cd::Identity()).norm() < 1e-15);

  const U3Params quarter{half_pi, -half_pi, half_pi};
  CHECK((u3_matrix(quarter) - sx).norm() < 1e-15);

  const U3Params flip{pi, 0.0, 0.0};
  const Eigen::Matrix2cd x = u3_matrix(flip);
  CHECK(std::abs(x(0, 0)) < 1e-15);
  CHECK(std::abs(x(0, 1) - cd(-1.0, 0.0)) < 1e-12);
}

TEST_CASE("compiled rotations reproduce their target matrix") {
  SUBCASE("generic angles") {
    const U3Params p{0.7, 1.1, -2.3};
    const auto items = compile_u3(p, 0, 0);
    REQUIRE(items.size() == 5);
    CHECK(items[0].phase.units == 0);
    CHECK(items[2].phase.units == 1);
    CHECK(items[4].phase.units == 1);
    CHECK(phase_equal(ideal_sequence_matrix(items, 0.0), u3_matrix(p), 1e-12));
  }

  SUBCASE("quarter angles compile to exact quarter counts") {
    const U3Params p{half_pi, pi, -half_pi};
    const auto items = compile_u3(p, 0, 0);
    for (const auto& it : items)
      if (it.kind == SeqItem::Kind::VirtualZ) CHECK(it.phase.extra == 0.0);
    CHECK(phase_equal(ideal_sequence_matrix(items, 0.0), u3_matrix(p), 1e-12));
  }

  SUBCASE("sweep of quarter-grid rotations") {
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) {
          const U3Params p{half_pi * a, half_pi * b, half_pi * c};
          CHECK(phase_equal(ideal_sequence_matrix(compile_u3(p, 0, 0), 0.0),
                            u3_matrix(p), 1e-12));
        }
  }
}

TEST_CASE("the single-qubit group table closes and inverts") {
  const CliffordTable& t = clifford_table();
  CHECK(t.identity == 0);
  CHECK(t.elems[0].theta == 0.0);

  std::array<Eigen::Matrix2cd, 24> mats;
  for (int i = 0; i < 24; ++i) mats[static_cast<size_t>(i)] = u3_matrix(t.elems[static_cast<size_t>(i)]);

  // all distinct
  for (int i = 0; i < 24; ++i)
    for (int j = i + 1; j < 24; ++j)
      CHECK_FALSE(phase_equal(mats[static_cast<size_t>(i)], mats[static_cast<size_t>(j)], 1e-6));

  // composition and inversion agree with matrix algebra
  for (int i = 0; i < 24; ++i) {
    for (int j = 0; j < 24; ++j) {
      const auto k = t.compose[static_cast<size_t>(i)][static_cast<size_t>(j)];
      CHECK(phase_equal(mats[static_cast<size_t>(i)] * mats[static_cast<size_t>(j)],
                        mats[k], 1e-9));
    }
    CHECK(t.compose[t.inverse[static_cast<size_t>(i)]][static_cast<size_t>(i)] == t.identity);
    CHECK(phase_equal(mats[t.inverse[static_cast<size_t>(i)]],
                      mats[static_cast<size_t>(i)].adjoint(), 1e-9));
  }
}

TEST_CASE("random sequences with their closing element compose to identity") {
  Rng rng(404);
  for (int length : {1, 2, 10, 50}) {
    const auto items = build_rb_items(rng, length, 0, 0);
    CHECK(items.size() == static_cast<size_t>(5 * (length + 1)));
    CHECK(phase_equal(ideal_sequence_matrix(items, 0.0), Eigen::Matrix2cd::Identity(),
                      1e-9));
  }
  CHECK_THROWS_AS(build_rb_items(rng, 0, 0, 0), DomainError);
}

TEST_CASE("retuning swaps out the mirrored detuning pair") {
  GateCalibration cal;
  cal.drag_set_mhz = {-194.6, 40.0, -40.0};
  const GateCalibration out = apply_delta(cal, mhz_to_rad(45.0));
  REQUIRE(out.drag_set_mhz.size() == 3);
  CHECK(out.drag_set_mhz[0] == -194.6);
  CHECK(out.drag_set_mhz[1] == doctest::Approx(45.0).epsilon(1e-12));
  CHECK(out.drag_set_mhz[2] == doctest::Approx(-45.0).epsilon(1e-12));

  GateCalibration flipped;
  flipped.drag_set_mhz = {-40.0, 40.0};
  const GateCalibration out2 = apply_delta(flipped, mhz_to_rad(38.0));
  CHECK(out2.drag_set_mhz[0] == doctest::Approx(-38.0).epsilon(1e-12));
  CHECK(out2.drag_set_mhz[1] == doctest::Approx(38.0).epsilon(1e-12));

  GateCalibration lone;
  lone.drag_set_mhz = {-194.6};
  CHECK_THROWS_AS(apply_delta(lone, mhz_to_rad(45.0)), CalibrationError);
}

TEST_CASE("detuning scan reports an uncoupled spectator as insensitive") {
  SystemSpec sys;
  sys.modes.push_back(ModeSpec{"q0", 3, 3.76, -194.6});
  sys.modes.push_back(ModeSpec{"q1", 2, 3.80, -193.2});

  GateCalibration cal = proto_cal(3.76);
  cal.amplitude = 4.0 * pi / (3.0 * cal.t_g);
  cal.drag_set_mhz = {40.0, -40.0};

  DeltaScanOptions opt;
  opt.points = 5;
  opt.filter_pairs = 8;
  const DeltaScanResult res = optimize_delta(sys, 0, 1, cal, DeltaObjective::pulse_train, opt);
  CHECK(res.insensitive);
  CHECK(res.delta_opt_rad == mhz_to_rad(40.0));
  CHECK(res.grid.size() == 5);
  CHECK(res.objective.size() == 5);

  GateCalibration lone = cal;
  lone.drag_set_mhz = {-194.6};
  CHECK_THROWS_AS(optimize_delta(sys, 0, 1, lone, DeltaObjective::pulse_train, opt),
                  CalibrationError);

  GateCalibration tight = cal;
  tight.drag_set_mhz = {3.0, -3.0};  // default 5 MHz halfwidth reaches zero
  CHECK_THROWS_AS(optimize_delta(sys, 0, 1, tight, DeltaObjective::pulse_train, opt),
                  CalibrationError);

  DeltaScanOptions bad = opt;
  bad.points = 3;
  CHECK_THROWS_AS(optimize_delta(sys, 0, 1, cal, DeltaObjective::pulse_train, bad),
                  DomainError);
}

TEST_CASE("quarter-flip fidelity is exact on a resonant two-level drive") {
  const SystemSpec sys = ideal_qubit();
  GateCalibration cal = proto_cal(3.76);
  cal.amplitude = 4.0 * pi / (3.0 * cal.t_g);
  cal.vz_phase = 0.0;
  const double f = sqrtx_process_fidelity(sys, 0, cal);
  CHECK(f >= 1.0 - 1e-9);
  CHECK(f <= 1.0 + 1e-9);

  // a wrong compensation phase costs fidelity
  GateCalibration off = cal;
  off.vz_phase = 0.4;
  CHECK(sqrtx_process_fidelity(sys, 0, off) < f - 1e-3);
}
