#include "dragsim/model.hpp"

#include <cmath>

#include "dragsim/errors.hpp"
#include "dragsim/units.hpp"

namespace dragsim {

namespace {
constexpr int kMaxDim = 64;
}

void validate_system(const SystemSpec& sys) {
  if (sys.modes.empty()) throw InvalidSpecError("model: no modes");
  long long dim = 1;
  for (const auto& m : sys.modes) {
    if (m.levels < 2) throw InvalidSpecError("model: mode needs at least 2 levels");
    if (!std::isfinite(m.freq_ghz) || m.freq_ghz <= 0.0)
      throw InvalidSpecError("model: mode frequency must be positive");
    if (!std::isfinite(m.anharm_mhz))
      throw InvalidSpecError("model: anharmonicity must be finite");
    dim *= m.levels;
    if (dim > kMaxDim) throw CapacityError("model: Hilbert space exceeds 64 states");
  }
  const int n = static_cast<int>(sys.modes.size());
  for (const auto& c : sys.couplings) {
    if (c.a < 0 || c.a >= n || c.b < 0 || c.b >= n || c.a == c.b)
      throw InvalidSpecError("model: coupling references a bad mode index");
    if (!std::isfinite(c.g_mhz)) throw InvalidSpecError("model: coupling must be finite");
  }
}

int system_dim(const SystemSpec& sys) {
  validate_system(sys);
  int dim = 1;
  for (const auto& m : sys.modes) dim *= m.levels;
  return dim;
}

int pack_index(const SystemSpec& sys, const std::vector<int>& occ) {
  if (occ.size() != sys.modes.size())
    throw DomainError("model: occupation length does not match mode count");
  int idx = 0;
  for (size_t i = 0; i < occ.size(); ++i) {
    if (occ[i] < 0 || occ[i] >= sys.modes[i].levels)
      throw DomainError("model: occupation outside the mode's levels");
    idx = idx * sys.modes[i].levels + occ[i];
  }
  return idx;
}

std::vector<int> unpack_index(const SystemSpec& sys, int index) {
  std::vector<int> occ(sys.modes.size());
  for (size_t i = sys.modes.size(); i-- > 0;) {
    occ[i] = index % sys.modes[i].levels;
    index /= sys.modes[i].levels;
  }
  return occ;
}

Mat lowering_op(const SystemSpec& sys, int mode) {
  const int dim = system_dim(sys);
  if (mode < 0 || mode >= static_cast<int>(sys.modes.size()))
    throw LookupError("model: no such mode");
  Mat a = Mat::Zero(dim, dim);
  for (int idx = 0; idx < dim; ++idx) {
    std::vector<int> occ = unpack_index(sys, idx);
    if (occ[mode] == 0) continue;
    const int n = occ[mode];
    occ[mode] -= 1;
    a(pack_index(sys, occ), idx) = std::sqrt(static_cast<double>(n));
  }
  return a;
}

Mat number_op(const SystemSpec& sys) {
  const int dim = system_dim(sys);
  Mat n = Mat::Zero(dim, dim);
  for (int idx = 0; idx < dim; ++idx) {
    const std::vector<int> occ = unpack_index(sys, idx);
    int total = 0;
    for (int o : occ) total += o;
    n(idx, idx) = total;
  }
  return n;
}

Mat build_drift(const SystemSpec& sys) {
  const int dim = system_dim(sys);
  Mat h = Mat::Zero(dim, dim);
  for (int idx = 0; idx < dim; ++idx) {
    const std::vector<int> occ = unpack_index(sys, idx);
    double e = 0.0;
    for (size_t i = 0; i < occ.size(); ++i) {
      const double w = ghz_to_rad(sys.modes[i].freq_ghz);
      const double alpha = mhz_to_rad(sys.modes[i].anharm_mhz);
      e += w * occ[i] + 0.5 * alpha * occ[i] * (occ[i] - 1);
    }
    h(idx, idx) = e;
  }
  for (const auto& c : sys.couplings) {
    const double g = mhz_to_rad(c.g_mhz);
    const Mat aa = lowering_op(sys, c.a);
    const Mat ab = lowering_op(sys, c.b);
    h += g * (aa.adjoint() * ab + ab.adjoint() * aa);
  }
  return h;
}

DriveOps drive_term(const SystemSpec& sys, int mode) {
  const Mat a = lowering_op(sys, mode);
  DriveOps d;
  d.x = 0.5 * (a + a.adjoint());
  d.y = cplx(0.0, 0.5) * (a.adjoint() - a);
  return d;
}

int DressedSpectrum::find(const std::vector<int>& bare) const {
  int best = -1;
  for (size_t k = 0; k < levels.size(); ++k) {
    if (levels[k].bare != bare) continue;
    if (best < 0 || levels[k].overlap > levels[best].overlap) best = static_cast<int>(k);
  }
  if (best < 0) throw LookupError("model: no dressed level carries that bare label");
  return best;
}

double DressedSpectrum::transition(const std::vector<int>& bare) const {
  const std::vector<int> ground(bare.size(), 0);
  return levels[find(bare)].energy - levels[find(ground)].energy;
}

DressedSpectrum dressed_spectrum(const SystemSpec& sys) {
  const Mat h = build_drift(sys);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.info() != Eigen::Success)
    throw IntegrityError("model: eigendecomposition failed");
  DressedSpectrum ds;
  const int dim = static_cast<int>(h.rows());
  ds.vectors = es.eigenvectors();
  ds.levels.resize(dim);
  for (int k = 0; k < dim; ++k) {
    int dominant = 0;
    double best = -1.0;
    for (int b = 0; b < dim; ++b) {
      const double p = std::norm(ds.vectors(b, k));
      if (p > best) {  // ties keep the lowest bare index
        best = p;
        dominant = b;
      }
    }
    // Fix the eigenvector phase so the dominant amplitude is real positive.
    const cplx amp = ds.vectors(dominant, k);
    if (std::abs(amp) > 0.0) ds.vectors.col(k) *= std::conj(amp) / std::abs(amp);
    DressedLevel& lv = ds.levels[k];
    lv.bare = unpack_index(sys, dominant);
    lv.energy = es.eigenvalues()(k);
    lv.overlap = best;
    lv.low_overlap = best <= 0.5;
  }
  return ds;
}

double dressed_mode_transition(const DressedSpectrum& ds, const SystemSpec& sys, int mode) {
  if (mode < 0 || mode >= static_cast<int>(sys.modes.size()))
    throw LookupError("model: no such mode");
  std::vector<int> bare(sys.modes.size(), 0);
  bare[mode] = 1;
  return ds.transition(bare);
}

DetuningReport detuning_report(const SystemSpec& sys, int mode_a, int mode_b) {
  const DressedSpectrum ds = dressed_spectrum(sys);
  DetuningReport rep;
  rep.bare = ghz_to_rad(sys.modes[mode_b].freq_ghz) - ghz_to_rad(sys.modes[mode_a].freq_ghz);
  rep.dressed = dressed_mode_transition(ds, sys, mode_b) - dressed_mode_transition(ds, sys, mode_a);
  return rep;
}

RotatingGenerator::RotatingGenerator(const SystemSpec& sys, const PulseSpec& pulse,
                                     int target, double carrier, LeakPort leak)
    : pulse_(pulse),
      series_(detail::harmonic_series(pulse)),
      target_(target),
      carrier_(carrier),
      leak_(leak) {
  validate_system(sys);
  if (target < 0 || target >= static_cast<int>(sys.modes.size()))
    throw LookupError("model: no such target mode");
  const DressedSpectrum ds = dressed_spectrum(sys);
  const double ge = dressed_mode_transition(ds, sys, target);
  if (std::abs(carrier - ge) > ghz_to_rad(1.0))
    throw ConfigError("model: carrier more than 1 GHz from the target transition");
  h_static_ = build_drift(sys) - carrier * number_op(sys);
  drive_ = drive_term(sys, target);
  if (leak_.mode >= 0) {
    if (leak_.mode >= static_cast<int>(sys.modes.size()) || leak_.mode == target)
      throw InvalidSpecError("model: leak port must name another mode");
    leak_drive_ = drive_term(sys, leak_.mode);
  }
}

cplx RotatingGenerator::drive_envelope(double t) const {
  return series_.eval(t) * std::polar(1.0, pulse_.phi0 + frame_phase - pulse_.eta * t);
}

Mat RotatingGenerator::hamiltonian(double t) const {
  const cplx e = drive_envelope(t);
  Mat h = h_static_ + e.real() * drive_.x + e.imag() * drive_.y;
  if (leak_.mode >= 0 && leak_.nu != 0.0) {
    const cplx le = leak_.nu * e;
    h += le.real() * leak_drive_.x + le.imag() * leak_drive_.y;
  }
  return h;
}

}  // namespace dragsim
