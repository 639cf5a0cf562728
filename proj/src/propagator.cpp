#include "dragsim/propagator.hpp"

#include <bit>
#include <cmath>

#include "dragsim/errors.hpp"
#include "dragsim/units.hpp"

namespace dragsim {

namespace {

void check_unitary(const Mat& u) {
  const Mat g = u.adjoint() * u - Mat::Identity(u.rows(), u.cols());
  if (g.cwiseAbs().maxCoeff() > 1e-9)
    throw IntegrityError("propagator: unitarity lost beyond 1e-9");
}

int step_count(double t_g, double dt) {
  if (!(dt > 0.0)) throw ConfigError("propagator: dt must be positive");
  return std::max(1, static_cast<int>(std::llround(t_g / dt)));
}

}  // namespace

Mat propagate_unitary(const RotatingGenerator& gen, const PropagationSettings& s) {
  const double tg = gen.gate_time();
  const int n = step_count(tg, s.dt);
  const double h = tg / n;
  const int dim = gen.dim();
  Mat u = Mat::Identity(dim, dim);
  Eigen::SelfAdjointEigenSolver<Mat> es;
  Vec phases(dim);
  for (int k = 0; k < n; ++k) {
    const double tm = (k + 0.5) * h;
    es.compute(gen.hamiltonian(tm));
    if (es.info() != Eigen::Success)
      throw IntegrityError("propagator: step eigendecomposition failed");
    for (int i = 0; i < dim; ++i)
      phases(i) = std::polar(1.0, -h * es.eigenvalues()(i));
    u = es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * u));
  }
  check_unitary(u);
  return u;
}

SeqItem make_pulse(int gate) {
  SeqItem it;
  it.kind = SeqItem::Kind::Pulse;
  it.gate = gate;
  return it;
}

SeqItem make_idle(double tau_ns) {
  if (tau_ns < 0.0) throw DomainError("propagator: idle duration must be >= 0");
  SeqItem it;
  it.kind = SeqItem::Kind::Idle;
  it.idle_ns = tau_ns;
  return it;
}

SeqItem make_virtual_z(int mode, double phi) {
  SeqItem it;
  it.kind = SeqItem::Kind::VirtualZ;
  it.mode = mode;
  it.phase.extra = phi;
  return it;
}

SeqItem make_virtual_z(int mode, PhaseInc inc) {
  SeqItem it;
  it.kind = SeqItem::Kind::VirtualZ;
  it.mode = mode;
  it.phase = inc;
  return it;
}

SeqItem make_ideal_swap(int mode_a, int mode_b) {
  SeqItem it;
  it.kind = SeqItem::Kind::IdealSwap;
  it.mode = mode_a;
  it.mode_b = mode_b;
  return it;
}

SeqItem make_project_ground(int mode) {
  SeqItem it;
  it.kind = SeqItem::Kind::ProjectGround;
  it.mode = mode;
  return it;
}

size_t SequenceEngine::CacheHash::operator()(const CacheKey& k) const {
  uint64_t h = 0x9e3779b97f4a7c15ULL * (static_cast<uint64_t>(k.gate) + 1);
  h ^= static_cast<uint64_t>(k.units) * 0xbf58476d1ce4e5b9ULL;
  h ^= static_cast<uint64_t>(k.quarters) * 0x94d049bb133111ebULL;
  h ^= k.extra_bits * 0x2545f4914f6cdd1dULL;
  h ^= h >> 29;
  return static_cast<size_t>(h);
}

SequenceEngine::SequenceEngine(SystemSpec sys, double carrier, PropagationSettings settings)
    : sys_(std::move(sys)), carrier_(carrier), settings_(settings) {
  validate_system(sys_);
  const Mat hs = build_drift(sys_) - carrier_ * number_op(sys_);
  Eigen::SelfAdjointEigenSolver<Mat> es(hs);
  if (es.info() != Eigen::Success)
    throw IntegrityError("propagator: static eigendecomposition failed");
  idle_vectors_ = es.eigenvectors();
  idle_energies_ = es.eigenvalues();
}

int SequenceEngine::add_gate(const GateDef& def) {
  GateSlot slot;
  slot.def = def;
  slot.gen = std::make_unique<RotatingGenerator>(sys_, def.spec, def.target, carrier_, def.leak);
  gates_.push_back(std::move(slot));
  return static_cast<int>(gates_.size()) - 1;
}

void SequenceEngine::set_gate(int id, const GateDef& def) {
  if (id < 0 || id >= static_cast<int>(gates_.size()))
    throw LookupError("propagator: no such gate");
  gates_[id].def = def;
  gates_[id].gen = std::make_unique<RotatingGenerator>(sys_, def.spec, def.target, carrier_, def.leak);
  for (auto it = cache_.begin(); it != cache_.end();) {
    if (it->first.gate == id)
      it = cache_.erase(it);
    else
      ++it;
  }
}

const GateDef& SequenceEngine::gate(int id) const {
  if (id < 0 || id >= static_cast<int>(gates_.size()))
    throw LookupError("propagator: no such gate");
  return gates_[id].def;
}

void SequenceEngine::set_unit_value(double v) {
  if (v != unit_value_) cache_.clear();
  unit_value_ = v;
}

Vec SequenceEngine::ground_state() const {
  Vec psi = Vec::Zero(system_dim(sys_));
  psi(0) = 1.0;
  return psi;
}

double SequenceEngine::frame_angle(const PhaseInc& p) const {
  const double from_units =
      p.units == 0 ? 0.0 : std::fmod(static_cast<double>(p.units) * unit_value_, two_pi);
  const int q = static_cast<int>(((p.quarters % 4) + 4) % 4);
  const double from_extra = p.extra == 0.0 ? 0.0 : std::fmod(p.extra, two_pi);
  return from_units + q * half_pi + from_extra;
}

void SequenceEngine::apply_pulse(Vec& state, int gate_id, const PhaseInc& frame, bool use_cache) {
  if (gate_id < 0 || gate_id >= static_cast<int>(gates_.size()))
    throw LookupError("propagator: no such gate");
  const double phi = frame_angle(frame);
  if (!use_cache) {
    RotatingGenerator& gen = *gates_[gate_id].gen;
    gen.frame_phase = phi;
    const double tg = gen.gate_time();
    const int n = step_count(tg, settings_.dt);
    const double h = tg / n;
    const int dim = gen.dim();
    Eigen::SelfAdjointEigenSolver<Mat> es;
    for (int k = 0; k < n; ++k) {
      es.compute(gen.hamiltonian((k + 0.5) * h));
      if (es.info() != Eigen::Success)
        throw IntegrityError("propagator: step eigendecomposition failed");
      Vec c = es.eigenvectors().adjoint() * state;
      for (int i = 0; i < dim; ++i) c(i) *= std::polar(1.0, -h * es.eigenvalues()(i));
      state = es.eigenvectors() * c;
    }
    gen.frame_phase = 0.0;
    return;
  }
  CacheKey key{gate_id, frame.units, static_cast<int>(((frame.quarters % 4) + 4) % 4),
               std::bit_cast<uint64_t>(frame.extra)};
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    RotatingGenerator& gen = *gates_[gate_id].gen;
    gen.frame_phase = phi;
    Mat u = propagate_unitary(gen, settings_);
    gen.frame_phase = 0.0;
    it = cache_.emplace(key, std::move(u)).first;
  }
  state = it->second * state;
}

void SequenceEngine::apply_idle(Vec& state, double tau) const {
  if (tau == 0.0) return;
  Vec c = idle_vectors_.adjoint() * state;
  for (int i = 0; i < c.size(); ++i) c(i) *= std::polar(1.0, -tau * idle_energies_(i));
  state = idle_vectors_ * c;
}

void SequenceEngine::run(Vec& state, const std::vector<SeqItem>& items, bool use_cache) {
  if (state.size() != system_dim(sys_))
    throw DomainError("propagator: state dimension mismatch");
  std::vector<PhaseInc> frames(sys_.modes.size());
  for (const SeqItem& it : items) {
    switch (it.kind) {
      case SeqItem::Kind::Pulse: {
        if (it.gate < 0 || it.gate >= static_cast<int>(gates_.size()))
          throw LookupError("propagator: no such gate");
        const int target = gates_[static_cast<size_t>(it.gate)].def.target;
        apply_pulse(state, it.gate, frames[static_cast<size_t>(target)], use_cache);
        break;
      }
      case SeqItem::Kind::Idle:
        apply_idle(state, it.idle_ns);
        break;
      case SeqItem::Kind::VirtualZ: {
        if (it.mode < 0 || it.mode >= static_cast<int>(frames.size()))
          throw LookupError("propagator: virtual-z on missing mode");
        PhaseInc& f = frames[static_cast<size_t>(it.mode)];
        // A virtual Z by phi acts as diag(1, e^{i phi}) on the mode; the
        // equivalent frame move retards every later drive phase by phi.
        f.quarters -= it.phase.quarters;
        f.units -= it.phase.units;
        f.extra -= it.phase.extra;
        break;
      }
      case SeqItem::Kind::IdealSwap:
        ideal_swap_state(sys_, state, it.mode, it.mode_b);
        break;
      case SeqItem::Kind::ProjectGround:
        project_ground_state(sys_, state, it.mode);
        break;
    }
  }
}

Mat SequenceEngine::pulse_unitary(int gate_id, double frame_phase) const {
  if (gate_id < 0 || gate_id >= static_cast<int>(gates_.size()))
    throw LookupError("propagator: no such gate");
  RotatingGenerator& gen = *gates_[gate_id].gen;
  gen.frame_phase = frame_phase;
  Mat u = propagate_unitary(gen, settings_);
  gen.frame_phase = 0.0;
  return u;
}

Vec evolve_sequence(const SystemSpec& sys, double carrier, const Vec& initial,
                    const std::vector<GateDef>& gates, const std::vector<SeqItem>& items,
                    const PropagationSettings& settings) {
  SequenceEngine engine(sys, carrier, settings);
  for (const GateDef& g : gates) engine.add_gate(g);
  Vec state = initial;
  engine.run(state, items);
  return state;
}

void project_ground_state(const SystemSpec& sys, Vec& state, int mode) {
  if (mode < 0 || mode >= static_cast<int>(sys.modes.size()))
    throw LookupError("propagator: project on missing mode");
  const int dim = system_dim(sys);
  if (state.size() != dim) throw DomainError("propagator: state dimension mismatch");
  double norm2 = 0.0;
  for (int idx = 0; idx < dim; ++idx) {
    if (unpack_index(sys, idx)[static_cast<size_t>(mode)] != 0)
      state(idx) = 0.0;
    else
      norm2 += std::norm(state(idx));
  }
  if (norm2 < 1e-280)
    throw IntegrityError("propagator: reset-degenerate projection (zero norm)");
  state /= std::sqrt(norm2);
}

void ideal_swap_state(const SystemSpec& sys, Vec& state, int mode_a, int mode_b) {
  const auto& modes = sys.modes;
  if (mode_a < 0 || mode_b < 0 || mode_a >= static_cast<int>(modes.size()) ||
      mode_b >= static_cast<int>(modes.size()) || mode_a == mode_b)
    throw LookupError("propagator: swap needs two distinct modes");
  const int dim = system_dim(sys);
  if (state.size() != dim) throw DomainError("propagator: state dimension mismatch");
  for (int idx = 0; idx < dim; ++idx) {
    std::vector<int> occ = unpack_index(sys, idx);
    if (occ[static_cast<size_t>(mode_a)] == 1 && occ[static_cast<size_t>(mode_b)] == 0) {
      occ[static_cast<size_t>(mode_a)] = 0;
      occ[static_cast<size_t>(mode_b)] = 1;
      const int jdx = pack_index(sys, occ);
      std::swap(state(idx), state(jdx));
    }
  }
}

std::vector<std::vector<double>> mode_populations(const SystemSpec& sys, const Vec& state) {
  const int dim = system_dim(sys);
  if (state.size() != dim) throw DomainError("propagator: state dimension mismatch");
  std::vector<std::vector<double>> pops(sys.modes.size());
  for (size_t m = 0; m < sys.modes.size(); ++m)
    pops[m].assign(static_cast<size_t>(sys.modes[m].levels), 0.0);
  for (int idx = 0; idx < dim; ++idx) {
    const double p = std::norm(state(idx));
    const std::vector<int> occ = unpack_index(sys, idx);
    for (size_t m = 0; m < occ.size(); ++m) pops[m][static_cast<size_t>(occ[m])] += p;
  }
  return pops;
}

double excited_population(const SystemSpec& sys, const Vec& state, int mode) {
  if (mode < 0 || mode >= static_cast<int>(sys.modes.size()))
    throw LookupError("propagator: no such mode");
  const auto pops = mode_populations(sys, state);
  return 1.0 - pops[static_cast<size_t>(mode)][0];
}

Eigen::Matrix2cd apply_channel(const Channel& ch, const Eigen::Matrix2cd& rho) {
  if (!(ch.param >= 0.0 && ch.param <= 1.0))
    throw DomainError("propagator: channel parameter must lie in [0, 1]");
  Eigen::Matrix2cd out;
  switch (ch.kind) {
    case ChannelKind::amplitude_damping: {
      const double g = ch.param;
      Eigen::Matrix2cd e1, e2;
      e1 << 1.0, 0.0, 0.0, std::sqrt(1.0 - g);
      e2 << 0.0, std::sqrt(g), 0.0, 0.0;
      out = e1 * rho * e1.adjoint() + e2 * rho * e2.adjoint();
      break;
    }
    case ChannelKind::xy_twirl: {
      const double g = ch.param;
      Eigen::Matrix2cd x, y;
      x << 0.0, 1.0, 1.0, 0.0;
      y << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0);
      out = (1.0 - g) * rho + 0.5 * g * (x * rho * x + y * rho * y);
      break;
    }
  }
  return out;
}

}  // namespace dragsim
