#include "dragsim/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "dragsim/analytics.hpp"
#include "dragsim/errors.hpp"
#include "dragsim/units.hpp"

namespace dragsim {

namespace {

// Golden-section minimization on [lo, hi]; the bracket comes from a grid
// scan, so the minimum is assumed interior and locally unimodal.
template <typename F>
double golden_min(F&& f, double lo, double hi) {
  const double r = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 60; ++i) {
    if (f1 > f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

// Scan u on [lo, hi] then polish the best cell with golden section.
template <typename F>
double grid_then_golden(F&& f, double lo, double hi, int points) {
  std::vector<double> us(static_cast<size_t>(points));
  size_t best = 0;
  double best_f = 0.0;
  for (int i = 0; i < points; ++i) {
    const double u = lo + (hi - lo) * i / (points - 1);
    us[static_cast<size_t>(i)] = u;
    const double v = f(u);
    if (i == 0 || v < best_f) {
      best_f = v;
      best = static_cast<size_t>(i);
    }
  }
  const double a = us[best == 0 ? 0 : best - 1];
  const double b = us[std::min(us.size() - 1, best + 1)];
  const double u = golden_min(f, a, b);
  return f(u) < best_f ? u : us[best];
}

struct DecayFit {
  double a = 0.0;
  double b = 0.0;
  double sse = 0.0;
};

// Least squares of y on [p^m, 1] at fixed p.
DecayFit solve_decay(const std::vector<int>& ms, const std::vector<double>& y, double p) {
  const double n = static_cast<double>(ms.size());
  double sbb = 0.0, sb = 0.0, sby = 0.0, sy = 0.0;
  for (size_t i = 0; i < ms.size(); ++i) {
    const double b = std::pow(p, static_cast<double>(ms[i]));
    sbb += b * b;
    sb += b;
    sby += b * y[i];
    sy += y[i];
  }
  DecayFit fit;
  const double det = sbb * n - sb * sb;
  if (std::abs(det) < 1e-300) {
    fit.a = 0.0;
    fit.b = sy / n;
  } else {
    fit.a = (sby * n - sb * sy) / det;
    fit.b = (sbb * sy - sb * sby) / det;
  }
  for (size_t i = 0; i < ms.size(); ++i) {
    const double r = y[i] - fit.a * std::pow(p, static_cast<double>(ms[i])) - fit.b;
    fit.sse += r * r;
  }
  return fit;
}

// Geometric-sum basis f_m(q) = (1 - q^m)/(1 - q) and its q-derivative,
// with the q -> 1 limits m and m(m-1)/2.
double geom_basis(int m, double q) {
  if (std::abs(1.0 - q) < 1e-9) return static_cast<double>(m);
  return (1.0 - std::pow(q, m)) / (1.0 - q);
}

double geom_basis_dq(int m, double q) {
  const double md = static_cast<double>(m);
  if (std::abs(1.0 - q) < 1e-9) return 0.5 * md * (md - 1.0);
  const double omq = 1.0 - q;
  return (-md * std::pow(q, m - 1) * omq + (1.0 - std::pow(q, m))) / (omq * omq);
}

// Diagonal of s2 * (J^T J)^+ as standard errors; rank-deficient normal
// matrices fall back to the pseudo-inverse rather than blowing up.
Eigen::VectorXd standard_errors(const Eigen::MatrixXd& J, double s2) {
  const Eigen::MatrixXd jtj = J.transpose() * J;
  const Eigen::MatrixXd cov = s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
  Eigen::VectorXd err(cov.rows());
  for (Eigen::Index i = 0; i < cov.rows(); ++i) err(i) = std::sqrt(std::max(0.0, cov(i, i)));
  return err;
}

void check_rb_result(const RBResult& r, const std::vector<double>& y) {
  if (r.lengths.size() < 4) throw DomainError("fit: need at least 4 sequence lengths");
  if (r.lengths.size() != y.size()) throw DomainError("fit: ragged benchmarking result");
  for (int m : r.lengths)
    if (m < 1) throw DomainError("fit: lengths must be positive");
}

}  // namespace

ErrorFilterResult run_error_filter(const SystemSpec& sys, int target, int spectator,
                                   const GateCalibration& cal, int pairs,
                                   const std::vector<double>& tau_grid, const LeakPort& leak,
                                   const PropagationSettings& s) {
  if (pairs < 1) throw DomainError("error filter: need at least one pi pair");
  if (tau_grid.empty()) throw DomainError("error filter: empty tau grid");
  SequenceEngine eng = make_engine(sys, target, cal, leak, s);
  ErrorFilterResult out;
  out.pairs = pairs;
  out.tau_grid = tau_grid;
  out.p_e_target.reserve(tau_grid.size());
  out.p_e_spectator.reserve(tau_grid.size());
  std::vector<SeqItem> items;
  items.reserve(static_cast<size_t>(10 * pairs));
  for (double tau : tau_grid) {
    items.clear();
    // One pi gate is two compensated pulses; the idle keeps the frame
    // untouched, so the pulse cache carries over to every other tau.
    for (int rep = 0; rep < 2 * pairs; ++rep) {
      items.push_back(make_pulse(0));
      items.push_back(make_virtual_z(target, PhaseInc{0, 1, 0.0}));
      items.push_back(make_pulse(0));
      items.push_back(make_virtual_z(target, PhaseInc{0, 1, 0.0}));
      items.push_back(make_idle(tau));
    }
    Vec state = eng.ground_state();
    eng.run(state, items);
    out.p_e_target.push_back(excited_population(sys, state, target));
    out.p_e_spectator.push_back(excited_population(sys, state, spectator));
  }
  return out;
}

RBResult run_rb(const SystemSpec& sys, int target, int spectator, const GateCalibration& cal,
                const RBOptions& opt, const LeakPort& leak, const PropagationSettings& s) {
  if (opt.lengths.empty()) throw DomainError("rb: empty length grid");
  for (int m : opt.lengths)
    if (m < 1) throw DomainError("rb: lengths must be positive");
  if (opt.sequences_per_length < 1) throw DomainError("rb: need at least one sequence");
  if (spectator >= static_cast<int>(sys.modes.size()))
    throw LookupError("rb: spectator mode out of range");
  if (spectator < 0 && opt.readout == SpectatorReadout::swap_assisted)
    throw ConfigError("rb: swap readout needs a spectator");

  const int workers = std::max(1, opt.workers);
  const int nlen = static_cast<int>(opt.lengths.size());
  const int nseq = opt.sequences_per_length;
  const int total = nlen * nseq;

  struct Sample {
    double survival = 0.0;
    double spect = 0.0;
  };
  std::vector<Sample> slots(static_cast<size_t>(total));

  auto one = [&](SequenceEngine& eng, int idx) {
    const int li = idx / nseq, si = idx % nseq;
    const int m = opt.lengths[static_cast<size_t>(li)];
    Rng rng(Rng::derive_stream(opt.seed, static_cast<uint64_t>(m), static_cast<uint64_t>(si)));
    const std::vector<SeqItem> items = build_rb_items(rng, m, 0, target);
    Vec state = eng.ground_state();
    eng.run(state, items);
    Sample& slot = slots[static_cast<size_t>(idx)];
    slot.survival = 1.0 - excited_population(sys, state, target);
    if (spectator >= 0) {
      slot.spect = opt.readout == SpectatorReadout::swap_assisted
                       ? tls_excitation_readout(sys, state, target, spectator)
                       : excited_population(sys, state, spectator);
    }
  };

  if (workers == 1) {
    SequenceEngine eng = make_engine(sys, target, cal, leak, s);
    for (int idx = 0; idx < total; ++idx) one(eng, idx);
  } else {
    // Round-robin jobs over per-worker engines; every sequence writes its
    // own slot, so the aggregate below never depends on scheduling.
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> fails(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          SequenceEngine eng = make_engine(sys, target, cal, leak, s);
          for (int idx = w; idx < total; idx += workers) one(eng, idx);
        } catch (...) {
          fails[static_cast<size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& f : fails)
      if (f) std::rethrow_exception(f);
  }

  RBResult res;
  res.lengths = opt.lengths;
  res.sequences_per_length = nseq;
  res.seed = opt.seed;
  res.survival.reserve(static_cast<size_t>(nlen));
  res.spectator_excitation.reserve(static_cast<size_t>(nlen));
  for (int li = 0; li < nlen; ++li) {
    double ssum = 0.0, xsum = 0.0;
    for (int si = 0; si < nseq; ++si) {
      ssum += slots[static_cast<size_t>(li * nseq + si)].survival;
      xsum += slots[static_cast<size_t>(li * nseq + si)].spect;
    }
    res.survival.push_back(ssum / nseq);
    res.spectator_excitation.push_back(xsum / nseq);
  }
  return res;
}

const FitParam& FitReport::param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return p;
  throw LookupError("fit report: no parameter named " + name);
}

FitReport fit_epc(const RBResult& result) {
  check_rb_result(result, result.survival);
  const auto& ms = result.lengths;
  const auto& y = result.survival;
  const int n = static_cast<int>(ms.size());

  FitReport rep;
  rep.model = "rb_decay";

  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  auto clamped = [&](const std::string& why) {
    double sse = 0.0;
    for (double v : y) sse += (v - mean) * (v - mean);
    rep.params = {{"A", 0.0, 0.0}, {"B", mean, 0.0}, {"p", 1.0, 0.0}, {"epc", 0.0, 0.0}};
    rep.residual_norm = std::sqrt(sse);
    rep.warning = why;
    return rep;
  };

  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*ymax - *ymin < 1e-12) return clamped("constant survival; no decay to fit");

  double mbar = 0.0;
  for (int m : ms) mbar += m;
  mbar /= n;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < n; ++i) {
    sxy += (ms[static_cast<size_t>(i)] - mbar) * (y[static_cast<size_t>(i)] - mean);
    sxx += (ms[static_cast<size_t>(i)] - mbar) * (ms[static_cast<size_t>(i)] - mbar);
  }
  if (sxy / sxx >= 0.0) return clamped("survival does not decay; p clamped at 1");

  // Search log10(1 - p); decades from 1e-7 up to 1 cover EPC from the
  // cache-limit floor to a fully depolarized gate.
  auto sse_at = [&](double u) { return solve_decay(ms, y, 1.0 - std::pow(10.0, u)).sse; };
  const double ustar = grid_then_golden(sse_at, -7.0, 0.0, 141);
  const double p = 1.0 - std::pow(10.0, ustar);
  const DecayFit fit = solve_decay(ms, y, p);

  Eigen::MatrixXd J(n, 3);
  for (int i = 0; i < n; ++i) {
    const double md = static_cast<double>(ms[static_cast<size_t>(i)]);
    J(i, 0) = std::pow(p, md);
    J(i, 1) = 1.0;
    J(i, 2) = fit.a * md * std::pow(p, md - 1.0);
  }
  const Eigen::VectorXd err = standard_errors(J, fit.sse / (n - 3));

  rep.params = {{"A", fit.a, err(0)},
                {"B", fit.b, err(1)},
                {"p", p, err(2)},
                {"epc", 0.5 * (1.0 - p), 0.5 * err(2)}};
  rep.residual_norm = std::sqrt(fit.sse);
  return rep;
}

FitReport fit_expc(const RBResult& result) {
  check_rb_result(result, result.spectator_excitation);
  const auto& ms = result.lengths;
  const auto& y = result.spectator_excitation;
  const int n = static_cast<int>(ms.size());

  FitReport rep;
  rep.model = "excitation_channel";

  if (*std::max_element(y.begin(), y.end()) < 1e-15) {
    double sse = 0.0;
    for (double v : y) sse += v * v;
    rep.params = {{"expc", 0.0, 0.0}, {"gamma", 0.0, 0.0}};
    rep.residual_norm = std::sqrt(sse);
    return rep;
  }

  // p1(m) = C f_m(q) with f_m the geometric sum; C comes out linearly at
  // each q, leaving a 1-d search over q.
  auto fit_at = [&](double q) {
    double sff = 0.0, sfy = 0.0;
    for (int i = 0; i < n; ++i) {
      const double f = geom_basis(ms[static_cast<size_t>(i)], q);
      sff += f * f;
      sfy += f * y[static_cast<size_t>(i)];
    }
    const double c = sff > 0.0 ? sfy / sff : 0.0;
    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = y[static_cast<size_t>(i)] - c * geom_basis(ms[static_cast<size_t>(i)], q);
      sse += r * r;
    }
    return std::pair<double, double>(c, sse);
  };
  auto sse_at = [&](double u) { return fit_at(1.0 - std::pow(10.0, u)).second; };
  const double ustar = grid_then_golden(sse_at, -7.0, 0.0, 141);
  const double q = 1.0 - std::pow(10.0, ustar);
  auto [c, sse] = fit_at(q);

  std::string warning;
  double r_e = 0.0, gamma = 0.0;
  if (c < 0.0) {
    warning = "negative fitted excitation rate clamped at 0";
    gamma = 1.0 - q;
  } else {
    r_e = c / (q + 2.0 * c);
    gamma = 1.0 - q - 2.0 * c;
    if (gamma < 0.0) {
      gamma = 0.0;
      warning = "negative fitted damping rate clamped at 0";
    }
  }

  // Chain rule through C = r_e (1 - G), q = 1 - G - 2C for the errors.
  const double dc_dr = 1.0 - gamma, dc_dg = -r_e;
  const double dq_dr = -2.0 * (1.0 - gamma), dq_dg = -1.0 + 2.0 * r_e;
  Eigen::MatrixXd J(n, 2);
  for (int i = 0; i < n; ++i) {
    const int m = ms[static_cast<size_t>(i)];
    const double f = geom_basis(m, q), df = geom_basis_dq(m, q);
    J(i, 0) = f * dc_dr + c * df * dq_dr;
    J(i, 1) = f * dc_dg + c * df * dq_dg;
  }
  const Eigen::VectorXd err = standard_errors(J, sse / (n - 2));

  rep.params = {{"expc", r_e, err(0)}, {"gamma", gamma, err(1)}};
  rep.residual_norm = std::sqrt(sse);
  rep.warning = warning;
  return rep;
}

double tls_excitation_readout(const SystemSpec& sys, Vec state, int qubit, int tls) {
  project_ground_state(sys, state, qubit);
  ideal_swap_state(sys, state, qubit, tls);
  return excited_population(sys, state, qubit);
}

double channel_excitation(int m, double r_e, double gamma) {
  if (m < 0) throw DomainError("channel: cycle count must be >= 0");
  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  rho(0, 0) = 1.0;
  const Channel twirl{ChannelKind::xy_twirl, r_e};
  const Channel damp{ChannelKind::amplitude_damping, gamma};
  for (int k = 0; k < m; ++k) rho = apply_channel(damp, apply_channel(twirl, rho));
  return rho(1, 1).real();
}

std::vector<double> resolve_drag_set(const SystemSpec& sys, int target, int spectator,
                                     const DragPlan& plan) {
  if (target < 0 || target >= static_cast<int>(sys.modes.size()))
    throw LookupError("drag plan: target mode out of range");
  std::vector<double> set;
  if (plan.leakage) set.push_back(sys.modes[static_cast<size_t>(target)].anharm_mhz);
  if (plan.use_delta) {
    double d = plan.delta_mhz;
    if (d == 0.0) {
      if (spectator < 0) throw ConfigError("drag plan: no spectator to take the detuning from");
      d = rad_to_mhz(detuning_report(sys, target, spectator).dressed);
    }
    if (d == 0.0) throw ConfigError("drag plan: resolved detuning is zero");
    set.push_back(d);
    if (plan.mirrored) set.push_back(-d);
  }
  set.insert(set.end(), plan.extra_mhz.begin(), plan.extra_mhz.end());
  return set;
}

GateCalibration calibrate_full(const SystemSpec& sys, int target, int spectator, double t_g,
                               const DragPlan& plan, double eta_mhz,
                               const CalibrateOptions& opt, const LeakPort& leak,
                               const PropagationSettings& s) {
  if (t_g <= 0.0) throw DomainError("calibrate: gate time must be positive");
  if (target < 0 || target >= static_cast<int>(sys.modes.size()))
    throw LookupError("calibrate: target mode out of range");

  const DressedSpectrum ds = dressed_spectrum(sys);
  GateCalibration cal;
  cal.t_g = t_g;
  cal.eta_mhz = eta_mhz;
  cal.carrier_ghz = rad_to_ghz(dressed_mode_transition(ds, sys, target));
  cal.drag_set_mhz = resolve_drag_set(sys, target, spectator, plan);

  cal.amplitude = coarse_amplitude(sys, target, cal, leak, s);
  cal.vz_phase = coarse_vz(sys, target, cal, leak, s);

  // Detuning scan sits between the coarse pass and the refinement: the
  // scan only needs a roughly working pulse, and refinement then absorbs
  // the small amplitude shift a changed drag set causes.
  if (plan.use_delta && plan.mirrored && opt.tune_delta && spectator >= 0) {
    const DeltaScanResult scan = optimize_delta(sys, target, spectator, cal,
                                                opt.delta_objective, opt.delta_options, leak, s);
    if (!scan.insensitive) cal = apply_delta(std::move(cal), scan.delta_opt_rad);
  }
  return refine_calibration(sys, target, std::move(cal), opt.refine_schedule, leak, s);
}

std::vector<ScanRow> parameter_scan(const SystemSpec& base, int target, int spectator,
                                    const ScanOptions& opt, const LeakPort& leak,
                                    const PropagationSettings& s) {
  if (opt.grid.empty()) throw DomainError("scan: empty grid");
  if (opt.kind != ScanKind::gate_time && spectator < 0)
    throw ConfigError("scan: coupling and detuning scans need a spectator");

  std::vector<ScanRow> rows;
  rows.reserve(opt.grid.size());
  for (double v : opt.grid) {
    ScanRow row;
    row.param = v;
    try {
      SystemSpec sys = base;
      double t_g = opt.t_g;
      switch (opt.kind) {
        case ScanKind::coupling_g: {
          bool found = false;
          for (auto& c : sys.couplings) {
            if ((c.a == target && c.b == spectator) || (c.a == spectator && c.b == target)) {
              c.g_mhz = v;
              found = true;
            }
          }
          if (!found) sys.couplings.push_back({target, spectator, v});
          break;
        }
        case ScanKind::detuning:
          sys.modes[static_cast<size_t>(spectator)].freq_ghz =
              sys.modes[static_cast<size_t>(target)].freq_ghz + v * 1e-3;
          break;
        case ScanKind::gate_time:
          t_g = v;
          break;
      }
      const GateCalibration cal =
          calibrate_full(sys, target, spectator, t_g, opt.plan, opt.eta_mhz, opt.cal, leak, s);
      const RBResult rb = run_rb(sys, target, spectator, cal, opt.rb, leak, s);
      const FitReport fe = fit_epc(rb);
      const FitReport fx = fit_expc(rb);
      row.epc = fe.param("epc").value;
      row.epc_err = fe.param("epc").err;
      row.expc = fx.param("expc").value;
      row.expc_err = fx.param("expc").err;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dragsim
