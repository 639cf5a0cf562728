// dragsim: loads an experiment config, runs the named protocol, and writes
// figure-ready CSV/JSON artifacts plus a run manifest.
//
// Exit codes: 0 success, 2 unreadable/invalid config, 3 numeric failure
// mid-run (partial artifacts are flagged in the manifest), 4 unwritable
// output location.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dragsim/analytics.hpp"
#include "dragsim/errors.hpp"
#include "dragsim/gatecal.hpp"
#include "dragsim/io.hpp"
#include "dragsim/model.hpp"
#include "dragsim/protocols.hpp"
#include "dragsim/pulse.hpp"
#include "dragsim/units.hpp"

namespace {

using nlohmann::json;
using namespace dragsim;

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Config schema

struct Diag {
  std::string field;
  std::string message;
};

struct DragDecl {
  std::string set = "leakage_only";  // leakage_only | single | dual | custom
  double delta_mhz = 0.0;
  std::vector<double> values_mhz;  // custom only
  std::vector<double> extra_mhz;
  bool tune_delta = true;
};

struct Variant {
  std::string name;
  DragDecl drag;
};

struct Config {
  std::string protocol;
  uint64_t seed = 1;
  int workers = 1;
  std::string out_dir = "out";
  std::string format = "csv";
  SystemSpec system;
  int target = 0;
  int spectator = -1;
  double t_g = 25.0;
  double eta_mhz = 0.0;
  std::vector<Variant> variants;
  json params = json::object();
  std::string digest;
};

class Checker {
 public:
  explicit Checker(std::vector<Diag>& diags) : diags_(diags) {}

  void fail(const std::string& field, const std::string& message) {
    diags_.push_back({field, message});
  }

  bool is_obj(const json& j, const std::string& field) {
    if (j.is_object()) return true;
    fail(field, "expected an object");
    return false;
  }

  // Flags keys outside the allowed set so typos surface as diagnostics
  // instead of silently ignored settings.
  void known_keys(const json& j, const std::string& field, std::initializer_list<const char*> keys) {
    if (!j.is_object()) return;
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (const char* k : keys) ok = ok || it.key() == k;
      if (!ok) fail(field + "." + it.key(), "unknown field");
    }
  }

  double num(const json& j, const std::string& field, const char* key, double dflt,
             bool required = false) {
    if (!j.is_object() || !j.contains(key)) {
      if (required) fail(field + "." + key, "required number is missing");
      return dflt;
    }
    if (!j[key].is_number()) {
      fail(field + "." + key, "expected a number");
      return dflt;
    }
    return j[key].get<double>();
  }

  int integer(const json& j, const std::string& field, const char* key, int dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    if (!j[key].is_number_integer()) {
      fail(field + "." + key, "expected an integer");
      return dflt;
    }
    return j[key].get<int>();
  }

  bool boolean(const json& j, const std::string& field, const char* key, bool dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    if (!j[key].is_boolean()) {
      fail(field + "." + key, "expected a boolean");
      return dflt;
    }
    return j[key].get<bool>();
  }

  std::string str(const json& j, const std::string& field, const char* key,
                  const std::string& dflt, bool required = false) {
    if (!j.is_object() || !j.contains(key)) {
      if (required) fail(field + "." + key, "required string is missing");
      return dflt;
    }
    if (!j[key].is_string()) {
      fail(field + "." + key, "expected a string");
      return dflt;
    }
    return j[key].get<std::string>();
  }

  std::vector<double> num_list(const json& j, const std::string& field, const char* key,
                               std::vector<double> dflt, bool required = false) {
    if (!j.is_object() || !j.contains(key)) {
      if (required) fail(field + "." + key, "required list is missing");
      return dflt;
    }
    if (!j[key].is_array()) {
      fail(field + "." + key, "expected a list of numbers");
      return dflt;
    }
    std::vector<double> out;
    for (const auto& v : j[key]) {
      if (!v.is_number()) {
        fail(field + "." + key, "expected a list of numbers");
        return dflt;
      }
      out.push_back(v.get<double>());
    }
    return out;
  }

  std::vector<int> int_list(const json& j, const std::string& field, const char* key,
                            std::vector<int> dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    if (!j[key].is_array()) {
      fail(field + "." + key, "expected a list of integers");
      return dflt;
    }
    std::vector<int> out;
    for (const auto& v : j[key]) {
      if (!v.is_number_integer()) {
        fail(field + "." + key, "expected a list of integers");
        return dflt;
      }
      out.push_back(v.get<int>());
    }
    return out;
  }

 private:
  std::vector<Diag>& diags_;
};

DragDecl parse_drag(Checker& ck, const json& j, const std::string& field) {
  DragDecl d;
  if (!ck.is_obj(j, field)) return d;
  ck.known_keys(j, field, {"set", "delta_mhz", "values_mhz", "extra_mhz", "tune_delta"});
  d.set = ck.str(j, field, "set", "leakage_only");
  if (d.set != "leakage_only" && d.set != "single" && d.set != "dual" && d.set != "custom")
    ck.fail(field + ".set", "must be one of leakage_only, single, dual, custom");
  d.delta_mhz = ck.num(j, field, "delta_mhz", 0.0);
  d.values_mhz = ck.num_list(j, field, "values_mhz", {}, d.set == "custom");
  d.extra_mhz = ck.num_list(j, field, "extra_mhz", {});
  d.tune_delta = ck.boolean(j, field, "tune_delta", true);
  if (d.set != "custom" && j.is_object() && j.contains("values_mhz"))
    ck.fail(field + ".values_mhz", "only valid with set = custom");
  return d;
}

DragPlan to_plan(const DragDecl& d) {
  DragPlan plan;
  if (d.set == "custom") {
    plan.leakage = false;
    plan.extra_mhz = d.values_mhz;
  } else {
    plan.leakage = true;
    plan.use_delta = d.set == "single" || d.set == "dual";
    plan.mirrored = d.set == "dual";
    plan.delta_mhz = d.delta_mhz;
  }
  plan.extra_mhz.insert(plan.extra_mhz.end(), d.extra_mhz.begin(), d.extra_mhz.end());
  return plan;
}

SystemSpec parse_system(Checker& ck, const json& j, Config& cfg) {
  SystemSpec sys;
  const std::string field = "system";
  if (!ck.is_obj(j, field)) return sys;
  ck.known_keys(j, field, {"modes", "couplings", "target", "spectator"});
  if (!j.contains("modes") || !j["modes"].is_array() || j["modes"].empty()) {
    ck.fail("system.modes", "need at least one mode");
    return sys;
  }
  int mi = 0;
  for (const auto& m : j["modes"]) {
    const std::string mf = "system.modes[" + std::to_string(mi++) + "]";
    if (!ck.is_obj(m, mf)) continue;
    ck.known_keys(m, mf, {"label", "levels", "freq_ghz", "anharm_mhz"});
    ModeSpec spec;
    spec.label = ck.str(m, mf, "label", "m" + std::to_string(mi - 1));
    spec.levels = ck.integer(m, mf, "levels", 3);
    spec.freq_ghz = ck.num(m, mf, "freq_ghz", 0.0, true);
    spec.anharm_mhz = ck.num(m, mf, "anharm_mhz", 0.0);
    sys.modes.push_back(spec);
  }
  if (j.contains("couplings")) {
    if (!j["couplings"].is_array()) {
      ck.fail("system.couplings", "expected a list");
    } else {
      int ci = 0;
      for (const auto& c : j["couplings"]) {
        const std::string cf = "system.couplings[" + std::to_string(ci++) + "]";
        if (!ck.is_obj(c, cf)) continue;
        ck.known_keys(c, cf, {"a", "b", "g_mhz"});
        CouplingSpec spec;
        spec.a = ck.integer(c, cf, "a", -1);
        spec.b = ck.integer(c, cf, "b", -1);
        spec.g_mhz = ck.num(c, cf, "g_mhz", 0.0, true);
        sys.couplings.push_back(spec);
      }
    }
  }
  cfg.target = ck.integer(j, field, "target", 0);
  cfg.spectator = ck.integer(j, field, "spectator", -1);
  const int n = static_cast<int>(sys.modes.size());
  if (cfg.target < 0 || cfg.target >= n) ck.fail("system.target", "mode index out of range");
  if (cfg.spectator >= n) ck.fail("system.spectator", "mode index out of range");
  try {
    if (!sys.modes.empty()) validate_system(sys);
  } catch (const std::runtime_error& e) {
    ck.fail(field, e.what());
  }
  return sys;
}

const std::vector<std::string> kProtocols = {"pulse_report",  "calibrate", "error_filter",
                                             "rb",            "scan",      "analytic_report"};

Config parse_config(const std::string& text, std::vector<Diag>& diags) {
  Config cfg;
  Checker ck(diags);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    ck.fail("", std::string("config is not valid JSON: ") + e.what());
    return cfg;
  }
  if (!doc.is_object()) {
    ck.fail("", "config root must be an object");
    return cfg;
  }
  // Digest of the canonical dump: whitespace and key order cannot move it.
  cfg.digest = io::fnv1a_hex(doc.dump());

  ck.known_keys(doc, "config",
                {"protocol", "seed", "workers", "output", "system", "gate", "variants", "params"});
  cfg.protocol = ck.str(doc, "config", "protocol", "", true);
  bool known = false;
  for (const auto& p : kProtocols) known = known || p == cfg.protocol;
  if (!cfg.protocol.empty() && !known) ck.fail("config.protocol", "unknown protocol name");

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
      ck.fail("config.seed", "expected a nonnegative integer");
    else
      cfg.seed = doc["seed"].get<uint64_t>();
  }
  cfg.workers = ck.integer(doc, "config", "workers", 1);
  if (cfg.workers < 1) ck.fail("config.workers", "must be >= 1");

  if (doc.contains("output")) {
    const json& out = doc["output"];
    if (ck.is_obj(out, "output")) {
      ck.known_keys(out, "output", {"dir", "format"});
      cfg.out_dir = ck.str(out, "output", "dir", cfg.out_dir);
      cfg.format = ck.str(out, "output", "format", cfg.format);
    }
  }
  if (cfg.format != "csv" && cfg.format != "json")
    ck.fail("output.format", "must be csv or json");

  if (doc.contains("system")) {
    cfg.system = parse_system(ck, doc["system"], cfg);
  } else {
    ck.fail("system", "required section is missing");
  }

  DragDecl base_drag;
  if (doc.contains("gate")) {
    const json& g = doc["gate"];
    if (ck.is_obj(g, "gate")) {
      ck.known_keys(g, "gate", {"t_g_ns", "eta_mhz", "drag"});
      cfg.t_g = ck.num(g, "gate", "t_g_ns", 25.0);
      cfg.eta_mhz = ck.num(g, "gate", "eta_mhz", 0.0);
      if (g.contains("drag")) base_drag = parse_drag(ck, g["drag"], "gate.drag");
    }
  }
  if (cfg.t_g <= 0.0) ck.fail("gate.t_g_ns", "must be positive");

  if (doc.contains("variants")) {
    if (!doc["variants"].is_array() || doc["variants"].empty()) {
      ck.fail("variants", "expected a non-empty list");
    } else {
      int vi = 0;
      for (const auto& v : doc["variants"]) {
        const std::string vf = "variants[" + std::to_string(vi++) + "]";
        if (!ck.is_obj(v, vf)) continue;
        ck.known_keys(v, vf, {"name", "drag"});
        Variant var;
        var.name = ck.str(v, vf, "name", "", true);
        if (v.contains("drag"))
          var.drag = parse_drag(ck, v["drag"], vf + ".drag");
        else
          ck.fail(vf + ".drag", "required section is missing");
        for (const auto& prev : cfg.variants)
          if (prev.name == var.name) ck.fail(vf + ".name", "duplicate variant name");
        cfg.variants.push_back(var);
      }
    }
  } else {
    cfg.variants.push_back({base_drag.set, base_drag});
  }

  if (doc.contains("params")) {
    if (doc["params"].is_object())
      cfg.params = doc["params"];
    else
      ck.fail("params", "expected an object");
  }

  // Per-protocol requirements that are cheap to state up front.
  if (cfg.protocol == "error_filter" &&
      (cfg.spectator < 0 || cfg.spectator >= static_cast<int>(cfg.system.modes.size())))
    ck.fail("system.spectator", "error_filter needs a spectator mode to read out");
  if (cfg.protocol == "scan") {
    const std::string kind = ck.str(cfg.params, "params", "kind", "", true);
    if (!kind.empty() && kind != "coupling_g" && kind != "detuning" && kind != "gate_time")
      ck.fail("params.kind", "must be coupling_g, detuning, or gate_time");
    ck.num_list(cfg.params, "params", "grid", {}, true);
    if (kind != "gate_time" && cfg.spectator < 0)
      ck.fail("system.spectator", "coupling and detuning scans need a spectator");
  }
  if (cfg.protocol == "rb") {
    const std::string ro = ck.str(cfg.params, "params", "readout", "direct");
    if (ro != "direct" && ro != "swap_assisted")
      ck.fail("params.readout", "must be direct or swap_assisted");
    if (ro == "swap_assisted" && cfg.spectator < 0)
      ck.fail("system.spectator", "swap readout needs a spectator mode");
  }
  if (cfg.protocol == "analytic_report")
    ck.num(cfg.params, "params", "delta0_mhz", 0.0, true);
  return cfg;
}

// ---------------------------------------------------------------------------
// Artifacts

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct RunOutput {
  std::vector<Table> tables;
  json extras = json::object();     // protocol-specific manifest entries
  std::vector<std::string> flagged;
};

std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (size_t i = 0; i < t.columns.size(); ++i)
    os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

// Numbers pass through io::fmt so every emitted digit is pinned to the
// shared 12-significant-digit policy; non-numeric cells stay strings.
json cell_to_json(const std::string& cell) {
  try {
    size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size() && std::isfinite(v)) return json(v);
  } catch (const std::exception&) {
  }
  return json(cell);
}

std::string cell(double v) { return io::fmt(v); }

json fit_to_json(const FitReport& rep) {
  json out;
  out["model"] = rep.model;
  out["residual_norm"] = cell_to_json(cell(rep.residual_norm));
  if (!rep.warning.empty()) out["warning"] = rep.warning;
  for (const auto& p : rep.params) {
    out["params"][p.name]["value"] = cell_to_json(cell(p.value));
    out["params"][p.name]["err"] = cell_to_json(cell(p.err));
  }
  return out;
}

std::vector<double> grid_from(const json& params, Checker& ck, const char* lo_key,
                              const char* hi_key, const char* step_key, double lo, double hi,
                              double step) {
  lo = ck.num(params, "params", lo_key, lo);
  hi = ck.num(params, "params", hi_key, hi);
  step = ck.num(params, "params", step_key, step);
  std::vector<double> grid;
  if (step <= 0.0 || hi < lo) return grid;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
  for (int i = 0; i < n; ++i) grid.push_back(lo + step * i);
  return grid;
}

CalibrateOptions calibrate_options(const json& params, const DragDecl& drag, Checker& ck) {
  CalibrateOptions opt;
  opt.tune_delta = drag.tune_delta;
  if (!params.contains("cal")) return opt;
  const json& c = params["cal"];
  if (!ck.is_obj(c, "params.cal")) return opt;
  ck.known_keys(c, "params.cal",
                {"refine_schedule", "objective", "points", "halfwidth_mhz", "filter_pairs"});
  opt.refine_schedule = ck.int_list(c, "params.cal", "refine_schedule", opt.refine_schedule);
  const std::string obj = ck.str(c, "params.cal", "objective", "pulse_train");
  if (obj == "rb_tail")
    opt.delta_objective = DeltaObjective::rb_tail;
  else if (obj != "pulse_train")
    ck.fail("params.cal.objective", "must be pulse_train or rb_tail");
  opt.delta_options.points = ck.integer(c, "params.cal", "points", opt.delta_options.points);
  opt.delta_options.halfwidth_rad =
      mhz_to_rad(ck.num(c, "params.cal", "halfwidth_mhz", 0.0));
  opt.delta_options.filter_pairs =
      ck.integer(c, "params.cal", "filter_pairs", opt.delta_options.filter_pairs);
  return opt;
}

RBOptions rb_options(const json& params, const Config& cfg, Checker& ck,
                     const std::string& field) {
  RBOptions opt;
  opt.lengths = ck.int_list(params, field, "lengths", opt.lengths);
  opt.sequences_per_length =
      ck.integer(params, field, "sequences_per_length", opt.sequences_per_length);
  if (ck.str(params, field, "readout", "direct") == "swap_assisted")
    opt.readout = SpectatorReadout::swap_assisted;
  opt.seed = cfg.seed;
  opt.workers = cfg.workers;
  return opt;
}

// ---------------------------------------------------------------------------
// Protocol runners

void run_pulse_report(const Config& cfg, Checker& ck, RunOutput& out) {
  const json& p = cfg.params;
  ck.known_keys(p, "params",
                {"amplitude_rad_per_ns", "freq_min_mhz", "freq_max_mhz", "freq_step_mhz",
                 "time_step_ns"});
  const double amp = ck.num(p, "params", "amplitude_rad_per_ns", 4.0 * pi / (3.0 * cfg.t_g));
  const double dt = ck.num(p, "params", "time_step_ns", 0.05);
  const std::vector<double> f_mhz =
      grid_from(p, ck, "freq_min_mhz", "freq_max_mhz", "freq_step_mhz", -150.0, 150.0, 0.5);

  for (const Variant& var : cfg.variants) {
    PulseSpec spec;
    spec.base = {Shape::sine4, cfg.t_g, amp};
    for (double d : resolve_drag_set(cfg.system, cfg.target, cfg.spectator, to_plan(var.drag)))
      spec.drag.push_back(mhz_to_rad(d));
    spec.eta = mhz_to_rad(cfg.eta_mhz);
    validate_pulse(spec);

    std::ostringstream wf;
    write_waveform_csv(wf, spec, dt);
    std::ostringstream sp;
    write_spectrum_csv(sp, spec, f_mhz);

    // The pulse module already emits these two fixtures; re-parse keeps a
    // single formatting policy across every artifact.
    for (const auto& [stem, text] : {std::pair<std::string, std::string>{"waveform_" + var.name, wf.str()},
                                     {"spectrum_" + var.name, sp.str()}}) {
      Table t;
      t.name = stem;
      std::istringstream is(text);
      std::string line;
      bool first = true;
      while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        if (first) {
          t.columns = cells;
          first = false;
        } else {
          t.rows.push_back(cells);
        }
      }
      out.tables.push_back(std::move(t));
    }

    json rep;
    rep["peak_shift_mhz"] = cell_to_json(cell(rad_to_mhz(spectral_peak_shift(spec))));
    for (const HoleResidual& h : hole_residuals(spec, spec.drag)) {
      json row;
      row["detuning_mhz"] = cell_to_json(cell(rad_to_mhz(h.omega)));
      row["residual"] = cell_to_json(cell(h.residual));
      rep["hole_residuals"].push_back(row);
    }
    out.extras["pulse"][var.name] = rep;
  }
}

void run_calibrate(const Config& cfg, Checker& ck, RunOutput& out) {
  const json& p = cfg.params;
  ck.known_keys(p, "params", {"cal", "eta_grid_mhz"});
  for (const Variant& var : cfg.variants) {
    const DragPlan plan = to_plan(var.drag);
    const CalibrateOptions opt = calibrate_options(p, var.drag, ck);
    if (p.contains("eta_grid_mhz")) {
      const std::vector<double> etas = ck.num_list(p, "params", "eta_grid_mhz", {}, true);
      Table t;
      t.name = "calibrate_" + var.name;
      t.columns = {"eta_mhz", "amplitude_rad_per_ns", "vz_phase_rad", "fidelity"};
      for (double eta : etas) {
        const GateCalibration cal =
            calibrate_full(cfg.system, cfg.target, cfg.spectator, cfg.t_g, plan, eta, opt);
        const double fid = sqrtx_process_fidelity(cfg.system, cfg.target, cal);
        t.rows.push_back({cell(eta), cell(cal.amplitude), cell(cal.vz_phase), cell(fid)});
      }
      out.tables.push_back(std::move(t));
    } else {
      const GateCalibration cal = calibrate_full(cfg.system, cfg.target, cfg.spectator, cfg.t_g,
                                                 plan, cfg.eta_mhz, opt);
      out.extras["calibrations"][var.name] = json::parse(calibration_to_json(cal));
      out.extras["fidelity"][var.name] =
          cell_to_json(cell(sqrtx_process_fidelity(cfg.system, cfg.target, cal)));
    }
  }
}

void run_error_filter_protocol(const Config& cfg, Checker& ck, RunOutput& out) {
  const json& p = cfg.params;
  ck.known_keys(p, "params", {"pairs", "tau_min_ns", "tau_max_ns", "tau_step_ns", "cal"});
  const int pairs = ck.integer(p, "params", "pairs", 50);
  const std::vector<double> taus =
      grid_from(p, ck, "tau_min_ns", "tau_max_ns", "tau_step_ns", 0.0, 55.0, 0.25);

  for (const Variant& var : cfg.variants) {
    const GateCalibration cal =
        calibrate_full(cfg.system, cfg.target, cfg.spectator, cfg.t_g, to_plan(var.drag),
                       cfg.eta_mhz, calibrate_options(p, var.drag, ck));
    const ErrorFilterResult res =
        run_error_filter(cfg.system, cfg.target, cfg.spectator, cal, pairs, taus);
    Table t;
    t.name = "errorfilter_" + var.name;
    t.columns = {"tau_ns", "p_e_target", "p_e_spectator"};
    for (size_t i = 0; i < res.tau_grid.size(); ++i)
      t.rows.push_back(
          {cell(res.tau_grid[i]), cell(res.p_e_target[i]), cell(res.p_e_spectator[i])});
    out.tables.push_back(std::move(t));
    out.extras["calibrations"][var.name] = json::parse(calibration_to_json(cal));
  }

  // Closed-form interference peaks for the same geometry: the pi gate spans
  // two compensated pulses.
  const double d0 = std::abs(detuning_report(cfg.system, cfg.target, cfg.spectator).dressed);
  const double tau_max = taus.empty() ? 0.0 : taus.back();
  json peaks;
  for (double tp : predict_peaks(PeakKind::zx, d0, 2.0 * cfg.t_g, tau_max))
    peaks["zx"].push_back(cell_to_json(cell(tp)));
  for (double tp : predict_peaks(PeakKind::ix, d0, 2.0 * cfg.t_g, tau_max))
    peaks["ix"].push_back(cell_to_json(cell(tp)));
  out.extras["predicted_peaks"] = peaks;
}

void run_rb_protocol(const Config& cfg, Checker& ck, RunOutput& out) {
  const json& p = cfg.params;
  ck.known_keys(p, "params", {"lengths", "sequences_per_length", "readout", "cal"});
  const RBOptions opt = rb_options(p, cfg, ck, "params");

  for (const Variant& var : cfg.variants) {
    const GateCalibration cal =
        calibrate_full(cfg.system, cfg.target, cfg.spectator, cfg.t_g, to_plan(var.drag),
                       cfg.eta_mhz, calibrate_options(p, var.drag, ck));
    const RBResult res = run_rb(cfg.system, cfg.target, cfg.spectator, cal, opt);
    Table t;
    t.name = "rb_" + var.name;
    t.columns = {"m", "survival", "spectator_pe"};
    for (size_t i = 0; i < res.lengths.size(); ++i)
      t.rows.push_back({cell(res.lengths[i]), cell(res.survival[i]),
                        cell(res.spectator_excitation[i])});
    out.tables.push_back(std::move(t));
    out.extras["calibrations"][var.name] = json::parse(calibration_to_json(cal));
    out.extras["fits"][var.name]["epc"] = fit_to_json(fit_epc(res));
    out.extras["fits"][var.name]["expc"] = fit_to_json(fit_expc(res));
  }
}

void run_scan_protocol(const Config& cfg, Checker& ck, RunOutput& out) {
  const json& p = cfg.params;
  ck.known_keys(p, "params", {"kind", "grid", "rb", "cal"});
  ScanOptions opt;
  const std::string kind = ck.str(p, "params", "kind", "gate_time");
  opt.kind = kind == "coupling_g" ? ScanKind::coupling_g
                                  : (kind == "detuning" ? ScanKind::detuning : ScanKind::gate_time);
  opt.grid = ck.num_list(p, "params", "grid", {}, true);
  opt.t_g = cfg.t_g;
  opt.eta_mhz = cfg.eta_mhz;
  if (p.contains("rb")) {
    if (ck.is_obj(p["rb"], "params.rb")) {
      ck.known_keys(p["rb"], "params.rb", {"lengths", "sequences_per_length", "readout"});
      opt.rb = rb_options(p["rb"], cfg, ck, "params.rb");
    }
  } else {
    opt.rb.seed = cfg.seed;
    opt.rb.workers = cfg.workers;
  }

  for (const Variant& var : cfg.variants) {
    opt.plan = to_plan(var.drag);
    opt.cal = calibrate_options(p, var.drag, ck);
    const std::vector<ScanRow> rows =
        parameter_scan(cfg.system, cfg.target, cfg.spectator, opt);
    Table t;
    t.name = "scan_" + var.name;
    t.columns = {"param", "epc", "epc_err", "expc", "expc_err"};
    for (const ScanRow& row : rows) {
      if (row.ok) {
        t.rows.push_back({cell(row.param), cell(row.epc), cell(row.epc_err), cell(row.expc),
                          cell(row.expc_err)});
      } else {
        t.rows.push_back({cell(row.param), "nan", "nan", "nan", "nan"});
        out.flagged.push_back(t.name + " at param " + io::fmt(row.param) + ": " + row.error);
      }
    }
    out.tables.push_back(std::move(t));
  }
}

void run_analytic_report(const Config& cfg, Checker& ck, RunOutput& out) {
  const json& p = cfg.params;
  ck.known_keys(p, "params",
                {"delta0_mhz", "omega_rad_per_ns", "g_mhz", "nu", "pairs", "tau_min_ns",
                 "tau_max_ns", "tau_step_ns", "channel"});
  const double d0 = mhz_to_rad(ck.num(p, "params", "delta0_mhz", 0.0, true));
  const double omega = ck.num(p, "params", "omega_rad_per_ns", pi / cfg.t_g);
  const double g = mhz_to_rad(ck.num(p, "params", "g_mhz", 1.0));
  const double nu = ck.num(p, "params", "nu", 0.0);
  const int pairs = ck.integer(p, "params", "pairs", 50);
  const std::vector<double> taus =
      grid_from(p, ck, "tau_min_ns", "tau_max_ns", "tau_step_ns", 0.0, 55.0, 0.25);
  const double t_gate = pi / omega;  // square-pulse pi time of the closed-form model

  Table train;
  train.name = "analytic_train";
  train.columns = {"tau_ns", "zx_ge", "zx_ee", "ix_ge"};
  for (double tb : taus)
    train.rows.push_back(
        {cell(tb), cell(train_amplitude(TrainKind::zx_ge, pairs, omega, g, nu, d0, t_gate, tb)),
         cell(train_amplitude(TrainKind::zx_ee, pairs, omega, g, nu, d0, t_gate, tb)),
         cell(train_amplitude(TrainKind::ix_ge, pairs, omega, g, nu, d0, t_gate, tb))});
  out.tables.push_back(std::move(train));

  Table peaks;
  peaks.name = "analytic_peaks";
  peaks.columns = {"kind", "tau_ns"};
  const double tau_max = taus.empty() ? 0.0 : taus.back();
  for (double tp : predict_peaks(PeakKind::zx, d0, t_gate, tau_max))
    peaks.rows.push_back({"zx", cell(tp)});
  for (double tp : predict_peaks(PeakKind::ix, d0, t_gate, tau_max))
    peaks.rows.push_back({"ix", cell(tp)});
  out.tables.push_back(std::move(peaks));

  if (p.contains("channel")) {
    const json& c = p["channel"];
    if (ck.is_obj(c, "params.channel")) {
      ck.known_keys(c, "params.channel", {"r_e", "gamma", "m_max"});
      const double r_e = ck.num(c, "params.channel", "r_e", 0.0, true);
      const double gamma = ck.num(c, "params.channel", "gamma", 0.0);
      const int m_max = ck.integer(c, "params.channel", "m_max", 600);
      Table ch;
      ch.name = "analytic_channel";
      ch.columns = {"m", "p1"};
      for (int m = 0; m <= m_max; ++m)
        ch.rows.push_back({cell(m), cell(p1_closed_form(m, r_e, gamma))});
      out.tables.push_back(std::move(ch));
    }
  }

  json eta;
  eta["omega_rad_per_ns"] = cell_to_json(cell(omega));
  eta["eta_rad_per_ns"] = cell_to_json(cell(eta_correction(omega, d0)));
  out.extras["eta"] = eta;
}

// ---------------------------------------------------------------------------
// Validation pass: every cheap schema check a runner relies on, with no
// solver work, so bad configs fail before minutes of simulation.

void validate_params(const Config& cfg, Checker& ck) {
  const json& p = cfg.params;
  DragDecl dummy;

  for (size_t i = 0; i < cfg.variants.size(); ++i) {
    const DragDecl& d = cfg.variants[i].drag;
    if ((d.set == "single" || d.set == "dual") && d.delta_mhz == 0.0 && cfg.spectator < 0)
      ck.fail("variants[" + std::to_string(i) + "].drag",
              "no spectator to derive the detuning from; set delta_mhz");
  }

  auto check_grid = [&](const char* lo, const char* hi, const char* step, double dlo, double dhi,
                        double dstep) {
    if (grid_from(p, ck, lo, hi, step, dlo, dhi, dstep).empty())
      ck.fail(std::string("params.") + step, "grid is empty; check bounds and step");
  };
  auto check_rb_block = [&](const json& j, const std::string& field) {
    RBOptions rb = rb_options(j, cfg, ck, field);
    if (rb.lengths.size() < 4) ck.fail(field + ".lengths", "need at least 4 sequence lengths");
    for (int m : rb.lengths)
      if (m < 1) ck.fail(field + ".lengths", "lengths must be positive");
    if (rb.sequences_per_length < 1)
      ck.fail(field + ".sequences_per_length", "must be >= 1");
  };

  if (cfg.protocol == "pulse_report") {
    ck.known_keys(p, "params", {"amplitude_rad_per_ns", "freq_min_mhz", "freq_max_mhz",
                                "freq_step_mhz", "time_step_ns"});
    if (ck.num(p, "params", "time_step_ns", 0.05) <= 0.0)
      ck.fail("params.time_step_ns", "must be positive");
    check_grid("freq_min_mhz", "freq_max_mhz", "freq_step_mhz", -150.0, 150.0, 0.5);
  } else if (cfg.protocol == "calibrate") {
    ck.known_keys(p, "params", {"cal", "eta_grid_mhz"});
    calibrate_options(p, dummy, ck);
    if (p.contains("eta_grid_mhz") && ck.num_list(p, "params", "eta_grid_mhz", {}, true).empty())
      ck.fail("params.eta_grid_mhz", "grid is empty");
  } else if (cfg.protocol == "error_filter") {
    ck.known_keys(p, "params", {"pairs", "tau_min_ns", "tau_max_ns", "tau_step_ns", "cal"});
    if (ck.integer(p, "params", "pairs", 50) < 1) ck.fail("params.pairs", "must be >= 1");
    check_grid("tau_min_ns", "tau_max_ns", "tau_step_ns", 0.0, 55.0, 0.25);
    calibrate_options(p, dummy, ck);
  } else if (cfg.protocol == "rb") {
    ck.known_keys(p, "params", {"lengths", "sequences_per_length", "readout", "cal"});
    check_rb_block(p, "params");
    calibrate_options(p, dummy, ck);
  } else if (cfg.protocol == "scan") {
    ck.known_keys(p, "params", {"kind", "grid", "rb", "cal"});
    if (ck.num_list(p, "params", "grid", {}, true).empty())
      ck.fail("params.grid", "grid is empty");
    if (p.contains("rb") && p["rb"].is_object()) check_rb_block(p["rb"], "params.rb");
    calibrate_options(p, dummy, ck);
  } else if (cfg.protocol == "analytic_report") {
    ck.known_keys(p, "params",
                  {"delta0_mhz", "omega_rad_per_ns", "g_mhz", "nu", "pairs", "tau_min_ns",
                   "tau_max_ns", "tau_step_ns", "channel"});
    if (ck.num(p, "params", "delta0_mhz", 0.0, true) == 0.0)
      ck.fail("params.delta0_mhz", "must be nonzero");
    if (ck.num(p, "params", "omega_rad_per_ns", 1.0) <= 0.0)
      ck.fail("params.omega_rad_per_ns", "must be positive");
    if (ck.integer(p, "params", "pairs", 50) < 1) ck.fail("params.pairs", "must be >= 1");
    check_grid("tau_min_ns", "tau_max_ns", "tau_step_ns", 0.0, 55.0, 0.25);
    if (p.contains("channel") && p["channel"].is_object()) {
      const json& c = p["channel"];
      ck.known_keys(c, "params.channel", {"r_e", "gamma", "m_max"});
      const double r_e = ck.num(c, "params.channel", "r_e", 0.0, true);
      const double gamma = ck.num(c, "params.channel", "gamma", 0.0);
      if (r_e < 0.0 || r_e > 0.5) ck.fail("params.channel.r_e", "must lie in [0, 0.5]");
      if (gamma < 0.0 || gamma > 1.0) ck.fail("params.channel.gamma", "must lie in [0, 1]");
      if (ck.integer(c, "params.channel", "m_max", 600) < 1)
        ck.fail("params.channel.m_max", "must be >= 1");
    }
  }
}

// ---------------------------------------------------------------------------
// Driver

int emit(const Config& cfg, const RunOutput& out) {
  json manifest = out.extras;
  manifest["config_digest"] = cfg.digest;
  manifest["protocol"] = cfg.protocol;
  manifest["seed"] = cfg.seed;
  manifest["workers"] = cfg.workers;
  manifest["format"] = cfg.format;
  manifest["version"] = kVersion;
  manifest["flagged"] = out.flagged;

  std::vector<std::string> files;
  const std::filesystem::path dir(cfg.out_dir);
  try {
    if (cfg.format == "csv") {
      for (const Table& t : out.tables) {
        const std::string name = t.name + ".csv";
        io::write_file((dir / name).string(), to_csv(t));
        files.push_back(name);
      }
      manifest["artifacts"] = files;
      io::write_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    } else {
      json doc;
      for (const Table& t : out.tables) {
        json tab;
        tab["columns"] = t.columns;
        for (const auto& row : t.rows) {
          json r = json::array();
          for (const auto& c : row) r.push_back(cell_to_json(c));
          tab["rows"].push_back(r);
        }
        doc["tables"][t.name] = tab;
      }
      manifest["artifacts"] = std::vector<std::string>{"run.json"};
      doc["manifest"] = manifest;
      io::write_file((dir / "run.json").string(), doc.dump(2) + "\n");
    }
  } catch (const ConfigError& e) {
    std::cout << json{{"error", "io"}, {"message", e.what()}}.dump() << "\n";
    return 4;
  }
  return out.flagged.empty() ? 0 : 3;
}

int fail_schema(const std::vector<Diag>& diags) {
  json doc;
  doc["error"] = "schema";
  for (const Diag& d : diags)
    doc["diagnostics"].push_back({{"field", d.field}, {"message", d.message}});
  std::cout << doc.dump(2) << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pulse synthesis and crosstalk experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  std::string out_dir, format;

  CLI::App* run = app.add_subcommand("run", "execute a config and write artifacts");
  run->add_option("config", config_path, "experiment config file")->required();
  run->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });
  run->add_option("--workers", workers, "worker pool cap");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  CLI::App* val = app.add_subcommand("validate", "check a config without running it");
  val->add_option("config", config_path, "experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::string text;
  try {
    text = io::read_file(config_path);
  } catch (const std::runtime_error& e) {
    return fail_schema({{"config", e.what()}});
  }

  std::vector<Diag> diags;
  Config cfg = parse_config(text, diags);
  if (diags.empty()) {
    Checker ck(diags);
    validate_params(cfg, ck);
  }
  if (!diags.empty()) return fail_schema(diags);

  if (val->parsed()) {
    std::cout << json{{"ok", true}, {"digest", cfg.digest}, {"protocol", cfg.protocol}}.dump()
              << "\n";
    return 0;
  }

  if (seed_set) cfg.seed = seed;
  if (workers > 0) cfg.workers = workers;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!format.empty()) cfg.format = format;

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec || !std::filesystem::is_directory(cfg.out_dir)) {
    std::cout << json{{"error", "io"}, {"message", "cannot create output directory"}}.dump()
              << "\n";
    return 4;
  }

  const auto t0 = std::chrono::steady_clock::now();
  RunOutput out;
  std::vector<Diag> run_diags;
  Checker ck(run_diags);
  try {
    if (cfg.protocol == "pulse_report")
      run_pulse_report(cfg, ck, out);
    else if (cfg.protocol == "calibrate")
      run_calibrate(cfg, ck, out);
    else if (cfg.protocol == "error_filter")
      run_error_filter_protocol(cfg, ck, out);
    else if (cfg.protocol == "rb")
      run_rb_protocol(cfg, ck, out);
    else if (cfg.protocol == "scan")
      run_scan_protocol(cfg, ck, out);
    else
      run_analytic_report(cfg, ck, out);
  } catch (const std::runtime_error& e) {
    json doc;
    doc["error"] = "runtime";
    doc["message"] = e.what();
    std::cout << doc.dump() << "\n";
    return 3;
  }
  if (!run_diags.empty()) return fail_schema(run_diags);

  const int code = emit(cfg, out);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  // Wall time goes to the log, never into artifacts: output bytes must be a
  // pure function of (config, seed).
  std::cerr << "dragsim: " << cfg.protocol << " finished in " << ms << " ms\n";
  return code;
}
