#include <doctest.h>
#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kBin = DRAGSIM_CLI;
const fs::path kConfigs = DRAGSIM_CONFIG_DIR;
const fs::path kWork = fs::temp_directory_path() / "dragsim_cli_tests";

int run_cmd(const std::string& args, std::string* out_text = nullptr) {
  const fs::path capture = kWork / "stdout.txt";
  fs::create_directories(kWork);
  const std::string cmd = "\"" + kBin + "\" " + args + " > \"" + capture.string() + "\" 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  if (out_text) {
    std::ifstream in(capture);
    std::stringstream ss;
    ss << in.rdbuf();
    *out_text = ss.str();
  }
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  std::ofstream(p) << text;
  return p;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = kWork / name;
  fs::remove_all(p);
  return p;
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

const char* kMiniPulse = R"({
  "protocol": "pulse_report",
  "system": {"modes": [{"label": "q0", "levels": 3, "freq_ghz": 3.76, "anharm_mhz": -194.6}]},
  "gate": {"t_g_ns": 25.0, "drag": {"set": "custom", "values_mhz": [40.0, -40.0]}},
  "params": {"freq_min_mhz": -60.0, "freq_max_mhz": 60.0, "freq_step_mhz": 2.0}
})";

}  // namespace

TEST_CASE("bundled configs pass validation") {
  for (const char* name :
       {"fig1_spectra", "fig2_vz_scan", "fig3_errorfilter", "fig3_rb_pair", "fig3_gscan",
        "fig4_tls_detuning", "fig4_tls_gatetime", "supp_dragsets", "supp_two_spectators",
        "supp_leakage"}) {
    std::string out;
    const int rc = run_cmd("validate \"" + (kConfigs / (std::string(name) + ".json")).string() + "\"",
                           &out);
    CAPTURE(name);
    CHECK(rc == 0);
    const json doc = json::parse(out);
    CHECK(doc["ok"] == true);
    CHECK(doc["digest"].get<std::string>().size() == 16);
  }
}

TEST_CASE("schema violations are reported field by field") {
  std::string out;

  const fs::path bad_proto = write_config("bad_proto.json", R"({
    "protocol": "warp",
    "system": {"modes": [{"label": "q", "levels": 2, "freq_ghz": 3.7}]}
  })");
  CHECK(run_cmd("validate \"" + bad_proto.string() + "\"", &out) == 2);
  json doc = json::parse(out);
  CHECK(doc["error"] == "schema");
  bool saw_field = false;
  for (const auto& d : doc["diagnostics"]) saw_field = saw_field || d["field"] == "config.protocol";
  CHECK(saw_field);

  const fs::path bad_gate = write_config("bad_gate.json", R"({
    "protocol": "rb",
    "system": {"modes": [{"label": "q", "levels": 2, "freq_ghz": 3.7}]},
    "gate": {"t_g_ns": -1.0},
    "params": {"lengths": [2, 4, 8, 16], "sequences_per_length": 2}
  })");
  CHECK(run_cmd("validate \"" + bad_gate.string() + "\"", &out) == 2);
  doc = json::parse(out);
  saw_field = false;
  for (const auto& d : doc["diagnostics"]) saw_field = saw_field || d["field"] == "gate.t_g_ns";
  CHECK(saw_field);

  const fs::path typo = write_config("typo.json", R"({
    "protocol": "pulse_report",
    "sytem": {"modes": []},
    "system": {"modes": [{"label": "q", "levels": 2, "freq_ghz": 3.7}]}
  })");
  CHECK(run_cmd("validate \"" + typo.string() + "\"", &out) == 2);
  doc = json::parse(out);
  saw_field = false;
  for (const auto& d : doc["diagnostics"]) saw_field = saw_field || d["field"] == "config.sytem";
  CHECK(saw_field);

  CHECK(run_cmd("validate \"" + write_config("broken.json", "{").string() + "\"", &out) == 2);
  CHECK(run_cmd("validate \"" + (kWork / "does_not_exist.json").string() + "\"", &out) == 2);
}

TEST_CASE("run artifacts are byte deterministic") {
  const fs::path cfg = write_config("mini_pulse.json", kMiniPulse);
  const fs::path a = fresh_dir("pulse_a");
  const fs::path b = fresh_dir("pulse_b");

  CHECK(run_cmd("run \"" + cfg.string() + "\" --out \"" + a.string() + "\"") == 0);
  CHECK(run_cmd("run \"" + cfg.string() + "\" --out \"" + b.string() + "\"") == 0);
  CHECK(slurp(a / "spectrum_custom.csv") == slurp(b / "spectrum_custom.csv"));
  CHECK(slurp(a / "waveform_custom.csv") == slurp(b / "waveform_custom.csv"));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(first_line(slurp(a / "spectrum_custom.csv")) == "f_MHz,re,im,abs_norm");

  const fs::path j = fresh_dir("pulse_json");
  CHECK(run_cmd("run \"" + cfg.string() + "\" --out \"" + j.string() + "\" --format json") == 0);
  const json doc = json::parse(slurp(j / "run.json"));
  CHECK(doc["manifest"]["protocol"] == "pulse_report");
  CHECK(doc["tables"].contains("spectrum_custom"));
  CHECK(doc["tables"]["spectrum_custom"]["columns"][3] == "abs_norm");
  CHECK_FALSE(fs::exists(j / "manifest.json"));
}

TEST_CASE("worker flag cannot change outputs") {
  const fs::path cfg = write_config("mini_rb.json", R"({
    "protocol": "rb",
    "seed": 9,
    "system": {"modes": [{"label": "q0", "levels": 2, "freq_ghz": 3.76}]},
    "gate": {"t_g_ns": 25.0, "drag": {"set": "custom", "values_mhz": []}},
    "params": {"lengths": [2, 4, 8, 16], "sequences_per_length": 3,
               "cal": {"refine_schedule": [1, 2]}}
  })");
  const fs::path a = fresh_dir("rb_w1");
  const fs::path b = fresh_dir("rb_w3");
  CHECK(run_cmd("run \"" + cfg.string() + "\" --out \"" + a.string() + "\" --workers 1") == 0);
  CHECK(run_cmd("run \"" + cfg.string() + "\" --out \"" + b.string() + "\" --workers 3") == 0);
  CHECK(slurp(a / "rb_custom.csv") == slurp(b / "rb_custom.csv"));
  CHECK(first_line(slurp(a / "rb_custom.csv")) == "m,survival,spectator_pe");

  // The manifest records the worker cap, so it may differ; the tables and
  // fits must not.
  const json ma = json::parse(slurp(a / "manifest.json"));
  const json mb = json::parse(slurp(b / "manifest.json"));
  CHECK(ma["fits"] == mb["fits"]);
  CHECK(ma["workers"] == 1);
  CHECK(mb["workers"] == 3);
}

TEST_CASE("scan csv matches the fixture header") {
  const fs::path cfg = write_config("mini_scan.json", R"({
    "protocol": "scan",
    "system": {"modes": [{"label": "q0", "levels": 3, "freq_ghz": 3.76, "anharm_mhz": -194.6}]},
    "gate": {"t_g_ns": 25.0, "drag": {"set": "leakage_only"}},
    "params": {"kind": "gate_time", "grid": [25.0],
               "rb": {"lengths": [2, 4, 8, 16], "sequences_per_length": 2},
               "cal": {"refine_schedule": [1, 2]}}
  })");
  const fs::path out = fresh_dir("scan_ok");
  CHECK(run_cmd("run \"" + cfg.string() + "\" --out \"" + out.string() + "\"") == 0);
  const std::string csv = slurp(out / "scan_leakage_only.csv");
  CHECK(first_line(csv) == "param,epc,epc_err,expc,expc_err");
}

TEST_CASE("failed scan points flag the run") {
  const fs::path cfg = write_config("bad_scan.json", R"({
    "protocol": "scan",
    "system": {"modes": [{"label": "q0", "levels": 3, "freq_ghz": 3.76, "anharm_mhz": -194.6}]},
    "gate": {"t_g_ns": 25.0, "drag": {"set": "leakage_only"}},
    "params": {"kind": "gate_time", "grid": [25.0, -5.0],
               "rb": {"lengths": [2, 4, 8, 16], "sequences_per_length": 2},
               "cal": {"refine_schedule": [1, 2]}}
  })");
  const fs::path out = fresh_dir("scan_flagged");
  CHECK(run_cmd("run \"" + cfg.string() + "\" --out \"" + out.string() + "\"") == 3);

  const std::string csv = slurp(out / "scan_leakage_only.csv");
  CHECK(csv.find("\n-5,nan,nan,nan,nan\n") != std::string::npos);
  const json manifest = json::parse(slurp(out / "manifest.json"));
  REQUIRE(manifest["flagged"].size() == 1);
  const std::string note = manifest["flagged"][0].get<std::string>();
  CHECK(note.find("param -5") != std::string::npos);
}

TEST_CASE("unwritable output directory exits 4") {
  const fs::path cfg = write_config("mini_pulse2.json", kMiniPulse);
  std::string out;
  CHECK(run_cmd("run \"" + cfg.string() + "\" --out /dev/null/nested", &out) == 4);
  CHECK(json::parse(out)["error"] == "io");
}

TEST_CASE("error filter artifacts carry the tau trace") {
  const fs::path cfg = write_config("mini_filter.json", R"({
    "protocol": "error_filter",
    "system": {
      "modes": [{"label": "q0", "levels": 2, "freq_ghz": 3.76},
                {"label": "q1", "levels": 2, "freq_ghz": 3.805}],
      "target": 0, "spectator": 1
    },
    "gate": {"t_g_ns": 25.0, "drag": {"set": "custom", "values_mhz": []}},
    "params": {"pairs": 2, "tau_min_ns": 0.0, "tau_max_ns": 1.0, "tau_step_ns": 0.5,
               "cal": {"refine_schedule": [1]}}
  })");
  const fs::path out = fresh_dir("filter_out");
  CHECK(run_cmd("run \"" + cfg.string() + "\" --out \"" + out.string() + "\"") == 0);
  const std::string csv = slurp(out / "errorfilter_custom.csv");
  CHECK(first_line(csv) == "tau_ns,p_e_target,p_e_spectator");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 grid points
  const json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["calibrations"].contains("custom"));
}

TEST_CASE("analytic report runs from closed forms alone") {
  const fs::path cfg = write_config("mini_analytic.json", R"({
    "protocol": "analytic_report",
    "system": {"modes": [{"label": "q0", "levels": 2, "freq_ghz": 3.76}]},
    "gate": {"t_g_ns": 25.0},
    "params": {"delta0_mhz": 45.0, "g_mhz": 1.0, "nu": 0.001, "pairs": 50,
               "channel": {"r_e": 1e-4, "gamma": 1e-3, "m_max": 100}}
  })");
  const fs::path out = fresh_dir("analytic_out");
  CHECK(run_cmd("run \"" + cfg.string() + "\" --out \"" + out.string() + "\"") == 0);
  const std::string peaks = slurp(out / "analytic_peaks.csv");
  CHECK(first_line(peaks) == "kind,tau_ns");
  CHECK(peaks.find("zx,") != std::string::npos);
  CHECK(peaks.find("ix,") != std::string::npos);
  CHECK(first_line(slurp(out / "analytic_train.csv")) == "tau_ns,zx_ge,zx_ee,ix_ge");
  CHECK(first_line(slurp(out / "analytic_channel.csv")) == "m,p1");

  const fs::path nodelta = write_config("bad_analytic.json", R"({
    "protocol": "analytic_report",
    "system": {"modes": [{"label": "q0", "levels": 2, "freq_ghz": 3.76}]},
    "params": {"g_mhz": 1.0}
  })");
  std::string text;
  CHECK(run_cmd("validate \"" + nodelta.string() + "\"", &text) == 2);
}
