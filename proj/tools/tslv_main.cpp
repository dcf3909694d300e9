// Command-line front end. All computation goes through the C API in tslv.h;
// this translation unit only parses arguments and renders results.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tslv.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;     // operational failure
constexpr int kExitVerdict = 2;   // analysis ran; hypothesis/verification failed

struct ModelHandle {
  tslv_model* ptr = nullptr;
  ~ModelHandle() { tslv_model_free(ptr); }
};

struct StringHandle {
  char* ptr = nullptr;
  ~StringHandle() { tslv_string_free(ptr); }
};

int fail(int rc) {
  std::fprintf(stderr, "error: %s\n", tslv_last_error());
  return rc == TSLV_ERR_HYPOTHESIS ? kExitVerdict : kExitError;
}

int load(const std::string& path, ModelHandle& model) {
  return tslv_model_load_file(path.c_str(), &model.ptr);
}

std::string num_list(const json& arr) {
  std::string out = "(";
  for (std::size_t i = 0; i < arr.size(); ++i) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", arr[i].get<double>());
    out += (i ? ", " : "");
    out += buf;
  }
  return out + ")";
}

void print_intervals(const char* label, const json& lo, const json& up) {
  for (std::size_t i = 0; i < lo.size(); ++i) {
    const double l = lo[i].get<double>(), u = up[i].get<double>();
    std::printf("  %s %zu: [%.6g, %.6g]%s\n", label, i + 1, l, u,
                l <= u ? "" : "   (inverted)");
  }
}

void print_warnings(const json& doc) {
  if (!doc.contains("warnings")) return;
  for (const auto& w : doc["warnings"]) std::printf("warning: %s\n", w.get<std::string>().c_str());
}

void print_check(const json& doc) {
  const json& model = doc["model"];
  const json& ts = model["time_scale"];
  std::printf("model %s  [%s", model["name"].get<std::string>().c_str(),
              ts["kind"].get<std::string>().c_str());
  if (ts.contains("step")) std::printf(" h = %.6g", ts["step"].get<double>());
  std::printf(", n = %d, m = %d, hash %s]\n", model["n"].get<int>(), model["m"].get<int>(),
              model["hash"].get<std::string>().c_str());

  const json& eff = doc["statistics"]["effective"];
  std::printf("mu_bar = %.6g", eff["mu_bar"].get<double>());
  if (model["has_impulses"].get<bool>())
    std::printf("   jump products: r = %.6g, R = %.6g%s", eff["impulse_r"].get<double>(),
                eff["impulse_r_upper"].get<double>(),
                doc["statistics"]["override_applied"].get<bool>() ? "  (override active)" : "");
  std::printf("\n");

  std::printf("hypotheses:");
  const json& hyp = doc["hypotheses"];
  for (const auto& [name, h] : hyp.items())
    if (name != "all_pass")
      std::printf("  %s=%s", name.c_str(), h["status"].get<std::string>().c_str());
  std::printf("\n");
  for (const auto& [name, h] : hyp.items())
    if (name != "all_pass")
      for (const auto& w : h["witnesses"])
        std::printf("  %s: %s\n", name.c_str(), w.get<std::string>().c_str());

  const json& pb = doc["permanence"];
  std::printf("permanence box (log scale):\n");
  print_intervals("prey", pb["x_lo"], pb["x_up"]);
  print_intervals("predator", pb["y_lo"], pb["y_up"]);
  for (const auto& note : pb["notes"])
    std::printf("  note: %s\n", note.get<std::string>().c_str());

  const json& cert = doc["certificate"];
  std::printf("decay certificate:\n  gamma_x = %s\n  gamma_y = %s\n  gamma = %.6g\n",
              num_list(cert["gamma_x"]).c_str(), num_list(cert["gamma_y"]).c_str(),
              cert["gamma"].get<double>());
  for (const auto& note : cert["notes"])
    std::printf("  note: %s\n", note.get<std::string>().c_str());
  std::printf("verdict: %s\n", cert["verdict"].get<bool>()
                                   ? "uniformly asymptotically stable (certified)"
                                   : "not certified");
  print_warnings(doc);
}

void print_simulate(const json& doc) {
  std::printf("simulated t = %.6g .. %.6g  (%llu rows, %llu impulses)\n",
              doc["t0"].get<double>(), doc["tf"].get<double>(),
              doc["rows"].get<unsigned long long>(), doc["impulses"].get<unsigned long long>());
  std::printf("config: %s\n", doc["config"].get<std::string>().c_str());
  const json& tail = doc["tail"];
  std::printf("tail bounds (log scale, window from t = %.6g):\n",
              tail["window_start"].get<double>());
  print_intervals("prey", tail["x_lo"], tail["x_hi"]);
  print_intervals("predator", tail["y_lo"], tail["y_hi"]);
  std::printf("final state: z = %s, w = %s\n", num_list(doc["final"]["z"]).c_str(),
              num_list(doc["final"]["w"]).c_str());
  if (doc.contains("csv")) std::printf("trajectory written to %s\n",
                                       doc["csv"].get<std::string>().c_str());
  print_warnings(doc);
}

void print_verify(const json& doc) {
  print_check(doc["analysis"]);
  const json& emp = doc["empirical"];
  std::printf("empirical tails (log scale, window from t = %.6g):\n",
              emp["window_start"].get<double>());
  print_intervals("prey", emp["x_lo"], emp["x_hi"]);
  print_intervals("predator", emp["y_lo"], emp["y_hi"]);
  const json& gap = doc["gap"];
  std::printf("tail containment: %s\n", doc["tails_ok"].get<bool>() ? "ok" : "FAILED");
  std::printf("two-trajectory gap: initial %.6g, final %.6g, ratio %.6g, decay rate %.6g -> %s\n",
              gap["initial"].get<double>(), gap["final"].get<double>(),
              gap["ratio"].get<double>(), gap["decay_rate"].get<double>(),
              doc["gap_ok"].get<bool>() ? "ok" : "FAILED");
  std::printf("verify verdict: %s\n", doc["verdict"].get<bool>() ? "consistent" : "inconsistent");
  print_warnings(doc);
}

void print_reproduce(const json& doc) {
  std::printf("%s reference comparison\n", doc["example"].get<std::string>().c_str());
  std::printf("%-12s %10s %12s %10s %6s\n", "quantity", "reference", "computed", "|delta|", "ok");
  for (const auto& row : doc["rows"])
    std::printf("%-12s %10.3f %12.6f %10.6f %6s\n", row["quantity"].get<std::string>().c_str(),
                row["reference"].get<double>(), row["computed"].get<double>(),
                row["abs_delta"].get<double>(), row["ok"].get<bool>() ? "yes" : "NO");
  std::printf("%s\n", doc["all_ok"].get<bool>() ? "all quantities within tolerance"
                                                : "one or more quantities out of tolerance");
}

std::vector<double> parse_init(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t used = 0;
    out.push_back(std::stod(text.substr(pos), &used));
    pos += used;
    if (pos < text.size()) {
      if (text[pos] != ',') throw std::invalid_argument("expected ','");
      ++pos;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"permanence bounds, stability certificates and simulation for impulsive "
               "delayed competition-predation systems on time scales"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tslv_version()));

  bool as_json = false;
  app.add_flag("--json", as_json, "emit machine-readable JSON instead of text");

  // ---- check
  auto* check = app.add_subcommand("check", "statistics, hypotheses, bounds and certificate");
  std::string check_path;
  bool use_override = false;
  double sample_window = 0;
  check->add_option("model", check_path, "model JSON file")->required();
  check->add_flag("--use-override", use_override,
                  "apply the model's stats_override block (default: honest sampling)");
  check->add_option("--sample-window", sample_window,
                    "coefficient scan window length (default 2000)");

  // ---- simulate
  auto* sim = app.add_subcommand("simulate", "integrate the system and report tail bounds");
  std::string sim_path, sim_out, sim_init;
  double sim_horizon = 0, sim_step = 0, sim_transient = 0.5;
  unsigned long long sim_seed = 12345;
  int sim_thin = 1;
  sim->add_option("model", sim_path, "model JSON file")->required();
  sim->add_option("--horizon", sim_horizon, "simulated duration past t0 (default 100)");
  sim->add_option("--step", sim_step, "integration step on the reals (default 0.01)");
  sim->add_option("--out", sim_out, "write the trajectory to this CSV file");
  sim->add_option("--seed", sim_seed, "seed for the random initial state (default 12345)");
  sim->add_option("--init", sim_init,
                  "comma-separated initial state z1,..,zn,w1,..,wm (overrides --seed)");
  sim->add_option("--thin", sim_thin, "keep every k-th CSV row (impulse rows always kept)");
  sim->add_option("--transient", sim_transient,
                  "fraction of the horizon excluded from tail statistics (default 0.5)");

  // ---- verify
  auto* verify = app.add_subcommand(
      "verify", "compare simulated tails and trajectory gap against the certified box");
  std::string verify_path;
  bool verify_override = false;
  double verify_horizon = 0, verify_step = 0, verify_eps = -1, verify_window = 0;
  unsigned long long verify_seed = 12345;
  verify->add_option("model", verify_path, "model JSON file")->required();
  verify->add_flag("--use-override", verify_override,
                   "apply the model's stats_override block (default: honest sampling)");
  verify->add_option("--horizon", verify_horizon, "simulated duration past t0 (default 100)");
  verify->add_option("--step", verify_step, "integration step on the reals (default 0.01)");
  verify->add_option("--seed", verify_seed, "seed for the random initial state");
  verify->add_option("--eps", verify_eps,
                     "tail tolerance around the certified box, log scale (default 0.05)");
  verify->add_option("--sample-window", verify_window,
                     "coefficient scan window length (default 2000)");

  // ---- reproduce
  auto* repro = app.add_subcommand("reproduce", "recompute a bundled example's quantities");
  int repro_id = 0;
  repro->add_option("example", repro_id, "bundled example id (1 or 2)")->required();

  CLI11_PARSE(app, argc, argv);

  if (check->parsed()) {
    ModelHandle model;
    if (int rc = load(check_path, model)) return fail(rc);
    tslv_check_options opts;
    tslv_check_options_init(&opts);
    opts.use_override = use_override ? 1 : 0;
    if (sample_window > 0) opts.sample_window = sample_window;
    StringHandle out;
    int ok = 0;
    if (int rc = tslv_check(model.ptr, &opts, &out.ptr, &ok)) return fail(rc);
    if (as_json) std::printf("%s\n", out.ptr);
    else print_check(json::parse(out.ptr));
    return ok ? kExitOk : kExitVerdict;
  }

  if (sim->parsed()) {
    ModelHandle model;
    if (int rc = load(sim_path, model)) return fail(rc);
    tslv_sim_options opts;
    tslv_sim_options_init(&opts);
    if (sim_horizon > 0) opts.horizon = sim_horizon;
    if (sim_step > 0) opts.step = sim_step;
    opts.seed = sim_seed;
    opts.transient_fraction = sim_transient;
    std::vector<double> init;
    if (!sim_init.empty()) {
      try {
        init = parse_init(sim_init);
      } catch (const std::exception&) {
        std::fprintf(stderr, "error: --init expects comma-separated numbers\n");
        return kExitError;
      }
      StringHandle info;
      if (int rc = tslv_model_info(model.ptr, &info.ptr)) return fail(rc);
      const json j = json::parse(info.ptr);
      const std::size_t n = j["n"].get<std::size_t>(), m = j["m"].get<std::size_t>();
      if (init.size() != n + m) {
        std::fprintf(stderr, "error: --init expects %zu values (n = %zu prey, m = %zu predators)\n",
                     n + m, n, m);
        return kExitError;
      }
      opts.z0 = init.data();
      opts.w0 = init.data() + n;
    }
    StringHandle out;
    if (int rc = tslv_simulate(model.ptr, &opts, sim_out.empty() ? nullptr : sim_out.c_str(),
                               sim_thin, &out.ptr))
      return fail(rc);
    if (as_json) std::printf("%s\n", out.ptr);
    else print_simulate(json::parse(out.ptr));
    return kExitOk;
  }

  if (verify->parsed()) {
    ModelHandle model;
    if (int rc = load(verify_path, model)) return fail(rc);
    tslv_verify_options opts;
    tslv_verify_options_init(&opts);
    opts.check.use_override = verify_override ? 1 : 0;
    if (verify_window > 0) opts.check.sample_window = verify_window;
    if (verify_horizon > 0) opts.sim.horizon = verify_horizon;
    if (verify_step > 0) opts.sim.step = verify_step;
    opts.sim.seed = verify_seed;
    if (verify_eps >= 0) opts.eps = verify_eps;
    StringHandle out;
    int verdict = 0;
    if (int rc = tslv_verify(model.ptr, &opts, &out.ptr, &verdict)) return fail(rc);
    if (as_json) std::printf("%s\n", out.ptr);
    else print_verify(json::parse(out.ptr));
    return verdict ? kExitOk : kExitVerdict;
  }

  // reproduce
  StringHandle out;
  int all_ok = 0;
  if (int rc = tslv_reproduce(repro_id, &out.ptr, &all_ok)) return fail(rc);
  if (as_json) std::printf("%s\n", out.ptr);
  else print_reproduce(json::parse(out.ptr));
  return all_ok ? kExitOk : kExitVerdict;
}
