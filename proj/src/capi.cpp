#include "tslv.h"

#include <cstring>
#include <new>
#include <string>

#include "tslv/report.hpp"

// The opaque handle owns a fully validated model.
struct tslv_model {
  tslv::ModelSpec spec;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class F>
int guarded(F&& body) {
  try {
    body();
    return TSLV_OK;
  } catch (const tslv::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return TSLV_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TSLV_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TSLV_ERR_INTERNAL;
  }
}

int require(bool cond, const char* msg) {
  if (cond) return TSLV_OK;
  g_last_error = msg;
  return TSLV_ERR_USAGE;
}

tslv::CheckOptions to_check_options(const tslv_check_options* opts) {
  tslv::CheckOptions out;
  if (!opts) return out;
  out.use_override = opts->use_override != 0;
  if (opts->sample_window > 0) out.stats.sampling.window = opts->sample_window;
  if (opts->points_per_unit > 0) out.stats.sampling.points_per_unit = opts->points_per_unit;
  if (opts->impulse_horizon > 0) out.stats.impulse_horizon = opts->impulse_horizon;
  return out;
}

tslv::SimConfig to_sim_config(const tslv_sim_options* opts, const tslv::ModelSpec& spec) {
  tslv::SimConfig out;
  if (!opts) return out;
  if (opts->step > 0) out.step = opts->step;
  if (opts->horizon > 0) out.horizon = opts->horizon;
  out.transient_fraction = opts->transient_fraction;
  out.seed = opts->seed;
  if (opts->z0) out.z0.assign(opts->z0, opts->z0 + spec.n);
  if (opts->w0) out.w0.assign(opts->w0, opts->w0 + spec.m);
  switch (opts->interp) {
    case TSLV_INTERP_LINEAR: out.interp = tslv::HistoryInterp::Linear; break;
    case TSLV_INTERP_HOLD_LEFT: out.interp = tslv::HistoryInterp::HoldLeft; break;
    default: out.interp = tslv::HistoryInterp::Hermite; break;
  }
  return out;
}

}  // namespace

extern "C" {

const char* tslv_version(void) { return "1.0.0"; }

const char* tslv_last_error(void) { return g_last_error.c_str(); }

void tslv_string_free(char* s) { delete[] s; }

int tslv_model_load_file(const char* path, tslv_model** out) {
  if (int rc = require(path && out, "tslv_model_load_file: path and out must be non-NULL"))
    return rc;
  *out = nullptr;
  return guarded([&] { *out = new tslv_model{tslv::load_model_file(path)}; });
}

int tslv_model_load_string(const char* json_text, tslv_model** out) {
  if (int rc = require(json_text && out, "tslv_model_load_string: text and out must be non-NULL"))
    return rc;
  *out = nullptr;
  return guarded([&] { *out = new tslv_model{tslv::load_model(json_text)}; });
}

int tslv_bundled_model(int id, tslv_model** out) {
  if (int rc = require(out != nullptr, "tslv_bundled_model: out must be non-NULL")) return rc;
  *out = nullptr;
  return guarded([&] { *out = new tslv_model{tslv::load_model(tslv::bundled_model_json(id))}; });
}

void tslv_model_free(tslv_model* model) { delete model; }

int tslv_model_info(const tslv_model* model, char** json_out) {
  if (int rc = require(model && json_out, "tslv_model_info: model and json_out must be non-NULL"))
    return rc;
  *json_out = nullptr;
  return guarded([&] {
    nlohmann::json j;
    j["name"] = model->spec.name;
    j["hash"] = model->spec.source_hash;
    j["n"] = model->spec.n;
    j["m"] = model->spec.m;
    j["t0"] = model->spec.t0;
    j["time_scale"]["kind"] = model->spec.ts.is_lattice() ? "lattice" : "reals";
    if (model->spec.ts.is_lattice()) j["time_scale"]["step"] = model->spec.ts.step;
    j["has_impulses"] = model->spec.has_impulses;
    *json_out = dup_string(j.dump(2));
  });
}

void tslv_check_options_init(tslv_check_options* opts) {
  if (!opts) return;
  opts->use_override = 1;
  tslv::StatsConfig defaults;
  opts->sample_window = defaults.sampling.window;
  opts->points_per_unit = defaults.sampling.points_per_unit;
  opts->impulse_horizon = defaults.impulse_horizon;
}

int tslv_check(const tslv_model* model, const tslv_check_options* opts, char** json_out,
               int* ok_out) {
  if (int rc = require(model && json_out, "tslv_check: model and json_out must be non-NULL"))
    return rc;
  *json_out = nullptr;
  if (ok_out) *ok_out = 0;
  return guarded([&] {
    const tslv::CheckResult res = tslv::run_check(model->spec, to_check_options(opts));
    *json_out = dup_string(tslv::check_to_json(model->spec, res).dump(2));
    if (ok_out) {
      bool any_fail = false;
      for (const auto& [name, hr] : res.hypotheses.items) any_fail |= hr.status == "fail";
      *ok_out = (res.certificate.verdict && !any_fail) ? 1 : 0;
    }
  });
}

void tslv_sim_options_init(tslv_sim_options* opts) {
  if (!opts) return;
  tslv::SimConfig defaults;
  opts->step = defaults.step;
  opts->horizon = defaults.horizon;
  opts->transient_fraction = defaults.transient_fraction;
  opts->seed = defaults.seed;
  opts->z0 = nullptr;
  opts->w0 = nullptr;
  opts->interp = TSLV_INTERP_HERMITE;
}

int tslv_simulate(const tslv_model* model, const tslv_sim_options* opts, const char* csv_path,
                  int thin, char** json_out) {
  if (int rc = require(model && json_out, "tslv_simulate: model and json_out must be non-NULL"))
    return rc;
  *json_out = nullptr;
  return guarded([&] {
    const tslv::SimConfig cfg = to_sim_config(opts, model->spec);
    const tslv::Trajectory traj = tslv::simulate(model->spec, cfg);
    if (csv_path && csv_path[0]) tslv::write_csv(traj, csv_path, thin < 1 ? 1 : thin);
    const tslv::EmpiricalBounds eb = tslv::empirical_bounds(traj, cfg.transient_fraction);
    nlohmann::json j;
    j["t0"] = traj.t0;
    j["tf"] = traj.tf;
    j["rows"] = traj.rows.size();
    j["impulses"] = traj.impulse_count;
    j["config"] = traj.config_echo;
    j["model_hash"] = traj.model_hash;
    j["tail"]["window_start"] = eb.window_start;
    j["tail"]["x_lo"] = eb.x_lo;
    j["tail"]["x_hi"] = eb.x_hi;
    j["tail"]["y_lo"] = eb.y_lo;
    j["tail"]["y_hi"] = eb.y_hi;
    j["final"]["z"] = traj.rows.back().z;
    j["final"]["w"] = traj.rows.back().w;
    j["warnings"] = traj.warnings;
    if (csv_path && csv_path[0]) j["csv"] = csv_path;
    *json_out = dup_string(j.dump(2));
  });
}

void tslv_verify_options_init(tslv_verify_options* opts) {
  if (!opts) return;
  tslv_check_options_init(&opts->check);
  tslv_sim_options_init(&opts->sim);
  tslv::VerifyOptions defaults;
  opts->eps = defaults.eps;
  opts->gap_limit = defaults.gap_limit;
  opts->perturbation = defaults.perturbation;
}

int tslv_verify(const tslv_model* model, const tslv_verify_options* opts, char** json_out,
                int* verdict_out) {
  if (int rc = require(model && json_out, "tslv_verify: model and json_out must be non-NULL"))
    return rc;
  *json_out = nullptr;
  if (verdict_out) *verdict_out = 0;
  return guarded([&] {
    tslv::VerifyOptions vo;
    if (opts) {
      vo.check = to_check_options(&opts->check);
      vo.sim = to_sim_config(&opts->sim, model->spec);
      if (opts->eps >= 0) vo.eps = opts->eps;
      if (opts->gap_limit > 0) vo.gap_limit = opts->gap_limit;
      if (opts->perturbation > 0) vo.perturbation = opts->perturbation;
    }
    const tslv::VerifyResult res = tslv::run_verify(model->spec, vo);
    *json_out = dup_string(tslv::verify_to_json(model->spec, res).dump(2));
    if (verdict_out) *verdict_out = res.verdict ? 1 : 0;
  });
}

int tslv_reproduce(int id, char** json_out, int* all_ok_out) {
  if (int rc = require(json_out != nullptr, "tslv_reproduce: json_out must be non-NULL"))
    return rc;
  *json_out = nullptr;
  if (all_ok_out) *all_ok_out = 0;
  return guarded([&] {
    const tslv::ReproduceResult res = tslv::run_reproduce(id);
    *json_out = dup_string(tslv::reproduce_to_json(res).dump(2));
    if (all_ok_out) *all_ok_out = res.all_ok ? 1 : 0;
  });
}

}  // extern "C"
