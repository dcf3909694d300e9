#include "tslv/report.hpp"

#include <cmath>
#include <cstdio>

namespace tslv {

namespace {

using nlohmann::json;

// JSON has no encoding for non-finite numbers; clamp rather than emit null so
// downstream readers always see a number.
json jnum(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? 1e308 : -1e308;
  return v;
}

json jvec(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(jnum(x));
  return out;
}

json jmat(const Mat& m) {
  json out = json::array();
  for (const auto& row : m) out.push_back(jvec(row));
  return out;
}

json stats_to_json(const CoeffStats& s) {
  json j;
  j["b_U"] = jvec(s.b_U);
  j["b_L"] = jvec(s.b_L);
  j["r_U"] = jvec(s.r_U);
  j["r_L"] = jvec(s.r_L);
  j["a_U"] = jmat(s.a_U);
  j["a_L"] = jmat(s.a_L);
  j["c_U"] = jmat(s.c_U);
  j["c_L"] = jmat(s.c_L);
  j["d_U"] = jmat(s.d_U);
  j["d_L"] = jmat(s.d_L);
  j["e_U"] = jmat(s.e_U);
  j["e_L"] = jmat(s.e_L);
  j["tau_plus"] = jnum(s.tau_plus);
  j["tau_minus"] = jnum(s.tau_minus);
  j["xi_plus"] = jnum(s.xi_plus);
  j["xi_minus"] = jnum(s.xi_minus);
  j["delta_plus"] = jnum(s.delta_plus);
  j["delta_minus"] = jnum(s.delta_minus);
  j["eta_plus"] = jnum(s.eta_plus);
  j["eta_minus"] = jnum(s.eta_minus);
  j["tau_d"] = jnum(s.tau_d);
  j["xi_d"] = jnum(s.xi_d);
  j["delta_d"] = jnum(s.delta_d);
  j["eta_d"] = jnum(s.eta_d);
  j["impulse_r"] = jnum(s.impulse_r);
  j["impulse_r_upper"] = jnum(s.impulse_r_upper);
  j["impulse_converged"] = s.impulse_converged;
  j["mu_bar"] = jnum(s.mu_bar);
  j["overridden"] = s.overridden;
  return j;
}

json model_to_json(const ModelSpec& model) {
  json j;
  j["name"] = model.name;
  j["hash"] = model.source_hash;
  j["n"] = model.n;
  j["m"] = model.m;
  j["t0"] = model.t0;
  j["time_scale"]["kind"] = model.ts.is_lattice() ? "lattice" : "reals";
  if (model.ts.is_lattice()) j["time_scale"]["step"] = model.ts.step;
  j["has_impulses"] = model.has_impulses;
  return j;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// check

CheckResult run_check(const ModelSpec& model, const CheckOptions& opts) {
  CheckResult res;
  res.computed = compute_stats(model, opts.stats);
  res.effective = res.computed;
  if (opts.use_override && model.stats_override && !model.stats_override->empty()) {
    res.effective = apply_override(res.computed, *model.stats_override, model.n, model.m);
    res.override_applied = !res.effective.overridden.empty();
    if (res.override_applied)
      res.warnings.push_back("statistics overridden: " + join(res.effective.overridden, ", ") +
                             " (sampled values retained under statistics.computed)");
  }
  if (!res.computed.impulse_converged)
    res.warnings.push_back(
        "impulse prefix products had not stabilized at the sampling horizon; the jump-product "
        "envelope uses the worst prefix seen");
  if (model.has_impulses && res.override_applied &&
      (res.computed.impulse_r_upper > 1.0 + 1e-12 || !(res.computed.impulse_r > 0.0)))
    res.warnings.push_back("sampled jump products (r = " + fmt6(res.computed.impulse_r) +
                           ", R = " + fmt6(res.computed.impulse_r_upper) +
                           ") violate the product envelope; the analysis uses the overridden "
                           "value r = " + fmt6(res.effective.impulse_r));

  res.bounds = permanence_bounds(res.effective);
  res.hypotheses = check_hypotheses(model, res.effective, res.bounds);
  try {
    res.certificate = stability_certificate(res.effective, res.bounds);
  } catch (const HypothesisError& e) {
    res.certificate = StabilityCertificate{};
    res.certificate.verdict = false;
    res.certificate.notes.push_back(std::string("certificate not evaluable: ") + e.what());
  }
  return res;
}

json check_to_json(const ModelSpec& model, const CheckResult& res) {
  json j;
  j["model"] = model_to_json(model);
  j["statistics"]["computed"] = stats_to_json(res.computed);
  j["statistics"]["effective"] = stats_to_json(res.effective);
  j["statistics"]["override_applied"] = res.override_applied;
  json hyp;
  for (const auto& [name, hr] : res.hypotheses.items) {
    json h;
    h["status"] = hr.status;
    json marg;
    for (const auto& [k, v] : hr.margins) marg[k] = jnum(v);
    h["margins"] = marg;
    h["witnesses"] = hr.witnesses;
    hyp[name] = h;
  }
  hyp["all_pass"] = res.hypotheses.all_pass;
  j["hypotheses"] = hyp;
  j["permanence"]["x_up"] = jvec(res.bounds.x_up);
  j["permanence"]["y_up"] = jvec(res.bounds.y_up);
  j["permanence"]["x_lo"] = jvec(res.bounds.x_lo);
  j["permanence"]["y_lo"] = jvec(res.bounds.y_lo);
  j["permanence"]["ordering_ok"] = res.bounds.ordering_ok;
  j["permanence"]["notes"] = res.bounds.notes;
  j["certificate"]["gamma_x"] = jvec(res.certificate.gamma_x);
  j["certificate"]["gamma_y"] = jvec(res.certificate.gamma_y);
  j["certificate"]["gamma"] = jnum(res.certificate.gamma);
  j["certificate"]["neg_gamma_regressive"] = res.certificate.neg_gamma_regressive;
  j["certificate"]["verdict"] = res.certificate.verdict;
  j["certificate"]["notes"] = res.certificate.notes;
  j["warnings"] = res.warnings;
  return j;
}

// ---------------------------------------------------------------------------
// verify

VerifyResult run_verify(const ModelSpec& model, const VerifyOptions& opts) {
  VerifyResult res;
  res.check = run_check(model, opts.check);
  res.warnings = res.check.warnings;

  const Trajectory traj = simulate(model, opts.sim);
  res.emp = empirical_bounds(traj, opts.sim.transient_fraction);

  std::vector<double> zA = opts.sim.z0, wA = opts.sim.w0;
  if (zA.size() != model.n || wA.size() != model.m) {
    zA.assign(model.n, 1.0);
    wA.assign(model.m, 1.0);
  }
  std::vector<double> zB = zA, wB = wA;
  for (auto& v : zB) v *= std::exp(opts.perturbation);
  for (auto& v : wB) v *= std::exp(-opts.perturbation);
  res.gap = stability_gap(model, opts.sim, zA, wA, zB, wB);

  const PermanenceBounds& pb = res.check.bounds;
  res.tails_ok = true;
  res.x_within.assign(model.n, false);
  res.y_within.assign(model.m, false);
  auto judge = [&](const char* label, std::size_t idx, double lo, double up, double emp_lo,
                   double emp_hi) {
    if (lo > up) {
      res.warnings.push_back(std::string(label) + " " + std::to_string(idx + 1) +
                             ": certified interval is inverted; tail check skipped");
      res.tails_ok = false;
      return false;
    }
    const bool ok = emp_lo >= lo - opts.eps && emp_hi <= up + opts.eps;
    if (!ok) {
      res.warnings.push_back(std::string(label) + " " + std::to_string(idx + 1) + ": tail [" +
                             fmt6(emp_lo) + ", " + fmt6(emp_hi) +
                             "] escapes the certified box [" + fmt6(lo) + ", " + fmt6(up) +
                             "] widened by " + fmt6(opts.eps));
      res.tails_ok = false;
    }
    return ok;
  };
  for (std::size_t i = 0; i < model.n; ++i)
    res.x_within[i] = judge("prey", i, pb.x_lo[i], pb.x_up[i], res.emp.x_lo[i], res.emp.x_hi[i]);
  for (std::size_t j = 0; j < model.m; ++j)
    res.y_within[j] =
        judge("predator", j, pb.y_lo[j], pb.y_up[j], res.emp.y_lo[j], res.emp.y_hi[j]);

  res.gap_ok = res.gap.ratio < opts.gap_limit;
  if (!res.gap_ok)
    res.warnings.push_back("trajectory gap contracted to " + fmt6(res.gap.ratio) +
                           " of its initial value; required < " + fmt6(opts.gap_limit));
  res.verdict = res.tails_ok && res.gap_ok;
  return res;
}

json verify_to_json(const ModelSpec& model, const VerifyResult& res) {
  json j;
  j["analysis"] = check_to_json(model, res.check);
  j["empirical"]["window_start"] = jnum(res.emp.window_start);
  j["empirical"]["x_lo"] = jvec(res.emp.x_lo);
  j["empirical"]["x_hi"] = jvec(res.emp.x_hi);
  j["empirical"]["y_lo"] = jvec(res.emp.y_lo);
  j["empirical"]["y_hi"] = jvec(res.emp.y_hi);
  j["gap"]["initial"] = jnum(res.gap.initial);
  j["gap"]["final"] = jnum(res.gap.final_gap);
  j["gap"]["ratio"] = jnum(res.gap.ratio);
  j["gap"]["decay_rate"] = jnum(res.gap.decay_rate);
  j["x_within"] = res.x_within;
  j["y_within"] = res.y_within;
  j["tails_ok"] = res.tails_ok;
  j["gap_ok"] = res.gap_ok;
  j["verdict"] = res.verdict;
  j["warnings"] = res.warnings;
  return j;
}

// ---------------------------------------------------------------------------
// reproduce

namespace {

struct GoldenEntry {
  const char* quantity;
  double reference;
  double tolerance;
};

void add_rows(ReproduceResult& out, const CheckResult& cr,
              const std::vector<GoldenEntry>& entries) {
  auto value_of = [&](const std::string& q) -> double {
    auto idx = [&](char open) {
      return static_cast<std::size_t>(q[q.find(open) + 1] - '1');
    };
    if (q.rfind("x_up", 0) == 0) return cr.bounds.x_up[idx('[')];
    if (q.rfind("y_up", 0) == 0) return cr.bounds.y_up[idx('[')];
    if (q.rfind("x_lo", 0) == 0) return cr.bounds.x_lo[idx('[')];
    if (q.rfind("y_lo", 0) == 0) return cr.bounds.y_lo[idx('[')];
    if (q.rfind("gamma_x", 0) == 0) return cr.certificate.gamma_x[idx('[')];
    if (q.rfind("gamma_y", 0) == 0) return cr.certificate.gamma_y[idx('[')];
    if (q == "gamma_min") return cr.certificate.gamma;
    throw Error(ErrorCode::Internal, "unknown reproduce quantity " + q);
  };
  for (const auto& e : entries) {
    ReproduceRow row;
    row.quantity = e.quantity;
    row.reference = e.reference;
    row.computed = value_of(e.quantity);
    row.tolerance = e.tolerance;
    row.ok = std::fabs(row.computed - row.reference) <= e.tolerance;
    out.rows.push_back(row);
  }
}

}  // namespace

ReproduceResult run_reproduce(int id) {
  if (id != 1 && id != 2) throw UsageError("reproduce: example id must be 1 or 2");
  const ModelSpec model = load_model(bundled_model_json(id));
  const CheckResult cr = run_check(model, {});
  ReproduceResult out;
  out.example = id == 1 ? "example1" : "example2";
  const double bt = 0.01, gt = 0.05;
  if (id == 1) {
    add_rows(out, cr,
             {{"x_up[1]", 1.591, bt}, {"x_up[2]", 1.645, bt}, {"y_up[1]", 1.653, bt},
              {"y_up[2]", 1.324, bt}, {"x_lo[1]", 0.979, bt}, {"x_lo[2]", 0.896, bt},
              {"y_lo[1]", 0.296, bt}, {"y_lo[2]", 0.198, bt}, {"gamma_x[1]", 2.408, gt},
              {"gamma_x[2]", 0.466, gt}, {"gamma_y[1]", 0.502, gt}, {"gamma_y[2]", 0.418, gt},
              {"gamma_min", 0.418, gt}});
  } else {
    add_rows(out, cr,
             {{"x_up[1]", 0.041, bt}, {"x_up[2]", 0.034, bt}, {"y_up[1]", 0.012, bt},
              {"y_up[2]", 0.038, bt}, {"x_lo[1]", 1.374, bt}, {"x_lo[2]", 1.360, bt},
              {"y_lo[1]", 2.724, bt}, {"y_lo[2]", 2.747, bt}, {"gamma_x[1]", 0.239, gt},
              {"gamma_x[2]", 0.244, gt}, {"gamma_y[1]", 1.248, gt}, {"gamma_y[2]", 1.093, gt},
              {"gamma_min", 0.239, gt}});
  }
  out.all_ok = true;
  for (const auto& row : out.rows) out.all_ok = out.all_ok && row.ok;
  return out;
}

json reproduce_to_json(const ReproduceResult& res) {
  json j;
  j["example"] = res.example;
  json rows = json::array();
  for (const auto& r : res.rows) {
    json row;
    row["quantity"] = r.quantity;
    row["reference"] = jnum(r.reference);
    row["computed"] = jnum(r.computed);
    row["abs_delta"] = jnum(std::fabs(r.computed - r.reference));
    row["tolerance"] = jnum(r.tolerance);
    row["ok"] = r.ok;
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["all_ok"] = res.all_ok;
  return j;
}

}  // namespace tslv
