#include "tslv/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace tslv {

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Impulse schedule

double ImpulseSchedule::min_gap() const {
  if (times.periodic) return times.period;
  const auto& ts = times.explicit_times;
  if (ts.size() < 2) return kInf;
  double gap = kInf;
  for (std::size_t i = 1; i < ts.size(); ++i) gap = std::min(gap, ts[i] - ts[i - 1]);
  return gap;
}

std::vector<ImpulseEvent> ImpulseSchedule::events(double t0, double horizon) const {
  std::vector<ImpulseEvent> out;
  const double eps = 1e-12 * std::max(1.0, std::fabs(t0) + std::fabs(horizon));
  if (times.periodic) {
    for (long k = 1;; ++k) {
      const double t = times.offset + static_cast<double>(k) * times.period;
      if (t > horizon + eps) break;
      if (t > t0 + eps) out.push_back({t, k});
    }
  } else {
    for (std::size_t idx = 0; idx < times.explicit_times.size(); ++idx) {
      const double t = times.explicit_times[idx];
      if (t > t0 + eps && t <= horizon + eps) out.push_back({t, static_cast<long>(idx) + 1});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Impulse prefix products

ProductBound impulse_product_bound(const ExprPtr& lambda_k, long horizon) {
  if (horizon < 1) throw DomainError("impulse_product_bound: horizon must be >= 1");
  const CompiledExpr lam(*lambda_k);
  ProductBound out;
  out.lo = 1.0;  // empty prefix
  out.hi = -kInf;
  double logp = 0.0, logp_half = 0.0;
  for (long k = 1; k <= horizon; ++k) {
    const double factor = 1.0 + lam(static_cast<double>(k));
    if (!(factor > 0.0)) {
      // A vanishing or sign-flipping jump: the bound degenerates.
      out.lo = 0.0;
      out.hi = kInf;
      out.converged = false;
      return out;
    }
    logp += std::log(factor);
    if (k == horizon / 2) logp_half = logp;
    const double p = std::exp(logp);
    out.lo = std::min(out.lo, p);
    out.hi = std::max(out.hi, p);
  }
  out.converged = std::fabs(logp - logp_half) <= 1e-9 * std::max(1.0, std::fabs(logp));
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

namespace {

// Sampling passes are deduplicated on the rendered expression text: repeated
// delay entries (common in the bundled models) cost a single scan.
class ScanCache {
 public:
  ScanCache(const TimeScaleSpec& ts, const SamplingConfig& cfg) : ts_(ts), cfg_(cfg) {}

  const Extremes& env(const ExprPtr& e) {
    const std::string key = render(e);
    auto it = env_.find(key);
    if (it == env_.end()) it = env_.emplace(key, extremes(e, ts_, cfg_)).first;
    return it->second;
  }
  double dsup(const ExprPtr& e) {
    const std::string key = render(e);
    auto it = dsup_.find(key);
    if (it == dsup_.end()) it = dsup_.emplace(key, derivative_sup(e, ts_, cfg_)).first;
    return it->second;
  }

 private:
  const TimeScaleSpec& ts_;
  const SamplingConfig& cfg_;
  std::map<std::string, Extremes> env_;
  std::map<std::string, double> dsup_;
};

}  // namespace

CoeffStats compute_stats(const ModelSpec& model, const StatsConfig& cfg) {
  CoeffStats s;
  s.mu_bar = model.ts.graininess_sup();
  ScanCache cache(model.ts, cfg.sampling);

  auto env_vec = [&](const std::vector<ExprPtr>& v, std::vector<double>& U,
                     std::vector<double>& L) {
    for (const auto& e : v) {
      const Extremes& ex = cache.env(e);
      U.push_back(ex.sup);
      L.push_back(ex.inf);
    }
  };
  auto env_mat = [&](const ExprMat& mat, Mat& U, Mat& L) {
    for (const auto& row : mat) {
      std::vector<double> us, ls;
      env_vec(row, us, ls);
      U.push_back(std::move(us));
      L.push_back(std::move(ls));
    }
  };

  env_vec(model.b, s.b_U, s.b_L);
  env_vec(model.r, s.r_U, s.r_L);
  env_mat(model.a, s.a_U, s.a_L);
  env_mat(model.c, s.c_U, s.c_L);
  env_mat(model.d, s.d_U, s.d_L);
  env_mat(model.e, s.e_U, s.e_L);

  auto delay_env = [&](const ExprMat& mat, double& plus, double& minus, double& dsup) {
    plus = 0.0;
    minus = mat.empty() || mat.front().empty() ? 0.0 : kInf;
    dsup = 0.0;
    bool any = false;
    for (const auto& row : mat)
      for (const auto& e : row) {
        any = true;
        const Extremes& ex = cache.env(e);
        plus = std::max(plus, ex.sup);
        minus = std::min(minus, ex.inf);
        dsup = std::max(dsup, cache.dsup(e));
      }
    if (!any) minus = 0.0;
  };
  delay_env(model.tau, s.tau_plus, s.tau_minus, s.tau_d);
  delay_env(model.xi, s.xi_plus, s.xi_minus, s.xi_d);
  delay_env(model.delta, s.delta_plus, s.delta_minus, s.delta_d);
  delay_env(model.eta, s.eta_plus, s.eta_minus, s.eta_d);

  if (model.has_impulses) {
    // Joint ratio over species: r = min over prefixes (incl. the empty one)
    // of the largest per-species product; the upper envelope skips the empty
    // prefix so a shrinking schedule reports its true sup.
    std::vector<CompiledExpr> lams;
    for (const auto& e : model.impulses.lambda_x) lams.emplace_back(*e);
    for (const auto& e : model.impulses.lambda_y) lams.emplace_back(*e);
    if (!lams.empty()) {
      std::vector<double> logp(lams.size(), 0.0), logp_half(lams.size(), 0.0);
      double lo = 1.0, hi = -kInf;
      bool degenerate = false;
      const long H = std::max<long>(cfg.impulse_horizon, 2);
      for (long k = 1; k <= H && !degenerate; ++k) {
        double max_p = -kInf;
        for (std::size_t i = 0; i < lams.size(); ++i) {
          const double factor = 1.0 + lams[i](static_cast<double>(k));
          if (!(factor > 0.0)) {
            degenerate = true;
            break;
          }
          logp[i] += std::log(factor);
          max_p = std::max(max_p, std::exp(logp[i]));
        }
        if (degenerate) break;
        if (k == H / 2) logp_half = logp;
        lo = std::min(lo, max_p);
        hi = std::max(hi, max_p);
      }
      if (degenerate) {
        s.impulse_r = 0.0;
        s.impulse_r_upper = kInf;
        s.impulse_converged = false;
      } else {
        s.impulse_r = lo;
        s.impulse_r_upper = hi;
        s.impulse_converged = true;
        for (std::size_t i = 0; i < lams.size(); ++i)
          if (std::fabs(logp[i] - logp_half[i]) >
              1e-9 * std::max(1.0, std::fabs(logp[i])))
            s.impulse_converged = false;
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Overrides

namespace {

double as_num(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ValidationError("stats_override." + key + " must be a number");
  return v.get<double>();
}

std::vector<double> as_vec(const nlohmann::json& v, const std::string& key, std::size_t len) {
  if (!v.is_array() || v.size() != len)
    throw ValidationError("stats_override." + key + " must be an array of length " +
                          std::to_string(len));
  std::vector<double> out;
  for (const auto& x : v) out.push_back(as_num(x, key));
  return out;
}

Mat as_mat(const nlohmann::json& v, const std::string& key, std::size_t rows, std::size_t cols) {
  if (!v.is_array() || v.size() != rows)
    throw ValidationError("stats_override." + key + " must be a " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " matrix");
  Mat out;
  for (const auto& row : v) out.push_back(as_vec(row, key, cols));
  return out;
}

}  // namespace

CoeffStats apply_override(const CoeffStats& stats, const nlohmann::json& doc, std::size_t n,
                          std::size_t m) {
  if (!doc.is_object()) throw ValidationError("stats_override must be a JSON object");
  CoeffStats s = stats;
  std::map<std::string, double*> scalars{
      {"impulse_r", &s.impulse_r},   {"tau_plus", &s.tau_plus},
      {"tau_minus", &s.tau_minus},   {"xi_plus", &s.xi_plus},
      {"xi_minus", &s.xi_minus},     {"delta_plus", &s.delta_plus},
      {"delta_minus", &s.delta_minus}, {"eta_plus", &s.eta_plus},
      {"eta_minus", &s.eta_minus},   {"tau_d", &s.tau_d},
      {"xi_d", &s.xi_d},             {"delta_d", &s.delta_d},
      {"eta_d", &s.eta_d},
  };
  std::map<std::string, std::pair<std::vector<double>*, std::size_t>> vectors{
      {"b_U", {&s.b_U, n}}, {"b_L", {&s.b_L, n}}, {"r_U", {&s.r_U, m}}, {"r_L", {&s.r_L, m}},
  };
  std::map<std::string, std::tuple<Mat*, std::size_t, std::size_t>> mats{
      {"a_U", {&s.a_U, n, n}}, {"a_L", {&s.a_L, n, n}}, {"c_U", {&s.c_U, n, m}},
      {"c_L", {&s.c_L, n, m}}, {"d_U", {&s.d_U, m, n}}, {"d_L", {&s.d_L, m, n}},
      {"e_U", {&s.e_U, m, m}}, {"e_L", {&s.e_L, m, m}},
  };
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    if (auto sc = scalars.find(key); sc != scalars.end()) {
      *sc->second = as_num(it.value(), key);
    } else if (auto vc = vectors.find(key); vc != vectors.end()) {
      *vc->second.first = as_vec(it.value(), key, vc->second.second);
    } else if (auto mc = mats.find(key); mc != mats.end()) {
      *std::get<0>(mc->second) =
          as_mat(it.value(), key, std::get<1>(mc->second), std::get<2>(mc->second));
    } else {
      throw ValidationError("unknown stats_override field '" + key + "'");
    }
    s.overridden.push_back(key);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

const nlohmann::json& need(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing required field '") + key + "'");
  return *it;
}

double need_num(const nlohmann::json& j, const char* key) {
  const auto& v = need(j, key);
  if (!v.is_number()) throw ValidationError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::string need_str(const nlohmann::json& j, const char* key) {
  const auto& v = need(j, key);
  if (!v.is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

ExprPtr parse_entry(const nlohmann::json& v, const std::string& label, const std::string& var) {
  if (!v.is_string()) throw ValidationError(label + " must be an expression string");
  try {
    return parse_expr(v.get<std::string>(), var);
  } catch (const Error& e) {
    throw ValidationError(label + ": " + e.what());
  }
}

std::vector<ExprPtr> parse_vec(const nlohmann::json& j, const char* key, const std::string& var) {
  const auto& arr = need(j, key);
  if (!arr.is_array()) throw ValidationError(std::string("field '") + key + "' must be an array");
  std::vector<ExprPtr> out;
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(parse_entry(arr[i], std::string(key) + "[" + std::to_string(i) + "]", var));
  return out;
}

ExprMat parse_mat(const nlohmann::json& j, const char* key, std::size_t rows, std::size_t cols,
                  bool required) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (required) throw ValidationError(std::string("missing required field '") + key + "'");
    // Absent delay matrices mean zero delays.
    ExprMat zeros(rows, std::vector<ExprPtr>(cols));
    for (auto& row : zeros)
      for (auto& e : row) e = make_const(0.0);
    return zeros;
  }
  if (!it->is_array() || it->size() != rows)
    throw ValidationError(std::string("field '") + key + "' must be a " + std::to_string(rows) +
                          "x" + std::to_string(cols) + " matrix of expression strings");
  ExprMat out;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& rowj = (*it)[i];
    if (!rowj.is_array() || rowj.size() != cols)
      throw ValidationError(std::string("field '") + key + "' row " + std::to_string(i) +
                            " must have " + std::to_string(cols) + " entries");
    std::vector<ExprPtr> row;
    for (std::size_t c = 0; c < cols; ++c)
      row.push_back(parse_entry(rowj[c], std::string(key) + "[" + std::to_string(i) + "][" +
                                             std::to_string(c) + "]",
                                "t"));
    out.push_back(std::move(row));
  }
  return out;
}

// Sampled sanity scan: coefficients and delays must be nonnegative where we
// can see them.
void check_nonneg(const ExprPtr& e, const std::string& label, const TimeScaleSpec& ts) {
  const CompiledExpr f(*e);
  const double span = 200.0;
  if (ts.is_lattice()) {
    const long long count =
        std::min<long long>(static_cast<long long>(std::floor(span / ts.step)) + 1, 4001);
    for (long long i = 0; i < count; ++i) {
      const double t = ts.step * static_cast<double>(i);
      if (f(t) < -1e-9)
        throw ValidationError(label + " is negative at t = " + fmt(t) + " (value " +
                              fmt(f(t)) + ")");
    }
    return;
  }
  for (int i = 0; i <= 2000; ++i) {
    const double t = span * static_cast<double>(i) / 2000.0;
    if (f(t) < -1e-9)
      throw ValidationError(label + " is negative at t = " + fmt(t) + " (value " + fmt(f(t)) +
                            ")");
  }
}

void check_mat_nonneg(const ExprMat& mat, const char* key, const TimeScaleSpec& ts) {
  for (std::size_t i = 0; i < mat.size(); ++i)
    for (std::size_t j = 0; j < mat[i].size(); ++j)
      check_nonneg(mat[i][j], std::string(key) + "[" + std::to_string(i) + "][" +
                                  std::to_string(j) + "]",
                   ts);
}

}  // namespace

ModelSpec load_model(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model document: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw ValidationError("model document must be a JSON object");

  ModelSpec ms;
  ms.source_hash = fnv1a_hex(json_text);
  ms.name = doc.value("name", std::string());

  const auto& tsj = need(doc, "time_scale");
  const std::string kind = need_str(tsj, "kind");
  if (kind == "reals") {
    ms.ts = TimeScaleSpec::reals();
  } else if (kind == "lattice") {
    ms.ts = TimeScaleSpec::lattice(need_num(tsj, "step"));
  } else {
    throw ValidationError("time_scale.kind must be 'reals' or 'lattice'");
  }
  ms.t0 = doc.value("t0", 0.0);
  if (ms.ts.is_lattice() && !ms.ts.contains(ms.t0))
    throw ValidationError("t0 = " + fmt(ms.t0) + " is not on the lattice");

  ms.b = parse_vec(doc, "b", "t");
  ms.r = parse_vec(doc, "r", "t");
  ms.n = ms.b.size();
  ms.m = ms.r.size();
  if (ms.n == 0) throw ValidationError("at least one prey species is required ('b' is empty)");

  ms.a = parse_mat(doc, "a", ms.n, ms.n, true);
  ms.c = parse_mat(doc, "c", ms.n, ms.m, ms.m > 0);
  ms.d = parse_mat(doc, "d", ms.m, ms.n, ms.m > 0);
  ms.e = parse_mat(doc, "e", ms.m, ms.m, ms.m > 0);
  ms.tau = parse_mat(doc, "tau", ms.n, ms.n, false);
  ms.xi = parse_mat(doc, "xi", ms.n, ms.m, false);
  ms.delta = parse_mat(doc, "delta", ms.m, ms.n, false);
  ms.eta = parse_mat(doc, "eta", ms.m, ms.m, false);

  if (auto it = doc.find("impulses"); it != doc.end()) {
    if (!it->is_object()) throw ValidationError("'impulses' must be an object");
    ms.has_impulses = true;
    const auto& imp = *it;
    const auto& timesj = need(imp, "times");
    if (auto p = timesj.find("periodic"); p != timesj.end()) {
      ms.impulses.times.periodic = true;
      ms.impulses.times.period = need_num(*p, "period");
      ms.impulses.times.offset = p->value("offset", 0.0);
      if (!(ms.impulses.times.period > 0.0))
        throw ValidationError("impulse period must be positive");
    } else if (auto q = timesj.find("explicit"); q != timesj.end()) {
      ms.impulses.times.periodic = false;
      if (!q->is_array()) throw ValidationError("impulses.times.explicit must be an array");
      for (const auto& v : *q) ms.impulses.times.explicit_times.push_back(as_num(v, "explicit"));
      const auto& et = ms.impulses.times.explicit_times;
      for (std::size_t i = 1; i < et.size(); ++i)
        if (!(et[i] > et[i - 1]))
          throw ValidationError("explicit impulse times must be strictly increasing");
    } else {
      throw ValidationError("impulses.times needs 'periodic' or 'explicit'");
    }
    ms.impulses.lambda_x = parse_vec(imp, "lambda_x", "k");
    ms.impulses.lambda_y = parse_vec(imp, "lambda_y", "k");
    if (ms.impulses.lambda_x.size() != ms.n || ms.impulses.lambda_y.size() != ms.m)
      throw ValidationError("lambda_x / lambda_y must have one entry per species");
    // Jump magnitudes must keep states positive.
    for (std::size_t i = 0; i < ms.n + ms.m; ++i) {
      const ExprPtr& lam = i < ms.n ? ms.impulses.lambda_x[i] : ms.impulses.lambda_y[i - ms.n];
      const CompiledExpr f(*lam);
      for (long k = 1; k <= 200; ++k)
        if (!(1.0 + f(static_cast<double>(k)) > 0.0))
          throw ValidationError("impulse magnitude lambda[" + std::to_string(i) + "](k=" +
                                std::to_string(k) + ") = " + fmt(f(double(k))) + " is <= -1");
    }
    if (ms.ts.is_lattice()) {
      // Jump times must be sample points of the lattice.
      for (const auto& ev : ms.impulses.events(ms.t0, ms.t0 + 50.0 * ms.ts.step))
        if (!ms.ts.contains(ev.time))
          throw ValidationError("impulse time t_" + std::to_string(ev.k) + " = " + fmt(ev.time) +
                                " is not on the lattice");
    }
  }

  if (auto it = doc.find("stats_override"); it != doc.end()) {
    if (!it->is_object()) throw ValidationError("stats_override must be a JSON object");
    ms.stats_override = *it;
    // Reject unknown keys / wrong shapes at load time rather than when the
    // override is eventually applied; the dummy base is discarded.
    (void)apply_override(CoeffStats{}, *ms.stats_override, ms.n, ms.m);
  }

  for (std::size_t i = 0; i < ms.n; ++i) check_nonneg(ms.b[i], "b[" + std::to_string(i) + "]", ms.ts);
  for (std::size_t j = 0; j < ms.m; ++j) check_nonneg(ms.r[j], "r[" + std::to_string(j) + "]", ms.ts);
  check_mat_nonneg(ms.a, "a", ms.ts);
  check_mat_nonneg(ms.c, "c", ms.ts);
  check_mat_nonneg(ms.d, "d", ms.ts);
  check_mat_nonneg(ms.e, "e", ms.ts);
  check_mat_nonneg(ms.tau, "tau", ms.ts);
  check_mat_nonneg(ms.xi, "xi", ms.ts);
  check_mat_nonneg(ms.delta, "delta", ms.ts);
  check_mat_nonneg(ms.eta, "eta", ms.ts);

  return ms;
}

ModelSpec load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading model file '" + path + "'");
  ModelSpec ms = load_model(ss.str());
  ms.source_path = path;
  return ms;
}

}  // namespace tslv
