#include "tslv/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace tslv {

namespace {

const double kInf = std::numeric_limits<double>::infinity();
// Below this graininess the singular exponent factors log(1 -+ c*mu)/mu are
// evaluated through their analytic mu -> 0 limits -+ c.
constexpr double kMuEps = 1e-12;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void check_common(const ComparisonParams& p) {
  if (!(p.a > 0.0)) throw DomainError("comparison bound: a must be positive, got " + fmt(p.a));
  if (p.d < 0.0) throw DomainError("comparison bound: d must be nonnegative, got " + fmt(p.d));
  if (p.tau_bar < 0.0) throw DomainError("comparison bound: tau_bar must be nonnegative");
  if (p.mu_bar < 0.0) throw DomainError("comparison bound: mu_bar must be nonnegative");
  if (!(p.alpha > 0.0) || !(p.alpha <= p.beta))
    throw DomainError("comparison bound: need 0 < alpha <= beta");
}

// log(1 - c*mu)/mu, or its mu -> 0 limit -c; requires 1 - c*mu > 0.
double shrink_log(double c, double mu, const char* what) {
  if (mu < kMuEps) return -c;
  const double arg = 1.0 - c * mu;
  if (!(arg > 0.0))
    throw HypothesisError(std::string(what) + ": regressivity fails, 1 - mu*" + what +
                          " = " + fmt(arg) + " <= 0");
  return std::log(arg) / mu;
}

// -log(1 + c*mu)/mu, or its mu -> 0 limit -c (always defined for c >= 0).
double grow_log_neg(double c, double mu) {
  if (mu < kMuEps) return -c;
  return -std::log1p(c * mu) / mu;
}

}  // namespace

double xbar(double a, double b, double d) {
  if (!(a > 0.0)) throw DomainError("xbar: a must be positive");
  if (d < 0.0) throw DomainError("xbar: d must be nonnegative");
  if (b <= 0.0 && d == 0.0) throw DomainError("xbar: no positive root when b <= 0 and d = 0");
  return (b + std::sqrt(b * b + 4.0 * a * d)) / (2.0 * a);
}

double scalar_limsup_bound_sigma(const ComparisonParams& p) {
  check_common(p);
  if (!(p.b > 0.0)) throw DomainError("limsup bound: b must be positive");
  const double denom = 1.0 - p.b * p.mu_bar;
  if (!(denom > 0.0))
    throw HypothesisError("limsup bound (sigma form): 1 - b*mu_bar = " + fmt(denom) + " <= 0");
  const double expo = std::exp(p.b * p.tau_bar / denom);
  if (p.d == 0.0) return (p.b * p.beta / p.a) * expo;
  const double base = p.d * p.beta / p.b;
  return -base + (base + xbar(p.a, p.b, p.d) * p.beta) * expo;
}

double scalar_limsup_bound_plain(const ComparisonParams& p) {
  check_common(p);
  if (!(p.b > 0.0)) throw DomainError("limsup bound: b must be positive");
  const double expo = std::exp(p.b * p.tau_bar);
  if (p.d == 0.0) return (p.b * p.beta / p.a) * expo;
  const double base = p.d * p.beta / p.b;
  return -base + (base + xbar(p.a, p.b, p.d) * p.beta) * expo;
}

double scalar_liminf_bound_plain(const ComparisonParams& p) {
  check_common(p);
  if (!(p.b > 0.0)) throw DomainError("liminf bound: b must be positive");
  if (!(p.N > 0.0)) throw DomainError("liminf bound: N (upper envelope of x) must be positive");
  const double rate = p.a * p.N;
  const double expo = std::exp(shrink_log(rate, p.mu_bar, "a*N") * p.tau_bar);
  return (p.b * p.alpha * p.alpha / p.a) * expo;
}

double scalar_liminf_bound_sigma(const ComparisonParams& p) {
  check_common(p);
  if (!(p.b > 0.0)) throw DomainError("liminf bound: b must be positive");
  if (!(p.N > 0.0)) throw DomainError("liminf bound: N (upper envelope of x) must be positive");
  const double rate = p.a * p.N;
  const double expo = std::exp(grow_log_neg(rate, p.mu_bar) * p.tau_bar);
  return (p.b * p.alpha * p.alpha / p.a) * expo;
}

// ---------------------------------------------------------------------------
// Permanence box

PermanenceBounds permanence_bounds(const CoeffStats& s) {
  const std::size_t n = s.b_U.size(), m = s.r_U.size();
  const double mu = s.mu_bar;
  const double r = s.impulse_r;
  if (!(r > 0.0))
    throw HypothesisError("permanence bounds: impulse ratio r = " + fmt(r) +
                          " must be positive (H2 surface)");
  PermanenceBounds pb;

  // Prey upper bounds.
  for (std::size_t i = 0; i < n; ++i) {
    const double b = s.b_U[i], aL = s.a_L[i][i];
    if (!(b > 0.0))
      throw HypothesisError("prey " + std::to_string(i + 1) + ": growth envelope b_U = " +
                            fmt(b) + " must be positive");
    if (!(aL > 0.0))
      throw HypothesisError("prey " + std::to_string(i + 1) +
                            ": self-limitation envelope a_L[i][i] = " + fmt(aL) +
                            " must be positive");
    const double denom = 1.0 - b * mu;
    if (!(denom > 0.0))
      throw HypothesisError("prey " + std::to_string(i + 1) + ": 1 - mu*b_U = " + fmt(denom) +
                            " <= 0 (H4 surface)");
    pb.x_up.push_back(std::log((b / aL) * std::exp(b * s.tau_plus / denom)));
  }

  // Predator upper bounds.
  for (std::size_t j = 0; j < m; ++j) {
    double D = 0.0;
    for (std::size_t l = 0; l < n; ++l) D += s.d_U[j][l] * std::exp(pb.x_up[l]);
    const double eL = s.e_L[j][j];
    if (!(D > 0.0))
      throw HypothesisError("predator " + std::to_string(j + 1) +
                            ": prey intake envelope D = " + fmt(D) + " must be positive");
    if (!(eL > 0.0))
      throw HypothesisError("predator " + std::to_string(j + 1) +
                            ": self-limitation envelope e_L[j][j] = " + fmt(eL) +
                            " must be positive");
    const double inv = 1.0 / D - mu;
    if (!(inv > 0.0))
      throw HypothesisError("predator " + std::to_string(j + 1) + ": 1 - mu*D = " +
                            fmt(1.0 - mu * D) + " <= 0 (H4 surface)");
    pb.y_up.push_back(std::log((D / eL) * std::exp(s.eta_plus / inv)));
  }

  // Prey lower bounds.
  for (std::size_t i = 0; i < n; ++i) {
    double bracket = s.b_L[i];
    for (std::size_t l = 0; l < n; ++l)
      if (l != i) bracket -= s.a_U[i][l] * std::exp(pb.x_up[l]);
    for (std::size_t h = 0; h < m; ++h) bracket -= s.c_U[i][h] * std::exp(pb.y_up[h]);
    if (!(bracket > 0.0))
      throw HypothesisError("prey " + std::to_string(i + 1) +
                            ": lower-bound bracket b_L - sum a_U e^{x_up} - sum c_U e^{y_up} = " +
                            fmt(bracket) + " <= 0 (H4 surface)");
    const double aU = s.a_U[i][i];
    if (!(aU > 0.0))
      throw HypothesisError("prey " + std::to_string(i + 1) + ": a_U[i][i] must be positive");
    const double rate = aU * std::exp(pb.x_up[i]);
    const double expo =
        std::exp(shrink_log(rate, mu, "a_U*exp(x_up)") * s.tau_plus);
    pb.x_lo.push_back(std::log((r * r / aU) * bracket * expo));
  }

  // Predator lower bounds.
  for (std::size_t j = 0; j < m; ++j) {
    double bracket = -s.r_U[j];
    for (std::size_t l = 0; l < n; ++l) bracket += s.d_L[j][l] * std::exp(pb.x_lo[l]);
    for (std::size_t h = 0; h < m; ++h)
      if (h != j) bracket -= s.e_U[j][h] * std::exp(pb.y_up[h]);
    if (!(bracket > 0.0))
      throw HypothesisError("predator " + std::to_string(j + 1) +
                            ": lower-bound bracket sum d_L e^{x_lo} - r_U - sum e_U e^{y_up} = " +
                            fmt(bracket) + " <= 0 (H4 surface)");
    const double eU = s.e_U[j][j];
    if (!(eU > 0.0))
      throw HypothesisError("predator " + std::to_string(j + 1) + ": e_U[j][j] must be positive");
    const double rate = eU * std::exp(pb.y_up[j]);
    const double expo = std::exp(shrink_log(rate, mu, "e_U*exp(y_up)") * s.eta_plus);
    pb.y_lo.push_back(std::log((r * r / eU) * bracket * expo));
  }

  for (std::size_t i = 0; i < n; ++i)
    if (pb.x_lo[i] > pb.x_up[i]) {
      pb.ordering_ok = false;
      pb.notes.push_back("prey " + std::to_string(i + 1) + ": lower bound " + fmt(pb.x_lo[i]) +
                         " exceeds upper bound " + fmt(pb.x_up[i]));
    }
  for (std::size_t j = 0; j < m; ++j)
    if (pb.y_lo[j] > pb.y_up[j]) {
      pb.ordering_ok = false;
      pb.notes.push_back("predator " + std::to_string(j + 1) + ": lower bound " + fmt(pb.y_lo[j]) +
                         " exceeds upper bound " + fmt(pb.y_up[j]));
    }
  return pb;
}

// ---------------------------------------------------------------------------
// Hypotheses

namespace {

bool overridden_any(const CoeffStats& s, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (std::find(s.overridden.begin(), s.overridden.end(), n) != s.overridden.end()) return true;
  return false;
}

void finalize(HypothesisResult& h, bool was_overridden) {
  bool ok = true;
  for (const auto& [name, margin] : h.margins)
    if (!(margin > 0.0)) {
      ok = false;
      h.witnesses.push_back("condition '" + name + "' fails with margin " + fmt(margin));
    }
  if (ok)
    h.status = was_overridden ? "overridden" : "pass";
  else
    h.status = was_overridden ? "overridden" : "fail";
  if (was_overridden && !ok)
    h.witnesses.push_back("inputs were overridden and the condition still fails numerically");
}

}  // namespace

HypothesisReport check_hypotheses(const ModelSpec& model, const CoeffStats& s,
                                  const PermanenceBounds& pb) {
  HypothesisReport rep;
  const std::size_t n = s.b_U.size(), m = s.r_U.size();
  const double mu = s.mu_bar;

  // H1: nonnegative, bounded coefficient envelopes.
  {
    HypothesisResult h;
    double min_inf = kInf, max_sup = -kInf;
    auto vec = [&](const std::vector<double>& L, const std::vector<double>& U) {
      for (double v : L) min_inf = std::min(min_inf, v);
      for (double v : U) max_sup = std::max(max_sup, v);
    };
    vec(s.b_L, s.b_U);
    vec(s.r_L, s.r_U);
    auto mat = [&](const Mat& L, const Mat& U) {
      for (const auto& row : L)
        for (double v : row) min_inf = std::min(min_inf, v);
      for (const auto& row : U)
        for (double v : row) max_sup = std::max(max_sup, v);
    };
    mat(s.a_L, s.a_U);
    mat(s.c_L, s.c_U);
    mat(s.d_L, s.d_U);
    mat(s.e_L, s.e_U);
    h.margins["coefficients_nonnegative"] = min_inf + 1e-9;
    h.margins["coefficients_bounded"] = std::isfinite(max_sup) ? 1.0 : -1.0;
    finalize(h, overridden_any(s, {"b_L", "r_L", "a_L", "c_L", "d_L", "e_L"}));
    rep.items["H1"] = h;
  }

  // H2: impulse ratio envelope 0 < r <= running products <= 1 and
  // jump magnitudes in (-1, 0].
  {
    HypothesisResult h;
    h.margins["r_positive"] = s.impulse_r;
    h.margins["r_le_one"] = 1.0 + 1e-12 - s.impulse_r;
    h.margins["products_le_one"] = 1.0 + 1e-12 - s.impulse_r_upper;
    if (model.has_impulses) {
      double lam_max = -kInf, lam_min = kInf;
      for (std::size_t i = 0; i < model.n + model.m; ++i) {
        const ExprPtr& lam = i < model.n ? model.impulses.lambda_x[i]
                                         : model.impulses.lambda_y[i - model.n];
        const CompiledExpr f(*lam);
        for (long k = 1; k <= 200; ++k) {
          const double v = f(static_cast<double>(k));
          lam_max = std::max(lam_max, v);
          lam_min = std::min(lam_min, v);
        }
      }
      h.margins["lambda_le_zero"] = 1e-12 - lam_max;
      h.margins["lambda_gt_minus_one"] = lam_min + 1.0;
      if (!s.impulse_converged)
        h.witnesses.push_back("impulse products have not stabilized at the sampling horizon");
    }
    finalize(h, overridden_any(s, {"impulse_r"}));
    if (!s.impulse_converged && h.status == "pass") h.status = "fail";
    rep.items["H2"] = h;
  }

  // H3: jump times uniformly separated.
  {
    HypothesisResult h;
    const double theta = model.has_impulses ? model.impulses.min_gap() : kInf;
    h.margins["theta_positive"] = theta;
    finalize(h, false);
    rep.items["H3"] = h;
  }

  // H4: regressivity of the bound rates plus positivity of the permanence box
  // in log coordinates.
  {
    HypothesisResult h;
    double reg_b = kInf, reg_D = kInf, reg_a = kInf, reg_e = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      reg_b = std::min(reg_b, 1.0 - mu * s.b_U[i]);
      reg_a = std::min(reg_a, 1.0 - mu * s.a_U[i][i] * std::exp(pb.x_up[i]));
    }
    for (std::size_t j = 0; j < m; ++j) {
      double D = 0.0;
      for (std::size_t l = 0; l < n; ++l) D += s.d_U[j][l] * std::exp(pb.x_up[l]);
      reg_D = std::min(reg_D, 1.0 - mu * D);
      reg_e = std::min(reg_e, 1.0 - mu * s.e_U[j][j] * std::exp(pb.y_up[j]));
    }
    h.margins["regressive_b_U"] = reg_b;
    h.margins["regressive_D"] = m ? reg_D : 1.0;
    h.margins["regressive_a_exp_x_up"] = reg_a;
    h.margins["regressive_e_exp_y_up"] = m ? reg_e : 1.0;
    auto vmin = [](const std::vector<double>& v) {
      double r = kInf;
      for (double x : v) r = std::min(r, x);
      return r;
    };
    h.margins["x_up_positive"] = vmin(pb.x_up);
    h.margins["y_up_positive"] = m ? vmin(pb.y_up) : 1.0;
    h.margins["x_lo_positive"] = vmin(pb.x_lo);
    h.margins["y_lo_positive"] = m ? vmin(pb.y_lo) : 1.0;
    finalize(h, overridden_any(s, {"impulse_r", "b_U", "a_U", "d_U", "e_U"}));
    rep.items["H4"] = h;
  }

  // H5: rd-continuity / regressivity of the data; structural, assumed.
  {
    HypothesisResult h;
    h.status = "assumed";
    h.witnesses.push_back(
        "rd-continuity and regressivity of the model data are structural assumptions");
    rep.items["H5"] = h;
  }

  // H6: delay derivative sups strictly below one.
  {
    HypothesisResult h;
    h.margins["one_minus_tau_d"] = 1.0 - s.tau_d;
    h.margins["one_minus_xi_d"] = 1.0 - s.xi_d;
    h.margins["one_minus_delta_d"] = 1.0 - s.delta_d;
    h.margins["one_minus_eta_d"] = 1.0 - s.eta_d;
    finalize(h, overridden_any(s, {"tau_d", "xi_d", "delta_d", "eta_d"}));
    rep.items["H6"] = h;
  }

  // H7: positive decay rate, regressive.
  {
    HypothesisResult h;
    try {
      const StabilityCertificate cert = stability_certificate(s, pb);
      h.margins["gamma_positive"] = cert.gamma;
      h.margins["neg_gamma_regressive"] = 1.0 - mu * cert.gamma;
      finalize(h, false);
    } catch (const Error& e) {
      h.status = "fail";
      h.witnesses.push_back(std::string("certificate not evaluable: ") + e.what());
    }
    rep.items["H7"] = h;
  }

  for (const auto& [name, item] : rep.items)
    if (item.status == "fail") rep.all_pass = false;
  return rep;
}

// ---------------------------------------------------------------------------
// Stability certificate

StabilityCertificate stability_certificate(const CoeffStats& s, const PermanenceBounds& pb) {
  const std::size_t n = s.b_U.size(), m = s.r_U.size();
  const double mu = s.mu_bar;

  auto denom = [](double d, const char* name) {
    const double v = 1.0 - d;
    if (!(v > 0.0))
      throw HypothesisError(std::string("certificate: 1 - ") + name + " = " + fmt(v) +
                            " <= 0 (H6 surface)");
    return v;
  };
  const double dt = denom(s.tau_d, "tau_d");
  const double dx = denom(s.xi_d, "xi_d");
  const double dd = denom(s.delta_d, "delta_d");
  const double de = denom(s.eta_d, "eta_d");

  // Column-sum envelopes weighted by the species' own upper bound.
  std::vector<double> A(n, 0.0), E(m, 0.0), C(n, 0.0), D(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double col = 0.0;
    for (std::size_t l = 0; l < n; ++l) col += s.a_U[l][i];
    A[i] = col * std::exp(pb.x_up[i]);
    for (std::size_t j = 0; j < m; ++j) C[i] += s.c_U[i][j] * std::exp(pb.y_up[j]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    double col = 0.0;
    for (std::size_t h = 0; h < m; ++h) col += s.e_U[h][j];
    E[j] = col * std::exp(pb.y_up[j]);
    for (std::size_t i = 0; i < n; ++i) D[j] += s.d_U[j][i] * std::exp(pb.x_up[i]);
  }

  StabilityCertificate cert;

  for (std::size_t i = 0; i < n; ++i) {
    double g = 0.0;
    for (std::size_t l = 0; l < n; ++l) g += s.a_L[l][i] * std::exp(pb.x_lo[i]);
    g -= 2.0 * mu * A[i] * A[i];
    g -= (1.0 / dt) * (2.0 * mu * A[i] + 1.0) * A[i] * A[i] *
         (2.0 * s.tau_plus - s.tau_minus);
    {
      double sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) sum += s.c_U[i][j] * std::exp(pb.y_up[j]) * D[j];
      g -= (1.0 / dx) * (2.0 * mu * A[i] + 1.0) * sum *
           (s.xi_plus + s.delta_plus - s.xi_minus);
    }
    {
      double sum = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        sum += s.d_U[j][i] * std::exp(pb.x_up[i]) * (2.0 * mu * E[j] + 1.0);
      g -= sum;
    }
    {
      double sum = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        sum += s.d_U[j][i] * std::exp(pb.x_up[i]) * (2.0 * mu * E[j] + 1.0) * E[j];
      g -= (1.0 / dx) * sum * (s.eta_plus + s.xi_plus - s.xi_minus);
    }
    {
      double sum = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        sum += s.d_U[j][i] * std::exp(pb.x_up[i]) * (2.0 * mu * E[j] + 1.0);
      g -= (1.0 / dt) * sum * A[i] * (s.tau_plus + s.xi_plus - s.tau_minus);
    }
    cert.gamma_x.push_back(g);
  }

  for (std::size_t j = 0; j < m; ++j) {
    double g = 0.0;
    for (std::size_t h = 0; h < m; ++h) g += s.e_L[h][j] * std::exp(pb.y_lo[j]);
    g -= 2.0 * mu * E[j] * E[j];
    g -= (1.0 / de) * (2.0 * mu * E[j] + 1.0) * E[j] * E[j] *
         (2.0 * s.eta_plus - s.eta_minus);
    {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += s.d_U[j][i] * std::exp(pb.x_up[i]) * C[i];
      g -= (1.0 / dd) * (2.0 * mu * E[j] + 1.0) * sum *
           (s.delta_plus + s.eta_plus - s.eta_minus);
    }
    {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        sum += s.c_U[i][j] * std::exp(pb.y_up[j]) * (2.0 * mu * A[i] + 1.0);
      g -= sum;
    }
    {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        sum += s.c_U[i][j] * std::exp(pb.y_up[j]) * (2.0 * mu * A[i] + 1.0) * A[i];
      g -= (1.0 / dd) * sum * (s.tau_plus + s.delta_plus - s.delta_minus);
    }
    {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        sum += s.c_U[i][j] * std::exp(pb.y_up[j]) * (2.0 * mu * A[i] + 1.0);
      g -= (1.0 / de) * sum * E[j] * (s.eta_plus + s.delta_plus - s.eta_minus);
    }
    cert.gamma_y.push_back(g);
  }

  double gmin = kInf;
  for (double v : cert.gamma_x) gmin = std::min(gmin, v);
  for (double v : cert.gamma_y) gmin = std::min(gmin, v);
  cert.gamma = gmin;
  cert.neg_gamma_regressive = 1.0 - mu * cert.gamma > 0.0;
  cert.verdict = cert.gamma > 0.0 && cert.neg_gamma_regressive;
  if (!(cert.gamma > 0.0)) cert.notes.push_back("decay rate gamma is not positive");
  if (!cert.neg_gamma_regressive)
    cert.notes.push_back("decay rate fails regressivity: 1 - mu*gamma <= 0");
  return cert;
}

}  // namespace tslv
