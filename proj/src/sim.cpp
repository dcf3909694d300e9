#include "tslv/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace tslv {

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double tiny_at(double t) { return 1e-12 * std::max(1.0, std::fabs(t)); }

// Two-point cubic Hermite evaluation on [ta, tb].
double hermite(double ta, double va, double da, double tb, double vb, double db, double t) {
  const double dt = tb - ta;
  const double s = (t - ta) / dt;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * va + (s3 - 2 * s2 + s) * dt * da +
         (-2 * s3 + 3 * s2) * vb + (s3 - s2) * dt * db;
}

}  // namespace

// ---------------------------------------------------------------------------
// HistoryBuffer

HistoryBuffer::HistoryBuffer(std::size_t n, std::size_t m, double span, HistoryInterp interp)
    : n_(n), m_(m), span_(span), interp_(interp) {
  if (!(span > 0.0)) span_ = 1e-9;
}

void HistoryBuffer::push(double t, const std::vector<double>& z, const std::vector<double>& w,
                         const std::vector<double>& dz, const std::vector<double>& dw) {
  if (z.size() != n_ || w.size() != m_ || dz.size() != n_ || dw.size() != m_)
    throw Error(ErrorCode::Internal, "HistoryBuffer::push: dimension mismatch");
  if (!samples_.empty() && t <= samples_.back().t + tiny_at(t)) {
    // Carry a replacement sample (post-impulse value) at the same instant.
    samples_.back() = Sample{samples_.back().t, z, w, dz, dw};
    return;
  }
  samples_.push_back(Sample{t, z, w, dz, dw});
  while (samples_.size() > 2 && samples_[1].t <= t - span_) samples_.pop_front();
}

double HistoryBuffer::newest_time() const {
  if (samples_.empty()) throw Error(ErrorCode::Internal, "HistoryBuffer: empty");
  return samples_.back().t;
}
const std::vector<double>& HistoryBuffer::newest_dz() const { return samples_.back().dz; }
const std::vector<double>& HistoryBuffer::newest_dw() const { return samples_.back().dw; }

double HistoryBuffer::value_at(double t, bool prey, std::size_t idx) const {
  if (samples_.empty()) throw Error(ErrorCode::Internal, "HistoryBuffer: empty");
  auto val = [&](const Sample& s) { return prey ? s.z[idx] : s.w[idx]; };
  auto der = [&](const Sample& s) { return prey ? s.dz[idx] : s.dw[idx]; };
  const Sample& front = samples_.front();
  const Sample& back = samples_.back();
  if (t <= front.t) return val(front);  // constant pre-initial history
  if (t >= back.t) {
    // Mild extrapolation past the newest sample (stage times can exceed it).
    switch (interp_) {
      case HistoryInterp::Hermite: return val(back) + der(back) * (t - back.t);
      case HistoryInterp::Linear: {
        if (samples_.size() < 2) return val(back);
        const Sample& prev = samples_[samples_.size() - 2];
        const double slope = (val(back) - val(prev)) / (back.t - prev.t);
        return val(back) + slope * (t - back.t);
      }
      case HistoryInterp::HoldLeft: return val(back);
    }
  }
  // Binary search for the bracketing pair.
  std::size_t lo = 0, hi = samples_.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (samples_[mid].t <= t) lo = mid;
    else hi = mid;
  }
  const Sample& A = samples_[lo];
  const Sample& B = samples_[hi];
  switch (interp_) {
    case HistoryInterp::Hermite:
      return hermite(A.t, val(A), der(A), B.t, val(B), der(B), t);
    case HistoryInterp::Linear:
      return val(A) + (val(B) - val(A)) * (t - A.t) / (B.t - A.t);
    case HistoryInterp::HoldLeft:
      return val(A);
  }
  return val(A);
}

double HistoryBuffer::z_at(double t, std::size_t i) const { return value_at(t, true, i); }
double HistoryBuffer::w_at(double t, std::size_t j) const { return value_at(t, false, j); }

// ---------------------------------------------------------------------------
// Shared machinery

namespace {

struct CompiledModel {
  std::vector<CompiledExpr> b, r;
  std::vector<std::vector<CompiledExpr>> a, c, d, e, tau, xi, delta, eta;

  explicit CompiledModel(const ModelSpec& ms) {
    auto vec = [](const std::vector<ExprPtr>& v) {
      std::vector<CompiledExpr> out;
      for (const auto& x : v) out.emplace_back(*x);
      return out;
    };
    auto mat = [](const ExprMat& mm) {
      std::vector<std::vector<CompiledExpr>> out;
      for (const auto& row : mm) {
        std::vector<CompiledExpr> r2;
        for (const auto& x : row) r2.emplace_back(*x);
        out.push_back(std::move(r2));
      }
      return out;
    };
    b = vec(ms.b);
    r = vec(ms.r);
    a = mat(ms.a);
    c = mat(ms.c);
    d = mat(ms.d);
    e = mat(ms.e);
    tau = mat(ms.tau);
    xi = mat(ms.xi);
    delta = mat(ms.delta);
    eta = mat(ms.eta);
  }
};

void init_state(const ModelSpec& model, const SimConfig& cfg, std::vector<double>& z,
                std::vector<double>& w) {
  const std::size_t n = model.n, m = model.m;
  if (!cfg.z0.empty() || !cfg.w0.empty()) {
    if (cfg.z0.size() != n || cfg.w0.size() != m)
      throw UsageError("initial state must provide " + std::to_string(n) + " prey and " +
                       std::to_string(m) + " predator values");
    for (double v : cfg.z0)
      if (!(v > 0.0)) throw UsageError("initial prey states must be positive");
    for (double v : cfg.w0)
      if (!(v > 0.0)) throw UsageError("initial predator states must be positive");
    z = cfg.z0;
    w = cfg.w0;
    return;
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  z.resize(n);
  w.resize(m);
  for (auto& v : z) v = std::exp(U(rng));
  for (auto& v : w) v = std::exp(U(rng));
}

double scan_max_delay(const CompiledModel& cm, double t0, double T) {
  double best = 0.0;
  auto scan = [&](const std::vector<std::vector<CompiledExpr>>& mat) {
    for (const auto& row : mat)
      for (const auto& f : row)
        for (int i = 0; i <= 1000; ++i) {
          const double t = t0 + (T - t0) * static_cast<double>(i) / 1000.0;
          best = std::max(best, f(t));
        }
  };
  scan(cm.tau);
  scan(cm.xi);
  scan(cm.delta);
  scan(cm.eta);
  return best;
}

std::string echo_config(const SimConfig& cfg, bool lattice) {
  const char* interp = cfg.interp == HistoryInterp::Hermite
                           ? "hermite"
                           : (cfg.interp == HistoryInterp::Linear ? "linear" : "hold_left");
  char buf[160];
  std::snprintf(buf, sizeof buf, "step=%g horizon=%g transient=%g seed=%llu interp=%s",
                lattice ? 0.0 : cfg.step, cfg.horizon, cfg.transient_fraction,
                static_cast<unsigned long long>(cfg.seed), lattice ? "lattice" : interp);
  return buf;
}

void check_positive(const std::vector<double>& z, const std::vector<double>& w, double t) {
  for (std::size_t i = 0; i < z.size(); ++i)
    if (!(z[i] > 0.0) || !std::isfinite(z[i]))
      throw SimulationError("prey " + std::to_string(i + 1) +
                            " left the positive cone at t = " + fmt(t) + " (value " +
                            fmt(z[i]) + ")");
  for (std::size_t j = 0; j < w.size(); ++j)
    if (!(w[j] > 0.0) || !std::isfinite(w[j]))
      throw SimulationError("predator " + std::to_string(j + 1) +
                            " left the positive cone at t = " + fmt(t) + " (value " +
                            fmt(w[j]) + ")");
}

void validate_common(const SimConfig& cfg) {
  if (!(cfg.horizon > 0.0)) throw UsageError("horizon must be positive");
  if (!(cfg.transient_fraction >= 0.0 && cfg.transient_fraction < 1.0))
    throw UsageError("transient_fraction must lie in [0, 1)");
}

}  // namespace

// ---------------------------------------------------------------------------
// Continuous simulation

Trajectory simulate_continuous(const ModelSpec& model, const SimConfig& cfg) {
  if (model.ts.is_lattice())
    throw UsageError("simulate_continuous requires a model on the reals");
  validate_common(cfg);
  if (!(cfg.step > 0.0)) throw UsageError("step must be positive");

  const std::size_t n = model.n, m = model.m;
  const double t0 = model.t0, T = t0 + cfg.horizon;
  const CompiledModel cm(model);

  std::vector<double> z, w;
  init_state(model, cfg, z, w);

  Trajectory traj;
  traj.n = n;
  traj.m = m;
  traj.t0 = t0;
  traj.tf = T;
  traj.model_hash = model.source_hash;
  traj.config_echo = echo_config(cfg, false);

  // Impulses strictly inside (t0, T); a jump at the final instant would not
  // influence any recorded dynamics.
  std::vector<ImpulseEvent> events;
  if (model.has_impulses)
    for (const auto& ev : model.impulses.events(t0, T))
      if (ev.time < T - tiny_at(T)) events.push_back(ev);

  std::vector<double> breakpoints{t0};
  for (const auto& ev : events) breakpoints.push_back(ev.time);
  breakpoints.push_back(T);

  const double span = scan_max_delay(cm, t0, T) + 4.0 * cfg.step;
  HistoryBuffer hist(n, m, span, cfg.interp);

  // Delayed lookup: at or beyond the current stage time the stage state is
  // authoritative (zero delays reduce to classical RK4); earlier times come
  // from the history interpolant.
  std::vector<double> dz(n), dw(m);
  auto rhs = [&](double t, const std::vector<double>& zs, const std::vector<double>& ws,
                 std::vector<double>& oz, std::vector<double>& ow) {
    const double cut = t - tiny_at(t);
    for (std::size_t i = 0; i < n; ++i) {
      double g = cm.b[i](t);
      for (std::size_t l = 0; l < n; ++l) {
        const double u = t - cm.tau[i][l](t);
        g -= cm.a[i][l](t) * (u >= cut ? zs[l] : hist.z_at(u, l));
      }
      for (std::size_t hh = 0; hh < m; ++hh) {
        const double u = t - cm.xi[i][hh](t);
        g -= cm.c[i][hh](t) * (u >= cut ? ws[hh] : hist.w_at(u, hh));
      }
      oz[i] = zs[i] * g;
    }
    for (std::size_t j = 0; j < m; ++j) {
      double g = -cm.r[j](t);
      for (std::size_t l = 0; l < n; ++l) {
        const double u = t - cm.delta[j][l](t);
        g += cm.d[j][l](t) * (u >= cut ? zs[l] : hist.z_at(u, l));
      }
      for (std::size_t hh = 0; hh < m; ++hh) {
        const double u = t - cm.eta[j][hh](t);
        g -= cm.e[j][hh](t) * (u >= cut ? ws[hh] : hist.w_at(u, hh));
      }
      ow[j] = ws[j] * g;
    }
  };

  hist.push(t0, z, w, dz, dw);  // seed so delayed lookups see the initial state
  rhs(t0, z, w, dz, dw);
  hist.push(t0, z, w, dz, dw);  // replace with the true initial derivatives
  traj.rows.push_back({t0, z, w, false});

  std::vector<double> zt(n), wt(m), k2z(n), k2w(m), k3z(n), k3w(m), k4z(n), k4w(m);
  auto blend = [](std::vector<double>& out, const std::vector<double>& base,
                  const std::vector<double>& k, double f) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = base[i] + f * k[i];
  };

  for (std::size_t seg = 0; seg + 1 < breakpoints.size(); ++seg) {
    const double ua = breakpoints[seg], ub = breakpoints[seg + 1];
    const double len = ub - ua;
    const long long steps = std::llround(len / cfg.step);
    if (steps < 1 || std::fabs(static_cast<double>(steps) * cfg.step - len) > 1e-9 * cfg.step)
      throw SimulationError("segment [" + fmt(ua) + ", " + fmt(ub) +
                            "] is not an integer number of steps (impulse times must align "
                            "with the step grid)");
    const double h = len / static_cast<double>(steps);
    for (long long i = 0; i < steps; ++i) {
      const double t = ua + h * static_cast<double>(i);
      const double tn = (i + 1 == steps) ? ub : ua + h * static_cast<double>(i + 1);
      const std::vector<double>& k1z = hist.newest_dz();
      const std::vector<double>& k1w = hist.newest_dw();
      blend(zt, z, k1z, h / 2);
      blend(wt, w, k1w, h / 2);
      rhs(t + h / 2, zt, wt, k2z, k2w);
      blend(zt, z, k2z, h / 2);
      blend(wt, w, k2w, h / 2);
      rhs(t + h / 2, zt, wt, k3z, k3w);
      blend(zt, z, k3z, h);
      blend(wt, w, k3w, h);
      rhs(tn, zt, wt, k4z, k4w);
      for (std::size_t s = 0; s < n; ++s)
        z[s] += h / 6.0 * (k1z[s] + 2 * k2z[s] + 2 * k3z[s] + k4z[s]);
      for (std::size_t s = 0; s < m; ++s)
        w[s] += h / 6.0 * (k1w[s] + 2 * k2w[s] + 2 * k3w[s] + k4w[s]);
      check_positive(z, w, tn);
      rhs(tn, z, w, dz, dw);
      hist.push(tn, z, w, dz, dw);
      traj.rows.push_back({tn, z, w, false});
    }
    if (seg < events.size()) {
      const ImpulseEvent& ev = events[seg];
      for (std::size_t i = 0; i < n; ++i) z[i] *= 1.0 + model.impulses.lambda_x_at(i, ev.k);
      for (std::size_t j = 0; j < m; ++j) w[j] *= 1.0 + model.impulses.lambda_y_at(j, ev.k);
      check_positive(z, w, ev.time);
      rhs(ev.time, z, w, dz, dw);
      hist.push(ev.time, z, w, dz, dw);  // replaces the pre-jump sample
      traj.rows.push_back({ev.time, z, w, true});
      ++traj.impulse_count;
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Discrete simulation

Trajectory simulate_discrete(const ModelSpec& model, const SimConfig& cfg) {
  if (!model.ts.is_lattice()) throw UsageError("simulate_discrete requires a lattice model");
  validate_common(cfg);

  const std::size_t n = model.n, m = model.m;
  const double h = model.ts.step;
  const long long N = std::llround(cfg.horizon / h);
  if (N < 1) throw UsageError("horizon shorter than one lattice step");
  if (N > 20'000'000) throw UsageError("horizon too large for the lattice step");
  const long long i0 = model.ts.index_of(model.t0);
  auto time_at = [&](long long i) { return static_cast<double>(i0 + i) * h; };
  const double t0 = time_at(0), T = time_at(N);

  const CompiledModel cm(model);
  Trajectory traj;
  traj.n = n;
  traj.m = m;
  traj.t0 = t0;
  traj.tf = T;
  traj.model_hash = model.source_hash;
  traj.config_echo = echo_config(cfg, true);

  // Impulse index -> schedule index k, for events strictly inside (t0, T).
  std::vector<long> impulse_k(static_cast<std::size_t>(N) + 1, 0);
  if (model.has_impulses)
    for (const auto& ev : model.impulses.events(t0, T)) {
      const double q = (ev.time - t0) / h;
      const long long idx = std::llround(q);
      if (std::fabs(q - static_cast<double>(idx)) * h > 1e-9 * h)
        throw SimulationError("impulse time t_" + std::to_string(ev.k) + " = " + fmt(ev.time) +
                              " is not on the lattice");
      if (idx >= 1 && idx < N) impulse_k[static_cast<std::size_t>(idx)] = ev.k;
    }

  // Carried (post-impulse) states per lattice index; lagged references index
  // this table, clamping to the initial state before t0.
  std::vector<std::vector<double>> zs(static_cast<std::size_t>(N) + 1),
      ws(static_cast<std::size_t>(N) + 1);
  init_state(model, cfg, zs[0], ws[0]);
  check_positive(zs[0], ws[0], t0);
  traj.rows.push_back({t0, zs[0], ws[0], false});

  bool lag_warned = false;
  auto lag_of = [&](double tau_v, double t) {
    const long long L = std::llround(tau_v / h);
    if (!lag_warned && std::fabs(static_cast<double>(L) * h - tau_v) > 1e-12 * std::max(1.0, tau_v)) {
      traj.warnings.push_back("delay value " + fmt(tau_v) + " at t = " + fmt(t) +
                              " rounded to " + std::to_string(L) + " lattice steps");
      lag_warned = true;
    }
    return L;
  };

  std::vector<double> gz(n), gw(m);
  for (long long i = 0; i < N; ++i) {
    const double t = time_at(i);
    const auto& zc = zs[static_cast<std::size_t>(i)];
    const auto& wc = ws[static_cast<std::size_t>(i)];
    auto zlag = [&](long long idx, std::size_t l) {
      return idx <= 0 ? zs[0][l] : zs[static_cast<std::size_t>(idx)][l];
    };
    auto wlag = [&](long long idx, std::size_t j) {
      return idx <= 0 ? ws[0][j] : ws[static_cast<std::size_t>(idx)][j];
    };
    for (std::size_t s = 0; s < n; ++s) {
      double g = cm.b[s](t);
      for (std::size_t l = 0; l < n; ++l)
        g -= cm.a[s][l](t) * zlag(i - lag_of(cm.tau[s][l](t), t), l);
      for (std::size_t hh = 0; hh < m; ++hh)
        g -= cm.c[s][hh](t) * wlag(i - lag_of(cm.xi[s][hh](t), t), hh);
      gz[s] = g;
    }
    for (std::size_t j = 0; j < m; ++j) {
      double g = -cm.r[j](t);
      for (std::size_t l = 0; l < n; ++l)
        g += cm.d[j][l](t) * zlag(i - lag_of(cm.delta[j][l](t), t), l);
      for (std::size_t hh = 0; hh < m; ++hh)
        g -= cm.e[j][hh](t) * wlag(i - lag_of(cm.eta[j][hh](t), t), hh);
      gw[j] = g;
    }
    std::vector<double> zn(n), wn(m);
    for (std::size_t s = 0; s < n; ++s) zn[s] = zc[s] * std::exp(h * gz[s]);
    for (std::size_t j = 0; j < m; ++j) wn[j] = wc[j] * std::exp(h * gw[j]);
    const double tn = time_at(i + 1);
    check_positive(zn, wn, tn);
    const long k = impulse_k[static_cast<std::size_t>(i + 1)];
    if (k > 0) {
      traj.rows.push_back({tn, zn, wn, false});
      for (std::size_t s = 0; s < n; ++s) zn[s] *= 1.0 + model.impulses.lambda_x_at(s, k);
      for (std::size_t j = 0; j < m; ++j) wn[j] *= 1.0 + model.impulses.lambda_y_at(j, k);
      check_positive(zn, wn, tn);
      traj.rows.push_back({tn, zn, wn, true});
      ++traj.impulse_count;
    } else {
      traj.rows.push_back({tn, zn, wn, false});
    }
    zs[static_cast<std::size_t>(i + 1)] = std::move(zn);
    ws[static_cast<std::size_t>(i + 1)] = std::move(wn);
  }
  return traj;
}

Trajectory simulate(const ModelSpec& model, const SimConfig& cfg) {
  return model.ts.is_lattice() ? simulate_discrete(model, cfg) : simulate_continuous(model, cfg);
}

// ---------------------------------------------------------------------------
// Derived quantities

EmpiricalBounds empirical_bounds(const Trajectory& traj, double transient_fraction) {
  if (traj.rows.empty()) throw UsageError("empirical_bounds: empty trajectory");
  if (!(transient_fraction >= 0.0 && transient_fraction < 1.0))
    throw UsageError("transient_fraction must lie in [0, 1)");
  EmpiricalBounds eb;
  eb.window_start = traj.t0 + transient_fraction * (traj.tf - traj.t0);
  eb.x_lo.assign(traj.n, kInf);
  eb.x_hi.assign(traj.n, -kInf);
  eb.y_lo.assign(traj.m, kInf);
  eb.y_hi.assign(traj.m, -kInf);
  for (const auto& row : traj.rows) {
    if (row.t < eb.window_start - 1e-12) continue;
    for (std::size_t i = 0; i < traj.n; ++i) {
      const double v = std::log(row.z[i]);
      eb.x_lo[i] = std::min(eb.x_lo[i], v);
      eb.x_hi[i] = std::max(eb.x_hi[i], v);
    }
    for (std::size_t j = 0; j < traj.m; ++j) {
      const double v = std::log(row.w[j]);
      eb.y_lo[j] = std::min(eb.y_lo[j], v);
      eb.y_hi[j] = std::max(eb.y_hi[j], v);
    }
  }
  return eb;
}

GapReport stability_gap(const ModelSpec& model, const SimConfig& cfg,
                        const std::vector<double>& zA, const std::vector<double>& wA,
                        const std::vector<double>& zB, const std::vector<double>& wB) {
  SimConfig ca = cfg;
  ca.z0 = zA;
  ca.w0 = wA;
  SimConfig cb = cfg;
  cb.z0 = zB;
  cb.w0 = wB;
  const Trajectory A = simulate(model, ca);
  const Trajectory B = simulate(model, cb);
  if (A.rows.size() != B.rows.size())
    throw Error(ErrorCode::Internal, "stability_gap: trajectories misaligned");
  GapReport rep;
  rep.series.reserve(A.rows.size());
  for (std::size_t idx = 0; idx < A.rows.size(); ++idx) {
    const auto& ra = A.rows[idx];
    const auto& rb = B.rows[idx];
    double g = 0.0;
    for (std::size_t i = 0; i < A.n; ++i) g += std::fabs(std::log(ra.z[i]) - std::log(rb.z[i]));
    for (std::size_t j = 0; j < A.m; ++j) g += std::fabs(std::log(ra.w[j]) - std::log(rb.w[j]));
    rep.series.push_back({ra.t, g});
  }
  rep.initial = rep.series.front().gap;
  rep.final_gap = rep.series.back().gap;
  rep.ratio = rep.initial > 0.0 ? rep.final_gap / rep.initial : (rep.final_gap > 0.0 ? kInf : 0.0);
  // Exponential decay fit over the tail half where the gap is positive.
  const double mid = 0.5 * (A.t0 + A.tf);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long cnt = 0;
  for (const auto& p : rep.series) {
    if (p.t < mid || !(p.gap > 0.0)) continue;
    const double y = std::log(p.gap);
    sx += p.t;
    sy += y;
    sxx += p.t * p.t;
    sxy += p.t * y;
    ++cnt;
  }
  if (cnt >= 2) {
    const double det = static_cast<double>(cnt) * sxx - sx * sx;
    if (det > 0.0) rep.decay_rate = -((static_cast<double>(cnt) * sxy - sx * sy) / det);
  }
  return rep;
}

void write_csv(const Trajectory& traj, const std::string& path, int thin) {
  if (thin < 1) throw UsageError("thin must be >= 1");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  std::fprintf(f, "t");
  for (std::size_t i = 0; i < traj.n; ++i) std::fprintf(f, ",z%zu", i + 1);
  for (std::size_t j = 0; j < traj.m; ++j) std::fprintf(f, ",w%zu", j + 1);
  std::fprintf(f, ",impulse\n");
  const std::size_t last = traj.rows.empty() ? 0 : traj.rows.size() - 1;
  for (std::size_t idx = 0; idx < traj.rows.size(); ++idx) {
    const auto& row = traj.rows[idx];
    const bool pre_of_pair = idx + 1 < traj.rows.size() && traj.rows[idx + 1].impulse &&
                             traj.rows[idx + 1].t == row.t;
    if (!(idx % static_cast<std::size_t>(thin) == 0 || row.impulse || pre_of_pair || idx == last))
      continue;
    std::fprintf(f, "%.17g", row.t);
    for (double v : row.z) std::fprintf(f, ",%.17g", v);
    for (double v : row.w) std::fprintf(f, ",%.17g", v);
    std::fprintf(f, ",%d\n", row.impulse ? 1 : 0);
  }
  if (std::fclose(f) != 0) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Delay-logistic oracle

namespace {

struct TailStats {
  double limsup = -kInf, liminf = kInf, global_max = -kInf;
  double tail_start;
  void consider(double t, double x) {
    global_max = std::max(global_max, x);
    if (t >= tail_start) {
      limsup = std::max(limsup, x);
      liminf = std::min(liminf, x);
    }
  }
};

}  // namespace

DelayLogisticOracleReport oracle_delay_logistic(const TimeScaleSpec& ts, ComparisonParams params,
                                                const std::vector<JumpSpec>& jumps, double x0,
                                                double t0, double horizon, double step,
                                                double tail_fraction, double rel_slack) {
  if (!(x0 > 0.0)) throw DomainError("oracle: x0 must be positive");
  if (!(horizon > 0.0)) throw DomainError("oracle: horizon must be positive");
  const double T = t0 + horizon;
  const double tau = params.tau_bar;
  params.mu_bar = ts.graininess_sup();

  TailStats stats{};
  stats.tail_start = t0 + tail_fraction * horizon;
  stats.consider(t0, x0);

  std::vector<JumpSpec> evs;
  for (const auto& j : jumps)
    if (j.time > t0 + tiny_at(t0) && j.time < T - tiny_at(T)) evs.push_back(j);
  std::sort(evs.begin(), evs.end(), [](const JumpSpec& a, const JumpSpec& b) {
    return a.time < b.time;
  });

  if (ts.is_lattice()) {
    const double h = ts.step;
    const long long N = std::llround(horizon / h);
    const long long L = std::llround(tau / h);
    std::vector<double> xs(static_cast<std::size_t>(N) + 1);
    xs[0] = x0;
    std::vector<std::pair<long long, const JumpSpec*>> jidx;
    for (const auto& j : evs) jidx.push_back({std::llround((j.time - t0) / h), &j});
    std::size_t jnext = 0;
    double x = x0;
    for (long long i = 0; i < N; ++i) {
      const double lagged = xs[static_cast<std::size_t>(std::max<long long>(0, i - L))];
      x = x + h * (x * (params.b - params.a * lagged) + params.d);
      if (!(x > 0.0) || !std::isfinite(x))
        throw SimulationError("oracle state left the positive cone at t = " +
                              fmt(t0 + h * static_cast<double>(i + 1)));
      const double tn = t0 + h * static_cast<double>(i + 1);
      stats.consider(tn, x);
      if (jnext < jidx.size() && jidx[jnext].first == i + 1) {
        x = jidx[jnext].second->d * x + jidx[jnext].second->b;
        stats.consider(tn, x);
        ++jnext;
      }
      xs[static_cast<std::size_t>(i + 1)] = x;  // carried (post-jump) value
    }
  } else {
    if (!(step > 0.0)) throw UsageError("oracle: step must be positive");
    HistoryBuffer hist(1, 0, tau + 4.0 * step, HistoryInterp::Hermite);
    std::vector<double> xv{x0}, wv, dxv(1), dwv;
    auto rhs = [&](double t, double xval) {
      const double u = t - tau;
      const double lagged = u >= t - tiny_at(t) ? xval : hist.z_at(u, 0);
      return xval * (params.b - params.a * lagged) + params.d;
    };
    hist.push(t0, xv, wv, dxv, dwv);
    dxv[0] = rhs(t0, x0);
    hist.push(t0, xv, wv, dxv, dwv);
    std::vector<double> bp{t0};
    for (const auto& j : evs) bp.push_back(j.time);
    bp.push_back(T);
    double x = x0;
    for (std::size_t seg = 0; seg + 1 < bp.size(); ++seg) {
      const double ua = bp[seg], ub = bp[seg + 1];
      const long long steps = std::llround((ub - ua) / step);
      if (steps < 1 || std::fabs(static_cast<double>(steps) * step - (ub - ua)) > 1e-9 * step)
        throw SimulationError("oracle jump times must align with the step grid");
      const double h = (ub - ua) / static_cast<double>(steps);
      for (long long i = 0; i < steps; ++i) {
        const double t = ua + h * static_cast<double>(i);
        const double tn = (i + 1 == steps) ? ub : ua + h * static_cast<double>(i + 1);
        const double k1 = hist.newest_dz()[0];
        const double k2 = rhs(t + h / 2, x + h / 2 * k1);
        const double k3 = rhs(t + h / 2, x + h / 2 * k2);
        const double k4 = rhs(tn, x + h * k3);
        x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (!(x > 0.0) || !std::isfinite(x))
          throw SimulationError("oracle state left the positive cone at t = " + fmt(tn));
        xv[0] = x;
        dxv[0] = rhs(tn, x);
        hist.push(tn, xv, wv, dxv, dwv);
        stats.consider(tn, x);
      }
      if (seg + 1 < bp.size() - 1) {
        const JumpSpec& j = evs[seg];
        x = j.d * x + j.b;
        if (!(x > 0.0)) throw SimulationError("oracle jump drove the state nonpositive");
        xv[0] = x;
        dxv[0] = rhs(ub, x);
        hist.push(ub, xv, wv, dxv, dwv);
        stats.consider(ub, x);
      }
    }
  }

  DelayLogisticOracleReport rep;
  rep.emp_limsup = stats.limsup;
  rep.emp_liminf = stats.liminf;
  if (!(params.N > 0.0)) params.N = stats.global_max * (1.0 + rel_slack) + 1e-9;
  rep.n_used = params.N;
  rep.upper_sigma = scalar_limsup_bound_sigma(params);
  rep.upper_plain = scalar_limsup_bound_plain(params);
  rep.lower_plain = scalar_liminf_bound_plain(params);
  rep.lower_sigma = scalar_liminf_bound_sigma(params);
  rep.upper_ok = rep.emp_limsup <= rep.upper_plain * (1.0 + rel_slack);
  rep.lower_ok = rep.emp_liminf >= rep.lower_plain * (1.0 - rel_slack);
  return rep;
}

// ---------------------------------------------------------------------------
// Linear variation-of-constants oracle

LinearOracleReport oracle_linear_impulsive(const TimeScaleSpec& ts, const ScalarFn& p,
                                           const ScalarFn& q, double x0, double t0, double t,
                                           const std::vector<JumpSpec>& jumps, double step,
                                           long panels) {
  if (!(t > t0)) throw DomainError("oracle: need t > t0");
  std::vector<JumpSpec> evs;
  for (const auto& j : jumps)
    if (j.time > t0 + tiny_at(t0) && j.time < t - tiny_at(t)) evs.push_back(j);
  std::sort(evs.begin(), evs.end(), [](const JumpSpec& a, const JumpSpec& b) {
    return a.time < b.time;
  });
  const std::size_t M = evs.size();

  LinearOracleReport rep;

  // --- simulation of the equality system
  if (ts.is_lattice()) {
    const double h = ts.step;
    const long long N = std::llround((t - t0) / h);
    std::vector<std::pair<long long, const JumpSpec*>> jidx;
    for (const auto& j : evs) jidx.push_back({std::llround((j.time - t0) / h), &j});
    std::size_t jnext = 0;
    double x = x0;
    for (long long i = 0; i < N; ++i) {
      const double u = t0 + h * static_cast<double>(i);
      if (jnext < jidx.size() && jidx[jnext].first == i) {
        x = jidx[jnext].second->d * x + jidx[jnext].second->b;
        ++jnext;
      }
      x = x * (1.0 + h * p(u)) + h * q(u);
    }
    rep.simulated = x;
  } else {
    std::vector<double> bp{t0};
    for (const auto& j : evs) bp.push_back(j.time);
    bp.push_back(t);
    double x = x0;
    for (std::size_t seg = 0; seg + 1 < bp.size(); ++seg) {
      const double ua = bp[seg], ub = bp[seg + 1];
      const long long steps = std::max<long long>(1, std::llround((ub - ua) / step));
      const double h = (ub - ua) / static_cast<double>(steps);
      auto f = [&](double u, double xv) { return p(u) * xv + q(u); };
      for (long long i = 0; i < steps; ++i) {
        const double u = ua + h * static_cast<double>(i);
        const double un = (i + 1 == steps) ? ub : ua + h * static_cast<double>(i + 1);
        const double k1 = f(u, x);
        const double k2 = f(u + h / 2, x + h / 2 * k1);
        const double k3 = f(u + h / 2, x + h / 2 * k2);
        const double k4 = f(un, x + h * k3);
        x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      }
      if (seg + 1 < bp.size() - 1) x = evs[seg].d * x + evs[seg].b;
    }
    rep.simulated = x;
  }

  // --- closed form: x0 P0 e_p(t,t0) + sum_k P_k e_p(t,t_k) b_k
  //                  + sum of segment integrals of P(s) e_p(t,sigma(s)) q(s)
  // where P_k multiplies the jumps strictly after t_k.
  std::vector<double> suffix(M + 1, 1.0);
  for (std::size_t k = M; k-- > 0;) suffix[k] = suffix[k + 1] * evs[k].d;

  double value = x0 * suffix[0] * exp_fn(ts, p, t, t0, panels);
  for (std::size_t k = 0; k < M; ++k)
    value += suffix[k + 1] * exp_fn(ts, p, t, evs[k].time, panels) * evs[k].b;
  for (std::size_t seg = 0; seg <= M; ++seg) {
    const double ua = seg == 0 ? t0 : evs[seg - 1].time;
    const double ub = seg == M ? t : evs[seg].time;
    const double pk = suffix[seg];
    if (pk == 0.0) continue;
    const double integral = delta_integral(
        ts,
        [&](double s) { return exp_fn(ts, p, t, sigma(ts, s), panels) * q(s); }, ua, ub,
        panels);
    value += pk * integral;
  }
  rep.closed_form = value;
  return rep;
}

}  // namespace tslv
