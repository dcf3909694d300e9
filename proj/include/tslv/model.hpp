#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tslv/expr.hpp"
#include "tslv/timescale.hpp"

namespace tslv {

using ExprMat = std::vector<std::vector<ExprPtr>>;
using Mat = std::vector<std::vector<double>>;

// Impulse schedule: jump times plus per-species magnitude sequences. The
// magnitudes are expressions in the 1-based impulse index k; the state jumps
// multiplicatively, z_i(t_k+) = (1 + lambda_x_i(k)) * z_i(t_k).
struct ImpulseTimes {
  bool periodic = true;
  double period = 1.0;
  double offset = 0.0;                 // t_k = offset + k * period, k = 1, 2, ...
  std::vector<double> explicit_times;  // strictly increasing; used when !periodic
};

struct ImpulseEvent {
  double time = 0.0;
  long k = 0;  // 1-based index into the schedule
};

struct ImpulseSchedule {
  ImpulseTimes times;
  std::vector<ExprPtr> lambda_x;  // size n, expressions in "k"
  std::vector<ExprPtr> lambda_y;  // size m

  // Minimal spacing between consecutive jump times (+inf when fewer than one).
  double min_gap() const;
  // All events with t0 < time <= horizon, in time order.
  std::vector<ImpulseEvent> events(double t0, double horizon) const;
  double lambda_x_at(std::size_t i, long k) const { return eval(lambda_x[i], double(k)); }
  double lambda_y_at(std::size_t j, long k) const { return eval(lambda_y[j], double(k)); }
};

// A delayed impulsive competition-predation system: n prey, m predator
// species. Delay matrices pair with the interaction matrices of the same
// shape: a/tau (n x n), c/xi (n x m), d/delta (m x n), e/eta (m x m).
struct ModelSpec {
  TimeScaleSpec ts;
  double t0 = 0.0;
  std::size_t n = 0, m = 0;
  std::vector<ExprPtr> b;  // prey growth rates, size n
  std::vector<ExprPtr> r;  // predator death rates, size m
  ExprMat a, c, d, e;
  ExprMat tau, xi, delta, eta;
  bool has_impulses = false;
  ImpulseSchedule impulses;
  std::optional<nlohmann::json> stats_override;
  std::string name;
  std::string source_hash;  // fnv1a-64 of the document text
  std::string source_path;  // empty when loaded from a string
};

// Coefficient statistics: envelope values U (sup) and L (inf) per entry,
// delay envelopes and delta-derivative sups, and the impulse product bounds
// feeding the H2 ratio.
struct CoeffStats {
  std::vector<double> b_U, b_L, r_U, r_L;
  Mat a_U, a_L, c_U, c_L, d_U, d_L, e_U, e_L;
  double tau_plus = 0, tau_minus = 0, xi_plus = 0, xi_minus = 0;
  double delta_plus = 0, delta_minus = 0, eta_plus = 0, eta_minus = 0;
  double tau_d = 0, xi_d = 0, delta_d = 0, eta_d = 0;
  double impulse_r = 1.0;        // min over prefixes of the largest species product
  double impulse_r_upper = 1.0;  // max over nonempty prefixes of the same
  bool impulse_converged = true;
  double mu_bar = 0.0;
  std::vector<std::string> overridden;  // names of fields replaced by an override
};

struct StatsConfig {
  SamplingConfig sampling;
  long impulse_horizon = 200;  // prefix products evaluated for k = 1..horizon
};

struct ProductBound {
  double lo = 1.0;  // min over prefix products P_0 = 1, P_1, ..., P_horizon
  double hi = 1.0;  // max over the nonempty prefixes P_1, ..., P_horizon
  bool converged = true;
};

// Prefix products P_K = prod_{k=1..K} (1 + lambda(k)). `converged` reports
// whether the product has stabilized by the horizon (P at the horizon within
// 1e-9 relative of P at half the horizon).
ProductBound impulse_product_bound(const ExprPtr& lambda_k, long horizon);

// Honest statistics via the deterministic sampling passes. Identical
// expression texts are deduplicated, so repeated delay entries cost one scan.
CoeffStats compute_stats(const ModelSpec& model, const StatsConfig& cfg = {});

// Returns a copy of `stats` with the fields named in the override document
// replaced, and their names recorded in `.overridden`. Throws
// ValidationError for unknown keys or shape mismatches.
CoeffStats apply_override(const CoeffStats& stats, const nlohmann::json& override_doc,
                          std::size_t n, std::size_t m);

ModelSpec load_model(const std::string& json_text);
ModelSpec load_model_file(const std::string& path);

std::string fnv1a_hex(const std::string& data);

}  // namespace tslv
