#pragma once

#include "json.hpp"
#include <string>
#include <vector>

#include "tslv/analysis.hpp"
#include "tslv/model.hpp"
#include "tslv/sim.hpp"

namespace tslv {

// ---------------------------------------------------------------------------
// check: statistics -> hypotheses -> permanence box -> stability certificate

struct CheckOptions {
  bool use_override = true;  // apply the model's stats_override block, if any
  StatsConfig stats;
};

struct CheckResult {
  CoeffStats computed;   // honest sampled statistics
  CoeffStats effective;  // statistics actually fed to the analysis
  bool override_applied = false;
  PermanenceBounds bounds;
  HypothesisReport hypotheses;
  StabilityCertificate certificate;
  std::vector<std::string> warnings;
};

// Full analysis pipeline. Throws HypothesisError only when the permanence box
// itself cannot be evaluated; a certificate that cannot be evaluated is
// reported as verdict=false with a note instead.
CheckResult run_check(const ModelSpec& model, const CheckOptions& opts = {});

nlohmann::json check_to_json(const ModelSpec& model, const CheckResult& res);

// ---------------------------------------------------------------------------
// verify: simulate and compare tails against the certified box

struct VerifyOptions {
  CheckOptions check;
  SimConfig sim;
  double eps = 0.05;         // tail tolerance added around [lo, up] (log scale)
  double gap_limit = 0.01;   // required contraction of the two-trajectory gap
  double perturbation = 0.2; // log-offset of the second initial state
};

struct VerifyResult {
  CheckResult check;
  EmpiricalBounds emp;
  GapReport gap;
  std::vector<bool> x_within, y_within;  // tail inside the widened box
  bool tails_ok = false;
  bool gap_ok = false;
  bool verdict = false;
  std::vector<std::string> warnings;
};

VerifyResult run_verify(const ModelSpec& model, const VerifyOptions& opts = {});

nlohmann::json verify_to_json(const ModelSpec& model, const VerifyResult& res);

// ---------------------------------------------------------------------------
// reproduce: bundled-example quantities against their stored reference targets

struct ReproduceRow {
  std::string quantity;
  double reference = 0.0;
  double computed = 0.0;
  double tolerance = 0.0;
  bool ok = false;
};

struct ReproduceResult {
  std::string example;  // "example1" | "example2"
  std::vector<ReproduceRow> rows;
  bool all_ok = false;
};

// id: 1 or 2, selecting the bundled example model.
ReproduceResult run_reproduce(int id);

nlohmann::json reproduce_to_json(const ReproduceResult& res);

// Bundled example sources (compiled into the library).
const std::string& bundled_model_json(int id);

}  // namespace tslv
