#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "tslv/analysis.hpp"
#include "tslv/errors.hpp"
#include "tslv/model.hpp"

using namespace tslv;

namespace {

bool near(double value, double want, double tol) {
  return std::isfinite(value) && std::abs(value - want) <= tol;
}

// Effective (override-applied) statistics for a bundled example model.
CoeffStats effective_stats(const std::string& rel_path) {
  const ModelSpec ms = load_model_file(std::string(TSLV_SOURCE_DIR) + "/" + rel_path);
  CoeffStats s = compute_stats(ms, StatsConfig{});
  if (ms.stats_override) s = apply_override(s, *ms.stats_override, ms.n, ms.m);
  return s;
}

}  // namespace

TEST_CASE("xbar solves its quadratic") {
  std::mt19937_64 rng(20260815);
  std::uniform_real_distribution<double> U(0.01, 10.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = U(rng), b = U(rng) - 5.0, d = U(rng);
    const double x = xbar(a, b, d);
    CHECK(x > 0.0);
    const double residual = a * x * x - b * x - d;
    const double scale = std::max({std::abs(a * x * x), std::abs(b * x), d, 1.0});
    CHECK(std::abs(residual) / scale < 1e-10);
  }
  // Degenerate root when the forcing vanishes: x = b / a.
  CHECK(xbar(2.0, 3.0, 0.0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK_THROWS_AS(xbar(0.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(xbar(1.0, -1.0, 0.0), DomainError);
  CHECK_THROWS_AS(xbar(1.0, 1.0, -0.1), DomainError);
}

TEST_CASE("scalar comparison bounds") {
  ComparisonParams p;
  p.a = 2.0;
  p.b = 1.0;
  p.d = 0.0;
  p.tau_bar = 0.0;
  p.mu_bar = 0.0;
  p.alpha = 1.0;
  p.beta = 1.0;
  p.N = 1.0;

  SUBCASE("delay-free, jump-free upper bounds collapse to b/a") {
    CHECK(scalar_limsup_bound_sigma(p) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(scalar_limsup_bound_plain(p) == doctest::Approx(0.5).epsilon(1e-14));
  }

  SUBCASE("delay-free lower bounds collapse to alpha^2 b/a") {
    p.alpha = 0.9;
    p.beta = 1.0;
    CHECK(scalar_liminf_bound_plain(p) == doctest::Approx(0.81 * 0.5).epsilon(1e-14));
    CHECK(scalar_liminf_bound_sigma(p) == doctest::Approx(0.81 * 0.5).epsilon(1e-14));
  }

  SUBCASE("upper bounds grow with the delay, lower bounds shrink") {
    double prev_up = scalar_limsup_bound_sigma(p);
    double prev_lo = scalar_liminf_bound_plain(p);
    for (double tau : {0.1, 0.5, 1.0, 2.0}) {
      ComparisonParams q = p;
      q.tau_bar = tau;
      const double up = scalar_limsup_bound_sigma(q);
      const double lo = scalar_liminf_bound_plain(q);
      CHECK(up > prev_up);
      CHECK(lo < prev_lo);
      prev_up = up;
      prev_lo = lo;
    }
  }

  SUBCASE("forcing raises the upper bound above xbar") {
    ComparisonParams q = p;
    q.d = 0.3;
    q.tau_bar = 0.2;
    const double up = scalar_limsup_bound_plain(q);
    CHECK(up > xbar(q.a, q.b, q.d));
    // And reduces to xbar * exp(b tau) continuity as d -> 0.
    ComparisonParams q0 = q;
    q0.d = 1e-14;
    CHECK(scalar_limsup_bound_plain(q0) ==
          doctest::Approx(0.5 * std::exp(q.b * q.tau_bar)).epsilon(1e-10));
  }

  SUBCASE("graininess limits agree with the continuous formulas") {
    // For mu_bar -> 0 the lattice corrections disappear; compare a tiny but
    // nonzero graininess against the exact mu = 0 evaluation.
    ComparisonParams q = p;
    q.tau_bar = 0.7;
    q.d = 0.1;
    q.N = 2.0;
    ComparisonParams q_eps = q;
    q_eps.mu_bar = 1e-9;
    CHECK(scalar_limsup_bound_sigma(q_eps) ==
          doctest::Approx(scalar_limsup_bound_sigma(q)).epsilon(1e-6));
    CHECK(scalar_liminf_bound_plain(q_eps) ==
          doctest::Approx(scalar_liminf_bound_plain(q)).epsilon(1e-6));
    CHECK(scalar_liminf_bound_sigma(q_eps) ==
          doctest::Approx(scalar_liminf_bound_sigma(q)).epsilon(1e-6));
  }

  SUBCASE("sigma upper bound dominates the plain one on lattices") {
    ComparisonParams q = p;
    q.tau_bar = 0.5;
    q.mu_bar = 0.25;  // keeps 1 - a N mu positive for the plain lower bound
    CHECK(scalar_limsup_bound_sigma(q) > scalar_limsup_bound_plain(q));
    // and the sigma (log1p) liminf exponent is milder than the plain one
    CHECK(scalar_liminf_bound_sigma(q) > scalar_liminf_bound_plain(q));
  }

  SUBCASE("hypothesis surfaces throw typed errors") {
    ComparisonParams q = p;
    q.mu_bar = 1.5;  // 1 - b mu = -0.5
    CHECK_THROWS_AS(scalar_limsup_bound_sigma(q), HypothesisError);
    ComparisonParams q2 = p;
    q2.mu_bar = 1.0;
    q2.N = 3.0;  // 1 - a N mu = -5
    CHECK_THROWS_AS(scalar_liminf_bound_plain(q2), HypothesisError);
    ComparisonParams bad = p;
    bad.a = 0.0;
    CHECK_THROWS_AS(scalar_limsup_bound_plain(bad), DomainError);
    ComparisonParams bad2 = p;
    bad2.alpha = 1.2;  // alpha > beta
    CHECK_THROWS_AS(scalar_limsup_bound_plain(bad2), DomainError);
    ComparisonParams bad3 = p;
    bad3.N = 0.0;
    CHECK_THROWS_AS(scalar_liminf_bound_plain(bad3), DomainError);
  }
}

TEST_CASE("permanence bounds match the reference two-species tables") {
  SUBCASE("continuous example") {
    const CoeffStats s = effective_stats("models/example1.model.json");
    const PermanenceBounds pb = permanence_bounds(s);
    REQUIRE(pb.x_up.size() == 2);
    REQUIRE(pb.y_up.size() == 2);
    CHECK(near(pb.x_up[0], 1.591, 0.01));
    CHECK(near(pb.x_up[1], 1.645, 0.01));
    CHECK(near(pb.y_up[0], 1.653, 0.01));
    CHECK(near(pb.y_up[1], 1.324, 0.01));
    CHECK(near(pb.x_lo[0], 0.979, 0.01));
    CHECK(near(pb.x_lo[1], 0.896, 0.01));
    CHECK(near(pb.y_lo[0], 0.296, 0.01));
    CHECK(near(pb.y_lo[1], 0.198, 0.01));
    CHECK(pb.ordering_ok);
    CHECK(pb.notes.empty());
  }
  SUBCASE("lattice example reports inverted intervals without throwing") {
    const CoeffStats s = effective_stats("models/example2.model.json");
    const PermanenceBounds pb = permanence_bounds(s);
    CHECK(near(pb.x_up[0], 0.041, 0.01));
    CHECK(near(pb.x_up[1], 0.034, 0.01));
    CHECK(near(pb.y_up[0], 0.012, 0.01));
    CHECK(near(pb.y_up[1], 0.038, 0.01));
    CHECK(near(pb.x_lo[0], 1.374, 0.01));
    CHECK(near(pb.x_lo[1], 1.360, 0.01));
    CHECK(near(pb.y_lo[0], 2.724, 0.01));
    CHECK(near(pb.y_lo[1], 2.747, 0.01));
    CHECK_FALSE(pb.ordering_ok);  // every lower bound exceeds its upper bound
    CHECK(pb.notes.size() == 4);
  }
}

TEST_CASE("permanence bound failures name the species and bracket") {
  CoeffStats s = effective_stats("models/example1.model.json");

  SUBCASE("nonpositive impulse ratio") {
    s.impulse_r = 0.0;
    CHECK_THROWS_AS(permanence_bounds(s), HypothesisError);
  }
  SUBCASE("nonpositive growth envelope names the prey") {
    s.b_U[1] = 0.0;
    try {
      permanence_bounds(s);
      CHECK(false);
    } catch (const HypothesisError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("prey 2") != std::string::npos);
      CHECK(msg.find("b_U") != std::string::npos);
    }
  }
  SUBCASE("predation pressure can empty the prey lower bracket") {
    s.c_U[0][0] = 50.0;  // overwhelming predation on prey 1
    try {
      permanence_bounds(s);
      CHECK(false);
    } catch (const HypothesisError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("prey 1") != std::string::npos);
      CHECK(msg.find("bracket") != std::string::npos);
    }
  }
  SUBCASE("starving predators empty the predator bracket") {
    s.r_U[0] = 10.0;  // death rate no intake can offset
    try {
      permanence_bounds(s);
      CHECK(false);
    } catch (const HypothesisError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("predator 1") != std::string::npos);
      CHECK(msg.find("bracket") != std::string::npos);
    }
  }
}

TEST_CASE("hypothesis checks report pass, fail, assumed and overridden") {
  const ModelSpec ms =
      load_model_file(std::string(TSLV_SOURCE_DIR) + "/models/example1.model.json");
  const CoeffStats computed = compute_stats(ms, StatsConfig{});

  SUBCASE("honest statistics fail the impulse envelope") {
    // The sampled jump products drift below any positive floor, so H2 cannot
    // pass without asserting the envelope.
    const CoeffStats s = computed;
    const PermanenceBounds pb = permanence_bounds(s);
    const HypothesisReport rep = check_hypotheses(ms, s, pb);
    REQUIRE(rep.items.count("H2") == 1);
    CHECK(rep.items.at("H2").status == "fail");
    CHECK_FALSE(rep.all_pass);
    CHECK(rep.items.at("H5").status == "assumed");
  }

  SUBCASE("overridden statistics report overridden, never fail") {
    const CoeffStats s = apply_override(computed, *ms.stats_override, ms.n, ms.m);
    const PermanenceBounds pb = permanence_bounds(s);
    const HypothesisReport rep = check_hypotheses(ms, s, pb);
    CHECK(rep.items.at("H2").status == "overridden");
    CHECK(rep.items.at("H6").status == "overridden");
    CHECK(rep.items.at("H1").status == "pass");
    CHECK(rep.items.at("H3").status == "pass");
    CHECK(rep.items.at("H4").status == "overridden");  // depends on impulse_r
    CHECK(rep.items.at("H5").status == "assumed");
    CHECK(rep.items.at("H7").status == "pass");
    CHECK(rep.all_pass);
    // The sampled products never stabilize, and that stays visible.
    bool witnessed = false;
    for (const auto& w : rep.items.at("H2").witnesses)
      if (w.find("stabilized") != std::string::npos) witnessed = true;
    CHECK(witnessed);
  }

  SUBCASE("margins carry the H6 slack") {
    const CoeffStats s = apply_override(computed, *ms.stats_override, ms.n, ms.m);
    const PermanenceBounds pb = permanence_bounds(s);
    const HypothesisReport rep = check_hypotheses(ms, s, pb);
    const auto& h6 = rep.items.at("H6").margins;
    CHECK(h6.at("one_minus_tau_d") == doctest::Approx(0.998).epsilon(1e-9));
    CHECK(h6.at("one_minus_eta_d") == doctest::Approx(0.998).epsilon(1e-9));
  }
}

TEST_CASE("stability certificate reproduces the reference decay rates") {
  SUBCASE("continuous example") {
    const CoeffStats s = effective_stats("models/example1.model.json");
    const PermanenceBounds pb = permanence_bounds(s);
    const StabilityCertificate cert = stability_certificate(s, pb);
    REQUIRE(cert.gamma_x.size() == 2);
    REQUIRE(cert.gamma_y.size() == 2);
    CHECK(near(cert.gamma_x[0], 2.408, 0.05));
    CHECK(near(cert.gamma_x[1], 0.466, 0.05));
    CHECK(near(cert.gamma_y[0], 0.502, 0.05));
    CHECK(near(cert.gamma_y[1], 0.418, 0.05));
    CHECK(near(cert.gamma, 0.418, 0.05));
    CHECK(cert.neg_gamma_regressive);
    CHECK(cert.verdict);
  }
  SUBCASE("lattice example") {
    const CoeffStats s = effective_stats("models/example2.model.json");
    const PermanenceBounds pb = permanence_bounds(s);
    const StabilityCertificate cert = stability_certificate(s, pb);
    CHECK(near(cert.gamma_x[0], 0.239, 0.05));
    CHECK(near(cert.gamma_x[1], 0.244, 0.05));
    CHECK(near(cert.gamma_y[0], 1.248, 0.05));
    CHECK(near(cert.gamma_y[1], 1.093, 0.05));
    CHECK(near(cert.gamma, 0.239, 0.05));
    CHECK(cert.verdict);
  }
  SUBCASE("saturated delay derivative surfaces as a hypothesis error") {
    CoeffStats s = effective_stats("models/example1.model.json");
    const PermanenceBounds pb = permanence_bounds(s);
    s.tau_d = 1.0;
    CHECK_THROWS_AS(stability_certificate(s, pb), HypothesisError);
  }
}
