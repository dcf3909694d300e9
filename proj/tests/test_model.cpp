#include <cmath>

#include "doctest.h"
#include "tslv/model.hpp"

using namespace tslv;

namespace {

// Minimal valid one-prey/one-predator continuous model used as an editing base.
const char* kBase = R"json({
  "time_scale": {"kind": "reals"},
  "t0": 0,
  "b": ["2 + sin(t)"],
  "r": ["0.1"],
  "a": [["1"]],
  "c": [["0.02"]],
  "d": [["0.1"]],
  "e": [["0.5"]],
  "tau": [["0.003 - 0.001*sin(2*pi*t)"]]
})json";

nlohmann::json base_doc() { return nlohmann::json::parse(kBase); }

}  // namespace

TEST_CASE("model loading fills defaults and validates structure") {
  const ModelSpec ms = load_model(kBase);
  CHECK(ms.n == 1);
  CHECK(ms.m == 1);
  CHECK_FALSE(ms.ts.is_lattice());
  CHECK_FALSE(ms.has_impulses);
  CHECK(ms.source_hash.size() == 16);
  // omitted delay families default to zero
  CHECK(is_constant(*ms.xi[0][0]));
  CHECK(eval(ms.xi[0][0], 17.0) == 0.0);
  CHECK(eval(ms.tau[0][0], 0.25) == doctest::Approx(0.002).epsilon(1e-12));

  // a predator-free model needs no c/d/e blocks
  nlohmann::json doc = base_doc();
  doc.erase("r");
  doc.erase("c");
  doc.erase("d");
  doc.erase("e");
  doc["r"] = nlohmann::json::array();
  const ModelSpec prey_only = load_model(doc.dump());
  CHECK(prey_only.m == 0);
}

TEST_CASE("model loading rejects malformed documents") {
  auto expect_validation = [](nlohmann::json doc, const char* tag) {
    CAPTURE(tag);
    CHECK_THROWS_AS(load_model(doc.dump()), ValidationError);
  };

  {
    nlohmann::json d = base_doc();
    d.erase("b");
    expect_validation(d, "missing b");
  }
  {
    nlohmann::json d = base_doc();
    d["a"] = nlohmann::json::array();  // wrong shape
    expect_validation(d, "empty a");
  }
  {
    nlohmann::json d = base_doc();
    d["time_scale"]["kind"] = "quantum";
    expect_validation(d, "bad kind");
  }
  {
    nlohmann::json d = base_doc();
    d["time_scale"] = {{"kind", "lattice"}, {"step", 0.5}};
    d["t0"] = 0.3;  // off the lattice
    expect_validation(d, "t0 alignment");
  }
  {
    nlohmann::json d = base_doc();
    d["b"][0] = "2 + sin(t";  // parse failure surfaces as validation, naming the entry
    try {
      load_model(d.dump());
      CHECK(false);
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("b[0]") != std::string::npos);
    }
  }
  {
    nlohmann::json d = base_doc();
    d["b"][0] = "-1 - sin(t)";  // negative growth envelope fails the sign scan
    expect_validation(d, "negative coefficient");
  }
  {
    nlohmann::json d = base_doc();
    d["tau"][0][0] = "-0.001";  // delays must be nonnegative
    expect_validation(d, "negative delay");
  }
  {
    nlohmann::json d = base_doc();
    d["impulses"] = {{"times", {{"periodic", {{"period", 1}, {"offset", 0}}}}},
                     {"lambda_x", {"-1.5"}},
                     {"lambda_y", {"0"}}};
    expect_validation(d, "lambda <= -1");
  }
  {
    nlohmann::json d = base_doc();
    d["time_scale"] = {{"kind", "lattice"}, {"step", 2}};
    d["tau"][0][0] = "0";
    d["impulses"] = {{"times", {{"periodic", {{"period", 1}, {"offset", 0}}}}},
                     {"lambda_x", {"0"}},
                     {"lambda_y", {"0"}}};  // period 1 off the step-2 lattice
    expect_validation(d, "impulse alignment");
  }
  {
    nlohmann::json d = base_doc();
    d["stats_override"] = {{"no_such_field", 1.0}};
    expect_validation(d, "unknown override key is rejected at load");
  }

  CHECK_THROWS_AS(load_model("not json"), ParseError);
  CHECK_THROWS_AS(load_model_file("/nonexistent/x.json"), IoError);
}

TEST_CASE("impulse schedule enumeration") {
  ImpulseSchedule sched;
  sched.times.periodic = true;
  sched.times.period = 2.0;
  sched.times.offset = 1.0;  // t_k = 1 + 2k: 3, 5, 7, ...
  sched.lambda_x.push_back(parse_expr("0", "k"));

  const auto evs = sched.events(0.0, 10.0);
  REQUIRE(evs.size() == 4);
  CHECK(evs[0].time == 3.0);
  CHECK(evs[0].k == 1);
  CHECK(evs[3].time == 9.0);
  CHECK(evs[3].k == 4);
  CHECK(sched.min_gap() == 2.0);

  // window excludes t0, includes the horizon endpoint
  const auto evs2 = sched.events(3.0, 9.0);
  REQUIRE(evs2.size() == 3);
  CHECK(evs2[0].time == 5.0);
  CHECK(evs2[2].time == 9.0);

  ImpulseSchedule exp;
  exp.times.periodic = false;
  exp.times.explicit_times = {0.5, 2.25, 8.0};
  const auto evs3 = exp.events(0.5, 8.0);
  REQUIRE(evs3.size() == 2);
  CHECK(evs3[0].time == 2.25);
  CHECK(evs3[0].k == 2);  // k indexes the full schedule, not the window
  CHECK(exp.min_gap() == doctest::Approx(1.75));
}

TEST_CASE("impulse product bounds") {
  const long H = 200;

  SUBCASE("identity jumps") {
    const ProductBound pb = impulse_product_bound(parse_expr("0", "k"), H);
    CHECK(pb.lo == 1.0);
    CHECK(pb.hi == 1.0);
    CHECK(pb.converged);
  }
  SUBCASE("decaying negative jumps converge") {
    const ProductBound pb = impulse_product_bound(parse_expr("-0.01*pow(2, -k)", "k"), H);
    CHECK(pb.converged);
    // Limit of prod_{k>=1} (1 - 0.01*2^{-k}); the full-horizon product.
    CHECK(pb.lo == doctest::Approx(0.9900332857).epsilon(1e-6));
    CHECK(pb.hi == doctest::Approx(0.995).epsilon(1e-12));  // P_1
    CHECK(pb.lo <= pb.hi);
  }
  SUBCASE("constant shrink does not converge") {
    const ProductBound pb = impulse_product_bound(parse_expr("-0.5", "k"), H);
    CHECK_FALSE(pb.converged);
    CHECK(pb.hi == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pb.lo < 1e-30);
  }
  SUBCASE("growing jumps do not converge and the envelope shows it") {
    const ProductBound pb = impulse_product_bound(parse_expr("1", "k"), H);  // doubling
    CHECK_FALSE(pb.converged);
    CHECK(pb.lo == 1.0);  // empty prefix
    CHECK(pb.hi > 1e50);
  }
  SUBCASE("a vanishing factor degenerates the envelope") {
    const ProductBound pb = impulse_product_bound(parse_expr("-1", "k"), H);
    CHECK_FALSE(pb.converged);
    CHECK(pb.lo == 0.0);
    CHECK(pb.hi == std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("coefficient statistics and overrides") {
  const ModelSpec ms = load_model(kBase);
  const CoeffStats st = compute_stats(ms);

  CHECK(st.mu_bar == 0.0);
  CHECK(st.b_U[0] == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(st.b_L[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(st.a_U[0][0] == 1.0);
  CHECK(st.tau_plus == doctest::Approx(0.004).epsilon(1e-6));
  CHECK(st.tau_minus == doctest::Approx(0.002).epsilon(1e-6));
  CHECK(st.tau_d == doctest::Approx(0.002 * 3.141592653589793).epsilon(1e-6));
  CHECK(st.xi_plus == 0.0);
  CHECK(st.impulse_r == 1.0);  // no impulses
  CHECK(st.overridden.empty());

  nlohmann::json ov = {{"impulse_r", 0.9},
                       {"tau_d", 0.002},
                       {"b_U", {2.5}},
                       {"a_U", {{1.25}}}};
  const CoeffStats eff = apply_override(st, ov, ms.n, ms.m);
  CHECK(eff.impulse_r == 0.9);
  CHECK(eff.tau_d == 0.002);
  CHECK(eff.b_U[0] == 2.5);
  CHECK(eff.a_U[0][0] == 1.25);
  CHECK(eff.b_L[0] == st.b_L[0]);  // untouched fields preserved
  CHECK(eff.overridden.size() == 4);

  CHECK_THROWS_AS(apply_override(st, {{"nope", 1}}, ms.n, ms.m), ValidationError);
  CHECK_THROWS_AS(apply_override(st, {{"b_U", {1.0, 2.0}}}, ms.n, ms.m), ValidationError);
  CHECK_THROWS_AS(apply_override(st, {{"a_U", {{1.0, 2.0}}}}, ms.n, ms.m), ValidationError);
}

TEST_CASE("statistics of the lattice scale") {
  nlohmann::json d = base_doc();
  d["time_scale"] = {{"kind", "lattice"}, {"step", 0.5}};
  d["tau"][0][0] = "0.5";
  const ModelSpec ms = load_model(d.dump());
  const CoeffStats st = compute_stats(ms);
  CHECK(st.mu_bar == 0.5);
  CHECK(st.tau_plus == 0.5);
  CHECK(st.tau_d == 0.0);  // constant delay has zero forward difference
}

TEST_CASE("document hashing is stable and content-sensitive") {
  CHECK(fnv1a_hex("abc") == fnv1a_hex("abc"));
  CHECK(fnv1a_hex("abc") != fnv1a_hex("abd"));
  const ModelSpec a = load_model(kBase);
  const ModelSpec b = load_model(kBase);
  CHECK(a.source_hash == b.source_hash);
}
