#include <cstring>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "tslv.h"

namespace {

// Owns a char* returned through a tslv out-parameter.
struct Str {
  char* p = nullptr;
  ~Str() { tslv_string_free(p); }
  nlohmann::json json() const { return nlohmann::json::parse(p); }
};

struct Model {
  tslv_model* p = nullptr;
  ~Model() { tslv_model_free(p); }
};

const char* kTinyModel = R"json({
  "name": "tiny",
  "time_scale": {"kind": "reals"},
  "t0": 0,
  "b": ["2"], "r": [],
  "a": [["1"]], "c": [[]], "d": [], "e": [],
  "tau": [["0"]], "xi": [[]], "delta": [], "eta": []
})json";

}  // namespace

TEST_CASE("version and error plumbing") {
  REQUIRE(tslv_version() != nullptr);
  CHECK(std::strlen(tslv_version()) > 0);
  tslv_string_free(nullptr);  // must be a no-op
}

TEST_CASE("model lifecycle through the C surface") {
  SUBCASE("load from string, inspect, free") {
    Model m;
    REQUIRE(tslv_model_load_string(kTinyModel, &m.p) == TSLV_OK);
    Str info;
    REQUIRE(tslv_model_info(m.p, &info.p) == TSLV_OK);
    const auto j = info.json();
    CHECK(j["name"] == "tiny");
    CHECK(j["n"] == 1);
    CHECK(j["m"] == 0);
    CHECK(j["time_scale"]["kind"] == "reals");
    CHECK(j["has_impulses"] == false);
    CHECK(j["hash"].get<std::string>().size() == 16);
  }
  SUBCASE("bundled models expose the two reference systems") {
    for (int id : {1, 2}) {
      Model m;
      REQUIRE(tslv_bundled_model(id, &m.p) == TSLV_OK);
      Str info;
      REQUIRE(tslv_model_info(m.p, &info.p) == TSLV_OK);
      const auto j = info.json();
      CHECK(j["n"] == 2);
      CHECK(j["m"] == 2);
      CHECK(j["has_impulses"] == true);
    }
    Model m;
    CHECK(tslv_bundled_model(3, &m.p) == TSLV_ERR_USAGE);
    CHECK(m.p == nullptr);
    CHECK(std::strlen(tslv_last_error()) > 0);
  }
  SUBCASE("failure modes map to distinct status codes") {
    Model m;
    CHECK(tslv_model_load_file("/nonexistent/x.json", &m.p) == TSLV_ERR_IO);
    CHECK(tslv_model_load_string("not json", &m.p) == TSLV_ERR_PARSE);
    CHECK(tslv_model_load_string(R"({"time_scale": {"kind": "reals"}})", &m.p) ==
          TSLV_ERR_VALIDATION);
    CHECK(tslv_model_load_string(nullptr, &m.p) == TSLV_ERR_USAGE);
    CHECK(tslv_model_load_string(kTinyModel, nullptr) == TSLV_ERR_USAGE);
    CHECK(m.p == nullptr);
    tslv_model_free(nullptr);  // no-op
  }
}

TEST_CASE("check through the C surface") {
  Model m;
  REQUIRE(tslv_bundled_model(1, &m.p) == TSLV_OK);

  tslv_check_options opts;
  tslv_check_options_init(&opts);
  CHECK(opts.use_override == 1);
  CHECK(opts.sample_window == 2000.0);
  CHECK(opts.points_per_unit == 40);
  CHECK(opts.impulse_horizon == 200);

  SUBCASE("with override the certificate holds") {
    Str out;
    int ok = -1;
    REQUIRE(tslv_check(m.p, &opts, &out.p, &ok) == TSLV_OK);
    CHECK(ok == 1);
    const auto j = out.json();
    CHECK(j["certificate"]["verdict"] == true);
    CHECK(j["statistics"]["override_applied"] == true);
    CHECK(j["hypotheses"]["H2"]["status"] == "overridden");
    CHECK(j["permanence"]["ordering_ok"] == true);
    // The four gamma entries and the certified box are numeric.
    CHECK(j["certificate"]["gamma_x"].size() == 2);
    CHECK(j["permanence"]["x_up"].size() == 2);
  }
  SUBCASE("honest statistics fail a hypothesis but still report") {
    opts.use_override = 0;
    Str out;
    int ok = -1;
    REQUIRE(tslv_check(m.p, &opts, &out.p, &ok) == TSLV_OK);
    CHECK(ok == 0);
    const auto j = out.json();
    CHECK(j["statistics"]["override_applied"] == false);
    CHECK(j["hypotheses"]["H2"]["status"] == "fail");
  }
  SUBCASE("null arguments are usage errors") {
    Str out;
    CHECK(tslv_check(nullptr, &opts, &out.p, nullptr) == TSLV_ERR_USAGE);
    CHECK(tslv_check(m.p, &opts, nullptr, nullptr) == TSLV_ERR_USAGE);
  }
}

TEST_CASE("simulate through the C surface") {
  Model m;
  REQUIRE(tslv_model_load_string(kTinyModel, &m.p) == TSLV_OK);

  tslv_sim_options opts;
  tslv_sim_options_init(&opts);
  CHECK(opts.step == 0.01);
  CHECK(opts.horizon == 100.0);
  CHECK(opts.interp == TSLV_INTERP_HERMITE);

  opts.horizon = 10.0;
  const double z0 = 0.5;
  opts.z0 = &z0;

  SUBCASE("summary JSON carries the tail box and final state") {
    Str out;
    REQUIRE(tslv_simulate(m.p, &opts, nullptr, 1, &out.p) == TSLV_OK);
    const auto j = out.json();
    CHECK(j["rows"].get<long>() == 1001);
    CHECK(j["impulses"] == 0);
    CHECK(j["final"]["z"][0].get<double>() == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(j["tail"]["x_hi"][0].get<double>() == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    CHECK_FALSE(j.contains("csv"));
  }
  SUBCASE("csv streaming records the path") {
    Str out;
    REQUIRE(tslv_simulate(m.p, &opts, "/tmp/tslv_capi_traj.csv", 100, &out.p) == TSLV_OK);
    CHECK(out.json()["csv"] == "/tmp/tslv_capi_traj.csv");
    std::FILE* f = std::fopen("/tmp/tslv_capi_traj.csv", "r");
    REQUIRE(f != nullptr);
    std::fclose(f);
  }
  SUBCASE("unwritable csv path maps to an io error") {
    Str out;
    CHECK(tslv_simulate(m.p, &opts, "/nonexistent-dir/t.csv", 1, &out.p) == TSLV_ERR_IO);
  }
  SUBCASE("bad initial states map to usage errors") {
    const double bad = -1.0;
    opts.z0 = &bad;
    Str out;
    CHECK(tslv_simulate(m.p, &opts, nullptr, 1, &out.p) == TSLV_ERR_USAGE);
    CHECK(std::string(tslv_last_error()).find("positive") != std::string::npos);
  }
}

TEST_CASE("verify through the C surface") {
  Model m;
  REQUIRE(tslv_model_load_file(TSLV_SOURCE_DIR "/models/example1_h2.model.json", &m.p) ==
          TSLV_OK);

  tslv_verify_options opts;
  tslv_verify_options_init(&opts);
  CHECK(opts.eps == 0.05);
  CHECK(opts.gap_limit == 0.01);
  CHECK(opts.perturbation == 0.2);
  opts.sim.horizon = 120.0;
  opts.sim.step = 0.01;

  Str out;
  int verdict = -1;
  REQUIRE(tslv_verify(m.p, &opts, &out.p, &verdict) == TSLV_OK);
  CHECK(verdict == 1);
  const auto j = out.json();
  CHECK(j["verdict"] == true);
  CHECK(j["tails_ok"] == true);
  CHECK(j["gap_ok"] == true);
  CHECK(j["empirical"]["x_lo"].size() == 2);
  CHECK(j["analysis"]["hypotheses"]["all_pass"] == true);
  CHECK(j["gap"]["ratio"].get<double>() < 0.01);
}

TEST_CASE("reproduce through the C surface") {
  for (int id : {1, 2}) {
    Str out;
    int ok = -1;
    REQUIRE(tslv_reproduce(id, &out.p, &ok) == TSLV_OK);
    CHECK(ok == 1);
    const auto j = out.json();
    CHECK(j["all_ok"] == true);
    CHECK(j["rows"].size() >= 13);
    for (const auto& row : j["rows"]) CHECK(row["ok"] == true);
  }
  Str out;
  CHECK(tslv_reproduce(7, &out.p, nullptr) == TSLV_ERR_USAGE);
}
