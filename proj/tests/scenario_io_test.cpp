#include "edmpc/scenario_io.hpp"

#include <cmath>
#include <string>

#include "doctest.h"
#include "json.hpp"

using namespace edmpc;

namespace {

const char* kMinimal = R"({
  "plant_id": "example1",
  "controller": {"N": 4, "Ly": 2, "Lu": 5, "mode": "uiMPC"},
  "reference_spec": "unit_ramp",
  "steps": 100
})";

bool throws_mentioning(const std::string& text, const std::string& needle) {
  try {
    parse_scenario(text);
  } catch (const ScenarioParseError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

Scenario full_scenario() {
  Scenario s;
  s.plant_id = PlantId::custom;
  s.controller.N = 3;
  s.controller.Ly = 1;
  s.controller.Lu = 2;
  s.controller.lambda = 0.1 + 0.2;
  s.controller.ridge = 1e-8;
  s.controller.mode = ControlMode::ciMPC;
  s.controller.pjm_mode = PjmMode::fixed_point;
  s.controller.q_weights = Vector::Constant(3, 1.0 / 3.0);
  ConstraintSet cs;
  cs.u_min = Vector::Constant(1, -0.5);
  cs.u_max = Vector::Constant(1, 0.5);
  cs.energy_cap = 0.7;
  s.constraints = cs;
  s.reference_spec = ReferenceSpec::custom_table;
  s.reference_table.assign(5, Vector::Constant(1, 0.25));
  s.disturbance_spec = DisturbanceSpec::none;
  s.steps = 5;
  s.seed = 123456789012345ull;
  s.init_y = Vector::Constant(1, 0.01);
  s.init_u = Vector::Constant(1, -0.02);
  Matrix gy(1, 1), gu(1, 1);
  gy << 0.5;
  gu << 1.0;
  s.custom_y_gains = {gy};
  s.custom_u_gains = {gu, gu};
  return s;
}

Scenario analysis_scenario() {
  Scenario s;
  s.plant_id = PlantId::example1;
  s.controller.N = 4;
  s.controller.Ly = 2;
  s.controller.Lu = 5;
  s.controller.lambda = 1.0;
  s.reference_spec = ReferenceSpec::unit_ramp;
  s.steps = 700;
  return s;
}

}  // namespace

TEST_CASE("minimal document takes the documented defaults") {
  const Scenario s = parse_scenario(kMinimal);
  CHECK(s.plant_id == PlantId::example1);
  CHECK(s.controller.N == 4);
  CHECK(s.controller.lambda == 0.0);
  CHECK(s.controller.ridge == 0.0);
  CHECK(s.controller.q_weights.size() == 0);
  CHECK(s.controller.pjm_mode == PjmMode::frozen);
  CHECK(s.controller.mode == ControlMode::uiMPC);
  CHECK(!s.constraints.has_value());
  CHECK(s.disturbance_spec == DisturbanceSpec::none);
  CHECK(s.seed == 42);
  CHECK(s.steps == 100);
  CHECK(s.init_y.size() == 0);
  CHECK(s.init_u.size() == 0);
}

TEST_CASE("unknown keys are named at every level") {
  CHECK(throws_mentioning(R"({
    "plant_id": "example1",
    "controller": {"N": 4, "Ly": 2, "Lu": 5, "mode": "uiMPC"},
    "reference_spec": "unit_ramp",
    "steps": 10,
    "bogus": 1
  })",
                          "bogus"));

  CHECK(throws_mentioning(R"({
    "plant_id": "example1",
    "controller": {"N": 4, "Ly": 2, "Lu": 5, "mode": "uiMPC", "alpha": 2},
    "reference_spec": "unit_ramp",
    "steps": 10
  })",
                          "alpha"));

  CHECK(throws_mentioning(R"({
    "plant_id": "example1",
    "controller": {"N": 4, "Ly": 2, "Lu": 5, "mode": "ciMPC"},
    "constraints": {"cap": 3},
    "reference_spec": "unit_ramp",
    "steps": 10
  })",
                          "cap"));
}

TEST_CASE("missing required keys are reported") {
  CHECK(throws_mentioning(R"({
    "controller": {"N": 4, "Ly": 2, "Lu": 5, "mode": "uiMPC"},
    "reference_spec": "unit_ramp",
    "steps": 10
  })",
                          "plant_id"));

  CHECK(throws_mentioning(R"({
    "plant_id": "example1",
    "controller": {"Ly": 2, "Lu": 5, "mode": "uiMPC"},
    "reference_spec": "unit_ramp",
    "steps": 10
  })",
                          "'N'"));

  CHECK(throws_mentioning(R"({
    "plant_id": "example1",
    "controller": {"N": 4, "Ly": 2, "Lu": 5, "mode": "uiMPC"},
    "reference_spec": "unit_ramp"
  })",
                          "steps"));

  CHECK(throws_mentioning(R"({
    "plant_id": "example1",
    "controller": {"N": 4, "Ly": 2, "Lu": 5},
    "reference_spec": "unit_ramp",
    "steps": 10
  })",
                          "mode"));
}

TEST_CASE("enum tokens are validated with the allowed list") {
  auto doc_with = [](const std::string& key, const std::string& value) {
    return std::string(R"({
      "plant_id": )") +
           (key == "plant_id" ? value : "\"example1\"") + R"(,
      "controller": {"N": 4, "Ly": 2, "Lu": 5, "mode": )" +
           (key == "mode" ? value : "\"uiMPC\"") + R"(, "pjm_mode": )" +
           (key == "pjm_mode" ? value : "\"frozen\"") + R"(},
      "reference_spec": )" +
           (key == "reference_spec" ? value : "\"unit_ramp\"") + R"(,
      "disturbance_spec": )" +
           (key == "disturbance_spec" ? value : "\"none\"") + R"(,
      "steps": 10
    })";
  };
  CHECK(throws_mentioning(doc_with("plant_id", "\"example9\""), "example4"));
  CHECK(throws_mentioning(doc_with("mode", "\"MPC\""), "ciMPC+D"));
  CHECK(throws_mentioning(doc_with("pjm_mode", "\"fresh\""), "fixed_point"));
  CHECK(throws_mentioning(doc_with("reference_spec", "\"ramp\""), "eq57_composite"));
  CHECK(throws_mentioning(doc_with("disturbance_spec", "\"white\""), "eq64_whitenoise"));
}

TEST_CASE("seed must be a non-negative integer") {
  auto with_seed = [](const std::string& seed) {
    return std::string(R"({
      "plant_id": "example1",
      "controller": {"N": 4, "Ly": 2, "Lu": 5, "mode": "uiMPC"},
      "reference_spec": "unit_ramp",
      "steps": 10,
      "seed": )") +
           seed + "\n}";
  };
  CHECK(throws_mentioning(with_seed("-5"), "seed"));
  CHECK(throws_mentioning(with_seed("1.5"), "seed"));
  CHECK(parse_scenario(with_seed("0")).seed == 0);
}

TEST_CASE("scenario documents round-trip exactly") {
  const Scenario s = full_scenario();
  const std::string doc = scenario_to_json(s);
  const Scenario back = parse_scenario(doc);
  CHECK(scenario_to_json(back) == doc);

  CHECK(back.plant_id == s.plant_id);
  CHECK(back.controller.N == s.controller.N);
  CHECK(back.controller.lambda == s.controller.lambda);
  CHECK(back.controller.ridge == s.controller.ridge);
  CHECK(back.controller.mode == s.controller.mode);
  CHECK(back.controller.pjm_mode == s.controller.pjm_mode);
  REQUIRE(back.controller.q_weights.size() == 3);
  CHECK(back.controller.q_weights(0) == 1.0 / 3.0);
  REQUIRE(back.constraints.has_value());
  CHECK(back.constraints->u_min(0) == -0.5);
  CHECK(back.constraints->u_max(0) == 0.5);
  CHECK(*back.constraints->energy_cap == 0.7);
  CHECK(back.reference_table.size() == 5);
  CHECK(back.reference_table[0](0) == 0.25);
  CHECK(back.seed == 123456789012345ull);
  CHECK(back.init_y(0) == 0.01);
  CHECK(back.init_u(0) == -0.02);
  REQUIRE(back.custom_u_gains.size() == 2);
  CHECK(back.custom_y_gains[0](0, 0) == 0.5);
}

TEST_CASE("file loading failures carry the path") {
  try {
    load_scenario("/nonexistent/dir/missing.json");
    CHECK(false);
  } catch (const ScenarioParseError& e) {
    CHECK(std::string(e.what()).find("missing.json") != std::string::npos);
  }
}

TEST_CASE("malformed documents report the parse position") {
  CHECK(throws_mentioning("{ bad", "line"));
  CHECK(throws_mentioning("[1, 2]", "object"));
}

TEST_CASE("initial-point analysis of the delayed linear plant") {
  const Scenario s = analysis_scenario();
  const std::vector<AnalysisEntry> entries = analyze_at_init(s);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].form == "analysis1");
  CHECK(entries[1].form == "analysis2");
  for (const AnalysisEntry& e : entries) {
    CAPTURE(e.form);
    REQUIRE(e.stability.has_value());
    CHECK(e.stability->stable);
    REQUIRE(e.ramp_error.has_value());
    CHECK(std::abs(e.ramp_error->limit_error - 2.0 / 15.0) <= 1e-9);
    REQUIRE(e.step_error.has_value());
    CHECK(std::abs(e.step_error->limit_error) <= 1e-9);
  }
}

TEST_CASE("analysis requires frozen coefficients and matching orders") {
  Scenario s = analysis_scenario();
  s.controller.pjm_mode = PjmMode::fixed_point;
  CHECK_THROWS_AS(analyze_at_init(s), UnsupportedConfiguration);

  Scenario bad = analysis_scenario();
  bad.controller.Ly = 1;
  CHECK_THROWS_AS(analyze_at_init(bad), InvalidScenario);
}

TEST_CASE("report serialization survives a reparse") {
  Report r;
  r.scenario = analysis_scenario();
  r.analyses = analyze_at_init(r.scenario);

  Trace t;
  t.My = 1;
  t.Mu = 1;
  for (int k = 1; k <= 10; ++k) {
    TraceRow row;
    row.k = k;
    row.y = Vector::Constant(1, 0.4);
    row.y_star = Vector::Constant(1, 0.5);
    row.u = Vector::Zero(1);
    row.w = Vector::Zero(1);
    row.e = Vector::Constant(1, 0.1);
    row.du = Vector::Zero(1);
    t.rows.push_back(std::move(row));
  }
  r.run_metrics = metrics(t, 2, 9);

  // A divergent limit serializes as null.
  AnalysisEntry div;
  div.form = "analysis1";
  SteadyStateReport ss;
  ss.input_kind = InputKind::ramp;
  ss.divergent = true;
  ss.limit_error = std::numeric_limits<double>::quiet_NaN();
  div.ramp_error = ss;
  div.notes.push_back("constructed divergent entry");
  r.analyses.push_back(std::move(div));

  const std::string text = report_to_json(r);
  const nlohmann::json j = nlohmann::json::parse(text);

  CHECK(j["scenario"]["plant_id"] == "example1");
  CHECK(j["metrics"]["k_lo"] == 2);
  CHECK(j["metrics"]["rms_error"].get<double>() == r.run_metrics->rms_error);
  CHECK(j["metrics"]["steady_error"][0].get<double>() == r.run_metrics->steady_error(0));

  REQUIRE(j["analyses"].size() == 3);
  const auto& a0 = j["analyses"][0];
  CHECK(a0["form"] == "analysis1");
  CHECK(a0["stability"]["stable"].get<bool>());
  for (const auto& root : a0["stability"]["roots"]) REQUIRE(root.size() == 2);
  CHECK(a0["ramp_error"]["limit_error"].get<double>() ==
        r.analyses[0].ramp_error->limit_error);

  const auto& last = j["analyses"][2];
  CHECK(last["ramp_error"]["limit_error"].is_null());
  CHECK(last["ramp_error"]["divergent"].get<bool>());
  CHECK(last["notes"][0] == "constructed divergent entry");
}
