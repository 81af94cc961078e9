#include "edmpc/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

#include "edmpc/prediction.hpp"

namespace edmpc {

namespace {

using json = nlohmann::ordered_json;

void expect_keys(const json& j, const char* where,
                 std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ScenarioParseError("unknown key '" + item.key() + "' in " + where);
  }
}

const json& need(const json& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end())
    throw ScenarioParseError(std::string("missing key '") + key + "' in " + where);
  return *it;
}

double as_number(const json& j, const char* what) {
  if (!j.is_number()) throw ScenarioParseError(std::string(what) + " must be a number");
  return j.get<double>();
}

int as_int(const json& j, const char* what) {
  if (!j.is_number_integer()) throw ScenarioParseError(std::string(what) + " must be an integer");
  return j.get<int>();
}

Vector as_vector(const json& j, const char* what) {
  if (!j.is_array()) throw ScenarioParseError(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) v(i++) = as_number(e, what);
  return v;
}

Matrix as_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw ScenarioParseError(std::string(what) + " must be a non-empty array of rows");
  const size_t cols = j.front().is_array() ? j.front().size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  Eigen::Index r = 0;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols)
      throw ScenarioParseError(std::string(what) + " rows must be equal-length arrays");
    Eigen::Index c = 0;
    for (const auto& e : row) m(r, c++) = as_number(e, what);
    ++r;
  }
  return m;
}

std::vector<Matrix> as_matrix_list(const json& j, const char* what) {
  if (!j.is_array()) throw ScenarioParseError(std::string(what) + " must be an array");
  std::vector<Matrix> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(as_matrix(e, what));
  return out;
}

template <typename E>
struct Token {
  const char* name;
  E value;
};

constexpr Token<PlantId> kPlants[] = {{"example1", PlantId::example1},
                                      {"example2", PlantId::example2},
                                      {"example3", PlantId::example3},
                                      {"example4", PlantId::example4},
                                      {"custom", PlantId::custom}};
constexpr Token<ReferenceSpec> kReferences[] = {
    {"unit_ramp", ReferenceSpec::unit_ramp},
    {"eq57_composite", ReferenceSpec::eq57_composite},
    {"custom_table", ReferenceSpec::custom_table}};
constexpr Token<DisturbanceSpec> kDisturbances[] = {
    {"none", DisturbanceSpec::none},
    {"eq60_known", DisturbanceSpec::eq60_known},
    {"eq64_whitenoise", DisturbanceSpec::eq64_whitenoise}};
constexpr Token<ControlMode> kModes[] = {{"uiMPC", ControlMode::uiMPC},
                                         {"ciMPC", ControlMode::ciMPC},
                                         {"uiMPC+D", ControlMode::uiMPC_D},
                                         {"ciMPC+D", ControlMode::ciMPC_D}};
constexpr Token<PjmMode> kPjmModes[] = {{"frozen", PjmMode::frozen},
                                        {"fixed_point", PjmMode::fixed_point}};

template <typename E, size_t n>
E from_token(const Token<E> (&table)[n], const json& j, const char* what) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    for (const auto& t : table)
      if (s == t.name) return t.value;
  }
  std::string allowed;
  for (const auto& t : table) {
    if (!allowed.empty()) allowed += ", ";
    allowed += t.name;
  }
  throw ScenarioParseError(std::string(what) + " must be one of: " + allowed);
}

template <typename E, size_t n>
const char* to_token(const Token<E> (&table)[n], E value) {
  for (const auto& t : table)
    if (t.value == value) return t.name;
  return "?";
}

ControllerConfig parse_controller(const json& j) {
  if (!j.is_object()) throw ScenarioParseError("controller must be an object");
  expect_keys(j, "controller",
              {"N", "q_weights", "lambda", "Ly", "Lu", "mode", "pjm_mode", "ridge"});
  ControllerConfig cfg;
  cfg.N = as_int(need(j, "N", "controller"), "controller.N");
  cfg.Ly = as_int(need(j, "Ly", "controller"), "controller.Ly");
  cfg.Lu = as_int(need(j, "Lu", "controller"), "controller.Lu");
  cfg.mode = from_token(kModes, need(j, "mode", "controller"), "controller.mode");
  if (j.contains("q_weights")) cfg.q_weights = as_vector(j["q_weights"], "controller.q_weights");
  if (j.contains("lambda")) cfg.lambda = as_number(j["lambda"], "controller.lambda");
  if (j.contains("pjm_mode"))
    cfg.pjm_mode = from_token(kPjmModes, j["pjm_mode"], "controller.pjm_mode");
  if (j.contains("ridge")) cfg.ridge = as_number(j["ridge"], "controller.ridge");
  return cfg;
}

ConstraintSet parse_constraints(const json& j) {
  if (!j.is_object()) throw ScenarioParseError("constraints must be an object");
  expect_keys(j, "constraints", {"u_min", "u_max", "energy_cap"});
  ConstraintSet cs;
  if (j.contains("u_min")) cs.u_min = as_vector(j["u_min"], "constraints.u_min");
  if (j.contains("u_max")) cs.u_max = as_vector(j["u_max"], "constraints.u_max");
  if (j.contains("energy_cap"))
    cs.energy_cap = as_number(j["energy_cap"], "constraints.energy_cap");
  return cs;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json scenario_json(const Scenario& s) {
  json j;
  j["plant_id"] = to_token(kPlants, s.plant_id);
  json c;
  c["N"] = s.controller.N;
  c["Ly"] = s.controller.Ly;
  c["Lu"] = s.controller.Lu;
  c["mode"] = to_token(kModes, s.controller.mode);
  c["pjm_mode"] = to_token(kPjmModes, s.controller.pjm_mode);
  c["lambda"] = s.controller.lambda;
  c["ridge"] = s.controller.ridge;
  if (s.controller.q_weights.size() > 0) c["q_weights"] = vector_json(s.controller.q_weights);
  j["controller"] = std::move(c);
  if (s.constraints) {
    json cs;
    if (s.constraints->u_min.size() > 0) cs["u_min"] = vector_json(s.constraints->u_min);
    if (s.constraints->u_max.size() > 0) cs["u_max"] = vector_json(s.constraints->u_max);
    if (s.constraints->energy_cap) cs["energy_cap"] = *s.constraints->energy_cap;
    j["constraints"] = std::move(cs);
  }
  j["reference_spec"] = to_token(kReferences, s.reference_spec);
  if (!s.reference_table.empty()) {
    json t = json::array();
    for (const Vector& r : s.reference_table) t.push_back(vector_json(r));
    j["reference_table"] = std::move(t);
  }
  j["disturbance_spec"] = to_token(kDisturbances, s.disturbance_spec);
  j["steps"] = s.steps;
  j["seed"] = s.seed;
  if (s.init_y.size() > 0) j["init_y"] = vector_json(s.init_y);
  if (s.init_u.size() > 0) j["init_u"] = vector_json(s.init_u);
  if (!s.custom_y_gains.empty()) {
    json g = json::array();
    for (const Matrix& m : s.custom_y_gains) g.push_back(matrix_json(m));
    j["custom_y_gains"] = std::move(g);
  }
  if (!s.custom_u_gains.empty()) {
    json g = json::array();
    for (const Matrix& m : s.custom_u_gains) g.push_back(matrix_json(m));
    j["custom_u_gains"] = std::move(g);
  }
  return j;
}

json stability_json(const StabilityReport& r) {
  json roots = json::array();
  for (const auto& z : r.roots) roots.push_back(json::array({z.real(), z.imag()}));
  json j;
  j["roots"] = std::move(roots);
  j["max_modulus"] = r.max_modulus;
  j["stable"] = r.stable;
  return j;
}

json steady_json(const SteadyStateReport& r) {
  json j;
  j["input"] = r.input_kind == InputKind::step ? "step" : "ramp";
  if (std::isfinite(r.limit_error))
    j["limit_error"] = r.limit_error;
  else
    j["limit_error"] = nullptr;
  j["divergent"] = r.divergent;
  return j;
}

json metrics_json(const Metrics& m) {
  json j;
  j["k_lo"] = m.k_lo;
  j["k_hi"] = m.k_hi;
  j["steady_error"] = vector_json(m.steady_error);
  j["steady_spread"] = m.steady_spread;
  j["rms_error"] = m.rms_error;
  j["max_constraint_violation"] = m.max_constraint_violation;
  if (m.has_ed) j["ed_median_abs"] = vector_json(m.ed_median_abs);
  return j;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioParseError(e.what());
  }
  if (!j.is_object()) throw ScenarioParseError("scenario document must be an object");
  expect_keys(j, "scenario",
              {"plant_id", "controller", "constraints", "reference_spec", "reference_table",
               "disturbance_spec", "steps", "seed", "init_y", "init_u", "custom_y_gains",
               "custom_u_gains"});

  Scenario s;
  s.plant_id = from_token(kPlants, need(j, "plant_id", "scenario"), "plant_id");
  s.controller = parse_controller(need(j, "controller", "scenario"));
  if (j.contains("constraints")) s.constraints = parse_constraints(j["constraints"]);
  s.reference_spec =
      from_token(kReferences, need(j, "reference_spec", "scenario"), "reference_spec");
  if (j.contains("reference_table")) {
    const json& t = j["reference_table"];
    if (!t.is_array()) throw ScenarioParseError("reference_table must be an array");
    for (const auto& row : t) s.reference_table.push_back(as_vector(row, "reference_table"));
  }
  if (j.contains("disturbance_spec"))
    s.disturbance_spec = from_token(kDisturbances, j["disturbance_spec"], "disturbance_spec");
  s.steps = as_int(need(j, "steps", "scenario"), "steps");
  if (j.contains("seed")) {
    const json& sd = j["seed"];
    if (!sd.is_number_unsigned())
      throw ScenarioParseError("seed must be a non-negative integer");
    s.seed = sd.get<std::uint64_t>();
  }
  if (j.contains("init_y")) s.init_y = as_vector(j["init_y"], "init_y");
  if (j.contains("init_u")) s.init_u = as_vector(j["init_u"], "init_u");
  if (j.contains("custom_y_gains"))
    s.custom_y_gains = as_matrix_list(j["custom_y_gains"], "custom_y_gains");
  if (j.contains("custom_u_gains"))
    s.custom_u_gains = as_matrix_list(j["custom_u_gains"], "custom_u_gains");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioParseError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ScenarioParseError& e) {
    throw ScenarioParseError(path + ": " + e.what());
  }
}

std::vector<AnalysisEntry> analyze_at_init(const Scenario& s) {
  const ControllerConfig& cfg = s.controller;
  cfg.validate();
  if (cfg.pjm_mode != PjmMode::frozen)
    throw UnsupportedConfiguration(
        "analysis is defined for frozen coefficients; set pjm_mode to frozen");
  const PlantModel plant = scenario_plant(s);
  if (cfg.Ly != plant.ny + 1 || cfg.Lu != plant.nu + 1)
    throw InvalidScenario("analysis: pseudo orders must be ny+1 and nu+1 for the plant");

  const Vector y0 = s.init_y.size() > 0 ? s.init_y : Vector::Zero(plant.My);
  const Vector u0 = s.init_u.size() > 0 ? s.init_u : Vector::Zero(plant.Mu);
  HistoryWindow h;
  h.My = plant.My;
  h.Mu = plant.Mu;
  const int depth = std::max(plant.ny, plant.nu) + 3;
  for (int i = 0; i < depth; ++i) h.push(y0, u0, Vector::Zero(plant.My), depth);

  const PJM pjm = pjm_exact(plant, h);
  const std::vector<PJM> seq(static_cast<size_t>(cfg.N), pjm);
  const HorizonMatrices hm = horizon(seq, cfg.N);

  std::vector<AnalysisEntry> out;
  auto add = [&](const char* form, ClosedLoopModel (*build)(const PJM&, const HorizonMatrices&,
                                                            const ControllerConfig&)) {
    AnalysisEntry e;
    e.form = form;
    try {
      const ClosedLoopModel m = build(pjm, hm, cfg);
      e.stability = stability_check(m);
      for (InputKind kind : {InputKind::step, InputKind::ramp}) {
        try {
          const SteadyStateReport r = steady_state_error(m, kind);
          (kind == InputKind::step ? e.step_error : e.ramp_error) = r;
        } catch (const std::exception& ex) {
          e.notes.push_back(std::string(kind == InputKind::step ? "step: " : "ramp: ") +
                            ex.what());
        }
      }
      out.push_back(std::move(e));
    } catch (const std::exception& ex) {
      e.notes.push_back(ex.what());
      out.push_back(std::move(e));
    }
  };
  if (plant.My == 1) add("analysis1", &char_poly_analysis1);
  add("analysis2", &char_poly_analysis2);
  return out;
}

std::string scenario_to_json(const Scenario& s) { return scenario_json(s).dump(2) + "\n"; }

std::string report_to_json(const Report& r) {
  json j;
  j["scenario"] = scenario_json(r.scenario);
  if (r.run_metrics) j["metrics"] = metrics_json(*r.run_metrics);
  json entries = json::array();
  for (const AnalysisEntry& e : r.analyses) {
    json a;
    a["form"] = e.form;
    if (e.stability) a["stability"] = stability_json(*e.stability);
    if (e.step_error) a["step_error"] = steady_json(*e.step_error);
    if (e.ramp_error) a["ramp_error"] = steady_json(*e.ramp_error);
    if (!e.notes.empty()) a["notes"] = e.notes;
    entries.push_back(std::move(a));
  }
  j["analyses"] = std::move(entries);
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j.dump(2) + "\n";
}

}  // namespace edmpc
