#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edmpc/sim.hpp"

namespace edmpc {

struct ScenarioParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Strict parse of a scenario document: unknown keys are rejected at every
/// level, enum tokens are validated, and missing optional keys take the
/// documented defaults (lambda 0, identity weights, frozen coefficients,
/// seed 42).
Scenario parse_scenario(const std::string& text);

/// parse_scenario on a file's contents; errors carry the path.
Scenario load_scenario(const std::string& path);

/// One closed-loop form evaluated at a fixed operating point. Pieces that
/// are undefined for the configuration are absent, with the reason in
/// notes.
struct AnalysisEntry {
  std::string form;
  std::optional<StabilityReport> stability;
  std::optional<SteadyStateReport> step_error;
  std::optional<SteadyStateReport> ramp_error;
  std::vector<std::string> notes;
};

/// Both closed-loop forms at the scenario's initial operating point.
/// Requires frozen coefficients; the operating point is the initial
/// history, so the result is exact for plants with constant coefficients
/// and a linearization snapshot otherwise.
std::vector<AnalysisEntry> analyze_at_init(const Scenario& s);

struct Report {
  Scenario scenario;
  std::optional<Metrics> run_metrics;
  std::vector<AnalysisEntry> analyses;
  std::vector<std::string> notes;
};

/// Resolved scenario back to its document form; parse_scenario on the
/// result reproduces the struct.
std::string scenario_to_json(const Scenario& s);

std::string report_to_json(const Report& r);

}  // namespace edmpc
