#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "edmpc/scenario_io.hpp"

namespace fs = std::filesystem;

namespace {

using namespace edmpc;

#ifndef EDMPC_FIXTURE_DIR
#define EDMPC_FIXTURE_DIR "fixtures"
#endif

int default_window_lo(int steps) { return std::min(200, steps / 2 + 1); }

Report make_run_report(const Scenario& s, const Trace& t) {
  Report r;
  r.scenario = s;
  r.run_metrics = metrics(t, default_window_lo(s.steps), s.steps);
  if (s.controller.pjm_mode == PjmMode::frozen) {
    try {
      r.analyses = analyze_at_init(s);
    } catch (const std::exception& e) {
      r.notes.push_back(std::string("analysis skipped: ") + e.what());
    }
  } else {
    r.notes.push_back("analysis skipped: coefficients not frozen");
  }
  return r;
}

void write_outputs(const Scenario& s, const Trace& t, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream csv(dir / "trace.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "trace.csv").string());
  write_trace_csv(t, csv);
  std::ofstream rep(dir / "report.json");
  if (!rep) throw std::runtime_error("cannot write " + (dir / "report.json").string());
  rep << report_to_json(make_run_report(s, t));
}

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

void print_checks(const std::vector<Check>& checks) {
  for (const Check& c : checks)
    std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << c.detail << "\n";
}

bool all_pass(const std::vector<Check>& checks) {
  for (const Check& c : checks)
    if (!c.pass) return false;
  return true;
}

Scenario load_fixture(const fs::path& dir, const std::string& name) {
  return load_scenario((dir / name).string());
}

/// Worst deviation of the tracking error from `target` over steps [lo, hi].
double max_error_deviation(const Trace& t, int lo, int hi, double target) {
  double worst = 0.0;
  for (int k = lo; k <= hi; ++k)
    worst = std::max(worst,
                     std::abs(t.rows[static_cast<size_t>(k - 1)].e(0) - target));
  return worst;
}

double max_violation(const Trace& t) {
  double worst = 0.0;
  for (const TraceRow& row : t.rows) worst = std::max(worst, row.constraint_violation);
  return worst;
}

int cmd_run(const std::string& file, const std::string& out, int steps_override,
            long long seed_override) {
  Scenario s = load_scenario(file);
  if (steps_override > 0) s.steps = steps_override;
  if (seed_override >= 0) s.seed = static_cast<std::uint64_t>(seed_override);
  const Trace t = run_closed_loop(s);
  write_outputs(s, t, out);
  std::cout << "wrote " << (fs::path(out) / "trace.csv").string() << " and "
            << (fs::path(out) / "report.json").string() << " (" << t.rows.size()
            << " steps)\n";
  return 0;
}

int cmd_analyze(const std::string& file) {
  const Scenario s = load_scenario(file);
  Report r;
  r.scenario = s;
  r.analyses = analyze_at_init(s);
  std::cout << report_to_json(r);
  return 0;
}

std::vector<Check> reproduce_table1(const fs::path& fixture_dir, const fs::path& out) {
  const struct {
    const char* name;
    double lambda;
  } cases[] = {{"example1_lambda0.1.json", 0.1},
               {"example1_lambda1.json", 1.0},
               {"example1_lambda2.json", 2.0}};
  std::vector<Check> checks;
  std::cout << "lambda      measured e        analytic 2*lambda/15\n";
  for (const auto& c : cases) {
    const Scenario s = load_fixture(fixture_dir, c.name);
    const Trace t = run_closed_loop(s);
    write_outputs(s, t, out / fs::path(c.name).stem());
    const double analytic = 2.0 * c.lambda / 15.0;
    const Metrics m = metrics(t, 200, s.steps);
    const double dev = max_error_deviation(t, 200, s.steps, analytic);
    char line[128];
    std::snprintf(line, sizeof(line), "%-8g    %-14.10f    %-14.10f", c.lambda,
                  m.steady_error(0), analytic);
    std::cout << line << "\n";
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "max |e(k) - %.10f| over k in [200,%d] = %.3g (tolerance 1e-6)", analytic,
                  s.steps, dev);
    checks.push_back({c.name, dev <= 1e-6, detail});
  }
  return checks;
}

std::vector<Check> reproduce_example1(const fs::path& fixture_dir, const fs::path& out,
                                      bool q_last) {
  const std::string name = q_last ? "example1_lambda1_qlast.json" : "example1_lambda1.json";
  const Scenario s = load_fixture(fixture_dir, name);
  const Trace t = run_closed_loop(s);
  write_outputs(s, t, out / fs::path(name).stem());
  const double dev = max_error_deviation(t, 200, s.steps, 2.0 / 15.0);
  char detail[128];
  std::snprintf(detail, sizeof(detail), "max |e(k) - 2/15| = %.3g (tolerance 1e-6)", dev);
  return {{name, dev <= 1e-6, detail}};
}

std::vector<Check> reproduce_example2(const fs::path& fixture_dir, const fs::path& out) {
  std::vector<Check> checks;
  for (const char* name : {"example2_uimpc.json", "example2_cimpc.json"}) {
    const Scenario s = load_fixture(fixture_dir, name);
    const Trace t = run_closed_loop(s);
    write_outputs(s, t, out / fs::path(name).stem());
    const Metrics m = metrics(t, default_window_lo(s.steps), s.steps);
    char detail[160];
    if (s.constraints) {
      const double v = max_violation(t);
      std::snprintf(detail, sizeof(detail),
                    "completed %d steps, max constraint violation %.3g (tolerance 1e-8)",
                    s.steps, v);
      checks.push_back({name, v <= 1e-8, detail});
    } else {
      std::snprintf(detail, sizeof(detail), "completed %d steps, rms error %.4g", s.steps,
                    m.rms_error);
      checks.push_back({name, true, detail});
    }
  }
  return checks;
}

std::vector<Check> reproduce_example3(const fs::path& fixture_dir, const fs::path& out) {
  std::vector<Check> checks;

  const Scenario comp = load_fixture(fixture_dir, "example3_uimpcd.json");
  const Trace t_comp = run_closed_loop(comp);
  write_outputs(comp, t_comp, out / "example3_uimpcd");

  const Scenario plain = load_fixture(fixture_dir, "example3_uncompensated.json");
  const Trace t_plain = run_closed_loop(plain);
  write_outputs(plain, t_plain, out / "example3_uncompensated");

  const double rms_comp = metrics(t_comp, 101, comp.steps).rms_error;
  const double rms_plain = metrics(t_plain, 101, plain.steps).rms_error;
  const double ratio = rms_comp > 0.0 ? rms_plain / rms_comp
                                      : std::numeric_limits<double>::infinity();
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "rms(k>100) %.3g uncompensated vs %.3g compensated, ratio %.1f (needs >= 100)",
                rms_plain, rms_comp, ratio);
  checks.push_back({"example3 disturbance rejection", ratio >= 100.0, detail});

  const Scenario ci = load_fixture(fixture_dir, "example3_cimpcd.json");
  const Trace t_ci = run_closed_loop(ci);
  write_outputs(ci, t_ci, out / "example3_cimpcd");
  const double v = max_violation(t_ci);
  std::snprintf(detail, sizeof(detail), "max constraint violation %.3g (tolerance 1e-8)", v);
  checks.push_back({"example3_cimpcd.json", v <= 1e-8, detail});
  return checks;
}

std::vector<Check> reproduce_example4(const fs::path& fixture_dir, const fs::path& out) {
  const Scenario s = load_fixture(fixture_dir, "example4.json");
  const Trace t = run_closed_loop(s);
  write_outputs(s, t, out / "example4");
  const Metrics m = metrics(t, 21, s.steps);
  char detail[160];
  if (!m.has_ed) return {{"example4.json", false, "disturbance statistics unavailable"}};
  std::snprintf(detail, sizeof(detail),
                "median |e_i(k) - e_di(k)| over k>20 = [%.3g, %.3g] (tolerance 1e-6)",
                m.ed_median_abs(0), m.ed_median_abs(1));
  const bool ok = m.ed_median_abs.maxCoeff() <= 1e-6;
  return {{"example4.json", ok, detail}};
}

int cmd_reproduce(const std::string& target, const std::string& out_str,
                  const std::string& fixtures_str, bool q_last) {
  const fs::path out(out_str);
  const fs::path fixture_dir(fixtures_str);
  std::vector<Check> checks;
  if (target == "table1")
    checks = reproduce_table1(fixture_dir, out);
  else if (target == "example1")
    checks = reproduce_example1(fixture_dir, out, q_last);
  else if (target == "example2")
    checks = reproduce_example2(fixture_dir, out);
  else if (target == "example3")
    checks = reproduce_example3(fixture_dir, out);
  else if (target == "example4")
    checks = reproduce_example4(fixture_dir, out);
  print_checks(checks);
  return all_pass(checks) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Receding-horizon control of incrementally linearized plants"};
  app.require_subcommand(1);

  std::string file;
  std::string out = ".";
  int steps_override = 0;
  long long seed_override = -1;

  CLI::App* run = app.add_subcommand("run", "Run a scenario file; write trace.csv and report.json");
  run->add_option("file", file, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory");
  run->add_option("--steps", steps_override, "override step count")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed_override, "override noise seed")
      ->check(CLI::NonNegativeNumber);

  std::string target;
  std::string fixtures = EDMPC_FIXTURE_DIR;
  bool q_last = false;
  CLI::App* rep = app.add_subcommand("reproduce", "Re-run a bundled experiment and check it");
  rep->add_option("target", target, "table1 or example1..example4")
      ->required()
      ->check(CLI::IsMember({"table1", "example1", "example2", "example3", "example4"}));
  rep->add_option("--out", out, "output directory");
  rep->add_option("--fixtures", fixtures, "scenario fixture directory");
  rep->add_flag("--q-last", q_last, "example1 only: weight only the last predicted output");

  CLI::App* ana = app.add_subcommand("analyze", "Print closed-loop analysis for a scenario");
  ana->add_option("file", file, "scenario file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(file, out, steps_override, seed_override);
    if (rep->parsed()) return cmd_reproduce(target, out, fixtures, q_last);
    if (ana->parsed()) return cmd_analyze(file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
