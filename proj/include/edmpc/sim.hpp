#pragma once

#include <cstdint>
#include <ostream>

#include "edmpc/analysis.hpp"
#include "edmpc/control.hpp"
#include "edmpc/plants.hpp"

namespace edmpc {

struct WindowOutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct DivergenceDetected : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidScenario : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class PlantId { example1, example2, example3, example4, custom };
enum class ReferenceSpec { unit_ramp, eq57_composite, custom_table };
enum class DisturbanceSpec { none, eq60_known, eq64_whitenoise };

struct Scenario {
  PlantId plant_id = PlantId::example1;
  ControllerConfig controller;
  std::optional<ConstraintSet> constraints;
  ReferenceSpec reference_spec = ReferenceSpec::unit_ramp;
  /// reference_table[k-1] is the desired output at step k (custom_table only).
  std::vector<Vector> reference_table;
  DisturbanceSpec disturbance_spec = DisturbanceSpec::none;
  int steps = 1;
  std::uint64_t seed = 42;
  Vector init_y;
  Vector init_u;
  /// custom plant only: y(k+1) = sum_i y_gains[i] y(k-i) + sum_j u_gains[j] u(k-j).
  std::vector<Matrix> custom_y_gains;
  std::vector<Matrix> custom_u_gains;
};

/// Plant instance for a scenario's plant_id.
PlantModel scenario_plant(const Scenario& s);

struct TraceRow {
  int k = 0;
  Vector y;
  Vector y_star;
  Vector u;
  Vector w;
  Vector e;
  Vector du;
  double cost = 0.0;
  /// Coefficient blocks used by the controller this step, flattened;
  /// empty during warmup.
  Vector pjm_snapshot;
  int solver_iters = 0;
  double constraint_violation = 0.0;
  bool unconstrained_feasible = false;
};

struct Trace {
  int My = 1;
  int Mu = 1;
  PjmMode pjm_mode_used = PjmMode::frozen;
  std::vector<TraceRow> rows;
};

/// Runs the receding-horizon loop: the first 7 steps hold the initial
/// values, control starts at step 8. Reference lookups past the defined
/// range hold the final value. Throws DivergenceDetected when |y| passes
/// 1e6.
Trace run_closed_loop(const Scenario& s);

struct Metrics {
  int k_lo = 0;
  int k_hi = 0;
  /// Channelwise mean error over the window, plus the worst in-window spread.
  Vector steady_error;
  double steady_spread = 0.0;
  double rms_error = 0.0;
  double max_constraint_violation = 0.0;
  /// Channelwise median of |e(k) - e_d(k)| with e_d(k) = -dw(k) - dw(k-1),
  /// from the logged disturbances; needs window rows with k >= 3.
  bool has_ed = false;
  Vector ed_median_abs;
};

Metrics metrics(const Trace& t, int k_lo, int k_hi);

/// CSV export, header k,y1..,ystar1..,u1..,w1..,e1..,cost,iters, all values
/// with 17 significant digits; output is byte-stable across runs.
void write_trace_csv(const Trace& t, std::ostream& os);

}  // namespace edmpc
