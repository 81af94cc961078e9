#include "edmpc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>

#include "edmpc/prediction.hpp"

namespace edmpc {

namespace {

constexpr int kWarmupSteps = 7;

bool compensated_mode(ControlMode mode) {
  return mode == ControlMode::uiMPC_D || mode == ControlMode::ciMPC_D;
}

bool constrained_mode(ControlMode mode) {
  return mode == ControlMode::ciMPC || mode == ControlMode::ciMPC_D;
}

void check_scenario(const Scenario& s, const PlantModel& plant) {
  if (s.steps < 1) throw InvalidScenario("scenario: steps must be at least 1");
  s.controller.validate();
  if (s.controller.Ly != plant.ny + 1 || s.controller.Lu != plant.nu + 1)
    throw InvalidScenario("scenario: pseudo orders must be ny+1 and nu+1 for the plant");
  if (constrained_mode(s.controller.mode) && !s.constraints)
    throw InvalidScenario("scenario: constrained mode needs a constraint set");
  if (s.constraints) s.constraints->validate(plant.Mu);
  if (compensated_mode(s.controller.mode) && s.disturbance_spec != DisturbanceSpec::eq60_known)
    throw InvalidScenario("scenario: disturbance preview needs the known disturbance source");
  if (s.reference_spec == ReferenceSpec::custom_table) {
    if (static_cast<int>(s.reference_table.size()) < s.steps)
      throw InvalidScenario("scenario: reference table shorter than the run");
    for (const auto& r : s.reference_table)
      if (r.size() != plant.My) throw InvalidScenario("scenario: reference table width mismatch");
  }
  if (s.reference_spec == ReferenceSpec::unit_ramp && plant.My != 1)
    throw InvalidScenario("scenario: the ramp reference is single-channel");
  if (s.reference_spec == ReferenceSpec::eq57_composite && plant.My != 2)
    throw InvalidScenario("scenario: the composite reference is two-channel");
  if (s.disturbance_spec != DisturbanceSpec::none && plant.My != 2)
    throw InvalidScenario("scenario: the bundled disturbance sources are two-channel");
  if (s.init_y.size() > 0 && s.init_y.size() != plant.My)
    throw InvalidScenario("scenario: init_y size mismatch");
  if (s.init_u.size() > 0 && s.init_u.size() != plant.Mu)
    throw InvalidScenario("scenario: init_u size mismatch");
}

void format_value(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

PlantModel scenario_plant(const Scenario& s) {
  switch (s.plant_id) {
    case PlantId::example1:
      return make_example1();
    case PlantId::example2:
    case PlantId::example3:
      return make_example2();
    case PlantId::example4:
      return make_example4();
    case PlantId::custom:
      return make_custom_linear(s.custom_y_gains, s.custom_u_gains);
  }
  throw InvalidScenario("scenario: unknown plant");
}

Trace run_closed_loop(const Scenario& s) {
  const PlantModel plant = scenario_plant(s);
  check_scenario(s, plant);
  const ControllerConfig& cfg = s.controller;
  const int My = plant.My;
  const int Mu = plant.Mu;
  const int N = cfg.N;

  const Vector y0 = s.init_y.size() > 0 ? s.init_y : Vector::Zero(My);
  const Vector u0 = s.init_u.size() > 0 ? s.init_u : Vector::Zero(Mu);
  WhiteNoise rng(s.seed);

  // Reference with held final value; only the loop's own horizon looks past
  // the end of the run.
  auto ref_at = [&](int k) -> Vector {
    switch (s.reference_spec) {
      case ReferenceSpec::unit_ramp:
        return reference_unit_ramp(k);
      case ReferenceSpec::eq57_composite:
        return reference_eq57(std::min(k, 700));
      case ReferenceSpec::custom_table:
        return s.reference_table[static_cast<size_t>(
            std::min(k, static_cast<int>(s.reference_table.size())) - 1)];
    }
    throw InvalidScenario("scenario: unknown reference");
  };
  // True disturbance entering y(k); the held warmup rows see none.
  auto w_at = [&](int k) -> Vector {
    if (k <= kWarmupSteps) return Vector::Zero(My);
    switch (s.disturbance_spec) {
      case DisturbanceSpec::none:
        return Vector::Zero(My);
      case DisturbanceSpec::eq60_known:
        return disturbance_eq60(k - 1);
      case DisturbanceSpec::eq64_whitenoise:
        return rng.draw();  // one fresh draw per plant step, in step order
    }
    throw InvalidScenario("scenario: unknown disturbance");
  };

  Trace tr;
  tr.My = My;
  tr.Mu = Mu;
  tr.pjm_mode_used = cfg.pjm_mode;
  tr.rows.reserve(static_cast<size_t>(s.steps));

  HistoryWindow h;
  h.My = My;
  h.Mu = Mu;
  const int keep = s.steps + 2;

  for (int k = 1; k <= std::min(kWarmupSteps, s.steps); ++k) {
    h.push(y0, u0, Vector::Zero(My), keep);
    TraceRow row;
    row.k = k;
    row.y = y0;
    row.y_star = ref_at(k);
    row.u = u0;
    row.w = Vector::Zero(My);
    row.e = row.y_star - row.y;
    row.du = Vector::Zero(Mu);
    tr.rows.push_back(std::move(row));
  }

  Vector warm_plan;
  for (int k = kWarmupSteps + 1; k <= s.steps; ++k) {
    const Vector w_k = w_at(k);
    const Vector y_k = plant.step(h.y_buf, h.u_buf, w_k);
    if (y_k.lpNorm<Eigen::Infinity>() > tol::divergence_guard) {
      std::ostringstream msg;
      msg << "run_closed_loop: output magnitude " << y_k.lpNorm<Eigen::Infinity>()
          << " at step " << k << " exceeds the divergence guard";
      throw DivergenceDetected(msg.str());
    }

    // Decision window: newest input slot holds the still-undecided u(k),
    // approximated by u(k-1).
    HistoryWindow hc;
    hc.My = My;
    hc.Mu = Mu;
    hc.y_buf = h.y_buf;
    hc.y_buf.insert(hc.y_buf.begin(), y_k);
    hc.u_buf = h.u_buf;
    hc.u_buf.insert(hc.u_buf.begin(), h.u_buf.front());
    const PJM pjm_now = pjm_exact(plant, hc);
    const LiftedState dx = lifted_state_from(hc, cfg.Ly, cfg.Lu);
    const Vector u_prev = h.u_buf.front();

    Vector ystar_stack(static_cast<Eigen::Index>(N) * My);
    for (int i = 1; i <= N; ++i) ystar_stack.segment((i - 1) * My, My) = ref_at(k + i);

    Vector dw_hat;
    if (compensated_mode(cfg.mode)) {
      dw_hat = Vector(static_cast<Eigen::Index>(N) * My);
      Vector prev = w_k;
      for (int i = 1; i <= N; ++i) {
        const Vector next = disturbance_eq60(k + i - 1);
        dw_hat.segment((i - 1) * My, My) = next - prev;
        prev = next;
      }
    }

    auto solve = [&](const HorizonMatrices& hm, const Vector& warm) {
      if (constrained_mode(cfg.mode))
        return constrained_step(hm, cfg, *s.constraints, ystar_stack, y_k, dx, u_prev, dw_hat,
                                warm);
      return unconstrained_step(hm, cfg, ystar_stack, y_k, dx, u_prev, dw_hat);
    };

    std::vector<PJM> seq(static_cast<size_t>(N), pjm_now);
    ControlStep st = solve(horizon(seq, N), warm_plan);
    int iters_used = st.solver_iters;

    if (cfg.pjm_mode == PjmMode::fixed_point && N >= 2) {
      for (int it = 1; it <= tol::refine_max_iters; ++it) {
        iters_used = it;
        // Rebuild the future blocks from the plan's predicted trajectory.
        for (int i = 1; i < N; ++i) {
          VecSeq y_hist;
          for (int j = i; j >= 1; --j)
            y_hist.push_back(st.predicted_Y.segment((j - 1) * My, My));
          y_hist.push_back(y_k);
          y_hist.insert(y_hist.end(), h.y_buf.begin(), h.y_buf.end());

          VecSeq u_hist;
          Vector u_run = u_prev;
          VecSeq planned;
          for (int j = 0; j <= i; ++j) {
            u_run += st.dU.segment(j * Mu, Mu);
            planned.push_back(u_run);
          }
          for (int j = i; j >= 0; --j) u_hist.push_back(planned[static_cast<size_t>(j)]);
          u_hist.insert(u_hist.end(), h.u_buf.begin(), h.u_buf.end());

          seq[static_cast<size_t>(i)] = plant.exact_pjm(y_hist, u_hist);
        }
        const ControlStep next = solve(horizon(seq, N), st.dU);
        const double change = (next.dU - st.dU).lpNorm<Eigen::Infinity>();
        st = next;
        if (change < tol::refine_du) break;
      }
    }

    const Vector u_k = receding_horizon_apply(st);
    h.push(y_k, u_k, w_k, keep);

    // The next step resumes from this plan shifted past the applied move.
    warm_plan = Vector::Zero(st.dU.size());
    if (N >= 2) warm_plan.head((N - 1) * Mu) = st.dU.tail((N - 1) * Mu);

    TraceRow row;
    row.k = k;
    row.y = y_k;
    row.y_star = ref_at(k);
    row.u = u_k;
    row.w = w_k;
    row.e = row.y_star - row.y;
    row.du = st.dU.head(Mu);
    row.cost = st.cost;
    row.pjm_snapshot = pjm_now.flattened();
    row.solver_iters = iters_used;
    if (s.constraints)
      row.constraint_violation = constraint_violation(*s.constraints, st.dU, u_prev, N, Mu);
    row.unconstrained_feasible = constrained_mode(cfg.mode) && st.solver_iters == 0;
    tr.rows.push_back(std::move(row));
  }
  return tr;
}

Metrics metrics(const Trace& t, int k_lo, int k_hi) {
  const int steps = static_cast<int>(t.rows.size());
  if (k_lo < 1 || k_hi > steps || k_lo > k_hi)
    throw WindowOutOfRange("metrics: window outside the trace");

  Metrics m;
  m.k_lo = k_lo;
  m.k_hi = k_hi;
  const int n = k_hi - k_lo + 1;

  m.steady_error = Vector::Zero(t.My);
  Vector lo = Vector::Constant(t.My, std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(t.My, -std::numeric_limits<double>::infinity());
  double sumsq = 0.0;
  for (int k = k_lo; k <= k_hi; ++k) {
    const TraceRow& row = t.rows[static_cast<size_t>(k - 1)];
    m.steady_error += row.e;
    lo = lo.cwiseMin(row.e);
    hi = hi.cwiseMax(row.e);
    sumsq += row.e.squaredNorm();
    m.max_constraint_violation = std::max(m.max_constraint_violation, row.constraint_violation);
  }
  m.steady_error /= n;
  m.steady_spread = (hi - lo).maxCoeff();
  m.rms_error = std::sqrt(sumsq / (static_cast<double>(n) * t.My));

  std::vector<std::vector<double>> devs(static_cast<size_t>(t.My));
  for (int k = std::max(k_lo, 3); k <= k_hi; ++k) {
    const Vector& w0 = t.rows[static_cast<size_t>(k - 1)].w;
    const Vector& w2 = t.rows[static_cast<size_t>(k - 3)].w;
    const Vector ed = w2 - w0;  // -dw(k) - dw(k-1) telescopes
    const Vector& e = t.rows[static_cast<size_t>(k - 1)].e;
    for (int c = 0; c < t.My; ++c)
      devs[static_cast<size_t>(c)].push_back(std::abs(e(c) - ed(c)));
  }
  if (!devs[0].empty()) {
    m.has_ed = true;
    m.ed_median_abs = Vector(t.My);
    for (int c = 0; c < t.My; ++c) {
      auto& d = devs[static_cast<size_t>(c)];
      std::sort(d.begin(), d.end());
      const size_t mid = d.size() / 2;
      m.ed_median_abs(c) =
          d.size() % 2 == 1 ? d[mid] : 0.5 * (d[mid - 1] + d[mid]);
    }
  }
  return m;
}

void write_trace_csv(const Trace& t, std::ostream& os) {
  std::string out = "k";
  auto cols = [&out](const char* stem, int n) {
    for (int c = 1; c <= n; ++c) {
      out += ',';
      out += stem;
      out += std::to_string(c);
    }
  };
  cols("y", t.My);
  cols("ystar", t.My);
  cols("u", t.Mu);
  cols("w", t.My);
  cols("e", t.My);
  out += ",cost,iters\n";

  for (const TraceRow& row : t.rows) {
    out += std::to_string(row.k);
    auto vec = [&out](const Vector& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        out += ',';
        format_value(out, v(i));
      }
    };
    vec(row.y);
    vec(row.y_star);
    vec(row.u);
    vec(row.w);
    vec(row.e);
    out += ',';
    format_value(out, row.cost);
    out += ',';
    out += std::to_string(row.solver_iters);
    out += '\n';
  }
  os << out;
}

}  // namespace edmpc
