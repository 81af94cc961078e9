#include "edmpc/control.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace edmpc {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw DimensionMismatch(msg);
}

// Cumulative map S (U = S dU + u_prev stack) and its inverse, the block
// difference operator D.
Matrix cumulative_map(int N, int Mu) {
  Matrix s = Matrix::Zero(N * Mu, N * Mu);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j <= i; ++j)
      s.block(i * Mu, j * Mu, Mu, Mu) = Matrix::Identity(Mu, Mu);
  return s;
}

Matrix difference_map(int N, int Mu) {
  Matrix d = Matrix::Identity(N * Mu, N * Mu);
  for (int i = 1; i < N; ++i)
    d.block(i * Mu, (i - 1) * Mu, Mu, Mu) = -Matrix::Identity(Mu, Mu);
  return d;
}

struct BoxBall {
  int N = 1;
  int Mu = 1;
  Vector lo;  // per channel, -inf when absent
  Vector hi;  // per channel, +inf when absent
  bool box = false;
  std::optional<double> cap;

  Vector clamp_box(const Vector& u) const {
    if (!box) return u;
    Vector out = u;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      const int c = static_cast<int>(i % Mu);
      out(i) = std::min(std::max(out(i), lo(c)), hi(c));
    }
    return out;
  }

  Vector clamp_ball(const Vector& u) const {
    if (!cap) return u;
    const double nsq = u.squaredNorm();
    if (nsq <= *cap) return u;
    return u * std::sqrt(*cap / nsq);
  }

  Vector project(const Vector& u) const {
    if (!box) return clamp_ball(u);
    if (!cap) return clamp_box(u);
    // Alternating corrected projections converge to the projection onto the
    // intersection of the box and the ball.  The iterate can stall for a few
    // cycles while the corrections still move, so convergence is judged by
    // the corrections stabilizing, not by the iterate alone.
    Vector x = u;
    Vector p = Vector::Zero(u.size());
    Vector q = Vector::Zero(u.size());
    for (int it = 0; it < tol::dykstra_max_iters; ++it) {
      const Vector y = clamp_box(x + p);
      const Vector p_next = x + p - y;
      const Vector x_next = clamp_ball(y + q);
      const Vector q_next = y + q - x_next;
      const double change = std::max({(x_next - x).lpNorm<Eigen::Infinity>(),
                                      (p_next - p).lpNorm<Eigen::Infinity>(),
                                      (q_next - q).lpNorm<Eigen::Infinity>()});
      x = x_next;
      p = p_next;
      q = q_next;
      if (change < tol::dykstra_change) break;
    }
    return x;
  }

  double violation(const Vector& u) const {
    double v = 0.0;
    if (box)
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        const int c = static_cast<int>(i % Mu);
        v = std::max(v, std::max(lo(c) - u(i), u(i) - hi(c)));
      }
    if (cap) v = std::max(v, u.squaredNorm() - *cap);
    return std::max(v, 0.0);
  }
};

BoxBall make_boxball(const ConstraintSet& cset, int N, int Mu) {
  BoxBall bb;
  bb.N = N;
  bb.Mu = Mu;
  bb.box = cset.has_box();
  bb.cap = cset.energy_cap;
  const double inf = std::numeric_limits<double>::infinity();
  bb.lo = Vector::Constant(Mu, -inf);
  bb.hi = Vector::Constant(Mu, inf);
  if (cset.u_min.size() > 0) bb.lo = cset.u_min;
  if (cset.u_max.size() > 0) bb.hi = cset.u_max;
  return bb;
}

}  // namespace

Vector ControllerConfig::q_diag(int My) const {
  const Eigen::Index want = static_cast<Eigen::Index>(N) * My;
  if (q_weights.size() == 0) return Vector::Ones(want);
  require(q_weights.size() == want, "ControllerConfig: weight diagonal must have length N*My");
  return q_weights;
}

void ControllerConfig::validate() const {
  require(N >= 1, "ControllerConfig: N must be at least 1");
  require(Ly >= 1 && Lu >= 1, "ControllerConfig: pseudo orders must be positive");
  require(lambda >= 0.0 && std::isfinite(lambda), "ControllerConfig: lambda must be >= 0");
  require(ridge >= 0.0 && std::isfinite(ridge), "ControllerConfig: ridge must be >= 0");
  for (Eigen::Index i = 0; i < q_weights.size(); ++i)
    require(q_weights(i) >= 0.0 && std::isfinite(q_weights(i)),
            "ControllerConfig: weights must be >= 0");
}

void ConstraintSet::validate(int Mu) const {
  if (u_min.size() > 0)
    require(u_min.size() == Mu, "ConstraintSet: u_min must have one entry per input channel");
  if (u_max.size() > 0)
    require(u_max.size() == Mu, "ConstraintSet: u_max must have one entry per input channel");
  if (u_min.size() > 0 && u_max.size() > 0)
    for (Eigen::Index c = 0; c < u_min.size(); ++c)
      require(u_min(c) <= u_max(c), "ConstraintSet: u_min must not exceed u_max");
  if (energy_cap) require(*energy_cap > 0.0, "ConstraintSet: energy cap must be positive");
}

double cost(const ControllerConfig& cfg, const Vector& Ystar, const Vector& Ypred,
            const Vector& dU) {
  cfg.validate();
  require(Ystar.size() == Ypred.size(), "cost: reference and prediction sizes differ");
  require(Ystar.size() % cfg.N == 0, "cost: stacked output length must be a multiple of N");
  require(dU.size() % cfg.N == 0, "cost: stacked input length must be a multiple of N");
  const int My = static_cast<int>(Ystar.size()) / cfg.N;
  const Vector qd = cfg.q_diag(My);
  const Vector e = Ystar - Ypred;
  return e.dot(qd.cwiseProduct(e)) + cfg.lambda * dU.squaredNorm();
}

Matrix gain(const HorizonMatrices& hm, const ControllerConfig& cfg) {
  cfg.validate();
  require(cfg.N == hm.N, "gain: config and horizon disagree on N");
  const Vector qd = cfg.q_diag(hm.My);
  const Matrix phiTq = hm.PhiT.transpose() * qd.asDiagonal();
  Matrix normal = phiTq * hm.PhiT;
  normal.diagonal().array() += cfg.lambda + cfg.ridge;
  try {
    return solve_linear(normal, phiTq);
  } catch (const SingularMatrix&) {
    throw SingularNormalMatrix(
        "gain: normal matrix is singular; set lambda > 0 or ridge > 0 to regularize");
  }
}

ControlStep unconstrained_step(const HorizonMatrices& hm, const ControllerConfig& cfg,
                               const Vector& Ystar, const Vector& y_now, const LiftedState& s,
                               const Vector& u_prev, const Vector& dW_hat) {
  require(Ystar.size() == static_cast<Eigen::Index>(hm.N) * hm.My,
          "unconstrained_step: reference stack size mismatch");
  require(u_prev.size() == hm.Mu, "unconstrained_step: previous input size mismatch");
  const Vector fr = free_response(hm, y_now, s, dW_hat);
  const Matrix p = gain(hm, cfg);

  ControlStep out;
  out.dU = p * (Ystar - fr);
  out.u_applied = u_prev + out.dU.head(hm.Mu);
  out.predicted_Y = fr + hm.PhiT * out.dU;
  out.cost = cost(cfg, Ystar, out.predicted_Y, out.dU);
  out.solver_iters = 0;
  return out;
}

ControlStep constrained_step(const HorizonMatrices& hm, const ControllerConfig& cfg,
                             const ConstraintSet& cset, const Vector& Ystar,
                             const Vector& y_now, const LiftedState& s, const Vector& u_prev,
                             const Vector& dW_hat, const Vector& warm_dU) {
  const int N = hm.N;
  const int Mu = hm.Mu;
  cset.validate(Mu);
  require(u_prev.size() == Mu, "constrained_step: previous input size mismatch");

  const BoxBall bb = make_boxball(cset, N, Mu);
  if (bb.cap) {
    // The feasible set is empty exactly when the box's smallest-norm stack
    // already exceeds the energy cap.
    const Vector closest = bb.clamp_box(Vector::Zero(static_cast<Eigen::Index>(N) * Mu));
    if (closest.squaredNorm() > *bb.cap + tol::constraint_feas)
      throw InfeasibleConstraints("constrained_step: box and energy cap do not intersect");
  }

  Vector u_stack(static_cast<Eigen::Index>(N) * Mu);
  for (int i = 0; i < N; ++i) u_stack.segment(i * Mu, Mu) = u_prev;

  const Matrix smap = cumulative_map(N, Mu);
  const Matrix dmap = difference_map(N, Mu);

  ControlStep un = unconstrained_step(hm, cfg, Ystar, y_now, s, u_prev, dW_hat);
  if (bb.violation(smap * un.dU + u_stack) <= tol::constraint_feas) return un;

  const Vector fr = free_response(hm, y_now, s, dW_hat);
  const Vector qd = cfg.q_diag(hm.My);
  const Matrix g = hm.PhiT * dmap;
  const Matrix gtq = g.transpose() * qd.asDiagonal();
  const Matrix dtd = dmap.transpose() * dmap;
  // The solver minimizes the same ridge-regularized objective the explicit
  // gain solves, so the two agree at the feasibility margin.
  const double reg = cfg.lambda + cfg.ridge;
  const Matrix hess = 2.0 * (gtq * g + reg * dtd);
  double lbound = 0.0;
  for (Eigen::Index r = 0; r < hess.rows(); ++r)
    lbound = std::max(lbound, hess.row(r).cwiseAbs().sum());
  if (lbound <= 0.0) lbound = 1.0;
  const double base_step = 1.0 / lbound;

  auto grad_at = [&](const Vector& u) {
    const Vector shift = u - u_stack;
    return Vector(2.0 * (gtq * (fr + g * shift - Ystar)) + 2.0 * reg * (dtd * shift));
  };
  auto value_at = [&](const Vector& u) {
    const Vector shift = u - u_stack;
    const Vector r = fr + g * shift - Ystar;
    return r.dot(qd.cwiseProduct(r)) + reg * shift.dot(dtd * shift);
  };

  Vector u0 = smap * un.dU + u_stack;
  if (warm_dU.size() == static_cast<Eigen::Index>(N) * Mu) u0 = smap * warm_dU + u_stack;
  Vector u = bb.project(u0);

  // Projected gradient with spectral step lengths; a nonmonotone backtrack
  // keeps them safe, and stationarity is measured with the fixed safe step.
  std::array<double, 8> recent;
  recent.fill(value_at(u));
  size_t ri = 0;
  double t = base_step;
  Vector grad = grad_at(u);
  double grad_norm = grad.lpNorm<Eigen::Infinity>();
  int iters = 0;
  bool converged = false;
  while (iters < tol::pgd_max_iters) {
    ++iters;
    const Vector probe = bb.project(u - base_step * grad);
    if ((probe - u).lpNorm<Eigen::Infinity>() < tol::pgd_step_change) {
      converged = true;
      break;
    }
    double tt = std::min(std::max(t, base_step), 1e8 * base_step);
    Vector u_next = bb.project(u - tt * grad);
    double f_next = value_at(u_next);
    const double f_worst = *std::max_element(recent.begin(), recent.end());
    for (int bt = 0; bt < 60 && f_next > f_worst + 1e-4 * grad.dot(u_next - u); ++bt) {
      tt *= 0.5;
      u_next = bb.project(u - tt * grad);
      f_next = value_at(u_next);
    }
    const Vector g_next = grad_at(u_next);
    const Vector su = u_next - u;
    const double sy = su.dot(g_next - grad);
    t = sy > 0.0 ? su.squaredNorm() / sy : base_step;
    u = u_next;
    grad = g_next;
    grad_norm = grad.lpNorm<Eigen::Infinity>();
    recent[ri] = f_next;
    ri = (ri + 1) % recent.size();
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "constrained_step: no convergence after " << iters
        << " iterations; last gradient norm " << grad_norm << ", last |u| "
        << u.lpNorm<Eigen::Infinity>();
    throw NotConverged(msg.str());
  }

  ControlStep out;
  out.dU = dmap * (u - u_stack);
  out.u_applied = u.head(Mu);
  out.predicted_Y = fr + hm.PhiT * out.dU;
  out.cost = cost(cfg, Ystar, out.predicted_Y, out.dU);
  out.solver_iters = iters;
  return out;
}

Vector receding_horizon_apply(const ControlStep& step) { return step.u_applied; }

double constraint_violation(const ConstraintSet& cset, const Vector& dU, const Vector& u_prev,
                            int N, int Mu) {
  cset.validate(Mu);
  require(dU.size() == static_cast<Eigen::Index>(N) * Mu,
          "constraint_violation: plan size mismatch");
  require(u_prev.size() == Mu, "constraint_violation: previous input size mismatch");
  Vector u_stack(dU.size());
  for (int i = 0; i < N; ++i) u_stack.segment(i * Mu, Mu) = u_prev;
  return make_boxball(cset, N, Mu).violation(cumulative_map(N, Mu) * dU + u_stack);
}

}  // namespace edmpc
