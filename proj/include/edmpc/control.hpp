#pragma once

#include <optional>

#include "edmpc/prediction.hpp"

namespace edmpc {

struct SingularNormalMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleConstraints : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotConverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ControlMode { uiMPC, ciMPC, uiMPC_D, ciMPC_D };
enum class PjmMode { frozen, fixed_point };

struct ControllerConfig {
  int N = 1;
  /// Diagonal of the output weight, length N*My; empty means identity.
  Vector q_weights;
  double lambda = 0.0;
  int Ly = 1;
  int Lu = 1;
  ControlMode mode = ControlMode::uiMPC;
  PjmMode pjm_mode = PjmMode::frozen;
  /// Extra diagonal added to the normal matrix only (not part of the cost).
  double ridge = 0.0;

  Vector q_diag(int My) const;
  void validate() const;
};

/// Box bounds act on the absolute inputs u(k+i) over the whole horizon;
/// the energy cap bounds the stacked squared norm sum_i |u(k+i)|^2.
struct ConstraintSet {
  Vector u_min;
  Vector u_max;
  std::optional<double> energy_cap;

  bool has_box() const { return u_min.size() > 0 || u_max.size() > 0; }
  void validate(int Mu) const;
};

struct ControlStep {
  Vector dU;
  Vector u_applied;
  Vector predicted_Y;
  double cost = 0.0;
  int solver_iters = 0;
};

/// J = (Y* - Ypred)' Q (Y* - Ypred) + lambda dU' dU.
double cost(const ControllerConfig& cfg, const Vector& Ystar, const Vector& Ypred,
            const Vector& dU);

/// P = [PhiT' Q PhiT + (lambda + ridge) I]^-1 PhiT' Q.
Matrix gain(const HorizonMatrices& hm, const ControllerConfig& cfg);

/// Explicit law dU = P [Y* - E y(k) - PsiT dx - PhiWT dW_hat], then
/// u(k) = u(k-1) + first block of dU. Empty dW_hat means no preview.
ControlStep unconstrained_step(const HorizonMatrices& hm, const ControllerConfig& cfg,
                               const Vector& Ystar, const Vector& y_now, const LiftedState& s,
                               const Vector& u_prev, const Vector& dW_hat);

/// Minimizes the same cost subject to cset via projected gradient descent on
/// the cumulative input stack, projecting onto box-and-ball with alternating
/// corrections. Returns the unconstrained solution untouched when it is
/// already feasible. A warm_dU of matching size seeds the iteration; pass
/// empty to start from the projected unconstrained solution.
ControlStep constrained_step(const HorizonMatrices& hm, const ControllerConfig& cfg,
                             const ConstraintSet& cset, const Vector& Ystar,
                             const Vector& y_now, const LiftedState& s, const Vector& u_prev,
                             const Vector& dW_hat, const Vector& warm_dU = Vector());

/// First input block of the plan; the rest is discarded and recomputed.
Vector receding_horizon_apply(const ControlStep& step);

/// Worst violation of cset by the plan's cumulative input stack (0 when
/// satisfied). Energy excess is reported in squared-norm units.
double constraint_violation(const ConstraintSet& cset, const Vector& dU, const Vector& u_prev,
                            int N, int Mu);

}  // namespace edmpc
