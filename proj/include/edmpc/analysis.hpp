#pragma once

#include <complex>
#include <optional>

#include "edmpc/control.hpp"
#include "edmpc/polynomial.hpp"

namespace edmpc {

struct NotSISO : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnsupportedConfiguration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class AnalysisForm { analysis1, analysis2 };

/// Closed-loop operator identity den * y = ref_num * y* (+ dist_num * w).
/// All entries are stored as plain delay polynomials after multiplying the
/// whole identity by z^-(N-1); the extra factor only adds roots at z = 0.
struct ClosedLoopModel {
  AnalysisForm form = AnalysisForm::analysis1;
  int My = 1;
  ZPolyMatrix char_poly;
  ZPolyMatrix ref_numerator;
  std::optional<ZPolyMatrix> dist_numerator;
};

struct StabilityReport {
  std::vector<std::complex<double>> roots;
  double max_modulus = 0.0;
  bool stable = false;
};

struct SteadyStateReport {
  InputKind input_kind = InputKind::step;
  double limit_error = 0.0;
  bool divergent = false;
};

/// Matrix numerator over a scalar denominator.
struct ZTransfer {
  ZPolyMatrix num;
  ZPolynomial den;
};

/// Scalar closed-loop form built from the full gain row applied to the
/// horizon operators: den = S*(1 - z^-1 phi_y)Delta + z^-1 phi_u (pE + a
/// Delta) with S = 1 + z^-1 (p Psi2 Tu), a = p Psi1 Ty, p the first gain
/// row. Requires one input and one output channel.
ClosedLoopModel char_poly_analysis1(const PJM& pjm, const HorizonMatrices& hm,
                                    const ControllerConfig& cfg);

/// Alternative form den = lambda Delta (I - z^-1 phi_y) + phi_u W with
/// W the first input block of PhiT contracted against Q and the prediction
/// stack; valid for any channel counts.
ClosedLoopModel char_poly_analysis2(const PJM& pjm, const HorizonMatrices& hm,
                                    const ControllerConfig& cfg);

/// Roots of det(char_poly) in the z plane; stable when all moduli are below
/// 1 - 1e-9.
StabilityReport stability_check(const ClosedLoopModel& m);

/// Limit of e(k) = y*(k) - y(k) for a step or unit-slope ramp reference via
/// the final value theorem. Requires a stable model.
SteadyStateReport steady_state_error(const ClosedLoopModel& m, InputKind input_kind);

/// Transfer from the disturbance w to the output for the configurations the
/// source analyses cover; everything else raises UnsupportedConfiguration.
ZTransfer disturbance_transfer(const ClosedLoopModel& m, const ControllerConfig& cfg,
                               bool compensated, bool rank_full);

/// Scalar reference / error transfers of a single-channel model.
ZRational reference_transfer(const ClosedLoopModel& m);
ZRational error_transfer(const ClosedLoopModel& m);

}  // namespace edmpc
