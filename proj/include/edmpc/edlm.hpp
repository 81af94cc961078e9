#pragma once

#include <functional>
#include <vector>

#include "edmpc/numeric.hpp"

namespace edmpc {

struct InsufficientHistory : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingExactForm : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sequence of vectors ordered newest first: seq[i] is the value at lag i.
using VecSeq = std::vector<Vector>;

/// Block coefficient matrix of the incremental model
///   dy(k+1) = sum_i phi_y(i) dy(k-i+1) + sum_j phi_u(j) du(k-j+1).
/// Blocks 1..Ly act on output increments (My x My), blocks Ly+1..Ly+Lu on
/// input increments (My x Mu). Zero blocks are stored explicitly.
struct PJM {
  int My = 1;
  int Mu = 1;
  int Ly = 0;
  int Lu = 0;
  std::vector<Matrix> blocks;

  /// 1-based accessors mirroring the block numbering above.
  const Matrix& phi_y(int i) const;
  const Matrix& phi_u(int j) const;
  Matrix& phi_y(int i);
  Matrix& phi_u(int j);

  static PJM zeros(int My, int Mu, int Ly, int Lu);
  /// Scalar system from plain coefficient lists.
  static PJM siso(const std::vector<double>& y_coeffs, const std::vector<double>& u_coeffs);

  /// All blocks stacked row-major into one vector (trace snapshots).
  Vector flattened() const;
  void validate() const;
};

/// Discrete-time plant y(k+1) = f(y(k..k-ny), u(k..k-nu)) + w(k+1).
struct PlantModel {
  int My = 1;
  int Mu = 1;
  int ny = 0;
  int nu = 0;
  std::function<Vector(const VecSeq& y_hist, const VecSeq& u_hist)> f;
  /// Closed-form coefficient blocks; empty when no exact form is known.
  std::function<PJM(const VecSeq& y_hist, const VecSeq& u_hist)> exact_pjm;

  Vector step(const VecSeq& y_hist, const VecSeq& u_hist, const Vector& w_next) const;
};

/// Rolling signal store, newest first. y_buf[0] pairs with u_buf[0] in time.
struct HistoryWindow {
  int My = 1;
  int Mu = 1;
  VecSeq y_buf;
  VecSeq u_buf;
  VecSeq w_buf;

  /// Prepends one sample of each signal and trims to max_len entries.
  void push(const Vector& y, const Vector& u, const Vector& w, int max_len);
};

/// Stacked increment vectors dY (length Ly*My) and dU (length Lu*Mu).
struct DeltaRegressor {
  Vector dY;
  Vector dU;
};

/// Increments of the newest Ly outputs and Lu inputs of the window.
DeltaRegressor delta_regressor(const HistoryWindow& h, int Ly, int Lu);

/// Closed-form coefficient blocks at the window's newest time.
PJM pjm_exact(const PlantModel& plant, const HistoryWindow& h);

/// Forward difference-quotient estimate of the coefficient blocks, probing
/// each regressor coordinate by `probe`.
PJM pjm_secant(const PlantModel& plant, const HistoryWindow& h, double probe);

/// One incremental model step: dy(k+1) = blocks * regressor + dw.
Vector edlm_step(const PJM& pjm, const DeltaRegressor& reg, const Vector& dw);

}  // namespace edmpc
