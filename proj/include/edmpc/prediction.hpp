#pragma once

#include "edmpc/edlm.hpp"

namespace edmpc {

/// State-space form of the incremental model over the stacked state
///   dx(k) = [dY_Ly(k); dU_Lu(k-1)],
///   dx(k+1) = A dx(k) + B du(k) + T dw(k+1),  dy(k+1) = C dx(k+1).
struct LiftedModel {
  int My = 1;
  int Mu = 1;
  int Ly = 0;
  int Lu = 0;
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix T;

  int dim() const { return Ly * My + Lu * Mu; }
};

struct LiftedState {
  Vector dx;
};

LiftedModel lift(const PJM& pjm);

/// One state update; dw may be empty (treated as zero).
LiftedState propagate(const LiftedModel& m, const LiftedState& s, const Vector& du,
                      const Vector& dw);

/// Builds dx(k) from a window whose newest input entry is the current-time
/// slot (the increment still to be decided): output increments come from
/// y_buf[0..Ly], input increments from u_buf[1..Lu+1].
LiftedState lifted_state_from(const HistoryWindow& h, int Ly, int Lu);

/// N-step prediction matrices. Row block j of Psi stacks C A(k+j-1)...A(k);
/// Phi and PhiW are block lower-triangular with entry (j,i) equal to
/// C A(k+j-1)...A(k+i) B(k+i-1) resp. ...T. Tilde variants accumulate block
/// rows (equal to left-multiplying by AN, the lower-triangular identity
/// stack), so Y_N(k+1) = E y(k) + PsiT dx(k) + PhiT dU_N + PhiWT dW(k+1).
struct HorizonMatrices {
  int N = 0;
  int My = 1;
  int Mu = 1;
  Matrix Psi, PsiT;
  Matrix Phi, PhiT;
  Matrix PhiW, PhiWT;
  Matrix E;
  Matrix AN;
};

/// pjm_seq[i] holds the coefficient blocks assumed for time k+i.
HorizonMatrices horizon(const std::vector<PJM>& pjm_seq, int N);

/// Predicted outputs with dU_N = 0: E y(k) + PsiT dx + PhiWT dW_hat.
/// Pass an empty dW_hat when no disturbance preview is available.
Vector free_response(const HorizonMatrices& hm, const Vector& y_now, const LiftedState& s,
                     const Vector& dW_hat);

}  // namespace edmpc
