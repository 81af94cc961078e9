#include "edmpc/prediction.hpp"

namespace edmpc {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw DimensionMismatch(msg);
}

}  // namespace

LiftedModel lift(const PJM& pjm) {
  pjm.validate();
  LiftedModel m;
  m.My = pjm.My;
  m.Mu = pjm.Mu;
  m.Ly = pjm.Ly;
  m.Lu = pjm.Lu;
  const int n = m.dim();
  const int uybase = m.Ly * m.My;

  m.A = Matrix::Zero(n, n);
  for (int i = 1; i <= m.Ly; ++i) m.A.block(0, (i - 1) * m.My, m.My, m.My) = pjm.phi_y(i);
  for (int j = 2; j <= m.Lu; ++j)
    m.A.block(0, uybase + (j - 2) * m.Mu, m.My, m.Mu) = pjm.phi_u(j);
  for (int i = 2; i <= m.Ly; ++i)
    m.A.block((i - 1) * m.My, (i - 2) * m.My, m.My, m.My) = Matrix::Identity(m.My, m.My);
  for (int j = 2; j <= m.Lu; ++j)
    m.A.block(uybase + (j - 1) * m.Mu, uybase + (j - 2) * m.Mu, m.Mu, m.Mu) =
        Matrix::Identity(m.Mu, m.Mu);

  m.B = Matrix::Zero(n, m.Mu);
  m.B.block(0, 0, m.My, m.Mu) = pjm.phi_u(1);
  m.B.block(uybase, 0, m.Mu, m.Mu) = Matrix::Identity(m.Mu, m.Mu);

  m.C = Matrix::Zero(m.My, n);
  m.C.block(0, 0, m.My, m.My) = Matrix::Identity(m.My, m.My);
  m.T = m.C.transpose();
  return m;
}

LiftedState propagate(const LiftedModel& m, const LiftedState& s, const Vector& du,
                      const Vector& dw) {
  require(s.dx.size() == m.dim(), "propagate: state size mismatch");
  require(du.size() == m.Mu, "propagate: input increment size mismatch");
  LiftedState next;
  next.dx = m.A * s.dx + m.B * du;
  if (dw.size() > 0) {
    require(dw.size() == m.My, "propagate: disturbance increment size mismatch");
    next.dx += m.T * dw;
  }
  return next;
}

LiftedState lifted_state_from(const HistoryWindow& h, int Ly, int Lu) {
  require(Ly >= 1 && Lu >= 1, "lifted_state_from: pseudo orders must be positive");
  if (static_cast<int>(h.y_buf.size()) < Ly + 1)
    throw InsufficientHistory("lifted_state_from: need Ly+1 output samples");
  if (static_cast<int>(h.u_buf.size()) < Lu + 2)
    throw InsufficientHistory("lifted_state_from: need Lu+2 input samples");

  LiftedState s;
  s.dx = Vector(static_cast<Eigen::Index>(Ly) * h.My + static_cast<Eigen::Index>(Lu) * h.Mu);
  for (int i = 0; i < Ly; ++i)
    s.dx.segment(static_cast<Eigen::Index>(i) * h.My, h.My) =
        h.y_buf[static_cast<size_t>(i)] - h.y_buf[static_cast<size_t>(i) + 1];
  const Eigen::Index ubase = static_cast<Eigen::Index>(Ly) * h.My;
  for (int j = 0; j < Lu; ++j)
    s.dx.segment(ubase + static_cast<Eigen::Index>(j) * h.Mu, h.Mu) =
        h.u_buf[static_cast<size_t>(j) + 1] - h.u_buf[static_cast<size_t>(j) + 2];
  return s;
}

HorizonMatrices horizon(const std::vector<PJM>& pjm_seq, int N) {
  require(N >= 1, "horizon: N must be at least 1");
  require(static_cast<int>(pjm_seq.size()) == N, "horizon: need one PJM per step");

  std::vector<LiftedModel> models;
  models.reserve(pjm_seq.size());
  for (const auto& p : pjm_seq) models.push_back(lift(p));
  for (const auto& m : models)
    require(m.My == models[0].My && m.Mu == models[0].Mu && m.Ly == models[0].Ly &&
                m.Lu == models[0].Lu,
            "horizon: PJM dimensions must agree across the horizon");

  const int My = models[0].My;
  const int Mu = models[0].Mu;
  const int dim = models[0].dim();

  HorizonMatrices hm;
  hm.N = N;
  hm.My = My;
  hm.Mu = Mu;
  hm.Psi = Matrix::Zero(N * My, dim);
  hm.Phi = Matrix::Zero(N * My, N * Mu);
  hm.PhiW = Matrix::Zero(N * My, N * My);
  hm.E = Matrix::Zero(N * My, My);
  hm.AN = Matrix::Zero(N * My, N * My);

  // Psi row block j: C times the product A(k+j-1)...A(k), newest leftmost.
  Matrix running = Matrix::Identity(dim, dim);
  for (int j = 0; j < N; ++j) {
    running = models[static_cast<size_t>(j)].A * running;
    hm.Psi.middleRows(j * My, My) = running.topRows(My);
  }

  // Column i of Phi / PhiW: grow the suffix product downward one row at a time.
  for (int i = 1; i <= N; ++i) {
    Matrix mb = models[static_cast<size_t>(i - 1)].B;
    Matrix mt = models[0].T;
    for (int j = i; j <= N; ++j) {
      hm.Phi.block((j - 1) * My, (i - 1) * Mu, My, Mu) = mb.topRows(My);
      hm.PhiW.block((j - 1) * My, (i - 1) * My, My, My) = mt.topRows(My);
      if (j < N) {
        mb = models[static_cast<size_t>(j)].A * mb;
        mt = models[static_cast<size_t>(j)].A * mt;
      }
    }
  }

  for (int j = 0; j < N; ++j) {
    hm.E.middleRows(j * My, My) = Matrix::Identity(My, My);
    for (int i = 0; i <= j; ++i)
      hm.AN.block(j * My, i * My, My, My) = Matrix::Identity(My, My);
  }

  auto prefix_rows = [&](const Matrix& x) {
    Matrix out = x;
    for (int j = 1; j < N; ++j)
      out.middleRows(j * My, My) += out.middleRows((j - 1) * My, My);
    return out;
  };
  hm.PsiT = prefix_rows(hm.Psi);
  hm.PhiT = prefix_rows(hm.Phi);
  hm.PhiWT = prefix_rows(hm.PhiW);
  return hm;
}

Vector free_response(const HorizonMatrices& hm, const Vector& y_now, const LiftedState& s,
                     const Vector& dW_hat) {
  require(y_now.size() == hm.My, "free_response: output size mismatch");
  require(s.dx.size() == hm.PsiT.cols(), "free_response: state size mismatch");
  Vector y = hm.E * y_now + hm.PsiT * s.dx;
  if (dW_hat.size() > 0) {
    require(dW_hat.size() == static_cast<Eigen::Index>(hm.N) * hm.My,
            "free_response: disturbance stack size mismatch");
    y += hm.PhiWT * dW_hat;
  }
  return y;
}

}  // namespace edmpc
