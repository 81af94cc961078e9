#include "edmpc/edlm.hpp"

#include <cmath>

namespace edmpc {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw DimensionMismatch(msg);
}

}  // namespace

const Matrix& PJM::phi_y(int i) const {
  if (i < 1 || i > Ly) throw DimensionMismatch("PJM::phi_y: index out of range");
  return blocks[static_cast<size_t>(i - 1)];
}

const Matrix& PJM::phi_u(int j) const {
  if (j < 1 || j > Lu) throw DimensionMismatch("PJM::phi_u: index out of range");
  return blocks[static_cast<size_t>(Ly + j - 1)];
}

Matrix& PJM::phi_y(int i) {
  if (i < 1 || i > Ly) throw DimensionMismatch("PJM::phi_y: index out of range");
  return blocks[static_cast<size_t>(i - 1)];
}

Matrix& PJM::phi_u(int j) {
  if (j < 1 || j > Lu) throw DimensionMismatch("PJM::phi_u: index out of range");
  return blocks[static_cast<size_t>(Ly + j - 1)];
}

PJM PJM::zeros(int My, int Mu, int Ly, int Lu) {
  require(My >= 1 && Mu >= 1, "PJM: channel counts must be positive");
  require(Ly >= 1 && Lu >= 1, "PJM: pseudo orders must be positive");
  PJM p;
  p.My = My;
  p.Mu = Mu;
  p.Ly = Ly;
  p.Lu = Lu;
  for (int i = 0; i < Ly; ++i) p.blocks.push_back(Matrix::Zero(My, My));
  for (int j = 0; j < Lu; ++j) p.blocks.push_back(Matrix::Zero(My, Mu));
  return p;
}

PJM PJM::siso(const std::vector<double>& y_coeffs, const std::vector<double>& u_coeffs) {
  require(!y_coeffs.empty() && !u_coeffs.empty(), "PJM::siso: empty coefficient list");
  PJM p = zeros(1, 1, static_cast<int>(y_coeffs.size()), static_cast<int>(u_coeffs.size()));
  for (int i = 1; i <= p.Ly; ++i) p.phi_y(i)(0, 0) = y_coeffs[static_cast<size_t>(i - 1)];
  for (int j = 1; j <= p.Lu; ++j) p.phi_u(j)(0, 0) = u_coeffs[static_cast<size_t>(j - 1)];
  return p;
}

Vector PJM::flattened() const {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.size();
  Vector v(total);
  Eigen::Index at = 0;
  for (const auto& b : blocks)
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      for (Eigen::Index c = 0; c < b.cols(); ++c) v(at++) = b(r, c);
  return v;
}

void PJM::validate() const {
  require(static_cast<int>(blocks.size()) == Ly + Lu, "PJM: block count mismatch");
  for (int i = 1; i <= Ly; ++i)
    require(phi_y(i).rows() == My && phi_y(i).cols() == My, "PJM: output block size mismatch");
  for (int j = 1; j <= Lu; ++j)
    require(phi_u(j).rows() == My && phi_u(j).cols() == Mu, "PJM: input block size mismatch");
  for (const auto& b : blocks)
    if (!b.allFinite()) throw DimensionMismatch("PJM: blocks must be finite");
}

Vector PlantModel::step(const VecSeq& y_hist, const VecSeq& u_hist, const Vector& w_next) const {
  if (static_cast<int>(y_hist.size()) < ny + 1 || static_cast<int>(u_hist.size()) < nu + 1)
    throw InsufficientHistory("PlantModel::step: history shorter than the plant order");
  Vector y = f(y_hist, u_hist);
  if (w_next.size() > 0) {
    require(w_next.size() == My, "PlantModel::step: disturbance size mismatch");
    y += w_next;
  }
  return y;
}

void HistoryWindow::push(const Vector& y, const Vector& u, const Vector& w, int max_len) {
  require(y.size() == My && u.size() == Mu, "HistoryWindow::push: sample size mismatch");
  y_buf.insert(y_buf.begin(), y);
  u_buf.insert(u_buf.begin(), u);
  w_buf.insert(w_buf.begin(), w.size() > 0 ? w : Vector::Zero(My));
  const size_t cap = static_cast<size_t>(max_len);
  if (y_buf.size() > cap) y_buf.resize(cap);
  if (u_buf.size() > cap) u_buf.resize(cap);
  if (w_buf.size() > cap) w_buf.resize(cap);
}

DeltaRegressor delta_regressor(const HistoryWindow& h, int Ly, int Lu) {
  require(Ly >= 1 && Lu >= 1, "delta_regressor: pseudo orders must be positive");
  if (static_cast<int>(h.y_buf.size()) < Ly + 1)
    throw InsufficientHistory("delta_regressor: need Ly+1 output samples");
  if (static_cast<int>(h.u_buf.size()) < Lu + 1)
    throw InsufficientHistory("delta_regressor: need Lu+1 input samples");

  DeltaRegressor r;
  r.dY = Vector(static_cast<Eigen::Index>(Ly) * h.My);
  r.dU = Vector(static_cast<Eigen::Index>(Lu) * h.Mu);
  for (int i = 0; i < Ly; ++i)
    r.dY.segment(static_cast<Eigen::Index>(i) * h.My, h.My) =
        h.y_buf[static_cast<size_t>(i)] - h.y_buf[static_cast<size_t>(i) + 1];
  for (int j = 0; j < Lu; ++j)
    r.dU.segment(static_cast<Eigen::Index>(j) * h.Mu, h.Mu) =
        h.u_buf[static_cast<size_t>(j)] - h.u_buf[static_cast<size_t>(j) + 1];
  return r;
}

PJM pjm_exact(const PlantModel& plant, const HistoryWindow& h) {
  if (!plant.exact_pjm)
    throw MissingExactForm("pjm_exact: plant has no closed-form coefficient blocks");
  if (static_cast<int>(h.y_buf.size()) < plant.ny + 2 ||
      static_cast<int>(h.u_buf.size()) < plant.nu + 2)
    throw InsufficientHistory("pjm_exact: need ny+2 outputs and nu+2 inputs");
  PJM p = plant.exact_pjm(h.y_buf, h.u_buf);
  p.validate();
  return p;
}

PJM pjm_secant(const PlantModel& plant, const HistoryWindow& h, double probe) {
  require(probe > 0.0 && std::isfinite(probe), "pjm_secant: probe must be positive");
  if (static_cast<int>(h.y_buf.size()) < plant.ny + 1 ||
      static_cast<int>(h.u_buf.size()) < plant.nu + 1)
    throw InsufficientHistory("pjm_secant: history shorter than the plant order");

  const int Ly = plant.ny + 1;
  const int Lu = plant.nu + 1;
  PJM p = PJM::zeros(plant.My, plant.Mu, Ly, Lu);
  const Vector base = plant.f(h.y_buf, h.u_buf);

  VecSeq y = h.y_buf;
  for (int i = 0; i < Ly; ++i)
    for (int c = 0; c < plant.My; ++c) {
      const double saved = y[static_cast<size_t>(i)](c);
      y[static_cast<size_t>(i)](c) = saved + probe;
      p.phi_y(i + 1).col(c) = (plant.f(y, h.u_buf) - base) / probe;
      y[static_cast<size_t>(i)](c) = saved;
    }
  VecSeq u = h.u_buf;
  for (int j = 0; j < Lu; ++j)
    for (int c = 0; c < plant.Mu; ++c) {
      const double saved = u[static_cast<size_t>(j)](c);
      u[static_cast<size_t>(j)](c) = saved + probe;
      p.phi_u(j + 1).col(c) = (plant.f(h.y_buf, u) - base) / probe;
      u[static_cast<size_t>(j)](c) = saved;
    }
  return p;
}

Vector edlm_step(const PJM& pjm, const DeltaRegressor& reg, const Vector& dw) {
  require(reg.dY.size() == static_cast<Eigen::Index>(pjm.Ly) * pjm.My,
          "edlm_step: output regressor size mismatch");
  require(reg.dU.size() == static_cast<Eigen::Index>(pjm.Lu) * pjm.Mu,
          "edlm_step: input regressor size mismatch");
  Vector dy = Vector::Zero(pjm.My);
  for (int i = 0; i < pjm.Ly; ++i)
    dy += pjm.blocks[static_cast<size_t>(i)] *
          reg.dY.segment(static_cast<Eigen::Index>(i) * pjm.My, pjm.My);
  for (int j = 0; j < pjm.Lu; ++j)
    dy += pjm.blocks[static_cast<size_t>(pjm.Ly + j)] *
          reg.dU.segment(static_cast<Eigen::Index>(j) * pjm.Mu, pjm.Mu);
  if (dw.size() > 0) {
    require(dw.size() == pjm.My, "edlm_step: disturbance increment size mismatch");
    dy += dw;
  }
  return dy;
}

}  // namespace edmpc
