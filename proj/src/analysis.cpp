#include "edmpc/analysis.hpp"

#include <cmath>
#include <limits>

namespace edmpc {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw DimensionMismatch(msg);
}

ZPolynomial poly_from(const Eigen::RowVectorXd& row) {
  std::vector<double> c(row.data(), row.data() + row.size());
  return ZPolynomial(std::move(c));
}

// Advance stacks map to delay polynomials once the identity is scaled by
// z^-(N-1): the z^(i-1) slot lands on z^-(N-i), so coefficients reverse.
ZPolynomial poly_from_reversed(const Eigen::RowVectorXd& row) {
  std::vector<double> c(row.size());
  for (Eigen::Index i = 0; i < row.size(); ++i)
    c[static_cast<size_t>(row.size() - 1 - i)] = row(i);
  return ZPolynomial(std::move(c));
}

// Matrix polynomial sum_t coef[t] z^-t.
ZPolyMatrix polymat_from(const std::vector<Matrix>& coef) {
  const int rows = static_cast<int>(coef.front().rows());
  const int cols = static_cast<int>(coef.front().cols());
  ZPolyMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      std::vector<double> cc(coef.size());
      for (size_t t = 0; t < coef.size(); ++t) cc[t] = coef[t](r, c);
      m.at(r, c) = ZPolynomial(std::move(cc));
    }
  return m;
}

ZPolyMatrix phi_y_mat(const PJM& pjm) {
  std::vector<Matrix> coef;
  for (int i = 1; i <= pjm.Ly; ++i) coef.push_back(pjm.phi_y(i));
  return polymat_from(coef);
}

ZPolyMatrix phi_u_mat(const PJM& pjm) {
  std::vector<Matrix> coef;
  for (int j = 1; j <= pjm.Lu; ++j) coef.push_back(pjm.phi_u(j));
  return polymat_from(coef);
}

bool compensated_mode(ControlMode mode) {
  return mode == ControlMode::uiMPC_D || mode == ControlMode::ciMPC_D;
}

ZPolyMatrix as_1x1(const ZPolynomial& p) {
  ZPolyMatrix m(1, 1);
  m.at(0, 0) = p;
  return m;
}

}  // namespace

ClosedLoopModel char_poly_analysis1(const PJM& pjm, const HorizonMatrices& hm,
                                    const ControllerConfig& cfg) {
  pjm.validate();
  if (pjm.My != 1 || pjm.Mu != 1)
    throw NotSISO("char_poly_analysis1: needs one input and one output channel");
  require(hm.My == 1 && hm.Mu == 1 && cfg.N == hm.N,
          "char_poly_analysis1: horizon and config disagree");
  const int N = hm.N;
  const int Ly = pjm.Ly;
  const int Lu = pjm.Lu;

  const Matrix p_full = gain(hm, cfg);
  const Eigen::RowVectorXd p = p_full.row(0);

  const ZPolynomial a = poly_from(p * hm.PsiT.leftCols(Ly));
  const ZPolynomial c = poly_from(p * hm.PsiT.rightCols(Lu));
  const double pe = p.sum();

  const ZPolynomial one = ZPolynomial::one();
  const ZPolynomial z1 = ZPolynomial::shift(1);
  const ZPolynomial delta = ZPolynomial::delta();

  std::vector<double> yc(static_cast<size_t>(Ly));
  for (int i = 1; i <= Ly; ++i) yc[static_cast<size_t>(i - 1)] = pjm.phi_y(i)(0, 0);
  std::vector<double> uc(static_cast<size_t>(Lu));
  for (int j = 1; j <= Lu; ++j) uc[static_cast<size_t>(j - 1)] = pjm.phi_u(j)(0, 0);
  const ZPolynomial phiy{std::vector<double>(yc)};
  const ZPolynomial phiu{std::vector<double>(uc)};

  const ZPolynomial s = one + z1 * c;
  const ZPolynomial dy = (one - z1 * phiy) * delta;
  const ZPolynomial t = s * dy + z1 * phiu * delta * a + z1 * phiu * pe;

  const ZPolynomial ph_shift = poly_from_reversed(p);
  const ZPolynomial pw_shift = poly_from_reversed(p * hm.PhiWT);

  ClosedLoopModel m;
  m.form = AnalysisForm::analysis1;
  m.My = 1;
  m.char_poly = as_1x1(t.shifted(N - 1));
  m.ref_numerator = as_1x1(phiu * ph_shift);
  if (compensated_mode(cfg.mode))
    m.dist_numerator = as_1x1((s.shifted(N - 1) - phiu * pw_shift) * delta);
  else
    m.dist_numerator = as_1x1(s.shifted(N - 1) * delta);
  return m;
}

ClosedLoopModel char_poly_analysis2(const PJM& pjm, const HorizonMatrices& hm,
                                    const ControllerConfig& cfg) {
  pjm.validate();
  require(hm.My == pjm.My && hm.Mu == pjm.Mu && cfg.N == hm.N,
          "char_poly_analysis2: horizon and config disagree");
  const int N = hm.N;
  const int My = hm.My;
  const int Mu = hm.Mu;
  const Vector qd = cfg.q_diag(My);

  // First input block of PhiT against the weights: F = (PhiT g)' Q.
  const Matrix f = hm.PhiT.leftCols(Mu).transpose() * qd.asDiagonal();

  // z^-(N-i) coefficient of the reference stack contraction.
  std::vector<Matrix> wc(static_cast<size_t>(N));
  for (int i = 1; i <= N; ++i)
    wc[static_cast<size_t>(N - i)] = f.middleCols((i - 1) * My, My);
  const ZPolyMatrix w = polymat_from(wc);

  // Same contraction against the disturbance stack.
  std::vector<Matrix> vc(static_cast<size_t>(N));
  for (int j = 1; j <= N; ++j)
    vc[static_cast<size_t>(N - j)] = f * hm.PhiWT.middleCols((j - 1) * My, My);
  const ZPolyMatrix v = polymat_from(vc);

  const ZPolynomial z1 = ZPolynomial::shift(1);
  const ZPolynomial delta = ZPolynomial::delta();
  const ZPolyMatrix phiy = phi_y_mat(pjm);
  const ZPolyMatrix phiu = phi_u_mat(pjm);
  const ZPolyMatrix eye = ZPolyMatrix::identity(My);

  const ZPolyMatrix lam_shift =
      (eye - phiy * z1) * (delta * cfg.lambda).shifted(N - 1);
  const ZPolyMatrix ref = phiu * w;

  ClosedLoopModel m;
  m.form = AnalysisForm::analysis2;
  m.My = My;
  m.char_poly = lam_shift + ref;
  m.ref_numerator = ref;
  if (compensated_mode(cfg.mode))
    m.dist_numerator = eye * (delta * cfg.lambda).shifted(N - 1);
  else
    m.dist_numerator = eye * (delta * cfg.lambda).shifted(N - 1) + phiu * v * delta;
  return m;
}

StabilityReport stability_check(const ClosedLoopModel& m) {
  const ZPolynomial det = (m.char_poly.rows() == 1 && m.char_poly.cols() == 1)
                              ? m.char_poly.at(0, 0)
                              : polymat_det(m.char_poly);
  StabilityReport rep;
  rep.roots = poly_roots(det);
  rep.max_modulus = 0.0;
  for (const auto& r : rep.roots) rep.max_modulus = std::max(rep.max_modulus, std::abs(r));
  rep.stable = rep.max_modulus < 1.0 - tol::unit_circle_margin;
  return rep;
}

SteadyStateReport steady_state_error(const ClosedLoopModel& m, InputKind input_kind) {
  SteadyStateReport rep;
  rep.input_kind = input_kind;
  if (m.My == 1) {
    const ZPolynomial den = m.char_poly.at(0, 0);
    const ZPolynomial err_num = den - m.ref_numerator.at(0, 0);
    try {
      rep.limit_error = final_value(ZRational{err_num, den}, input_kind);
    } catch (const DivergentLimit&) {
      rep.divergent = true;
      rep.limit_error = std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
  }
  // Coupled channels: only the exactly-cancelling case (the lambda = 0 law,
  // where the error numerator vanishes identically) has a closed-form limit.
  double maxc = 0.0;
  for (int r = 0; r < m.char_poly.rows(); ++r)
    for (int c = 0; c < m.char_poly.cols(); ++c)
      maxc = std::max(maxc, m.char_poly.at(r, c).max_abs_coeff());
  const ZPolyMatrix diff = m.char_poly - m.ref_numerator;
  for (int r = 0; r < diff.rows(); ++r)
    for (int c = 0; c < diff.cols(); ++c)
      if (!diff.at(r, c).is_zero(tol::poly_trail_rel * maxc))
        throw UnsupportedConfiguration(
            "steady_state_error: coupled-channel limit only available when the error "
            "numerator vanishes (lambda = 0)");
  rep.limit_error = 0.0;
  return rep;
}

ZTransfer disturbance_transfer(const ClosedLoopModel& m, const ControllerConfig& cfg,
                               bool compensated, bool rank_full) {
  const int My = m.My;
  const ZPolynomial delta = ZPolynomial::delta();
  if (compensated && cfg.lambda == 0.0) {
    // Preview of the exact increments cancels the disturbance entirely.
    ZTransfer t;
    t.num = ZPolyMatrix(My, My);
    t.den = ZPolynomial::one();
    return t;
  }
  if (compensated && cfg.lambda > 0.0 && m.form == AnalysisForm::analysis2 && My == 1) {
    // Residual transfer lambda Delta / T1, on the shared shifted denominator.
    ZTransfer t;
    t.num = ZPolyMatrix::identity(1) * (delta * cfg.lambda).shifted(cfg.N - 1);
    t.den = m.char_poly.at(0, 0);
    return t;
  }
  if (!compensated && rank_full && cfg.lambda == 0.0) {
    // Full-rank current-input block: output deviation equals the increment.
    ZTransfer t;
    t.num = ZPolyMatrix::identity(My) * delta;
    t.den = ZPolynomial::one();
    return t;
  }
  if (!compensated && !rank_full && cfg.lambda == 0.0 && cfg.N == 2) {
    // Delay-2 configuration; stated relative to the disturbance increment,
    // so e_d(k) = -dw(k) - dw(k-1).
    ZTransfer t;
    t.num = ZPolyMatrix::identity(My) * (ZPolynomial::one() + ZPolynomial::shift(1));
    t.den = ZPolynomial::one();
    return t;
  }
  throw UnsupportedConfiguration(
      "disturbance_transfer: configuration not covered by the closed-loop analyses");
}

ZRational reference_transfer(const ClosedLoopModel& m) {
  if (m.My != 1) throw NotSISO("reference_transfer: needs a single-channel model");
  return ZRational{m.ref_numerator.at(0, 0), m.char_poly.at(0, 0)};
}

ZRational error_transfer(const ClosedLoopModel& m) {
  if (m.My != 1) throw NotSISO("error_transfer: needs a single-channel model");
  return ZRational{m.char_poly.at(0, 0) - m.ref_numerator.at(0, 0), m.char_poly.at(0, 0)};
}

}  // namespace edmpc
