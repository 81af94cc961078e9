#include "edmpc/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace edmpc {

ZPolynomial::ZPolynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {
  if (c_.empty()) c_.push_back(0.0);
  for (double v : c_)
    if (!std::isfinite(v))
      throw DimensionMismatch("ZPolynomial: coefficients must be finite");
}

ZPolynomial ZPolynomial::delta() { return ZPolynomial({1.0, -1.0}); }

ZPolynomial ZPolynomial::shift(int lag) {
  if (lag < 0) throw DimensionMismatch("ZPolynomial::shift: negative lag");
  std::vector<double> c(static_cast<size_t>(lag) + 1, 0.0);
  c.back() = 1.0;
  return ZPolynomial(std::move(c));
}

double ZPolynomial::coeff(int i) const {
  if (i < 0 || i >= static_cast<int>(c_.size())) return 0.0;
  return c_[static_cast<size_t>(i)];
}

double ZPolynomial::max_abs_coeff() const {
  double m = 0.0;
  for (double v : c_) m = std::max(m, std::abs(v));
  return m;
}

bool ZPolynomial::is_zero(double tol_abs) const {
  for (double v : c_)
    if (std::abs(v) > tol_abs) return false;
  return true;
}

ZPolynomial ZPolynomial::normalized() const {
  const double floor = tol::poly_trail_rel * max_abs_coeff();
  size_t n = c_.size();
  while (n > 1 && std::abs(c_[n - 1]) <= floor) --n;
  return ZPolynomial(std::vector<double>(c_.begin(), c_.begin() + n));
}

ZPolynomial ZPolynomial::shifted(int lag) const {
  if (lag < 0) throw DimensionMismatch("ZPolynomial::shifted: negative lag");
  std::vector<double> c(static_cast<size_t>(lag), 0.0);
  c.insert(c.end(), c_.begin(), c_.end());
  return ZPolynomial(std::move(c));
}

double ZPolynomial::eval(double zinv) const {
  double acc = 0.0;
  for (size_t i = c_.size(); i-- > 0;) acc = acc * zinv + c_[i];
  return acc;
}

std::complex<double> ZPolynomial::eval(std::complex<double> zinv) const {
  std::complex<double> acc = 0.0;
  for (size_t i = c_.size(); i-- > 0;) acc = acc * zinv + c_[i];
  return acc;
}

std::complex<double> ZPolynomial::eval_zplane(std::complex<double> z) const {
  // z^m p(z^-1) = c0 z^m + c1 z^(m-1) + ... + cm, Horner in z.
  std::complex<double> acc = 0.0;
  for (double v : c_) acc = acc * z + v;
  return acc;
}

ZPolynomial ZPolynomial::operator+(const ZPolynomial& o) const {
  std::vector<double> c(std::max(c_.size(), o.c_.size()), 0.0);
  for (size_t i = 0; i < c.size(); ++i) c[i] = coeff(static_cast<int>(i)) + o.coeff(static_cast<int>(i));
  return ZPolynomial(std::move(c));
}

ZPolynomial ZPolynomial::operator-(const ZPolynomial& o) const {
  std::vector<double> c(std::max(c_.size(), o.c_.size()), 0.0);
  for (size_t i = 0; i < c.size(); ++i) c[i] = coeff(static_cast<int>(i)) - o.coeff(static_cast<int>(i));
  return ZPolynomial(std::move(c));
}

ZPolynomial ZPolynomial::operator*(const ZPolynomial& o) const { return poly_mul(*this, o); }

ZPolynomial ZPolynomial::operator*(double s) const {
  std::vector<double> c = c_;
  for (double& v : c) v *= s;
  return ZPolynomial(std::move(c));
}

ZPolynomial poly_mul(const ZPolynomial& a, const ZPolynomial& b) {
  const auto& ca = a.coeffs();
  const auto& cb = b.coeffs();
  std::vector<double> c(ca.size() + cb.size() - 1, 0.0);
  for (size_t i = 0; i < ca.size(); ++i)
    for (size_t j = 0; j < cb.size(); ++j) c[i + j] += ca[i] * cb[j];
  return ZPolynomial(std::move(c));
}

namespace {

std::complex<double> horner_zplane(const std::vector<double>& a, std::complex<double> z,
                                   std::complex<double>* deriv) {
  // a holds z-plane coefficients, highest power first.
  std::complex<double> p = 0.0, dp = 0.0;
  for (double v : a) {
    dp = dp * z + p;
    p = p * z + v;
  }
  if (deriv) *deriv = dp;
  return p;
}

}  // namespace

std::vector<std::complex<double>> poly_roots(const ZPolynomial& p) {
  const ZPolynomial q = p.normalized();
  if (q.is_zero())
    throw DegenerateZeroPolynomial("poly_roots: all coefficients are zero");

  // z-plane coefficients of z^m p(z^-1), highest power first, are exactly the
  // shift-operator coefficients. Leading zeros only lower the degree.
  std::vector<double> a = q.coeffs();
  size_t lead = 0;
  const double floor = tol::poly_trail_rel * q.max_abs_coeff();
  while (lead < a.size() && std::abs(a[lead]) <= floor) ++lead;
  a.erase(a.begin(), a.begin() + static_cast<long>(lead));
  const int n = static_cast<int>(a.size()) - 1;
  if (n < 1) return {};

  // Top-row companion form of the monic z-plane polynomial.
  Matrix companion = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(0, i) = -a[static_cast<size_t>(i) + 1] / a[0];

  Eigen::EigenSolver<Matrix> es(companion, /*computeEigenvectors=*/false);
  std::vector<std::complex<double>> roots(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) roots[static_cast<size_t>(i)] = es.eigenvalues()(i);

  // Newton refinement against the original coefficients.
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  for (auto& r : roots) {
    for (int it = 0; it < tol::root_max_iters; ++it) {
      std::complex<double> dp;
      const std::complex<double> val = horner_zplane(a, r, &dp);
      if (std::abs(val) <= tol::root_newton * scale) break;
      if (std::abs(dp) == 0.0) break;
      const std::complex<double> step = val / dp;
      r -= step;
      if (std::abs(step) <= tol::root_newton * (1.0 + std::abs(r))) break;
    }
  }
  return roots;
}

ZPolyMatrix::ZPolyMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw DimensionMismatch("ZPolyMatrix: negative size");
  e_.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols), ZPolynomial::zero());
}

ZPolyMatrix ZPolyMatrix::identity(int n) {
  ZPolyMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = ZPolynomial::one();
  return m;
}

ZPolynomial& ZPolyMatrix::at(int r, int c) {
  if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
    throw DimensionMismatch("ZPolyMatrix::at: index out of range");
  return e_[static_cast<size_t>(r) * static_cast<size_t>(cols_) + static_cast<size_t>(c)];
}

const ZPolynomial& ZPolyMatrix::at(int r, int c) const {
  if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
    throw DimensionMismatch("ZPolyMatrix::at: index out of range");
  return e_[static_cast<size_t>(r) * static_cast<size_t>(cols_) + static_cast<size_t>(c)];
}

ZPolyMatrix ZPolyMatrix::operator+(const ZPolyMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("ZPolyMatrix: size mismatch in +");
  ZPolyMatrix r(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r.at(i, j) = at(i, j) + o.at(i, j);
  return r;
}

ZPolyMatrix ZPolyMatrix::operator-(const ZPolyMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("ZPolyMatrix: size mismatch in -");
  ZPolyMatrix r(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r.at(i, j) = at(i, j) - o.at(i, j);
  return r;
}

ZPolyMatrix ZPolyMatrix::operator*(const ZPolyMatrix& o) const {
  if (cols_ != o.rows_) throw DimensionMismatch("ZPolyMatrix: size mismatch in *");
  ZPolyMatrix r(rows_, o.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < o.cols_; ++j) {
      ZPolynomial acc = ZPolynomial::zero();
      for (int k = 0; k < cols_; ++k) acc = acc + at(i, k) * o.at(k, j);
      r.at(i, j) = acc;
    }
  return r;
}

ZPolyMatrix ZPolyMatrix::operator*(const ZPolynomial& s) const {
  ZPolyMatrix r(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r.at(i, j) = at(i, j) * s;
  return r;
}

ZPolyMatrix ZPolyMatrix::scaled(double s) const {
  ZPolyMatrix r(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r.at(i, j) = at(i, j) * s;
  return r;
}

Matrix ZPolyMatrix::eval(double zinv) const {
  Matrix m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = at(i, j).eval(zinv);
  return m;
}

ZPolynomial polymat_det(const ZPolyMatrix& M) {
  if (M.rows() != M.cols()) throw DimensionMismatch("polymat_det: matrix must be square");
  const int n = M.rows();
  if (n == 0) return ZPolynomial::one();

  // Degree bound: sum over rows of the largest entry degree in the row.
  int deg_bound = 0;
  for (int i = 0; i < n; ++i) {
    int row_deg = 0;
    for (int j = 0; j < n; ++j) row_deg = std::max(row_deg, M.at(i, j).normalized().degree());
    deg_bound += row_deg;
  }
  const int m = deg_bound + 1;

  // Chebyshev-spaced sample points on the real axis, strictly inside (-1, 1).
  std::vector<double> xs(static_cast<size_t>(m));
  for (int t = 0; t < m; ++t)
    xs[static_cast<size_t>(t)] = std::cos(M_PI * (2.0 * t + 1.0) / (2.0 * m));

  Vector vals(m);
  for (int t = 0; t < m; ++t) {
    Matrix at_x = M.eval(xs[static_cast<size_t>(t)]);
    vals(t) = at_x.determinant();
  }

  Matrix V(m, m);
  for (int t = 0; t < m; ++t) {
    double pw = 1.0;
    for (int j = 0; j < m; ++j) {
      V(t, j) = pw;
      pw *= xs[static_cast<size_t>(t)];
    }
  }
  Vector c = solve_linear(V, vals);
  std::vector<double> coeffs(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) coeffs[static_cast<size_t>(j)] = c(j);
  return ZPolynomial(std::move(coeffs)).normalized();
}

ZRational ZRational::reduced() const {
  const auto& cn = num.coeffs();
  const auto& cd = den.coeffs();
  const double fn = tol::poly_trail_rel * num.max_abs_coeff();
  const double fd = tol::poly_trail_rel * den.max_abs_coeff();
  size_t lead = 0;
  while (lead < cn.size() && lead < cd.size() && std::abs(cn[lead]) <= fn &&
         std::abs(cd[lead]) <= fd)
    ++lead;
  ZRational r;
  r.num = ZPolynomial(std::vector<double>(cn.begin() + static_cast<long>(std::min(lead, cn.size() - 1)), cn.end()));
  r.den = ZPolynomial(std::vector<double>(cd.begin() + static_cast<long>(std::min(lead, cd.size() - 1)), cd.end()));
  return r;
}

namespace {

// Divides p by (1 - z^-1). Returns the quotient; *remainder gets p(1).
ZPolynomial divide_by_delta(const ZPolynomial& p, double* remainder) {
  const auto& c = p.coeffs();
  std::vector<double> q(c.size() > 1 ? c.size() - 1 : 1, 0.0);
  double carry = 0.0;
  for (size_t i = 0; i + 1 < c.size(); ++i) {
    carry += c[i];
    q[i] = carry;
  }
  if (remainder) *remainder = carry + (c.empty() ? 0.0 : c.back());
  return ZPolynomial(std::move(q));
}

}  // namespace

double final_value(const ZRational& G, InputKind input) {
  ZPolynomial num = G.num.normalized();
  ZPolynomial den = G.den.normalized();
  if (den.is_zero())
    throw DegenerateZeroPolynomial("final_value: zero denominator");
  if (num.is_zero()) return 0.0;

  for (const auto& r : poly_roots(den)) {
    if (std::abs(r) > 1.0 + tol::unit_circle_margin)
      throw UnstablePole("final_value: denominator pole outside the unit circle");
  }

  // (1 - z^-1) * G * Z(input); ramp input contributes z^-1 / (1 - z^-1)^2.
  ZPolynomial fnum = num;
  ZPolynomial fden = den;
  if (input == InputKind::ramp) {
    fnum = fnum.shifted(1);
    fden = fden * ZPolynomial::delta();
  }

  const double den_scale = fden.max_abs_coeff();
  const double num_scale = fnum.max_abs_coeff();
  const int max_cancellations = fden.degree() + 2;
  int guard = 0;
  while (std::abs(fden.eval(1.0)) <= tol::final_value_rem * den_scale) {
    if (std::abs(fnum.eval(1.0)) > tol::final_value_rem * num_scale ||
        ++guard > max_cancellations)
      throw DivergentLimit("final_value: uncancelled pole at z = 1");
    fnum = divide_by_delta(fnum, nullptr);
    fden = divide_by_delta(fden, nullptr);
  }
  return fnum.eval(1.0) / fden.eval(1.0);
}

std::vector<double> simulate_rational(const ZRational& G, const std::vector<double>& input) {
  const ZRational R = G.reduced();
  const auto& nc = R.num.coeffs();
  const auto& dc = R.den.coeffs();
  if (std::abs(dc[0]) <= tol::poly_trail_rel * R.den.max_abs_coeff())
    throw DegenerateZeroPolynomial("simulate_rational: acausal transfer, zero leading denominator");

  std::vector<double> y(input.size(), 0.0);
  for (size_t t = 0; t < input.size(); ++t) {
    double acc = 0.0;
    for (size_t j = 0; j < nc.size() && j <= t; ++j) acc += nc[j] * input[t - j];
    for (size_t j = 1; j < dc.size() && j <= t; ++j) acc -= dc[j] * y[t - j];
    y[t] = acc / dc[0];
  }
  return y;
}

}  // namespace edmpc
