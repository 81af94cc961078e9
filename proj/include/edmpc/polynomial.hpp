#pragma once

#include <complex>
#include <vector>

#include "edmpc/numeric.hpp"

namespace edmpc {

struct DegenerateZeroPolynomial : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergentLimit : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnstablePole : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Polynomial in the backward-shift operator: c[0] + c[1] z^-1 + c[2] z^-2 + ...
class ZPolynomial {
 public:
  ZPolynomial() : c_{0.0} {}
  explicit ZPolynomial(std::vector<double> coeffs);
  static ZPolynomial one() { return ZPolynomial({1.0}); }
  static ZPolynomial zero() { return ZPolynomial({0.0}); }
  static ZPolynomial delta();            // 1 - z^-1
  static ZPolynomial shift(int lag);     // z^-lag

  const std::vector<double>& coeffs() const { return c_; }
  double coeff(int i) const;             // 0 beyond stored range
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero(double tol_abs = 0.0) const;
  double max_abs_coeff() const;

  /// Strips trailing coefficients below tol::poly_trail_rel * max|coeff|.
  ZPolynomial normalized() const;
  /// Multiplies by z^-lag (prepends `lag` zero coefficients).
  ZPolynomial shifted(int lag) const;

  double eval(double zinv) const;  // argument is z^-1
  std::complex<double> eval(std::complex<double> zinv) const;
  /// Evaluates the z-plane form z^degree * p(z^-1) at z.
  std::complex<double> eval_zplane(std::complex<double> z) const;

  ZPolynomial operator+(const ZPolynomial& o) const;
  ZPolynomial operator-(const ZPolynomial& o) const;
  ZPolynomial operator*(const ZPolynomial& o) const;
  ZPolynomial operator*(double s) const;

 private:
  std::vector<double> c_;
};

/// Convolution product of coefficient sequences.
ZPolynomial poly_mul(const ZPolynomial& a, const ZPolynomial& b);

/// Roots (in the z plane) of z^m p(z^-1). Throws DegenerateZeroPolynomial if
/// every coefficient vanishes. A polynomial reducible to a constant has none.
std::vector<std::complex<double>> poly_roots(const ZPolynomial& p);

/// Dense matrix of shift-operator polynomials.
class ZPolyMatrix {
 public:
  ZPolyMatrix() : rows_(0), cols_(0) {}
  ZPolyMatrix(int rows, int cols);
  static ZPolyMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  ZPolynomial& at(int r, int c);
  const ZPolynomial& at(int r, int c) const;

  ZPolyMatrix operator+(const ZPolyMatrix& o) const;
  ZPolyMatrix operator-(const ZPolyMatrix& o) const;
  ZPolyMatrix operator*(const ZPolyMatrix& o) const;
  ZPolyMatrix operator*(const ZPolynomial& s) const;
  ZPolyMatrix scaled(double s) const;

  /// Evaluates every entry at a real z^-1.
  Matrix eval(double zinv) const;

 private:
  int rows_, cols_;
  std::vector<ZPolynomial> e_;
};

/// Determinant by evaluation at Chebyshev-spaced real points and interpolation.
ZPolynomial polymat_det(const ZPolyMatrix& M);

/// Ratio of shift-operator polynomials, num/den.
struct ZRational {
  ZPolynomial num;
  ZPolynomial den;

  /// Strips leading coefficients shared by num and den (a common z^-s factor).
  ZRational reduced() const;
};

enum class InputKind { step, ramp };

/// Final-value limit of the output of `G` driven by a unit step or unit ramp.
/// Throws UnstablePole for a denominator root outside the unit circle and
/// DivergentLimit when a pole at z = 1 does not cancel.
double final_value(const ZRational& G, InputKind input);

/// Runs the difference equation den * y = num * u over the given input.
/// Requires a causal reduced form (nonzero leading denominator coefficient).
std::vector<double> simulate_rational(const ZRational& G,
                                      const std::vector<double>& input);

}  // namespace edmpc
