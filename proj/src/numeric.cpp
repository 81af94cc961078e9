#include "edmpc/numeric.hpp"

#include <cmath>

namespace edmpc {

Matrix solve_linear(const Matrix& A, const Matrix& B) {
  if (A.rows() != A.cols())
    throw DimensionMismatch("solve_linear: matrix must be square");
  if (B.rows() != A.rows())
    throw DimensionMismatch("solve_linear: right-hand side rows do not match");

  const Eigen::Index n = A.rows();
  if (n == 0) return B;
  const double scale = A.cwiseAbs().maxCoeff();
  const double pivot_floor = tol::pivot_rel * scale;

  Matrix U = A;
  Matrix X = B;
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index piv = col;
    double best = std::abs(U(col, col));
    for (Eigen::Index r = col + 1; r < n; ++r) {
      const double v = std::abs(U(r, col));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best <= pivot_floor)
      throw SingularMatrix("solve_linear: pivot below threshold, matrix is singular");
    if (piv != col) {
      U.row(piv).swap(U.row(col));
      X.row(piv).swap(X.row(col));
    }
    for (Eigen::Index r = col + 1; r < n; ++r) {
      const double f = U(r, col) / U(col, col);
      if (f == 0.0) continue;
      U.row(r).tail(n - col) -= f * U.row(col).tail(n - col);
      X.row(r) -= f * X.row(col);
    }
  }
  for (Eigen::Index col = n - 1; col >= 0; --col) {
    X.row(col) /= U(col, col);
    for (Eigen::Index r = 0; r < col; ++r)
      X.row(r) -= U(r, col) * X.row(col);
  }
  return X;
}

Vector solve_linear(const Matrix& A, const Vector& b) {
  Matrix B = b;
  return solve_linear(A, B).col(0);
}

}  // namespace edmpc
