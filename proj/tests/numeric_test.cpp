#include "edmpc/numeric.hpp"

#include <random>

#include "doctest.h"

using namespace edmpc;

TEST_CASE("solve_linear identity and diagonal systems") {
  Vector b(3);
  b << 1, 2, 3;
  const Vector x = solve_linear(Matrix::Identity(3, 3), b);
  CHECK(x.isApprox(b, 0.0));

  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = 4.0;
  Vector b2(2);
  b2 << 2, 8;
  const Vector x2 = solve_linear(D, b2);
  CHECK(x2(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x2(1) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("solve_linear residual bound on random well-conditioned systems") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix A(5, 5);
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 5; ++c) A(r, c) = dist(rng);
    A += 5.0 * Matrix::Identity(5, 5);  // diagonally dominant, well conditioned
    Vector b(5);
    for (int r = 0; r < 5; ++r) b(r) = dist(rng);
    const Vector x = solve_linear(A, b);
    const double res = (A * x - b).lpNorm<Eigen::Infinity>();
    CHECK(res <= tol::solve_residual * (1.0 + b.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("solve_linear matrix right-hand side shares the factorization") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix A(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) A(r, c) = dist(rng);
  A += 4.0 * Matrix::Identity(4, 4);
  Matrix B(4, 3);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 3; ++c) B(r, c) = dist(rng);
  const Matrix X = solve_linear(A, B);
  for (int c = 0; c < 3; ++c) {
    const Vector xc = solve_linear(A, Vector(B.col(c)));
    CHECK((X.col(c) - xc).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("solve_linear singular and shape errors") {
  Matrix S(2, 2);
  S << 1, 2, 2, 4;  // rank one
  Vector b(2);
  b << 1, 1;
  CHECK_THROWS_AS(solve_linear(S, b), SingularMatrix);

  // A pivot just below the relative floor counts as singular.
  Matrix T = Matrix::Identity(2, 2);
  T(1, 1) = 0.5 * tol::pivot_rel;
  CHECK_THROWS_AS(solve_linear(T, b), SingularMatrix);

  CHECK_THROWS_AS(solve_linear(Matrix::Zero(2, 3), b), DimensionMismatch);
  Vector b3(3);
  b3 << 1, 2, 3;
  CHECK_THROWS_AS(solve_linear(Matrix::Identity(2, 2), b3), DimensionMismatch);
}

TEST_CASE("solve_linear one-by-one and empty systems") {
  Matrix A(1, 1);
  A << 4.0;
  Vector b(1);
  b << 2.0;
  CHECK(solve_linear(A, b)(0) == doctest::Approx(0.5).epsilon(1e-15));

  const Matrix X = solve_linear(Matrix(0, 0), Matrix(0, 2));
  CHECK(X.rows() == 0);
  CHECK(X.cols() == 2);
}

TEST_CASE("solve_linear needs pivoting when the leading entry vanishes") {
  Matrix A(2, 2);
  A << 0, 1, 1, 0;
  Vector b(2);
  b << 3, 7;
  const Vector x = solve_linear(A, b);
  CHECK(x(0) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(x(1) == doctest::Approx(3.0).epsilon(1e-15));
}
