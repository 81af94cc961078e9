#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace edmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Central numeric tolerances. Every threshold used by the library lives here
/// so tests and callers agree on the exact values.
namespace tol {
inline constexpr double pivot_rel = 1e-12;         // solve_linear pivot floor, relative to max|A|
inline constexpr double solve_residual = 1e-10;    // guaranteed ||Ax-b||_inf <= this * (1+||b||_inf)
inline constexpr double poly_trail_rel = 1e-12;    // trailing-coefficient strip, relative to max|coeff|
inline constexpr double root_residual = 1e-8;      // |p(root)| bound relative to coefficient scale
inline constexpr double root_newton = 1e-10;       // root refinement stop
inline constexpr int root_max_iters = 500;         // root refinement iteration cap
inline constexpr double final_value_rem = 1e-9;    // remainder allowed when cancelling (1 - z^-1)
inline constexpr double unit_circle_margin = 1e-9; // stability margin on root modulus
inline constexpr double refine_du = 1e-8;          // horizon-coefficient refinement stop
inline constexpr int refine_max_iters = 10;        // refinement iteration cap
inline constexpr double pgd_step_change = 1e-8;    // projected-gradient stop on iterate change
inline constexpr int pgd_max_iters = 5000;         // projected-gradient iteration cap
inline constexpr double constraint_feas = 1e-8;    // constraint satisfaction guarantee
inline constexpr double dykstra_change = 1e-12;    // alternating-projection stop
inline constexpr int dykstra_max_iters = 1000;     // alternating-projection cap
inline constexpr double divergence_guard = 1e6;    // |y| bound before a run aborts
}  // namespace tol

/// Solve A x = b with Gaussian elimination and row pivoting.
/// Throws SingularMatrix when a pivot falls below tol::pivot_rel * max|A|.
Vector solve_linear(const Matrix& A, const Vector& b);

/// Column-wise variant: solves A X = B sharing one factorization.
Matrix solve_linear(const Matrix& A, const Matrix& B);

}  // namespace edmpc
