#pragma once

#include <cstdint>
#include <random>

#include "edmpc/edlm.hpp"

namespace edmpc {

struct OutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Scalar plant y(k+1) = 0.8 y(k-1) + u(k-3) + 0.5 u(k-4), input delay 4.
PlantModel make_example1();

/// Two-channel polynomial plant with quadratic output feedback, cubic input
/// terms and input delay 3 (shared by the bundled scenarios 2 and 3).
PlantModel make_example2();

/// Variant of the example-2 plant with input delay 2.
PlantModel make_example4();

/// Linear plant y(k+1) = sum_i A[i] y(k-i) + sum_j B[j] u(k-j) + w(k+1).
PlantModel make_custom_linear(std::vector<Matrix> y_gains, std::vector<Matrix> u_gains);

/// Unit-slope ramp reference, y*(k) = k, one channel.
Vector reference_unit_ramp(int k);

/// Two-channel composite reference: sinusoid mix for k <= 350, alternating
/// +-0.5 square wave (flip every 50 samples, channels opposed) for k <= 700.
Vector reference_eq57(int k);

/// Known two-channel disturbance entering at time k+1; argument is k.
Vector disturbance_eq60(int k);

/// Uniform white disturbance w = (0.3 r1, 0.2 r2), r ~ U[0,1).
/// Draws are reproducible doubles from a fixed-seed generator.
class WhiteNoise {
 public:
  explicit WhiteNoise(std::uint64_t seed) : rng_(seed) {}
  Vector draw();

 private:
  double canonical();
  std::mt19937_64 rng_;
};

}  // namespace edmpc
