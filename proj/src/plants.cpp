#include "edmpc/plants.hpp"

#include <cmath>
#include <utility>

namespace edmpc {

namespace {

// Exact increment coefficients for monomial terms: with old value v and
// increment d, a^2 - v^2 = sq(v,d)*d and a^3 - v^3 = cu(v,d)*d for a = v + d.
double sq(double v, double d) { return 2.0 * v + d; }
double cu(double v, double d) { return 3.0 * v * v + 3.0 * v * d + d * d; }

}  // namespace

PlantModel make_example1() {
  PlantModel p;
  p.My = 1;
  p.Mu = 1;
  p.ny = 1;
  p.nu = 4;
  p.f = [](const VecSeq& y, const VecSeq& u) {
    Vector out(1);
    out(0) = 0.8 * y[1](0) + u[3](0) + 0.5 * u[4](0);
    return out;
  };
  p.exact_pjm = [](const VecSeq&, const VecSeq&) {
    return PJM::siso({0.0, 0.8}, {0.0, 0.0, 0.0, 1.0, 0.5});
  };
  return p;
}

PlantModel make_example2() {
  PlantModel p;
  p.My = 2;
  p.Mu = 2;
  p.ny = 1;
  p.nu = 3;
  p.f = [](const VecSeq& y, const VecSeq& u) {
    const Vector& y1 = y[1];
    const Vector& u2 = u[2];
    const Vector& u3 = u[3];
    Vector out(2);
    out(0) = y1(0) * y1(0) + 0.7 * y1(1) * y1(1) + u2(0) + 0.5 * u2(1) +
             0.4 * u3(0) * u3(0) * u3(0) + 0.5 * u3(1);
    out(1) = 0.5 * y1(0) * y1(0) + 1.3 * y1(1) * y1(1) + 0.4 * u2(0) + 1.2 * u2(1) +
             0.2 * u3(0) + 0.4 * u3(1) * u3(1) * u3(1);
    return out;
  };
  p.exact_pjm = [](const VecSeq& y, const VecSeq& u) {
    PJM p = PJM::zeros(2, 2, 2, 4);
    const double dy1 = y[1](0) - y[2](0);
    const double dy2 = y[1](1) - y[2](1);
    p.phi_y(2) << sq(y[2](0), dy1), 0.7 * sq(y[2](1), dy2),
                  0.5 * sq(y[2](0), dy1), 1.3 * sq(y[2](1), dy2);
    p.phi_u(3) << 1.0, 0.5,
                  0.4, 1.2;
    const double du1 = u[3](0) - u[4](0);
    const double du2 = u[3](1) - u[4](1);
    p.phi_u(4) << 0.4 * cu(u[4](0), du1), 0.5,
                  0.2, 0.4 * cu(u[4](1), du2);
    return p;
  };
  return p;
}

PlantModel make_example4() {
  PlantModel p;
  p.My = 2;
  p.Mu = 2;
  p.ny = 1;
  p.nu = 2;
  p.f = [](const VecSeq& y, const VecSeq& u) {
    const Vector& y1 = y[1];
    const Vector& u1 = u[1];
    const Vector& u2 = u[2];
    Vector out(2);
    out(0) = y1(0) * y1(0) + 0.7 * y1(1) * y1(1) + u1(0) + 0.5 * u1(1) +
             0.4 * u2(0) * u2(0) * u2(0) + 0.5 * u2(1);
    out(1) = 0.5 * y1(0) * y1(0) + 1.3 * y1(1) * y1(1) + 0.4 * u1(0) + 1.2 * u1(1) +
             0.2 * u2(0) + 0.4 * u2(1) * u2(1) * u2(1);
    return out;
  };
  p.exact_pjm = [](const VecSeq& y, const VecSeq& u) {
    PJM p = PJM::zeros(2, 2, 2, 3);
    const double dy1 = y[1](0) - y[2](0);
    const double dy2 = y[1](1) - y[2](1);
    p.phi_y(2) << sq(y[2](0), dy1), 0.7 * sq(y[2](1), dy2),
                  0.5 * sq(y[2](0), dy1), 1.3 * sq(y[2](1), dy2);
    p.phi_u(2) << 1.0, 0.5,
                  0.4, 1.2;
    const double du1 = u[2](0) - u[3](0);
    const double du2 = u[2](1) - u[3](1);
    p.phi_u(3) << 0.4 * cu(u[3](0), du1), 0.5,
                  0.2, 0.4 * cu(u[3](1), du2);
    return p;
  };
  return p;
}

PlantModel make_custom_linear(std::vector<Matrix> y_gains, std::vector<Matrix> u_gains) {
  if (y_gains.empty() || u_gains.empty())
    throw DimensionMismatch("make_custom_linear: need at least one gain per signal");
  const int My = static_cast<int>(y_gains[0].rows());
  const int Mu = static_cast<int>(u_gains[0].cols());
  for (const auto& a : y_gains)
    if (a.rows() != My || a.cols() != My)
      throw DimensionMismatch("make_custom_linear: output gains must be My x My");
  for (const auto& b : u_gains)
    if (b.rows() != My || b.cols() != Mu)
      throw DimensionMismatch("make_custom_linear: input gains must be My x Mu");

  PlantModel p;
  p.My = My;
  p.Mu = Mu;
  p.ny = static_cast<int>(y_gains.size()) - 1;
  p.nu = static_cast<int>(u_gains.size()) - 1;
  p.f = [My, y_gains, u_gains](const VecSeq& y, const VecSeq& u) {
    Vector out = Vector::Zero(My);
    for (size_t i = 0; i < y_gains.size(); ++i) out += y_gains[i] * y[i];
    for (size_t j = 0; j < u_gains.size(); ++j) out += u_gains[j] * u[j];
    return out;
  };
  const int Ly = p.ny + 1;
  const int Lu = p.nu + 1;
  p.exact_pjm = [My, Mu, Ly, Lu, y_gains = std::move(y_gains),
                 u_gains = std::move(u_gains)](const VecSeq&, const VecSeq&) {
    PJM pjm = PJM::zeros(My, Mu, Ly, Lu);
    for (int i = 1; i <= Ly; ++i) pjm.phi_y(i) = y_gains[static_cast<size_t>(i - 1)];
    for (int j = 1; j <= Lu; ++j) pjm.phi_u(j) = u_gains[static_cast<size_t>(j - 1)];
    return pjm;
  };
  return p;
}

Vector reference_unit_ramp(int k) {
  Vector r(1);
  r(0) = static_cast<double>(k);
  return r;
}

Vector reference_eq57(int k) {
  if (k < 1 || k > 700) throw OutOfRange("reference_eq57: defined for 1 <= k <= 700");
  Vector r(2);
  const double t = static_cast<double>(k);
  if (k <= 350) {
    r(0) = 0.2 * std::sin(t / 20.0) - 0.2 * std::sin(t / 10.0) - 0.2 * std::cos(t / 5.0) +
           0.2 * std::cos(t / 2.0);
    r(1) = -0.2 * std::cos(t / 15.0) - 0.2 * std::sin(t / 25.0) + 0.2 * std::sin(t / 5.0) +
           0.2 * std::cos(t / 3.0);
  } else {
    // Square branch: sign flips whenever round((k+1)/50) changes parity,
    // with round-half-away-from-zero semantics.
    const long long steps = std::llround((t + 1.0) / 50.0);
    const double s = (steps % 2 == 0) ? 0.5 : -0.5;
    r(0) = s;
    r(1) = -s;
  }
  return r;
}

Vector disturbance_eq60(int k) {
  const double t = static_cast<double>(k);
  Vector w(2);
  w(0) = 0.2 * std::sin(t / 10.0) + 0.1 * std::cos(t / 30.0);
  w(1) = 0.1 * std::sin(t / 20.0) + 0.2 * std::cos(t / 15.0);
  return w;
}

double WhiteNoise::canonical() {
  // Top 53 bits of the draw mapped onto [0,1); value set is stable across
  // platforms, unlike std::uniform_real_distribution.
  const std::uint64_t bits = rng_();
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

Vector WhiteNoise::draw() {
  Vector w(2);
  const double r1 = canonical();
  const double r2 = canonical();
  w(0) = 0.3 * r1;
  w(1) = 0.2 * r2;
  return w;
}

}  // namespace edmpc
