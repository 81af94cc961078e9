#include "edmpc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"

using namespace edmpc;

namespace {

Vector v1(double a) {
  Vector v(1);
  v << a;
  return v;
}

HorizonMatrices frozen_horizon(const PJM& p, int N) {
  return horizon(std::vector<PJM>(static_cast<size_t>(N), p), N);
}

// Constant-coefficient description of the delayed second-order test plant
// y(k+1) = 0.8 y(k-1) + u(k-3) + 0.5 u(k-4).
PJM delayed_plant_pjm() {
  return PJM::siso({0.0, 0.8}, {0.0, 0.0, 0.0, 1.0, 0.5});
}

ControllerConfig delayed_plant_config(double lambda) {
  ControllerConfig cfg;
  cfg.N = 4;
  cfg.Ly = 2;
  cfg.Lu = 5;
  cfg.lambda = lambda;
  return cfg;
}

bool has_root_near(const std::vector<std::complex<double>>& roots,
                   std::complex<double> want, double tol_abs) {
  for (const auto& r : roots)
    if (std::abs(r - want) <= tol_abs) return true;
  return false;
}

// Greedy nearest pairing after dropping the origin roots contributed by the
// common delay normalization.
void check_same_root_sets(std::vector<std::complex<double>> a,
                          std::vector<std::complex<double>> b, double tol_abs) {
  auto strip = [](std::vector<std::complex<double>>& v) {
    v.erase(std::remove_if(v.begin(), v.end(),
                           [](std::complex<double> r) { return std::abs(r) < 1e-6; }),
            v.end());
  };
  strip(a);
  strip(b);
  REQUIRE(a.size() == b.size());
  for (const auto& ra : a) {
    size_t best = b.size();
    double bd = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < b.size(); ++i) {
      const double d = std::abs(b[i] - ra);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    REQUIRE(best < b.size());
    CHECK(bd <= tol_abs);
    b.erase(b.begin() + static_cast<std::ptrdiff_t>(best));
  }
}

ClosedLoopModel scalar_model(std::vector<double> den, std::vector<double> ref) {
  ClosedLoopModel m;
  m.My = 1;
  m.char_poly = ZPolyMatrix(1, 1);
  m.char_poly.at(0, 0) = ZPolynomial(std::move(den));
  m.ref_numerator = ZPolyMatrix(1, 1);
  m.ref_numerator.at(0, 0) = ZPolynomial(std::move(ref));
  return m;
}

PJM coupled_pjm() {
  PJM p = PJM::zeros(2, 2, 1, 2);
  Matrix fy(2, 2), fu1(2, 2), fu2(2, 2);
  fy << 0.1, 0.05, 0.02, 0.12;
  fu1 << 1.0, 0.2, 0.1, 0.9;
  fu2 << 0.3, 0.0, 0.05, 0.25;
  p.phi_y(1) = fy;
  p.phi_u(1) = fu1;
  p.phi_u(2) = fu2;
  return p;
}

}  // namespace

TEST_CASE("pure-gain single-step loop is deadbeat") {
  const PJM p = PJM::siso({0.0}, {2.5});
  const HorizonMatrices hm = frozen_horizon(p, 1);
  ControllerConfig cfg;
  cfg.N = 1;
  cfg.Ly = 1;
  cfg.Lu = 1;
  cfg.lambda = 0.0;

  const ClosedLoopModel m = char_poly_analysis1(p, hm, cfg);
  const ZPolynomial t = m.char_poly.at(0, 0).normalized();
  CHECK(t.degree() == 0);
  CHECK(t.coeff(0) == doctest::Approx(1.0).epsilon(1e-12));

  const StabilityReport rep = stability_check(m);
  CHECK(rep.stable);
  CHECK(rep.roots.empty());

  const SteadyStateReport ss = steady_state_error(m, InputKind::step);
  CHECK(!ss.divergent);
  CHECK(std::abs(ss.limit_error) <= 1e-12);
}

TEST_CASE("delayed plant closed loop is stable with the tabulated ramp error") {
  const PJM p = delayed_plant_pjm();
  const HorizonMatrices hm = frozen_horizon(p, 4);

  for (double lambda : {0.1, 1.0, 2.0}) {
    CAPTURE(lambda);
    const ControllerConfig cfg = delayed_plant_config(lambda);

    for (AnalysisForm form : {AnalysisForm::analysis1, AnalysisForm::analysis2}) {
      CAPTURE(static_cast<int>(form));
      const ClosedLoopModel m = form == AnalysisForm::analysis1
                                    ? char_poly_analysis1(p, hm, cfg)
                                    : char_poly_analysis2(p, hm, cfg);
      const StabilityReport rep = stability_check(m);
      CHECK(rep.stable);
      CHECK(rep.max_modulus < 1.0);

      const SteadyStateReport ramp = steady_state_error(m, InputKind::ramp);
      CHECK(!ramp.divergent);
      CHECK(std::abs(ramp.limit_error - 2.0 * lambda / 15.0) <= 1e-9);

      const SteadyStateReport step = steady_state_error(m, InputKind::step);
      CHECK(!step.divergent);
      CHECK(std::abs(step.limit_error) <= 1e-9);
    }
  }
}

TEST_CASE("weightless law needs the ridge on the delayed plant") {
  const PJM p = delayed_plant_pjm();
  const HorizonMatrices hm = frozen_horizon(p, 4);

  // The current-input response is zero under a 4-step delay, so the normal
  // matrix is rank deficient without regularization.
  ControllerConfig bare = delayed_plant_config(0.0);
  CHECK_THROWS_AS(char_poly_analysis1(p, hm, bare), SingularNormalMatrix);

  // The ridge enters the law exactly like the move penalty, so the ramp
  // error shrinks proportionally instead of vanishing outright.
  ControllerConfig ridged = delayed_plant_config(0.0);
  ridged.ridge = 1e-5;
  const ClosedLoopModel m = char_poly_analysis1(p, hm, ridged);
  const StabilityReport rep = stability_check(m);
  CHECK(rep.stable);
  const SteadyStateReport ramp = steady_state_error(m, InputKind::ramp);
  CHECK(!ramp.divergent);
  CHECK(std::abs(ramp.limit_error) <= 1e-5);
}

TEST_CASE("large move penalty recovers the open-loop poles") {
  const PJM p = delayed_plant_pjm();
  const HorizonMatrices hm = frozen_horizon(p, 4);
  const ControllerConfig cfg = delayed_plant_config(1e8);

  for (AnalysisForm form : {AnalysisForm::analysis1, AnalysisForm::analysis2}) {
    CAPTURE(static_cast<int>(form));
    const ClosedLoopModel m = form == AnalysisForm::analysis1
                                  ? char_poly_analysis1(p, hm, cfg)
                                  : char_poly_analysis2(p, hm, cfg);
    const StabilityReport rep = stability_check(m);
    // Delta and the autoregressive factor 1 - 0.8 z^-2 dominate; the
    // integrator root sits just inside the circle at any finite penalty.
    const double r = std::sqrt(0.8);
    CHECK(has_root_near(rep.roots, {1.0, 0.0}, 1e-3));
    CHECK(has_root_near(rep.roots, {r, 0.0}, 1e-3));
    CHECK(has_root_near(rep.roots, {-r, 0.0}, 1e-3));
    CHECK(rep.max_modulus == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(rep.max_modulus <= 1.0);
  }
}

TEST_CASE("both closed-loop forms describe the same system") {
  const PJM p = delayed_plant_pjm();
  const HorizonMatrices hm = frozen_horizon(p, 4);
  const ControllerConfig cfg = delayed_plant_config(1.0);

  const ClosedLoopModel m1 = char_poly_analysis1(p, hm, cfg);
  const ClosedLoopModel m2 = char_poly_analysis2(p, hm, cfg);

  check_same_root_sets(stability_check(m1).roots, stability_check(m2).roots, 1e-6);

  const ZRational g1 = reference_transfer(m1);
  const ZRational g2 = reference_transfer(m2);
  for (double zinv : {0.3, -0.45, 0.77}) {
    const double val1 = g1.num.eval(zinv) / g1.den.eval(zinv);
    const double val2 = g2.num.eval(zinv) / g2.den.eval(zinv);
    CHECK(val1 == doctest::Approx(val2).epsilon(1e-9));
  }
}

TEST_CASE("unstable open loop stays unstable under a heavy move penalty") {
  // y(k+1) = 1.2 y(k) + u(k-1), with the move penalty so large the controller
  // barely acts.
  const PJM p = PJM::siso({1.2}, {0.0, 1.0});
  const HorizonMatrices hm = frozen_horizon(p, 2);
  ControllerConfig cfg;
  cfg.N = 2;
  cfg.Ly = 1;
  cfg.Lu = 2;
  cfg.lambda = 1e6;

  const ClosedLoopModel m = char_poly_analysis1(p, hm, cfg);
  const StabilityReport rep = stability_check(m);
  CHECK(!rep.stable);
  CHECK(rep.max_modulus > 1.0 + 1e-6);
  CHECK(has_root_near(rep.roots, {1.2, 0.0}, 1e-3));

  CHECK_THROWS_AS(steady_state_error(m, InputKind::step), UnstablePole);
}

TEST_CASE("stability check hand cases") {
  SUBCASE("single pole inside") {
    const ClosedLoopModel m = scalar_model({1.0, -0.5}, {0.5});
    const StabilityReport rep = stability_check(m);
    CHECK(rep.stable);
    CHECK(rep.max_modulus == doctest::Approx(0.5).epsilon(1e-10));
  }

  SUBCASE("pole on the unit circle is not stable") {
    const ClosedLoopModel m = scalar_model({1.0, -1.0}, {0.5});
    const StabilityReport rep = stability_check(m);
    CHECK(!rep.stable);
    CHECK(rep.max_modulus == doctest::Approx(1.0).epsilon(1e-10));
  }

  SUBCASE("uncancelled integrator reports a divergent limit") {
    // den = (1 - z^-1)(1 - 0.5 z^-1), reference numerator misses the zero.
    const ClosedLoopModel m = scalar_model({1.0, -1.5, 0.5}, {1.0});
    const SteadyStateReport ss = steady_state_error(m, InputKind::step);
    CHECK(ss.divergent);
    CHECK(std::isnan(ss.limit_error));
  }
}

TEST_CASE("error transfer realization reproduces the limit") {
  const PJM p = delayed_plant_pjm();
  const HorizonMatrices hm = frozen_horizon(p, 4);
  const ControllerConfig cfg = delayed_plant_config(1.0);
  const ClosedLoopModel m = char_poly_analysis1(p, hm, cfg);

  const int steps = 600;
  std::vector<double> ramp(static_cast<size_t>(steps));
  for (int k = 0; k < steps; ++k) ramp[static_cast<size_t>(k)] = k;
  const std::vector<double> err = simulate_rational(error_transfer(m).reduced(), ramp);
  CHECK(std::abs(err.back() - 2.0 / 15.0) <= 1e-6);

  std::vector<double> step_in(static_cast<size_t>(steps), 1.0);
  const std::vector<double> out = simulate_rational(reference_transfer(m).reduced(), step_in);
  CHECK(std::abs(out.back() - 1.0) <= 1e-6);
}

TEST_CASE("disturbance transfer dispatch") {
  const PJM p = delayed_plant_pjm();
  const HorizonMatrices hm = frozen_horizon(p, 4);

  SUBCASE("preview with a free move cancels the disturbance") {
    ControllerConfig cfg = delayed_plant_config(0.0);
    cfg.ridge = 1e-8;
    cfg.mode = ControlMode::uiMPC_D;
    const ClosedLoopModel m = char_poly_analysis1(p, hm, cfg);
    const ZTransfer t = disturbance_transfer(m, cfg, true, true);
    for (int r = 0; r < t.num.rows(); ++r)
      for (int c = 0; c < t.num.cols(); ++c) CHECK(t.num.at(r, c).is_zero());
    CHECK(t.den.coeff(0) == 1.0);
  }

  SUBCASE("preview with a move penalty leaves the residual increment term") {
    ControllerConfig cfg = delayed_plant_config(0.7);
    cfg.mode = ControlMode::uiMPC_D;
    const ClosedLoopModel m = char_poly_analysis2(p, hm, cfg);
    const ZTransfer t = disturbance_transfer(m, cfg, true, true);
    const ZPolynomial want = (ZPolynomial::delta() * 0.7).shifted(cfg.N - 1);
    const ZPolynomial got = t.num.at(0, 0);
    for (int i = 0; i <= std::max(want.degree(), got.degree()); ++i)
      CHECK(got.coeff(i) == doctest::Approx(want.coeff(i)).epsilon(1e-12));
    // Shares the closed-loop denominator.
    const ZPolynomial den_diff = t.den - m.char_poly.at(0, 0);
    CHECK(den_diff.is_zero(1e-15));
  }

  SUBCASE("full-rank weightless law passes the bare increment") {
    ControllerConfig cfg;
    cfg.N = 1;
    cfg.Ly = 1;
    cfg.Lu = 1;
    cfg.lambda = 0.0;
    const PJM g = PJM::siso({0.0}, {1.0});
    const ClosedLoopModel m = char_poly_analysis2(g, frozen_horizon(g, 1), cfg);
    const ZTransfer t = disturbance_transfer(m, cfg, false, true);
    CHECK(t.num.at(0, 0).coeff(0) == 1.0);
    CHECK(t.num.at(0, 0).coeff(1) == -1.0);
    CHECK(t.num.at(0, 0).degree() <= 1);
    CHECK(t.den.coeff(0) == 1.0);
    CHECK(t.den.degree() == 0);
  }

  SUBCASE("delay-two configuration sums two increments") {
    ControllerConfig cfg;
    cfg.N = 2;
    cfg.Ly = 1;
    cfg.Lu = 2;
    cfg.lambda = 0.0;
    const PJM g = PJM::siso({0.0}, {0.0, 1.0});
    const ClosedLoopModel m = char_poly_analysis2(g, frozen_horizon(g, 2), cfg);
    const ZTransfer t = disturbance_transfer(m, cfg, false, false);
    CHECK(t.num.at(0, 0).coeff(0) == 1.0);
    CHECK(t.num.at(0, 0).coeff(1) == 1.0);
    CHECK(t.num.at(0, 0).degree() <= 1);
    CHECK(t.den.degree() == 0);
  }

  SUBCASE("uncovered configurations are reported") {
    ControllerConfig cfg = delayed_plant_config(1.0);
    const ClosedLoopModel m = char_poly_analysis2(p, hm, cfg);
    CHECK_THROWS_AS(disturbance_transfer(m, cfg, false, true), UnsupportedConfiguration);
    ControllerConfig n3 = cfg;
    n3.N = 3;
    n3.lambda = 0.0;
    CHECK_THROWS_AS(disturbance_transfer(m, n3, false, false), UnsupportedConfiguration);
  }
}

TEST_CASE("full-rank weightless loop passes the disturbance increment through") {
  // Twin runs of the real controller on y(k+1) = u(k) + w(k+1); the output
  // deviation must equal the disturbance increment sample for sample.
  const PJM p = PJM::siso({0.0}, {1.0});
  const HorizonMatrices hm = frozen_horizon(p, 1);
  ControllerConfig cfg;
  cfg.N = 1;
  cfg.Ly = 1;
  cfg.Lu = 1;
  cfg.lambda = 0.0;

  auto run = [&](double wamp) {
    std::vector<double> out;
    double y = 0.0, y_prev = 0.0, u_m1 = 0.0, u_m2 = 0.0;
    for (int k = 0; k < 40; ++k) {
      Vector dx(2);
      dx << y - y_prev, u_m1 - u_m2;
      const ControlStep st =
          unconstrained_step(hm, cfg, v1(1.0), v1(y), LiftedState{dx}, v1(u_m1), Vector());
      const double u = u_m1 + st.dU(0);
      const double w_next = (k + 1 >= 10) ? wamp : 0.0;
      const double y_next = u + w_next;
      y_prev = y;
      y = y_next;
      u_m2 = u_m1;
      u_m1 = u;
      out.push_back(y_next);
    }
    return out;
  };

  const std::vector<double> clean = run(0.0);
  const std::vector<double> shifted = run(0.2);
  for (int k = 0; k < 40; ++k) {
    const int j = k + 1;  // out[k] holds y(k+1)
    const double w_j = j >= 10 ? 0.2 : 0.0;
    const double w_jm1 = j - 1 >= 10 ? 0.2 : 0.0;
    const double dev = shifted[static_cast<size_t>(k)] - clean[static_cast<size_t>(k)];
    CHECK(std::abs(dev - (w_j - w_jm1)) <= 1e-10);
  }
}

TEST_CASE("coupled channels") {
  const PJM p = coupled_pjm();
  const HorizonMatrices hm = frozen_horizon(p, 2);

  SUBCASE("determinant stability check completes") {
    ControllerConfig cfg;
    cfg.N = 2;
    cfg.Ly = 1;
    cfg.Lu = 2;
    cfg.lambda = 0.5;
    const ClosedLoopModel m = char_poly_analysis2(p, hm, cfg);
    const StabilityReport rep = stability_check(m);
    CHECK(std::isfinite(rep.max_modulus));
    CHECK(!rep.roots.empty());
  }

  SUBCASE("weightless law has zero static error") {
    ControllerConfig cfg;
    cfg.N = 2;
    cfg.Ly = 1;
    cfg.Lu = 2;
    cfg.lambda = 0.0;
    const ClosedLoopModel m = char_poly_analysis2(p, hm, cfg);
    const SteadyStateReport ss = steady_state_error(m, InputKind::step);
    CHECK(!ss.divergent);
    CHECK(ss.limit_error == 0.0);
  }

  SUBCASE("penalized coupled limit is reported as unsupported") {
    ControllerConfig cfg;
    cfg.N = 2;
    cfg.Ly = 1;
    cfg.Lu = 2;
    cfg.lambda = 0.5;
    const ClosedLoopModel m = char_poly_analysis2(p, hm, cfg);
    CHECK_THROWS_AS(steady_state_error(m, InputKind::step), UnsupportedConfiguration);
  }

  SUBCASE("first-form and scalar transfers require one channel") {
    ControllerConfig cfg;
    cfg.N = 2;
    cfg.Ly = 1;
    cfg.Lu = 2;
    cfg.lambda = 0.5;
    CHECK_THROWS_AS(char_poly_analysis1(p, hm, cfg), NotSISO);
    const ClosedLoopModel m = char_poly_analysis2(p, hm, cfg);
    CHECK_THROWS_AS(reference_transfer(m), NotSISO);
    CHECK_THROWS_AS(error_transfer(m), NotSISO);
  }
}
