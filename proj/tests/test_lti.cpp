#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "l1mpc/lti.hpp"

using namespace l1mpc;

namespace {

LtiSystem first_order(double pole, double gain = 1.0) {
  return RationalTF::from_first_order(FirstOrderTF(pole, gain)).realize();
}

// Random stable continuous system of order 1..max_order: a random matrix
// shifted left of the imaginary axis by a random margin.
LtiSystem random_stable(std::mt19937_64& rng, int max_order = 4) {
  std::uniform_int_distribution<int> order_d(1, max_order);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  std::uniform_real_distribution<double> margin(0.1, 2.0);
  const int n = order_d(rng);
  Eigen::MatrixXd R(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) R(i, j) = entry(rng);
  const double max_re =
      Eigen::EigenSolver<Eigen::MatrixXd>(R).eigenvalues().real().maxCoeff();
  Eigen::MatrixXd A = R - (max_re + margin(rng)) * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd B(n, 1), C(1, n);
  for (int i = 0; i < n; ++i) {
    B(i, 0) = entry(rng);
    C(0, i) = entry(rng);
  }
  return LtiSystem::continuous(A, B, C, Eigen::MatrixXd::Zero(1, 1));
}

double spectral_radius(const Eigen::MatrixXd& A) {
  if (A.rows() == 0) return 0.0;
  return Eigen::EigenSolver<Eigen::MatrixXd>(A).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("zoh of first-order lag matches the scalar closed form") {
  const double m = 1.0, h = 0.1;
  LtiSystem d = discretize_zoh(first_order(m), h);
  CHECK(d.A(0, 0) == doctest::Approx(std::exp(-m * h)).epsilon(1e-12));
  CHECK(d.B(0, 0) == doctest::Approx(1.0 - std::exp(-m * h)).epsilon(1e-12));
  CHECK(d.ts.value() == h);
}

TEST_CASE("zoh at vanishing step approaches identity hold") {
  LtiSystem sys = first_order(3.0);
  LtiSystem d = discretize_zoh(sys, 1e-9);
  CHECK(std::abs(d.A(0, 0) - 1.0) < 1e-6);
  CHECK(std::abs(d.B(0, 0)) < 1e-6);
}

TEST_CASE("zoh of a double integrator, hand-integrated") {
  Eigen::MatrixXd A(2, 2), B(2, 1), C(1, 2), D(1, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  C << 1, 0;
  D << 0;
  LtiSystem d = discretize_zoh(LtiSystem::continuous(A, B, C, D), 1.0);
  CHECK(d.A(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.A(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.A(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.A(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.B(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.B(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zoh rejects non-finite input") {
  Eigen::MatrixXd A(1, 1), B(1, 1), C(1, 1), D(1, 1);
  A << std::numeric_limits<double>::quiet_NaN();
  B << 1;
  C << 1;
  D << 0;
  CHECK_THROWS_AS(LtiSystem::continuous(A, B, C, D), std::invalid_argument);
}

TEST_CASE("runner equilibrium and DC gain") {
  LtiSystem d = discretize_zoh(first_order(1.0), 0.1);
  LtiRunner run(d);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  for (int k = 0; k < 10; ++k) CHECK(run.step(zero)(0) == 0.0);

  run.reset();
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  double y = 0.0;
  for (int k = 0; k < 1000; ++k) y = run.step(one)(0);
  CHECK(y == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("runner pulse response equals the matrix-power oracle") {
  LtiSystem d = discretize_zoh(first_order(1.0), 0.1);
  LtiRunner run(d);
  Eigen::VectorXd pulse = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  std::vector<double> response;
  response.push_back(run.step(pulse)(0));
  for (int k = 1; k < 30; ++k) response.push_back(run.step(zero)(0));

  // Oracle: y(0) = D, y(k) = C A^{k-1} B.
  CHECK(response[0] == doctest::Approx(d.D(0, 0)).epsilon(1e-12));
  Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(1, 1);
  for (int k = 1; k < 30; ++k) {
    const double expected = (d.C * Ak * d.B)(0, 0);
    CHECK(response[k] == doctest::Approx(expected).epsilon(1e-12));
    Ak = Ak * d.A;
  }
}

TEST_CASE("runner stepping reproduces the discrete convolution sum") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    LtiSystem d = discretize_zoh(random_stable(rng), 0.05);
    LtiRunner run(d);
    const int N = 50;
    std::vector<double> u(N), y(N);
    for (int k = 0; k < N; ++k) {
      u[k] = dist(rng);
      y[k] = run.step(Eigen::VectorXd::Constant(1, u[k]))(0);
    }
    for (int k = 0; k < N; ++k) {
      double conv = d.D(0, 0) * u[k];
      Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(d.order(), d.order());
      for (int j = k - 1; j >= 0; --j) {
        conv += (d.C * Ak * d.B)(0, 0) * u[j];
        Ak = Ak * d.A;
      }
      CHECK(std::abs(y[k] - conv) < 1e-10);
    }
  }
}

TEST_CASE("zoh of stable systems is stable") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> step_d(0.001, 0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    LtiSystem sys = random_stable(rng);
    LtiSystem d = discretize_zoh(sys, step_d(rng));
    CHECK(spectral_radius(d.A) < 1.0);
  }
}

TEST_CASE("l1 norm of a unit-DC low-pass filter is 1") {
  for (double w : {0.5, 1.0, 2.0, 10.0}) {
    L1NormResult res = l1_norm(first_order(w));
    CHECK(res.value == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(res.horizon_sufficient);
  }
}

TEST_CASE("l1 norm of s/(s+1)^2 equals 2/e") {
  // G = M(1-C) with m = w = 1: s/(s+1)^2, impulse response (1-t)e^-t.
  RationalTF M = RationalTF::from_first_order(FirstOrderTF(1.0));
  RationalTF C = RationalTF::from_first_order(FirstOrderTF(1.0));
  RationalTF G = M * (RationalTF::one() - C);
  L1NormResult res = l1_norm(G.realize());

  const double closed_form = 2.0 / std::exp(1.0);
  CHECK(res.value == doctest::Approx(closed_form).epsilon(1e-4));

  // Independent oracle: fine trapezoid on the analytic impulse response.
  const double h = 1e-4;
  double oracle = 0.0;
  auto g = [](double t) { return std::abs((1.0 - t) * std::exp(-t)); };
  for (long k = 0; k < 300000; ++k) {
    oracle += 0.5 * (g(k * h) + g((k + 1) * h)) * h;
  }
  CHECK(res.value == doctest::Approx(oracle).epsilon(1e-4));
}

TEST_CASE("l1 norm is absolutely homogeneous") {
  RationalTF M = RationalTF::from_first_order(FirstOrderTF(1.0));
  RationalTF C = RationalTF::from_first_order(FirstOrderTF(1.0));
  RationalTF G = M * (RationalTF::one() - C);
  RationalTF twoG = RationalTF(2.0 * G.num, G.den);
  const double n1 = l1_norm(G.realize()).value;
  const double n2 = l1_norm(twoG.realize()).value;
  CHECK(n2 == doctest::Approx(2.0 * n1).epsilon(1e-6));
}

TEST_CASE("l1 norm rejects unstable systems") {
  Eigen::MatrixXd A(1, 1), B(1, 1), C(1, 1), D(1, 1);
  A << 0.5;
  B << 1;
  C << 1;
  D << 0;
  CHECK_THROWS_WITH_AS(l1_norm(LtiSystem::continuous(A, B, C, D)),
                       doctest::Contains("L1 norm undefined"),
                       std::runtime_error);
}

TEST_CASE("l1 norm flags an insufficient horizon") {
  LtiSystem sys = first_order(1.0);
  CHECK_FALSE(l1_norm(sys, 5.0, 0.001).horizon_sufficient);
  CHECK(l1_norm(sys, 20.0, 0.001).horizon_sufficient);
}

TEST_CASE("l1 norm lower-bounded by |DC gain|, tight for sign-constant response") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    LtiSystem sys = random_stable(rng);
    const double dc = std::abs(sys.dc_gain()(0, 0));
    const double n = l1_norm(sys).value;
    CHECK(n >= dc * (1.0 - 1e-6));
  }
  // First-order responses do not change sign: equality within quadrature error.
  std::uniform_real_distribution<double> pole(0.2, 8.0), gain(0.1, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double g = gain(rng);
    LtiSystem sys = first_order(pole(rng), g);
    CHECK(l1_norm(sys).value == doctest::Approx(g).epsilon(1e-3));
  }
}

TEST_CASE("series with identity preserves the frequency response") {
  LtiSystem sys = first_order(1.0);
  LtiSystem chained = series(sys, LtiSystem::constant(1.0));
  for (double w : {0.1, 1.0, 10.0}) {
    const auto expected = sys.freq_response(w)(0, 0);
    const auto got = chained.freq_response(w)(0, 0);
    CHECK(std::abs(got - expected) < 1e-12);
  }
}

TEST_CASE("1 - C realizes s/(s+1)") {
  LtiSystem C = first_order(1.0);
  LtiSystem one_minus_c = parallel(LtiSystem::constant(1.0), C, -1.0);
  RationalTF expected(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(1.0, 1.0));
  for (double w : {0.1, 1.0, 10.0}) {
    const auto got = one_minus_c.freq_response(w)(0, 0);
    CHECK(std::abs(got - expected.eval({0.0, w})) < 1e-9);
  }
}

TEST_CASE("loop transfer collapses to M when the plant equals M") {
  // H = A*M / (C*A + (1-C)*M) with A = M reduces to M for any valid C.
  for (double m : {1.0, 2.5}) {
    for (double wc : {1.0, 4.0}) {
      RationalTF M = RationalTF::from_first_order(FirstOrderTF(m));
      RationalTF C = RationalTF::from_first_order(FirstOrderTF(wc));
      RationalTF A = M;
      RationalTF H = (A * M) / (C * A + (RationalTF::one() - C) * M);
      LtiSystem Hss = H.realize();
      for (double w : {0.1, 1.0, 10.0}) {
        const auto got = Hss.freq_response(w)(0, 0);
        const auto expected = M.eval({0.0, w});
        CHECK(std::abs(got - expected) < 1e-9);
      }
    }
  }
}

TEST_CASE("compositions match pointwise frequency-domain formulas") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    LtiSystem a = random_stable(rng);
    LtiSystem b = random_stable(rng);
    LtiSystem ser = series(a, b);
    LtiSystem par = parallel(a, b);
    LtiSystem dif = parallel(a, b, -1.0);
    LtiSystem fb = feedback(a, b, -1.0);
    for (int i = 0; i < 20; ++i) {
      const double w = std::pow(10.0, -2.0 + 4.0 * i / 19.0);
      const auto ga = a.freq_response(w)(0, 0);
      const auto gb = b.freq_response(w)(0, 0);
      const auto rel = [](std::complex<double> got, std::complex<double> want) {
        return std::abs(got - want) / std::max(1e-12, std::abs(want));
      };
      CHECK(rel(ser.freq_response(w)(0, 0), ga * gb) < 1e-8);
      CHECK(rel(par.freq_response(w)(0, 0), ga + gb) < 1e-8);
      CHECK(rel(dif.freq_response(w)(0, 0), ga - gb) < 1e-8);
      CHECK(rel(fb.freq_response(w)(0, 0), ga / (1.0 + ga * gb)) < 1e-8);
    }
  }
}

TEST_CASE("feedback rejects an algebraic loop") {
  LtiSystem unit = LtiSystem::constant(1.0);
  CHECK_THROWS_AS(feedback(unit, unit, 1.0), std::invalid_argument);
}

TEST_CASE("rational round-trip through a state-space realization") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    LtiSystem sys = random_stable(rng);
    RationalTF tf = RationalTF::from_ss(sys);
    for (double w : {0.05, 0.7, 3.0, 25.0}) {
      const auto want = sys.freq_response(w)(0, 0);
      const auto got = tf.eval({0.0, w});
      CHECK(std::abs(got - want) < 1e-7 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("expm matches the scalar exponential and the 2x2 nilpotent case") {
  Eigen::MatrixXd a(1, 1);
  a << -2.5;
  CHECK(expm(a)(0, 0) == doctest::Approx(std::exp(-2.5)).epsilon(1e-13));

  Eigen::MatrixXd nil(2, 2);
  nil << 0, 1, 0, 0;
  Eigen::MatrixXd e = expm(nil);
  CHECK(e(0, 0) == doctest::Approx(1.0));
  CHECK(e(0, 1) == doctest::Approx(1.0));
  CHECK(e(1, 0) == doctest::Approx(0.0));
  CHECK(e(1, 1) == doctest::Approx(1.0));
}
