#include "l1mpc/lti.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace l1mpc {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string("non-finite entries in ") + what);
  }
}

// Strips leading (highest-degree) coefficients that are numerically zero,
// keeping at least one entry.
Eigen::VectorXd trim_poly(const Eigen::VectorXd& p) {
  const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
  int first = 0;
  while (first < p.size() - 1 && std::abs(p[first]) <= 1e-14 * scale) ++first;
  return p.tail(p.size() - first);
}

Eigen::VectorXd poly_mul(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.size() + b.size() - 1);
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

Eigen::VectorXd poly_add(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                         double sign = 1.0) {
  const Eigen::Index n = std::max(a.size(), b.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  out.tail(a.size()) = a;
  out.tail(b.size()) += sign * b;
  return out;
}

std::complex<double> poly_eval(const Eigen::VectorXd& p,
                               std::complex<double> s) {
  std::complex<double> acc = 0.0;
  for (int i = 0; i < p.size(); ++i) acc = acc * s + p[i];
  return acc;
}

// Characteristic polynomial of A via Faddeev-LeVerrier, highest degree first.
Eigen::VectorXd charpoly(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
  c[0] = 1.0;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    M = A * M + c[k - 1] * Eigen::MatrixXd::Identity(n, n);
    c[k] = -(A * M).trace() / k;
  }
  return c;
}

}  // namespace

FirstOrderTF::FirstOrderTF(double pole_, double dc_gain_)
    : pole(pole_), dc_gain(dc_gain_) {
  require(std::isfinite(pole) && pole > 0.0, "FirstOrderTF: pole must be > 0");
  require(std::isfinite(dc_gain), "FirstOrderTF: non-finite dc gain");
}

LtiSystem LtiSystem::continuous(Eigen::MatrixXd A, Eigen::MatrixXd B,
                                Eigen::MatrixXd C, Eigen::MatrixXd D) {
  LtiSystem sys{std::move(A), std::move(B), std::move(C), std::move(D), {}};
  check_finite(sys.A, "A");
  check_finite(sys.B, "B");
  check_finite(sys.C, "C");
  check_finite(sys.D, "D");
  require(sys.A.rows() == sys.A.cols(), "A must be square");
  require(sys.B.rows() == sys.A.rows(), "B row count mismatch");
  require(sys.C.cols() == sys.A.rows(), "C column count mismatch");
  require(sys.D.rows() == sys.C.rows() && sys.D.cols() == sys.B.cols(),
          "D dimension mismatch");
  return sys;
}

LtiSystem LtiSystem::discrete(Eigen::MatrixXd A, Eigen::MatrixXd B,
                              Eigen::MatrixXd C, Eigen::MatrixXd D,
                              double ts) {
  require(std::isfinite(ts) && ts > 0.0, "sample period must be > 0");
  LtiSystem sys =
      continuous(std::move(A), std::move(B), std::move(C), std::move(D));
  sys.ts = ts;
  return sys;
}

LtiSystem LtiSystem::constant(double k, int dims) {
  return continuous(Eigen::MatrixXd::Zero(0, 0), Eigen::MatrixXd::Zero(0, dims),
                    Eigen::MatrixXd::Zero(dims, 0),
                    Eigen::MatrixXd::Identity(dims, dims) * k);
}

Eigen::MatrixXcd LtiSystem::freq_response(double w) const {
  const std::complex<double> j(0.0, 1.0);
  const std::complex<double> s =
      is_continuous() ? j * w : std::exp(j * w * (*ts));
  const int n = order();
  if (n == 0) return D.cast<std::complex<double>>();
  Eigen::MatrixXcd sIA =
      s * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
  return C.cast<std::complex<double>>() *
             sIA.partialPivLu().solve(B.cast<std::complex<double>>()) +
         D.cast<std::complex<double>>();
}

Eigen::VectorXcd LtiSystem::poles() const {
  if (order() == 0) return Eigen::VectorXcd::Zero(0);
  return Eigen::EigenSolver<Eigen::MatrixXd>(A).eigenvalues();
}

Eigen::MatrixXd LtiSystem::dc_gain() const {
  if (order() == 0) return D;
  if (is_continuous()) return D - C * A.partialPivLu().solve(B);
  Eigen::MatrixXd IA = Eigen::MatrixXd::Identity(order(), order()) - A;
  return D + C * IA.partialPivLu().solve(B);
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& M) {
  check_finite(M, "expm argument");
  require(M.rows() == M.cols(), "expm: matrix must be square");
  const int n = static_cast<int>(M.rows());
  if (n == 0) return M;

  const double norm = M.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  }
  const Eigen::MatrixXd X = M / std::ldexp(1.0, squarings);

  // [6/6] Pade: c_k = c_{k-1} * (q-k+1) / (k*(2q-k+1)), q = 6.
  constexpr int q = 6;
  double c = 1.0;
  Eigen::MatrixXd numer = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd denom = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Xk = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= q; ++k) {
    c *= static_cast<double>(q - k + 1) / (k * (2 * q - k + 1));
    Xk = Xk * X;
    numer += c * Xk;
    denom += ((k % 2 == 0) ? c : -c) * Xk;
  }
  Eigen::MatrixXd F = denom.partialPivLu().solve(numer);
  for (int i = 0; i < squarings; ++i) F = F * F;
  return F;
}

LtiSystem discretize_zoh(const LtiSystem& sys, double step) {
  require(sys.is_continuous(), "discretize_zoh: system must be continuous");
  require(std::isfinite(step) && step > 0.0, "discretize_zoh: step must be > 0");
  const int n = sys.order();
  const int m = sys.inputs();
  // exp([[A, B], [0, 0]] * h) has Ad in the top-left block and Bd top-right.
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(n + m, n + m);
  block.topLeftCorner(n, n) = sys.A * step;
  block.topRightCorner(n, m) = sys.B * step;
  const Eigen::MatrixXd E = expm(block);
  return LtiSystem::discrete(E.topLeftCorner(n, n), E.topRightCorner(n, m),
                             sys.C, sys.D, step);
}

LtiRunner::LtiRunner(LtiSystem sys) : sys_(std::move(sys)) {
  require(!sys_.is_continuous(), "LtiRunner: system must be discrete");
  x_ = Eigen::VectorXd::Zero(sys_.order());
}

Eigen::VectorXd LtiRunner::step(const Eigen::VectorXd& u) {
  require(u.size() == sys_.inputs(), "LtiRunner: input dimension mismatch");
  if (!u.allFinite()) throw std::invalid_argument("LtiRunner: non-finite input");
  Eigen::VectorXd y = sys_.C * x_ + sys_.D * u;
  x_ = sys_.A * x_ + sys_.B * u;
  return y;
}

void LtiRunner::set_state(const Eigen::VectorXd& x) {
  require(x.size() == sys_.order(), "LtiRunner: state dimension mismatch");
  check_finite(x, "runner state");
  x_ = x;
}

L1NormResult l1_norm(const LtiSystem& sys, double horizon, double step) {
  require(sys.is_continuous(), "l1_norm: system must be continuous");
  require(sys.inputs() == 1 && sys.outputs() == 1, "l1_norm: SISO only");
  require(step > 0.0 && horizon > step, "l1_norm: bad horizon/step");

  L1NormResult res;
  res.value = std::abs(sys.D(0, 0));  // impulse feedthrough
  if (sys.order() == 0) return res;

  const Eigen::VectorXcd eigs = sys.poles();
  const double max_re = eigs.real().maxCoeff();
  if (!(max_re < 0.0)) {
    throw std::runtime_error("L1 norm undefined: system is not stable");
  }
  const double tau_slowest = 1.0 / (-max_re);
  res.horizon_sufficient = horizon >= 10.0 * tau_slowest;

  // g(k*step) = C exp(A k step) B, marched with the sampled state-transition
  // matrix so each sample is exact.
  const Eigen::MatrixXd Ad = expm(sys.A * step);
  const long n_steps = std::lround(horizon / step);
  Eigen::VectorXd x = sys.B.col(0);
  double prev = std::abs((sys.C * x)(0));
  double integral = 0.0;
  for (long k = 1; k <= n_steps; ++k) {
    x = Ad * x;
    const double cur = std::abs((sys.C * x)(0));
    integral += 0.5 * (prev + cur) * step;
    prev = cur;
  }

  // Exponential bound on the truncated tail, using the slowest decay rate.
  res.tail = sys.C.norm() * x.norm() / (-max_re);
  res.value += integral + res.tail;
  return res;
}

L1NormResult l1_norm(const LtiSystem& sys) {
  require(sys.is_continuous(), "l1_norm: system must be continuous");
  if (sys.order() == 0) {
    L1NormResult res;
    res.value = std::abs(sys.D(0, 0));
    return res;
  }
  const double max_re = sys.poles().real().maxCoeff();
  if (!(max_re < 0.0)) {
    throw std::runtime_error("L1 norm undefined: system is not stable");
  }
  const double tau = 1.0 / (-max_re);
  return l1_norm(sys, 20.0 * tau, tau / 1000.0);
}

namespace {

std::optional<double> combined_ts(const LtiSystem& a, const LtiSystem& b) {
  if (a.is_continuous() != b.is_continuous()) {
    throw std::invalid_argument("composition: mixed continuous/discrete");
  }
  if (!a.is_continuous() && std::abs(*a.ts - *b.ts) > 1e-15) {
    throw std::invalid_argument("composition: sample period mismatch");
  }
  return a.ts;
}

LtiSystem with_domain(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C,
                      Eigen::MatrixXd D, std::optional<double> ts) {
  if (ts) {
    return LtiSystem::discrete(std::move(A), std::move(B), std::move(C),
                               std::move(D), *ts);
  }
  return LtiSystem::continuous(std::move(A), std::move(B), std::move(C),
                               std::move(D));
}

}  // namespace

LtiSystem series(const LtiSystem& a, const LtiSystem& b) {
  require(b.inputs() == a.outputs(), "series: dimension mismatch");
  auto ts = combined_ts(a, b);
  const int na = a.order(), nb = b.order();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(na + nb, na + nb);
  A.topLeftCorner(na, na) = a.A;
  A.bottomLeftCorner(nb, na) = b.B * a.C;
  A.bottomRightCorner(nb, nb) = b.A;
  Eigen::MatrixXd B(na + nb, a.inputs());
  B.topRows(na) = a.B;
  B.bottomRows(nb) = b.B * a.D;
  Eigen::MatrixXd C(b.outputs(), na + nb);
  C.leftCols(na) = b.D * a.C;
  C.rightCols(nb) = b.C;
  return with_domain(A, B, C, b.D * a.D, ts);
}

LtiSystem parallel(const LtiSystem& a, const LtiSystem& b, double sign) {
  require(a.inputs() == b.inputs() && a.outputs() == b.outputs(),
          "parallel: dimension mismatch");
  auto ts = combined_ts(a, b);
  const int na = a.order(), nb = b.order();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(na + nb, na + nb);
  A.topLeftCorner(na, na) = a.A;
  A.bottomRightCorner(nb, nb) = b.A;
  Eigen::MatrixXd B(na + nb, a.inputs());
  B.topRows(na) = a.B;
  B.bottomRows(nb) = b.B;
  Eigen::MatrixXd C(a.outputs(), na + nb);
  C.leftCols(na) = a.C;
  C.rightCols(nb) = sign * b.C;
  return with_domain(A, B, C, a.D + sign * b.D, ts);
}

LtiSystem feedback(const LtiSystem& fwd, const LtiSystem& loop, double sign) {
  require(loop.inputs() == fwd.outputs() && fwd.inputs() == loop.outputs(),
          "feedback: dimension mismatch");
  auto ts = combined_ts(fwd, loop);
  const int ng = fwd.order(), nh = loop.order();
  const int p = fwd.outputs();

  // y = fwd(u + sign*loop(y)):  (I - sign*Dg*Dh) y = Cg xg + sign*Dg*Ch xh + Dg u
  Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(p, p) - sign * fwd.D * loop.D;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) {
    throw std::invalid_argument("feedback: ill-posed algebraic loop");
  }
  const Eigen::MatrixXd Minv = lu.inverse();

  Eigen::MatrixXd Cy(p, ng + nh);
  Cy.leftCols(ng) = Minv * fwd.C;
  Cy.rightCols(nh) = Minv * sign * fwd.D * loop.C;
  const Eigen::MatrixXd Dy = Minv * fwd.D;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ng + nh, ng + nh);
  A.topLeftCorner(ng, ng) = fwd.A;
  A.topRightCorner(ng, nh) = sign * fwd.B * loop.C;
  A.topRows(ng) += sign * fwd.B * loop.D * Cy;
  A.bottomRows(nh) = loop.B * Cy;
  A.bottomRightCorner(nh, nh) += loop.A;

  Eigen::MatrixXd B(ng + nh, fwd.inputs());
  B.topRows(ng) = fwd.B + sign * fwd.B * loop.D * Dy;
  B.bottomRows(nh) = loop.B * Dy;

  return with_domain(A, B, Cy, Dy, ts);
}

LtiSystem block_diag(const std::vector<LtiSystem>& blocks) {
  require(!blocks.empty(), "block_diag: empty list");
  int n = 0, m = 0, p = 0;
  for (const auto& b : blocks) {
    combined_ts(blocks.front(), b);
    n += b.order();
    m += b.inputs();
    p += b.outputs();
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, m);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(p, n);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(p, m);
  int in = 0, im = 0, ip = 0;
  for (const auto& b : blocks) {
    A.block(in, in, b.order(), b.order()) = b.A;
    B.block(in, im, b.order(), b.inputs()) = b.B;
    C.block(ip, in, b.outputs(), b.order()) = b.C;
    D.block(ip, im, b.outputs(), b.inputs()) = b.D;
    in += b.order();
    im += b.inputs();
    ip += b.outputs();
  }
  return with_domain(A, B, C, D, blocks.front().ts);
}

RationalTF::RationalTF(Eigen::VectorXd num_, Eigen::VectorXd den_)
    : num(trim_poly(num_)), den(trim_poly(den_)) {
  check_finite(num, "numerator");
  check_finite(den, "denominator");
  require(den.cwiseAbs().maxCoeff() > 0.0, "RationalTF: zero denominator");
}

RationalTF RationalTF::one() {
  return RationalTF(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
}

RationalTF RationalTF::from_first_order(const FirstOrderTF& tf) {
  Eigen::VectorXd num(1), den(2);
  num << tf.dc_gain * tf.pole;
  den << 1.0, tf.pole;
  return RationalTF(num, den);
}

RationalTF RationalTF::from_ss(const LtiSystem& sys) {
  require(sys.inputs() == 1 && sys.outputs() == 1, "from_ss: SISO only");
  if (sys.order() == 0) {
    return RationalTF(Eigen::VectorXd::Constant(1, sys.D(0, 0)),
                      Eigen::VectorXd::Ones(1));
  }
  // det(sI - A + B C) = den(s) + C adj(sI - A) B for rank-one B C.
  const Eigen::VectorXd den = charpoly(sys.A);
  const Eigen::VectorXd shifted = charpoly(sys.A - sys.B * sys.C);
  Eigen::VectorXd num = poly_add(shifted, den, -1.0);
  num = poly_add(num, den * sys.D(0, 0));
  return RationalTF(num, den);
}

std::complex<double> RationalTF::eval(std::complex<double> s) const {
  return poly_eval(num, s) / poly_eval(den, s);
}

RationalTF RationalTF::operator+(const RationalTF& o) const {
  return RationalTF(poly_add(poly_mul(num, o.den), poly_mul(o.num, den)),
                    poly_mul(den, o.den));
}

RationalTF RationalTF::operator-(const RationalTF& o) const {
  return RationalTF(poly_add(poly_mul(num, o.den), poly_mul(o.num, den), -1.0),
                    poly_mul(den, o.den));
}

RationalTF RationalTF::operator*(const RationalTF& o) const {
  return RationalTF(poly_mul(num, o.num), poly_mul(den, o.den));
}

RationalTF RationalTF::operator/(const RationalTF& o) const {
  require(o.num.cwiseAbs().maxCoeff() > 0.0, "RationalTF: division by zero");
  return RationalTF(poly_mul(num, o.den), poly_mul(den, o.num));
}

bool RationalTF::proper() const { return num.size() <= den.size(); }

LtiSystem RationalTF::realize() const {
  require(proper(), "realize: improper transfer function");
  const int n = static_cast<int>(den.size()) - 1;
  Eigen::VectorXd d = den / den[0];  // monic
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b.tail(num.size()) = num / den[0];

  const double feedthrough = b[0];
  // Remainder after dividing out the direct term: b(s) - d0*d(s).
  Eigen::VectorXd rem = b - feedthrough * d;

  if (n == 0) return LtiSystem::constant(feedthrough);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  A.topRightCorner(n - 1, n - 1).setIdentity();
  for (int i = 0; i < n; ++i) A(n - 1, i) = -d[n - i];
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 1);
  B(n - 1, 0) = 1.0;
  Eigen::MatrixXd C(1, n);
  for (int i = 0; i < n; ++i) C(0, i) = rem[n - i];
  Eigen::MatrixXd D = Eigen::MatrixXd::Constant(1, 1, feedthrough);
  return LtiSystem::continuous(A, B, C, D);
}

}  // namespace l1mpc
