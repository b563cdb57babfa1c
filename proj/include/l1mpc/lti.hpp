#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <vector>

namespace l1mpc {

/// First-order lag dc_gain * pole / (s + pole). The reference models and
/// control filters used throughout are of this form with unit DC gain.
struct FirstOrderTF {
  double pole;
  double dc_gain;

  explicit FirstOrderTF(double pole_, double dc_gain_ = 1.0);
};

/// State-space LTI system. `ts` empty means continuous time, otherwise the
/// system is discrete with the given sample period.
struct LtiSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::MatrixXd D;
  std::optional<double> ts;

  static LtiSystem continuous(Eigen::MatrixXd A, Eigen::MatrixXd B,
                              Eigen::MatrixXd C, Eigen::MatrixXd D);
  static LtiSystem discrete(Eigen::MatrixXd A, Eigen::MatrixXd B,
                            Eigen::MatrixXd C, Eigen::MatrixXd D, double ts);
  /// Static gain block y = k*u (order zero).
  static LtiSystem constant(double k, int dims = 1);

  int order() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }
  int outputs() const { return static_cast<int>(C.rows()); }
  bool is_continuous() const { return !ts.has_value(); }

  /// Frequency response at s = jw (continuous) or z = exp(jw*ts) (discrete).
  Eigen::MatrixXcd freq_response(double w) const;

  Eigen::VectorXcd poles() const;
  /// DC gain C (-A)^-1 B + D for continuous, C (I-A)^-1 B + D for discrete.
  Eigen::MatrixXd dc_gain() const;
};

/// Matrix exponential, scaling-and-squaring with a [6/6] Pade approximant.
Eigen::MatrixXd expm(const Eigen::MatrixXd& M);

/// Exact zero-order-hold discretization of a continuous-time system.
LtiSystem discretize_zoh(const LtiSystem& sys, double step);

/// Steps a discrete system one sample at a time. Owns its state.
class LtiRunner {
 public:
  explicit LtiRunner(LtiSystem sys);

  /// y(k) = C x(k) + D u(k), then x(k+1) = A x(k) + B u(k).
  Eigen::VectorXd step(const Eigen::VectorXd& u);

  const LtiSystem& system() const { return sys_; }
  const Eigen::VectorXd& state() const { return x_; }
  void set_state(const Eigen::VectorXd& x);
  void reset() { x_.setZero(); }

 private:
  LtiSystem sys_;
  Eigen::VectorXd x_;
};

struct L1NormResult {
  double value = 0.0;          // quadrature + tail bound (+ |D| for biproper)
  double tail = 0.0;           // analytic tail contribution beyond the horizon
  bool horizon_sufficient = true;  // horizon covered >= 10 slowest time constants
};

/// L1 norm of a stable continuous SISO system: integral of |impulse response|
/// over [0, horizon] by trapezoidal quadrature plus an exponential tail bound.
/// Throws if any pole has nonnegative real part.
L1NormResult l1_norm(const LtiSystem& sys, double horizon, double step);

/// Same, with step = tau/1000 and horizon = 20*tau where tau is the slowest
/// time constant.
L1NormResult l1_norm(const LtiSystem& sys);

/// Series interconnection u -> a -> b -> y.
LtiSystem series(const LtiSystem& a, const LtiSystem& b);
/// y = a(u) + sign*b(u).
LtiSystem parallel(const LtiSystem& a, const LtiSystem& b, double sign = 1.0);
/// Closed loop y = fwd(u + sign*loop(y)); sign = -1 is negative feedback.
/// Throws if the interconnection has an algebraic loop (ill-posed).
LtiSystem feedback(const LtiSystem& fwd, const LtiSystem& loop,
                   double sign = -1.0);
/// Block-diagonal stacking of SISO (or square) subsystems.
LtiSystem block_diag(const std::vector<LtiSystem>& blocks);

/// SISO rational transfer function num(s)/den(s), coefficients stored
/// highest degree first. Used for symbolic-level loop algebra before
/// realization.
struct RationalTF {
  Eigen::VectorXd num;
  Eigen::VectorXd den;

  RationalTF(Eigen::VectorXd num_, Eigen::VectorXd den_);
  static RationalTF one();
  static RationalTF from_first_order(const FirstOrderTF& tf);
  /// Transfer function of a SISO state-space system (Faddeev-LeVerrier).
  static RationalTF from_ss(const LtiSystem& sys);

  std::complex<double> eval(std::complex<double> s) const;

  RationalTF operator+(const RationalTF& o) const;
  RationalTF operator-(const RationalTF& o) const;
  RationalTF operator*(const RationalTF& o) const;
  RationalTF operator/(const RationalTF& o) const;

  bool proper() const;
  /// Controllable-canonical realization. Requires a proper function.
  LtiSystem realize() const;
};

}  // namespace l1mpc
