#include "l1mpc/qp.hpp"

#include <cmath>
#include <limits>

namespace l1mpc {

namespace {

constexpr double kFeasTol = 1e-10;
constexpr double kRateTol = 1e-12;

double objective_of(const QpSpec& spec, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(spec.hessian * x) + spec.linear.dot(x);
}

double kkt_residual_of(const QpSpec& spec, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& dual) {
  double stat = (spec.hessian * x + spec.linear +
                 spec.ineq_matrix.transpose() * dual)
                    .cwiseAbs()
                    .maxCoeff();
  double feas = 0.0, comp = 0.0;
  if (spec.constraints() > 0) {
    const Eigen::VectorXd s = spec.ineq_matrix * x - spec.ineq_bound;
    feas = std::max(0.0, s.maxCoeff());
    comp = (dual.array() * s.array()).abs().maxCoeff();
  }
  return std::max({stat, feas, comp});
}

}  // namespace

void QpSpec::validate() const {
  if (hessian.rows() != hessian.cols()) {
    throw std::invalid_argument("QpSpec: hessian must be square");
  }
  if (linear.size() != hessian.rows()) {
    throw std::invalid_argument("QpSpec: linear term dimension mismatch");
  }
  if (ineq_matrix.rows() != ineq_bound.size() ||
      (ineq_matrix.rows() > 0 && ineq_matrix.cols() != hessian.rows())) {
    throw std::invalid_argument("QpSpec: inequality dimension mismatch");
  }
  if (!hessian.allFinite() || !linear.allFinite() ||
      !ineq_matrix.allFinite() || !ineq_bound.allFinite()) {
    throw std::invalid_argument("QpSpec: non-finite entries");
  }
  const double scale = std::max(1.0, hessian.cwiseAbs().maxCoeff());
  if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("QpSpec: hessian not symmetric");
  }
}

QpSolution solve_qp(const QpSpec& spec) {
  spec.validate();
  const int d = spec.dim();
  const int c = spec.constraints();
  const int cap = 10 * d + 100;

  Eigen::LLT<Eigen::MatrixXd> llt(spec.hessian);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("QpSpec: hessian not positive definite");
  }

  Eigen::VectorXd x = llt.solve(-spec.linear);
  std::vector<int> W;                 // working set (row indices into A)
  std::vector<double> lamW;           // multipliers for W
  int iterations = 0;

  auto assemble = [&](void) {
    QpSolution sol;
    sol.primal = x;
    sol.dual = Eigen::VectorXd::Zero(c);
    for (size_t i = 0; i < W.size(); ++i) sol.dual[W[i]] = lamW[i];
    sol.active_set = W;
    sol.objective = objective_of(spec, x);
    sol.kkt_residual = kkt_residual_of(spec, x, sol.dual);
    sol.iterations = iterations;
    return sol;
  };

  if (c == 0) return assemble();

  const double feas_tol =
      kFeasTol * std::max(1.0, spec.ineq_bound.cwiseAbs().maxCoeff());

  while (true) {
    // Most violated constraint outside the working set.
    int p = -1;
    double worst = feas_tol;
    for (int i = 0; i < c; ++i) {
      if (std::find(W.begin(), W.end(), i) != W.end()) continue;
      const double s = spec.ineq_matrix.row(i).dot(x) - spec.ineq_bound[i];
      if (s > worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) return assemble();

    const Eigen::RowVectorXd ap = spec.ineq_matrix.row(p);
    double mu_p = 0.0;  // multiplier accumulated for p while stepping

    // Step toward satisfying p, dropping blocking constraints on the way.
    while (true) {
      if (++iterations > cap) {
        throw QpError("QP iteration cap exceeded", assemble());
      }
      const int q = static_cast<int>(W.size());

      // KKT system for the direction: H dx + N' dlam = -ap', N dx = 0.
      Eigen::VectorXd dx(d);
      Eigen::VectorXd dlam(q);
      if (q == 0) {
        dx = llt.solve(-ap.transpose());
      } else {
        Eigen::MatrixXd N(q, d);
        for (int i = 0; i < q; ++i) N.row(i) = spec.ineq_matrix.row(W[i]);
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(d + q, d + q);
        kkt.topLeftCorner(d, d) = spec.hessian;
        kkt.topRightCorner(d, q) = N.transpose();
        kkt.bottomLeftCorner(q, d) = N;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + q);
        rhs.head(d) = -ap.transpose();
        Eigen::VectorXd sol = kkt.partialPivLu().solve(rhs);
        dx = sol.head(d);
        dlam = sol.tail(q);
      }

      const double rate = ap.dot(dx);  // d(violation)/d(mu), <= 0
      const double viol = ap.dot(x) - spec.ineq_bound[p];

      double t_full = std::numeric_limits<double>::infinity();
      if (rate < -kRateTol) t_full = viol / (-rate);

      double t_block = std::numeric_limits<double>::infinity();
      int blocker = -1;
      for (int i = 0; i < q; ++i) {
        if (dlam[i] < -kRateTol) {
          const double t = -lamW[i] / dlam[i];
          if (t < t_block) {
            t_block = t;
            blocker = i;
          }
        }
      }

      if (!std::isfinite(t_full) && !std::isfinite(t_block)) {
        throw QpError("infeasible", assemble());
      }

      const double t = std::min(t_full, t_block);
      x += t * dx;
      for (int i = 0; i < q; ++i) lamW[i] += t * dlam[i];
      mu_p += t;

      if (t_block < t_full) {
        W.erase(W.begin() + blocker);
        lamW.erase(lamW.begin() + blocker);
        continue;  // keep driving constraint p
      }
      W.push_back(p);
      lamW.push_back(mu_p);
      break;
    }
  }
}

}  // namespace l1mpc
