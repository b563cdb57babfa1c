#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace l1mpc {

/// Strictly convex quadratic program
///   min 1/2 x' H x + f' x   s.t.   A x <= b.
struct QpSpec {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::MatrixXd ineq_matrix;  // c x d, c may be zero
  Eigen::VectorXd ineq_bound;   // c

  /// Checks dimensions, symmetry (1e-12 relative) and finiteness.
  /// Positive definiteness is established by factorization in solve_qp.
  void validate() const;

  int dim() const { return static_cast<int>(hessian.rows()); }
  int constraints() const { return static_cast<int>(ineq_matrix.rows()); }
};

struct QpSolution {
  Eigen::VectorXd primal;
  Eigen::VectorXd dual;  // one multiplier per inequality row, 0 when inactive
  std::vector<int> active_set;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Thrown on infeasible constraint sets or when the iteration cap is hit.
/// The best iterate reached so far is attached when one exists.
class QpError : public std::runtime_error {
 public:
  QpError(const std::string& what, std::optional<QpSolution> best = {})
      : std::runtime_error(what), best_(std::move(best)) {}
  const std::optional<QpSolution>& best_iterate() const { return best_; }

 private:
  std::optional<QpSolution> best_;
};

/// Dual active-set solve (Goldfarb-Idnani). Starts from the unconstrained
/// minimizer and adds violated constraints one at a time; deterministic for
/// a given spec. Iteration cap: 10*dim + 100.
QpSolution solve_qp(const QpSpec& spec);

}  // namespace l1mpc
