#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace vppsim::qp {

// Strictly convex QP with diagonal Hessian:
//   min 1/2 x' diag(q_diag) x + c' x
//   s.t. eq_row' x  = eq_rhs
//        ineq_rows x <= ineq_rhs
struct Problem {
  Eigen::VectorXd q_diag;  // all entries > 0
  Eigen::VectorXd c;
  Eigen::VectorXd eq_row;
  double eq_rhs = 0.0;
  Eigen::MatrixXd ineq_rows;  // m x n
  Eigen::VectorXd ineq_rhs;   // m
};

struct Solution {
  Eigen::VectorXd x;
  double eq_dual = 0.0;         // d(objective)/d(eq_rhs)
  Eigen::VectorXd ineq_duals;   // length m, >= 0, complementary
  double objective = 0.0;
  int iterations = 0;
};

struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Primal active-set method. x0 must satisfy the equality exactly and the
// inequalities within feasibility_tol. Equality-constrained subproblems are
// solved through the Schur complement of the diagonal Hessian (symmetric
// LDLT factorization), which keeps duals at machine precision.
//
// Tie-breaking is deterministic: among equally blocking (or equally most
// negative) constraints the lowest index wins.
Solution solve(const Problem& problem, const Eigen::VectorXd& x0,
               int max_iterations, double feasibility_tol = 1e-9);

}  // namespace vppsim::qp
