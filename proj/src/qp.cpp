#include "vppsim/qp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vppsim::qp {
namespace {

// Multipliers y of the equality-constrained subproblem
//   min 1/2 (x+d)' Q (x+d) + c'(x+d)   s.t.  A (x+d) = A x
// via the Schur complement A Q^-1 A' y = -A Q^-1 g, g = Q x + c, then
// d = -Q^-1 (g + A' y). One step of iterative refinement tightens the duals.
struct EqpResult {
  Eigen::VectorXd d;
  Eigen::VectorXd y;  // one multiplier per row of A
  bool ok = false;
};

EqpResult solve_eqp(const Eigen::VectorXd& q_diag, const Eigen::VectorXd& g,
                    const Eigen::MatrixXd& rows) {
  EqpResult out;
  const auto qinv = q_diag.cwiseInverse();
  const Eigen::MatrixXd aq = rows * qinv.asDiagonal();  // A Q^-1
  const Eigen::MatrixXd schur = aq * rows.transpose();
  const Eigen::VectorXd rhs = -(aq * g);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(schur);
  if (ldlt.info() != Eigen::Success) return out;
  Eigen::VectorXd y = ldlt.solve(rhs);
  y += ldlt.solve(rhs - schur * y);  // refinement

  const double residual = (schur * y - rhs).lpNorm<Eigen::Infinity>();
  const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
  if (!std::isfinite(residual) || residual > 1e-7 * scale) return out;

  out.d = -(qinv.asDiagonal() * (g + rows.transpose() * y));
  out.y = std::move(y);
  out.ok = true;
  return out;
}

Eigen::MatrixXd stack_rows(const Problem& p, const std::vector<int>& working) {
  Eigen::MatrixXd rows(1 + working.size(), p.eq_row.size());
  rows.row(0) = p.eq_row;
  for (size_t k = 0; k < working.size(); ++k) rows.row(1 + k) = p.ineq_rows.row(working[k]);
  return rows;
}

// Least-squares projection of x onto the working constraints; removes the
// slack accumulated over the step sequence so complementarity holds to
// machine precision.
void polish_onto_working_set(const Problem& p, const std::vector<int>& working,
                             const Eigen::MatrixXd& rows, Eigen::VectorXd& x) {
  Eigen::VectorXd rhs(1 + working.size());
  rhs(0) = p.eq_rhs;
  for (size_t k = 0; k < working.size(); ++k) rhs(1 + k) = p.ineq_rhs(working[k]);
  const Eigen::VectorXd residual = rhs - rows * x;
  if (residual.lpNorm<Eigen::Infinity>() == 0.0) return;
  const Eigen::MatrixXd gram = rows * rows.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return;
  x += rows.transpose() * ldlt.solve(residual);
}

bool rank_complete(const Eigen::MatrixXd& rows) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rows.transpose());
  qr.setThreshold(1e-10);
  return qr.rank() == rows.rows();
}

}  // namespace

Solution solve(const Problem& p, const Eigen::VectorXd& x0, int max_iterations,
               double feasibility_tol) {
  const int n = static_cast<int>(p.q_diag.size());
  const int m = static_cast<int>(p.ineq_rhs.size());

  Eigen::VectorXd x = x0;
  std::vector<int> working;

  // Seed the working set with constraints active at x0, keeping rows
  // linearly independent (lowest index first).
  for (int i = 0; i < m && static_cast<int>(working.size()) < n - 1; ++i) {
    const double slack = p.ineq_rhs(i) - p.ineq_rows.row(i).dot(x);
    if (slack <= feasibility_tol) {
      working.push_back(i);
      if (!rank_complete(stack_rows(p, working))) working.pop_back();
    }
  }

  const double dir_tol = 1e-11 * (1.0 + x.lpNorm<Eigen::Infinity>());
  const double dual_tol = 1e-9;

  // Degenerate vertices (several parallel rows active at once) can make the
  // most-negative-dual drop rule cycle through zero-length steps. After a
  // streak of such steps we switch to Bland's rule, which terminates.
  int zero_step_streak = 0;
  bool bland = false;

  for (int iter = 1; iter <= max_iterations; ++iter) {
    Eigen::MatrixXd rows = stack_rows(p, working);
    Eigen::VectorXd g = p.q_diag.asDiagonal() * x + p.c;
    EqpResult eqp = solve_eqp(p.q_diag, g, rows);
    if (!eqp.ok) throw NonConvergenceError("singular KKT system in active-set step");

    // Stationarity by direction norm or by objective decrease: the subproblem
    // lowers the objective by d'Qd/2, which stays meaningful even when an
    // ill-conditioned Schur system leaves noise in d itself.
    const double decrease = 0.5 * eqp.d.dot(p.q_diag.asDiagonal() * eqp.d);
    const double obj_now = 0.5 * x.dot(p.q_diag.asDiagonal() * x) + p.c.dot(x);
    const bool stationary = eqp.d.lpNorm<Eigen::Infinity>() <= dir_tol ||
                            decrease <= 1e-16 * (1.0 + std::abs(obj_now));

    if (stationary) {
      polish_onto_working_set(p, working, rows, x);
      g = p.q_diag.asDiagonal() * x + p.c;
      eqp = solve_eqp(p.q_diag, g, rows);
      if (!eqp.ok) throw NonConvergenceError("singular KKT system in active-set polish");
      x += eqp.d;  // in the null space of the working rows
      // Stationary on the working set; check multiplier signs.
      int drop = -1;
      if (bland) {
        for (size_t k = 0; k < working.size(); ++k) {
          if (eqp.y(1 + k) < -dual_tol) {
            drop = static_cast<int>(k);
            break;
          }
        }
      } else {
        double most_negative = -dual_tol;
        for (size_t k = 0; k < working.size(); ++k) {
          if (eqp.y(1 + k) < most_negative) {
            most_negative = eqp.y(1 + k);
            drop = static_cast<int>(k);
          }
        }
      }
      if (drop < 0) {
        Solution sol;
        sol.x = x;
        sol.eq_dual = -eqp.y(0);
        sol.ineq_duals = Eigen::VectorXd::Zero(m);
        for (size_t k = 0; k < working.size(); ++k)
          sol.ineq_duals(working[k]) = std::max(0.0, eqp.y(1 + k));
        sol.objective = 0.5 * x.dot(p.q_diag.asDiagonal() * x) + p.c.dot(x);
        sol.iterations = iter;
        return sol;
      }
      working.erase(working.begin() + drop);
      continue;
    }

    // Step toward the subproblem minimizer, stopping at the first blocking
    // constraint (strict comparison keeps the lowest index on ties).
    double alpha = 1.0;
    int blocker = -1;
    for (int i = 0; i < m; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end()) continue;
      const double advance = p.ineq_rows.row(i).dot(eqp.d);
      if (advance <= 1e-13) continue;
      const double slack = p.ineq_rhs(i) - p.ineq_rows.row(i).dot(x);
      const double step = std::max(0.0, slack) / advance;
      if (step < alpha) {
        alpha = step;
        blocker = i;
      }
    }

    x += alpha * eqp.d;
    zero_step_streak = alpha <= 1e-14 ? zero_step_streak + 1 : 0;
    if (zero_step_streak > 8) bland = true;
    if (blocker >= 0) {
      // A blocking row with a'd > 0 is independent of the working rows
      // (which all have a'd = 0); the guard below only fires on numerical
      // near-degeneracy, in which case another active row is retired.
      working.push_back(blocker);
      std::sort(working.begin(), working.end());
      while (working.size() > 1 && !rank_complete(stack_rows(p, working))) {
        bool removed = false;
        for (size_t k = working.size(); k-- > 0;) {
          if (working[k] == blocker) continue;
          working.erase(working.begin() + k);
          removed = true;
          break;
        }
        if (!removed) break;
      }
    }
  }

  throw NonConvergenceError("active-set iteration cap exceeded");
}

}  // namespace vppsim::qp
