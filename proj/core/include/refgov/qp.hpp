#pragma once

#include <cstddef>
#include <vector>

#include "refgov/linalg.hpp"

namespace refgov {

/// minimize ½ zᵀHz + gᵀz  subject to  A z ≤ b
struct QpProblem {
  Matrix H;
  Vector g;
  Matrix A;
  Vector b;

  std::size_t num_vars() const noexcept { return g.size(); }
  std::size_t num_constraints() const noexcept { return b.size(); }
  double objective(const Vector& z) const;
  /// max_i (A_i z − b_i), or −inf without constraints.
  double max_violation(const Vector& z) const;
  /// Throws DimensionMismatch, NonFinite or InvalidArgument (asymmetric H).
  void validate() const;
};

enum class QpStatus { kOptimal, kInfeasible };

const char* to_string(QpStatus status);

struct QpResult {
  QpStatus status = QpStatus::kInfeasible;
  Vector z;
  /// One multiplier per row of A; zero for inactive rows.
  Vector lambda;
  std::vector<std::size_t> active;
  std::size_t iterations = 0;
  double objective = 0.0;
};

struct QpOptions {
  /// 0 selects 50·(constraints + 1).
  std::size_t max_iterations = 0;
  double feasibility_tol = 1e-10;
};

/// Goldfarb–Idnani dual active-set method for strictly convex QPs. Starts
/// from the unconstrained minimizer and adds the most violated row each
/// iteration (lowest index on ties). Infeasibility is reported when a
/// violated row admits neither a primal nor a dual step.
///
/// Holds workspace; use one instance per thread.
class QpSolver {
 public:
  explicit QpSolver(QpOptions options = {}) : options_(options) {}
  /// Throws InvalidArgument when H is not positive definite and
  /// MaxIterations when the iteration cap is reached.
  QpResult solve(const QpProblem& p);

 private:
  QpOptions options_;
  Matrix l_inv_;           // L⁻¹ with H = L Lᵀ
  std::vector<double> u_; // multipliers of active rows
};

QpResult solve_qp(const QpProblem& p, const QpOptions& options = {});

/// Brute-force reference: tries every subset of at most num_vars rows as the
/// active set, solves its equality KKT system and keeps the best primal and
/// dual feasible candidate. Throws TooLarge above 12 constraints.
QpResult oracle_qp(const QpProblem& p);

}  // namespace refgov
