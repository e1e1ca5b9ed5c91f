#include "refgov/qp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "refgov/error.hpp"

namespace refgov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower-triangular inverse of the Cholesky factor of H.
Matrix cholesky_inverse_factor(const Matrix& h) {
  const std::size_t n = h.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = h(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw Error(ErrorCode::kInvalidArgument, "QP Hessian is not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = h(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  Matrix inv(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = c; i < n; ++i) {
      double s = i == c ? 1.0 : 0.0;
      for (std::size_t k = c; k < i; ++k) s -= l(i, k) * inv(k, c);
      inv(i, c) = s / l(i, i);
    }
  }
  return inv;
}

double row_dot(const Matrix& a, std::size_t i, const Vector& z) {
  double s = 0.0;
  const auto row = a.row_span(i);
  for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * z[j];
  return s;
}

// Thin QR of the active columns by modified Gram-Schmidt with one
// reorthogonalization pass. q holds orthonormal columns, r is upper
// triangular.
void thin_qr(const std::vector<Vector>& cols, std::vector<Vector>& q, Matrix& r) {
  const std::size_t k = cols.size();
  q.assign(cols.begin(), cols.end());
  r = Matrix(k, k);
  for (std::size_t j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const double c = dot(q[i], q[j]);
        r(i, j) += c;
        q[j] -= c * q[i];
      }
    }
    r(j, j) = q[j].norm2();
    q[j] *= 1.0 / r(j, j);
  }
}

// Solves R x = b (upper) or Rᵀ x = b (lower) in place.
void solve_upper(const Matrix& r, Vector& x) {
  for (std::size_t i = x.size(); i-- > 0;) {
    for (std::size_t j = i + 1; j < x.size(); ++j) x[i] -= r(i, j) * x[j];
    x[i] /= r(i, i);
  }
}

void solve_upper_transposed(const Matrix& r, Vector& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) x[i] -= r(j, i) * x[j];
    x[i] /= r(i, i);
  }
}

}  // namespace

const char* to_string(QpStatus status) {
  return status == QpStatus::kOptimal ? "optimal" : "infeasible";
}

double QpProblem::objective(const Vector& z) const { return 0.5 * dot(z, H * z) + dot(g, z); }

double QpProblem::max_violation(const Vector& z) const {
  double worst = -kInf;
  for (std::size_t i = 0; i < b.size(); ++i) worst = std::max(worst, row_dot(A, i, z) - b[i]);
  return worst;
}

void QpProblem::validate() const {
  const std::size_t n = g.size();
  if (n == 0 || H.rows() != n || H.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "QP Hessian does not match the cost vector");
  }
  if (A.rows() != b.size() || (A.rows() > 0 && A.cols() != n)) {
    throw Error(ErrorCode::kDimensionMismatch, "QP constraint dimensions");
  }
  require_finite(H, "QP Hessian");
  require_finite(g, "QP cost");
  require_finite(A, "QP constraint matrix");
  require_finite(b, "QP constraint bound");
  if ((H - H.transpose()).max_abs() > 1e-10 * std::max(1.0, H.max_abs())) {
    throw Error(ErrorCode::kInvalidArgument, "QP Hessian is not symmetric");
  }
}

QpResult QpSolver::solve(const QpProblem& p) {
  p.validate();
  const std::size_t n = p.num_vars();
  const std::size_t m = p.num_constraints();
  const std::size_t cap = options_.max_iterations ? options_.max_iterations : 50 * (m + 1);

  l_inv_ = cholesky_inverse_factor(p.H);
  const Matrix l_inv_t = l_inv_.transpose();
  const Vector g_tilde = l_inv_ * p.g;
  Vector z = -(l_inv_t * g_tilde);

  // Everything below works in y = Lᵀz, where the objective is ½‖y‖² + g̃ᵀy
  // and row i reads ñ_iᵀy ≥ −b_i with ñ_i = −L⁻¹A_iᵀ.
  std::vector<std::size_t> active;
  std::vector<Vector> cols;
  std::vector<Vector> q;
  Matrix r_fac;
  u_.clear();
  std::vector<bool> is_active(m, false);

  QpResult result;
  auto slack = [&](std::size_t i) { return p.b[i] - row_dot(p.A, i, z); };

  auto refactor = [&] { thin_qr(cols, q, r_fac); };

  auto drop = [&](std::size_t k) {
    is_active[active[k]] = false;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(k));
    cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(k));
    u_.erase(u_.begin() + static_cast<std::ptrdiff_t>(k));
    refactor();
  };

  // Exact minimizer and multipliers of the equality problem on the active
  // set; keeps the incremental updates from drifting off the active rows.
  auto resolve = [&] {
    const std::size_t k = active.size();
    Vector w(k);
    Vector qg(k);
    for (std::size_t i = 0; i < k; ++i) {
      w[i] = -p.b[active[i]];
      qg[i] = dot(q[i], g_tilde);
    }
    solve_upper_transposed(r_fac, w);
    Vector y = -1.0 * g_tilde;
    for (std::size_t i = 0; i < k; ++i) y += (qg[i] + w[i]) * q[i];
    Vector u = w + qg;
    solve_upper(r_fac, u);
    z = l_inv_t * y;
    for (std::size_t i = 0; i < k; ++i) u_[i] = std::max(0.0, u[i]);
  };

  std::size_t iter = 0;
  while (true) {
    std::size_t pick = m;
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (is_active[i]) continue;
      const double s = slack(i);
      if (s < -options_.feasibility_tol * (1.0 + std::abs(p.b[i])) && s < worst) {
        worst = s;
        pick = i;
      }
    }
    if (pick == m) break;

    Vector c_p(n);
    for (std::size_t j = 0; j < n; ++j) c_p[j] = -p.A(pick, j);
    const Vector nt_p = l_inv_ * c_p;
    const double nt_norm = nt_p.norm2();
    double u_p = 0.0;

    while (true) {
      if (++iter > cap) {
        throw Error(ErrorCode::kMaxIterations,
                    "QP solver exceeded " + std::to_string(cap) + " iterations");
      }
      const std::size_t k_act = active.size();
      // r = R⁻¹Q₁ᵀñ_p and ρ = (I − Q₁Q₁ᵀ)ñ_p, projected twice.
      Vector r(k_act);
      Vector rho = nt_p;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < k_act; ++i) {
          const double c = dot(q[i], rho);
          r[i] += c;
          rho -= c * q[i];
        }
      }
      solve_upper(r_fac, r);

      double t1 = kInf;
      std::size_t k_drop = k_act;
      for (std::size_t k = 0; k < k_act; ++k) {
        if (r[k] > 0.0) {
          const double t = u_[k] / r[k];
          if (t < t1) {
            t1 = t;
            k_drop = k;
          }
        }
      }
      const double rho_sq = dot(rho, rho);
      const bool primal_step = std::sqrt(rho_sq) > 1e-10 * nt_norm;
      const double t2 = primal_step ? std::max(0.0, -slack(pick)) / rho_sq : kInf;

      if (!primal_step && k_drop == k_act) {
        result.status = QpStatus::kInfeasible;
        result.iterations = iter;
        result.z = z;
        result.lambda = Vector(m);
        return result;
      }
      const double t = std::min(t1, t2);
      if (primal_step) z += t * (l_inv_t * rho);
      for (std::size_t k = 0; k < k_act; ++k) u_[k] -= t * r[k];
      u_p += t;

      if (primal_step && t2 <= t1) {
        active.push_back(pick);
        cols.push_back(nt_p);
        u_.push_back(u_p);
        is_active[pick] = true;
        refactor();
        resolve();
        break;
      }
      drop(k_drop);
    }
  }

  result.status = QpStatus::kOptimal;
  result.z = z;
  result.lambda = Vector(m);
  for (std::size_t k = 0; k < active.size(); ++k) result.lambda[active[k]] = std::max(0.0, u_[k]);
  result.active = active;
  std::sort(result.active.begin(), result.active.end());
  result.iterations = iter;
  result.objective = p.objective(z);
  return result;
}

QpResult solve_qp(const QpProblem& p, const QpOptions& options) {
  QpSolver solver(options);
  return solver.solve(p);
}

QpResult oracle_qp(const QpProblem& p) {
  p.validate();
  const std::size_t n = p.num_vars();
  const std::size_t m = p.num_constraints();
  if (m > 12) throw Error(ErrorCode::kTooLarge, "oracle_qp handles at most 12 constraints");

  double b_scale = 1.0;
  for (double bi : p.b) b_scale = std::max(b_scale, std::abs(bi));

  QpResult best;
  best.status = QpStatus::kInfeasible;
  double best_obj = kInf;
  for (unsigned mask = 0; mask < (1U << m); ++mask) {
    const auto q = static_cast<std::size_t>(std::popcount(mask));
    if (q > n) continue;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (1U << i)) rows.push_back(i);

    Matrix kkt(n + q, n + q);
    Vector rhs(n + q);
    kkt.set_block(0, 0, p.H);
    for (std::size_t j = 0; j < n; ++j) rhs[j] = -p.g[j];
    for (std::size_t k = 0; k < q; ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        kkt(n + k, j) = p.A(rows[k], j);
        kkt(j, n + k) = p.A(rows[k], j);
      }
      rhs[n + k] = p.b[rows[k]];
    }
    Vector sol;
    try {
      sol = solve_linear(kkt, rhs);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kSingularMatrix) continue;
      throw;
    }
    Vector z(n);
    for (std::size_t j = 0; j < n; ++j) z[j] = sol[j];
    bool dual_ok = true;
    for (std::size_t k = 0; k < q; ++k) dual_ok = dual_ok && sol[n + k] >= -1e-10;
    if (!dual_ok) continue;
    if (m > 0 && p.max_violation(z) > 1e-9 * b_scale) continue;
    const double obj = p.objective(z);
    if (obj < best_obj) {
      best_obj = obj;
      best.status = QpStatus::kOptimal;
      best.z = z;
      best.lambda = Vector(m);
      for (std::size_t k = 0; k < q; ++k) best.lambda[rows[k]] = std::max(0.0, sol[n + k]);
      best.active = rows;
      best.objective = obj;
    }
  }
  return best;
}

}  // namespace refgov
