#include "refgov/governor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "refgov/error.hpp"

namespace refgov {

const char* to_string(GovernorKind kind) {
  switch (kind) {
    case GovernorKind::kRgNl: return "RG_NL";
    case GovernorKind::kRgL: return "RG_L";
    case GovernorKind::kNone: return "NONE";
  }
  return "?";
}

GovernorKind parse_governor_kind(const std::string& name) {
  if (name == "RG_NL") return GovernorKind::kRgNl;
  if (name == "RG_L") return GovernorKind::kRgL;
  if (name == "NONE") return GovernorKind::kNone;
  throw Error(ErrorCode::kConfig, "unknown governor kind '" + name + "'");
}

const char* to_string(StepOutcome outcome) {
  switch (outcome) {
    case StepOutcome::kAccepted: return "accepted";
    case StepOutcome::kInfeasible: return "infeasible";
    case StepOutcome::kCheckFailed: return "check_failed";
    case StepOutcome::kPassThrough: return "pass_through";
  }
  return "?";
}

Matrix GovernorConfig::cost_weight(std::size_t command_dim) const {
  return S.empty() ? Matrix::identity(command_dim) : S;
}

void GovernorConfig::validate(std::size_t command_dim) const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  const Matrix s = cost_weight(command_dim);
  if (s.rows() != command_dim || s.cols() != command_dim) fail("S must be n_v x n_v");
  if (!s.all_finite()) fail("S has non-finite entries");
  if ((s - s.transpose()).max_abs() > 1e-10 * std::max(1.0, s.max_abs())) fail("S is not symmetric");
  if (!(sym_eig_min(s) > 0.0)) fail("S is not positive definite");
  if (!(dt_sample > 0.0)) fail("dt_sample must be positive");
  if (!(dt_check >= dt_sample * (1.0 - 1e-12))) fail("dt_check must be >= dt_sample");
  if (!(tol_T > 0.0 && tol_T < 1.0)) fail("tol_T must lie in (0, 1)");
  if (!(delta >= 0.0)) fail("delta must be >= 0");
  if (!(zeta_reg_scale > 0.0)) fail("zeta_reg_scale must be positive");
  if (!(epsilon >= 0.0)) fail("epsilon must be >= 0");
  if (!(kappa >= 0.0)) fail("kappa must be >= 0");
  if (!(w_max >= 0.0) || !std::isfinite(w_max)) fail("w_max must be finite and >= 0");
  if (scalar_mode && command_dim != 1) fail("scalar_mode needs a one-dimensional command");
}

MoveSet move_set(const Vector& v_k, const Vector& r, const Matrix& S, const NormSpec& cmd_norm) {
  const std::size_t nv = v_k.size();
  if (r.size() != nv || S.rows() != nv || S.cols() != nv) {
    throw Error(ErrorCode::kDimensionMismatch, "move_set dimensions");
  }
  const Vector d = S * (v_k - r);
  MoveSet ms;
  ms.U = Matrix(2 * nv, nv);
  ms.u = Vector(2 * nv);
  for (std::size_t i = 0; i < nv; ++i) {
    ms.U(i, i) = 1.0;
    ms.U(nv + i, i) = -1.0;
    ms.u[i] = std::abs(d[i]);
    ms.u[nv + i] = std::abs(d[i]);
  }
  const double floor = 1e-12 * ms.u.norm_inf();
  for (double& ui : ms.u) ui = std::max(ui, floor);

  for (std::size_t mask = 0; mask < (std::size_t{1} << nv); ++mask) {
    Vector vert(nv);
    for (std::size_t i = 0; i < nv; ++i) vert[i] = (mask >> i & 1U) ? ms.u[i] : -ms.u[nv + i];
    ms.v_bar = std::max(ms.v_bar, vec_norm(vert, cmd_norm));
  }
  return ms;
}

Polytope v1_prime(const PlantModel& model, double epsilon, const NormSpec& spec) {
  const AffineSteadyState map = affine_steady_state(model);
  const Polytope& x_set = model.state_set();
  const Vector h = support_rows(x_set.M, spec);
  const Matrix mg = x_set.M * map.gain;
  const Vector mx0 = x_set.M * map.offset;

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < mg.rows(); ++i) {
    const double rhs = x_set.m[i] - epsilon * h[i] - mx0[i];
    if (mg.row(i).norm_inf() > 1e-14 * (1.0 + x_set.M.row(i).norm_inf())) {
      keep.push_back(i);
    } else if (rhs < 0.0) {
      throw Error(ErrorCode::kConfig, "epsilon leaves no admissible steady state");
    }
  }
  Matrix rows(keep.size(), model.command_dim());
  Vector rhs(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    rows.set_row(k, mg.row(keep[k]));
    rhs[k] = x_set.m[keep[k]] - epsilon * h[keep[k]] - mx0[keep[k]];
  }
  return {rows, rhs};
}

double epsilon_lower_bound(const PlantModel& model, const std::vector<Certificate>& certs,
                           const NormSpec& spec, double w_max, std::size_t density) {
  if (w_max == 0.0) return 0.0;
  double worst = 0.0;
  for (const Vector& v : grid_points(model.command_set(), density)) {
    const ErrorGains g = error_gains(model, find_certificate(certs, v), v, spec);
    worst = std::max(worst, g.gamma_w + g.lambda_w);
  }
  return 2.0 * worst * w_max;
}

Governor::Governor(PlantPtr model, NormSpec spec, std::vector<Certificate> certs,
                   GovernorConfig cfg, GovernorKind kind, Vector v0)
    : model_(std::move(model)),
      spec_(std::move(spec)),
      cmd_norm_(spec_.command_norm()),
      certs_(std::move(certs)),
      cfg_(std::move(cfg)),
      kind_(kind),
      v_(std::move(v0)) {
  if (!model_) throw Error(ErrorCode::kInvalidArgument, "governor needs a model");
  const std::size_t nv = model_->command_dim();
  if (v_.size() != nv) throw Error(ErrorCode::kDimensionMismatch, "v0 dimension");
  cfg_.validate(nv);
  S_ = cfg_.cost_weight(nv);
  if (kind_ == GovernorKind::kNone) return;

  if (!model_->command_set().contains(v_, 1e-9)) {
    throw Error(ErrorCode::kOutsideAdmissibleSet, "v0 is outside the command set");
  }
  if (kind_ == GovernorKind::kRgNl && certs_.empty()) {
    throw Error(ErrorCode::kConfig, "RG_NL needs at least one certificate");
  }
  h_ = support_rows(model_->state_set().M, spec_);
  if (cfg_.convergence_augmentation) {
    v1_ = v1_prime(*model_, cfg_.epsilon, spec_);
    if (kind_ == GovernorKind::kRgNl && cfg_.w_max > 0.0) {
      const double bound = epsilon_lower_bound(*model_, certs_, spec_, cfg_.w_max);
      if (!(cfg_.epsilon > bound)) {
        throw Error(ErrorCode::kConfig, "epsilon must exceed " + std::to_string(bound));
      }
    }
    if (!v1_.contains(v_, 1e-12)) throw Error(ErrorCode::kConfig, "v0 is outside V1'");
  }
  relinearize(v_);
}

double Governor::cost(const Vector& v, const Vector& r) const {
  const Vector d = v - r;
  return dot(d, S_ * d);
}

void Governor::relinearize(const Vector& v) {
  LinearizationCache c;
  c.v = v;
  c.x = model_->steady_state(v);
  c.A = model_->f_x(c.x, v);
  c.B = model_->f_v(c.x, v);
  const double mu = log_norm(c.A, spec_);
  const double fv = op_norm(c.B, spec_);
  if (kind_ == GovernorKind::kRgNl) {
    const Certificate& cert = find_certificate(certs_, v);
    c.gains = error_gains(cert.mu_e, cert.eta_x, cert.eta_v, mu, fv);
  } else {
    c.gains = error_gains(mu, 0.0, 0.0, mu, fv);
  }
  c.horizon = horizon(mu, cfg_.dt_check, cfg_.tol_T);
  c.xi = intersample_xi(mu, cfg_.dt_check);

  const std::size_t n = c.A.rows();
  const Matrix& m = model_->state_set().M;
  const Matrix phi1 = mat_exp(c.A, cfg_.dt_check);
  Matrix a_inv;
  bool invertible = true;
  try {
    a_inv = inverse(c.A);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSingularMatrix) throw;
    invertible = false;
  }

  const std::size_t count = c.horizon.N + 1;
  c.phi.reserve(count);
  c.m_phi.reserve(count);
  c.m_conv.reserve(count);
  c.a_phi.reserve(count);
  c.gamma_tilde_v.reserve(count);
  Matrix phi = Matrix::identity(n);
  for (std::size_t j = 0; j < count; ++j) {
    if (j > 0) phi = phi * phi1;
    const double t = static_cast<double>(j) * cfg_.dt_check;
    const Matrix conv = invertible ? a_inv * ((phi - Matrix::identity(n)) * c.B)
                                   : convolution_gain(c.A, c.B, t);
    c.m_phi.push_back(m * phi);
    c.m_conv.push_back(m * conv);
    c.a_phi.push_back(c.A * phi);
    c.gamma_tilde_v.push_back(op_norm(phi * c.B, spec_) * c.xi);
    c.phi.push_back(phi);
  }
  cache_ = std::move(c);
}

QpProblem Governor::assemble(const Vector& x_meas, const Vector& r) const {
  if (kind_ == GovernorKind::kNone) {
    throw Error(ErrorCode::kInvalidArgument, "NONE has no governor QP");
  }
  const PlantModel& model = *model_;
  const std::size_t n = model.state_dim();
  const std::size_t nv = model.command_dim();
  if (x_meas.size() != n || r.size() != nv) {
    throw Error(ErrorCode::kDimensionMismatch, "assemble: measurement or reference dimension");
  }
  require_finite(x_meas, "measured state");
  require_finite(r, "reference");

  const bool nonlinear = kind_ == GovernorKind::kRgNl;
  const auto& c = cache_;
  const Polytope& x_set = model.state_set();
  const Polytope& v_set = model.command_set();
  const std::size_t nm = x_set.num_rows();
  const std::size_t steps = c.horizon.N + 1;
  const bool augment = cfg_.convergence_augmentation;
  const bool scalar = cfg_.scalar_mode;
  const std::size_t scalar_rows = scalar ? (nonlinear ? 2 : 1) : 0;
  const std::size_t total = steps * nm + v_set.num_rows() + 2 * nv + 1 +
                            (augment ? v1_.num_rows() : 0) + scalar_rows;

  const Vector dx = x_meas - c.x;
  const MoveSet ms = move_set(v_, r, S_, cmd_norm_);
  const double gamma_v = nonlinear ? c.gains.gamma_v : 0.0;
  const double dist = (c.gains.lambda_w + (nonlinear ? c.gains.gamma_w : 0.0)) * cfg_.w_max;
  const Vector mx = x_set.M * c.x;

  QpProblem p;
  p.H = Matrix(nv + 1, nv + 1);
  p.H.set_block(0, 0, S_);
  p.H(nv, nv) = cfg_.zeta_reg_scale * S_.trace();
  p.g = Vector(nv + 1);
  const Vector sd = S_ * (v_ - r);
  for (std::size_t i = 0; i < nv; ++i) p.g[i] = sd[i];
  p.A = Matrix(total, nv + 1);
  p.b = Vector(total);

  std::size_t row = 0;
  for (std::size_t j = 0; j < steps; ++j) {
    const Vector m_phi_dx = c.m_phi[j] * dx;
    const double gt_v = nonlinear ? c.gamma_tilde_v[j] : 0.0;
    const double gt_x = nonlinear ? vec_norm(c.a_phi[j] * dx, spec_) * c.xi : 0.0;
    const Matrix& mc = c.m_conv[j];
    for (std::size_t i = 0; i < nm; ++i, ++row) {
      for (std::size_t k = 0; k < nv; ++k) p.A(row, k) = mc(i, k);
      p.A(row, nv) = (gamma_v + gt_v) * h_[i] * ms.v_bar;
      p.b[row] = x_set.m[i] - cfg_.delta - mx[i] - m_phi_dx[i] - (dist + gt_x) * h_[i];
    }
  }
  const Vector mv = v_set.M * v_;
  for (std::size_t i = 0; i < v_set.num_rows(); ++i, ++row) {
    for (std::size_t k = 0; k < nv; ++k) p.A(row, k) = v_set.M(i, k);
    p.b[row] = v_set.m[i] - mv[i];
  }
  for (std::size_t i = 0; i < 2 * nv; ++i, ++row) {
    for (std::size_t k = 0; k < nv; ++k) p.A(row, k) = ms.U(i, k);
    p.A(row, nv) = -ms.u[i];
  }
  p.A(row, nv) = -1.0;
  ++row;
  if (augment) {
    const Vector mv1 = v1_.M * v_;
    for (std::size_t i = 0; i < v1_.num_rows(); ++i, ++row) {
      for (std::size_t k = 0; k < nv; ++k) p.A(row, k) = v1_.M(i, k);
      p.b[row] = v1_.m[i] - mv1[i];
    }
  }
  if (scalar) {
    const double diff = r[0] - v_[0];
    const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    p.A(row, 0) = -s;
    ++row;
    if (nonlinear) {
      p.A(row, 0) = -c.gains.lambda_v * s;
      p.b[row] = c.gains.lambda_w * cfg_.w_max - vec_norm(dx, spec_);
      ++row;
    }
  }
  return p;
}

const Vector& Governor::step(const Vector& x_meas, const Vector& r, double t) {
  const auto start = std::chrono::steady_clock::now();
  StepDiagnostics d;
  d.t = t;
  if (r.size() != model_->command_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "reference dimension");
  }
  d.cost_before = cost(v_, r);

  if (kind_ == GovernorKind::kNone) {
    d.outcome = StepOutcome::kPassThrough;
    d.jumped = !(r == v_);
    v_ = r;
    d.cost_after = 0.0;
    d.command = v_;
    last_ = d;
    return v_;
  }

  const QpProblem qp = assemble(x_meas, r);
  d.rows = qp.num_constraints();
  const QpResult res = solver_.solve(qp);
  d.iterations = res.iterations;

  Vector next = v_;
  if (res.status == QpStatus::kInfeasible) {
    d.outcome = StepOutcome::kInfeasible;
  } else {
    const std::size_t nv = model_->command_dim();
    Vector dv(nv);
    for (std::size_t i = 0; i < nv; ++i) dv[i] = res.z[i];
    d.zeta = res.z[nv];
    d.active = res.active.size();
    if (kind_ == GovernorKind::kRgNl && !cfg_.scalar_mode) {
      const double lhs = vec_norm(x_meas - cache_.x, spec_);
      const double rhs = cache_.gains.lambda_v * vec_norm(dv, cmd_norm_) +
                         cache_.gains.lambda_w * cfg_.w_max;
      d.initial_check = lhs <= rhs + 1e-12;
    }
    if (cfg_.convergence_augmentation) {
      const double j_new = cost(v_ + dv, r);
      d.cost_check = j_new <= std::max(d.cost_before - cfg_.kappa, 0.0) + 1e-12 * (1.0 + d.cost_before);
    }
    if (d.initial_check && d.cost_check) {
      d.outcome = StepOutcome::kAccepted;
      next = v_ + dv;
    } else {
      d.outcome = StepOutcome::kCheckFailed;
    }
  }

  if (!(next == v_)) {
    relinearize(next);
    v_ = std::move(next);
    d.jumped = true;
  }
  d.cost_after = cost(v_, r);
  d.command = v_;
  d.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  last_ = d;
  return v_;
}

}  // namespace refgov
