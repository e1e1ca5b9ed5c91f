#include "refgov/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "refgov/error.hpp"
#include "refgov/parallel.hpp"

namespace refgov {

std::vector<Vector> grid_points(const Polytope& p, std::size_t density) {
  const auto [lo, hi] = p.box_bounds();
  const std::size_t n = lo.size();
  std::vector<std::vector<double>> axes(n);
  for (std::size_t d = 0; d < n; ++d) {
    if (hi[d] - lo[d] <= 0.0) {
      axes[d] = {lo[d]};
      continue;
    }
    for (std::size_t i = 0; i < density; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(density - 1);
      axes[d].push_back(i + 1 == density ? hi[d] : lo[d] + s * (hi[d] - lo[d]));
    }
  }
  std::vector<Vector> points;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    Vector z(n);
    for (std::size_t d = 0; d < n; ++d) z[d] = axes[d][idx[d]];
    points.push_back(std::move(z));
    std::size_t d = 0;
    while (d < n && ++idx[d] == axes[d].size()) idx[d++] = 0;
    if (d == n) break;
  }
  return points;
}

namespace {

struct CellMax {
  double mu = -INFINITY;
  double eta_x = 0.0;
  double eta_v = 0.0;
};

CellMax sample_cell(const PlantModel& model, const NormSpec& spec, const Polytope& cell,
                    std::size_t density, unsigned threads) {
  const auto xs = grid_points(model.state_set(), density);
  const auto vbars = grid_points(cell, density);
  const auto vhats = grid_points(model.command_set(), density);

  std::vector<Matrix> ax_ref;
  std::vector<Matrix> bv_ref;
  for (const auto& vb : vbars) {
    const Vector xv = model.steady_state(vb);
    ax_ref.push_back(model.f_x(xv, vb));
    bv_ref.push_back(model.f_v(xv, vb));
  }

  std::vector<CellMax> per_x(xs.size());
  parallel_for(xs.size(), threads, [&](std::size_t i) {
    const Vector& x = xs[i];
    CellMax local;
    for (std::size_t j = 0; j < vbars.size(); ++j) {
      const Matrix fx = model.f_x(x, vbars[j]);
      local.mu = std::max(local.mu, log_norm(fx, spec));
      local.eta_x = std::max(local.eta_x, op_norm(fx - ax_ref[j], spec));
    }
    for (const auto& vh : vhats) {
      const Matrix fv = model.f_v(x, vh);
      for (const auto& ref : bv_ref) local.eta_v = std::max(local.eta_v, op_norm(fv - ref, spec));
    }
    per_x[i] = local;
  });

  // Reduction in index order keeps the result independent of scheduling.
  CellMax total;
  for (const auto& c : per_x) {
    total.mu = std::max(total.mu, c.mu);
    total.eta_x = std::max(total.eta_x, c.eta_x);
    total.eta_v = std::max(total.eta_v, c.eta_v);
  }
  return total;
}

}  // namespace

std::vector<Certificate> certify(const PlantModel& model, const NormSpec& spec,
                                 const std::vector<Polytope>& partition,
                                 const CertifyOptions& options) {
  if (options.grid_density < 2) {
    throw Error(ErrorCode::kInvalidArgument, "grid density must be at least 2");
  }
  if (!(options.safety_inflation >= 1.0) || !std::isfinite(options.safety_inflation)) {
    throw Error(ErrorCode::kInvalidArgument, "safety inflation must be >= 1");
  }
  if (partition.empty()) throw Error(ErrorCode::kInvalidArgument, "empty partition");

  std::vector<Certificate> certs;
  for (std::size_t c = 0; c < partition.size(); ++c) {
    const Polytope& cell = partition[c];
    if (cell.dim() != model.command_dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "partition cell dimension");
    }
    const CellMax raw = sample_cell(model, spec, cell, options.grid_density, options.threads);
    const double s = options.safety_inflation;
    Certificate cert;
    cert.region = cell;
    cert.mu_e_raw = raw.mu;
    cert.eta_x_raw = raw.eta_x;
    cert.eta_v_raw = raw.eta_v;
    cert.mu_e = raw.mu / s;
    cert.eta_x = raw.eta_x * s;
    cert.eta_v = raw.eta_v * s;
    cert.grid_density = options.grid_density;
    cert.safety_inflation = s;
    if (!(cert.mu_e < 0.0)) {
      throw Error(ErrorCode::kCertificationFailed,
                  "cell " + std::to_string(c) + ": mu_e = " + std::to_string(cert.mu_e) +
                      " is not negative");
    }
    certs.push_back(std::move(cert));
  }
  return certs;
}

std::vector<Polytope> uniform_partition(const Polytope& v_set, std::size_t cells_per_dim) {
  if (cells_per_dim == 0) throw Error(ErrorCode::kInvalidArgument, "cells_per_dim must be >= 1");
  const auto [lo, hi] = v_set.box_bounds();
  const std::size_t n = lo.size();
  std::vector<Polytope> cells;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    Vector a(n);
    Vector b(n);
    for (std::size_t d = 0; d < n; ++d) {
      const double w = (hi[d] - lo[d]) / static_cast<double>(cells_per_dim);
      a[d] = lo[d] + w * static_cast<double>(idx[d]);
      b[d] = idx[d] + 1 == cells_per_dim ? hi[d] : a[d] + w;
    }
    cells.push_back(Polytope::box(a, b));
    std::size_t d = 0;
    while (d < n && ++idx[d] == cells_per_dim) idx[d++] = 0;
    if (d == n) break;
  }
  return cells;
}

const Certificate& find_certificate(const std::vector<Certificate>& certs, const Vector& v) {
  for (const auto& c : certs) {
    if (c.region.contains(v, 1e-9)) return c;
  }
  throw Error(ErrorCode::kOutsideAdmissibleSet, "no certificate covers the command");
}

ErrorGains error_gains(double mu_e, double eta_x, double eta_v, double mu_at_v, double fv_norm) {
  if (!(mu_at_v < 0.0) || !(mu_e < 0.0)) {
    throw Error(ErrorCode::kNotContractive,
                "log norm at steady state is " + std::to_string(mu_at_v));
  }
  ErrorGains g;
  g.mu_at_v = mu_at_v;
  g.fv_norm = fv_norm;
  g.lambda_v = -fv_norm / mu_at_v;
  g.lambda_w = -1.0 / mu_at_v;
  g.gamma_v = (eta_x * fv_norm - eta_v * mu_at_v) / (mu_e * mu_at_v);
  g.gamma_w = eta_x / (mu_e * mu_at_v);
  return g;
}

ErrorGains error_gains(const PlantModel& model, const Certificate& cert, const Vector& v_k,
                       const NormSpec& spec) {
  const Linearization lin = linearize(model, v_k);
  return error_gains(cert.mu_e, cert.eta_x, cert.eta_v, log_norm(lin.A, spec),
                     op_norm(lin.B, spec));
}

double intersample_xi(double mu, double dt) {
  if (mu == 0.0) return dt;
  return std::expm1(dt * mu) / mu;
}

IntersampleTerms intersample_terms(const Matrix& a, const Matrix& b, const Matrix& phi,
                                   const Vector& x_jump, double mu, double dt,
                                   const NormSpec& spec) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "intersample dt must be positive");
  IntersampleTerms t;
  t.xi = intersample_xi(mu, dt);
  t.gamma_tilde_v = op_norm(phi * b, spec) * t.xi;
  t.gamma_tilde_x = vec_norm(a * (phi * x_jump), spec) * t.xi;
  return t;
}

IntersampleTerms intersample_terms(const PlantModel& model, const Certificate& /*cert*/,
                                   const Vector& v_k, const Vector& x_jump, double t, double dt,
                                   const NormSpec& spec) {
  const Linearization lin = linearize(model, v_k);
  const double mu = log_norm(lin.A, spec);
  return intersample_terms(lin.A, lin.B, mat_exp(lin.A, t), x_jump, mu, dt, spec);
}

Horizon horizon(double mu_at_v, double dt_check, double tol_T) {
  if (!(mu_at_v < 0.0)) throw Error(ErrorCode::kInvalidArgument, "horizon needs mu < 0");
  if (!(dt_check > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dt_check must be positive");
  if (!(tol_T > 0.0 && tol_T < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tol_T must lie in (0, 1)");
  }
  const double t_raw = std::log(tol_T) / mu_at_v;
  const auto n = static_cast<std::size_t>(std::ceil(t_raw / dt_check - 1e-9));
  Horizon h;
  h.N = std::max<std::size_t>(n, 1);
  h.T = static_cast<double>(h.N) * dt_check;
  return h;
}

}  // namespace refgov
