#pragma once

#include <cstddef>
#include <vector>

#include "refgov/linalg.hpp"
#include "refgov/model.hpp"
#include "refgov/norms.hpp"

namespace refgov {

/// Region-wise contraction and linearization-error bounds.
///
/// For every v̄ in `region` and every sampled x ∈ X, v̂ ∈ V:
///   μ(f_x(x, v̄)) ≤ mu_e < 0
///   ‖f_x(x, v̄) − f_x(x_v(v̄), v̄)‖ ≤ eta_x
///   ‖f_v(x, v̂) − f_v(x_v(v̄), v̄)‖ ≤ eta_v
/// The *_raw fields hold the sampled maxima; the others carry the safety
/// inflation (η scaled up, |μ_e| scaled down by the same factor).
struct Certificate {
  Polytope region;
  double mu_e = 0.0;
  double eta_x = 0.0;
  double eta_v = 0.0;
  double mu_e_raw = 0.0;
  double eta_x_raw = 0.0;
  double eta_v_raw = 0.0;
  std::size_t grid_density = 0;
  double safety_inflation = 1.0;
};

struct CertifyOptions {
  std::size_t grid_density = 5;  // points per axis, ≥ 2
  double safety_inflation = 1.05;
  unsigned threads = 0;  // 0 = RG_THREADS or hardware concurrency
};

/// Samples X × cell (and V for η_v) on uniform grids. Throws
/// InvalidArgument for density < 2 or inflation < 1, and CertificationFailed
/// when the inflated μ_e of any cell is not negative.
std::vector<Certificate> certify(const PlantModel& model, const NormSpec& spec,
                                 const std::vector<Polytope>& partition,
                                 const CertifyOptions& options = {});

/// Splits a box-shaped V into cells_per_dim^n_v equal boxes.
std::vector<Polytope> uniform_partition(const Polytope& v_set, std::size_t cells_per_dim);

/// Uniform grid with `density` points per axis over a box-shaped polytope;
/// degenerate axes contribute a single point.
std::vector<Vector> grid_points(const Polytope& box, std::size_t density);

/// First certificate whose region contains v (1e-9 slack).
const Certificate& find_certificate(const std::vector<Certificate>& certs, const Vector& v);

struct ErrorGains {
  double lambda_v = 0.0;
  double lambda_w = 0.0;
  double gamma_v = 0.0;
  double gamma_w = 0.0;
  double mu_at_v = 0.0;  // μ(f_x(x_v(v_k), v_k))
  double fv_norm = 0.0;  // ‖f_v(x_v(v_k), v_k)‖
};

/// Λ_v = −‖f_v‖/μ, Λ_w = −1/μ, Γ_v = (η_x‖f_v‖ − η_v μ)/(μ_e μ),
/// Γ_w = η_x/(μ_e μ). Throws NotContractive when μ ≥ 0 or μ_e ≥ 0.
ErrorGains error_gains(double mu_e, double eta_x, double eta_v, double mu_at_v, double fv_norm);
ErrorGains error_gains(const PlantModel& model, const Certificate& cert, const Vector& v_k,
                       const NormSpec& spec);

struct IntersampleTerms {
  double gamma_tilde_v = 0.0;
  double gamma_tilde_x = 0.0;
  double xi = 0.0;
};

/// ξ = (e^{Δt μ} − 1)/μ, the integral of e^{μ s} over [0, Δt].
double intersample_xi(double mu, double dt);

/// Terms inflating the error ball so that a constraint imposed at t also
/// covers [t, t + Δt]. `phi` is e^{A t}.
IntersampleTerms intersample_terms(const Matrix& a, const Matrix& b, const Matrix& phi,
                                   const Vector& x_jump, double mu, double dt,
                                   const NormSpec& spec);
IntersampleTerms intersample_terms(const PlantModel& model, const Certificate& cert,
                                   const Vector& v_k, const Vector& x_jump, double t, double dt,
                                   const NormSpec& spec);

struct Horizon {
  double T = 0.0;
  std::size_t N = 0;
};

/// Smallest multiple T of dt_check with e^{μ T} ≤ tol_T. Throws
/// InvalidArgument unless μ < 0, dt_check > 0 and tol_T ∈ (0, 1).
Horizon horizon(double mu_at_v, double dt_check, double tol_T);

}  // namespace refgov
