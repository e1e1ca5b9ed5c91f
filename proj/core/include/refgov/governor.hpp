#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "refgov/bounds.hpp"
#include "refgov/linalg.hpp"
#include "refgov/model.hpp"
#include "refgov/norms.hpp"
#include "refgov/qp.hpp"

namespace refgov {

enum class GovernorKind { kRgNl, kRgL, kNone };

const char* to_string(GovernorKind kind);
/// Accepts "RG_NL", "RG_L", "NONE". Throws Config otherwise.
GovernorKind parse_governor_kind(const std::string& name);

struct GovernorConfig {
  Matrix S;                  // cost weight; empty = identity
  double dt_sample = 0.05;   // governor period [s]
  double dt_check = 0.05;    // constraint grid spacing [s], ≥ dt_sample
  double tol_T = 1e-3;       // horizon: e^{μT} ≤ tol_T
  double delta = 1e-4;       // inner margin of the tightened state set
  double zeta_reg_scale = 1e-8;  // ζ weight = scale·trace(S)
  double epsilon = 0.0;      // V₁′ margin
  double kappa = 1e-6;       // required cost decrease per jump
  bool convergence_augmentation = false;
  bool scalar_mode = false;
  double w_max = 0.0;        // disturbance bound in the governor norm

  /// Throws Config on inconsistent values.
  void validate(std::size_t command_dim) const;
  Matrix cost_weight(std::size_t command_dim) const;
};

/// Box {δv | U δv ≤ u} with U = [I; −I] and its largest vertex norm.
struct MoveSet {
  Matrix U;
  Vector u;
  double v_bar = 0.0;
};

/// u = |[S(v_k − r); S(v_k − r)]|, zero entries floored at 1e-12·‖u‖∞;
/// v_bar is the maximum of cmd_norm over the 2^{n_v} box vertices.
MoveSet move_set(const Vector& v_k, const Vector& r, const Matrix& S, const NormSpec& cmd_norm);

/// {v | M x_v(v) + ε H_B(M) ≤ m} as rows in v. Rows whose coefficients
/// vanish are dropped. Throws NotAffine when x_v is not affine.
Polytope v1_prime(const PlantModel& model, double epsilon, const NormSpec& spec);

/// 2·max over a grid of V of (Γ_w + Λ_w)·w_max; ε must exceed it when
/// convergence augmentation is used with disturbances.
double epsilon_lower_bound(const PlantModel& model, const std::vector<Certificate>& certs,
                           const NormSpec& spec, double w_max, std::size_t density = 5);

enum class StepOutcome {
  kAccepted,     // v_{k+1} = v_k + δv*
  kInfeasible,   // QP infeasible, v held
  kCheckFailed,  // initial-state or cost-decrease check failed, v held
  kPassThrough,  // NONE: v = r
};

const char* to_string(StepOutcome outcome);

struct StepDiagnostics {
  double t = 0.0;
  StepOutcome outcome = StepOutcome::kPassThrough;
  std::size_t rows = 0;
  std::size_t active = 0;
  std::size_t iterations = 0;
  double zeta = 0.0;
  bool initial_check = true;
  bool cost_check = true;
  double cost_before = 0.0;  // ‖v_k − r‖²_S
  double cost_after = 0.0;   // ‖v_{k+1} − r‖²_S
  double solve_seconds = 0.0;
  bool jumped = false;       // v_{k+1} ≠ v_k
  Vector command;            // v_{k+1}
};

/// Quantities cached per linearization point v_k.
struct LinearizationCache {
  Vector v;
  Vector x;                 // x_v(v)
  Matrix A;                 // f_x(x, v)
  Matrix B;                 // f_v(x, v)
  ErrorGains gains;
  Horizon horizon;
  double xi = 0.0;
  std::vector<Matrix> phi;          // φ(jΔt_check), j = 0..N
  std::vector<Matrix> m_phi;        // M φ_j
  std::vector<Matrix> m_conv;       // M ∫₀^{t_j} φ(t_j − τ) B dτ
  std::vector<Matrix> a_phi;        // A φ_j
  std::vector<double> gamma_tilde_v;
};

/// Reference governor state machine. Single owner; not thread-safe.
class Governor {
 public:
  /// `certs` may be empty for kRgL and kNone. Throws Config, NotAffine,
  /// NotContractive or OutsideAdmissibleSet when v0 cannot be used.
  Governor(PlantPtr model, NormSpec spec, std::vector<Certificate> certs, GovernorConfig cfg,
           GovernorKind kind, Vector v0);

  GovernorKind kind() const noexcept { return kind_; }
  const Vector& command() const noexcept { return v_; }
  const Vector& steady_state() const noexcept { return cache_.x; }
  const LinearizationCache& cache() const noexcept { return cache_; }
  const GovernorConfig& config() const noexcept { return cfg_; }
  const NormSpec& norm() const noexcept { return spec_; }
  const PlantModel& model() const noexcept { return *model_; }
  const StepDiagnostics& last() const noexcept { return last_; }

  /// QP over z = (δv, ζ). Row blocks, in order:
  ///   state rows   for j = 0..N and each row i of M (X = {Mx ≤ m}):
  ///                M_i G_j δv + (Γ_v + Γ̃_v(t_j)) h_i v̄ ζ
  ///                  ≤ m_i − δ − M_i x_k − M_i φ_j (x_meas − x_k)
  ///                    − ((Γ_w + Λ_w) w_max + Γ̃_x(t_j)) h_i
  ///   command rows M′ δv ≤ m′ − M′ v_k
  ///   move rows    U δv − u ζ ≤ 0, −ζ ≤ 0
  ///   V₁′ rows     (augmentation only)
  ///   scalar rows  −s δv ≤ 0, −Λ_v s δv ≤ Λ_w w_max − ‖x_meas − x_k‖ with
  ///                s = sign(r − v_k) (scalar mode; RG_L keeps only the first)
  QpProblem assemble(const Vector& x_meas, const Vector& r) const;

  /// Computes v_{k+1}, updates the state and returns it. MaxIterations from
  /// the solver propagates.
  const Vector& step(const Vector& x_meas, const Vector& r, double t = 0.0);

  /// Cost ‖v − r‖²_S.
  double cost(const Vector& v, const Vector& r) const;

 private:
  void relinearize(const Vector& v);

  PlantPtr model_;
  NormSpec spec_;
  NormSpec cmd_norm_;
  std::vector<Certificate> certs_;
  GovernorConfig cfg_;
  GovernorKind kind_;
  Matrix S_;
  Vector h_;                         // H_B(M) for X
  Polytope v1_;
  Vector v_;
  LinearizationCache cache_;
  StepDiagnostics last_;
  QpSolver solver_;
};

}  // namespace refgov
