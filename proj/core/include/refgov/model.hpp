#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "refgov/linalg.hpp"

namespace refgov {

/// {z | M z ≤ m}
struct Polytope {
  Matrix M;
  Vector m;

  Polytope() = default;
  /// Throws DimensionMismatch on a row-count mismatch and InvalidArgument on
  /// an all-zero row.
  Polytope(Matrix rows, Vector rhs);

  /// {z | lower ≤ z ≤ upper} written as 2·dim rows: +e_i then −e_i per axis.
  static Polytope box(const Vector& lower, const Vector& upper);

  std::size_t dim() const noexcept { return M.cols(); }
  std::size_t num_rows() const noexcept { return M.rows(); }

  /// max_i (M_i·z − m_i); ≤ 0 inside.
  double max_violation(const Vector& z) const;
  bool contains(const Vector& z, double tol = 0.0) const;

  /// Axis-aligned bounds when every row has exactly one nonzero entry.
  /// Throws InvalidArgument otherwise or when an axis is unbounded.
  std::pair<Vector, Vector> box_bounds() const;
};

/// Plant ẋ = f(x, v) + w with hand-coded Jacobians and steady-state map.
/// Implementations are immutable and reentrant.
class PlantModel {
 public:
  virtual ~PlantModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t command_dim() const = 0;

  virtual Vector f(const Vector& x, const Vector& v) const = 0;
  virtual Matrix f_x(const Vector& x, const Vector& v) const = 0;
  virtual Matrix f_v(const Vector& x, const Vector& v) const = 0;
  /// The equilibrium x_v(v̄) with f(x_v(v̄), v̄) = 0.
  virtual Vector steady_state(const Vector& v) const = 0;

  /// X and V.
  virtual const Polytope& state_set() const = 0;
  virtual const Polytope& command_set() const = 0;

  /// State components the additive disturbance w acts on.
  virtual std::vector<std::size_t> disturbance_channels() const = 0;

  /// Raises NonFinite if x has left the region where f is well defined.
  virtual void check_state(const Vector& x) const;
};

using PlantPtr = std::shared_ptr<const PlantModel>;

struct Linearization {
  Matrix A;  // f_x(x_v(v̄), v̄)
  Matrix B;  // f_v(x_v(v̄), v̄)
};

/// Throws OutsideAdmissibleSet when v̄ ∉ V (1e-12 slack).
Linearization linearize(const PlantModel& model, const Vector& v_bar);

/// x_v(v) = offset + gain·v.
struct AffineSteadyState {
  Vector offset;
  Matrix gain;
};

/// Extracts x_v as an affine map and verifies affinity at sample points of V.
/// Throws NotAffine when the check fails (tolerance 1e-10 relative).
AffineSteadyState affine_steady_state(const PlantModel& model);

/// ẋ₁ = −0.5 sin x₁ + x₂ + 0.5 v + w, ẋ₂ = −sin x₁ − 1.5 x₂ + v.
/// X = [−π/4, π/4] × [−0.2, 0.2], V = [−sin(π/4), sin(π/4)].
PlantPtr example1();

struct SpacecraftParams {
  Vector inertia{120.0, 100.0, 80.0};  // kg·m²
  Matrix Q = Matrix::identity(6);
  Matrix R = Matrix::identity(3) * 1e-3;
  double angle_limit = 0.2;   // rad
  double rate_limit = 0.05;   // rad/s
  double command_margin = 0.01;
};

/// Rigid-body attitude dynamics (3-2-1 Euler angles) closed by an LQR
/// designed on the double-integrator linearization at the origin.
class SpacecraftModel final : public PlantModel {
 public:
  explicit SpacecraftModel(SpacecraftParams params);

  std::string name() const override { return "spacecraft"; }
  std::size_t state_dim() const override { return 6; }
  std::size_t command_dim() const override { return 3; }

  Vector f(const Vector& x, const Vector& v) const override;
  Matrix f_x(const Vector& x, const Vector& v) const override;
  Matrix f_v(const Vector& x, const Vector& v) const override;
  Vector steady_state(const Vector& v) const override;
  const Polytope& state_set() const override { return state_set_; }
  const Polytope& command_set() const override { return command_set_; }
  std::vector<std::size_t> disturbance_channels() const override { return {3, 4, 5}; }
  void check_state(const Vector& x) const override;

  const SpacecraftParams& params() const noexcept { return params_; }
  /// Riccati solution used both for the gain and as the certificate weight.
  const Matrix& riccati() const noexcept { return riccati_; }
  const Matrix& gain() const noexcept { return gain_; }
  /// Design model (A, B) of the double integrator.
  const Matrix& design_a() const noexcept { return design_a_; }
  const Matrix& design_b() const noexcept { return design_b_; }

 private:
  SpacecraftParams params_;
  Matrix design_a_;
  Matrix design_b_;
  Matrix riccati_;
  Matrix gain_;
  Polytope state_set_;
  Polytope command_set_;
};

std::shared_ptr<const SpacecraftModel> spacecraft(SpacecraftParams params = {});

/// Linear test plant ẋ = A x + B v with x_v(v) = −A⁻¹B v, box X and V.
/// Handy for checks where the nonlinear error terms must vanish.
PlantPtr linear_plant(Matrix a, Matrix b, Polytope x_set, Polytope v_set);

enum class DisturbanceShape { kBall, kBox, kConstant };

/// Additive disturbance bound ‖w‖ ≤ w_max measured in the governor's norm.
struct DisturbanceSpec {
  double w_max = 0.0;
  DisturbanceShape shape = DisturbanceShape::kBall;
  /// σ / w_max for the truncated Gaussian magnitude.
  double sigma_ratio = 0.5;
  /// Direction for kConstant, over the disturbance channels.
  Vector direction;
};

const char* to_string(DisturbanceShape shape);

}  // namespace refgov
