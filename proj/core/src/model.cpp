#include "refgov/model.hpp"

#include <cmath>
#include <numbers>

#include "refgov/error.hpp"

namespace refgov {

// ---------------------------------------------------------------- Polytope

Polytope::Polytope(Matrix rows, Vector rhs) : M(std::move(rows)), m(std::move(rhs)) {
  if (M.rows() != m.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "polytope: row count differs from rhs length");
  }
  for (std::size_t i = 0; i < M.rows(); ++i) {
    if (M.row(i).norm_inf() == 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "polytope: zero row " + std::to_string(i));
    }
  }
}

Polytope Polytope::box(const Vector& lower, const Vector& upper) {
  if (lower.size() != upper.size()) throw Error(ErrorCode::kDimensionMismatch, "box bounds");
  const std::size_t n = lower.size();
  Matrix rows(2 * n, n);
  Vector rhs(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (lower[i] > upper[i]) throw Error(ErrorCode::kInvalidArgument, "box: lower > upper");
    rows(2 * i, i) = 1.0;
    rhs[2 * i] = upper[i];
    rows(2 * i + 1, i) = -1.0;
    rhs[2 * i + 1] = -lower[i];
  }
  return {std::move(rows), std::move(rhs)};
}

double Polytope::max_violation(const Vector& z) const {
  const Vector g = M * z;
  double worst = -INFINITY;
  for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, g[i] - m[i]);
  return worst;
}

bool Polytope::contains(const Vector& z, double tol) const { return max_violation(z) <= tol; }

std::pair<Vector, Vector> Polytope::box_bounds() const {
  const std::size_t n = dim();
  Vector lo(n, -INFINITY);
  Vector hi(n, INFINITY);
  for (std::size_t i = 0; i < M.rows(); ++i) {
    std::size_t axis = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (M(i, j) != 0.0) {
        if (axis != n) throw Error(ErrorCode::kInvalidArgument, "polytope is not a box");
        axis = j;
      }
    }
    const double bound = m[i] / M(i, axis);
    if (M(i, axis) > 0) {
      hi[axis] = std::min(hi[axis], bound);
    } else {
      lo[axis] = std::max(lo[axis], bound);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(lo[j]) || !std::isfinite(hi[j])) {
      throw Error(ErrorCode::kInvalidArgument, "box is unbounded along an axis");
    }
  }
  return {lo, hi};
}

// ---------------------------------------------------------------- PlantModel

void PlantModel::check_state(const Vector& x) const {
  if (!x.all_finite()) throw Error(ErrorCode::kNonFinite, name() + ": state is not finite");
}

Linearization linearize(const PlantModel& model, const Vector& v_bar) {
  if (v_bar.size() != model.command_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "linearize: command dimension");
  }
  if (!model.command_set().contains(v_bar, 1e-12)) {
    throw Error(ErrorCode::kOutsideAdmissibleSet, "linearize: command outside V");
  }
  const Vector xs = model.steady_state(v_bar);
  return {model.f_x(xs, v_bar), model.f_v(xs, v_bar)};
}

AffineSteadyState affine_steady_state(const PlantModel& model) {
  const auto [lo, hi] = model.command_set().box_bounds();
  const std::size_t nv = model.command_dim();
  const Vector center = 0.5 * (lo + hi);
  const Vector x_center = model.steady_state(center);

  AffineSteadyState map{Vector(), Matrix(model.state_dim(), nv)};
  for (std::size_t i = 0; i < nv; ++i) {
    const double h = 0.5 * (hi[i] - lo[i]);
    if (h <= 0.0) continue;
    Vector probe = center;
    probe[i] += h;
    map.gain.set_col(i, (1.0 / h) * (model.steady_state(probe) - x_center));
  }
  map.offset = x_center - map.gain * center;

  // Corners and edge midpoints of the command box.
  const std::size_t samples = std::size_t{1} << nv;
  for (std::size_t mask = 0; mask < samples; ++mask) {
    for (double frac : {1.0, 0.5, 0.25}) {
      Vector v = center;
      for (std::size_t i = 0; i < nv; ++i) {
        const double half = 0.5 * (hi[i] - lo[i]) * frac;
        v[i] += (mask >> i & 1U) ? half : -half;
      }
      const Vector exact = model.steady_state(v);
      const Vector approx = map.offset + map.gain * v;
      if ((exact - approx).norm_inf() > 1e-10 * (1.0 + exact.norm_inf())) {
        throw Error(ErrorCode::kNotAffine, model.name() + ": steady-state map is not affine");
      }
    }
  }
  return map;
}

const char* to_string(DisturbanceShape shape) {
  switch (shape) {
    case DisturbanceShape::kBall: return "ball";
    case DisturbanceShape::kBox: return "box";
    case DisturbanceShape::kConstant: return "constant";
  }
  return "?";
}

// ---------------------------------------------------------------- example 1

namespace {

class SecondOrderExample final : public PlantModel {
 public:
  SecondOrderExample() {
    const double q = std::numbers::pi / 4.0;
    state_set_ = Polytope::box({-q, -0.2}, {q, 0.2});
    const double vmax = std::sin(q);
    command_set_ = Polytope::box({-vmax}, {vmax});
  }

  std::string name() const override { return "example1"; }
  std::size_t state_dim() const override { return 2; }
  std::size_t command_dim() const override { return 1; }

  Vector f(const Vector& x, const Vector& v) const override {
    const double s = std::sin(x[0]);
    return {-0.5 * s + x[1] + 0.5 * v[0], -s - 1.5 * x[1] + v[0]};
  }

  Matrix f_x(const Vector& x, const Vector&) const override {
    const double c = std::cos(x[0]);
    return {{-0.5 * c, 1.0}, {-c, -1.5}};
  }

  Matrix f_v(const Vector&, const Vector&) const override { return {{0.5}, {1.0}}; }

  Vector steady_state(const Vector& v) const override {
    if (std::abs(v[0]) > 1.0) {
      throw Error(ErrorCode::kOutsideAdmissibleSet, "example1: |v| > 1 has no steady state");
    }
    return {std::asin(v[0]), 0.0};
  }

  const Polytope& state_set() const override { return state_set_; }
  const Polytope& command_set() const override { return command_set_; }
  std::vector<std::size_t> disturbance_channels() const override { return {0}; }

 private:
  Polytope state_set_;
  Polytope command_set_;
};

class LinearPlant final : public PlantModel {
 public:
  LinearPlant(Matrix a, Matrix b, Polytope x_set, Polytope v_set)
      : a_(std::move(a)), b_(std::move(b)), x_set_(std::move(x_set)), v_set_(std::move(v_set)) {
    if (!a_.is_square() || b_.rows() != a_.rows() || x_set_.dim() != a_.rows() ||
        v_set_.dim() != b_.cols()) {
      throw Error(ErrorCode::kDimensionMismatch, "linear_plant");
    }
    dc_gain_ = -solve_linear(a_, b_);
  }

  std::string name() const override { return "linear"; }
  std::size_t state_dim() const override { return a_.rows(); }
  std::size_t command_dim() const override { return b_.cols(); }
  Vector f(const Vector& x, const Vector& v) const override { return a_ * x + b_ * v; }
  Matrix f_x(const Vector&, const Vector&) const override { return a_; }
  Matrix f_v(const Vector&, const Vector&) const override { return b_; }
  Vector steady_state(const Vector& v) const override { return dc_gain_ * v; }
  const Polytope& state_set() const override { return x_set_; }
  const Polytope& command_set() const override { return v_set_; }
  std::vector<std::size_t> disturbance_channels() const override {
    std::vector<std::size_t> all(a_.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }

 private:
  Matrix a_;
  Matrix b_;
  Matrix dc_gain_;
  Polytope x_set_;
  Polytope v_set_;
};

}  // namespace

PlantPtr example1() { return std::make_shared<SecondOrderExample>(); }

PlantPtr linear_plant(Matrix a, Matrix b, Polytope x_set, Polytope v_set) {
  return std::make_shared<LinearPlant>(std::move(a), std::move(b), std::move(x_set),
                                       std::move(v_set));
}

// ---------------------------------------------------------------- spacecraft

SpacecraftModel::SpacecraftModel(SpacecraftParams params) : params_(std::move(params)) {
  const Vector& j = params_.inertia;
  if (j.size() != 3 || !(j[0] > 0 && j[1] > 0 && j[2] > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "spacecraft: inertias must be positive");
  }
  design_a_ = Matrix(6, 6);
  design_a_.set_block(0, 3, Matrix::identity(3));
  design_b_ = Matrix(6, 3);
  for (std::size_t i = 0; i < 3; ++i) design_b_(3 + i, i) = 1.0 / j[i];

  riccati_ = solve_care(design_a_, design_b_, params_.Q, params_.R);
  gain_ = solve_linear(params_.R, design_b_.transpose() * riccati_);

  const double a = params_.angle_limit;
  const double w = params_.rate_limit;
  state_set_ = Polytope::box({-a, -a, -a, -w, -w, -w}, {a, a, a, w, w, w});
  const double vmax = a - params_.command_margin;
  if (!(vmax > 0)) throw Error(ErrorCode::kInvalidArgument, "spacecraft: command margin too big");
  command_set_ = Polytope::box({-vmax, -vmax, -vmax}, {vmax, vmax, vmax});
}

Vector SpacecraftModel::f(const Vector& x, const Vector& v) const {
  const double phi = x[0];
  const double theta = x[1];
  const double w1 = x[3];
  const double w2 = x[4];
  const double w3 = x[5];
  const double sp = std::sin(phi);
  const double cp = std::cos(phi);
  const double tt = std::tan(theta);
  const double ct = std::cos(theta);
  const Vector& j = params_.inertia;

  Vector err = x;
  for (std::size_t i = 0; i < 3; ++i) err[i] -= v[i];
  const Vector torque = -(gain_ * err);

  return {w1 + sp * tt * w2 + cp * tt * w3,
          cp * w2 - sp * w3,
          (sp * w2 + cp * w3) / ct,
          (j[1] - j[2]) / j[0] * w2 * w3 + torque[0] / j[0],
          (j[2] - j[0]) / j[1] * w3 * w1 + torque[1] / j[1],
          (j[0] - j[1]) / j[2] * w1 * w2 + torque[2] / j[2]};
}

Matrix SpacecraftModel::f_x(const Vector& x, const Vector&) const {
  const double phi = x[0];
  const double theta = x[1];
  const double w1 = x[3];
  const double w2 = x[4];
  const double w3 = x[5];
  const double sp = std::sin(phi);
  const double cp = std::cos(phi);
  const double tt = std::tan(theta);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const Vector& j = params_.inertia;

  Matrix jac(6, 6);
  // Kinematics.
  jac(0, 0) = cp * tt * w2 - sp * tt * w3;
  jac(0, 1) = (sp * w2 + cp * w3) / (ct * ct);
  jac(0, 3) = 1.0;
  jac(0, 4) = sp * tt;
  jac(0, 5) = cp * tt;
  jac(1, 0) = -sp * w2 - cp * w3;
  jac(1, 4) = cp;
  jac(1, 5) = -sp;
  jac(2, 0) = (cp * w2 - sp * w3) / ct;
  jac(2, 1) = (sp * w2 + cp * w3) * st / (ct * ct);
  jac(2, 4) = sp / ct;
  jac(2, 5) = cp / ct;
  // Gyroscopic coupling.
  jac(3, 4) = (j[1] - j[2]) / j[0] * w3;
  jac(3, 5) = (j[1] - j[2]) / j[0] * w2;
  jac(4, 3) = (j[2] - j[0]) / j[1] * w3;
  jac(4, 5) = (j[2] - j[0]) / j[1] * w1;
  jac(5, 3) = (j[0] - j[1]) / j[2] * w2;
  jac(5, 4) = (j[0] - j[1]) / j[2] * w1;
  // Feedback.
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 6; ++c) jac(3 + r, c) -= gain_(r, c) / j[r];
  return jac;
}

Matrix SpacecraftModel::f_v(const Vector&, const Vector&) const {
  Matrix b(6, 3);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) b(3 + r, c) = gain_(r, c) / params_.inertia[r];
  return b;
}

Vector SpacecraftModel::steady_state(const Vector& v) const {
  return {v[0], v[1], v[2], 0.0, 0.0, 0.0};
}

void SpacecraftModel::check_state(const Vector& x) const {
  PlantModel::check_state(x);
  if (!(std::abs(x[1]) < 1.0)) {
    throw Error(ErrorCode::kNonFinite, "spacecraft: pitch left |theta| < 1 rad");
  }
}

std::shared_ptr<const SpacecraftModel> spacecraft(SpacecraftParams params) {
  return std::make_shared<SpacecraftModel>(std::move(params));
}

}  // namespace refgov
