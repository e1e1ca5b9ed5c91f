#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "refgov/error.hpp"
#include "refgov/model.hpp"
#include "support.hpp"

namespace refgov {
namespace {

constexpr double kPi = std::numbers::pi;

Vector sample_box(std::mt19937_64& rng, const Polytope& p) {
  const auto [lo, hi] = p.box_bounds();
  Vector z(lo.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = std::uniform_real_distribution<double>(lo[i], hi[i])(rng);
  }
  return z;
}

Matrix fd_jacobian_x(const PlantModel& m, const Vector& x, const Vector& v, double h) {
  Matrix j(m.state_dim(), m.state_dim());
  for (std::size_t k = 0; k < x.size(); ++k) {
    Vector xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    j.set_col(k, (1.0 / (2 * h)) * (m.f(xp, v) - m.f(xm, v)));
  }
  return j;
}

Matrix fd_jacobian_v(const PlantModel& m, const Vector& x, const Vector& v, double h) {
  Matrix j(m.state_dim(), m.command_dim());
  for (std::size_t k = 0; k < v.size(); ++k) {
    Vector vp = v, vm = v;
    vp[k] += h;
    vm[k] -= h;
    j.set_col(k, (1.0 / (2 * h)) * (m.f(x, vp) - m.f(x, vm)));
  }
  return j;
}

std::vector<PlantPtr> builtin_models() {
  return {example1(), spacecraft(),
          linear_plant(Matrix{{-1, 0.5}, {0, -2}}, Matrix{{1}, {1}},
                       Polytope::box({-1, -0.4}, {1, 0.4}), Polytope::box({-0.7}, {0.7}))};
}

TEST(Polytope, Validation) {
  EXPECT_THROW(Polytope(Matrix{{1, 0}}, Vector{1, 2}), Error);
  try {
    Polytope(Matrix{{1, 0}, {0, 0}}, Vector{1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(Polytope, Box) {
  const Polytope p = Polytope::box({-1, -2}, {1, 3});
  EXPECT_EQ(p.num_rows(), 4u);
  EXPECT_TRUE(p.contains(Vector{0.5, 2.9}));
  EXPECT_FALSE(p.contains(Vector{0.5, 3.1}));
  EXPECT_DOUBLE_EQ(p.max_violation(Vector{0, 4}), 1.0);
  const auto [lo, hi] = p.box_bounds();
  EXPECT_EQ(lo, (Vector{-1, -2}));
  EXPECT_EQ(hi, (Vector{1, 3}));
}

TEST(Example1, Examples) {
  const auto m = example1();
  EXPECT_EQ(m->f(Vector{0, 0}, Vector{0}), (Vector{0, 0}));
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const Vector x = sample_box(rng, m->state_set());
    const Vector v = sample_box(rng, m->command_set());
    EXPECT_EQ(m->f_v(x, v), (Matrix{{0.5}, {1.0}}));
  }
  const Vector xs = m->steady_state(Vector{std::sin(kPi / 4)});
  EXPECT_NEAR(xs[0], kPi / 4, 1e-15);
  EXPECT_EQ(xs[1], 0.0);
  const auto [lo, hi] = m->state_set().box_bounds();
  EXPECT_NEAR(hi[0], kPi / 4, 1e-15);
  EXPECT_NEAR(hi[1], 0.2, 1e-15);
  EXPECT_EQ(m->disturbance_channels(), (std::vector<std::size_t>{0}));
}

TEST(Spacecraft, Examples) {
  const auto m = spacecraft();
  EXPECT_LT(m->f(Vector(6), Vector(3)).norm_inf(), 1e-15);
  const double a = kPi / 20;
  const Vector xs = m->steady_state(Vector{a, a, a});
  EXPECT_EQ(xs, (Vector{a, a, a, 0, 0, 0}));
  const auto [lo, hi] = m->command_set().box_bounds();
  EXPECT_NEAR(hi[0], 0.19, 1e-15);
  EXPECT_NEAR(lo[2], -0.19, 1e-15);
}

TEST(Models, JacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (const auto& m : builtin_models()) {
    for (int k = 0; k < 100; ++k) {
      const Vector x = sample_box(rng, m->state_set());
      const Vector v = sample_box(rng, m->command_set());
      EXPECT_LT(test::max_abs_diff(m->f_x(x, v), fd_jacobian_x(*m, x, v, 1e-6)), 1e-5)
          << m->name();
      EXPECT_LT(test::max_abs_diff(m->f_v(x, v), fd_jacobian_v(*m, x, v, 1e-6)), 1e-5)
          << m->name();
    }
  }
}

TEST(Models, SteadyStateIsEquilibrium) {
  std::mt19937_64 rng(3);
  for (const auto& m : builtin_models()) {
    for (int k = 0; k < 50; ++k) {
      const Vector v = sample_box(rng, m->command_set());
      EXPECT_LE(m->f(m->steady_state(v), v).norm_inf(), 1e-10) << m->name();
    }
  }
}

TEST(Linearize, Example1AtOrigin) {
  const Linearization l = linearize(*example1(), Vector{0});
  EXPECT_LT(test::max_abs_diff(l.A, Matrix{{-0.5, 1}, {-1, -1.5}}), 1e-15);
  EXPECT_EQ(l.B, (Matrix{{0.5}, {1}}));
}

TEST(Linearize, SpacecraftAtOriginIsDesignClosedLoop) {
  const auto m = spacecraft();
  const Matrix closed = m->design_a() - m->design_b() * m->gain();
  EXPECT_LT(test::max_abs_diff(linearize(*m, Vector(3)).A, closed), 1e-12);
}

// Away from the origin only the kinematic ω-block moves: it becomes the
// 3-2-1 Euler rate matrix at the commanded angles.
TEST(Linearize, SpacecraftAwayFromOrigin) {
  const auto m = spacecraft();
  const Matrix closed = m->design_a() - m->design_b() * m->gain();
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const Vector v = sample_box(rng, m->command_set());
    const Linearization l = linearize(*m, v);
    EXPECT_LT(test::max_abs_diff(l.A.block(3, 0, 3, 6), closed.block(3, 0, 3, 6)), 1e-12);
    EXPECT_EQ(l.A.block(0, 0, 3, 3).max_abs(), 0.0);
    const double sp = std::sin(v[0]), cp = std::cos(v[0]);
    const double tt = std::tan(v[1]), ct = std::cos(v[1]);
    const Matrix euler{{1, sp * tt, cp * tt}, {0, cp, -sp}, {0, sp / ct, cp / ct}};
    EXPECT_LT(test::max_abs_diff(l.A.block(0, 3, 3, 3), euler), 1e-12);
    EXPECT_LT(test::max_abs_diff(fd_jacobian_x(*m, m->steady_state(v), v, 1e-6), l.A), 1e-6);
  }
}

TEST(Linearize, RejectsCommandOutsideV) {
  try {
    linearize(*example1(), Vector{0.8});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutsideAdmissibleSet);
  }
}

TEST(AffineSteadyState, Spacecraft) {
  const AffineSteadyState a = affine_steady_state(*spacecraft());
  EXPECT_LT(a.offset.norm_inf(), 1e-15);
  Matrix expected(6, 3);
  expected.set_block(0, 0, Matrix::identity(3));
  EXPECT_LT(test::max_abs_diff(a.gain, expected), 1e-12);
}

TEST(AffineSteadyState, LinearPlant) {
  const Matrix A{{-1, 0.5}, {0, -2}};
  const Matrix B{{1}, {1}};
  const auto m = linear_plant(A, B, Polytope::box({-1, -1}, {1, 1}), Polytope::box({-1}, {1}));
  const AffineSteadyState a = affine_steady_state(*m);
  EXPECT_LT(test::max_abs_diff(a.gain, -1.0 * solve_linear(A, B)), 1e-12);
}

TEST(AffineSteadyState, Example1IsNotAffine) {
  try {
    affine_steady_state(*example1());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotAffine);
  }
}

TEST(Spacecraft, CheckStateRejectsGimbalLock) {
  const auto m = spacecraft();
  EXPECT_THROW(m->check_state(Vector{0, kPi / 2, 0, 0, 0, 0}), Error);
  EXPECT_NO_THROW(m->check_state(Vector{0, 0.3, 0, 0, 0, 0}));
}

}  // namespace
}  // namespace refgov
