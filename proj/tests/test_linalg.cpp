#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "refgov/error.hpp"
#include "refgov/linalg.hpp"
#include "refgov/model.hpp"
#include "refgov/norms.hpp"
#include "support.hpp"

namespace refgov {
namespace {

using test::max_abs_diff;

TEST(SolveLinear, Identity) {
  const Vector x = solve_linear(Matrix::identity(3), Vector{1, 2, 3});
  EXPECT_EQ(x, (Vector{1, 2, 3}));
}

TEST(SolveLinear, Diagonal) {
  const Vector x = solve_linear(Matrix::diagonal({2, 4}), Vector{2, 4});
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_NEAR(x[1], 1.0, 1e-15);
}

TEST(SolveLinear, RandomResidual) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = test::random_matrix(rng, 5, 5) + 5.0 * Matrix::identity(5);
    const Vector b = test::random_vector(rng, 5);
    const Vector x = solve_linear(a, b);
    EXPECT_LE((a * x - b).norm_inf(), 1e-10 * (1.0 + b.norm_inf()));
  }
}

TEST(SolveLinear, SingularThrows) {
  const Matrix a{{1, 2}, {2, 4}};
  try {
    solve_linear(a, Vector{1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularMatrix);
  }
}

TEST(SolveLinear, RejectsNonFinite) {
  Matrix a = Matrix::identity(2);
  a(0, 1) = NAN;
  try {
    solve_linear(a, Vector{1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(SolveLinear, DimensionMismatch) {
  try {
    solve_linear(Matrix::identity(2), Vector{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(LeastSquares, RecoversExactSolution) {
  std::mt19937_64 rng(3);
  const Matrix a = test::random_matrix(rng, 7, 3);
  const Matrix x = test::random_matrix(rng, 3, 2);
  EXPECT_LT(max_abs_diff(least_squares(a, a * x), x), 1e-12);
}

TEST(SymEig, Diagonal) { EXPECT_DOUBLE_EQ(sym_eig_max(Matrix::diagonal({-0.5, -1.5})), -0.5); }

TEST(SymEig, Swap) { EXPECT_NEAR(sym_eig_max(Matrix{{0, 1}, {1, 0}}), 1.0, 1e-14); }

TEST(SymEig, TwoByTwoClosedForm) {
  const double a = -0.3536, b = 0.1464, d = -1.5;
  const double oracle = 0.5 * (a + d) + std::sqrt(0.25 * (a - d) * (a - d) + b * b);
  const double got = sym_eig_max(Matrix{{a, b}, {b, d}});
  EXPECT_NEAR(got, oracle, 1e-12);
  EXPECT_NEAR(got, -0.3351, 1e-3);
}

TEST(SymEig, NonSquareThrows) {
  try {
    sym_eig_max(Matrix(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(SymEig, RayleighQuotientBound) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = test::random_matrix(rng, 5, 5);
    const double top = sym_eig_max(s);
    for (int k = 0; k < 100; ++k) {
      const Vector v = test::random_vector(rng, 5);
      EXPECT_GE(top + 1e-12, dot(v, s * v) / dot(v, v));
    }
  }
}

TEST(SymEig, Decomposition) {
  std::mt19937_64 rng(9);
  const Matrix s = test::random_matrix(rng, 6, 6).symmetric_part();
  const SymmetricEigen e = sym_eig(s);
  const Matrix rebuilt = e.vectors * Matrix::diagonal(e.values) * e.vectors.transpose();
  EXPECT_LT(max_abs_diff(rebuilt, s), 1e-11);
  for (std::size_t i = 1; i < e.values.size(); ++i) EXPECT_LE(e.values[i - 1], e.values[i]);
}

TEST(MatExp, ZeroTime) {
  std::mt19937_64 rng(1);
  const Matrix a = test::random_matrix(rng, 4, 4);
  EXPECT_EQ(mat_exp(a, 0.0), Matrix::identity(4));
}

TEST(MatExp, Nilpotent) {
  const Matrix a{{0, 1}, {0, 0}};
  for (double t : {0.5, 3.0, -2.0}) {
    EXPECT_LT(max_abs_diff(mat_exp(a, t), Matrix{{1, t}, {0, 1}}), 1e-14);
  }
}

TEST(MatExp, MatchesTaylorOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix a = test::random_matrix(rng, 4, 4);
    a *= 2.0 / a.norm_inf();
    const Matrix oracle = test::taylor_exp(a, 1.0);
    EXPECT_LE((mat_exp(a, 1.0) - oracle).norm_fro(), 1e-9 * oracle.norm_fro());
  }
}

TEST(MatExp, LargeNormMatchesOracle) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = test::random_stable(rng, 4);
    const Matrix oracle = test::taylor_exp(a, 7.5);
    EXPECT_LE((mat_exp(a, 7.5) - oracle).norm_fro(), 1e-9 * oracle.norm_fro());
  }
}

TEST(MatExp, Semigroup) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = test::random_matrix(rng, 3, 3);
    const double t1 = u(rng), t2 = u(rng);
    const Matrix lhs = mat_exp(a, t1) * mat_exp(a, t2);
    const Matrix rhs = mat_exp(a, t1 + t2);
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-8 * (1.0 + rhs.max_abs()));
  }
}

TEST(ConvolutionGain, ZeroTime) {
  const Matrix g = convolution_gain(Matrix{{-1, 0}, {1, -2}}, Matrix{{1}, {2}}, 0.0);
  EXPECT_EQ(g.max_abs(), 0.0);
}

TEST(ConvolutionGain, Scalar) {
  const Matrix g = convolution_gain(Matrix{{-1}}, Matrix{{1}}, std::log(2.0));
  EXPECT_NEAR(g(0, 0), 0.5, 1e-14);
}

// Composite Simpson over e^{A(t−τ)}B with the Taylor oracle for the kernel.
Matrix simpson_oracle(const Matrix& a, const Matrix& b, double t, int intervals) {
  const double h = t / intervals;
  Matrix sum = Matrix::zeros(a.rows(), b.cols());
  for (int k = 0; k <= intervals; ++k) {
    const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += w * (test::taylor_exp(a, t - k * h) * b);
  }
  return sum * (h / 3.0);
}

TEST(ConvolutionGain, ClosedFormMatchesQuadrature) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = test::random_stable(rng, 3);
    const Matrix b = test::random_matrix(rng, 3, 2);
    const Matrix closed = convolution_gain(a, b, 1.3);
    EXPECT_LT(max_abs_diff(closed, simpson_oracle(a, b, 1.3, 400)), 1e-8);
    EXPECT_LT(max_abs_diff(closed, convolution_gain_quadrature(a, b, 1.3)), 1e-8);
  }
}

TEST(ConvolutionGain, SingularFallsBackToQuadrature) {
  const Matrix a{{0, 1}, {0, -1}};
  const Matrix b{{0}, {1}};
  const double t = 2.0;
  // ẋ₂ = −x₂ + 1, ẋ₁ = x₂ from rest.
  const double x2 = 1.0 - std::exp(-t);
  const double x1 = t - x2;
  const Matrix g = convolution_gain(a, b, t);
  EXPECT_NEAR(g(0, 0), x1, 1e-10);
  EXPECT_NEAR(g(1, 0), x2, 1e-10);
}

TEST(Lyapunov, Residual) {
  std::mt19937_64 rng(41);
  const Matrix a = test::random_stable(rng, 4);
  const Matrix c = test::random_spd(rng, 4);
  const Matrix x = solve_lyapunov(a, c);
  EXPECT_LT((a.transpose() * x + x * a + c).norm_fro(), 1e-10);
}

TEST(Care, ScalarStable) {
  const Matrix p = solve_care(Matrix{{-1}}, Matrix{{1}}, Matrix{{1}}, Matrix{{1}});
  EXPECT_NEAR(p(0, 0), -1.0 + std::sqrt(2.0), 1e-9);
}

TEST(Care, ScalarUnstable) {
  const Matrix p = solve_care(Matrix{{1}}, Matrix{{1}}, Matrix{{1}}, Matrix{{1}});
  EXPECT_NEAR(p(0, 0), 1.0 + std::sqrt(2.0), 1e-9);
}

TEST(Care, LyapunovLimit) {
  const Matrix p = solve_care(Matrix{{-1}}, Matrix{{0}}, Matrix{{2}}, Matrix{{1}});
  EXPECT_NEAR(p(0, 0), 1.0, 1e-9);
}

TEST(Care, ScalarClosedLoopLogNorm) {
  const Matrix a{{1}}, b{{1}};
  const Matrix p = solve_care(a, b, Matrix{{1}}, Matrix{{1}});
  EXPECT_LT(log_norm(a - b * b.transpose() * p, NormSpec::l2()), 0.0);
}

TEST(Care, Spacecraft) {
  const auto sc = spacecraft();
  const Matrix& a = sc->design_a();
  const Matrix& b = sc->design_b();
  const Matrix& p = sc->riccati();
  const auto& prm = sc->params();
  EXPECT_LE(care_residual(a, b, prm.Q, prm.R, p), 1e-8 * prm.Q.norm_fro());
  EXPECT_LT((p - p.transpose()).max_abs(), 1e-10);
  EXPECT_GT(sym_eig_min(p), 0.0);
  // The double-integrator closed loop is not ℓ2-contractive, so Hurwitz-ness
  // is certified in the Riccati-weighted norm instead.
  const Matrix closed = a - b * sc->gain();
  EXPECT_LT(log_norm(closed, NormSpec::weighted(p)), 0.0);
}

TEST(Care, RandomResidual) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = test::random_matrix(rng, 4, 4);
    const Matrix b = test::random_matrix(rng, 4, 2);
    const Matrix q = Matrix::identity(4);
    const Matrix r = Matrix::identity(2);
    const Matrix p = solve_care(a, b, q, r);
    EXPECT_LE(care_residual(a, b, q, r, p), 1e-8 * (1.0 + p.norm_fro()));
  }
}

TEST(Care, NotStabilizable) {
  // Unstable mode that the input cannot reach.
  try {
    solve_care(Matrix{{1, 0}, {0, -1}}, Matrix{{0}, {1}}, Matrix::identity(2), Matrix{{1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::kNotStabilizable || e.code() == ErrorCode::kNoConvergence);
  }
}

}  // namespace
}  // namespace refgov
