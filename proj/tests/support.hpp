#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>

#include "refgov/linalg.hpp"

namespace refgov::test {

inline std::filesystem::path scenario_path(const char* name) {
  return std::filesystem::path(REFGOV_SCENARIO_DIR) / name;
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c,
                            double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vector v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// Random matrix shifted left so that its symmetric part is negative
// definite with margin at least `margin`.
inline Matrix random_stable(std::mt19937_64& rng, std::size_t n, double margin = 0.1) {
  Matrix a = random_matrix(rng, n, n);
  const double top = sym_eig_max(a);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return a - (top + margin + u(rng)) * Matrix::identity(n);
}

inline Matrix random_spd(std::mt19937_64& rng, std::size_t n) {
  const Matrix l = random_matrix(rng, n, n);
  return l * l.transpose() + 1e-3 * Matrix::identity(n);
}

// Oracle for e^{At}: halve until ‖At‖∞ ≤ 1/8, 40-term Taylor sum, square back.
inline Matrix taylor_exp(const Matrix& a, double t) {
  Matrix x = a * t;
  int squarings = 0;
  while (x.norm_inf() > 0.125) {
    x *= 0.5;
    ++squarings;
  }
  const std::size_t n = a.rows();
  Matrix sum = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  for (int k = 1; k <= 40; ++k) {
    term = term * x * (1.0 / k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).max_abs(); }
inline double max_abs_diff(const Vector& a, const Vector& b) { return (a - b).norm_inf(); }

}  // namespace refgov::test
