#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace refgov {

/// Dense real vector with value semantics.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  static Vector zeros(std::size_t n) { return Vector(n); }
  static Vector unit(std::size_t n, std::size_t i);

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double s);

  double norm_inf() const;
  double norm2() const;
  bool all_finite() const;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator-(Vector a);
Vector operator*(double s, Vector a);
Vector operator*(Vector a, double s);
double dot(const Vector& a, const Vector& b);

/// Dense real matrix stored row-major.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }
  static Matrix identity(std::size_t n);
  static Matrix diagonal(const Vector& d);
  /// Single-column matrix.
  static Matrix column(const Vector& v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row_span(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  Vector row(std::size_t i) const;
  Vector col(std::size_t j) const;
  void set_row(std::size_t i, const Vector& v);
  void set_col(std::size_t j, const Vector& v);

  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);

  Matrix transpose() const;
  /// (A + Aᵀ)/2
  Matrix symmetric_part() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  /// Max absolute row sum.
  double norm_inf() const;
  double norm_fro() const;
  double max_abs() const;
  double trace() const;
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator-(Matrix a);
Matrix operator*(double s, Matrix a);
Matrix operator*(Matrix a, double s);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, const Vector& x);

/// Throws NonFinite if any entry is NaN or Inf.
void require_finite(const Matrix& a, const char* what);
void require_finite(const Vector& v, const char* what);

/// LU factorization with partial pivoting, PA = LU.
class LuDecomposition {
 public:
  /// Throws SingularMatrix when a pivot magnitude falls below
  /// 1e-12 * ‖A‖∞.
  explicit LuDecomposition(const Matrix& a);

  std::size_t size() const noexcept { return lu_.rows(); }
  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  /// log|det A| and the sign of det A.
  double log_abs_determinant() const;
  int determinant_sign() const noexcept { return sign_; }

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  int sign_ = 1;
};

Vector solve_linear(const Matrix& a, const Vector& b);
Matrix solve_linear(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);

/// Minimum-residual solution of an overdetermined full-column-rank system via
/// Householder QR.
Matrix least_squares(const Matrix& a, const Matrix& b);

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // column i pairs with values[i]
};

/// Cyclic Jacobi on (S + Sᵀ)/2. Sweeps until the off-diagonal Frobenius norm
/// is below 1e-12 * ‖S‖_F.
SymmetricEigen sym_eig(const Matrix& s);
double sym_eig_max(const Matrix& s);
double sym_eig_min(const Matrix& s);

/// e^{A t} by scaling and squaring around a degree-6 diagonal Padé core.
Matrix mat_exp(const Matrix& a, double t);

/// ∫₀ᵗ e^{A(t−τ)} B dτ. Uses A⁻¹(e^{At} − I)B when A is invertible and
/// falls back to composite Simpson quadrature otherwise.
Matrix convolution_gain(const Matrix& a, const Matrix& b, double t);
/// The quadrature route alone; `intervals` is rounded up to an even count
/// and is at least 256.
Matrix convolution_gain_quadrature(const Matrix& a, const Matrix& b, double t,
                                   std::size_t intervals = 256);

/// Solves Aᵀ X + X A + C = 0 by Kronecker vectorization (small n only).
Matrix solve_lyapunov(const Matrix& a, const Matrix& c);

/// ‖AᵀP + PA − PBR⁻¹BᵀP + Q‖_F
double care_residual(const Matrix& a, const Matrix& b, const Matrix& q,
                     const Matrix& r, const Matrix& p);

/// Stabilizing solution of AᵀP + PA − PBR⁻¹BᵀP + Q = 0 via the matrix sign
/// function of the Hamiltonian [[A, −BR⁻¹Bᵀ], [−Q, −Aᵀ]].
Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r);

}  // namespace refgov
