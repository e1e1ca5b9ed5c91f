#include "refgov/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "refgov/error.hpp"

namespace refgov {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                    "x" + std::to_string(b.cols()));
  }
}

void require_square(const Matrix& a, const char* op) {
  if (!a.is_square() || a.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(op) + ": expected a non-empty square matrix");
  }
}

}  // namespace

// ---------------------------------------------------------------- Vector

Vector Vector::unit(std::size_t n, std::size_t i) {
  Vector v(n);
  v[i] = 1.0;
  return v;
}

Vector& Vector::operator+=(const Vector& other) {
  if (size() != other.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "vector +=");
  }
  for (std::size_t i = 0; i < size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  if (size() != other.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "vector -=");
  }
  for (std::size_t i = 0; i < size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vector& Vector::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

double Vector::norm_inf() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double Vector::norm2() const { return std::sqrt(dot(*this, *this)); }

bool Vector::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator-(Vector a) { return a *= -1.0; }
Vector operator*(double s, Vector a) { return a *= s; }
Vector operator*(Vector a, double s) { return a *= s; }

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimensionMismatch, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// ---------------------------------------------------------------- Matrix

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged matrix initializer");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::column(const Vector& v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

Vector Matrix::row(std::size_t i) const {
  return Vector(std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                                    data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_)));
}

Vector Matrix::col(std::size_t j) const {
  Vector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void Matrix::set_row(std::size_t i, const Vector& v) {
  if (v.size() != cols_) throw Error(ErrorCode::kDimensionMismatch, "set_row");
  for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = v[j];
}

void Matrix::set_col(std::size_t j, const Vector& v) {
  if (v.size() != rows_) throw Error(ErrorCode::kDimensionMismatch, "set_col");
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) {
    throw Error(ErrorCode::kDimensionMismatch, "block out of range");
  }
  Matrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
  if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) {
    throw Error(ErrorCode::kDimensionMismatch, "set_block out of range");
  }
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::symmetric_part() const {
  require_square(*this, "symmetric_part");
  Matrix s(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
  return s;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "matrix +=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "matrix -=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

double Matrix::norm_inf() const {
  double m = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
    m = std::max(m, s);
  }
  return m;
}

double Matrix::norm_fro() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double Matrix::trace() const {
  require_square(*this, "trace");
  double s = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, i);
  return s;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator-(Matrix a) { return a *= -1.0; }
Matrix operator*(double s, Matrix a) { return a *= s; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::kDimensionMismatch, "matrix product");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Vector operator*(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw Error(ErrorCode::kDimensionMismatch, "matrix-vector product");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

void require_finite(const Matrix& a, const char* what) {
  if (!a.all_finite()) throw Error(ErrorCode::kNonFinite, what);
}

void require_finite(const Vector& v, const char* what) {
  if (!v.all_finite()) throw Error(ErrorCode::kNonFinite, what);
}

// ---------------------------------------------------------------- LU

LuDecomposition::LuDecomposition(const Matrix& a) : lu_(a), perm_(a.rows()) {
  require_square(a, "LU");
  require_finite(a, "LU input");
  const std::size_t n = a.rows();
  std::iota(perm_.begin(), perm_.end(), 0);
  const double tiny = 1e-12 * a.norm_inf();

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        p = i;
      }
    }
    if (best <= tiny || best == 0.0) {
      throw Error(ErrorCode::kSingularMatrix,
                  "pivot " + std::to_string(best) + " at column " + std::to_string(k));
    }
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
      std::swap(perm_[k], perm_[p]);
      sign_ = -sign_;
    }
    const double pivot = lu_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = lu_(i, k) / pivot;
      lu_(i, k) = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= l * lu_(k, j);
    }
  }
}

Vector LuDecomposition::solve(const Vector& b) const {
  const std::size_t n = size();
  if (b.size() != n) throw Error(ErrorCode::kDimensionMismatch, "LU solve");
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[perm_[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= lu_(ii, j) * x[j];
    x[ii] = s / lu_(ii, ii);
  }
  return x;
}

Matrix LuDecomposition::solve(const Matrix& b) const {
  if (b.rows() != size()) throw Error(ErrorCode::kDimensionMismatch, "LU solve");
  Matrix x(b.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) x.set_col(j, solve(b.col(j)));
  return x;
}

double LuDecomposition::log_abs_determinant() const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += std::log(std::abs(lu_(i, i)));
  return s;
}

Vector solve_linear(const Matrix& a, const Vector& b) {
  require_finite(b, "solve_linear rhs");
  return LuDecomposition(a).solve(b);
}

Matrix solve_linear(const Matrix& a, const Matrix& b) {
  require_finite(b, "solve_linear rhs");
  return LuDecomposition(a).solve(b);
}

Matrix inverse(const Matrix& a) {
  return LuDecomposition(a).solve(Matrix::identity(a.rows()));
}

// ---------------------------------------------------------------- QR least squares

Matrix least_squares(const Matrix& a, const Matrix& b) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m < n || b.rows() != m) throw Error(ErrorCode::kDimensionMismatch, "least_squares");
  Matrix r = a;
  Matrix y = b;
  for (std::size_t k = 0; k < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < m; ++i) norm += r(i, k) * r(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    const double alpha = r(k, k) > 0 ? -norm : norm;
    Vector v(m);
    v[k] = r(k, k) - alpha;
    for (std::size_t i = k + 1; i < m; ++i) v[i] = r(i, k);
    double vv = 0.0;
    for (std::size_t i = k; i < m; ++i) vv += v[i] * v[i];
    if (vv == 0.0) continue;
    auto reflect = [&](Matrix& target) {
      for (std::size_t j = 0; j < target.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = k; i < m; ++i) s += v[i] * target(i, j);
        s = 2.0 * s / vv;
        for (std::size_t i = k; i < m; ++i) target(i, j) -= s * v[i];
      }
    };
    reflect(r);
    reflect(y);
  }
  const double scale = r.max_abs();
  Matrix x(n, b.cols());
  for (std::size_t ii = n; ii-- > 0;) {
    if (std::abs(r(ii, ii)) <= 1e-13 * scale) {
      throw Error(ErrorCode::kSingularMatrix, "least_squares: rank deficient");
    }
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = y(ii, j);
      for (std::size_t c = ii + 1; c < n; ++c) s -= r(ii, c) * x(c, j);
      x(ii, j) = s / r(ii, ii);
    }
  }
  return x;
}

// ---------------------------------------------------------------- Jacobi

SymmetricEigen sym_eig(const Matrix& s) {
  require_square(s, "sym_eig");
  require_finite(s, "sym_eig input");
  const std::size_t n = s.rows();
  Matrix a = s.symmetric_part();
  Matrix v = Matrix::identity(n);
  const double target = 1e-12 * a.norm_fro();

  auto off_norm = [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) sum += a(i, j) * a(i, j);
    return std::sqrt(sum);
  };

  for (int sweep = 0; sweep < 100 && off_norm() > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    out.vectors.set_col(k, v.col(order[k]));
  }
  return out;
}

double sym_eig_max(const Matrix& s) {
  if (s.rows() == 1 && s.cols() == 1) return s(0, 0);
  const auto e = sym_eig(s);
  return e.values[e.values.size() - 1];
}

double sym_eig_min(const Matrix& s) {
  if (s.rows() == 1 && s.cols() == 1) return s(0, 0);
  return sym_eig(s).values[0];
}

// ---------------------------------------------------------------- expm

Matrix mat_exp(const Matrix& a, double t) {
  require_square(a, "mat_exp");
  require_finite(a, "mat_exp input");
  if (!std::isfinite(t)) throw Error(ErrorCode::kNonFinite, "mat_exp time");
  const std::size_t n = a.rows();
  Matrix at = a * t;
  const double norm = at.norm_inf();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  at *= std::ldexp(1.0, -squarings);

  constexpr int kOrder = 6;
  const Matrix eye = Matrix::identity(n);
  Matrix x = at;
  double c = 0.5;
  Matrix num = eye + c * at;
  Matrix den = eye - c * at;
  bool positive = true;
  for (int k = 2; k <= kOrder; ++k) {
    c = c * (kOrder - k + 1) / (k * (2 * kOrder - k + 1));
    x = at * x;
    num += c * x;
    if (positive) {
      den += c * x;
    } else {
      den -= c * x;
    }
    positive = !positive;
  }
  Matrix f = solve_linear(den, num);
  for (int k = 0; k < squarings; ++k) f = f * f;
  return f;
}

Matrix convolution_gain_quadrature(const Matrix& a, const Matrix& b, double t,
                                   std::size_t intervals) {
  require_square(a, "convolution_gain");
  if (b.rows() != a.rows()) throw Error(ErrorCode::kDimensionMismatch, "convolution_gain");
  if (t == 0.0) return Matrix(b.rows(), b.cols());
  std::size_t n = std::max<std::size_t>(intervals, 256);
  if (n % 2 != 0) ++n;
  const double h = t / static_cast<double>(n);
  const Matrix step = mat_exp(a, h);
  // Simpson nodes τ_i = i h; the integrand e^{A(t−τ_i)} B is generated from
  // the τ = t end, where it equals B.
  Matrix term = b;
  Matrix sum = b;  // i = n, weight 1
  for (std::size_t i = n; i-- > 0;) {
    term = step * term;
    const double w = (i == 0) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * term;
  }
  return sum * (h / 3.0);
}

Matrix convolution_gain(const Matrix& a, const Matrix& b, double t) {
  require_square(a, "convolution_gain");
  if (b.rows() != a.rows()) throw Error(ErrorCode::kDimensionMismatch, "convolution_gain");
  if (t == 0.0) return Matrix(b.rows(), b.cols());
  try {
    const LuDecomposition lu(a);
    Matrix phi = mat_exp(a, t);
    phi -= Matrix::identity(a.rows());
    return lu.solve(phi * b);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSingularMatrix) throw;
  }
  const double scale = std::max(1.0, a.norm_inf() * std::abs(t));
  return convolution_gain_quadrature(a, b, t,
                                     static_cast<std::size_t>(std::ceil(64.0 * scale)));
}

// ---------------------------------------------------------------- Riccati

Matrix solve_lyapunov(const Matrix& a, const Matrix& c) {
  require_square(a, "solve_lyapunov");
  require_same_shape(a, c, "solve_lyapunov");
  const std::size_t n = a.rows();
  const std::size_t nn = n * n;
  Matrix big(nn, nn);
  Vector rhs(nn);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t row = i * n + j;
      rhs[row] = -c(i, j);
      for (std::size_t k = 0; k < n; ++k) {
        big(row, k * n + j) += a(k, i);
        big(row, i * n + k) += a(k, j);
      }
    }
  }
  const Vector x = solve_linear(big, rhs);
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = x[i * n + j];
  return out;
}

double care_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                     const Matrix& p) {
  const Matrix g = b * solve_linear(r, b.transpose());
  const Matrix res = a.transpose() * p + p * a - p * g * p + q;
  return res.norm_fro();
}

Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  require_square(a, "solve_care A");
  require_square(q, "solve_care Q");
  require_square(r, "solve_care R");
  const std::size_t n = a.rows();
  if (b.rows() != n || q.rows() != n || r.rows() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "solve_care");
  }
  for (const Matrix* m : {&a, &b, &q, &r}) require_finite(*m, "solve_care input");

  const Matrix g = b * solve_linear(r, b.transpose());
  Matrix z(2 * n, 2 * n);
  z.set_block(0, 0, a);
  z.set_block(0, n, -g);
  z.set_block(n, 0, -q);
  z.set_block(n, n, -a.transpose());

  const double dim = static_cast<double>(2 * n);
  bool converged = false;
  int polish = -1;
  for (int iter = 0; iter < 100; ++iter) {
    const LuDecomposition lu(z);
    // Determinant scaling shortens the initial phase; the last two sweeps are
    // unscaled so quadratic convergence finishes the job.
    const double c = polish >= 0 ? 1.0 : std::exp(-lu.log_abs_determinant() / dim);
    Matrix next = 0.5 * (c * z + (1.0 / c) * lu.solve(Matrix::identity(2 * n)));
    const double change = (next - z).norm_fro();
    z = std::move(next);
    if (polish >= 0 && ++polish == 2) {
      converged = true;
      break;
    }
    if (polish < 0 && change <= 1e-9 * z.norm_fro()) polish = 0;
  }
  if (!converged) throw Error(ErrorCode::kNoConvergence, "sign iteration did not converge");

  // Stable invariant subspace [I; P] satisfies (Z + I)[I; P] = 0.
  Matrix lhs(2 * n, n);
  Matrix rhs(2 * n, n);
  lhs.set_block(0, 0, z.block(0, n, n, n));
  lhs.set_block(n, 0, z.block(n, n, n, n) + Matrix::identity(n));
  rhs.set_block(0, 0, -(z.block(0, 0, n, n) + Matrix::identity(n)));
  rhs.set_block(n, 0, -z.block(n, 0, n, n));
  Matrix p;
  try {
    p = least_squares(lhs, rhs).symmetric_part();
  } catch (const Error& e) {
    throw Error(ErrorCode::kNotStabilizable, e.what());
  }

  // A few Newton-Kleinman corrections polish the residual.
  const double tol = 1e-8 * std::max(q.norm_fro(), 1e-300);
  double res = care_residual(a, b, q, r, p);
  if (n <= 20) {
    const Matrix r_inv_bt = solve_linear(r, b.transpose());
    for (int k = 0; k < 4 && res > 1e-3 * tol; ++k) {
      const Matrix gain = r_inv_bt * p;
      const Matrix closed = a - b * gain;
      Matrix candidate;
      try {
        candidate = solve_lyapunov(closed, q + gain.transpose() * r * gain).symmetric_part();
      } catch (const Error&) {
        break;
      }
      const double cand_res = care_residual(a, b, q, r, candidate);
      if (!(cand_res < res)) break;
      p = std::move(candidate);
      res = cand_res;
    }
  }
  if (!(res <= tol)) {
    throw Error(ErrorCode::kNotStabilizable, "CARE residual " + std::to_string(res));
  }
  return p;
}

}  // namespace refgov
