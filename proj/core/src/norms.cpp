#include "refgov/norms.hpp"

#include <algorithm>
#include <cmath>

#include "refgov/error.hpp"

namespace refgov {

namespace {

void check_weight_dim(const NormSpec& spec, std::size_t n, const char* op) {
  if (spec.is_weighted() && spec.dimension() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(op) + ": weight is " + std::to_string(spec.dimension()) +
                    "-dimensional, argument is " + std::to_string(n));
  }
}

double spectral_norm(const Matrix& g) {
  if (g.rows() == 0 || g.cols() == 0) return 0.0;
  const Matrix gram = g.cols() <= g.rows() ? g.transpose() * g : g * g.transpose();
  return std::sqrt(std::max(0.0, sym_eig_max(gram)));
}

}  // namespace

const char* to_string(NormKind kind) {
  switch (kind) {
    case NormKind::kL1: return "L1";
    case NormKind::kL2: return "L2";
    case NormKind::kLinf: return "Linf";
    case NormKind::kWeightedP: return "WeightedP";
  }
  return "?";
}

NormSpec NormSpec::weighted(const Matrix& p) {
  if (!p.is_square() || p.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "weight must be square");
  }
  require_finite(p, "norm weight");
  const double scale = std::max(1.0, p.max_abs());
  if ((p - p.transpose()).max_abs() > 1e-10 * scale) {
    throw Error(ErrorCode::kInvalidArgument, "weight is not symmetric");
  }
  const auto eig = sym_eig(p);
  if (!(eig.values[0] > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "weight is not positive definite");
  }
  const std::size_t n = p.rows();
  Vector root(n);
  Vector inv_root(n);
  Vector inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    root[i] = std::sqrt(eig.values[i]);
    inv_root[i] = 1.0 / root[i];
    inv[i] = 1.0 / eig.values[i];
  }
  const Matrix& v = eig.vectors;
  const Matrix vt = v.transpose();

  NormSpec spec(NormKind::kWeightedP);
  spec.weight_ = p.symmetric_part();
  spec.sqrt_weight_ = (v * Matrix::diagonal(root) * vt).symmetric_part();
  spec.inv_sqrt_weight_ = (v * Matrix::diagonal(inv_root) * vt).symmetric_part();
  spec.inv_weight_ = (v * Matrix::diagonal(inv) * vt).symmetric_part();
  if ((spec.sqrt_weight_ * spec.sqrt_weight_ - spec.weight_).max_abs() > 1e-8 * scale) {
    throw Error(ErrorCode::kInvalidArgument, "weight square root is inaccurate");
  }
  return spec;
}

NormSpec NormSpec::command_norm() const {
  return is_weighted() ? NormSpec::l2() : NormSpec(kind_);
}

double vec_norm(const Vector& x, const NormSpec& spec) {
  check_weight_dim(spec, x.size(), "vec_norm");
  switch (spec.kind()) {
    case NormKind::kL1: {
      double s = 0.0;
      for (double xi : x) s += std::abs(xi);
      return s;
    }
    case NormKind::kL2: return x.norm2();
    case NormKind::kLinf: return x.norm_inf();
    case NormKind::kWeightedP: return std::sqrt(std::max(0.0, dot(x, spec.weight() * x)));
  }
  return 0.0;
}

double op_norm(const Matrix& f, const NormSpec& spec) {
  switch (spec.kind()) {
    case NormKind::kL1: {
      double best = 0.0;
      for (std::size_t j = 0; j < f.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < f.rows(); ++i) s += std::abs(f(i, j));
        best = std::max(best, s);
      }
      return best;
    }
    case NormKind::kLinf: return f.norm_inf();
    case NormKind::kL2: return spectral_norm(f);
    case NormKind::kWeightedP: {
      const std::size_t n = spec.dimension();
      if (f.rows() != n && f.cols() != n) {
        throw Error(ErrorCode::kDimensionMismatch, "op_norm: no side matches the weight");
      }
      Matrix g = f;
      if (f.rows() == n) g = spec.sqrt_weight() * g;
      if (f.cols() == n) g = g * spec.inv_sqrt_weight();
      return spectral_norm(g);
    }
  }
  return 0.0;
}

double log_norm(const Matrix& f, const NormSpec& spec) {
  if (!f.is_square() || f.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "log_norm: square matrix required");
  }
  check_weight_dim(spec, f.rows(), "log_norm");
  const std::size_t n = f.rows();
  switch (spec.kind()) {
    case NormKind::kL1: {
      double best = -INFINITY;
      for (std::size_t j = 0; j < n; ++j) {
        double s = f(j, j);
        for (std::size_t i = 0; i < n; ++i)
          if (i != j) s += std::abs(f(i, j));
        best = std::max(best, s);
      }
      return best;
    }
    case NormKind::kLinf: {
      double best = -INFINITY;
      for (std::size_t i = 0; i < n; ++i) {
        double s = f(i, i);
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) s += std::abs(f(i, j));
        best = std::max(best, s);
      }
      return best;
    }
    case NormKind::kL2: return sym_eig_max(f.symmetric_part());
    case NormKind::kWeightedP: {
      const Matrix g = spec.sqrt_weight() * f * spec.inv_sqrt_weight();
      return sym_eig_max(g.symmetric_part());
    }
  }
  return 0.0;
}

double dual_support(const Vector& a, const NormSpec& spec) {
  check_weight_dim(spec, a.size(), "dual_support");
  switch (spec.kind()) {
    case NormKind::kL1: return a.norm_inf();
    case NormKind::kLinf: {
      double s = 0.0;
      for (double ai : a) s += std::abs(ai);
      return s;
    }
    case NormKind::kL2: return a.norm2();
    case NormKind::kWeightedP:
      return std::sqrt(std::max(0.0, dot(a, spec.inv_weight() * a)));
  }
  return 0.0;
}

Vector support_rows(const Matrix& m, const NormSpec& spec) {
  Vector h(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) h[i] = dual_support(m.row(i), spec);
  return h;
}

}  // namespace refgov
