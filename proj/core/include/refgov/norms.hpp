#pragma once

#include <cstddef>

#include "refgov/linalg.hpp"

namespace refgov {

enum class NormKind { kL1, kL2, kLinf, kWeightedP };

/// A vector norm family together with everything needed to evaluate its
/// induced operator norm, logarithmic norm and the support function of its
/// closed unit ball.
///
/// For kWeightedP the norm is ‖x‖_P = √(xᵀPx). P^{1/2}, P^{-1/2} and P^{-1}
/// are computed once at construction from a Jacobi eigendecomposition.
class NormSpec {
 public:
  static NormSpec l1() { return NormSpec(NormKind::kL1); }
  static NormSpec l2() { return NormSpec(NormKind::kL2); }
  static NormSpec linf() { return NormSpec(NormKind::kLinf); }
  /// Throws InvalidArgument unless P is symmetric positive definite.
  static NormSpec weighted(const Matrix& p);

  NormKind kind() const noexcept { return kind_; }
  bool is_weighted() const noexcept { return kind_ == NormKind::kWeightedP; }
  /// State dimension fixed by the weight; 0 for unweighted families.
  std::size_t dimension() const noexcept { return weight_.rows(); }

  const Matrix& weight() const noexcept { return weight_; }
  const Matrix& sqrt_weight() const noexcept { return sqrt_weight_; }
  const Matrix& inv_sqrt_weight() const noexcept { return inv_sqrt_weight_; }
  const Matrix& inv_weight() const noexcept { return inv_weight_; }

  /// Norm applied to command vectors (δv). Same family for ℓ1/ℓ2/ℓ∞, plain ℓ2
  /// for a weighted state norm.
  NormSpec command_norm() const;

 private:
  explicit NormSpec(NormKind kind) : kind_(kind) {}

  NormKind kind_;
  Matrix weight_;
  Matrix sqrt_weight_;
  Matrix inv_sqrt_weight_;
  Matrix inv_weight_;
};

const char* to_string(NormKind kind);

double vec_norm(const Vector& x, const NormSpec& spec);

/// Induced operator norm. Rectangular matrices are allowed: for kWeightedP a
/// side whose dimension differs from the weight is measured in plain ℓ2.
double op_norm(const Matrix& f, const NormSpec& spec);

/// μ(F) = lim_{h→0⁺} (‖I + hF‖ − 1)/h, in closed form for each family.
double log_norm(const Matrix& f, const NormSpec& spec);

/// Support function of the closed unit ball, sup_{‖x‖≤1} aᵀx (the dual norm).
double dual_support(const Vector& a, const NormSpec& spec);

/// Row-wise support values H_B(M): component i is dual_support(M_i·).
Vector support_rows(const Matrix& m, const NormSpec& spec);

}  // namespace refgov
