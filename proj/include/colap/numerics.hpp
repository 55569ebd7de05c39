// SPDX-License-Identifier: Apache-2.0
//
// Dense vector math shared by every other module. All functions are pure and
// accept arbitrary Eigen expressions.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "colap/error.hpp"

namespace colap {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

/// Norms below this are treated as degenerate by every cosine-based routine.
inline constexpr double kMinNorm = 1e-12;

template <typename DerivedU, typename DerivedV>
void check_same_dim(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "dimension " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
}

/// u.v / (|u| |v|). Throws ZeroNormVector when either norm is below kMinNorm.
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar cosine(const Eigen::MatrixBase<DerivedU>& u,
                                 const Eigen::MatrixBase<DerivedV>& v) {
  check_same_dim(u, v);
  const auto nu = u.norm();
  const auto nv = v.norm();
  if (!(nu >= kMinNorm) || !(nv >= kMinNorm)) {
    throw Error(ErrorCode::ZeroNormVector, "cosine of a vector with norm below 1e-12");
  }
  return u.dot(v) / (nu * nv);
}

/// Sum of cosines between r and each column of `set`; zero for an empty set.
template <typename DerivedR, typename DerivedS>
typename DerivedR::Scalar set_similarity(const Eigen::MatrixBase<DerivedR>& r,
                                         const Eigen::MatrixBase<DerivedS>& set) {
  typename DerivedR::Scalar total(0);
  for (Eigen::Index j = 0; j < set.cols(); ++j) total += cosine(r, set.col(j));
  return total;
}

template <typename DerivedR, typename Scalar>
Scalar set_similarity(const Eigen::MatrixBase<DerivedR>& r, const std::vector<VectorX<Scalar>>& set) {
  Scalar total(0);
  for (const auto& v : set) total += cosine(r, v);
  return total;
}

template <typename Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  if (logits.size() == 0) throw Error(ErrorCode::EmptyInput, "softmax of an empty vector");
  const auto shifted = (logits.array() - logits.maxCoeff()).exp().eval();
  return (shifted / shifted.sum()).matrix();
}

/// log(sum(exp(x))) with max subtraction.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) throw Error(ErrorCode::EmptyInput, "log-sum-exp of an empty vector");
  const auto m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x) {
  return x.allFinite();
}

}  // namespace colap
