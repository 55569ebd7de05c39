// SPDX-License-Identifier: Apache-2.0
//
// Central-difference gradients. Used as the independent oracle for every
// analytic gradient in the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "colap/numerics.hpp"

namespace colap {

inline constexpr double kFiniteDiffEps = 1e-5;

template <typename Scalar, typename Fn>
VectorX<Scalar> finite_diff_grad(Fn&& f, const VectorX<Scalar>& params,
                                 Scalar eps = Scalar(kFiniteDiffEps)) {
  require(eps > Scalar(0), ErrorCode::InvalidConfig, "finite_diff_grad: eps must be positive");
  VectorX<Scalar> grad(params.size());
  VectorX<Scalar> probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + eps;
    const Scalar up = f(static_cast<const VectorX<Scalar>&>(probe));
    probe[i] = params[i] - eps;
    const Scalar down = f(static_cast<const VectorX<Scalar>&>(probe));
    probe[i] = params[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error(ErrorCode::NonFiniteEvaluation,
                  "finite_diff_grad: non-finite value at coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (Scalar(2) * eps);
  }
  return grad;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error_small = 0.0;  // over coordinates with magnitude below the floor
  Eigen::Index worst_index = -1;
  bool passed = true;
};

/// Per-coordinate comparison: relative error where either side exceeds
/// `abs_floor` in magnitude, absolute error otherwise.
inline GradCheckResult compare_gradients(const Vector& analytic, const Vector& numeric,
                                         double rel_tol = 1e-4, double abs_floor = 1e-8) {
  require(analytic.size() == numeric.size(), ErrorCode::DimensionMismatch,
          "compare_gradients: size mismatch");
  GradCheckResult r;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    const double mag = std::max(std::abs(a), std::abs(n));
    const double diff = std::abs(a - n);
    if (mag < abs_floor) {
      r.max_abs_error_small = std::max(r.max_abs_error_small, diff);
      if (diff >= abs_floor) r.passed = false;
    } else {
      const double rel = diff / mag;
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst_index = i;
      }
      if (rel >= rel_tol) r.passed = false;
    }
  }
  return r;
}

}  // namespace colap
