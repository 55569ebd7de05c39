// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

#include "colap/numerics.hpp"

namespace colap {

struct OptimHyper {
  double learning_rate = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;

  void validate() const {
    require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorCode::InvalidConfig,
            "learning_rate must be finite and non-negative");
    require(beta1 > 0.0 && beta1 < 1.0, ErrorCode::InvalidConfig, "beta1 must lie in (0,1)");
    require(beta2 > 0.0 && beta2 < 1.0, ErrorCode::InvalidConfig, "beta2 must lie in (0,1)");
    require(epsilon > 0.0, ErrorCode::InvalidConfig, "epsilon must be positive");
    require(weight_decay >= 0.0, ErrorCode::InvalidConfig, "weight_decay must be non-negative");
  }
};

template <typename Scalar>
struct BasicOptimState {
  VectorX<Scalar> first_moment;
  VectorX<Scalar> second_moment;
  std::int64_t step_count = 0;

  static BasicOptimState zeros(Eigen::Index size) {
    return {VectorX<Scalar>::Zero(size), VectorX<Scalar>::Zero(size), 0};
  }
};

using OptimState = BasicOptimState<double>;

template <typename Scalar>
struct AdamwResult {
  VectorX<Scalar> params;
  BasicOptimState<Scalar> state;
};

/// One AdamW step with decoupled weight decay and bias correction. The decay
/// is applied to the pre-update parameters, as in torch.optim.AdamW.
template <typename Scalar>
AdamwResult<Scalar> adamw_step(const VectorX<Scalar>& params, const VectorX<Scalar>& grads,
                               const BasicOptimState<Scalar>& state, const OptimHyper& hyper) {
  require(params.size() == grads.size(), ErrorCode::DimensionMismatch,
          "adamw_step: params and grads differ in size");
  require(state.first_moment.size() == params.size() && state.second_moment.size() == params.size(),
          ErrorCode::DimensionMismatch, "adamw_step: optimizer state does not match params");
  require(state.step_count >= 0, ErrorCode::InvalidConfig, "adamw_step: negative step count");

  AdamwResult<Scalar> out;
  out.state.step_count = state.step_count + 1;
  const auto t = static_cast<Scalar>(out.state.step_count);
  const Scalar b1 = static_cast<Scalar>(hyper.beta1);
  const Scalar b2 = static_cast<Scalar>(hyper.beta2);
  const Scalar lr = static_cast<Scalar>(hyper.learning_rate);

  out.state.first_moment = b1 * state.first_moment + (Scalar(1) - b1) * grads;
  out.state.second_moment =
      b2 * state.second_moment + (Scalar(1) - b2) * grads.cwiseProduct(grads);

  const Scalar bias1 = Scalar(1) - std::pow(b1, t);
  const Scalar bias2 = Scalar(1) - std::pow(b2, t);
  const auto m_hat = (out.state.first_moment / bias1).array();
  const auto v_hat = (out.state.second_moment / bias2).array();

  out.params = params * (Scalar(1) - lr * static_cast<Scalar>(hyper.weight_decay));
  out.params.array() -= lr * m_hat / (v_hat.sqrt() + static_cast<Scalar>(hyper.epsilon));
  return out;
}

}  // namespace colap
