#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cpf/types.hpp"

namespace cpf::ad {

struct AdamConfig {
  double lr = 0.01;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with decoupled weight decay: each step first shrinks a parameter by
/// lr * weight_decay * param, then applies the bias-corrected Adam update.
/// Moment buffers are created on the first step and sized after the params.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// params[i] is updated with grads[i]; the parameter list must keep the
  /// same order and shapes across calls.
  void step(std::span<Matrix* const> params, std::span<const Matrix> grads);

  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::int64_t t_ = 0;
};

}  // namespace cpf::ad
