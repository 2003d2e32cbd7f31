#pragma once

#include "hwstyle/nn/tensor.hpp"

namespace hwstyle::nn {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam with a fixed learning rate.
class Adam {
 public:
  Adam(const ParameterStore& params, AdamConfig cfg = {});

  /// Throws InvalidArgument on shape mismatch between params, grads and
  /// the moment buffers.
  void step(ParameterStore& params, const Gradients& grads);

  long steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  const Gradients& first_moment() const { return m_; }
  const Gradients& second_moment() const { return v_; }

 private:
  AdamConfig cfg_;
  Gradients m_, v_;
  long step_ = 0;
};

}  // namespace hwstyle::nn
