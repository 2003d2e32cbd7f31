#include "hwstyle/nn/adam.hpp"

#include <cmath>

#include "hwstyle/error.hpp"

namespace hwstyle::nn {

Adam::Adam(const ParameterStore& params, AdamConfig cfg)
    : cfg_(cfg), m_(zeros_like(params)), v_(zeros_like(params)) {
  if (!(cfg.lr > 0.0)) throw InvalidArgument("Adam: lr must be positive");
}

void Adam::step(ParameterStore& params, const Gradients& grads) {
  if (grads.size() != params.size() || m_.size() != params.size()) {
    throw InvalidArgument("Adam: parameter/gradient count mismatch");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].value;
    const auto& g = grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols() || m_[i].rows() != p.rows() || m_[i].cols() != p.cols()) {
      throw InvalidArgument("Adam: shape mismatch for " + params[i].name);
    }
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    p.array() -= cfg_.lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps);
  }
}

}  // namespace hwstyle::nn
