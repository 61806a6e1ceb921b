#include "roomlayout/optim.hpp"

#include <cmath>

#include "roomlayout/errors.hpp"

namespace roomlayout {

Adam::Adam(AdamConfig cfg, const Params<float>& params)
    : cfg_(cfg), m_(params.zeros_like()), v_(params.zeros_like()) {
  if (!(cfg.lr >= 0 && cfg.beta1 >= 0 && cfg.beta1 < 1 && cfg.beta2 >= 0 && cfg.beta2 < 1 && cfg.eps > 0))
    throw ConfigError("invalid Adam hyper-parameters");
}

void Adam::step(Params<float>& params, const std::vector<nn::Mat<float>>& grads) {
  if (static_cast<int>(grads.size()) != params.size()) throw DataError("Adam: gradient count mismatch");
  ++t_;
  const float b1 = static_cast<float>(cfg_.beta1), b2 = static_cast<float>(cfg_.beta2);
  const float c1 = static_cast<float>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
  const float c2 = static_cast<float>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
  const float lr = static_cast<float>(cfg_.lr), eps = static_cast<float>(cfg_.eps);
  for (int i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1 - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1 - b2) * grads[i].cwiseProduct(grads[i]);
    params[i].array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
  }
}

}  // namespace roomlayout
