#pragma once

#include <cstdint>
#include <vector>

#include "roomlayout/model.hpp"

namespace roomlayout {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment optimiser over a Params<float> set.
class Adam {
 public:
  Adam(AdamConfig cfg, const Params<float>& params);

  void step(Params<float>& params, const std::vector<nn::Mat<float>>& grads);

  const AdamConfig& config() const { return cfg_; }
  std::int64_t steps() const { return t_; }
  std::vector<nn::Mat<float>>& first_moment() { return m_; }
  std::vector<nn::Mat<float>>& second_moment() { return v_; }
  const std::vector<nn::Mat<float>>& first_moment() const { return m_; }
  const std::vector<nn::Mat<float>>& second_moment() const { return v_; }
  void set_steps(std::int64_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<nn::Mat<float>> m_, v_;
};

}  // namespace roomlayout
