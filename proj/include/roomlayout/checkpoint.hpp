#pragma once

// Checkpoint container:
//
//   bytes 0-7    magic "RLAYCKPT"
//   uint32       format version (1)
//   uint32       bytes per scalar (4)
//   uint64       header length L
//   L bytes      JSON header: model config, seed, step, optimiser settings,
//                tensor index [{name, group, rows, cols}]
//   payload      tensors in index order, column-major little-endian floats
//
// Groups are "param", "adam_m" and "adam_v". Round trips are bit-exact.

#include <cstdint>
#include <optional>
#include <string>

#include "roomlayout/config.hpp"
#include "roomlayout/optim.hpp"

namespace roomlayout {

struct Checkpoint {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  Params<float> params;
  std::optional<AdamConfig> adam_config;
  std::int64_t adam_steps = 0;
  std::vector<nn::Mat<float>> adam_m, adam_v;
  Json extra = Json::object();
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace roomlayout
