#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roomlayout/checkpoint.hpp"
#include "roomlayout/dataset.hpp"
#include "roomlayout/losses.hpp"

namespace roomlayout {

enum class DomainMix { kJoint, kPano, kPerspective };

std::string to_string(DomainMix d);
DomainMix domain_mix_from_string(const std::string& s);

struct TrainConfig {
  ModelConfig model = ModelConfig::toy();
  AdamConfig adam;
  int batch_size = 16;
  int epochs = 1000;
  std::optional<int> steps;             // overrides epochs when set
  std::optional<double> pano_fraction;  // default: proportional to dataset sizes
  std::uint64_t seed = 0;
  LossWeights weights;
  AugmentToggles augment;
  bool vertical_shift = true;
  DomainMix domains = DomainMix::kJoint;
  int checkpoint_every = 0;  // 0: final checkpoint only
  double cam_height = 1.6;
  std::string split = "train";

  void validate() const;
};

Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);

struct StepLog {
  std::int64_t step = 0;
  LossBreakdown loss;
  std::vector<std::string> ids;
};

Json to_json(const StepLog& s);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<StepLog> log;
};

/// Runs the optimisation. When `out_dir` is non-empty, writes log.jsonl,
/// periodic checkpoint_<step>.bin and the final checkpoint.bin there.
/// Throws NumericError (after writing nan_dump.json) on a non-finite loss.
TrainResult train(const Manifest& manifest, const TrainConfig& config, const std::string& out_dir = {},
                  const std::function<void(const StepLog&)>& on_step = {});

/// Loss and parameter gradients of one batch (sum of the per-domain means).
LossBreakdown batch_loss(const Model<float>& model, const std::vector<BatchItem>& batch, const LossWeights& weights,
                         double cam_height, std::vector<nn::Mat<float>>* grads);

}  // namespace roomlayout
