#include "roomlayout/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace fs = std::filesystem;

std::string to_string(DomainMix d) {
  switch (d) {
    case DomainMix::kPano: return "pano";
    case DomainMix::kPerspective: return "pp";
    default: return "joint";
  }
}

DomainMix domain_mix_from_string(const std::string& s) {
  if (s == "joint") return DomainMix::kJoint;
  if (s == "pano") return DomainMix::kPano;
  if (s == "pp") return DomainMix::kPerspective;
  throw ConfigError("unknown domain mix: " + s);
}

void TrainConfig::validate() const {
  model.validate();
  weights.validate();
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0 || (steps && *steps < 0)) throw ConfigError("epochs/steps must be >= 0");
  if (pano_fraction && !(*pano_fraction >= 0 && *pano_fraction <= 1)) throw ConfigError("pano_fraction must lie in [0, 1]");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (!(cam_height > 0)) throw ConfigError("cam_height must be positive");
  if (!(adam.lr >= 0 && adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1 && adam.eps > 0))
    throw ConfigError("invalid Adam hyper-parameters");
}

Json to_json(const TrainConfig& c) {
  Json j = {{"model", to_json(c.model)},
            {"lr", c.adam.lr},
            {"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"eps", c.adam.eps},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"seed", c.seed},
            {"loss_weights", to_json(c.weights)},
            {"augment",
             {{"flip", c.augment.flip},
              {"rotate", c.augment.rotate},
              {"luminance", c.augment.luminance},
              {"stretch", c.augment.stretch}}},
            {"vertical_shift", c.vertical_shift},
            {"domains", to_string(c.domains)},
            {"checkpoint_every", c.checkpoint_every},
            {"cam_height", c.cam_height},
            {"split", c.split}};
  if (c.steps) j["steps"] = *c.steps;
  if (c.pano_fraction) j["pano_fraction"] = *c.pano_fraction;
  return j;
}

TrainConfig train_config_from_json(const Json& j) {
  static const std::set<std::string> keys{"model", "lr", "beta1", "beta2", "eps", "batch_size", "epochs", "steps",
                                          "pano_fraction", "seed", "loss_weights", "augment", "vertical_shift",
                                          "domains", "checkpoint_every", "cam_height", "split"};
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) throw ConfigError("train config: unknown key '" + k + "'");
  TrainConfig c;
  try {
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
    c.adam.lr = j.value("lr", c.adam.lr);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.eps = j.value("eps", c.adam.eps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    if (j.contains("steps")) c.steps = j.at("steps").get<int>();
    if (j.contains("pano_fraction")) c.pano_fraction = j.at("pano_fraction").get<double>();
    c.seed = j.value("seed", c.seed);
    if (j.contains("loss_weights")) c.weights = loss_weights_from_json(j.at("loss_weights"));
    if (j.contains("augment")) {
      const Json& a = j.at("augment");
      if (a.is_boolean()) {
        const bool on = a.get<bool>();
        c.augment = {on, on, on, on};
      } else {
        for (const auto& [k, v] : a.items())
          if (k != "flip" && k != "rotate" && k != "luminance" && k != "stretch")
            throw ConfigError("augment: unknown key '" + k + "'");
        c.augment.flip = a.value("flip", c.augment.flip);
        c.augment.rotate = a.value("rotate", c.augment.rotate);
        c.augment.luminance = a.value("luminance", c.augment.luminance);
        c.augment.stretch = a.value("stretch", c.augment.stretch);
      }
    }
    c.vertical_shift = j.value("vertical_shift", c.vertical_shift);
    if (j.contains("domains")) c.domains = domain_mix_from_string(j.at("domains").get<std::string>());
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.cam_height = j.value("cam_height", c.cam_height);
    c.split = j.value("split", c.split);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const StepLog& s) {
  return {{"step", s.step},       {"l_b", s.loss.l_b},       {"l_d", s.loss.l_d},   {"l_n", s.loss.l_n},
          {"l_g", s.loss.l_g},    {"l_pano", s.loss.l_pano}, {"l_pp", s.loss.l_pp}, {"l_total", s.loss.l_total}};
}

LossBreakdown batch_loss(const Model<float>& model, const std::vector<BatchItem>& batch, const LossWeights& weights,
                         double cam_height, std::vector<nn::Mat<float>>* grads) {
  int n_pano = 0, n_pp = 0;
  for (const auto& it : batch) (it.domain == Branch::kPano ? n_pano : n_pp)++;
  const int n = model.config().pano_feature_width;
  std::vector<LossBreakdown> pano, pp;
  for (const auto& item : batch) {
    Model<float>::Tape tape;
    const Prediction pred = model.forward(item.input, item.domain, grads ? &tape : nullptr);
    BoundaryGrad g(n);
    if (item.domain == Branch::kPano) {
      pano.push_back(loss_pano(as_boundaries(pred), item.gt, weights, cam_height, grads ? &g : nullptr, 1.0 / n_pano));
    } else {
      pp.push_back(loss_pp(as_boundaries(pred), item.gt, item.mask, weights, grads ? &g : nullptr, 1.0 / n_pp));
    }
    if (grads) model.backward(tape, g.ceiling, g.floor, *grads);
  }
  return loss_total(pano, pp);
}

namespace {

/// Endless per-epoch shuffled pass over one domain's samples.
class Stream {
 public:
  Stream(std::vector<int> items, std::uint64_t seed, const std::string& tag)
      : items_(std::move(items)), seed_(seed), tag_(tag) {
    reshuffle();
  }
  bool empty() const { return items_.empty(); }
  /// Returns (sample index, epoch of this pass).
  std::pair<int, std::int64_t> next() {
    if (pos_ == order_.size()) {
      ++epoch_;
      reshuffle();
    }
    return {order_[pos_++], epoch_};
  }

 private:
  void reshuffle() {
    order_ = items_;
    std::mt19937_64 rng(sample_seed(seed_, tag_, epoch_));
    std::shuffle(order_.begin(), order_.end(), rng);
    pos_ = 0;
  }
  std::vector<int> items_, order_;
  std::size_t pos_ = 0;
  std::int64_t epoch_ = 0;
  std::uint64_t seed_;
  std::string tag_;
};

bool all_finite(const std::vector<nn::Mat<float>>& grads) {
  for (const auto& g : grads)
    if (!g.allFinite()) return false;
  return true;
}

}  // namespace

TrainResult train(const Manifest& manifest, const TrainConfig& config, const std::string& out_dir,
                  const std::function<void(const StepLog&)>& on_step) {
  config.validate();
  std::vector<Sample> samples;
  std::vector<int> pano_idx, pp_idx;
  for (const auto& r : manifest.split(config.split)) {
    if (r.domain == Branch::kPano && config.domains == DomainMix::kPerspective) continue;
    if (r.domain == Branch::kPerspective && config.domains == DomainMix::kPano) continue;
    (r.domain == Branch::kPano ? pano_idx : pp_idx).push_back(static_cast<int>(samples.size()));
    samples.push_back(load_sample(manifest, r));
  }
  if (samples.empty()) throw DataError("no training samples in split '" + config.split + "'");

  const int total = static_cast<int>(samples.size());
  const int per_epoch = (total + config.batch_size - 1) / config.batch_size;
  const std::int64_t steps = config.steps ? *config.steps : static_cast<std::int64_t>(config.epochs) * per_epoch;
  int n_pano_batch = 0;
  if (pp_idx.empty()) {
    n_pano_batch = config.batch_size;
  } else if (!pano_idx.empty()) {
    const double frac = config.pano_fraction.value_or(static_cast<double>(pano_idx.size()) / total);
    n_pano_batch = std::clamp(static_cast<int>(std::lround(config.batch_size * frac)), 0, config.batch_size);
  }
  Stream pano_stream(pano_idx, config.seed, "order:pano"), pp_stream(pp_idx, config.seed, "order:pp");

  Model<float> model(config.model, config.seed);
  Adam adam(config.adam, model.params());
  std::ofstream log_file;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log_file.open(fs::path(out_dir) / "log.jsonl");
  }

  const auto make_checkpoint = [&](std::int64_t step) {
    Checkpoint c;
    c.config = config.model;
    c.seed = config.seed;
    c.step = step;
    c.params = model.params();
    c.adam_config = adam.config();
    c.adam_steps = adam.steps();
    c.adam_m = adam.first_moment();
    c.adam_v = adam.second_moment();
    c.extra = {{"train", to_json(config)}};
    return c;
  };

  TrainResult result;
  for (std::int64_t step = 1; step <= steps; ++step) {
    std::vector<BatchItem> batch;
    const auto draw = [&](Stream& s) {
      const auto [i, epoch] = s.next();
      std::mt19937_64 rng(sample_seed(config.seed, samples[i].id, epoch));
      batch.push_back(prepare_item(augment(samples[i], config.augment, rng), config.model, config.vertical_shift));
    };
    for (int k = 0; k < config.batch_size; ++k) {
      const bool want_pano = k < n_pano_batch;
      draw(want_pano && !pano_stream.empty() ? pano_stream : (pp_stream.empty() ? pano_stream : pp_stream));
    }

    StepLog entry;
    entry.step = step;
    for (const auto& it : batch) entry.ids.push_back(it.id);
    auto grads = model.params().zeros_like();
    entry.loss = batch_loss(model, batch, config.weights, config.cam_height, &grads);
    if (!std::isfinite(entry.loss.l_total) || !all_finite(grads)) {
      std::string ids;
      for (const auto& id : entry.ids) ids += (ids.empty() ? "" : ", ") + id;
      if (!out_dir.empty()) {
        Json dump = to_json(entry);
        dump["ids"] = entry.ids;
        write_json_file((fs::path(out_dir) / "nan_dump.json").string(), dump);
      }
      throw NumericError("non-finite loss or gradient at step " + std::to_string(step) + " (batch: " + ids + ")");
    }
    adam.step(model.params(), grads);

    if (log_file.is_open()) log_file << to_json(entry).dump() << "\n";
    if (on_step) on_step(entry);
    result.log.push_back(std::move(entry));
    if (!out_dir.empty() && config.checkpoint_every > 0 && step % config.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%06lld.bin", static_cast<long long>(step));
      save_checkpoint((fs::path(out_dir) / name).string(), make_checkpoint(step));
    }
  }
  result.checkpoint = make_checkpoint(steps);
  if (!out_dir.empty()) save_checkpoint((fs::path(out_dir) / "checkpoint.bin").string(), result.checkpoint);
  return result;
}

}  // namespace roomlayout
