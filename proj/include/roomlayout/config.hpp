#pragma once

// JSON (de)serialisation of configuration structs. Unknown keys are
// rejected so typos surface as ConfigError.

#include <json.hpp>

#include "roomlayout/losses.hpp"
#include "roomlayout/model.hpp"

namespace roomlayout {

using Json = nlohmann::json;

Json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const Json& j);

Json to_json(const LossWeights& w);
LossWeights loss_weights_from_json(const Json& j);

/// "full", "toy" or "tiny".
ModelConfig model_preset(const std::string& name);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace roomlayout
