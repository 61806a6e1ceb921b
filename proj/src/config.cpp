#include "roomlayout/config.hpp"

#include <fstream>
#include <set>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& keys, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) throw ConfigError(what + ": unknown key '" + k + "'");
}

template <class V>
void get_if(const Json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

Json to_json(const ModelConfig& c) {
  Json stages = Json::array();
  for (const auto& s : c.backbone) stages.push_back({{"channels", s.channels}, {"stride", s.stride}, {"convs", s.convs}});
  return {{"input_height", c.input_height},
          {"pano_width", c.pano_width},
          {"pp_width", c.pp_width},
          {"backbone", stages},
          {"compress_strides", c.compress_strides},
          {"compress_channels", c.compress_channels},
          {"compress_kernel_width", c.compress_kernel_width},
          {"merged_channels", c.merged_channels},
          {"pano_feature_width", c.pano_feature_width},
          {"pp_feature_width", c.pp_feature_width},
          {"swg",
           {{"repeats", c.swg.repeats},
            {"window", c.swg.window},
            {"heads", c.swg.heads},
            {"head_dim", c.swg.head_dim},
            {"ffn_hidden", c.swg.ffn_hidden}}},
          {"circular_backbone", c.circular_backbone},
          {"center_pp_features", c.center_pp_features}};
}

ModelConfig model_config_from_json(const Json& j) {
  if (j.is_string()) return model_preset(j.get<std::string>());
  reject_unknown(j,
                 {"preset", "input_height", "pano_width", "pp_width", "backbone", "compress_strides",
                  "compress_channels", "compress_kernel_width", "merged_channels", "pano_feature_width",
                  "pp_feature_width", "swg", "circular_backbone", "center_pp_features"},
                 "model config");
  ModelConfig c = j.contains("preset") ? model_preset(j.at("preset").get<std::string>()) : ModelConfig::toy();
  get_if(j, "input_height", c.input_height);
  get_if(j, "pano_width", c.pano_width);
  get_if(j, "pp_width", c.pp_width);
  if (j.contains("backbone")) {
    c.backbone.clear();
    for (const auto& s : j.at("backbone")) {
      reject_unknown(s, {"channels", "stride", "convs"}, "backbone stage");
      StageSpec st;
      get_if(s, "channels", st.channels);
      get_if(s, "stride", st.stride);
      get_if(s, "convs", st.convs);
      c.backbone.push_back(st);
    }
  }
  get_if(j, "compress_strides", c.compress_strides);
  get_if(j, "compress_channels", c.compress_channels);
  get_if(j, "compress_kernel_width", c.compress_kernel_width);
  get_if(j, "merged_channels", c.merged_channels);
  get_if(j, "pano_feature_width", c.pano_feature_width);
  get_if(j, "pp_feature_width", c.pp_feature_width);
  if (j.contains("swg")) {
    const Json& s = j.at("swg");
    reject_unknown(s, {"repeats", "window", "heads", "head_dim", "ffn_hidden"}, "swg config");
    get_if(s, "repeats", c.swg.repeats);
    get_if(s, "window", c.swg.window);
    get_if(s, "heads", c.swg.heads);
    get_if(s, "head_dim", c.swg.head_dim);
    get_if(s, "ffn_hidden", c.swg.ffn_hidden);
  }
  get_if(j, "circular_backbone", c.circular_backbone);
  get_if(j, "center_pp_features", c.center_pp_features);
  c.validate();
  return c;
}

Json to_json(const LossWeights& w) {
  return {{"lambda", w.lambda}, {"mu", w.mu}, {"gamma", w.gamma}, {"delta", w.delta}};
}

LossWeights loss_weights_from_json(const Json& j) {
  reject_unknown(j, {"lambda", "mu", "gamma", "delta"}, "loss weights");
  LossWeights w;
  get_if(j, "lambda", w.lambda);
  get_if(j, "mu", w.mu);
  get_if(j, "gamma", w.gamma);
  get_if(j, "delta", w.delta);
  w.validate();
  return w;
}

ModelConfig model_preset(const std::string& name) {
  if (name == "full") return ModelConfig::full();
  if (name == "toy") return ModelConfig::toy();
  if (name == "tiny") return ModelConfig::tiny();
  throw ConfigError("unknown model preset: " + name);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError("invalid JSON in " + path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace roomlayout
