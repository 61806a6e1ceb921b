#include "roomlayout/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace {

constexpr char kMagic[8] = {'R', 'L', 'A', 'Y', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class V>
void put(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V take(std::istream& in) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!in) throw DataError("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  Json index = Json::array();
  std::vector<const nn::Mat<float>*> blobs;
  const auto add = [&](const std::string& name, const char* group, const nn::Mat<float>& m) {
    index.push_back({{"name", name}, {"group", group}, {"rows", m.rows()}, {"cols", m.cols()}});
    blobs.push_back(&m);
  };
  for (int i = 0; i < ckpt.params.size(); ++i) add(ckpt.params.name(i), "param", ckpt.params[i]);
  const bool has_adam = ckpt.adam_config.has_value();
  if (has_adam) {
    if (ckpt.adam_m.size() != static_cast<std::size_t>(ckpt.params.size()) || ckpt.adam_v.size() != ckpt.adam_m.size())
      throw DataError("save_checkpoint: optimiser state does not match parameters");
    for (int i = 0; i < ckpt.params.size(); ++i) add(ckpt.params.name(i), "adam_m", ckpt.adam_m[i]);
    for (int i = 0; i < ckpt.params.size(); ++i) add(ckpt.params.name(i), "adam_v", ckpt.adam_v[i]);
  }
  Json header = {{"config", to_json(ckpt.config)},
                 {"seed", ckpt.seed},
                 {"step", ckpt.step},
                 {"tensors", index},
                 {"extra", ckpt.extra}};
  if (has_adam) {
    const AdamConfig& a = *ckpt.adam_config;
    header["adam"] = {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}, {"steps", ckpt.adam_steps}};
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, sizeof(float));
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* m : blobs)
    out.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(float)));
  if (!out) throw DataError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError(path + " is not a checkpoint");
  const auto version = take<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  if (take<std::uint32_t>(in) != sizeof(float)) throw DataError("unsupported checkpoint scalar size");
  const auto len = take<std::uint64_t>(in);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("checkpoint truncated");
  Json header;
  try {
    header = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.config = model_config_from_json(header.at("config"));
  ckpt.seed = header.at("seed").get<std::uint64_t>();
  ckpt.step = header.at("step").get<std::int64_t>();
  ckpt.extra = header.value("extra", Json::object());
  if (header.contains("adam")) {
    const Json& a = header["adam"];
    ckpt.adam_config = AdamConfig{a.at("lr").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                                  a.at("eps").get<double>()};
    ckpt.adam_steps = a.at("steps").get<std::int64_t>();
  }
  for (const Json& t : header.at("tensors")) {
    nn::Mat<float> m(t.at("rows").get<int>(), t.at("cols").get<int>());
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
    if (!in) throw DataError("checkpoint truncated");
    const std::string group = t.at("group").get<std::string>();
    if (group == "param") {
      const int i = ckpt.params.add(t.at("name").get<std::string>(), static_cast<int>(m.rows()), static_cast<int>(m.cols()));
      ckpt.params[i] = std::move(m);
    } else if (group == "adam_m") {
      ckpt.adam_m.push_back(std::move(m));
    } else if (group == "adam_v") {
      ckpt.adam_v.push_back(std::move(m));
    } else {
      throw DataError("unknown tensor group " + group);
    }
  }
  return ckpt;
}

}  // namespace roomlayout
