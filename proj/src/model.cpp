#include "roomlayout/model.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

int log2_exact(int v) {
  if (v <= 0 || (v & (v - 1)) != 0) return -1;
  return std::countr_zero(static_cast<unsigned>(v));
}

int stage_conv_count(const StageSpec& s) { return std::max(s.convs, log2_exact(s.stride)); }

int compress_mid_channels(const ModelConfig& c, int s) {
  return std::max(c.compress_channels[s], c.backbone[s].channels / 2);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::string to_string(Branch b) { return b == Branch::kPano ? "pano" : "pp"; }

Branch branch_from_string(const std::string& s) {
  if (s == "pano") return Branch::kPano;
  if (s == "pp") return Branch::kPerspective;
  throw DataError("unknown domain: " + s);
}

BoundaryPair as_boundaries(const Prediction& p) {
  return {ColumnBoundary(BoundaryKind::kCeiling, p.ceiling), ColumnBoundary(BoundaryKind::kFloor, p.floor)};
}

// ---------------------------------------------------------------------------
// ModelConfig

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.input_height = 512;
  c.pano_width = 1024;
  c.pp_width = 256;
  c.backbone = {{256, 4, 2}, {512, 2, 2}, {1024, 2, 2}, {2048, 2, 2}};
  c.compress_strides = {4, 2, 2};
  c.compress_channels = {32, 64, 128, 256};
  c.merged_channels = 1024;
  c.pano_feature_width = 256;
  c.pp_feature_width = 64;
  c.swg = {2, 16, 8, 64, 2048};
  return c;
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.input_height = 128;
  c.pano_width = 256;
  c.pp_width = 64;
  c.backbone = {{16, 4, 2}, {32, 2, 2}, {64, 2, 2}, {128, 2, 2}};
  c.compress_strides = {2, 2, 1};
  c.compress_channels = {2, 4, 8, 16};
  c.merged_channels = 64;
  c.pano_feature_width = 256;
  c.pp_feature_width = 64;
  c.swg = {2, 16, 4, 16, 128};
  return c;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.input_height = 32;
  c.pano_width = 128;
  c.pp_width = 32;
  c.backbone = {{4, 4, 2}, {6, 2, 1}, {6, 2, 1}, {8, 2, 1}};
  c.compress_strides = {1, 1, 1};
  c.compress_channels = {1, 1, 1, 2};
  c.merged_channels = 16;
  c.pano_feature_width = 16;
  c.pp_feature_width = 4;
  c.swg = {1, 4, 2, 4, 16};
  return c;
}

int ModelConfig::scale_stride(int s) const {
  int acc = 1;
  for (int i = 0; i <= s; ++i) acc *= backbone[i].stride;
  return acc;
}

int ModelConfig::compress_out_height(int s) const {
  int p = 1;
  for (int v : compress_strides) p *= v;
  return input_height / scale_stride(s) / p;
}

int ModelConfig::pp_offset() const {
  return center_pp_features ? (pano_feature_width - pp_feature_width) / 2 : 0;
}

void ModelConfig::validate() const {
  const auto fail = [](const std::string& m) { throw ConfigError("ModelConfig: " + m); };
  if (input_height <= 0 || pano_width <= 0 || pp_width <= 0) fail("input sizes must be positive");
  if (input_height % 32 || pano_width % 32 || pp_width % 32) fail("input sizes must be divisible by 32");
  if (backbone.size() != 4) fail("backbone needs exactly 4 stages");
  const int expected[4] = {4, 8, 16, 32};
  for (int s = 0; s < 4; ++s) {
    if (backbone[s].channels <= 0) fail("backbone channels must be positive");
    if (log2_exact(backbone[s].stride) < 0) fail("stage stride must be a power of two");
    if (scale_stride(s) != expected[s]) fail("backbone must produce scales 1/4, 1/8, 1/16, 1/32");
  }
  if (compress_strides.size() != 3) fail("height compression needs 3 strides");
  int p = 1;
  for (int v : compress_strides) {
    if (v <= 0) fail("compression strides must be positive");
    p *= v;
  }
  if (compress_channels.size() != 4) fail("compress_channels needs 4 entries");
  int merged = 0;
  for (int s = 0; s < 4; ++s) {
    const int h = input_height / scale_stride(s);
    if (h % p != 0) fail("scale height not divisible by the compression stride product");
    if (compress_channels[s] <= 0) fail("compress channels must be positive");
    merged += compress_channels[s] * (h / p);
  }
  if (merged != merged_channels) fail("compress_channels x heights must sum to merged_channels");
  if (compress_kernel_width != 1 && compress_kernel_width != 3) fail("compress kernel width must be 1 or 3");
  if (pano_feature_width <= 0 || pp_feature_width <= 0 || pp_feature_width > pano_feature_width)
    fail("invalid feature widths");
  if (static_cast<long long>(pano_feature_width) * pp_width !=
      static_cast<long long>(pp_feature_width) * pano_width)
    fail("feature width ratio must equal input width ratio");
  if (swg.repeats < 0 || swg.heads <= 0 || swg.head_dim <= 0 || swg.ffn_hidden <= 0)
    fail("invalid transformer sizes");
  if (swg.window < 2 || swg.window % 2 || pano_feature_width % swg.window)
    fail("window size must be even and divide the feature width");
}

// ---------------------------------------------------------------------------
// Params

template <class T>
int Params<T>::add(const std::string& name, int rows, int cols) {
  if (lookup_.count(name)) throw ConfigError("duplicate parameter " + name);
  lookup_[name] = size();
  names_.push_back(name);
  values_.push_back(nn::Mat<T>::Zero(rows, cols));
  return size() - 1;
}

template <class T>
int Params<T>::index(const std::string& name) const {
  const auto it = lookup_.find(name);
  if (it == lookup_.end()) throw DataError("unknown parameter " + name);
  return it->second;
}

template <class T>
std::size_t Params<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

template <class T>
std::vector<nn::Mat<T>> Params<T>::zeros_like() const {
  std::vector<nn::Mat<T>> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(nn::Mat<T>::Zero(v.rows(), v.cols()));
  return out;
}

// ---------------------------------------------------------------------------
// Model construction

template <class T>
Model<T>::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  build(seed, true);
}

template <class T>
Model<T>::Model(ModelConfig config, Params<T> params) : config_(std::move(config)) {
  config_.validate();
  build(0, false);
  if (params.size() != params_.size()) throw DataError("parameter count does not match config");
  for (int i = 0; i < params_.size(); ++i) {
    const int j = params.index(params_.name(i));
    if (params[j].rows() != params_[i].rows() || params[j].cols() != params_[i].cols())
      throw DataError("parameter shape mismatch for " + params_.name(i));
    params_[i] = params[j];
  }
}

template <class T>
void Model<T>::build(std::uint64_t seed, bool init) {
  std::mt19937_64 rng(seed);
  const auto uniform = [&](Mat& m, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>(dist(rng));
  };
  const auto add_conv = [&](const std::string& prefix, const nn::ConvGeometry& g) {
    ConvRef ref{g, params_.add(prefix + ".weight", g.out_c, g.patch()), params_.add(prefix + ".bias", g.out_c, 1)};
    if (init) uniform(params_[ref.weight], std::sqrt(6.0 / g.patch()));
    return ref;
  };
  const auto add_linear = [&](const std::string& prefix, int out, int in, int& w, int& b) {
    w = params_.add(prefix + ".weight", out, in);
    b = params_.add(prefix + ".bias", out, 1);
    if (init) uniform(params_[w], std::sqrt(6.0 / (in + out)));
  };

  // Shared backbone; the panorama branch may use circular horizontal padding.
  const int pano = 0, pp = 1;
  int in_c = 3;
  for (int s = 0; s < 4; ++s) {
    const StageSpec& st = config_.backbone[s];
    const int strided = log2_exact(st.stride);
    backbone_[pano].emplace_back();
    backbone_[pp].emplace_back();
    for (int j = 0; j < stage_conv_count(st); ++j) {
      nn::ConvGeometry g;
      g.in_c = in_c;
      g.out_c = st.channels;
      g.kh = g.kw = 3;
      g.sh = g.sw = j < strided ? 2 : 1;
      g.ph = g.pw = 1;
      g.pad_w = nn::PadMode::kZero;
      ConvRef ref = add_conv("backbone." + std::to_string(s) + "." + std::to_string(j), g);
      backbone_[pp].back().push_back(ref);
      ref.geom.pad_w = config_.circular_backbone ? nn::PadMode::kCircular : nn::PadMode::kZero;
      backbone_[pano].back().push_back(ref);
      in_c = st.channels;
    }
  }

  // Per-branch height compression.
  for (int b = 0; b < 2; ++b) {
    const std::string bname = b == pano ? "pano" : "pp";
    for (int s = 0; s < 4; ++s) {
      const int mid = compress_mid_channels(config_, s);
      int c = config_.backbone[s].channels;
      for (int j = 0; j < 3; ++j) {
        nn::ConvGeometry g;
        g.in_c = c;
        g.out_c = j == 2 ? config_.compress_channels[s] : mid;
        g.kh = g.sh = config_.compress_strides[j];
        g.kw = config_.compress_kernel_width;
        g.sw = 1;
        g.ph = g.pw = 0;
        compress_[b][s][j] = add_conv("compress." + bname + "." + std::to_string(s) + "." + std::to_string(j), g);
        c = g.out_c;
      }
      const Branch br = b == pano ? Branch::kPano : Branch::kPerspective;
      const int w_s = config_.input_width(br) / config_.scale_stride(s);
      upsample_[b][s] = nn::width_interpolation<T>(w_s, config_.feature_width(br), b == pano);
    }
  }

  // Transformer.
  const int C = config_.merged_channels;
  const int N = config_.pano_feature_width;
  const int inner = config_.attention_width();
  pos_embed_ = params_.add("swg.pos_embed", C, N);
  if (init) uniform(params_[pos_embed_], 0.02);
  for (int blk = 0; blk < config_.swg.blocks(); ++blk) {
    const std::string p = "swg." + std::to_string(blk);
    BlockRef r{};
    r.ln1_g = params_.add(p + ".norm1.gamma", C, 1);
    r.ln1_b = params_.add(p + ".norm1.beta", C, 1);
    if (init) params_[r.ln1_g].setOnes();
    add_linear(p + ".attn.q", inner, C, r.attn.q_w, r.attn.q_b);
    add_linear(p + ".attn.k", inner, C, r.attn.k_w, r.attn.k_b);
    add_linear(p + ".attn.v", inner, C, r.attn.v_w, r.attn.v_b);
    add_linear(p + ".attn.o", C, inner, r.attn.o_w, r.attn.o_b);
    r.ln2_g = params_.add(p + ".norm2.gamma", C, 1);
    r.ln2_b = params_.add(p + ".norm2.beta", C, 1);
    if (init) params_[r.ln2_g].setOnes();
    add_linear(p + ".ffn.fc1", config_.swg.ffn_hidden, C, r.fc1_w, r.fc1_b);
    add_linear(p + ".ffn.fc2", C, config_.swg.ffn_hidden, r.fc2_w, r.fc2_b);
    blocks_.push_back(r);
    static constexpr BlockKind kOrder[4] = {BlockKind::kWindow, BlockKind::kGlobal,
                                            BlockKind::kShiftedWindow, BlockKind::kGlobal};
    block_kinds_.push_back(kOrder[blk % 4]);
  }
  final_g_ = params_.add("swg.final_norm.gamma", C, 1);
  final_b_ = params_.add("swg.final_norm.beta", C, 1);
  if (init) params_[final_g_].setOnes();
  head_w_ = params_.add("head.weight", 2, C);
  head_b_ = params_.add("head.bias", 2, 1);
  if (init) uniform(params_[head_w_], 0.01);

  window_groups_ = nn::window_groups(N, config_.swg.window, 0);
  shifted_groups_ = nn::window_groups(N, config_.swg.window, config_.swg.window / 2);
  global_groups_ = nn::global_group(N);
}

template <class T>
const nn::TokenGroups& Model<T>::block_groups(int block) const {
  switch (block_kinds_[block]) {
    case BlockKind::kWindow: return window_groups_;
    case BlockKind::kShiftedWindow: return shifted_groups_;
    default: return global_groups_;
  }
}

// ---------------------------------------------------------------------------
// Forward

template <class T>
Image Model<T>::check_input(const Image& input, Branch branch) const {
  if (input.height != config_.input_height || input.width != config_.input_width(branch) || input.channels != 3)
    throw DataError("model input has shape " + std::to_string(input.height) + "x" + std::to_string(input.width) +
                    ", expected " + std::to_string(config_.input_height) + "x" +
                    std::to_string(config_.input_width(branch)));
  return input;
}

template <class T>
typename Model<T>::ScaleMaps Model<T>::backbone_forward(const Image& input, Branch branch, BackboneTape* tape) const {
  check_input(input, branch);
  FeatureMap x(3, input.height, input.width);
  for (int y = 0; y < input.height; ++y)
    for (int xx = 0; xx < input.width; ++xx)
      for (int c = 0; c < 3; ++c) x.at(c, y, xx) = static_cast<T>(input.at(y, xx, c) - 0.5f);

  const auto& convs = backbone_[branch == Branch::kPano ? 0 : 1];
  ScaleMaps maps;
  if (tape) tape->convs.clear();
  for (int s = 0; s < 4; ++s) {
    for (const ConvRef& ref : convs[s]) {
      nn::ConvCache<T>* cache = nullptr;
      if (tape) cache = &tape->convs.emplace_back();
      x = nn::conv_forward(ref.geom, params_[ref.weight], params_[ref.bias], x, true, cache);
    }
    maps[s] = x;
  }
  return maps;
}

template <class T>
typename Model<T>::FeatureMap Model<T>::compress_scale(const FeatureMap& scale_map, int scale, Branch branch,
                                                       typename CompressTape::Scale* tape) const {
  const int b = branch == Branch::kPano ? 0 : 1;
  FeatureMap x = scale_map;
  if (tape) tape->width = scale_map.width;
  for (int j = 0; j < 3; ++j) {
    const ConvRef& ref = compress_[b][scale][j];
    if (ref.geom.kw == 3) x = branch == Branch::kPano ? nn::circular_extend(x) : nn::zero_extend(x);
    x = nn::conv_forward(ref.geom, params_[ref.weight], params_[ref.bias], x, true, tape ? &tape->convs[j] : nullptr);
  }
  return x;
}

template <class T>
typename Model<T>::Mat Model<T>::branch_compress(const ScaleMaps& maps, Branch branch, CompressTape* tape) const {
  const int b = branch == Branch::kPano ? 0 : 1;
  Mat merged(config_.merged_channels, config_.feature_width(branch));
  int row = 0;
  for (int s = 0; s < 4; ++s) {
    const FeatureMap y = compress_scale(maps[s], s, branch, tape ? &tape->scales[s] : nullptr);
    Mat flat(y.channels * y.height, y.width);
    for (int c = 0; c < y.channels; ++c)
      for (int h = 0; h < y.height; ++h) flat.row(c * y.height + h) = y.data.row(c).segment(h * y.width, y.width);
    merged.middleRows(row, flat.rows()).noalias() = flat * upsample_[b][s];
    row += static_cast<int>(flat.rows());
  }
  if (row != config_.merged_channels) throw DataError("branch_compress: merged channel count mismatch");
  return merged;
}

template <class T>
typename Model<T>::Mat Model<T>::swg_block(const Mat& x, int block, BlockTape* tape) const {
  const BlockRef& r = blocks_[block];
  const nn::TokenGroups& groups = block_groups(block);
  const Mat h1 = nn::layer_norm_forward<T>(x, params_[r.ln1_g], params_[r.ln1_b], tape ? &tape->ln1 : nullptr);
  Mat x1 = x + nn::attention_forward<T>(params_.values(), r.attn, h1, groups, config_.swg.heads,
                                        config_.swg.head_dim, tape ? &tape->attn : nullptr);
  Mat h2 = nn::layer_norm_forward<T>(x1, params_[r.ln2_g], params_[r.ln2_b], tape ? &tape->ln2 : nullptr);
  Mat pre = (params_[r.fc1_w] * h2).colwise() + params_[r.fc1_b].col(0);
  Mat act = pre.unaryExpr([](T v) { return nn::gelu(v); });
  x1.noalias() += params_[r.fc2_w] * act;
  x1.colwise() += params_[r.fc2_b].col(0);
  if (tape) {
    tape->ln2_out = std::move(h2);
    tape->fc1_pre = std::move(pre);
    tape->fc1_act = std::move(act);
  }
  return x1;
}

template <class T>
typename Model<T>::Mat Model<T>::swg_transformer(const Mat& features, SwgTape* tape) const {
  if (features.rows() != config_.merged_channels || features.cols() != config_.pano_feature_width)
    throw DataError("swg_transformer: feature shape mismatch");
  Mat x = features + params_[pos_embed_];
  if (tape) tape->blocks.assign(blocks_.size(), BlockTape{});
  for (int b = 0; b < static_cast<int>(blocks_.size()); ++b) x = swg_block(x, b, tape ? &tape->blocks[b] : nullptr);
  return nn::layer_norm_forward<T>(x, params_[final_g_], params_[final_b_], tape ? &tape->final_norm : nullptr);
}

template <class T>
Prediction Model<T>::head_predict(const Mat& features, HeadTape* tape) const {
  Mat z = (params_[head_w_] * features).colwise() + params_[head_b_].col(0);
  Prediction out;
  const int n = static_cast<int>(z.cols());
  out.ceiling.resize(n);
  out.floor.resize(n);
  for (int i = 0; i < n; ++i) {
    out.ceiling[i] = kHalfPi * sigmoid(static_cast<double>(z(0, i)));
    out.floor[i] = -kHalfPi * sigmoid(static_cast<double>(z(1, i)));
  }
  if (tape) {
    tape->x = features;
    tape->z = std::move(z);
  }
  return out;
}

template <class T>
Prediction Model<T>::forward(const Image& input, Branch branch, Tape* tape) const {
  if (tape) tape->branch = branch;
  const ScaleMaps maps = backbone_forward(input, branch, tape ? &tape->backbone : nullptr);
  Mat merged = branch_compress(maps, branch, tape ? &tape->compress : nullptr);
  if (branch == Branch::kPerspective) {
    Mat padded = Mat::Zero(config_.merged_channels, config_.pano_feature_width);
    padded.middleCols(config_.pp_offset(), config_.pp_feature_width) = merged;
    merged = std::move(padded);
  }
  const Mat feats = swg_transformer(merged, tape ? &tape->swg : nullptr);
  return head_predict(feats, tape ? &tape->head : nullptr);
}

// ---------------------------------------------------------------------------
// Backward

template <class T>
void Model<T>::backward(const Tape& tape, std::span<const double> d_ceiling, std::span<const double> d_floor,
                        std::vector<Mat>& g) const {
  const int N = config_.pano_feature_width;
  if (static_cast<int>(d_ceiling.size()) != N || static_cast<int>(d_floor.size()) != N)
    throw DataError("backward: gradient length mismatch");
  const auto& p = params_.values();

  // Head.
  Mat dz(2, N);
  for (int i = 0; i < N; ++i) {
    const double s0 = sigmoid(static_cast<double>(tape.head.z(0, i)));
    const double s1 = sigmoid(static_cast<double>(tape.head.z(1, i)));
    dz(0, i) = static_cast<T>(d_ceiling[i] * kHalfPi * s0 * (1 - s0));
    dz(1, i) = static_cast<T>(-d_floor[i] * kHalfPi * s1 * (1 - s1));
  }
  g[head_w_].noalias() += dz * tape.head.x.transpose();
  g[head_b_].col(0) += dz.rowwise().sum();
  Mat dx = p[head_w_].transpose() * dz;

  // Transformer.
  dx = nn::layer_norm_backward<T>(dx, p[final_g_], tape.swg.final_norm, g[final_g_], g[final_b_]);
  for (int b = static_cast<int>(blocks_.size()) - 1; b >= 0; --b) {
    const BlockRef& r = blocks_[b];
    const BlockTape& bt = tape.swg.blocks[b];
    // Feed-forward residual.
    g[r.fc2_w].noalias() += dx * bt.fc1_act.transpose();
    g[r.fc2_b].col(0) += dx.rowwise().sum();
    Mat dact = p[r.fc2_w].transpose() * dx;
    dact.array() *= bt.fc1_pre.unaryExpr([](T v) { return nn::gelu_grad(v); }).array();
    g[r.fc1_w].noalias() += dact * bt.ln2_out.transpose();
    g[r.fc1_b].col(0) += dact.rowwise().sum();
    const Mat dh2 = p[r.fc1_w].transpose() * dact;
    dx += nn::layer_norm_backward<T>(dh2, p[r.ln2_g], bt.ln2, g[r.ln2_g], g[r.ln2_b]);
    // Attention residual.
    const Mat dh1 = nn::attention_backward<T>(p, g, r.attn, bt.attn, block_groups(b), config_.swg.heads,
                                              config_.swg.head_dim, dx);
    dx += nn::layer_norm_backward<T>(dh1, p[r.ln1_g], bt.ln1, g[r.ln1_g], g[r.ln1_b]);
  }
  g[pos_embed_] += dx;

  const Branch branch = tape.branch;
  const int bi = branch == Branch::kPano ? 0 : 1;
  Mat dmerged = branch == Branch::kPano ? dx : Mat(dx.middleCols(config_.pp_offset(), config_.pp_feature_width));

  // Height compression.
  std::array<FeatureMap, 4> dscale;
  int row = 0;
  for (int s = 0; s < 4; ++s) {
    const auto& st = tape.compress.scales[s];
    const int h_out = config_.compress_out_height(s);
    const int c_out = config_.compress_channels[s];
    const int w_s = st.width;
    const Mat dflat = dmerged.middleRows(row, c_out * h_out) * upsample_[bi][s].transpose();
    row += c_out * h_out;
    FeatureMap dy(c_out, h_out, w_s);
    for (int c = 0; c < c_out; ++c)
      for (int h = 0; h < h_out; ++h) dy.data.row(c).segment(h * w_s, w_s) = dflat.row(c * h_out + h);
    for (int j = 2; j >= 0; --j) {
      const ConvRef& ref = compress_[bi][s][j];
      FeatureMap din;
      nn::conv_backward<T>(ref.geom, p[ref.weight], st.convs[j], dy.data, g[ref.weight], g[ref.bias], &din);
      if (ref.geom.kw == 3)
        dy = nn::extend_backward(din, branch == Branch::kPano ? nn::PadMode::kCircular : nn::PadMode::kZero);
      else
        dy = std::move(din);
    }
    dscale[s] = std::move(dy);
  }

  // Backbone.
  const auto& convs = backbone_[bi];
  int ci = static_cast<int>(tape.backbone.convs.size());
  FeatureMap carry;
  for (int s = 3; s >= 0; --s) {
    FeatureMap d = dscale[s];
    if (s < 3) d.data += carry.data;
    for (int j = static_cast<int>(convs[s].size()) - 1; j >= 0; --j) {
      --ci;
      const ConvRef& ref = convs[s][j];
      const bool first = s == 0 && j == 0;
      FeatureMap din;
      nn::conv_backward<T>(ref.geom, p[ref.weight], tape.backbone.convs[ci], d.data, g[ref.weight], g[ref.bias],
                           first ? nullptr : &din);
      if (!first) d = std::move(din);
    }
    carry = std::move(d);
  }
}

template class Params<float>;
template class Params<double>;
template class Model<float>;
template class Model<double>;

// ---------------------------------------------------------------------------
// FLOPs

FlopsReport count_flops(const ModelConfig& config, Branch branch) {
  FlopsReport r;
  r.branch = branch;
  double h = config.input_height;
  double w = config.input_width(branch);
  double c = 3;
  const std::size_t stages = std::min<std::size_t>(config.backbone.size(), 4);
  std::vector<std::array<double, 3>> scale_shapes;  // channels, height, width
  for (std::size_t s = 0; s < stages; ++s) {
    const StageSpec& st = config.backbone[s];
    const int strided = std::max(0, log2_exact(st.stride));
    for (int j = 0; j < stage_conv_count(st); ++j) {
      const int stride = j < strided ? 2 : 1;
      const double oh = std::floor((h + 2 - 3) / stride) + 1;
      const double ow = std::floor((w + 2 - 3) / stride) + 1;
      const double outputs = st.channels * oh * ow;
      r.backbone_flops += 2.0 * outputs * c * 9;
      r.backbone_mem += 4.0 * outputs;
      h = oh;
      w = ow;
      c = st.channels;
    }
    scale_shapes.push_back({c, h, w});
  }
  if (config.compress_strides.size() == 3 && config.compress_channels.size() == scale_shapes.size()) {
    for (std::size_t s = 0; s < scale_shapes.size(); ++s) {
      double cc = scale_shapes[s][0], hh = scale_shapes[s][1];
      const double ww = scale_shapes[s][2];
      const double mid = std::max<double>(config.compress_channels[s], config.backbone[s].channels / 2);
      for (int j = 0; j < 3; ++j) {
        const int k = config.compress_strides[j];
        const double out_c = j == 2 ? config.compress_channels[s] : mid;
        const double oh = std::floor(hh / k);
        const double outputs = out_c * oh * ww;
        r.conv1d_flops += 2.0 * outputs * cc * k * config.compress_kernel_width;
        r.conv1d_mem += 4.0 * outputs;
        cc = out_c;
        hh = oh;
      }
    }
  }
  return r;
}

}  // namespace roomlayout
