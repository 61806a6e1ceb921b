#pragma once

// Dual-branch boundary regression network:
//
//   image -> shared 4-scale conv backbone
//         -> per-branch height compression (three strided convs per scale,
//            flattened and resampled to the branch feature width)
//         -> [perspective: zero-padded to the panorama width]
//         -> window / global / shifted-window transformer
//         -> per-column linear head -> (ceiling, floor) latitudes

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "roomlayout/image.hpp"
#include "roomlayout/layout_repr.hpp"
#include "roomlayout/nn.hpp"

namespace roomlayout {

enum class Branch { kPano, kPerspective };

std::string to_string(Branch b);
Branch branch_from_string(const std::string& s);

struct StageSpec {
  int channels = 16;
  int stride = 2;  // power of two; realised as log2(stride) stride-2 convs
  int convs = 2;
};

struct SwgConfig {
  int repeats = 2;
  int window = 16;
  int heads = 4;
  int head_dim = 16;
  int ffn_hidden = 128;

  int blocks() const { return 4 * repeats; }
};

struct ModelConfig {
  int input_height = 512;
  int pano_width = 1024;
  int pp_width = 256;
  std::vector<StageSpec> backbone;
  std::vector<int> compress_strides{4, 2, 2};
  std::vector<int> compress_channels;  // output channels per scale
  int compress_kernel_width = 3;
  int merged_channels = 1024;
  int pano_feature_width = 256;
  int pp_feature_width = 64;
  SwgConfig swg;
  bool circular_backbone = true;    // circular horizontal padding in the pano backbone
  bool center_pp_features = true;   // otherwise left-aligned when zero-padding

  /// 512 x 1024 input, 1024 merged channels, ResNet-50 channel widths.
  static ModelConfig full();
  /// 128 x 256 input, 64 merged channels, 16/32/64/128 backbone.
  static ModelConfig toy();
  /// Smallest config used for finite-difference checks (C = 16, width 16).
  static ModelConfig tiny();

  /// Throws ConfigError on any inconsistency.
  void validate() const;

  int input_width(Branch b) const { return b == Branch::kPano ? pano_width : pp_width; }
  int feature_width(Branch b) const { return b == Branch::kPano ? pano_feature_width : pp_feature_width; }
  /// Cumulative stride of backbone stage s (4, 8, 16, 32).
  int scale_stride(int s) const;
  int compress_out_height(int s) const;
  /// First panorama column occupied by perspective features after padding.
  int pp_offset() const;
  int attention_width() const { return swg.heads * swg.head_dim; }
};

/// Named learnable arrays. Names follow "<module>.<index>.<kind>".
template <class T>
class Params {
 public:
  int add(const std::string& name, int rows, int cols);
  int index(const std::string& name) const;
  bool contains(const std::string& name) const { return lookup_.count(name) != 0; }
  const std::string& name(int i) const { return names_[i]; }
  int size() const { return static_cast<int>(values_.size()); }
  std::size_t scalar_count() const;

  nn::Mat<T>& operator[](int i) { return values_[i]; }
  const nn::Mat<T>& operator[](int i) const { return values_[i]; }
  std::vector<nn::Mat<T>>& values() { return values_; }
  const std::vector<nn::Mat<T>>& values() const { return values_; }
  const std::vector<std::string>& names() const { return names_; }

  std::vector<nn::Mat<T>> zeros_like() const;

  template <class U>
  Params<U> cast() const {
    Params<U> out;
    for (int i = 0; i < size(); ++i) {
      const int j = out.add(names_[i], static_cast<int>(values_[i].rows()), static_cast<int>(values_[i].cols()));
      out[j] = values_[i].template cast<U>();
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<nn::Mat<T>> values_;
  std::map<std::string, int> lookup_;
};

/// Per-column boundary latitudes (radians) over the panorama feature width.
struct Prediction {
  std::vector<double> ceiling;
  std::vector<double> floor;
};

/// Wraps a prediction as an all-valid boundary pair.
BoundaryPair as_boundaries(const Prediction& p);

enum class BlockKind { kWindow, kGlobal, kShiftedWindow };

template <class T>
class Model {
 public:
  using Mat = nn::Mat<T>;
  using FeatureMap = nn::FeatureMap<T>;
  using ScaleMaps = std::array<FeatureMap, 4>;

  struct BackboneTape {
    std::vector<nn::ConvCache<T>> convs;
  };
  struct CompressTape {
    struct Scale {
      std::array<nn::ConvCache<T>, 3> convs;
      int width = 0;
    };
    std::array<Scale, 4> scales;
  };
  struct BlockTape {
    nn::LayerNormCache<T> ln1, ln2;
    nn::AttentionCache<T> attn;
    Mat ln2_out, fc1_pre, fc1_act;
  };
  struct SwgTape {
    std::vector<BlockTape> blocks;
    nn::LayerNormCache<T> final_norm;
  };
  struct HeadTape {
    Mat x;
    Mat z;
  };
  struct Tape {
    Branch branch = Branch::kPano;
    BackboneTape backbone;
    CompressTape compress;
    SwgTape swg;
    HeadTape head;
  };

  Model(ModelConfig config, std::uint64_t seed);
  Model(ModelConfig config, Params<T> params);

  const ModelConfig& config() const { return config_; }
  Params<T>& params() { return params_; }
  const Params<T>& params() const { return params_; }

  /// Full forward pass for one item. The input must match the branch's
  /// input size; perspective outputs are meaningful on
  /// [pp_offset(), pp_offset() + pp_feature_width) only.
  Prediction forward(const Image& input, Branch branch, Tape* tape = nullptr) const;

  /// Accumulates d(loss)/d(params) into `grads` given the loss gradient
  /// with respect to the predicted latitudes.
  void backward(const Tape& tape, std::span<const double> d_ceiling,
                std::span<const double> d_floor, std::vector<Mat>& grads) const;

  // Stage-level entry points.
  ScaleMaps backbone_forward(const Image& input, Branch branch, BackboneTape* tape = nullptr) const;
  /// Three strided height convolutions of one scale (with circular or zero
  /// column extension before each), before flattening.
  FeatureMap compress_scale(const FeatureMap& scale_map, int scale, Branch branch,
                            typename CompressTape::Scale* tape = nullptr) const;
  /// C x feature_width(branch) merged map.
  Mat branch_compress(const ScaleMaps& maps, Branch branch, CompressTape* tape = nullptr) const;
  /// Positional embedding, blocks, final normalisation. C x N in and out.
  Mat swg_transformer(const Mat& features, SwgTape* tape = nullptr) const;
  /// One transformer block applied to a C x N sequence.
  Mat swg_block(const Mat& x, int block, BlockTape* tape = nullptr) const;
  Prediction head_predict(const Mat& features, HeadTape* tape = nullptr) const;

  BlockKind block_kind(int block) const { return block_kinds_[block]; }
  const nn::TokenGroups& block_groups(int block) const;

 private:
  struct ConvRef {
    nn::ConvGeometry geom;
    int weight = -1;
    int bias = -1;
  };
  struct BlockRef {
    int ln1_g, ln1_b, ln2_g, ln2_b;
    nn::AttentionWeights attn;
    int fc1_w, fc1_b, fc2_w, fc2_b;
  };

  void build(std::uint64_t seed, bool init);
  Image check_input(const Image& input, Branch branch) const;

  ModelConfig config_;
  Params<T> params_;
  std::vector<std::vector<ConvRef>> backbone_[2];    // [branch][stage][conv] (geometry differs in padding)
  std::array<std::array<ConvRef, 3>, 4> compress_[2];
  int pos_embed_ = -1;
  std::vector<BlockRef> blocks_;
  std::vector<BlockKind> block_kinds_;
  int final_g_ = -1, final_b_ = -1;
  int head_w_ = -1, head_b_ = -1;
  nn::TokenGroups window_groups_, shifted_groups_, global_groups_;
  std::array<Mat, 4> upsample_[2];
};

extern template class Params<float>;
extern template class Params<double>;
extern template class Model<float>;
extern template class Model<double>;

/// Zero-pads each perspective map (C x w_pp) to the panorama width and
/// appends it after the panorama maps. Column masks mark real content.
template <class T>
struct PaddedBatch {
  std::vector<nn::Mat<T>> features;
  std::vector<std::vector<std::uint8_t>> column_valid;
};

template <class T>
PaddedBatch<T> zero_pad_and_concat(const std::vector<nn::Mat<T>>& pano,
                                   const std::vector<nn::Mat<T>>& pp, int pano_width,
                                   bool centered = true) {
  PaddedBatch<T> out;
  int channels = -1;
  for (const auto& m : pano) {
    if (channels >= 0 && m.rows() != channels) throw DataError("zero_pad_and_concat: channel mismatch");
    channels = static_cast<int>(m.rows());
    if (m.cols() != pano_width) throw DataError("zero_pad_and_concat: panorama width mismatch");
    out.features.push_back(m);
    out.column_valid.emplace_back(pano_width, 1);
  }
  for (const auto& m : pp) {
    if (channels >= 0 && m.rows() != channels) throw DataError("zero_pad_and_concat: channel mismatch");
    channels = static_cast<int>(m.rows());
    const int w = static_cast<int>(m.cols());
    if (w > pano_width) throw DataError("zero_pad_and_concat: perspective map wider than panorama");
    const int offset = centered ? (pano_width - w) / 2 : 0;
    nn::Mat<T> padded = nn::Mat<T>::Zero(m.rows(), pano_width);
    padded.middleCols(offset, w) = m;
    std::vector<std::uint8_t> valid(pano_width, 0);
    std::fill(valid.begin() + offset, valid.begin() + offset + w, std::uint8_t{1});
    out.features.push_back(std::move(padded));
    out.column_valid.push_back(std::move(valid));
  }
  return out;
}

/// Analytic operation and activation counts of the feature extractor.
struct FlopsReport {
  Branch branch = Branch::kPano;
  double backbone_flops = 0;  // 2 FLOPs per multiply-accumulate
  double conv1d_flops = 0;
  double backbone_mem = 0;    // bytes of float32 activations
  double conv1d_mem = 0;
};

FlopsReport count_flops(const ModelConfig& config, Branch branch);

}  // namespace roomlayout
