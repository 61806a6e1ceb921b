#pragma once

#include <cstddef>
#include <vector>

namespace roomlayout {

/// Interleaved H x W x C image with values in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c = 3, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  bool empty() const { return data.empty(); }

  float& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Bilinear resize using pixel-centre alignment; edges clamp.
Image resize_bilinear(const Image& src, int height, int width);

/// Mirrors columns: out(y, x) = in(y, W - 1 - x).
Image flip_columns(const Image& src);

/// Circular column rotation: out(y, x) = in(y, (x + shift) mod W).
Image roll_columns(const Image& src, int shift);

}  // namespace roomlayout
