#include "roomlayout/image.hpp"

#include <algorithm>
#include <cmath>

#include "roomlayout/errors.hpp"

namespace roomlayout {

Image resize_bilinear(const Image& src, int height, int width) {
  if (height <= 0 || width <= 0 || src.empty())
    throw DataError("resize_bilinear: empty source or target");
  if (height == src.height && width == src.width) return src;
  Image out(height, width, src.channels);
  const double sy = static_cast<double>(src.height) / height;
  const double sx = static_cast<double>(src.width) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double tx = fx - x0;
      for (int c = 0; c < src.channels; ++c) {
        const double top = (1 - tx) * src.at(y0, x0, c) + tx * src.at(y0, x1, c);
        const double bot = (1 - tx) * src.at(y1, x0, c) + tx * src.at(y1, x1, c);
        out.at(y, x, c) = static_cast<float>((1 - ty) * top + ty * bot);
      }
    }
  }
  return out;
}

Image flip_columns(const Image& src) {
  Image out(src.height, src.width, src.channels);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      for (int c = 0; c < src.channels; ++c)
        out.at(y, x, c) = src.at(y, src.width - 1 - x, c);
  return out;
}

Image roll_columns(const Image& src, int shift) {
  Image out(src.height, src.width, src.channels);
  const int w = src.width;
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < w; ++x) {
      const int sx = ((x + shift) % w + w) % w;
      for (int c = 0; c < src.channels; ++c) out.at(y, x, c) = src.at(y, sx, c);
    }
  return out;
}

}  // namespace roomlayout
