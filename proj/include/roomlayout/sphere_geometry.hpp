#pragma once

// Equirectangular coordinate conventions and pinhole <-> equirectangular
// projection.
//
// Conventions used throughout the library:
//   * longitude 0 looks forward (+z), increasing to the right (+x);
//   * latitude +pi/2 is the zenith (+y);
//   * u = (lon / 2pi + 0.5) W and v = (0.5 - lat / pi) H, so pixel i spans
//     [i, i + 1) and its centre sits at i + 0.5;
//   * pinhole pixel coordinates are continuous with the principal point at
//     (width / 2, height / 2) and y growing downwards.

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "roomlayout/image.hpp"

namespace roomlayout {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into [-pi, pi).
double wrap_longitude(double lon);

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;

  LonLat() = default;
  /// Wraps `lon`; throws DataError when |lat| > pi/2.
  LonLat(double lon_rad, double lat_rad);
};

struct UV {
  double u = 0.0;
  double v = 0.0;
};

struct EquirectSpec {
  int width = 1024;
  int height = 512;

  /// Throws ConfigError unless width == 2 * height > 0.
  void validate() const;
};

struct PinholeSpec {
  double hfov_deg = 90.0;
  int width = 512;
  int height = 512;

  void validate() const;
  double focal() const;  // pixels
  double vfov() const;   // radians, square pixels
};

enum class ShiftMode { kTranslate, kRotate };

/// Half-open column interval [lo, hi).
struct ColumnSpan {
  int lo = 0;
  int hi = 0;
  int width() const { return hi - lo; }
  bool empty() const { return hi <= lo; }
  bool operator==(const ColumnSpan&) const = default;
};

/// A (possibly cropped) equirectangular image with its informative mask.
///
/// `col_offset` and `full_width` locate the stored columns on the complete
/// equirectangular grid, so a cropped patch can be placed back. The mask is
/// false outside `span` (local column indices).
struct EquirectPatch {
  Image pixels;
  std::vector<std::uint8_t> mask;  // height * width, row-major
  ColumnSpan span;
  int full_width = 0;
  int col_offset = 0;
  double pitch = 0.0;     // radians
  double hfov_deg = 360;  // 360 for panoramas

  int height() const { return pixels.height; }
  int width() const { return pixels.width; }
  bool masked(int y, int x) const {
    return mask[static_cast<std::size_t>(y) * pixels.width + x] != 0;
  }
  std::size_t mask_count() const;
};

/// Full panorama patch: all-true mask, span [0, W).
EquirectPatch make_panorama_patch(Image pixels);

UV equirect_uv_from_lonlat(const LonLat& p, const EquirectSpec& spec);
/// Throws DataError when uv lies outside [0, W) x [0, H].
LonLat lonlat_from_equirect_uv(const UV& uv, const EquirectSpec& spec);

/// Longitude of the centre of column `col` on a `width`-column grid.
double column_longitude(double col, int width);
/// Latitude of the centre of row `row` on a `height`-row grid.
double row_latitude(double row, int height);

Eigen::Vector3d direction_from_lonlat(const LonLat& p);
LonLat lonlat_from_direction(const Eigen::Vector3d& dir);

/// Unit ray through a continuous pinhole pixel coordinate (camera frame).
Eigen::Vector3d ray_from_pinhole_pixel(const UV& uv, const PinholeSpec& pinhole);

/// Rotation tilting the camera up by `pitch` about its x axis; maps camera
/// rays to world rays.
Eigen::Matrix3d pitch_rotation(double pitch);

/// Maps a perspective image onto the equirectangular grid.
///
/// kTranslate projects at zero pitch and then shifts rows by `pitch`;
/// kRotate applies the true extrinsic rotation. Sampling is bilinear.
EquirectPatch project_perspective_to_equirect(const Image& img,
                                              const PinholeSpec& pinhole,
                                              double pitch,
                                              const EquirectSpec& spec,
                                              ShiftMode mode = ShiftMode::kTranslate);

/// Inverse sampling of project_perspective_to_equirect. Accepts full-width
/// or cropped patches.
Image reproject_equirect_to_perspective(const EquirectPatch& patch,
                                        const PinholeSpec& pinhole,
                                        double pitch,
                                        ShiftMode mode = ShiftMode::kTranslate);

/// Moves content by `delta_lat` in latitude (negative moves it down). Rows
/// leaving the grid are dropped and marked invalid. Whole-row shifts are
/// exact copies; fractional shifts interpolate linearly between rows.
EquirectPatch vertical_shift_rows(const EquirectPatch& patch, double delta_lat);

/// Columns covered by a horizontal field of view centred on lon 0.
ColumnSpan informative_span(double hfov_deg, const EquirectSpec& spec);
ColumnSpan informative_span(const PinholeSpec& pinhole, const EquirectSpec& spec);

/// Crops to an arbitrary column window (local indices, must lie inside the
/// patch). The span is intersected with the window.
EquirectPatch crop_columns(const EquirectPatch& patch, const ColumnSpan& window);
/// Crops to the informative span, keeping the full height.
EquirectPatch crop_to_span(const EquirectPatch& patch);
/// Places a cropped patch back on its full grid, zero-filling the rest.
EquirectPatch uncrop(const EquirectPatch& patch);

/// Bilinear sample of an equirectangular image at continuous (u, v):
/// circular horizontally, clamped vertically.
void sample_equirect(const Image& img, double u, double v, float* out);

}  // namespace roomlayout
