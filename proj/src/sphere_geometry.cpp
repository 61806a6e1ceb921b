#include "roomlayout/sphere_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

// Bilinear sample of a pinhole image at a continuous coordinate (pixel
// centres at i + 0.5), clamped at the borders.
void sample_clamped(const Image& img, double x, double y, float* out) {
  const double fx = std::clamp(x - 0.5, 0.0, img.width - 1.0);
  const double fy = std::clamp(y - 0.5, 0.0, img.height - 1.0);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double tx = fx - x0;
  const double ty = fy - y0;
  for (int c = 0; c < img.channels; ++c) {
    const double top = (1 - tx) * img.at(y0, x0, c) + tx * img.at(y0, x1, c);
    const double bot = (1 - tx) * img.at(y1, x0, c) + tx * img.at(y1, x1, c);
    out[c] = static_cast<float>((1 - ty) * top + ty * bot);
  }
}

// Bilinear sample of a patch restricted to masked taps; weights are
// renormalised over the valid taps. Returns false when no tap is valid.
bool sample_patch_masked(const EquirectPatch& patch, double u_local, double v,
                         bool circular, float* out) {
  const Image& img = patch.pixels;
  const int w = img.width;
  const int h = img.height;
  const double fx = u_local - 0.5;
  const double fy = std::clamp(v - 0.5, 0.0, h - 1.0);
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(fy);
  const int y1 = std::min(y0 + 1, h - 1);
  const double tx = fx - x0;
  const double ty = fy - y0;
  const int xs[2] = {x0, x0 + 1};
  const int ys[2] = {y0, y1};
  const double wx[2] = {1 - tx, tx};
  const double wy[2] = {1 - ty, ty};
  double acc[4] = {0, 0, 0, 0};
  double wsum = 0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double wt = wy[a] * wx[b];
      if (wt == 0.0) continue;
      int x = xs[b];
      if (circular) {
        x = ((x % w) + w) % w;
      } else if (x < 0 || x >= w) {
        continue;
      }
      if (!patch.masked(ys[a], x)) continue;
      for (int c = 0; c < img.channels; ++c) acc[c] += wt * img.at(ys[a], x, c);
      wsum += wt;
    }
  }
  if (wsum <= 0) return false;
  for (int c = 0; c < img.channels; ++c) out[c] = static_cast<float>(acc[c] / wsum);
  return true;
}

bool is_whole(double x) { return std::abs(x - std::round(x)) < 1e-9; }

}  // namespace

double wrap_longitude(double lon) {
  double r = std::fmod(lon + kPi, kTwoPi);
  if (r < 0) r += kTwoPi;
  r -= kPi;
  return r >= kPi ? -kPi : r;
}

LonLat::LonLat(double lon_rad, double lat_rad) : lon(wrap_longitude(lon_rad)), lat(lat_rad) {
  if (!(std::abs(lat_rad) <= kPi / 2))
    throw DataError("LonLat: latitude outside [-pi/2, pi/2]: " + std::to_string(lat_rad));
}

void EquirectSpec::validate() const {
  if (width <= 0 || height <= 0 || width != 2 * height)
    throw ConfigError("EquirectSpec: width must equal 2 * height > 0");
}

void PinholeSpec::validate() const {
  if (!(hfov_deg > 0 && hfov_deg < 180))
    throw ConfigError("PinholeSpec: hfov must lie in (0, 180) degrees");
  if (width <= 0 || height <= 0) throw ConfigError("PinholeSpec: empty image");
}

double PinholeSpec::focal() const {
  return (width / 2.0) / std::tan(deg2rad(hfov_deg) / 2.0);
}

double PinholeSpec::vfov() const { return 2.0 * std::atan((height / 2.0) / focal()); }

std::size_t EquirectPatch::mask_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

EquirectPatch make_panorama_patch(Image pixels) {
  EquirectPatch p;
  p.full_width = pixels.width;
  p.span = {0, pixels.width};
  p.mask.assign(static_cast<std::size_t>(pixels.width) * pixels.height, 1);
  p.pixels = std::move(pixels);
  return p;
}

UV equirect_uv_from_lonlat(const LonLat& p, const EquirectSpec& spec) {
  double u = (p.lon / kTwoPi + 0.5) * spec.width;
  if (u >= spec.width) u -= spec.width;
  return {u, (0.5 - p.lat / kPi) * spec.height};
}

LonLat lonlat_from_equirect_uv(const UV& uv, const EquirectSpec& spec) {
  if (!(uv.u >= 0 && uv.u < spec.width && uv.v >= 0 && uv.v <= spec.height))
    throw DataError("lonlat_from_equirect_uv: coordinate outside the grid");
  return LonLat((uv.u / spec.width - 0.5) * kTwoPi, (0.5 - uv.v / spec.height) * kPi);
}

double column_longitude(double col, int width) { return ((col + 0.5) / width - 0.5) * kTwoPi; }

double row_latitude(double row, int height) { return (0.5 - (row + 0.5) / height) * kPi; }

Eigen::Vector3d direction_from_lonlat(const LonLat& p) {
  const double c = std::cos(p.lat);
  return {c * std::sin(p.lon), std::sin(p.lat), c * std::cos(p.lon)};
}

LonLat lonlat_from_direction(const Eigen::Vector3d& dir) {
  const double horiz = std::hypot(dir.x(), dir.z());
  return LonLat(std::atan2(dir.x(), dir.z()), std::atan2(dir.y(), horiz));
}

Eigen::Vector3d ray_from_pinhole_pixel(const UV& uv, const PinholeSpec& pinhole) {
  const double f = pinhole.focal();
  Eigen::Vector3d d((uv.u - pinhole.width / 2.0) / f, (pinhole.height / 2.0 - uv.v) / f, 1.0);
  return d.normalized();
}

Eigen::Matrix3d pitch_rotation(double pitch) {
  const double c = std::cos(pitch);
  const double s = std::sin(pitch);
  Eigen::Matrix3d r;
  r << 1, 0, 0,
       0, c, s,
       0, -s, c;
  return r;
}

EquirectPatch project_perspective_to_equirect(const Image& img, const PinholeSpec& pinhole,
                                              double pitch, const EquirectSpec& spec,
                                              ShiftMode mode) {
  spec.validate();
  pinhole.validate();
  if (img.width != pinhole.width || img.height != pinhole.height)
    throw DataError("project_perspective_to_equirect: image size does not match pinhole");
  if (mode == ShiftMode::kTranslate && std::abs(pitch) + pinhole.vfov() / 2 > kPi / 2 + 1e-9)
    throw DataError("project_perspective_to_equirect: pitch too large for translate mode");

  const double f = pinhole.focal();
  const double cam_pitch = mode == ShiftMode::kRotate ? pitch : 0.0;
  const Eigen::Matrix3d world_to_cam = pitch_rotation(cam_pitch).transpose();

  EquirectPatch out;
  out.pixels = Image(spec.height, spec.width, img.channels);
  out.mask.assign(static_cast<std::size_t>(spec.width) * spec.height, 0);
  out.full_width = spec.width;
  out.hfov_deg = pinhole.hfov_deg;
  out.pitch = cam_pitch;

  const ColumnSpan span = informative_span(pinhole, spec);
  int col_min = spec.width, col_max = -1;
  std::vector<double> sin_lon(spec.width), cos_lon(spec.width);
  for (int x = 0; x < spec.width; ++x) {
    const double lon = LonLat(column_longitude(x, spec.width), 0.0).lon;
    sin_lon[x] = std::sin(lon);
    cos_lon[x] = std::cos(lon);
  }
  for (int y = 0; y < spec.height; ++y) {
    const double lat = row_latitude(y, spec.height);
    const double cl = std::cos(lat), sl = std::sin(lat);
    for (int x = 0; x < spec.width; ++x) {
      if (mode == ShiftMode::kTranslate && (x < span.lo || x >= span.hi)) continue;
      const Eigen::Vector3d d = world_to_cam * Eigen::Vector3d(cl * sin_lon[x], sl, cl * cos_lon[x]);
      if (d.z() <= 0) continue;
      const double px = f * d.x() / d.z() + pinhole.width / 2.0;
      const double py = pinhole.height / 2.0 - f * d.y() / d.z();
      if (px < 0 || px > pinhole.width || py < 0 || py > pinhole.height) continue;
      sample_clamped(img, px, py, &out.pixels.at(y, x, 0));
      out.mask[static_cast<std::size_t>(y) * spec.width + x] = 1;
      col_min = std::min(col_min, x);
      col_max = std::max(col_max, x);
    }
  }
  if (col_max < 0) throw DataError("project_perspective_to_equirect: empty projection");
  out.span = mode == ShiftMode::kTranslate ? span : ColumnSpan{col_min, col_max + 1};

  if (mode == ShiftMode::kTranslate && pitch != 0.0) {
    out = vertical_shift_rows(out, pitch);
  }
  return out;
}

Image reproject_equirect_to_perspective(const EquirectPatch& patch, const PinholeSpec& pinhole,
                                        double pitch, ShiftMode mode) {
  pinhole.validate();
  const int full_w = patch.full_width;
  const int h = patch.height();
  const bool circular = patch.width() == full_w && patch.col_offset == 0;
  const Eigen::Matrix3d cam_to_world = pitch_rotation(pitch);
  const double f = pinhole.focal();

  Image out(pinhole.height, pinhole.width, patch.pixels.channels);
  for (int y = 0; y < pinhole.height; ++y) {
    for (int x = 0; x < pinhole.width; ++x) {
      Eigen::Vector3d d((x + 0.5 - pinhole.width / 2.0) / f, (pinhole.height / 2.0 - y - 0.5) / f, 1.0);
      if (mode == ShiftMode::kRotate) d = cam_to_world * d;
      const double lon = std::atan2(d.x(), d.z());
      double lat = std::atan2(d.y(), std::hypot(d.x(), d.z()));
      if (mode == ShiftMode::kTranslate) lat += pitch;
      const double u = (lon / kTwoPi + 0.5) * full_w;
      const double v = (0.5 - lat / kPi) * h;
      double u_local = u - patch.col_offset;
      if (!circular) {
        if (u_local < patch.span.lo - 1e-9 || u_local > patch.span.hi + 1e-9)
          throw DataError("reproject_equirect_to_perspective: field of view exceeds patch span");
      }
      if (v < 0 || v > h) continue;
      sample_patch_masked(patch, u_local, v, circular, &out.at(y, x, 0));
    }
  }
  return out;
}

EquirectPatch vertical_shift_rows(const EquirectPatch& patch, double delta_lat) {
  if (delta_lat == 0.0) return patch;
  const int h = patch.height();
  const int w = patch.width();
  const int ch = patch.pixels.channels;
  // Positive row shift moves content down (towards negative latitude).
  const double shift = -delta_lat / kPi * h;

  EquirectPatch out = patch;
  out.pitch = patch.pitch + delta_lat;
  std::fill(out.pixels.data.begin(), out.pixels.data.end(), 0.0f);
  std::fill(out.mask.begin(), out.mask.end(), std::uint8_t{0});

  const bool whole = is_whole(shift);
  const int ishift = static_cast<int>(std::lround(shift));
  for (int y = 0; y < h; ++y) {
    const double src = y - shift;
    if (whole) {
      const int sy = y - ishift;
      if (sy < 0 || sy >= h) continue;
      for (int x = 0; x < w; ++x) {
        if (!patch.masked(sy, x)) continue;
        for (int c = 0; c < ch; ++c) out.pixels.at(y, x, c) = patch.pixels.at(sy, x, c);
        out.mask[static_cast<std::size_t>(y) * w + x] = 1;
      }
      continue;
    }
    const int y0 = static_cast<int>(std::floor(src));
    const int y1 = y0 + 1;
    const double t = src - y0;
    if (y0 < 0 || y1 >= h) continue;
    for (int x = 0; x < w; ++x) {
      if (!patch.masked(y0, x) || !patch.masked(y1, x)) continue;
      for (int c = 0; c < ch; ++c)
        out.pixels.at(y, x, c) = static_cast<float>((1 - t) * patch.pixels.at(y0, x, c) +
                                                    t * patch.pixels.at(y1, x, c));
      out.mask[static_cast<std::size_t>(y) * w + x] = 1;
    }
  }
  return out;
}

ColumnSpan informative_span(double hfov_deg, const EquirectSpec& spec) {
  if (hfov_deg >= 360.0) return {0, spec.width};
  const int width = static_cast<int>(std::lround(spec.width * hfov_deg / 360.0));
  const int lo = static_cast<int>(std::floor(spec.width / 2.0 - width / 2.0));
  return {lo, lo + width};
}

ColumnSpan informative_span(const PinholeSpec& pinhole, const EquirectSpec& spec) {
  return informative_span(pinhole.hfov_deg, spec);
}

EquirectPatch crop_columns(const EquirectPatch& patch, const ColumnSpan& window) {
  if (window.empty() || window.lo < 0 || window.hi > patch.width())
    throw DataError("crop_columns: window outside patch");
  const int h = patch.height();
  const int w = window.width();
  EquirectPatch out;
  out.pixels = Image(h, w, patch.pixels.channels);
  out.mask.assign(static_cast<std::size_t>(h) * w, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int sx = window.lo + x;
      for (int c = 0; c < patch.pixels.channels; ++c)
        out.pixels.at(y, x, c) = patch.pixels.at(y, sx, c);
      out.mask[static_cast<std::size_t>(y) * w + x] = patch.mask[static_cast<std::size_t>(y) * patch.width() + sx];
    }
  out.span = {std::max(patch.span.lo, window.lo) - window.lo,
              std::min(patch.span.hi, window.hi) - window.lo};
  if (out.span.empty()) out.span = {0, 0};
  out.full_width = patch.full_width;
  out.col_offset = patch.col_offset + window.lo;
  out.pitch = patch.pitch;
  out.hfov_deg = patch.hfov_deg;
  return out;
}

EquirectPatch crop_to_span(const EquirectPatch& patch) {
  if (patch.span.empty()) throw DataError("crop_to_span: empty span");
  return crop_columns(patch, patch.span);
}

EquirectPatch uncrop(const EquirectPatch& patch) {
  const int h = patch.height();
  const int full = patch.full_width;
  EquirectPatch out;
  out.pixels = Image(h, full, patch.pixels.channels);
  out.mask.assign(static_cast<std::size_t>(h) * full, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < patch.width(); ++x) {
      const int dx = ((patch.col_offset + x) % full + full) % full;
      for (int c = 0; c < patch.pixels.channels; ++c)
        out.pixels.at(y, dx, c) = patch.pixels.at(y, x, c);
      out.mask[static_cast<std::size_t>(y) * full + dx] = patch.mask[static_cast<std::size_t>(y) * patch.width() + x];
    }
  out.span = {patch.span.lo + patch.col_offset, patch.span.hi + patch.col_offset};
  out.full_width = full;
  out.col_offset = 0;
  out.pitch = patch.pitch;
  out.hfov_deg = patch.hfov_deg;
  return out;
}

void sample_equirect(const Image& img, double u, double v, float* out) {
  const int w = img.width;
  const int h = img.height;
  const double fx = u - 0.5;
  const double fy = std::clamp(v - 0.5, 0.0, h - 1.0);
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(fy);
  const int y1 = std::min(y0 + 1, h - 1);
  const double tx = fx - x0;
  const double ty = fy - y0;
  const int xa = ((x0 % w) + w) % w;
  const int xb = (xa + 1) % w;
  for (int c = 0; c < img.channels; ++c) {
    const double top = (1 - tx) * img.at(y0, xa, c) + tx * img.at(y0, xb, c);
    const double bot = (1 - tx) * img.at(y1, xa, c) + tx * img.at(y1, xb, c);
    out[c] = static_cast<float>((1 - ty) * top + ty * bot);
  }
}

}  // namespace roomlayout
