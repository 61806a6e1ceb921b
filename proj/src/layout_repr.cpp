#include "roomlayout/layout_repr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace {

double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
Point2 sub(const Point2& a, const Point2& b) { return {a.x - b.x, a.y - b.y}; }

bool segments_intersect(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
  const auto orient = [](const Point2& a, const Point2& b, const Point2& c) {
    const double v = cross(sub(b, a), sub(c, a));
    return (v > 0) - (v < 0);
  };
  const auto on_seg = [](const Point2& a, const Point2& b, const Point2& c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
  };
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_seg(p1, p2, q1)) return true;
  if (o2 == 0 && on_seg(p1, p2, q2)) return true;
  if (o3 == 0 && on_seg(q1, q2, p1)) return true;
  if (o4 == 0 && on_seg(q1, q2, p2)) return true;
  return false;
}

double point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = sub(b, a);
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double t = len2 > 0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * ab.x), p.y - (a.y + t * ab.y));
}

}  // namespace

std::string to_string(BoundaryKind kind) {
  return kind == BoundaryKind::kCeiling ? "ceiling" : "floor";
}

BoundaryKind boundary_kind_from_string(const std::string& s) {
  if (s == "ceiling") return BoundaryKind::kCeiling;
  if (s == "floor") return BoundaryKind::kFloor;
  throw DataError("unknown boundary kind: " + s);
}

ColumnBoundary::ColumnBoundary(BoundaryKind k, std::vector<double> lats)
    : kind(k), lat(std::move(lats)), valid(lat.size(), 1) {}

ColumnBoundary::ColumnBoundary(BoundaryKind k, std::vector<double> lats,
                               std::vector<std::uint8_t> mask)
    : kind(k), lat(std::move(lats)), valid(std::move(mask)) {}

int ColumnBoundary::valid_count() const {
  return static_cast<int>(std::count_if(valid.begin(), valid.end(), [](auto v) { return v != 0; }));
}

void ColumnBoundary::validate() const {
  if (lat.size() != valid.size()) throw DataError("ColumnBoundary: mask size mismatch");
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (!valid[i]) continue;
    const double l = lat[i];
    if (!std::isfinite(l) || std::abs(l) > kPi / 2)
      throw DataError("ColumnBoundary: latitude out of range");
    if (kind == BoundaryKind::kFloor ? l >= 0 : l <= 0)
      throw DataError("ColumnBoundary: " + to_string(kind) + " boundary on the wrong side of the horizon");
  }
}

void RoomModel::validate() const {
  const std::size_t n = floorplan.size();
  if (n < 3) throw DataError("RoomModel: floor plan needs at least 3 vertices");
  if (!(cam_height > 0 && cam_height < ceil_height))
    throw DataError("RoomModel: require 0 < cam_height < ceil_height");
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = floorplan[i];
    const Point2& b = floorplan[(i + 1) % n];
    if (a.x == b.x && a.y == b.y) throw DataError("RoomModel: repeated vertex");
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(a, b, floorplan[j], floorplan[(j + 1) % n]))
        throw DataError("RoomModel: floor plan is not simple");
    }
  }
  // Strict containment: even-odd test plus a margin from every edge.
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = floorplan[i];
    const Point2& b = floorplan[j];
    if (point_segment_distance({0, 0}, a, b) < 1e-9)
      throw DataError("RoomModel: camera lies on a wall");
    if ((a.y > 0) != (b.y > 0) && 0 < (b.x - a.x) * (0 - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  if (!inside) throw DataError("RoomModel: camera outside the floor plan");
}

double row_from_latitude(double lat, int height) {
  if (!(std::abs(lat) <= kPi / 2)) throw DataError("row_from_latitude: latitude out of range");
  return (0.5 - lat / kPi) * height;
}

double latitude_from_row(double row, int height) {
  if (!(row >= 0 && row <= height)) throw DataError("latitude_from_row: row out of range");
  return (0.5 - row / height) * kPi;
}

HorizonDepth floor_boundary_to_depth(const ColumnBoundary& floor, double cam_height) {
  if (floor.kind != BoundaryKind::kFloor) throw DataError("floor_boundary_to_depth: not a floor boundary");
  if (floor.lat.size() != floor.valid.size()) throw DataError("floor_boundary_to_depth: mask size mismatch");
  HorizonDepth out;
  out.d.assign(floor.lat.size(), 0.0);
  out.valid = floor.valid;
  for (std::size_t i = 0; i < floor.lat.size(); ++i) {
    if (!floor.valid[i]) continue;
    if (!(floor.lat[i] < 0)) throw DataError("floor_boundary_to_depth: degenerate floor boundary (lat >= 0)");
    out.d[i] = cam_height / std::tan(-floor.lat[i]);
  }
  return out;
}

ColumnBoundary depth_to_floor_boundary(const HorizonDepth& depth, double cam_height) {
  ColumnBoundary out(BoundaryKind::kFloor, std::vector<double>(depth.d.size(), 0.0), depth.valid);
  for (std::size_t i = 0; i < depth.d.size(); ++i) {
    if (!depth.valid[i]) continue;
    if (!(depth.d[i] > 0)) throw DataError("depth_to_floor_boundary: nonpositive depth");
    out.lat[i] = -std::atan(cam_height / depth.d[i]);
  }
  return out;
}

double ceiling_height_from_boundaries(const ColumnBoundary& ceiling, const HorizonDepth& floor_depth,
                                      double cam_height) {
  if (ceiling.lat.size() != floor_depth.d.size())
    throw DataError("ceiling_height_from_boundaries: column count mismatch");
  double sum = 0;
  int n = 0;
  for (std::size_t i = 0; i < ceiling.lat.size(); ++i) {
    if (!ceiling.valid[i] || !floor_depth.valid[i]) continue;
    sum += floor_depth.d[i] * std::tan(ceiling.lat[i]);
    ++n;
  }
  if (n == 0) throw DataError("ceiling_height_from_boundaries: no commonly valid columns");
  return cam_height + sum / n;
}

WallHit wall_hit(const std::vector<Point2>& polygon, double lon) {
  const Point2 r{std::sin(lon), std::cos(lon)};
  WallHit best{std::numeric_limits<double>::infinity(), -1, 0.0};
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = polygon[i];
    const Point2 e = sub(polygon[(i + 1) % n], a);
    const double denom = cross(r, e);
    if (denom == 0.0) continue;
    const double t = cross(a, e) / denom;
    const double u = cross(a, r) / denom;
    if (t > 0 && u >= -1e-12 && u <= 1 + 1e-12 && t < best.distance)
      best = {t, static_cast<int>(i), std::clamp(u, 0.0, 1.0) * std::hypot(e.x, e.y)};
  }
  if (best.edge < 0) throw DataError("wall_distance: ray escapes the floor plan");
  return best;
}

double wall_distance(const std::vector<Point2>& polygon, double lon) { return wall_hit(polygon, lon).distance; }

BoundaryPair room_to_boundaries(const RoomModel& room, const EquirectSpec& spec, double yaw) {
  room.validate();
  const int w = spec.width;
  const double shift = yaw * w / (2 * kPi);
  const bool whole = std::abs(shift - std::round(shift)) < 1e-9;
  const long long k = std::llround(shift);

  BoundaryPair out;
  out.ceiling = ColumnBoundary(BoundaryKind::kCeiling, std::vector<double>(w));
  out.floor = ColumnBoundary(BoundaryKind::kFloor, std::vector<double>(w));
  const double above = room.ceil_height - room.cam_height;
  for (int i = 0; i < w; ++i) {
    double lon;
    if (whole) {
      lon = column_longitude(static_cast<double>(((i + k) % w + w) % w), w);
    } else {
      lon = wrap_longitude(column_longitude(i + shift, w));
    }
    const double d = wall_distance(room.floorplan, lon);
    out.floor.lat[i] = -std::atan(room.cam_height / d);
    out.ceiling.lat[i] = std::atan(above / d);
  }
  return out;
}

BoundaryPair corners_to_boundary(const std::vector<Point2>& polygon, double cam_height,
                                 double ceil_height, const EquirectSpec& spec) {
  return room_to_boundaries(RoomModel{polygon, cam_height, ceil_height}, spec, 0.0);
}

std::vector<Point2> boundaries_to_floorplan(const HorizonDepth& depth) {
  const int n = depth.columns();
  std::vector<Point2> pts(n);
  for (int i = 0; i < n; ++i) {
    if (!depth.valid[i]) throw DataError("boundaries_to_floorplan: invalid columns present");
    const double lon = column_longitude(i, n);
    pts[i] = {depth.d[i] * std::sin(lon), depth.d[i] * std::cos(lon)};
  }
  return pts;
}

ColumnBoundary vertical_shift_rows(const ColumnBoundary& b, double delta_lat) {
  ColumnBoundary out = b;
  if (delta_lat == 0.0) return out;
  for (std::size_t i = 0; i < out.lat.size(); ++i) {
    out.lat[i] += delta_lat;
    if (std::abs(out.lat[i]) > kPi / 2) out.valid[i] = 0;
  }
  return out;
}

ColumnBoundary resample_columns(const ColumnBoundary& b, int columns) {
  const int n = b.columns();
  if (columns == n) return b;
  if (n == 0 || columns <= 0) throw DataError("resample_columns: empty boundary");
  ColumnBoundary out(b.kind, std::vector<double>(columns, 0.0), std::vector<std::uint8_t>(columns, 0));
  for (int j = 0; j < columns; ++j) {
    const double s = (j + 0.5) * n / columns - 0.5;
    const int i0 = static_cast<int>(std::floor(s));
    const double t = s - i0;
    const int a = ((i0 % n) + n) % n;
    const int c = (a + 1) % n;
    const bool va = b.valid[a] != 0 || t == 1.0;
    const bool vc = b.valid[c] != 0 || t == 0.0;
    if (!va || !vc) continue;
    out.lat[j] = (1 - t) * b.lat[a] + t * b.lat[c];
    out.valid[j] = 1;
  }
  return out;
}

ColumnBoundary flip_columns(const ColumnBoundary& b) {
  ColumnBoundary out = b;
  std::reverse(out.lat.begin(), out.lat.end());
  std::reverse(out.valid.begin(), out.valid.end());
  return out;
}

ColumnBoundary roll_columns(const ColumnBoundary& b, int shift) {
  const int n = b.columns();
  ColumnBoundary out = b;
  for (int i = 0; i < n; ++i) {
    const int s = ((i + shift) % n + n) % n;
    out.lat[i] = b.lat[s];
    out.valid[i] = b.valid[s];
  }
  return out;
}

}  // namespace roomlayout
