#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roomlayout/sphere_geometry.hpp"

namespace roomlayout {

enum class BoundaryKind { kCeiling, kFloor };

std::string to_string(BoundaryKind kind);
BoundaryKind boundary_kind_from_string(const std::string& s);

/// Per-column wall/ceiling or wall/floor boundary, stored as latitudes.
struct ColumnBoundary {
  BoundaryKind kind = BoundaryKind::kFloor;
  std::vector<double> lat;
  std::vector<std::uint8_t> valid;

  ColumnBoundary() = default;
  ColumnBoundary(BoundaryKind k, std::vector<double> lats);
  ColumnBoundary(BoundaryKind k, std::vector<double> lats, std::vector<std::uint8_t> mask);

  int columns() const { return static_cast<int>(lat.size()); }
  int valid_count() const;
  /// Throws DataError when a valid column sits on the wrong side of the
  /// horizon or sizes disagree.
  void validate() const;
};

struct BoundaryPair {
  ColumnBoundary ceiling;
  ColumnBoundary floor;
};

/// Per-column wall distance on the floor plane, metres.
struct HorizonDepth {
  std::vector<double> d;
  std::vector<std::uint8_t> valid;

  int columns() const { return static_cast<int>(d.size()); }
};

struct Point2 {
  double x = 0.0;  // right
  double y = 0.0;  // forward
};

/// Single-room model with the camera at the floor-plan origin.
struct RoomModel {
  std::vector<Point2> floorplan;
  double cam_height = 1.6;
  double ceil_height = 3.0;

  /// Simple polygon strictly containing the origin, 0 < cam < ceiling.
  void validate() const;
};

double row_from_latitude(double lat, int height);
double latitude_from_row(double row, int height);

HorizonDepth floor_boundary_to_depth(const ColumnBoundary& floor, double cam_height);
ColumnBoundary depth_to_floor_boundary(const HorizonDepth& depth, double cam_height);

/// Full room height (floor to ceiling) from the mean per-column ceiling
/// height above the camera.
double ceiling_height_from_boundaries(const ColumnBoundary& ceiling,
                                      const HorizonDepth& floor_depth, double cam_height);

struct WallHit {
  double distance = 0.0;
  int edge = -1;       // index i of the edge (polygon[i], polygon[i + 1])
  double along = 0.0;  // position on that edge in metres from polygon[i]
};

/// First wall hit from the origin along bearing `lon`.
WallHit wall_hit(const std::vector<Point2>& polygon, double lon);

/// Distance from the origin to the first wall along bearing `lon`
/// (0 = +y, increasing towards +x). Throws DataError when the ray escapes.
double wall_distance(const std::vector<Point2>& polygon, double lon);

/// Analytic ceiling/floor boundaries of a room on a `spec.width`-column
/// grid. Column i looks along bearing column_longitude(i) + yaw; a yaw of
/// k whole columns rolls the arrays by exactly k.
BoundaryPair room_to_boundaries(const RoomModel& room, const EquirectSpec& spec, double yaw = 0.0);

/// Corner-list annotation entry point; same as room_to_boundaries at yaw 0.
BoundaryPair corners_to_boundary(const std::vector<Point2>& polygon, double cam_height,
                                 double ceil_height, const EquirectSpec& spec);

/// Bird's-eye points P_i = d_i (sin phi_i, cos phi_i) in column order.
std::vector<Point2> boundaries_to_floorplan(const HorizonDepth& depth);

/// lat' = lat + delta_lat; columns leaving [-pi/2, pi/2] become invalid.
ColumnBoundary vertical_shift_rows(const ColumnBoundary& b, double delta_lat);

/// Column-centre linear resampling onto `columns` columns, circular over
/// the full 360 degrees. Identity when the count is unchanged.
ColumnBoundary resample_columns(const ColumnBoundary& b, int columns);

ColumnBoundary flip_columns(const ColumnBoundary& b);
/// out[i] = in[(i + shift) mod n]
ColumnBoundary roll_columns(const ColumnBoundary& b, int shift);

}  // namespace roomlayout
