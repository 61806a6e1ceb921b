#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "roomlayout/errors.hpp"
#include "roomlayout/layout_repr.hpp"
#include "test_util.hpp"

using namespace roomlayout;

TEST(LayoutRepr, SquareRoomAnalytic) {
  const double a = 2.0, cam = 1.5, ceil = 3.2;
  const RoomModel room{testutil::rectangle(-a, -a, a, a), cam, ceil};
  const EquirectSpec spec{256, 128};
  const BoundaryPair b = room_to_boundaries(room, spec);
  for (int i = 0; i < spec.width; ++i) {
    const double lon = column_longitude(i, spec.width);
    // Distance to the nearest face of an axis-aligned square.
    const double d = a / std::max(std::abs(std::sin(lon)), std::abs(std::cos(lon)));
    EXPECT_NEAR(b.floor.lat[i], -std::atan(cam / d), 1e-12);
    EXPECT_NEAR(b.ceiling.lat[i], std::atan((ceil - cam) / d), 1e-12);
  }
  b.floor.validate();
  b.ceiling.validate();
}

TEST(LayoutRepr, RegularPolygonVertexDistance) {
  const int n = 64;
  const double r = 3.0;
  std::vector<Point2> poly;
  for (int k = 0; k < n; ++k) {
    const double t = 2 * kPi * k / n;
    poly.push_back({r * std::sin(t), r * std::cos(t)});
  }
  for (int k = 0; k < n; ++k) EXPECT_NEAR(wall_distance(poly, 2 * kPi * k / n), r, 1e-9);
  EXPECT_NEAR(wall_distance(poly, kPi / n), r * std::cos(kPi / n), 1e-9);
}

TEST(LayoutRepr, YawRollsColumnsExactly) {
  std::mt19937_64 rng(1);
  const RoomModel room{testutil::star_polygon(rng, 7, 2, 5), 1.6, 3.0};
  const EquirectSpec spec{128, 64};
  const BoundaryPair base = room_to_boundaries(room, spec);
  for (int k : {1, 5, -9, 64}) {
    const BoundaryPair rot = room_to_boundaries(room, spec, k * 2 * kPi / spec.width);
    EXPECT_EQ(rot.floor.lat, roll_columns(base.floor, k).lat) << k;
    EXPECT_EQ(rot.ceiling.lat, roll_columns(base.ceiling, k).lat) << k;
  }
}

TEST(LayoutRepr, ScaleInvariance) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    RoomModel room{testutil::star_polygon(rng, 6, 2, 5), 1.6, 3.1};
    const BoundaryPair a = room_to_boundaries(room, {128, 64});
    const double s = 0.5 + trial * 0.17;
    for (auto& p : room.floorplan) p = {p.x * s, p.y * s};
    room.cam_height *= s;
    room.ceil_height *= s;
    const BoundaryPair b = room_to_boundaries(room, {128, 64});
    for (int i = 0; i < 128; ++i) {
      EXPECT_NEAR(a.floor.lat[i], b.floor.lat[i], 1e-12);
      EXPECT_NEAR(a.ceiling.lat[i], b.ceiling.lat[i], 1e-12);
    }
  }
}

TEST(LayoutRepr, FloorplanRecoveryHitsWalls) {
  std::mt19937_64 rng(3);
  const EquirectSpec spec{256, 128};
  for (int trial = 0; trial < 25; ++trial) {
    const RoomModel room{testutil::star_polygon(rng, 5 + trial % 6, 1.5, 6), 1.6, 3.0};
    const BoundaryPair b = room_to_boundaries(room, spec);
    const auto pts = boundaries_to_floorplan(floor_boundary_to_depth(b.floor, room.cam_height));
    for (int i = 0; i < spec.width; ++i) {
      const WallHit hit = wall_hit(room.floorplan, column_longitude(i, spec.width));
      const Point2& a = room.floorplan[hit.edge];
      const Point2& c = room.floorplan[(hit.edge + 1) % room.floorplan.size()];
      const double len = std::hypot(c.x - a.x, c.y - a.y);
      const Point2 q{a.x + (c.x - a.x) * hit.along / len, a.y + (c.y - a.y) * hit.along / len};
      EXPECT_NEAR(pts[i].x, q.x, 1e-9);
      EXPECT_NEAR(pts[i].y, q.y, 1e-9);
    }
  }
}

TEST(LayoutRepr, DepthRoundTripAndCeilingHeight) {
  const RoomModel room{testutil::rectangle(-3, -2, 4, 2.5), 1.4, 2.75};
  const BoundaryPair b = room_to_boundaries(room, {64, 32});
  const HorizonDepth d = floor_boundary_to_depth(b.floor, room.cam_height);
  const ColumnBoundary f = depth_to_floor_boundary(d, room.cam_height);
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(f.lat[i], b.floor.lat[i], 1e-14);
  EXPECT_NEAR(ceiling_height_from_boundaries(b.ceiling, d, room.cam_height), room.ceil_height, 1e-12);
}

TEST(LayoutRepr, DegenerateInputsThrow) {
  ColumnBoundary bad(BoundaryKind::kFloor, {-0.3, 0.1});
  EXPECT_THROW(floor_boundary_to_depth(bad, 1.6), DataError);
  EXPECT_THROW(bad.validate(), DataError);
  EXPECT_THROW((RoomModel{testutil::rectangle(1, 1, 2, 2), 1.6, 3}.validate()), DataError);
  EXPECT_THROW((RoomModel{{{-1, -1}, {1, 1}, {1, -1}, {-1, 1}}, 1.6, 3}.validate()), DataError);
  EXPECT_THROW((RoomModel{testutil::rectangle(-1, -1, 1, 1), 3, 2}.validate()), DataError);
  EXPECT_THROW(wall_distance({{1, 1}, {2, 1}, {2, 2}}, kPi), DataError);
}

TEST(LayoutRepr, VerticalShiftInvalidatesOutOfRange) {
  ColumnBoundary c(BoundaryKind::kCeiling, {0.2, 1.4});
  const ColumnBoundary s = vertical_shift_rows(c, 0.3);
  EXPECT_NEAR(s.lat[0], 0.5, 1e-15);
  EXPECT_EQ(s.valid[0], 1);
  EXPECT_EQ(s.valid[1], 0);
}

TEST(LayoutRepr, RowLatitudeRoundTrip) {
  for (double row : {0.0, 12.25, 64.0, 128.0})
    EXPECT_NEAR(row_from_latitude(latitude_from_row(row, 128), 128), row, 1e-12);
  EXPECT_THROW(latitude_from_row(-1, 128), DataError);
}

TEST(LayoutRepr, ResampleColumns) {
  const RoomModel room{testutil::rectangle(-2, -2, 2.5, 3), 1.6, 3.0};
  const BoundaryPair hi = room_to_boundaries(room, {256, 128});
  const ColumnBoundary same = resample_columns(hi.floor, 256);
  EXPECT_EQ(same.lat, hi.floor.lat);
  // Exact factor-2 downsampling averages neighbouring column pairs.
  const ColumnBoundary lo = resample_columns(hi.floor, 128);
  for (int j = 0; j < 128; ++j) EXPECT_NEAR(lo.lat[j], 0.5 * (hi.floor.lat[2 * j] + hi.floor.lat[2 * j + 1]), 1e-15);
  // Invalid neighbours propagate.
  ColumnBoundary partial = hi.floor;
  partial.valid[10] = 0;
  const ColumnBoundary r = resample_columns(partial, 128);
  EXPECT_EQ(r.valid[5], 0);
  EXPECT_EQ(r.valid[6], 1);
}

TEST(LayoutRepr, FlipIsInvolutionAndMirrorsRoom) {
  std::mt19937_64 rng(4);
  RoomModel room{testutil::star_polygon(rng, 6, 2, 4), 1.6, 3.0};
  const BoundaryPair b = room_to_boundaries(room, {128, 64});
  EXPECT_EQ(flip_columns(flip_columns(b.floor)).lat, b.floor.lat);
  for (auto& p : room.floorplan) p.x = -p.x;
  std::reverse(room.floorplan.begin(), room.floorplan.end());
  const BoundaryPair m = room_to_boundaries(room, {128, 64});
  const ColumnBoundary f = flip_columns(b.floor);
  for (int i = 0; i < 128; ++i) EXPECT_NEAR(f.lat[i], m.floor.lat[i], 1e-12);
}
