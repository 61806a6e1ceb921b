#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "roomlayout/errors.hpp"
#include "roomlayout/sphere_geometry.hpp"
#include "test_util.hpp"

using namespace roomlayout;

namespace {

double max_interior_error(const Image& a, const Image& b, int margin) {
  double err = 0;
  for (int y = margin; y < a.height - margin; ++y)
    for (int x = margin; x < a.width - margin; ++x)
      for (int c = 0; c < a.channels; ++c)
        err = std::max(err, static_cast<double>(std::abs(a.at(y, x, c) - b.at(y, x, c))));
  return err;
}

}  // namespace

TEST(SphereGeometry, CubeCornerDirection) {
  const Eigen::Vector3d d = Eigen::Vector3d(1, 1, 1).normalized();
  const LonLat ll = lonlat_from_direction(d);
  EXPECT_NEAR(ll.lon, kPi / 4, 1e-12);
  EXPECT_NEAR(ll.lat, std::atan(1 / std::sqrt(2.0)), 1e-12);
  const UV uv = equirect_uv_from_lonlat(ll, {1024, 512});
  EXPECT_NEAR(uv.u, 1024 * (0.125 + 0.5), 1e-9);
  EXPECT_NEAR(uv.v, 512 * (0.5 - std::atan(1 / std::sqrt(2.0)) / kPi), 1e-9);
}

TEST(SphereGeometry, AxisDirections) {
  EXPECT_NEAR(lonlat_from_direction({0, 0, 1}).lon, 0, 1e-15);
  EXPECT_NEAR(lonlat_from_direction({1, 0, 0}).lon, kPi / 2, 1e-15);
  EXPECT_NEAR(lonlat_from_direction({0, 1, 0}).lat, kPi / 2, 1e-15);
  EXPECT_NEAR(lonlat_from_direction({0, -1, 0}).lat, -kPi / 2, 1e-15);
}

TEST(SphereGeometry, UvLonLatRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1024), v(0, 512);
  const EquirectSpec spec{1024, 512};
  for (int i = 0; i < 1000; ++i) {
    const UV in{u(rng), v(rng)};
    const UV out = equirect_uv_from_lonlat(lonlat_from_equirect_uv(in, spec), spec);
    EXPECT_NEAR(out.u, in.u, 1e-9);
    EXPECT_NEAR(out.v, in.v, 1e-9);
  }
}

TEST(SphereGeometry, DirectionRoundTrip) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> lon(-kPi, kPi), lat(-1.5, 1.5);
  for (int i = 0; i < 1000; ++i) {
    const LonLat p(lon(rng), lat(rng));
    const LonLat q = lonlat_from_direction(direction_from_lonlat(p));
    EXPECT_NEAR(q.lat, p.lat, 1e-12);
    EXPECT_NEAR(std::abs(wrap_longitude(q.lon - p.lon)), 0, 1e-12);
  }
}

TEST(SphereGeometry, WrapLongitudeHalfOpen) {
  EXPECT_DOUBLE_EQ(wrap_longitude(kPi), -kPi);
  EXPECT_NEAR(wrap_longitude(3 * kPi / 2), -kPi / 2, 1e-12);
  EXPECT_NEAR(wrap_longitude(-5 * kPi / 2), -kPi / 2, 1e-12);
}

TEST(SphereGeometry, InvalidInputsThrow) {
  EXPECT_THROW(LonLat(0, 1.6), DataError);
  EXPECT_THROW((EquirectSpec{1000, 400}.validate()), ConfigError);
  EXPECT_THROW((PinholeSpec{180, 64, 64}.validate()), ConfigError);
  EXPECT_THROW(lonlat_from_equirect_uv({1024, 0}, {1024, 512}), DataError);
}

TEST(SphereGeometry, ColumnLongitudeCentres) {
  EXPECT_NEAR(column_longitude(0, 4), -3 * kPi / 4, 1e-15);
  EXPECT_NEAR(column_longitude(3, 4), 3 * kPi / 4, 1e-15);
  EXPECT_NEAR(row_latitude(0, 2), kPi / 4, 1e-15);
}

TEST(SphereGeometry, PitchRotationTiltsForwardRayUp) {
  const Eigen::Vector3d d = pitch_rotation(0.3) * Eigen::Vector3d(0, 0, 1);
  EXPECT_NEAR(lonlat_from_direction(d).lat, 0.3, 1e-12);
  EXPECT_NEAR((pitch_rotation(0.3) * pitch_rotation(-0.3) - Eigen::Matrix3d::Identity()).norm(), 0, 1e-15);
}

TEST(SphereGeometry, InformativeSpan) {
  const ColumnSpan s = informative_span(90.0, {1024, 512});
  EXPECT_EQ(s.width(), 256);
  EXPECT_EQ(s.lo, 384);
  EXPECT_EQ(informative_span(360.0, {64, 32}), (ColumnSpan{0, 64}));
}

TEST(SphereGeometry, ProjectionMaskLiesInSpanAndCoversIt) {
  const PinholeSpec pin{90, 128, 128};
  const Image img = testutil::smooth_image(128, 128, 1);
  const EquirectSpec spec{512, 256};
  const EquirectPatch p = project_perspective_to_equirect(img, pin, 0.0, spec);
  const ColumnSpan span = informative_span(pin, spec);
  EXPECT_EQ(p.span, span);
  for (int x = 0; x < spec.width; ++x) {
    bool any = false;
    for (int y = 0; y < spec.height; ++y) any |= p.masked(y, x);
    EXPECT_EQ(any, x >= span.lo && x < span.hi) << x;
  }
  // Equator row of the centre column holds the principal point colour.
  float c[3];
  sample_equirect(p.pixels, 256.0, 128.0, c);
  EXPECT_NEAR(c[0], 0.25f * (img.at(63, 63, 0) + img.at(63, 64, 0) + img.at(64, 63, 0) + img.at(64, 64, 0)), 2e-3);
}

TEST(SphereGeometry, TranslateEqualsZeroPitchThenShift) {
  const PinholeSpec pin{70, 96, 96};
  const Image img = testutil::smooth_image(96, 96, 2);
  const EquirectSpec spec{512, 256};
  const double pitch = deg2rad(-17.0);
  const EquirectPatch a = project_perspective_to_equirect(img, pin, pitch, spec);
  const EquirectPatch b = vertical_shift_rows(project_perspective_to_equirect(img, pin, 0.0, spec), pitch);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_EQ(a.pixels.data, b.pixels.data);
  EXPECT_NEAR(a.pitch, pitch, 1e-15);
}

TEST(SphereGeometry, TranslateBound) {
  const PinholeSpec pin{120, 64, 64};
  const Image img = testutil::smooth_image(64, 64, 3);
  const EquirectSpec spec{256, 128};
  EXPECT_NO_THROW(project_perspective_to_equirect(img, pin, deg2rad(30.0), spec));
  EXPECT_THROW(project_perspective_to_equirect(img, pin, deg2rad(31.0), spec), DataError);
  EXPECT_NO_THROW(project_perspective_to_equirect(img, pin, deg2rad(31.0), spec, ShiftMode::kRotate));
}

TEST(SphereGeometry, WholeRowShiftIsExactAndComposes) {
  const EquirectPatch p = make_panorama_patch(testutil::noise_image(64, 128, 4));
  const double row = kPi / 64;
  const EquirectPatch a = vertical_shift_rows(vertical_shift_rows(p, -3 * row), -5 * row);
  const EquirectPatch b = vertical_shift_rows(p, -8 * row);
  EXPECT_EQ(a.pixels.data, b.pixels.data);
  EXPECT_EQ(a.mask, b.mask);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 128; ++x) {
      EXPECT_EQ(b.masked(y, x), y >= 8);
      if (y >= 8) {
        ASSERT_EQ(b.pixels.at(y, x, 1), p.pixels.at(y - 8, x, 1));
      }
    }
}

TEST(SphereGeometry, ShiftCommutesWithCrop) {
  const PinholeSpec pin{80, 64, 64};
  const EquirectPatch p =
      project_perspective_to_equirect(testutil::smooth_image(64, 64, 5), pin, 0.0, {256, 128});
  const double d = deg2rad(12.3);
  const EquirectPatch a = crop_to_span(vertical_shift_rows(p, d));
  const EquirectPatch b = vertical_shift_rows(crop_to_span(p), d);
  EXPECT_EQ(a.pixels.data, b.pixels.data);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_EQ(a.col_offset, b.col_offset);
}

TEST(SphereGeometry, CropUncropRoundTrip) {
  const PinholeSpec pin{100, 64, 64};
  const EquirectPatch p =
      project_perspective_to_equirect(testutil::smooth_image(64, 64, 6), pin, 0.2, {256, 128});
  const EquirectPatch c = crop_to_span(p);
  EXPECT_EQ(c.width(), p.span.width());
  EXPECT_EQ(c.col_offset, p.span.lo);
  const EquirectPatch u = uncrop(c);
  EXPECT_EQ(u.pixels.data, p.pixels.data);
  EXPECT_EQ(u.mask, p.mask);
  EXPECT_EQ(u.span, p.span);
  EXPECT_THROW(crop_columns(p, {200, 300}), DataError);
}

TEST(SphereGeometry, ProjectReprojectRoundTripSmall) {
  const Image img = testutil::smooth_image(128, 128, 7);
  for (double hfov : {60.0, 90.0}) {
    for (double pitch_deg : {-20.0, 0.0, 20.0}) {
      for (ShiftMode mode : {ShiftMode::kTranslate, ShiftMode::kRotate}) {
        const PinholeSpec pin{hfov, 128, 128};
        const double pitch = deg2rad(pitch_deg);
        const EquirectPatch p = project_perspective_to_equirect(img, pin, pitch, {1024, 512}, mode);
        const Image back = reproject_equirect_to_perspective(crop_to_span(p), pin, pitch, mode);
        EXPECT_LT(max_interior_error(img, back, 4), 4e-3) << hfov << " " << pitch_deg;
      }
    }
  }
}

TEST(SphereGeometry, ReprojectRejectsWiderFieldOfView) {
  const EquirectPatch p =
      project_perspective_to_equirect(testutil::smooth_image(64, 64, 8), {60, 64, 64}, 0.0, {256, 128});
  EXPECT_THROW(reproject_equirect_to_perspective(crop_to_span(p), {90, 64, 64}, 0.0), DataError);
}
