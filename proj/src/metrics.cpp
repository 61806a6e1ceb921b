#include "roomlayout/metrics.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include <algorithm>
#include <cmath>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace bg = boost::geometry;

namespace {

using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;
using BgMulti = bg::model::multi_polygon<BgPolygon>;

BgPolygon to_bg(const std::vector<Point2>& pts) {
  BgPolygon poly;
  for (const Point2& p : pts) bg::append(poly.outer(), BgPoint(p.x, p.y));
  if (!pts.empty()) bg::append(poly.outer(), BgPoint(pts.front().x, pts.front().y));
  bg::correct(poly);
  return poly;
}

}  // namespace

double signed_area(const std::vector<Point2>& polygon) {
  const std::size_t n = polygon.size();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = polygon[i];
    const Point2& b = polygon[(i + 1) % n];
    acc += a.x * b.y - b.x * a.y;
  }
  return 0.5 * acc;
}

double polygon_intersection_area(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  BgMulti inter;
  bg::intersection(to_bg(a), to_bg(b), inter);
  return bg::area(inter);
}

double polygon_iou_2d(const std::vector<Point2>& pred, const std::vector<Point2>& gt) {
  const double area_p = std::abs(signed_area(pred));
  const double area_g = std::abs(signed_area(gt));
  if (pred.size() < 3 || gt.size() < 3 || area_p <= 0 || area_g <= 0)
    throw DataError("polygon_iou_2d: degenerate polygon");
  const double inter = std::clamp(polygon_intersection_area(pred, gt), 0.0, std::min(area_p, area_g));
  return inter / (area_p + area_g - inter);
}

double iou_3d(const std::vector<Point2>& pred, double pred_height, const std::vector<Point2>& gt,
              double gt_height) {
  if (!(pred_height > 0 && gt_height > 0)) throw DataError("iou_3d: heights must be positive");
  const double area_p = std::abs(signed_area(pred));
  const double area_g = std::abs(signed_area(gt));
  if (pred.size() < 3 || gt.size() < 3 || area_p <= 0 || area_g <= 0)
    throw DataError("iou_3d: degenerate polygon");
  const double inter_area =
      std::clamp(polygon_intersection_area(pred, gt), 0.0, std::min(area_p, area_g));
  const double v_inter = inter_area * std::min(pred_height, gt_height);
  const double v_union = area_p * pred_height + area_g * gt_height - v_inter;
  return v_inter / v_union;
}

double image_region_iou(BoundaryKind kind, const ColumnBoundary& pred, const ColumnBoundary& gt,
                        int height) {
  if (pred.columns() != gt.columns()) throw DataError("image_region_iou: column count mismatch");
  const double h = height;
  double inter = 0, uni = 0;
  int used = 0;
  for (int i = 0; i < gt.columns(); ++i) {
    if (!gt.valid[i]) continue;
    ++used;
    const double vg = std::clamp((0.5 - gt.lat[i] / kPi) * h, 0.0, h);
    // Region extents [lo, hi) in rows.
    const double g_lo = kind == BoundaryKind::kCeiling ? 0.0 : vg;
    const double g_hi = kind == BoundaryKind::kCeiling ? vg : h;
    if (!pred.valid[i]) {
      uni += g_hi - g_lo;
      continue;
    }
    const double vp = std::clamp((0.5 - pred.lat[i] / kPi) * h, 0.0, h);
    const double p_lo = kind == BoundaryKind::kCeiling ? 0.0 : vp;
    const double p_hi = kind == BoundaryKind::kCeiling ? vp : h;
    const double ov = std::max(0.0, std::min(g_hi, p_hi) - std::max(g_lo, p_lo));
    inter += ov;
    uni += (g_hi - g_lo) + (p_hi - p_lo) - ov;
  }
  if (used == 0) throw DataError("image_region_iou: no valid columns");
  if (uni <= 0) return 1.0;
  return inter / uni;
}

}  // namespace roomlayout
