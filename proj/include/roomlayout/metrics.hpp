#pragma once

#include <optional>
#include <vector>

#include "roomlayout/layout_repr.hpp"

namespace roomlayout {

struct IoUReport {
  double iou2d = 0.0;
  std::optional<double> iou3d;
  std::optional<double> ceiling_iou;
  std::optional<double> floor_iou;
};

/// Signed shoelace area (positive when counter-clockwise).
double signed_area(const std::vector<Point2>& polygon);

/// Exact area(pred ∩ gt) / area(pred ∪ gt) of two simple polygons.
/// Throws DataError on a zero-area polygon.
double polygon_iou_2d(const std::vector<Point2>& pred, const std::vector<Point2>& gt);

/// Area of the intersection of two simple polygons.
double polygon_intersection_area(const std::vector<Point2>& a, const std::vector<Point2>& b);

/// Volume IoU of two prisms sharing the floor plane.
double iou_3d(const std::vector<Point2>& pred, double pred_height,
              const std::vector<Point2>& gt, double gt_height);

/// IoU of the image region above a ceiling boundary (or below a floor
/// boundary) in pixel-row space, over the columns valid in `gt`. A pred
/// column that is invalid contributes an empty region.
double image_region_iou(BoundaryKind kind, const ColumnBoundary& pred, const ColumnBoundary& gt,
                        int height);

}  // namespace roomlayout
