#pragma once

// Training objective on per-column boundary latitudes.
//
// Every term can accumulate its gradient with respect to the predicted
// latitudes into a BoundaryGrad, multiplied by `scale`.

#include <vector>

#include "roomlayout/layout_repr.hpp"

namespace roomlayout {

struct LossWeights {
  double lambda = 1.0;  // pano boundary L1
  double mu = 0.1;      // horizon depth L1
  double gamma = 0.01;  // normal + gradient terms
  double delta = 1.0;   // perspective boundary L1

  void validate() const;
};

struct LossBreakdown {
  double l_b = 0, l_d = 0, l_n = 0, l_g = 0;
  double l_pano = 0, l_pp = 0, l_total = 0;
};

/// d(loss)/d(lat) per column for each boundary.
struct BoundaryGrad {
  std::vector<double> ceiling;
  std::vector<double> floor;

  BoundaryGrad() = default;
  explicit BoundaryGrad(int columns) : ceiling(columns, 0.0), floor(columns, 0.0) {}
};

/// Mean |pred - gt| over every (column, boundary) valid in gt and in
/// `mask` (empty mask = all columns). Throws DataError when nothing is valid.
double boundary_l1(const BoundaryPair& pred, const BoundaryPair& gt,
                   const std::vector<std::uint8_t>& mask = {},
                   BoundaryGrad* grad = nullptr, double scale = 1.0);

/// Mean |d_pred - d_gt| of horizon depths over columns valid in both floors.
double depth_l1(const ColumnBoundary& pred_floor, const ColumnBoundary& gt_floor, double cam_height,
                std::vector<double>* d_pred_lat = nullptr, double scale = 1.0);

/// mean(1 - n_pred . n_gt) over the closed floor-plan chain; all columns
/// must be valid. Gradient is with respect to the predicted depths.
double normal_loss(const HorizonDepth& pred, const HorizonDepth& gt,
                   std::vector<double>* d_pred_depth = nullptr, double scale = 1.0);

/// mean |g_pred - g_gt| with g_i = d_{i+1} - d_{i-1} (circular).
double gradient_loss(const HorizonDepth& pred, const HorizonDepth& gt,
                     std::vector<double>* d_pred_depth = nullptr, double scale = 1.0);

/// lambda L_b + mu L_d + gamma (L_n + L_g) for one panorama. Fills every
/// field except l_pp / l_total.
LossBreakdown loss_pano(const BoundaryPair& pred, const BoundaryPair& gt, const LossWeights& weights,
                        double cam_height = 1.6, BoundaryGrad* grad = nullptr, double scale = 1.0);

/// delta L_b for one perspective sample over `mask`.
LossBreakdown loss_pp(const BoundaryPair& pred, const BoundaryPair& gt, const std::vector<std::uint8_t>& mask,
                      const LossWeights& weights, BoundaryGrad* grad = nullptr, double scale = 1.0);

/// Batch objective: mean pano loss + mean pp loss; an absent domain adds 0.
/// l_b, l_d, l_n, l_g are means over the items that carry them.
LossBreakdown loss_total(const std::vector<LossBreakdown>& pano, const std::vector<LossBreakdown>& pp);

}  // namespace roomlayout
