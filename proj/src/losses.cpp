#include "roomlayout/losses.hpp"

#include <algorithm>
#include <cmath>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace {

constexpr double kNormalEps = 1e-12;

double sign(double v) { return (v > 0) - (v < 0); }

void check_columns(const ColumnBoundary& a, const ColumnBoundary& b, const char* what) {
  if (a.columns() != b.columns() || a.valid.size() != a.lat.size() || b.valid.size() != b.lat.size())
    throw DataError(std::string(what) + ": column count mismatch");
}

void require_full(const HorizonDepth& d, const char* what) {
  if (d.valid.size() != d.d.size()) throw DataError(std::string(what) + ": mask size mismatch");
  for (auto v : d.valid)
    if (!v) throw DataError(std::string(what) + ": all columns must be valid");
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda >= 0 && mu >= 0 && gamma >= 0 && delta >= 0)) throw ConfigError("loss weights must be nonnegative");
}

double boundary_l1(const BoundaryPair& pred, const BoundaryPair& gt, const std::vector<std::uint8_t>& mask,
                   BoundaryGrad* grad, double scale) {
  check_columns(pred.ceiling, gt.ceiling, "boundary_l1");
  check_columns(pred.floor, gt.floor, "boundary_l1");
  const int n = gt.floor.columns();
  if (!mask.empty() && static_cast<int>(mask.size()) != n) throw DataError("boundary_l1: mask size mismatch");
  const auto use = [&](const ColumnBoundary& g, int i) { return g.valid[i] && (mask.empty() || mask[i]); };
  int count = 0;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    if (use(gt.ceiling, i)) ++count, sum += std::abs(pred.ceiling.lat[i] - gt.ceiling.lat[i]);
    if (use(gt.floor, i)) ++count, sum += std::abs(pred.floor.lat[i] - gt.floor.lat[i]);
  }
  if (count == 0) throw DataError("boundary_l1: no valid columns");
  if (grad) {
    const double k = scale / count;
    for (int i = 0; i < n; ++i) {
      if (use(gt.ceiling, i)) grad->ceiling[i] += k * sign(pred.ceiling.lat[i] - gt.ceiling.lat[i]);
      if (use(gt.floor, i)) grad->floor[i] += k * sign(pred.floor.lat[i] - gt.floor.lat[i]);
    }
  }
  return sum / count;
}

double depth_l1(const ColumnBoundary& pred_floor, const ColumnBoundary& gt_floor, double cam_height,
                std::vector<double>* d_pred_lat, double scale) {
  check_columns(pred_floor, gt_floor, "depth_l1");
  const HorizonDepth dp = floor_boundary_to_depth(pred_floor, cam_height);
  const HorizonDepth dg = floor_boundary_to_depth(gt_floor, cam_height);
  int count = 0;
  double sum = 0;
  for (int i = 0; i < dp.columns(); ++i)
    if (dp.valid[i] && dg.valid[i]) ++count, sum += std::abs(dp.d[i] - dg.d[i]);
  if (count == 0) throw DataError("depth_l1: no valid columns");
  if (d_pred_lat) {
    for (int i = 0; i < dp.columns(); ++i) {
      if (!dp.valid[i] || !dg.valid[i]) continue;
      const double s = std::sin(pred_floor.lat[i]);
      (*d_pred_lat)[i] += scale / count * sign(dp.d[i] - dg.d[i]) * cam_height / (s * s);
    }
  }
  return sum / count;
}

double normal_loss(const HorizonDepth& pred, const HorizonDepth& gt, std::vector<double>* d_pred_depth,
                   double scale) {
  if (pred.columns() != gt.columns() || pred.columns() < 2) throw DataError("normal_loss: column count mismatch");
  require_full(pred, "normal_loss");
  require_full(gt, "normal_loss");
  const int n = pred.columns();
  const auto pts_p = boundaries_to_floorplan(pred);
  const auto pts_g = boundaries_to_floorplan(gt);
  // Edge normal: rot(e) = (e.y, -e.x), normalised with an epsilon guard.
  const auto normal = [](const Point2& a, const Point2& b, double& s) {
    const Point2 r{b.y - a.y, -(b.x - a.x)};
    s = std::sqrt(r.x * r.x + r.y * r.y + kNormalEps * kNormalEps);
    return Point2{r.x / s, r.y / s};
  };
  double sum = 0;
  std::vector<Point2> dp(d_pred_depth ? n : 0);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    double sp, sg;
    const Point2 np = normal(pts_p[i], pts_p[j], sp);
    const Point2 ng = normal(pts_g[i], pts_g[j], sg);
    sum += 1.0 - (np.x * ng.x + np.y * ng.y);
    if (d_pred_depth) {
      // dL/dn = -ng / n; dn/dr = (I - n n^T) / s; dr/de = rot; e = P_j - P_i.
      const double k = -scale / n;
      const Point2 gn{k * ng.x, k * ng.y};
      const double proj = gn.x * np.x + gn.y * np.y;
      const Point2 gr{(gn.x - proj * np.x) / sp, (gn.y - proj * np.y) / sp};
      const Point2 ge{-gr.y, gr.x};
      dp[j].x += ge.x, dp[j].y += ge.y;
      dp[i].x -= ge.x, dp[i].y -= ge.y;
    }
  }
  if (d_pred_depth) {
    for (int i = 0; i < n; ++i) {
      const double lon = column_longitude(i, n);
      (*d_pred_depth)[i] += dp[i].x * std::sin(lon) + dp[i].y * std::cos(lon);
    }
  }
  return std::max(0.0, sum / n);
}

double gradient_loss(const HorizonDepth& pred, const HorizonDepth& gt, std::vector<double>* d_pred_depth,
                     double scale) {
  if (pred.columns() != gt.columns() || pred.columns() < 2) throw DataError("gradient_loss: column count mismatch");
  require_full(pred, "gradient_loss");
  require_full(gt, "gradient_loss");
  const int n = pred.columns();
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const int next = (i + 1) % n, prev = (i + n - 1) % n;
    const double diff = (pred.d[next] - pred.d[prev]) - (gt.d[next] - gt.d[prev]);
    sum += std::abs(diff);
    if (d_pred_depth) {
      const double s = scale / n * sign(diff);
      (*d_pred_depth)[next] += s;
      (*d_pred_depth)[prev] -= s;
    }
  }
  return sum / n;
}

LossBreakdown loss_pano(const BoundaryPair& pred, const BoundaryPair& gt, const LossWeights& w, double cam_height,
                        BoundaryGrad* grad, double scale) {
  LossBreakdown out;
  out.l_b = boundary_l1(pred, gt, {}, grad, scale * w.lambda);
  out.l_d = depth_l1(pred.floor, gt.floor, cam_height, grad ? &grad->floor : nullptr, scale * w.mu);

  const HorizonDepth dp = floor_boundary_to_depth(pred.floor, cam_height);
  const HorizonDepth dg = floor_boundary_to_depth(gt.floor, cam_height);
  std::vector<double> dd;
  if (grad) dd.assign(dp.columns(), 0.0);
  out.l_n = normal_loss(dp, dg, grad ? &dd : nullptr, scale * w.gamma);
  out.l_g = gradient_loss(dp, dg, grad ? &dd : nullptr, scale * w.gamma);
  if (grad) {
    for (int i = 0; i < dp.columns(); ++i) {
      const double s = std::sin(pred.floor.lat[i]);
      grad->floor[i] += dd[i] * cam_height / (s * s);
    }
  }
  out.l_pano = w.lambda * out.l_b + w.mu * out.l_d + w.gamma * (out.l_n + out.l_g);
  out.l_total = out.l_pano;
  return out;
}

LossBreakdown loss_pp(const BoundaryPair& pred, const BoundaryPair& gt, const std::vector<std::uint8_t>& mask,
                      const LossWeights& w, BoundaryGrad* grad, double scale) {
  LossBreakdown out;
  out.l_b = boundary_l1(pred, gt, mask, grad, scale * w.delta);
  out.l_pp = w.delta * out.l_b;
  out.l_total = out.l_pp;
  return out;
}

LossBreakdown loss_total(const std::vector<LossBreakdown>& pano, const std::vector<LossBreakdown>& pp) {
  LossBreakdown out;
  for (const auto& b : pano) {
    out.l_pano += b.l_pano;
    out.l_d += b.l_d;
    out.l_n += b.l_n;
    out.l_g += b.l_g;
  }
  for (const auto& b : pp) out.l_pp += b.l_pp;
  double lb = 0;
  for (const auto& b : pano) lb += b.l_b;
  for (const auto& b : pp) lb += b.l_b;
  if (!pano.empty()) {
    const double k = 1.0 / pano.size();
    out.l_pano *= k, out.l_d *= k, out.l_n *= k, out.l_g *= k;
  }
  if (!pp.empty()) out.l_pp /= pp.size();
  if (!pano.empty() || !pp.empty()) out.l_b = lb / (pano.size() + pp.size());
  out.l_total = out.l_pano + out.l_pp;
  return out;
}

}  // namespace roomlayout
